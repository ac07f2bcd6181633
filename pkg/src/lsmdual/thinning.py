"""Thinning and Poissonization of particle configurations.

Thinning keeps each particle at site i independently with probability u(i).
Particles at a site are exchangeable, so the fast path draws one binomial
per site; a per-particle path (one uniform per particle, shared across
retention levels) exists for monotone-coupling checks. The moment identity
E[(1-theta)^{Thin_u(x)}] = (1-theta*u)^x holds for every real theta and is
evaluated in closed form so that negative theta needs no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .models import Config, Variant
from .numeric import Scalar, as_fraction
from .rng import Seed, make_rng


@dataclass(frozen=True)
class ThinningProfile:
    """Per-site retention probabilities; a scalar broadcasts to every site."""

    u: Union[float, Tuple[float, ...]]

    def per_site(self, n_sites: int) -> Tuple[float, ...]:
        if isinstance(self.u, (tuple, list)):
            if len(self.u) != n_sites:
                raise ValueError("retention profile length mismatch")
            probs = tuple(float(v) for v in self.u)
        else:
            probs = (float(self.u),) * n_sites
        if any(not (0 <= p <= 1) for p in probs):
            raise ValueError("retention probabilities must lie in [0,1]")
        return probs


def _as_profile(u) -> ThinningProfile:
    if isinstance(u, ThinningProfile):
        return u
    return ThinningProfile(u if np.isscalar(u) else tuple(u))


def thin(x: Config, u, seed: Union[Seed, np.random.Generator, int]) -> Config:
    """Independently keep each particle of ``x`` with its site's retention probability.

    Spin input returns spin output; counting input returns counts.
    """
    probs = _as_profile(u).per_site(x.n_sites)
    rng = _rng_of(seed)
    kept = tuple(int(rng.binomial(int(n), p)) for n, p in zip(x.values, probs))
    if x.variant is Variant.SPIN:
        return Config.spin(kept)
    if x.variant is Variant.COUNT:
        return Config.count(kept)
    raise ValueError("thinning applies to particle configurations only")


def thin_per_particle(
    x: Config, u, seed: Union[Seed, np.random.Generator, int]
) -> Config:
    """Per-particle coin path: one uniform per particle, retained iff below u(i).

    With common random numbers this couples monotonically in u: raising any
    retention probability can only keep more particles.
    """
    probs = _as_profile(u).per_site(x.n_sites)
    rng = _rng_of(seed)
    kept = []
    for n, p in zip(x.values, probs):
        coins = rng.random(int(n))
        kept.append(int(np.count_nonzero(coins < p)))
    if x.variant is Variant.SPIN:
        return Config.spin(kept)
    return Config.count(kept)


def poisson_field(intensity: Sequence[float], seed) -> Config:
    """Independent Poisson counts with the given per-site intensities."""
    y = np.asarray(intensity, dtype=float)
    if (y < 0).any():
        raise ValueError("intensities must be nonnegative")
    rng = _rng_of(seed)
    return Config.count(tuple(int(v) for v in rng.poisson(y)))


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    return make_rng(int(seed))


# ---------------------------------------------------------------------------
# Closed-form identities
# ---------------------------------------------------------------------------


def thin_generating_check(x: Config, theta: Scalar, theta_p: Scalar) -> Tuple[Scalar, Scalar]:
    """Both sides of E[(1-theta)^{Thin_{theta'}(x)}] = (1-theta*theta')^x.

    The left side is expanded site by site through the binomial theorem, so
    the comparison is exact for rational inputs and works for any real theta
    (the expectation need not be a probability). theta' must lie in [0,1].
    """
    if x.variant not in (Variant.SPIN, Variant.COUNT):
        raise ValueError("particle configuration required")
    exact = all(isinstance(v, (int, Fraction)) for v in (theta, theta_p))
    conv = as_fraction if exact else float
    th, tp = conv(theta), conv(theta_p)
    if not (0 <= tp <= 1):
        raise ValueError("retention probability theta' must lie in [0,1]")
    one = conv(1)
    lhs = one
    for n in x.values:
        site = sum(
            comb(n, k) * tp ** k * (one - tp) ** (n - k) * (one - th) ** k
            for k in range(n + 1)
        )
        lhs = lhs * site
    rhs = one
    for n in x.values:
        rhs = rhs * (one - th * tp) ** n
    return lhs, rhs


def _binomial_pmf(n: int, p: Scalar) -> Dict[int, Scalar]:
    one = as_fraction(1) if isinstance(p, (int, Fraction)) else 1.0
    return {k: comb(n, k) * p ** k * (one - p) ** (n - k) for k in range(n + 1)}


def _compose_pmf(pmf: Dict[int, Scalar], v: Scalar) -> Dict[int, Scalar]:
    out: Dict[int, Scalar] = {}
    for n, w in pmf.items():
        for k, wk in _binomial_pmf(n, v).items():
            out[k] = out.get(k, 0) + w * wk
    return out


@dataclass(frozen=True)
class CompositionReport:
    """Exact per-site law comparison of Thin_v(Thin_u(x)) against Thin_{vu}(x)."""

    exact_equal: bool
    max_pmf_gap: float
    sampled_stat: Optional[float] = None
    sampled_pvalue: Optional[float] = None
    n_samples: int = 0

    def rejects(self, level: float = 0.01) -> bool:
        return self.sampled_pvalue is not None and self.sampled_pvalue < level


def thin_composition_check(
    x: Config,
    u,
    v,
    n_samples: int = 0,
    seed: Optional[Union[Seed, int]] = None,
) -> CompositionReport:
    """Compare the two-stage thinning law with the single product-thinning law.

    The closed-form branch convolves the per-site binomials on both sides
    (exact in rationals when u, v are rational). With ``n_samples`` > 0 a
    two-sample chi-square homogeneity test on the sampled joint counts is
    added.
    """
    up = _as_profile(u).per_site(x.n_sites)
    vp = _as_profile(v).per_site(x.n_sites)
    max_gap = 0.0
    equal = True
    for n, pu, pv in zip(x.values, up, vp):
        pu_e, pv_e = as_fraction(pu), as_fraction(pv)
        two_stage = _compose_pmf(_binomial_pmf(n, pu_e), pv_e)
        direct = _binomial_pmf(n, pv_e * pu_e)
        keys = set(two_stage) | set(direct)
        for k in keys:
            gap = two_stage.get(k, 0) - direct.get(k, 0)
            if gap != 0:
                equal = False
                max_gap = max(max_gap, abs(float(gap)))
    stat = pvalue = None
    if n_samples:
        rng = _rng_of(seed if seed is not None else 0)
        uu = ThinningProfile(up)
        vv = ThinningProfile(vp)
        uv = ThinningProfile(tuple(a * b for a, b in zip(up, vp)))
        counts: Dict[tuple, list] = {}
        for side, sampler in enumerate(
            (
                lambda: thin(thin(x, uu, rng), vv, rng).values,
                lambda: thin(x, uv, rng).values,
            )
        ):
            for _ in range(n_samples):
                key = sampler()
                counts.setdefault(key, [0, 0])[side] += 1
        table = np.array([[a, b] for a, b in counts.values()])
        if table.shape[0] > 1:
            stat, pvalue = stats.chi2_contingency(table.T)[:2]
            stat, pvalue = float(stat), float(pvalue)
        else:
            stat, pvalue = 0.0, 1.0
    return CompositionReport(equal, max_gap, stat, pvalue, n_samples)


def thinned_mean(x: Config, u) -> Tuple[float, ...]:
    """E[Thin_u(x)](i) = u(i) x(i), the closed-form first moment."""
    probs = _as_profile(u).per_site(x.n_sites)
    return tuple(p * n for p, n in zip(probs, x.values))
