"""Monte-Carlo estimators for duality functionals and Poissonization relations.

Each relation under test is cast as a pair of estimators whose difference is
zero in law; the pair is reported with standard errors and the z-score of
the difference. Crossing 3 sigma (Bonferroni-adjusted when a scenario runs
several comparisons) flags a failure. For jump models on small lattices the
exact value from uniformization is available as a third reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .exact import GeneratorMatrix, StateSpace, build_generator, evolve_distribution, psi_matrix
from .gillespie import batch_final_states
from .kernels import Kernel
from .models import BpsParams, Config, JumpModel, SsmParams, Variant, bps_model
from .rng import Seed, make_rng
from .sde import ssm_batch


def z_threshold(n_comparisons: int, base: float = 3.0) -> float:
    """Per-comparison |z| threshold holding the family-wise level of a base-sigma test."""
    if n_comparisons <= 1:
        return base
    tail = stats.norm.sf(base)
    return float(stats.norm.isf(tail / n_comparisons))


@dataclass(frozen=True)
class EstimatorPair:
    """Two estimators of the same quantity with the z-score of their difference."""

    lhs_mean: float
    lhs_stderr: float
    rhs_mean: float
    rhs_stderr: float
    n_samples: int
    label: str = ""

    @property
    def z_score(self) -> float:
        se = math.hypot(self.lhs_stderr, self.rhs_stderr)
        diff = abs(self.lhs_mean - self.rhs_mean)
        if se == 0.0:
            return 0.0 if diff == 0.0 else math.inf
        return diff / se

    def passes(self, z_max: float = 3.0) -> bool:
        return self.z_score < z_max


def _mean_se(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    n = len(values)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


def psi_eta_values(states: np.ndarray, other: Sequence[int], eta: float) -> np.ndarray:
    """eta^{sum_i x(i) y(i)} for each row x of ``states`` against a fixed y."""
    k = states @ np.asarray(other, dtype=np.int64)
    eta = float(eta)
    if eta == 0.0:
        return (k == 0).astype(float)
    sign = np.where((k % 2 == 1) & (eta < 0), -1.0, 1.0)
    return sign * np.abs(eta) ** k


def estimate_duality_functional(
    model_a: JumpModel,
    model_b: JumpModel,
    q: Kernel,
    x0: Config,
    y0: Config,
    eta: float,
    t: float,
    n_samples: int,
    seed: Union[Seed, int],
) -> EstimatorPair:
    """Both sides of E[psi_eta(X_t, y0)] = E[psi_eta(x0, Y_t)] by simulation.

    X runs model_a from x0 (paired with the frozen y0), Y runs model_b from
    y0 (paired with the frozen x0). |eta| > 1 is fine on finite lattices.
    """
    base = seed.seed if isinstance(seed, Seed) else int(seed)
    xs = batch_final_states(model_a, q, x0, t, n_samples, Seed(base, 1))
    ys = batch_final_states(model_b, q, y0, t, n_samples, Seed(base, 2))
    lhs = psi_eta_values(xs, y0.values, eta)
    rhs = psi_eta_values(ys, x0.values, eta)
    lm, ls = _mean_se(lhs)
    rm, rs = _mean_se(rhs)
    return EstimatorPair(lm, ls, rm, rs, n_samples, label=f"duality eta={eta}")


def exact_duality_value(
    model: JumpModel, q: Kernel, x0: Config, y0: Config, eta: float,
    t: float, space: StateSpace,
) -> float:
    """E[psi_eta(X_t, y0)] from the uniformized semigroup (float mode)."""
    G = build_generator(model, q, space, mode="float")
    mu0 = np.zeros(space.size)
    mu0[space.index_of(x0.values)] = 1.0
    mu_t, _ = evolve_distribution(G, mu0, t)
    states = np.array([space.values_of(i) for i in range(space.size)], dtype=np.int64)
    return float(mu_t @ psi_eta_values(states, y0.values, eta))


# ---------------------------------------------------------------------------
# Poissonization and particle-thinning checks
# ---------------------------------------------------------------------------


def bps_dual_of_ssm(p: SsmParams, eps: float) -> BpsParams:
    """The particle system dual to the stepping stone model at annihilation level eps."""
    share = (eps / (1 + eps)) * p.s
    if p.m < share:
        raise ValueError(f"needs m >= (eps/(1+eps))*s: {p.m} < {share}")
    return BpsParams(eps * p.r, p.s / (1 + eps), (1 - eps) * p.r, p.m - share)


@dataclass
class PoissonizationReport:
    """Moment/zero-probability comparisons of the particle run against Pois(w * X_t)."""

    weight: float
    weight_label: str
    comparisons: List[EstimatorPair]
    clamp_fraction: float

    def max_z(self) -> float:
        return max(c.z_score for c in self.comparisons)

    def passes(self, z_max: float = 3.0) -> bool:
        return all(c.passes(z_max) for c in self.comparisons)


def poissonization_check(
    p: SsmParams,
    eps: float,
    x0: Sequence[float],
    t: float,
    n_samples: int,
    seed: Union[Seed, int],
    weight: float,
    weight_label: str = "",
    q: Optional[Kernel] = None,
    dt: float = 2.5e-4,
) -> PoissonizationReport:
    """Couple Y_0 = Pois(w * x0), run the particle system and the diffusion,
    and compare E[Y_t], E[Y_t^2], P[Y_t = 0] against the Pois(w * X_t) mixture.

    Sites are compared jointly (totals) so one report carries three
    comparisons regardless of lattice size.
    """
    base = seed.seed if isinstance(seed, Seed) else int(seed)
    x0 = np.asarray(x0, dtype=float)
    n_sites = len(x0)
    dual = bps_dual_of_ssm(p, eps)
    kern = q if q is not None else _isolated_kernel(n_sites)

    rng_init = make_rng(base, 11)
    y0_batch = rng_init.poisson(weight * x0, size=(n_samples, n_sites))
    ys = batch_final_states(
        bps_model(dual), kern, Config.count((0,) * n_sites), t, n_samples,
        Seed(base, 12), x0_batch=y0_batch,
    )
    sde = ssm_batch(p, q, np.tile(x0, (n_samples, 1)), t, n_samples, Seed(base, 13), dt=dt)
    X = sde.final

    y_tot = ys.sum(axis=1).astype(float)
    wx_tot = (weight * X).sum(axis=1)

    mean_pair = EstimatorPair(*_mean_se(y_tot), *_mean_se(wx_tot), n_samples, "mean")
    # E[N^2] for N ~ Pois(lam) is lam^2 + lam, and site independence gives the cross terms
    wx2 = wx_tot ** 2 + (weight * X).sum(axis=1)
    m2_pair = EstimatorPair(*_mean_se(y_tot ** 2), *_mean_se(wx2), n_samples, "second moment")
    zero_pair = EstimatorPair(
        *_mean_se((ys.sum(axis=1) == 0).astype(float)),
        *_mean_se(np.exp(-(weight * X).sum(axis=1))),
        n_samples, "zero probability",
    )
    return PoissonizationReport(weight, weight_label, [mean_pair, m2_pair, zero_pair],
                                sde.clamp_fraction)


def _isolated_kernel(n_sites: int) -> Kernel:
    return Kernel(n_sites, {}, symmetric=True, unit_rows=False)


def bps_thinning_check(
    p: SsmParams,
    eps_low: float,
    eps_high: float,
    y_intensity: Sequence[float],
    t: float,
    n_samples: int,
    seed: Union[Seed, int],
    q: Optional[Kernel] = None,
) -> List[EstimatorPair]:
    """Thinning the low-annihilation particle system down by (1+eps)/(1+eps')
    matches the high-annihilation one: first two moments of totals compared.

    Both systems start from Poisson fields whose intensities already differ
    by the thinning factor, matching how the relation couples initial laws.
    """
    if not (0 <= eps_low <= eps_high <= 1):
        raise ValueError("need 0 <= eps <= eps' <= 1")
    base = seed.seed if isinstance(seed, Seed) else int(seed)
    v = (1 + eps_low) / (1 + eps_high)
    y = np.asarray(y_intensity, dtype=float)
    n_sites = len(y)
    kern = q if q is not None else _isolated_kernel(n_sites)

    rng = make_rng(base, 21)
    low0 = rng.poisson(y, size=(n_samples, n_sites))
    low_t = batch_final_states(
        bps_model(bps_dual_of_ssm(p, eps_low)), kern, Config.count((0,) * n_sites),
        t, n_samples, Seed(base, 22), x0_batch=low0,
    )
    thinned = make_rng(base, 23).binomial(low_t, v)

    high0 = make_rng(base, 24).poisson(v * y, size=(n_samples, n_sites))
    high_t = batch_final_states(
        bps_model(bps_dual_of_ssm(p, eps_high)), kern, Config.count((0,) * n_sites),
        t, n_samples, Seed(base, 25), x0_batch=high0,
    )

    a = thinned.sum(axis=1).astype(float)
    b = high_t.sum(axis=1).astype(float)
    return [
        EstimatorPair(*_mean_se(a), *_mean_se(b), n_samples, "thinned mean"),
        EstimatorPair(*_mean_se(a ** 2), *_mean_se(b ** 2), n_samples, "thinned second moment"),
    ]


# ---------------------------------------------------------------------------
# Two-sample Kolmogorov-Smirnov machinery
# ---------------------------------------------------------------------------


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    grid = np.concatenate([a, b])
    grid.sort(kind="mergesort")
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


def ks_with_bootstrap_sigma(
    a: np.ndarray, b: np.ndarray, n_boot: int = 60, seed: Union[Seed, int] = 0
) -> Tuple[float, float]:
    """KS statistic plus a bootstrap estimate of its sampling sigma."""
    rng = make_rng(seed.seed if isinstance(seed, Seed) else int(seed), 31)
    stat = ks_statistic(a, b)
    reps = np.empty(n_boot)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for k in range(n_boot):
        ra = a[rng.integers(0, len(a), len(a))]
        rb = b[rng.integers(0, len(b), len(b))]
        reps[k] = ks_statistic(ra, rb)
    return stat, float(reps.std(ddof=1))


def empirical_law_ks(states: np.ndarray, exact_law: np.ndarray, space: StateSpace) -> float:
    """KS distance between replica states and an exact law over an enumerated space."""
    from .gillespie import empirical_distribution

    emp = empirical_distribution(states, space)
    return float(np.abs(np.cumsum(emp) - np.cumsum(exact_law)).max())
