"""Local mean-field limits: colony constructions and convergence experiments.

Each base site becomes a colony of N exchangeable members; within-colony
interaction dominates and suitable rate scalings turn colony fractions into
stepping-stone diffusions (resampling-dominated scaling), colony particle
counts into branching particle systems, and rescaled contact processes into
super random walks.

Exchangeability makes the vector of colony counts itself Markov, so the
experiments simulate the lumped count chain: exact in law (proven against
the full spin generator in the tests) and fast enough for N in the
thousands. Both experiments return convergence tables; nothing here decides
the noise-convention question — the variance measurement reports which
candidate the data selects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .estimators import (
    EstimatorPair,
    _mean_se,
    ks_with_bootstrap_sigma,
)
from .gillespie import batch_final_states
from .kernels import Kernel
from .models import (
    Channel,
    Config,
    CvpParams,
    NoiseConvention,
    RwParams,
    SrwParams,
    SsmParams,
    OCC,
    VAC,
    PAIRS,
    ONE,
)
from .rng import Seed, make_rng
from .sde import srw_batch, ssm_batch


# ---------------------------------------------------------------------------
# Scalings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CvpLimitScaling:
    """Resampling-dominated scaling: nu = 1/(r N), r_N = r N."""

    N: int
    r: float

    def __post_init__(self):
        if self.N < 2 or self.r <= 0:
            raise ValueError("need N >= 2 and r > 0")

    @property
    def nu(self) -> float:
        return 1.0 / (self.r * self.N)

    @property
    def r_N(self) -> float:
        return self.r * self.N


@dataclass(frozen=True)
class SrwLimitScaling:
    """Contact-process scaling: s_N = sqrt(alpha gamma N), m_N = s_N - beta.

    nu = 1/s_N calibrates cross-colony migration; an isolated colony has no
    cross-colony channel, so there nu is 0 and the factor (1-nu) does not
    distort the limit drift.
    """

    N: int
    alpha: float
    beta: float
    gamma: float
    single_colony: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2")
        if self.m_N < 0:
            raise ValueError("need beta <= s_N, i.e. N large enough")

    @property
    def s_N(self) -> float:
        return math.sqrt(self.alpha * self.gamma * self.N)

    @property
    def nu(self) -> float:
        return 0.0 if self.single_colony else 1.0 / self.s_N

    @property
    def m_N(self) -> float:
        return self.s_N - self.beta

    @property
    def phi(self) -> float:
        return math.sqrt(self.alpha / self.gamma)


# ---------------------------------------------------------------------------
# Lumped colony-count chains
# ---------------------------------------------------------------------------


def _colony_geometry(base_q: Optional[Kernel], N: int, nu: float):
    n_col = 1 if base_q is None else base_q.n_sites
    qw = (1.0 - nu) / (N - 1)
    cross = []
    if base_q is not None and nu > 0:
        for i, j, w in base_q.pairs():
            cross.append((i, j, nu * float(w) / N))
    return n_col, qw, cross


def colony_cvp_channels(
    p: CvpParams, base_q: Optional[Kernel], N: int, nu: float
) -> List[Channel]:
    """Colony-count transitions of the contact-voter process on the colony kernel.

    State: occupied-member counts per colony, capped at N. Within-colony
    pair rate (1-nu)/(N-1), cross-colony (nu/N) q(i,j).
    """
    n_col, qw, cross = _colony_geometry(base_q, N, nu)
    r, s, m = float(p.r), float(p.s), float(p.m)
    out: List[Channel] = []
    for i in range(n_col):
        if (r + s) and qw:
            out.append(Channel(qw * (r + s), i, OCC, i, VAC, ((i, +1),), room_cap=N))
        if r and qw:
            out.append(Channel(qw * r, i, VAC, i, OCC, ((i, -1),), room_cap=N))
        if m:
            out.append(Channel(m, i, OCC, None, ONE, ((i, -1),), room_cap=N))
    for i, j, w in cross:
        if r + s:
            out.append(Channel(w * (r + s), i, OCC, j, VAC, ((j, +1),), room_cap=N))
        if r:
            out.append(Channel(w * r, i, VAC, j, OCC, ((j, -1),), room_cap=N))
    return out


def colony_rw_channels(
    p: RwParams, base_q: Optional[Kernel], N: int, nu: float
) -> List[Channel]:
    """Colony-count transitions of the walk system on the colony kernel.

    Within-colony walks onto empty members keep the count and are dropped as
    no-ops; everything else follows the walk/branch/annihilate/coalesce
    bookkeeping.
    """
    n_col, qw, cross = _colony_geometry(base_q, N, nu)
    eps, rho, beta, delta = (float(getattr(p, k)) for k in ("eps", "rho", "beta", "delta"))
    out: List[Channel] = []
    for i in range(n_col):
        if rho and eps and qw:
            out.append(Channel(qw * rho * eps, i, PAIRS, None, ONE, ((i, -2),), room_cap=N))
        if rho and (1 - eps) and qw:
            out.append(Channel(qw * rho * (1 - eps), i, PAIRS, None, ONE, ((i, -1),), room_cap=N))
        if beta and qw:
            out.append(Channel(qw * beta, i, OCC, i, VAC, ((i, +1),), room_cap=N))
            if eps:
                out.append(Channel(qw * beta * eps, i, PAIRS, None, ONE, ((i, -1),), room_cap=N))
        if delta:
            out.append(Channel(delta, i, OCC, None, ONE, ((i, -1),), room_cap=N))
    for i, j, w in cross:
        if rho:
            out.append(Channel(w * rho, i, OCC, j, VAC, ((i, -1), (j, +1)), room_cap=N))
            if eps:
                out.append(Channel(w * rho * eps, i, OCC, j, OCC, ((i, -1), (j, -1)), room_cap=N))
            if 1 - eps:
                out.append(Channel(w * rho * (1 - eps), i, OCC, j, OCC, ((i, -1),), room_cap=N))
        if beta:
            out.append(Channel(w * beta, i, OCC, j, VAC, ((j, +1),), room_cap=N))
            if eps:
                out.append(Channel(w * beta * eps, i, OCC, j, OCC, ((j, -1),), room_cap=N))
    return out


def rw_dual_params(r_eff: float, s: float, m: float, eps: float) -> RwParams:
    """Walk parameters dual to a contact-voter process with resampling r_eff."""
    share = (eps / (1 + eps)) * s
    if m < share:
        raise ValueError("needs m >= (eps/(1+eps))*s")
    return RwParams(eps, r_eff + share, s / (1 + eps), m - share)


# ---------------------------------------------------------------------------
# Stepping stone / branching particle limit experiment
# ---------------------------------------------------------------------------


@dataclass
class CvRow:
    N: int
    ks: float
    ks_sigma: float
    bps_mean: Optional[EstimatorPair] = None
    bps_m2: Optional[EstimatorPair] = None


@dataclass
class CvExperimentReport:
    rows: List[CvRow]
    t: float
    n_samples: int
    params: Dict
    notes: List[str] = field(default_factory=list)

    def ks_decreasing(self, n_sigma: float = 2.0) -> bool:
        ok = True
        for a, b in zip(self.rows, self.rows[1:]):
            band = n_sigma * math.hypot(a.ks_sigma, b.ks_sigma)
            ok = ok and (b.ks < a.ks - band)
        return ok


def meanfield_cv_experiment(
    p: SsmParams,
    N_list: Sequence[int],
    t: float,
    n_samples: int,
    seed: Union[Seed, int],
    x0: float = 0.5,
    eps: float = 0.0,
    y0: float = 1.0,
    base_q: Optional[Kernel] = None,
    dt: float = 5e-4,
    branches: Sequence[str] = ("ssm", "bps"),
    ssm_initial: str = "deterministic",
    colony_index: int = 0,
) -> CvExperimentReport:
    """Convergence of colony fractions to the stepping stone model and of
    colony particle counts to the branching particle system.

    For each N the contact-voter process runs on the colony construction at
    the resampling-dominated scaling with i.i.d. Bernoulli(x0) initial
    members; the colony fraction at time t is compared against the diffusion
    by Kolmogorov-Smirnov distance (with a bootstrap noise band). With the
    "bps" branch, the dual walk system's colony counts (members i.i.d.
    Bernoulli(y0/N)) are compared in first and second moment against the
    limit particle system started from Poisson(y0).
    """
    if p.r <= 0:
        raise ValueError("the resampling-dominated scaling needs r > 0")
    base = seed.seed if isinstance(seed, Seed) else int(seed)
    n_col = 1 if base_q is None else base_q.n_sites
    rows: List[CvRow] = []
    notes: List[str] = []

    ssm_final = None
    if "ssm" in branches and ssm_initial == "deterministic":
        sde = ssm_batch(p, base_q, np.full((n_samples, n_col), x0), t, n_samples,
                        Seed(base, 101), dt=dt)
        ssm_final = sde.final[:, colony_index]
        if sde.clamp_fraction > 0.01:
            notes.append(f"ssm clamp fraction {sde.clamp_fraction:.3%} exceeds 1%")

    for k, N in enumerate(N_list):
        scal = CvpLimitScaling(N, p.r)
        row = CvRow(N, math.nan, math.nan)
        if "ssm" in branches:
            chans = colony_cvp_channels(
                CvpParams(scal.r_N, p.s, p.m), base_q, N, scal.nu
            )
            init = make_rng(base, 200 + k).binomial(N, x0, size=(n_samples, n_col))
            counts = batch_final_states(
                chans, None, Config.count((0,) * n_col), t, n_samples,
                Seed(base, 300 + k), x0_batch=init,
            )
            xbar = counts[:, colony_index] / N
            ref = ssm_final
            if ssm_initial == "binomial_match":
                x0_match = make_rng(base, 400 + k).binomial(N, x0, size=(n_samples, n_col)) / N
                ref = ssm_batch(p, base_q, x0_match, t, n_samples,
                                Seed(base, 500 + k), dt=dt).final[:, colony_index]
            row.ks, row.ks_sigma = ks_with_bootstrap_sigma(xbar, ref, seed=Seed(base, 600 + k))
        if "bps" in branches:
            from .estimators import bps_dual_of_ssm
            from .models import bps_model

            rw = rw_dual_params(scal.r_N, p.s, p.m, eps)
            chans = colony_rw_channels(rw, base_q, N, scal.nu)
            init = make_rng(base, 700 + k).binomial(N, min(1.0, y0 / N), size=(n_samples, n_col))
            counts = batch_final_states(
                chans, None, Config.count((0,) * n_col), t, n_samples,
                Seed(base, 800 + k), x0_batch=init,
            )
            ybar = counts[:, colony_index].astype(float)

            limit = bps_dual_of_ssm(p, eps)
            init_bps = make_rng(base, 900).poisson(y0, size=(n_samples, n_col))
            kern = base_q if base_q is not None else _isolated(n_col)
            bps_final = batch_final_states(
                bps_model(limit), kern, Config.count((0,) * n_col), t, n_samples,
                Seed(base, 901), x0_batch=init_bps,
            )[:, colony_index].astype(float)
            row.bps_mean = EstimatorPair(*_mean_se(ybar), *_mean_se(bps_final),
                                         n_samples, f"N={N} count mean")
            row.bps_m2 = EstimatorPair(*_mean_se(ybar ** 2), *_mean_se(bps_final ** 2),
                                       n_samples, f"N={N} count second moment")
        rows.append(row)
    return CvExperimentReport(rows, t, n_samples,
                              {"r": p.r, "s": p.s, "m": p.m, "eps": eps, "x0": x0, "y0": y0},
                              notes)


def _isolated(n_sites: int) -> Kernel:
    return Kernel(n_sites, {}, symmetric=True, unit_rows=False)


# ---------------------------------------------------------------------------
# Super random walk limit experiment
# ---------------------------------------------------------------------------


@dataclass
class SrwRow:
    N: int
    z0_eff: float
    var_rate: float
    var_rate_se: float
    drift_rate: float
    drift_rate_se: float
    z_against_alpha: float
    z_against_two_alpha: float
    ks_sqrt_alpha: Optional[float] = None
    ks_sqrt_two_alpha: Optional[float] = None


@dataclass
class SrwExperimentReport:
    rows: List[SrwRow]
    favored: str                  # "sqrt_alpha" or "sqrt_two_alpha" from the variance test
    competitor_min_z: float       # smallest rejection z of the losing candidate across N
    t_var: float
    params: Dict
    notes: List[str] = field(default_factory=list)

    def competitor_rejected(self, n_sigma: float = 5.0) -> bool:
        return self.competitor_min_z > n_sigma


def meanfield_srw_experiment(
    p: SrwParams,
    N_list: Sequence[int],
    t: float,
    n_samples: int,
    seed: Union[Seed, int],
    z0: float = 1.0,
    base_q: Optional[Kernel] = None,
    t_var: float = 0.02,
    n_var_samples: Optional[int] = None,
    dt: float = 5e-4,
    ks_comparison: bool = True,
) -> SrwExperimentReport:
    """Rescaled contact processes against the super random walk.

    Two measurements per N: (i) the small-time variance rate of the rescaled
    colony mass, tested against the candidates alpha*z and 2*alpha*z — this
    adjudicates the noise convention; (ii) optionally the KS distance of the
    time-t law against the SDE under each convention. The drift rate is
    measured alongside and compared with beta*z - gamma*z^2 + migration.
    """
    base = seed.seed if isinstance(seed, Seed) else int(seed)
    n_col = 1 if base_q is None else base_q.n_sites
    single = base_q is None
    nv = n_var_samples if n_var_samples is not None else n_samples
    rows: List[SrwRow] = []
    notes: List[str] = []
    alpha, beta, gamma = p.alpha, p.beta, p.gamma

    sde_finals = {}
    if ks_comparison:
        for conv in NoiseConvention:
            pp = SrwParams(alpha, beta, gamma, conv)
            sde_finals[conv] = srw_batch(
                pp, base_q, np.full((n_samples, n_col), z0), t, n_samples,
                Seed(base, 150 + (0 if conv is NoiseConvention.SQRT_ALPHA else 1)), dt=dt,
            ).final[:, 0]

    votes = {"sqrt_alpha": 0, "sqrt_two_alpha": 0}
    competitor_zs: List[float] = []
    for k, N in enumerate(N_list):
        scal = SrwLimitScaling(N, alpha, beta, gamma, single_colony=single)
        phi = scal.phi
        k0 = max(1, round(z0 * math.sqrt(N) / phi))
        if k0 > N:
            raise ValueError(f"z0 too large for N={N}")
        z0_eff = phi * k0 / math.sqrt(N)
        chans = colony_cvp_channels(CvpParams(0.0, scal.s_N, scal.m_N), base_q, N, scal.nu)
        init = np.full((nv, n_col), 0, dtype=np.int64)
        init[:, 0] = k0
        counts = batch_final_states(
            chans, None, Config.count((0,) * n_col), t_var, nv,
            Seed(base, 160 + k), x0_batch=init,
        )
        xbar = phi * counts[:, 0] / math.sqrt(N)
        centered = xbar - xbar.mean()
        var_rate = float(centered.var(ddof=1)) / t_var
        m2 = float((centered ** 2).mean())
        m4 = float((centered ** 4).mean())
        var_se = math.sqrt(max(m4 - m2 ** 2, 0.0) / nv) / t_var
        drift_rate = float((xbar - z0_eff).mean()) / t_var
        drift_se = float((xbar - z0_eff).std(ddof=1) / math.sqrt(nv)) / t_var

        za = abs(var_rate - alpha * z0_eff) / var_se
        z2a = abs(var_rate - 2 * alpha * z0_eff) / var_se
        row = SrwRow(N, z0_eff, var_rate, var_se, drift_rate, drift_se, za, z2a)
        votes["sqrt_alpha" if za < z2a else "sqrt_two_alpha"] += 1
        competitor_zs.append(max(za, z2a))

        if ks_comparison:
            init_t = np.full((n_samples, n_col), 0, dtype=np.int64)
            init_t[:, 0] = k0
            counts_t = batch_final_states(
                chans, None, Config.count((0,) * n_col), t, n_samples,
                Seed(base, 170 + k), x0_batch=init_t,
            )
            xbar_t = phi * counts_t[:, 0] / math.sqrt(N)
            from .estimators import ks_statistic

            row.ks_sqrt_alpha = ks_statistic(xbar_t, sde_finals[NoiseConvention.SQRT_ALPHA])
            row.ks_sqrt_two_alpha = ks_statistic(xbar_t, sde_finals[NoiseConvention.SQRT_TWO_ALPHA])
        rows.append(row)

    favored = max(votes, key=votes.get)
    notes.append(
        f"variance-rate test favors {favored} "
        f"(duality constant {'2*gamma/alpha' if favored == 'sqrt_alpha' else 'gamma/alpha'})"
    )
    expected_drift = beta * z0 - gamma * z0 ** 2
    notes.append(f"limit drift at z0={z0}: beta*z0 - gamma*z0^2 = {expected_drift}")
    return SrwExperimentReport(rows, favored, min(competitor_zs), t_var,
                               {"alpha": alpha, "beta": beta, "gamma": gamma, "z0": z0},
                               notes)
