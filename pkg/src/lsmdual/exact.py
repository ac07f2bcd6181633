"""Exact engine: explicit generators on small state spaces and matrix identities.

Duality of two models with the product duality function is equivalent to the
matrix identity G @ Psi == Psi @ G'^T, and a thinning relation to the
intertwining G2 @ T_v == T_v @ G1. Both are evaluated here, either in double
precision or exactly: in rational mode all rates are Fractions, denominators
are cleared by a common lcm and the eta powers by q^Kmax, after which the
residual matrix is integer-valued and "gap == 0" is arithmetic fact. The
integer products run through int64 numpy when an a-priori bound certifies no
overflow, and through Python big-ints otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .duality import DualPairReport, dual_rates, dual_rates_general
from .kernels import Kernel
from .models import Config, GeneralLsmRates, JumpModel, LsmRates, Variant, lsm_model
from .numeric import Scalar, as_fraction, check_mode, denominator_lcm

INT64_SAFE = 2 ** 62


# ---------------------------------------------------------------------------
# State spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateSpace:
    """Enumerated spin or capped counting configurations.

    Lexicographic order with site 0 most significant: spin states are read as
    binary numbers, counting states as base-(cap+1) numbers.
    """

    variant: Variant
    n_sites: int
    cap: Optional[int] = None

    def __post_init__(self):
        if self.variant is Variant.SPIN:
            if self.cap is not None:
                raise ValueError("spin spaces take no cap")
        elif self.variant is Variant.COUNT:
            if self.cap is None or self.cap < 1:
                raise ValueError("count spaces need cap >= 1")
        else:
            raise ValueError("state spaces exist for SPIN and COUNT variants only")
        if self.n_sites < 1:
            raise ValueError("need at least one site")

    @property
    def base(self) -> int:
        return 2 if self.variant is Variant.SPIN else self.cap + 1

    @property
    def size(self) -> int:
        return self.base ** self.n_sites

    def values_of(self, index: int) -> Tuple[int, ...]:
        if not (0 <= index < self.size):
            raise IndexError(index)
        out = []
        for _ in range(self.n_sites):
            out.append(index % self.base)
            index //= self.base
        return tuple(reversed(out))

    def index_of(self, values: Sequence[int]) -> int:
        if len(values) != self.n_sites:
            raise ValueError("site count mismatch")
        idx = 0
        for v in values:
            if not (0 <= v < self.base):
                raise ValueError(f"value {v} outside the space")
            idx = idx * self.base + v
        return idx

    def states(self) -> Iterable[Tuple[int, ...]]:
        for idx in range(self.size):
            yield self.values_of(idx)

    def config(self, index: int) -> Config:
        vals = self.values_of(index)
        if self.variant is Variant.SPIN:
            return Config.spin(vals)
        return Config.count(vals)

    def interior_mask(self) -> np.ndarray:
        """Rows whose one-step neighborhood provably stays inside the space.

        For spin spaces that is everything; for count spaces, states with any
        site at cap-1 or cap are excluded (jumps move at most two particles).
        """
        if self.variant is Variant.SPIN:
            return np.ones(self.size, dtype=bool)
        mask = np.empty(self.size, dtype=bool)
        for idx in range(self.size):
            mask[idx] = all(v <= self.cap - 2 for v in self.values_of(idx))
        return mask


def spin_space(n_sites: int) -> StateSpace:
    return StateSpace(Variant.SPIN, n_sites)


def count_space(n_sites: int, cap: int) -> StateSpace:
    return StateSpace(Variant.COUNT, n_sites, cap)


# ---------------------------------------------------------------------------
# Generator matrices
# ---------------------------------------------------------------------------


@dataclass
class GeneratorMatrix:
    """Sparse Q-matrix: off-diagonal transition rates per row plus diagonal."""

    space: StateSpace
    rows: List[dict]
    diag: List[Scalar]
    mode: str
    truncated_rows: frozenset = frozenset()

    @property
    def size(self) -> int:
        return self.space.size

    def entry(self, i: int, j: int) -> Scalar:
        if i == j:
            return self.diag[i]
        return self.rows[i].get(j, 0)

    def to_dense_float(self) -> np.ndarray:
        A = np.zeros((self.size, self.size))
        for i, row in enumerate(self.rows):
            for j, v in row.items():
                A[i, j] = float(v)
            A[i, i] = float(self.diag[i])
        return A

    def scaled_int_rows(self, scale: int) -> List[dict]:
        out = []
        for i, row in enumerate(self.rows):
            d = {j: _int_scaled(v, scale) for j, v in row.items()}
            d[i] = _int_scaled(self.diag[i], scale)
            out.append(d)
        return out


def _int_scaled(v: Scalar, scale: int) -> int:
    f = v if isinstance(v, Fraction) else Fraction(v)
    num = f.numerator * scale
    if num % f.denominator:
        raise ArithmeticError("scale does not clear a denominator")
    return num // f.denominator


def build_generator(
    model: Union[JumpModel, LsmRates, GeneralLsmRates],
    q: Optional[Kernel],
    space: StateSpace,
    mode: str = "rational",
    process: bool = True,
) -> GeneratorMatrix:
    """Fill the Q-matrix of a jump model on an enumerated state space.

    Rates are promoted into the requested mode first. ``process=True``
    rejects negative rates; formal models need ``process=False``. On count
    spaces, jumps that would leave the capped space are dropped and the row
    recorded as truncated (such rows are excluded from gap evaluation).
    """
    check_mode(mode)
    if isinstance(model, (LsmRates, GeneralLsmRates)):
        model = lsm_model(model)
    if model.variant() is not space.variant:
        raise ValueError(
            f"model works on {model.variant().value} configurations, space is {space.variant.value}"
        )
    if process and not model.is_process():
        raise ValueError("negative rates: build with process=False for formal models")
    model = model.promoted(mode)
    if q is not None:
        q = q.promoted(mode)
    channels = model.channels(q)
    zero = Fraction(0) if mode == "rational" else 0.0
    rows: List[dict] = []
    diag: List[Scalar] = []
    truncated = set()
    cap = space.cap
    for idx in range(space.size):
        vals = space.values_of(idx)
        row: dict = {}
        for ch in channels:
            r = ch.rate_at(vals)
            if r == 0:
                continue
            if process and r < 0:
                raise ValueError("negative channel rate in process mode")
            new = list(vals)
            ok = True
            for site, dv in ch.delta:
                new[site] += dv
                if new[site] < 0:
                    ok = False
            if not ok:
                raise AssertionError("jump below zero: channel gating is broken")
            if cap is not None and any(v > cap for v in new):
                truncated.add(idx)
                continue
            j = space.index_of(new)
            row[j] = row.get(j, zero) + r
        row.pop(idx, None)  # no-op transitions (possible in lumped chains) drop out
        rows.append(row)
        diag.append(-sum(row.values(), start=zero))
    return GeneratorMatrix(space, rows, diag, mode, frozenset(truncated))


# ---------------------------------------------------------------------------
# Duality function matrices and gap reports
# ---------------------------------------------------------------------------


def overlap_matrix(sx: StateSpace, sy: StateSpace) -> np.ndarray:
    """K[x,y] = sum_i x(i) y(i), the exponent of eta in the duality function."""
    if sx.n_sites != sy.n_sites:
        raise ValueError("spaces must share the site count")
    X = np.array([sx.values_of(i) for i in range(sx.size)], dtype=np.int64)
    Y = np.array([sy.values_of(i) for i in range(sy.size)], dtype=np.int64)
    return X @ Y.T


def psi_matrix(sx: StateSpace, sy: StateSpace, eta, mode: str = "float"):
    """Psi[x,y] = eta^{sum_i x(i) y(i)} with 0^0 = 1."""
    check_mode(mode)
    K = overlap_matrix(sx, sy)
    if mode == "float":
        eta = float(eta)
        if eta == 0.0:
            return (K == 0).astype(float)
        sign = np.where((K % 2 == 1) & (eta < 0), -1.0, 1.0)
        return sign * np.abs(eta) ** K
    eta = as_fraction(eta)
    kmax = int(K.max(initial=0))
    powers = [eta ** k for k in range(kmax + 1)]
    return [[powers[int(K[i, j])] for j in range(K.shape[1])] for i in range(K.shape[0])]


@dataclass(frozen=True)
class GapReport:
    """Norms of a residual matrix over the evaluated block."""

    max_abs_entry: float
    frobenius: float
    worst_pair: Optional[Tuple[Tuple[int, ...], Tuple[int, ...]]]
    exact_zero: Optional[bool]
    mode: str
    n_rows: int
    n_cols: int
    excluded_rows: int = 0
    excluded_cols: int = 0

    @property
    def passed_exact(self) -> bool:
        return bool(self.exact_zero)


def _eta_scalar(eta) -> Scalar:
    from .duality import DualityParameter

    if isinstance(eta, DualityParameter):
        return eta.eta
    return eta


def _int_residual_norms(D, scale: Fraction, rows_idx, cols_idx, sx, sy):
    nz = np.nonzero(D)
    if len(nz[0]) == 0:
        return GapReport(0.0, 0.0, None, True, "rational", len(rows_idx), len(cols_idx))
    absD = abs(D)
    flat = int(np.argmax(absD))
    i, j = np.unravel_index(flat, D.shape)
    scale_f = float(scale)
    max_abs = float(absD[i, j]) * scale_f
    frob = math.sqrt(float((absD.astype(object) ** 2).sum())) * scale_f
    worst = (sx.values_of(rows_idx[i]), sy.values_of(cols_idx[j]))
    return GapReport(max_abs, frob, worst, False, "rational", len(rows_idx), len(cols_idx))


def duality_gap(G: GeneratorMatrix, Gp: GeneratorMatrix, eta) -> GapReport:
    """Residual norms of G @ Psi - Psi @ G'^T on the evaluated block.

    Count-space boundary rows/columns (anything at cap-1 or cap, or rows with
    truncated jumps) are excluded from the block and counted in the report.
    """
    eta = _eta_scalar(eta)
    sx, sy = G.space, Gp.space
    if sx.n_sites != sy.n_sites:
        raise ValueError("dimension mismatch between the two state spaces")
    if G.mode != Gp.mode:
        raise ValueError("both generators must use the same numeric mode")
    row_mask = sx.interior_mask()
    for idx in G.truncated_rows:
        row_mask[idx] = False
    col_mask = sy.interior_mask()
    for idx in Gp.truncated_rows:
        col_mask[idx] = False
    rows_idx = np.nonzero(row_mask)[0]
    cols_idx = np.nonzero(col_mask)[0]
    excl_r = sx.size - len(rows_idx)
    excl_c = sy.size - len(cols_idx)

    if G.mode == "float":
        A = G.to_dense_float()
        B = Gp.to_dense_float()
        P = psi_matrix(sx, sy, eta, "float")
        D = (A @ P - P @ B.T)[np.ix_(rows_idx, cols_idx)]
        if D.size == 0:
            return GapReport(0.0, 0.0, None, None, "float", 0, 0, excl_r, excl_c)
        flat = int(np.argmax(np.abs(D)))
        i, j = np.unravel_index(flat, D.shape)
        worst = (sx.values_of(int(rows_idx[i])), sy.values_of(int(cols_idx[j])))
        return GapReport(
            float(np.abs(D).max()), float(np.linalg.norm(D)), worst, None,
            "float", len(rows_idx), len(cols_idx), excl_r, excl_c,
        )

    # rational mode: clear denominators, compare integers
    eta_f = as_fraction(eta)
    p, qden = eta_f.numerator, eta_f.denominator
    K = overlap_matrix(sx, sy)
    kmax = int(K.max(initial=0))
    L = denominator_lcm(
        [v for row in G.rows for v in row.values()] + list(G.diag)
        + [v for row in Gp.rows for v in row.values()] + list(Gp.diag)
    )
    ppow = [p ** k for k in range(kmax + 1)]
    qpow = [qden ** k for k in range(kmax + 1)]
    P_entries = [[ppow[int(k)] * qpow[kmax - int(k)] for k in row] for row in K]
    GI = G.scaled_int_rows(L)
    GpI = Gp.scaled_int_rows(L)

    pmax = max((max(map(abs, r)) for r in P_entries), default=0)
    g_sum = max((sum(abs(v) for v in r.values()) for r in GI), default=0)
    gp_sum = max((sum(abs(v) for v in r.values()) for r in GpI), default=0)
    bound = (g_sum + gp_sum) * pmax
    use_int64 = bound < INT64_SAFE

    dtype = np.int64 if use_int64 else object
    P = np.array(P_entries, dtype=dtype)
    A = np.zeros((sx.size, sx.size), dtype=dtype)
    for i, r in enumerate(GI):
        for j, v in r.items():
            A[i, j] = v
    B = np.zeros((sy.size, sy.size), dtype=dtype)
    for i, r in enumerate(GpI):
        for j, v in r.items():
            B[i, j] = v
    D = (A @ P - P @ B.T)[np.ix_(rows_idx, cols_idx)]
    if D.size == 0:
        return GapReport(0.0, 0.0, None, True, "rational", 0, 0, excl_r, excl_c)
    report = _int_residual_norms(
        D, Fraction(1, L * qpow[kmax]), rows_idx, cols_idx, sx, sy
    )
    return GapReport(
        report.max_abs_entry, report.frobenius, report.worst_pair, report.exact_zero,
        "rational", len(rows_idx), len(cols_idx), excl_r, excl_c,
    )


def verify_dupar(
    rates: Union[LsmRates, GeneralLsmRates],
    eta,
    q: Optional[Kernel],
    space: StateSpace,
    mode: str = "rational",
) -> Tuple[GapReport, DualPairReport]:
    """Dual-rate computation + generator build + gap, in one call.

    Formal duals are allowed: the matrix identity is pure algebra and must
    hold regardless of rate signs.
    """
    eta_v = float(_eta_scalar(eta)) if mode == "float" else as_fraction(_eta_scalar(eta))
    if isinstance(rates, GeneralLsmRates):
        pair = dual_rates_general(rates.promoted(mode), eta_v)
    else:
        pair = dual_rates(rates.promoted(mode), eta_v)
    G = build_generator(lsm_model(rates), q, space, mode=mode, process=False)
    Gp = build_generator(lsm_model(pair.output), q, space, mode=mode, process=False)
    return duality_gap(G, Gp, pair.eta), pair


# ---------------------------------------------------------------------------
# Thinning kernels and intertwining
# ---------------------------------------------------------------------------


def thinning_kernel_matrix(v: Scalar, space: StateSpace, mode: str = "float"):
    """Markov kernel of keep-each-particle-with-probability-v on a spin space.

    T[x,x'] = v^{|x'|} (1-v)^{|x|-|x'|} for x' <= x componentwise, else 0.
    """
    check_mode(mode)
    if space.variant is not Variant.SPIN:
        raise ValueError("thinning kernel matrices are defined on spin spaces")
    if not (0 <= v <= 1):
        raise ValueError("retention probability must lie in [0,1]")
    n = space.n_sites
    size = space.size
    pop = [bin(i).count("1") for i in range(size)]
    if mode == "float":
        vf = float(v)
        T = np.zeros((size, size))
        for x in range(size):
            for xp in range(size):
                if xp & ~x:
                    continue
                T[x, xp] = vf ** pop[xp] * (1 - vf) ** (pop[x] - pop[xp])
        return T
    vf = as_fraction(v)
    T = [[Fraction(0)] * size for _ in range(size)]
    for x in range(size):
        for xp in range(size):
            if xp & ~x:
                continue
            T[x][xp] = vf ** pop[xp] * (1 - vf) ** (pop[x] - pop[xp])
    return T


def intertwining_gap(G2: GeneratorMatrix, G1: GeneratorMatrix, v: Scalar) -> GapReport:
    """Residual norms of G2 @ T_v - T_v @ G1 (row-measure convention).

    Zero gap means evolving X2 then thinning equals thinning then evolving
    X1, i.e. X1-law = thinned X2-law propagates in time.
    """
    if G2.space != G1.space or G2.space.variant is not Variant.SPIN:
        raise ValueError("intertwining needs both generators on one spin space")
    if G2.mode != G1.mode:
        raise ValueError("both generators must use the same numeric mode")
    space = G2.space
    size = space.size
    if G2.mode == "float":
        T = thinning_kernel_matrix(float(v), space, "float")
        D = G2.to_dense_float() @ T - T @ G1.to_dense_float()
        flat = int(np.argmax(np.abs(D)))
        i, j = np.unravel_index(flat, D.shape)
        worst = (space.values_of(int(i)), space.values_of(int(j)))
        return GapReport(
            float(np.abs(D).max()), float(np.linalg.norm(D)), worst, None,
            "float", size, size,
        )
    vf = as_fraction(v)
    pv, qv = vf.numerator, vf.denominator
    n = space.n_sites
    pop = [bin(i).count("1") for i in range(size)]
    # T scaled by qv^n is integer: pv^{|x'|} (qv-pv)^{|x|-|x'|} qv^{n-|x|}
    L = denominator_lcm(
        [val for row in G2.rows for val in row.values()] + list(G2.diag)
        + [val for row in G1.rows for val in row.values()] + list(G1.diag)
    )
    T_entries = [[0] * size for _ in range(size)]
    for x in range(size):
        for xp in range(size):
            if xp & ~x:
                continue
            T_entries[x][xp] = pv ** pop[xp] * (qv - pv) ** (pop[x] - pop[xp]) * qv ** (n - pop[x])
    tmax = max((max(map(abs, r)) for r in T_entries), default=0)
    G2I = G2.scaled_int_rows(L)
    G1I = G1.scaled_int_rows(L)
    g2_sum = max((sum(abs(val) for val in r.values()) for r in G2I), default=0)
    g1_sum = max((sum(abs(val) for val in r.values()) for r in G1I), default=0)
    bound = (g2_sum + g1_sum) * tmax
    dtype = np.int64 if bound < INT64_SAFE else object
    T = np.array(T_entries, dtype=dtype)
    A = np.zeros((size, size), dtype=dtype)
    for i, r in enumerate(G2I):
        for j, val in r.items():
            A[i, j] = val
    B = np.zeros((size, size), dtype=dtype)
    for i, r in enumerate(G1I):
        for j, val in r.items():
            B[i, j] = val
    D = A @ T - T @ B
    idx = np.arange(size)
    return _int_residual_norms(D, Fraction(1, L * qv ** n), idx, idx, space, space)


# ---------------------------------------------------------------------------
# Semigroup evolution by uniformization
# ---------------------------------------------------------------------------


def evolve_distribution(
    G: GeneratorMatrix, mu0: np.ndarray, t: float, tol: float = 1e-12
) -> Tuple[np.ndarray, float]:
    """mu_t = mu0 @ exp(t G) via uniformization with certified truncation < tol.

    Returns the renormalized distribution and the renormalization delta
    (mass lost to truncation, signed).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    mu0 = np.asarray(mu0, dtype=float)
    if mu0.shape != (G.size,):
        raise ValueError("initial distribution has the wrong length")
    if abs(mu0.sum() - 1.0) > 1e-9:
        raise ValueError("initial distribution must sum to one")
    A = G.to_dense_float()
    lam = float(max(-A.diagonal().min(), 0.0))
    if t == 0 or lam == 0:
        return mu0.copy(), 0.0
    m = lam * t
    kmax = int(stats.poisson.isf(tol / 10, m)) + 1
    weights = stats.poisson.pmf(np.arange(kmax + 1), m)
    P = np.eye(G.size) + A / lam
    v = mu0.copy()
    acc = weights[0] * v
    for k in range(1, kmax + 1):
        v = v @ P
        acc = acc + weights[k] * v
    delta = float(1.0 - acc.sum())
    if abs(delta) > 10 * tol:
        raise ArithmeticError(f"uniformization lost {delta} mass; increase the term budget")
    acc = np.clip(acc, 0.0, None)
    acc /= acc.sum()
    return acc, delta
