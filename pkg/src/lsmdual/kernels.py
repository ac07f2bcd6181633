"""Motion kernels: the symmetric substochastic jump rates underlying every model.

A kernel assigns a nonnegative rate q(i,j) to each ordered pair of distinct
sites. The standard constructor normalizes user weights to unit row sums and
requires the rows to share a common sum (per-row rescaling would silently
break symmetry); ``raw_kernel`` skips all of that and is the explicit escape
hatch for the asymmetric negative controls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Tuple

from .numeric import Scalar, as_fraction

Pair = Tuple[int, int]

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Kernel:
    """Motion rates on a finite site set {0, ..., n_sites-1}.

    ``rates`` maps ordered pairs (i, j), i != j, to nonnegative rates; absent
    pairs are zero. ``symmetric`` records whether q(i,j) == q(j,i) holds, and
    ``unit_rows`` whether every row sums to one (colony kernels over a single
    colony are substochastic by construction).
    """

    n_sites: int
    rates: Mapping[Pair, Scalar]
    symmetric: bool
    unit_rows: bool

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("kernel needs at least one site")
        for (i, j), w in self.rates.items():
            if i == j or not (0 <= i < self.n_sites) or not (0 <= j < self.n_sites):
                raise ValueError(f"bad site pair {(i, j)} for {self.n_sites} sites")
            if w < 0:
                raise ValueError(f"negative rate at {(i, j)}")

    def rate(self, i: int, j: int) -> Scalar:
        return self.rates.get((i, j), 0)

    def row_sum(self, i: int) -> Scalar:
        return sum((w for (a, _), w in self.rates.items() if a == i), start=0)

    def pairs(self) -> Iterable[Tuple[int, int, Scalar]]:
        for (i, j), w in sorted(self.rates.items()):
            if w != 0:
                yield i, j, w

    def promoted(self, mode: str) -> "Kernel":
        if mode == "rational":
            conv = as_fraction
        else:
            conv = float
        return Kernel(
            self.n_sites,
            {p: conv(w) for p, w in self.rates.items()},
            self.symmetric,
            self.unit_rows,
        )


def _inspect_symmetry(rates: Mapping[Pair, Scalar]) -> bool:
    for (i, j), w in rates.items():
        other = rates.get((j, i), 0)
        if isinstance(w, Fraction) and isinstance(other, Fraction):
            if w != other:
                return False
        elif abs(float(w) - float(other)) > ROW_SUM_TOL:
            return False
    return True


def make_kernel(n_sites: int, weights: Mapping[Pair, Scalar]) -> Kernel:
    """Build a unit-row kernel from unnormalized weights.

    All rows must carry the same total weight; the common total is divided
    out. A zero row (isolated site) or rows with differing sums are errors.
    Weights given as ints/Fractions keep exact rational rates.
    """
    if n_sites < 1:
        raise ValueError("kernel needs at least one site")
    exact = all(isinstance(w, (int, Fraction)) for w in weights.values())
    conv = as_fraction if exact else float
    w = {pair: conv(v) for pair, v in weights.items() if v != 0}
    for (i, j) in w:
        if i == j or not (0 <= i < n_sites) or not (0 <= j < n_sites):
            raise ValueError(f"bad site pair {(i, j)} for {n_sites} sites")
        if w[(i, j)] < 0:
            raise ValueError(f"negative weight at {(i, j)}")
    row_sums = [sum((v for (a, _), v in w.items() if a == i), start=conv(0)) for i in range(n_sites)]
    for i, s in enumerate(row_sums):
        if s == 0:
            raise ValueError(f"site {i} has a zero row (isolated site)")
    ref = row_sums[0]
    for i, s in enumerate(row_sums[1:], start=1):
        if exact:
            mismatch = s != ref
        else:
            mismatch = abs(s - ref) > ROW_SUM_TOL * max(1.0, abs(ref))
        if mismatch:
            raise ValueError(
                "rows have unequal weight sums "
                f"({ref} at site 0 vs {s} at site {i}); uniform normalization is "
                "impossible without breaking symmetry — use raw_kernel for that"
            )
    rates = {pair: v / ref for pair, v in w.items()}
    return Kernel(n_sites, rates, _inspect_symmetry(rates), unit_rows=True)


def raw_kernel(n_sites: int, weights: Mapping[Pair, Scalar]) -> Kernel:
    """Keep weights exactly as given: rows need not sum to one nor be symmetric."""
    exact = all(isinstance(w, (int, Fraction)) for w in weights.values())
    conv = as_fraction if exact else float
    rates = {pair: conv(v) for pair, v in weights.items() if v != 0}
    unit = True
    for i in range(n_sites):
        s = sum((v for (a, _), v in rates.items() if a == i), start=conv(0))
        if exact:
            unit = unit and s == 1
        else:
            unit = unit and abs(float(s) - 1.0) <= ROW_SUM_TOL
    k = Kernel(n_sites, rates, _inspect_symmetry(rates), unit_rows=unit)
    return k


def pair_kernel() -> Kernel:
    """The only 2-site kernel: q(0,1) = q(1,0) = 1."""
    return make_kernel(2, {(0, 1): 1, (1, 0): 1})


def ring_kernel(n: int) -> Kernel:
    """Nearest-neighbor ring; each side gets rate 1/2 (rate 1 each way for n=2)."""
    if n < 2:
        raise ValueError("ring needs at least 2 sites")
    if n == 2:
        return pair_kernel()
    weights = {}
    for i in range(n):
        weights[(i, (i + 1) % n)] = 1
        weights[(i, (i - 1) % n)] = 1
    return make_kernel(n, weights)


def complete_kernel(n: int) -> Kernel:
    """Complete graph with uniform rates 1/(n-1)."""
    if n < 2:
        raise ValueError("complete graph needs at least 2 sites")
    weights = {(i, j): 1 for i in range(n) for j in range(n) if i != j}
    return make_kernel(n, weights)


def kernel_from_preset(spec: str) -> Kernel:
    """Parse "pair", "ring:n", or "complete:n"."""
    name, _, arg = spec.partition(":")
    if name == "pair":
        return pair_kernel()
    if name == "ring":
        return ring_kernel(int(arg))
    if name == "complete":
        return complete_kernel(int(arg))
    raise ValueError(f"unknown kernel preset {spec!r}")


def colony_kernel(q: Kernel, N: int, nu: Scalar) -> Kernel:
    """Blow each site of ``q`` up into a colony of N exchangeable members.

    Member (i,k) jumps to (j,l) in a different colony at rate (nu/N) q(i,j)
    and to another member of its own colony at rate (1-nu)/(N-1). Site index
    of member k of colony i is i*N + k. Rows sum to one when q has unit rows
    and at least two colonies exist; a single-colony base gives rows 1-nu.
    """
    if not q.symmetric:
        raise ValueError("colony construction requires a symmetric base kernel")
    if N < 2:
        raise ValueError("colonies need at least 2 members")
    exact = isinstance(nu, (int, Fraction)) and all(
        isinstance(w, (int, Fraction)) for w in q.rates.values()
    )
    conv = as_fraction if exact else float
    nu = conv(nu)
    if not (0 <= nu <= 1):
        raise ValueError("nu must lie in [0, 1]")
    within = (1 - nu) / (N - 1)
    rates: dict[Pair, Scalar] = {}
    for i in range(q.n_sites):
        for k in range(N):
            a = i * N + k
            if within != 0:
                for l in range(N):
                    if l != k:
                        rates[(a, i * N + l)] = within
    if nu != 0:
        for i, j, w in q.pairs():
            cross = nu * conv(w) / N
            if cross != 0:
                for k in range(N):
                    for l in range(N):
                        rates[(i * N + k, j * N + l)] = cross
    unit = (q.n_sites > 1 and q.unit_rows) or nu == 0
    return Kernel(q.n_sites * N, rates, symmetric=True, unit_rows=bool(unit))
