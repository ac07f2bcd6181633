"""Model families and their exact jump-rate semantics.

Five families share the same motion kernel machinery:

* spin systems with pairwise annihilation (a), branching (b), coalescence
  (c), death (d), and exclusion (e), either with constant rates modulated by
  the kernel or with fully site-pair-dependent rate maps;
* contact-voter processes (resampling r, selection s, mutation m);
* random walks with annihilation probability eps, walk rate rho, branching
  beta, and deaths delta;
* branching particle systems on counting configurations;
* the two diffusion families (stepping stone, super random walk) which only
  carry parameters here — their dynamics live in the SDE module.

Every jump model exposes ``channels(q)``: a static list of transition
channels (rate = const * f(x_i) * g(x_j), fixed state increment) from which
both the jump enumeration and the simulators are built. The spin-system and
random-walk channel tables are written down independently so that their
agreement is a real test of the rate dictionary between the families.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .kernels import Kernel
from .numeric import Scalar, as_fraction, promote


class Variant(enum.Enum):
    SPIN = "spin"
    COUNT = "count"
    UNIT_REAL = "unit_real"
    NONNEG_REAL = "nonneg_real"


@dataclass(frozen=True)
class Config:
    """A lattice configuration; values are validated against the variant range."""

    variant: Variant
    values: tuple

    def __post_init__(self):
        v = self.values
        if self.variant is Variant.SPIN and any(x not in (0, 1) for x in v):
            raise ValueError("spin configuration must be 0/1 valued")
        if self.variant is Variant.COUNT and any(
            (not isinstance(x, int)) or x < 0 for x in v
        ):
            raise ValueError("counting configuration must hold nonnegative ints")
        if self.variant is Variant.UNIT_REAL and any(not (0 <= x <= 1) for x in v):
            raise ValueError("values must lie in [0,1]")
        if self.variant is Variant.NONNEG_REAL and any(x < 0 for x in v):
            raise ValueError("values must be nonnegative")

    @property
    def n_sites(self) -> int:
        return len(self.values)

    @staticmethod
    def spin(values: Sequence[int]) -> "Config":
        return Config(Variant.SPIN, tuple(int(x) for x in values))

    @staticmethod
    def count(values: Sequence[int]) -> "Config":
        return Config(Variant.COUNT, tuple(int(x) for x in values))

    @staticmethod
    def unit_real(values: Sequence[float]) -> "Config":
        return Config(Variant.UNIT_REAL, tuple(float(x) for x in values))

    @staticmethod
    def nonneg_real(values: Sequence[float]) -> "Config":
        return Config(Variant.NONNEG_REAL, tuple(float(x) for x in values))

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.values)


# ---------------------------------------------------------------------------
# Rate/parameter types
# ---------------------------------------------------------------------------


def _check_nonneg(name: str, value: Scalar, formal: bool):
    if not formal and value < 0:
        raise ValueError(f"{name} must be nonnegative (got {value}); "
                         "pass formal=True to represent a formal model")


@dataclass(frozen=True)
class LsmRates:
    """Constant annihilation/branching/coalescence/death/exclusion rates.

    ``formal=True`` admits negative entries; such rate tuples can enter the
    exact engine's formal mode but are rejected by the simulators.
    """

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar
    e: Scalar
    formal: bool = False

    def __post_init__(self):
        for name in "abcde":
            _check_nonneg(name, getattr(self, name), self.formal)

    def as_tuple(self) -> tuple:
        return (self.a, self.b, self.c, self.d, self.e)

    def promoted(self, mode: str) -> "LsmRates":
        return LsmRates(*(promote(v, mode) for v in self.as_tuple()), formal=self.formal)

    def is_process(self) -> bool:
        return all(v >= 0 for v in self.as_tuple())


RateMap = Tuple[Tuple[Scalar, ...], ...]


def _as_matrix(m, n: int) -> RateMap:
    rows = tuple(tuple(row) for row in m)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"rate map must be {n}x{n}")
    return rows


@dataclass(frozen=True)
class GeneralLsmRates:
    """Site-pair-dependent five-mechanism rates (kernel already absorbed).

    The annihilation map must be symmetric; the others are free. In process
    mode all entries are nonnegative; ``formal=True`` lifts that.
    """

    n_sites: int
    a: RateMap
    b: RateMap
    c: RateMap
    d: RateMap
    e: RateMap
    formal: bool = False

    def __post_init__(self):
        for name in "abcde":
            object.__setattr__(self, name, _as_matrix(getattr(self, name), self.n_sites))
        n = self.n_sites
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if self.a[i][j] != self.a[j][i]:
                    raise ValueError("annihilation map must be symmetric")
                if not self.formal:
                    for name in "abcde":
                        _check_nonneg(f"{name}({i},{j})", getattr(self, name)[i][j], False)

    @staticmethod
    def from_constant(rates: LsmRates, q: Kernel) -> "GeneralLsmRates":
        n = q.n_sites

        def mat(const):
            return tuple(
                tuple(const * q.rate(i, j) if i != j else 0 for j in range(n))
                for i in range(n)
            )

        return GeneralLsmRates(
            n, mat(rates.a), mat(rates.b), mat(rates.c), mat(rates.d), mat(rates.e),
            formal=rates.formal,
        )

    def maps(self) -> dict:
        return {name: getattr(self, name) for name in "abcde"}

    def promoted(self, mode: str) -> "GeneralLsmRates":
        def conv(m):
            return tuple(tuple(promote(v, mode) for v in row) for row in m)

        return GeneralLsmRates(
            self.n_sites, conv(self.a), conv(self.b), conv(self.c), conv(self.d),
            conv(self.e), formal=self.formal,
        )

    def is_process(self) -> bool:
        return all(
            v >= 0 for m in (self.a, self.b, self.c, self.d, self.e) for row in m for v in row
        )


@dataclass(frozen=True)
class CvpParams:
    """Contact-voter process: resampling r, selection s, mutation m."""

    r: Scalar
    s: Scalar
    m: Scalar

    def __post_init__(self):
        for name in "rsm":
            _check_nonneg(name, getattr(self, name), False)

    def promoted(self, mode: str) -> "CvpParams":
        return CvpParams(*(promote(getattr(self, n), mode) for n in "rsm"))


@dataclass(frozen=True)
class RwParams:
    """Random walks with annihilation prob eps, walk rho, branching beta, death delta."""

    eps: Scalar
    rho: Scalar
    beta: Scalar
    delta: Scalar

    def __post_init__(self):
        if not (0 <= self.eps <= 1):
            raise ValueError("annihilation probability eps must lie in [0,1]")
        for name in ("rho", "beta", "delta"):
            _check_nonneg(name, getattr(self, name), False)

    def promoted(self, mode: str) -> "RwParams":
        return RwParams(*(promote(getattr(self, n), mode) for n in ("eps", "rho", "beta", "delta")))


@dataclass(frozen=True)
class BpsParams:
    """Branching particle system: pair annihilation a, branching b, pair coalescence c, death d."""

    a: Scalar
    b: Scalar
    c: Scalar
    d: Scalar

    def __post_init__(self):
        for name in "abcd":
            _check_nonneg(name, getattr(self, name), False)

    def promoted(self, mode: str) -> "BpsParams":
        return BpsParams(*(promote(getattr(self, n), mode) for n in "abcd"))


@dataclass(frozen=True)
class SsmParams:
    """Stepping stone model: resampling r, selection s, mutation m."""

    r: float
    s: float
    m: float

    def __post_init__(self):
        for name in "rsm":
            _check_nonneg(name, getattr(self, name), False)


class NoiseConvention(enum.Enum):
    """Diffusion coefficient of the super random walk: sqrt(alpha z) or sqrt(2 alpha z)."""

    SQRT_ALPHA = "sqrt_alpha"
    SQRT_TWO_ALPHA = "sqrt_two_alpha"


@dataclass(frozen=True)
class SrwParams:
    """Super random walk with quadratic killing: noise alpha, drift beta, killing gamma."""

    alpha: float
    beta: float
    gamma: float
    noise_convention: NoiseConvention = NoiseConvention.SQRT_TWO_ALPHA

    def __post_init__(self):
        if self.alpha <= 0 or self.gamma <= 0:
            raise ValueError("alpha and gamma must be strictly positive")


# ---------------------------------------------------------------------------
# Rate dictionary between the families
# ---------------------------------------------------------------------------


def cvp_as_lsm(p: CvpParams) -> LsmRates:
    """Contact-voter process written in the five-mechanism form: (0, r+s, m, r+m, 0)."""
    return LsmRates(0, p.r + p.s, p.m, p.r + p.m, 0)


def rw_as_lsm(p: RwParams) -> LsmRates:
    """Random-walk system written in the five-mechanism form.

    (a,b,c,d,e) = (2*rho*eps, beta, rho*(1-eps) + beta*eps + delta, delta, rho).
    The walk term is the exclusion mechanism; coalescence collects the
    non-annihilating collisions, branch-on-occupied collisions, and the
    occupied-neighbor share of the death rate. Certified by the standing
    generator-equality test against the native jump table.
    """
    eps, rho, beta, delta = p.eps, p.rho, p.beta, p.delta
    return LsmRates(
        2 * rho * eps,
        beta,
        rho * (1 - eps) + beta * eps + delta,
        delta,
        rho,
    )


# ---------------------------------------------------------------------------
# Transition channels
# ---------------------------------------------------------------------------

# occupancy factors a channel rate can carry per watched site
OCC = "occ"        # x_i
VAC = "vac"        # 1 - x_i          (spin) / N - x_i with room_cap (counts)
PAIRS = "pairs"    # x_i (x_i - 1)
ONE = "one"


@dataclass(frozen=True)
class Channel:
    """One transition channel: rate = const * factor_i(x_i) * factor_j(x_j).

    ``delta`` maps sites to increments applied when the channel fires.
    ``room_cap`` reinterprets VAC as (cap - x) for count-valued colony chains.
    """

    const: Scalar
    i: Optional[int]
    fi: str
    j: Optional[int]
    fj: str
    delta: Tuple[Tuple[int, int], ...]
    room_cap: Optional[int] = None

    def watched(self) -> Tuple[int, ...]:
        sites = tuple(s for s in (self.i, self.j) if s is not None)
        return sites

    def _factor(self, kind: str, value):
        if kind == OCC:
            return value
        if kind == VAC:
            cap = 1 if self.room_cap is None else self.room_cap
            return cap - value
        if kind == PAIRS:
            return value * (value - 1)
        return 1

    def rate_at(self, values: Sequence) -> Scalar:
        r = self.const
        if self.i is not None:
            r = r * self._factor(self.fi, values[self.i])
        if self.j is not None:
            r = r * self._factor(self.fj, values[self.j])
        return r


def lsm_channels(rates: Union[LsmRates, GeneralLsmRates], q: Optional[Kernel]) -> List[Channel]:
    """Channel table transcribing the five-mechanism spin generator."""
    if isinstance(rates, LsmRates):
        if q is None:
            raise ValueError("constant rates need a kernel")
        general = GeneralLsmRates.from_constant(rates, q)
    else:
        general = rates
        if q is not None and q.n_sites != general.n_sites:
            raise ValueError("kernel and rate maps disagree on the site count")
    n = general.n_sites
    half = Fraction(1, 2)  # stays exact against Fractions, degrades to float against floats
    out: List[Channel] = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b, c, d, e = (general.maps()[k][i][j] for k in "abcde")
            if a:
                out.append(Channel(half * a, i, OCC, j, OCC, ((i, -1), (j, -1))))
            if b:
                out.append(Channel(b, i, OCC, j, VAC, ((j, +1),)))
            if c:
                out.append(Channel(c, i, OCC, j, OCC, ((j, -1),)))
            if d:
                out.append(Channel(d, i, OCC, j, VAC, ((i, -1),)))
            if e:
                out.append(Channel(e, i, OCC, j, VAC, ((i, -1), (j, +1))))
    return out


def cvp_channels(p: CvpParams, q: Kernel) -> List[Channel]:
    """Channel table of the contact-voter generator (native form)."""
    out: List[Channel] = []
    for i, j, w in q.pairs():
        rs = (p.r + p.s) * w
        if rs:
            out.append(Channel(rs, i, OCC, j, VAC, ((j, +1),)))
        rw = p.r * w
        if rw:
            out.append(Channel(rw, i, VAC, j, OCC, ((j, -1),)))
    if p.m:
        for i in range(q.n_sites):
            out.append(Channel(p.m, i, OCC, None, ONE, ((i, -1),)))
    return out


def rw_channels(p: RwParams, q: Kernel) -> List[Channel]:
    """Channel table of the annihilating/branching/coalescing walk generator."""
    out: List[Channel] = []
    eps = p.eps
    for i, j, w in q.pairs():
        if p.rho:
            out.append(Channel(p.rho * w, i, OCC, j, VAC, ((i, -1), (j, +1))))
            if eps:
                out.append(Channel(p.rho * eps * w, i, OCC, j, OCC, ((i, -1), (j, -1))))
            if (1 - eps):
                out.append(Channel(p.rho * (1 - eps) * w, i, OCC, j, OCC, ((i, -1),)))
        if p.beta:
            out.append(Channel(p.beta * w, i, OCC, j, VAC, ((j, +1),)))
            if eps:
                out.append(Channel(p.beta * eps * w, i, OCC, j, OCC, ((j, -1),)))
    if p.delta:
        for i in range(q.n_sites):
            out.append(Channel(p.delta, i, OCC, None, ONE, ((i, -1),)))
    return out


def bps_channels(p: BpsParams, q: Kernel) -> List[Channel]:
    """Channel table of the branching particle system on counting configurations."""
    out: List[Channel] = []
    for i, j, w in q.pairs():
        if w:
            out.append(Channel(w, i, OCC, None, ONE, ((i, -1), (j, +1))))
    for i in range(q.n_sites):
        if p.a:
            out.append(Channel(p.a, i, PAIRS, None, ONE, ((i, -2),)))
        if p.b:
            out.append(Channel(p.b, i, OCC, None, ONE, ((i, +1),)))
        if p.c:
            out.append(Channel(p.c, i, PAIRS, None, ONE, ((i, -1),)))
        if p.d:
            out.append(Channel(p.d, i, OCC, None, ONE, ((i, -1),)))
    return out


def apply_channels(x: Config, channels: Sequence[Channel]) -> List[Tuple[Config, Scalar]]:
    """Enumerate distinct reachable states with aggregated rates; zero rates dropped."""
    agg: Dict[tuple, Scalar] = {}
    vals = x.values
    for ch in channels:
        r = ch.rate_at(vals)
        if r == 0:
            continue
        if r < 0:
            raise ValueError("negative channel rate; formal models cannot be enumerated as jumps")
        new = list(vals)
        for site, dv in ch.delta:
            new[site] += dv
        key = tuple(new)
        agg[key] = agg.get(key, 0) + r
    out = []
    for key in sorted(agg):
        out.append((Config(x.variant, key), agg[key]))
    return out


# ---------------------------------------------------------------------------
# Jump enumeration (the generator semantics, state by state)
# ---------------------------------------------------------------------------


def lsm_jumps(
    x: Config, rates: Union[LsmRates, GeneralLsmRates], q: Optional[Kernel] = None
) -> List[Tuple[Config, Scalar]]:
    """All one/two-site jumps of the five-mechanism spin system from ``x``."""
    if x.variant is not Variant.SPIN:
        raise ValueError("spin configuration required")
    n = rates.n_sites if isinstance(rates, GeneralLsmRates) else q.n_sites
    if x.n_sites != n:
        raise ValueError("configuration/site-count mismatch")
    return apply_channels(x, lsm_channels(rates, q))


def rw_jumps(y: Config, p: RwParams, q: Kernel) -> List[Tuple[Config, Scalar]]:
    """All jumps of the annihilating/branching/coalescing walk from ``y``."""
    if y.variant is not Variant.SPIN:
        raise ValueError("spin configuration required")
    if y.n_sites != q.n_sites:
        raise ValueError("configuration/site-count mismatch")
    return apply_channels(y, rw_channels(p, q))


def bps_jumps(y: Config, p: BpsParams, q: Kernel) -> List[Tuple[Config, Scalar]]:
    """All jumps of the branching particle system from counting configuration ``y``."""
    if y.variant is not Variant.COUNT:
        raise ValueError("counting configuration required")
    if y.n_sites != q.n_sites:
        raise ValueError("configuration/site-count mismatch")
    return apply_channels(y, bps_channels(p, q))


# ---------------------------------------------------------------------------
# Tagged model union
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpModel:
    """A jump-process model bound to nothing but its parameters.

    ``kind`` is one of "lsm", "cvp", "rw", "bps"; diffusion families (``ssm``,
    ``srw``) are carried by the same union for serialization and dispatch but
    have no jump table.
    """

    kind: str
    params: object

    def variant(self) -> Variant:
        return Variant.COUNT if self.kind == "bps" else Variant.SPIN

    def channels(self, q: Optional[Kernel]) -> List[Channel]:
        if self.kind == "lsm":
            return lsm_channels(self.params, q)
        if self.kind == "cvp":
            return cvp_channels(self.params, q)
        if self.kind == "rw":
            return rw_channels(self.params, q)
        if self.kind == "bps":
            return bps_channels(self.params, q)
        raise ValueError(f"{self.kind} is not a jump model")

    def jumps(self, x: Config, q: Optional[Kernel]) -> List[Tuple[Config, Scalar]]:
        if x.variant is not self.variant():
            raise ValueError(f"{self.kind} expects a {self.variant().value} configuration")
        return apply_channels(x, self.channels(q))

    def is_process(self) -> bool:
        p = self.params
        if self.kind == "lsm":
            return p.is_process()
        return True

    def promoted(self, mode: str) -> "JumpModel":
        return JumpModel(self.kind, self.params.promoted(mode))


def lsm_model(rates: Union[LsmRates, GeneralLsmRates]) -> JumpModel:
    return JumpModel("lsm", rates)


def cvp_model(p: CvpParams) -> JumpModel:
    return JumpModel("cvp", p)


def rw_model(p: RwParams) -> JumpModel:
    return JumpModel("rw", p)


def bps_model(p: BpsParams) -> JumpModel:
    return JumpModel("bps", p)
