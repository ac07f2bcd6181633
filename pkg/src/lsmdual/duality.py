"""Closed-form dual rates, self-duality parameters, thinning factors.

Everything here is pure rate algebra: given a five-mechanism model and a
duality parameter eta != 1, produce the partner model whose generator
satisfies the product-form duality identity, and report whether the partner
is a genuine process (all rates nonnegative) or only a formal dual. Validity
is reported, never silently enforced.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from .models import CvpParams, GeneralLsmRates, LsmRates, RwParams, SsmParams
from .numeric import Scalar


@dataclass(frozen=True)
class DualityParameter:
    """The scalar indexing the product duality function family; eta = 1 is excluded."""

    eta: Scalar

    def __post_init__(self):
        if self.eta == 1:
            raise ValueError("duality parameter eta = 1 is excluded")

    @property
    def exceeds_unit(self) -> bool:
        """|eta| > 1 restricts exact checks to finite lattices (always true here)."""
        return abs(self.eta) > 1


def _eta_value(eta) -> Scalar:
    if isinstance(eta, DualityParameter):
        return eta.eta
    if eta == 1:
        raise ValueError("duality parameter eta = 1 is excluded")
    return eta


@dataclass(frozen=True)
class DualPairReport:
    """Input rates, eta, the mixing coefficient(s), output rates, and validity."""

    input_rates: object
    eta: Scalar
    gamma: object
    output: object
    valid: bool
    violated_constraints: Tuple[str, ...] = ()


def dual_rates(rates: LsmRates, eta) -> DualPairReport:
    """Partner rates a'=a+2*eta*g, b'=b+g, c'=c-(1+eta)*g, d'=d+g, e'=e-g.

    g = (a+c-d+eta*b)/(1-eta). The map is an involution for fixed eta.
    """
    eta = _eta_value(eta)
    a, b, c, d, e = rates.as_tuple()
    gamma = (a + c - d + eta * b) / (1 - eta)
    out = (
        a + 2 * eta * gamma,
        b + gamma,
        c - (1 + eta) * gamma,
        d + gamma,
        e - gamma,
    )
    violated = tuple(
        f"{name}' = {val} < 0" for name, val in zip("abcde", out) if val < 0
    )
    output = LsmRates(*out, formal=bool(violated))
    return DualPairReport(rates, eta, gamma, output, valid=not violated,
                          violated_constraints=violated)


def self_duality_parameter(rates: LsmRates) -> DualityParameter:
    """eta = (d-a-c)/b, defined for b > 0; the partner rates then equal the input."""
    if rates.b <= 0:
        raise ValueError("self-duality parameter needs branching rate b > 0")
    eta = (rates.d - rates.a - rates.c) / rates.b
    if eta == 1:
        raise ValueError("self-duality formula degenerate: (d-a-c)/b = 1")
    return DualityParameter(eta)


def dual_rates_general(rates: GeneralLsmRates, eta) -> DualPairReport:
    """Site-pair-dependent dual rates.

    g(i,j) = (a(i,j)+c(j,i)-d(i,j)+eta*b(j,i)-e(i,j)+e(j,i))/(1-eta) and

        a'(i,j) = a(i,j) + eta*(g(i,j)+g(j,i))
        b'(i,j) = b(j,i) + g(i,j)
        c'(i,j) = c(i,j) - g(j,i) - eta*g(i,j) + (e(i,j)-e(j,i)) + eta*(b(i,j)-b(j,i))
        d'(i,j) = d(i,j) + g(i,j) + (e(i,j)-e(j,i))
        e'(i,j) = e(j,i) - g(i,j)

    The equivalent invariant system (conserved combinations of primed and
    unprimed rates) is evaluated as an internal cross-check; disagreement is
    a hard error.
    """
    eta = _eta_value(eta)
    n = rates.n_sites
    a, b, c, d, e = rates.a, rates.b, rates.c, rates.d, rates.e

    def gamma_of(a, b, c, d, e, i, j):
        return (a[i][j] + c[j][i] - d[i][j] + eta * b[j][i] - e[i][j] + e[j][i]) / (1 - eta)

    g = [[0 if i == j else gamma_of(a, b, c, d, e, i, j) for j in range(n)] for i in range(n)]

    ap = [[0] * n for _ in range(n)]
    bp = [[0] * n for _ in range(n)]
    cp = [[0] * n for _ in range(n)]
    dp = [[0] * n for _ in range(n)]
    ep = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            ap[i][j] = a[i][j] + eta * (g[i][j] + g[j][i])
            bp[i][j] = b[j][i] + g[i][j]
            cp[i][j] = (
                c[i][j] - g[j][i] - eta * g[i][j]
                + (e[i][j] - e[j][i]) + eta * (b[i][j] - b[j][i])
            )
            dp[i][j] = d[i][j] + g[i][j] + (e[i][j] - e[j][i])
            ep[i][j] = e[j][i] - g[i][j]

    _cross_check_general(rates, eta, g, ap, bp, cp, dp, ep)

    violated = []
    for name, m in (("a'", ap), ("b'", bp), ("c'", cp), ("d'", dp), ("e'", ep)):
        for i in range(n):
            for j in range(n):
                if i != j and m[i][j] < 0:
                    violated.append(f"{name}({i},{j}) = {m[i][j]} < 0")
    output = GeneralLsmRates(
        n,
        tuple(tuple(row) for row in ap),
        tuple(tuple(row) for row in bp),
        tuple(tuple(row) for row in cp),
        tuple(tuple(row) for row in dp),
        tuple(tuple(row) for row in ep),
        formal=bool(violated),
    )
    gmap = tuple(tuple(row) for row in g)
    return DualPairReport(rates, eta, gmap, output, valid=not violated,
                          violated_constraints=tuple(violated))


def _cross_check_general(rates, eta, g, ap, bp, cp, dp, ep):
    """Verify the equivalent conservation-law form of the dual-rate system.

    a'+eta(e'(i,j)+e'(j,i)), b'+e' (transposed), d'+e' are conserved;
    g'(i,j) = -g(j,i); and e'(i,j) - g'(j,i)/2 = e(j,i) - g(i,j)/2,
    where g' is the mixing coefficient recomputed from the primed rates.
    """
    n = rates.n_sites
    a, b, c, d, e = rates.a, rates.b, rates.c, rates.d, rates.e
    half = Fraction(1, 2)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            gp = (ap[i][j] + cp[j][i] - dp[i][j] + eta * bp[j][i]
                  - ep[i][j] + ep[j][i]) / (1 - eta)
            checks = [
                ap[i][j] + eta * (ep[i][j] + ep[j][i])
                - (a[i][j] + eta * (e[i][j] + e[j][i])),
                bp[i][j] + ep[i][j] - (b[j][i] + e[j][i]),
                gp + g[j][i],
                dp[i][j] + ep[i][j] - (d[i][j] + e[i][j]),
                ep[i][j] - half * (-g[i][j]) - (e[j][i] - half * g[i][j]),
            ]
            for k, val in enumerate(checks):
                exact = isinstance(val, (int, Fraction))
                if (val != 0) if exact else (abs(val) > 1e-10):
                    raise AssertionError(
                        f"dual-rate cross-check {k} failed at ({i},{j}): residue {val}"
                    )


def cvp_dual_family(p: CvpParams, eta) -> DualPairReport:
    """Duals of the contact-voter process, indexed by eta.

    g = (eta/(1-eta)) s - r and the partner is
    (a',b',c',d',e') = (2*eta*g, s/(1-eta), m-(1+eta)*g, m+(eta/(1-eta))*s, -g).
    The report names the constraints that bind: a',e' >= 0 iff eta <= 0 or
    eta = r/(r+s) (the self-dual point); for m < s, d' >= 0 iff
    eta >= -m/(s-m); c' >= 0 is checked directly.
    """
    eta = _eta_value(eta)
    r, s, m = p.r, p.s, p.m
    gamma = (eta / (1 - eta)) * s - r
    out = (
        2 * eta * gamma,
        s / (1 - eta),
        m - (1 + eta) * gamma,
        m + (eta / (1 - eta)) * s,
        -gamma,
    )
    violated: List[str] = []
    if out[0] < 0 or out[4] < 0:
        violated.append(
            f"a',e' >= 0 requires eta in (-inf,0] or eta = r/(r+s) (got eta={eta})"
        )
    if out[3] < 0:
        if m < s:
            violated.append(f"d' >= 0 requires eta >= -m/(s-m) = {-m/(s-m)}")
        else:
            violated.append(f"d' = {out[3]} < 0")
    if out[2] < 0:
        violated.append(f"c' = {out[2]} < 0")
    output = LsmRates(*out, formal=any(v < 0 for v in out))
    return DualPairReport(p, eta, gamma, output, valid=all(v >= 0 for v in out),
                          violated_constraints=tuple(violated))


def cvp_rw_dual_pair(p: CvpParams, eps) -> RwParams:
    """The random-walk partner dual to the contact-voter process at eta = -eps.

    Requires m >= (eps/(1+eps)) s.
    """
    if not (0 <= eps <= 1):
        raise ValueError("eps must lie in [0,1]")
    r, s, m = p.r, p.s, p.m
    share = (eps / (1 + eps)) * s
    if m < share:
        raise ValueError(
            f"precondition m >= (eps/(1+eps))*s violated: {m} < {share}"
        )
    return RwParams(eps, r + share, s / (1 + eps), m - share)


def rw_cvp_dual_pair(p: RwParams) -> CvpParams:
    """The contact-voter partner dual to the walk system at eta = -eps.

    Requires rho >= eps*beta; inverse of cvp_rw_dual_pair on its domain.
    """
    eps, rho, beta, delta = p.eps, p.rho, p.beta, p.delta
    if rho < eps * beta:
        raise ValueError(
            f"precondition rho >= eps*beta violated: {rho} < {eps * beta}"
        )
    return CvpParams(rho - eps * beta, (1 + eps) * beta, delta + eps * beta)


@dataclass(frozen=True)
class ThinningFactor:
    value: Scalar
    applicable: bool  # thinning relation asserted only for v in [0,1]


def thinning_factor(eta10, eta20) -> ThinningFactor:
    """v = (1-eta20)/(1-eta10) when two models share a dual.

    If X1 and X2 are dual to the same X0 with parameters eta10 and eta20,
    then X1 is a v-thinning of X2 provided v lies in [0,1]; outside that
    range the number is still returned but flagged inapplicable.
    """
    e10 = _eta_value(eta10)
    e20 = _eta_value(eta20)
    v = (1 - e20) / (1 - e10)
    return ThinningFactor(v, applicable=bool(0 <= v <= 1))


@dataclass(frozen=True)
class PoissonizationWeight:
    """Both candidate weights for coupling the particle system to the diffusion.

    ``oracle`` carries (1+eps)^-1 times the diffusion self-duality constant
    measured by the generator-identity oracle; ``paper_stated`` carries the
    (1+eps)^-1 * r/s value printed alongside the lemma. The two disagree
    (reciprocally) whenever r != s; the Monte-Carlo check adjudicates.
    """

    oracle: float
    paper_stated: float
    kappa: float
    eps: float


def poissonization_weight(p: SsmParams, eps, kappa: Optional[float] = None) -> PoissonizationWeight:
    """Weight w with Pois(w * X_t) matching the particle system started at Pois(w * X_0).

    ``kappa`` is the diffusion self-duality constant; if not supplied it is
    measured by the generator-identity oracle for these parameters.
    """
    if p.s <= 0:
        raise ValueError("poissonization weight needs selection rate s > 0")
    if kappa is None:
        from .oracle import generator_identity_oracle, OracleFamily

        res = generator_identity_oracle(OracleFamily.SSM_SELF, {"r": p.r, "s": p.s, "m": p.m})
        if not res.resolved:
            raise ValueError("oracle could not resolve the duality constant")
        kappa = res.c_star
    return PoissonizationWeight(
        oracle=kappa / (1 + eps),
        paper_stated=(p.r / p.s) / (1 + eps),
        kappa=kappa,
        eps=float(eps),
    )
