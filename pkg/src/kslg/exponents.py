"""Exact-rational admissibility algebra for the damping exponent.

Every threshold, conjugate exponent and interpolation weight in this module
is computed with `fractions.Fraction`; no floating point enters any verdict.
The functions decide for which parameter triples (n, s, kappa) -- spatial
dimension, integrability exponent of mu^{-s}, damping exponent -- the
toolkit's trajectory estimates are available, and construct a concrete
admissible tuple (q, r, theta, gamma) consumed by the diagnostics.

Infinity is represented by ``math.inf``.  It only ever participates in
comparisons and in min/max, never in rational arithmetic.  Division
conventions: c/0 = inf for c > 0, and a quotient whose denominator sits
inside a positive-part bracket is inf whenever that bracket is <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

Rational = Union[int, str, Fraction]

INF = math.inf


class InfeasibleError(RuntimeError):
    """Raised when the constructive exponent selection cannot satisfy its
    own constraints.  For admissible configurations this must not happen;
    seeing it means the input violated a precondition or exposed a bug."""


def _q(x: Rational, name: str = "value") -> Fraction:
    """Coerce to an exact rational.  Floats are rejected on purpose: their
    binary expansion would silently change strict-inequality verdicts."""
    if isinstance(x, float):
        raise TypeError(f"{name} must be exact (int, str or Fraction), got float {x!r}")
    return Fraction(x)


def _is_inf(x) -> bool:
    return isinstance(x, float) and math.isinf(x)


def _pos_div(num: Fraction, den: Fraction):
    """num / [den]_+ with the convention c/0 := inf (num > 0 assumed)."""
    if den <= 0:
        return INF
    return num / den


def _max_ext(a, b):
    """max over Fraction-or-inf operands."""
    if _is_inf(a) or _is_inf(b):
        return INF
    return max(a, b)


def _mid_open(lo: Fraction, hi) -> Fraction:
    """Deterministic pick inside the open interval (lo, hi): the midpoint,
    or lo + 1 when hi is infinite."""
    if _is_inf(hi):
        return lo + 1
    return (lo + hi) / 2


@dataclass(frozen=True)
class ParamConfig:
    """One parameter configuration of the system.

    ``alpha`` and ``mu1`` are only meaningful in prototype mode, where the
    damping coefficient is mu(x) = mu1 * |x|^alpha.
    """

    n: int
    s: Fraction
    kappa: Fraction
    alpha: Optional[Fraction] = None
    mu1: Optional[Fraction] = None

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise ValueError(f"dimension n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "s", _q(self.s, "s"))
        object.__setattr__(self, "kappa", _q(self.kappa, "kappa"))
        if self.s <= 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if self.kappa <= 1:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        if self.alpha is not None:
            object.__setattr__(self, "alpha", _q(self.alpha, "alpha"))
            if self.alpha < 0:
                raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if self.mu1 is not None:
            object.__setattr__(self, "mu1", _q(self.mu1, "mu1"))
            if self.mu1 <= 0:
                raise ValueError(f"mu1 must be positive, got {self.mu1}")


@dataclass(frozen=True)
class ExponentSet:
    """A full admissible exponent tuple for one configuration.

    q_sup / r_sup record the branch-specific upper bounds that guided the
    construction (inf when the branch imposes none).  All members are exact.
    """

    n: int
    s: Fraction
    kappa: Fraction
    p: Fraction
    p_conj: Fraction
    kappa_conj: Fraction
    q: Fraction
    r: Fraction
    theta: Fraction
    gamma: Fraction
    q_sup: object  # Fraction or inf
    r_sup: object  # Fraction or inf
    branch: str

    def violations(self) -> list[str]:
        """Re-derive every constraint by direct substitution; empty if sound."""
        out = []
        if 1 / self.p + 1 / self.p_conj != 1:
            out.append("p and p_conj are not conjugate")
        if 1 / self.kappa + 1 / self.kappa_conj != 1:
            out.append("kappa and kappa_conj are not conjugate")
        if not self.q > self.p_conj:
            out.append(f"q = {self.q} does not exceed p_conj = {self.p_conj}")
        rng = r_admissible_range(self.n, self.p, self.kappa)
        if not rng.contains(self.r):
            out.append(f"r = {self.r} outside admissible range {rng}")
        th = theta(self.n, self.q, self.r)
        if th != self.theta:
            out.append("stored theta does not match theta(n, q, r)")
        if not (0 < th < 1):
            out.append(f"theta = {th} not in (0, 1)")
        if not self.kappa_conj * th < 2:
            out.append(f"kappa_conj * theta = {self.kappa_conj * th} not < 2")
        if not self.gamma > self.kappa_conj:
            out.append(f"gamma = {self.gamma} does not exceed kappa_conj")
        if not th * self.gamma <= 2:
            out.append(f"theta * gamma = {th * self.gamma} exceeds 2")
        return out


@dataclass(frozen=True)
class RInterval:
    """Half-open interval [lo, hi) of admissible signal-norm exponents."""

    lo: Fraction
    hi: object  # Fraction or inf

    def contains(self, r: Fraction) -> bool:
        if r < self.lo:
            return False
        return True if _is_inf(self.hi) else r < self.hi

    def __str__(self):
        hi = "inf" if _is_inf(self.hi) else str(self.hi)
        return f"[{self.lo}, {hi})"


def kappa_threshold(cfg: ParamConfig) -> Fraction:
    """General admissibility threshold for the damping exponent.

    Returns max{ 2n(s+1)/((n+2)s),
                 min{ (2(n-1)s+n)/(ns), (2(n+2)s+2n)/((n+4)s) } };
    a configuration is admissible iff kappa strictly exceeds this value.
    """
    n, s = cfg.n, cfg.s
    t1 = Fraction(2 * n) * (s + 1) / ((n + 2) * s)
    t2 = (2 * (n - 1) * s + n) / Fraction(n) / s
    t3 = (2 * (n + 2) * s + 2 * n) / Fraction(n + 4) / s
    return max(t1, min(t2, t3))


def is_admissible(cfg: ParamConfig) -> bool:
    return cfg.kappa > kappa_threshold(cfg)


def mu_integrability_exponent_bound(n: int, alpha: Rational):
    """Supremum of s for which x -> (|x|^alpha)^(-s) is integrable over a
    bounded n-dimensional neighbourhood of the origin: n/alpha, inf for
    alpha = 0.  Any s strictly below the bound is admissible."""
    alpha = _q(alpha, "alpha")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0:
        return INF
    return Fraction(n) / alpha


def prototype_kappa_threshold(n: int, alpha: Rational) -> Fraction:
    """Damping-exponent threshold for the prototype mu(x) = mu1 |x|^alpha."""
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n!r}")
    alpha = _q(alpha, "alpha")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    t1 = (2 * n + 2 * alpha) / Fraction(n + 2)
    t2 = (2 * (n - 1) + alpha) / Fraction(n)
    t3 = (2 * (n + 2) + 2 * alpha) / Fraction(n + 4)
    return max(t1, min(t2, t3))


def prototype_alpha_min_kappa(n: int) -> Fraction:
    """Least damping exponent for which some alpha >= 0 is admissible:
    min{ (2n-2)/n, (2n+4)/(n+4) }."""
    return min(Fraction(2 * n - 2, n), Fraction(2 * n + 4, n + 4))


def prototype_alpha_threshold(n: int, kappa: Rational) -> Fraction:
    """Largest heterogeneity exponent compatible with a given kappa in
    prototype mode; exact inverse image of ``prototype_kappa_threshold``:
    alpha < prototype_alpha_threshold(n, kappa) iff
    kappa > prototype_kappa_threshold(n, alpha)."""
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"dimension n must be an integer >= 2, got {n!r}")
    kappa = _q(kappa, "kappa")
    floor = prototype_alpha_min_kappa(n)
    if kappa <= floor:
        raise ValueError(f"kappa = {kappa} does not exceed the minimum {floor} for n = {n}")
    a1 = ((kappa - 2) * n + 2 * kappa) / 2
    a2 = (kappa - 2) * n + 2
    a3 = ((kappa - 2) * n + 4 * kappa - 4) / 2
    return min(a1, max(a2, a3))


def derived_exponents(s: Rational, kappa: Rational) -> tuple[Fraction, Fraction, Fraction]:
    """(p, p', kappa') with p = kappa*s/(s+1) and conjugates.

    The identities p/(kappa - p) = s and 1/p + 1/p' = 1 hold exactly.
    Requires kappa*s > s + 1 so that p > 1 and p' is defined.
    """
    s = _q(s, "s")
    kappa = _q(kappa, "kappa")
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    if kappa <= 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    if kappa * s <= s + 1:
        raise ValueError(
            f"kappa*s = {kappa * s} must exceed s+1 = {s + 1}; p <= 1 has no conjugate"
        )
    p = kappa * s / (s + 1)
    p_conj = p / (p - 1)
    kappa_conj = kappa / (kappa - 1)
    assert p / (kappa - p) == s
    return p, p_conj, kappa_conj


def theta(n: int, q: Rational, r: Rational) -> Fraction:
    """Interpolation weight (1/r - 1/q) / (1/n - 1/2 + 1/r)."""
    q = _q(q, "q")
    r = _q(r, "r")
    if q <= 0 or r <= 0:
        raise ValueError("q and r must be positive")
    den = Fraction(1, n) - Fraction(1, 2) + 1 / r
    if den == 0:
        raise ZeroDivisionError(f"theta denominator vanishes for n = {n}, r = {r}")
    return (1 / r - 1 / q) / den


def r_admissible_range(n: int, p: Rational, kappa: Rational) -> RInterval:
    """Admissible range [1, max{ kn/[kn/p - 2(k-1)]_+, n/(n-2) }) of
    signal-norm exponents, with the c/0 := inf convention."""
    p = _q(p, "p")
    kappa = _q(kappa, "kappa")
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if kappa <= 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    first = _pos_div(kappa * n, kappa * n / p - 2 * (kappa - 1))
    second = _pos_div(Fraction(n), Fraction(n - 2))
    return RInterval(Fraction(1), _max_ext(first, second))


def _gamma_pick(kappa_conj: Fraction, th: Fraction) -> Fraction:
    """gamma = kappa' + min(1, 2/theta - kappa')/2: strictly above kappa',
    and theta*gamma <= theta*kappa'/2 + 1 < 2 whenever theta*kappa' < 2."""
    return kappa_conj + min(Fraction(1), 2 / th - kappa_conj) / 2


def select_exponents(cfg: ParamConfig) -> ExponentSet:
    """Constructively select (q, r, theta, gamma) for an admissible cfg.

    Open-interval picks use midpoints (lo + 1 when unbounded).  The returned
    set always passes ``ExponentSet.violations()``; an admissible cfg for
    which no set exists would raise InfeasibleError, which the admissibility
    theory rules out and the test suite checks by sampling.
    """
    n, s, kappa = cfg.n, cfg.s, cfg.kappa
    thr = kappa_threshold(cfg)
    if kappa <= thr:
        raise ValueError(f"kappa = {kappa} is not admissible (threshold {thr} for n={n}, s={s})")
    p, p_conj, kappa_conj = derived_exponents(s, kappa)
    sobolev = INF if n == 2 else Fraction(2 * n, n - 2)

    if n == 2:
        branch = "planar"
        q_sup = INF
        r_sup = INF
        q = p_conj + 1
        # r/q = max(1/2, 1 - 1/kappa') keeps theta = 1 - r/q below 2/kappa'
        # with at least half the available margin.
        r = q * max(Fraction(1, 2), 1 - 1 / kappa_conj)
    elif kappa >= 2:
        branch = "strong-damping"
        q_sup = sobolev
        r_sup = r_admissible_range(n, p, kappa).hi
        if not p_conj < sobolev:
            raise InfeasibleError(f"p' = {p_conj} not below 2n/(n-2) = {sobolev}")
        q = _mid_open(p_conj, sobolev)
        r_hi = min(q, r_sup) if not _is_inf(r_sup) else q
        r = _mid_open(Fraction(1), r_hi)
    else:
        # kappa in (1, 2) and n >= 3: one of the two low-damping windows is
        # open because kappa exceeds the min of their thresholds.
        c1_bound = (2 * (n - 1) * s + n) / Fraction(n) / s
        c2_bound = (2 * (n + 2) * s + 2 * n) / Fraction(n + 4) / s
        if kappa > c1_bound:
            branch = "subquadratic-a"
            q_sup = kappa * n / Fraction(n - 2)
            r_sup = Fraction(n, n - 2)
        elif kappa > c2_bound:
            branch = "subquadratic-b"
            den = (kappa * s - (s + 1)) * (kappa * n - (n + 4)) + n * (s + 1) - 4
            q_sup = _pos_div(kappa * kappa * n * s, den)
            r_den = n * (s + 1) - 2 * (kappa - 1) * s
            if r_den <= 0:
                raise InfeasibleError("signal-exponent cap has nonpositive denominator")
            r_sup = kappa * n * s / r_den
        else:  # pragma: no cover - excluded by the admissibility threshold
            raise InfeasibleError("kappa clears neither low-damping window")
        q_hi = min(sobolev, q_sup) if not _is_inf(q_sup) else sobolev
        if not p_conj < q_hi:
            raise InfeasibleError(f"empty q window (p' = {p_conj}, cap = {q_hi})")
        q = _mid_open(p_conj, q_hi)
        r_hi = min(q, r_sup) if not _is_inf(r_sup) else q
        # kappa' > 2 here, so kappa'*theta(q, r) < 2 is equivalent to
        # r > (kappa' - 2) / (kappa'/q - (n-2)/n); that denominator is
        # positive because q < kappa*n/(n-2) <= kappa'*n/(n-2).
        r_theta_den = kappa_conj / q - Fraction(n - 2, n)
        if r_theta_den <= 0:
            raise InfeasibleError("interpolation constraint unsatisfiable for chosen q")
        r_lo = max(Fraction(1), (kappa_conj - 2) / r_theta_den)
        if not r_lo < r_hi:
            raise InfeasibleError(f"empty r window ({r_lo}, {r_hi}) for q = {q}")
        r = _mid_open(r_lo, r_hi)

    th = theta(n, q, r)
    gamma = _gamma_pick(kappa_conj, th)
    out = ExponentSet(
        n=n, s=s, kappa=kappa, p=p, p_conj=p_conj, kappa_conj=kappa_conj,
        q=q, r=r, theta=th, gamma=gamma, q_sup=q_sup, r_sup=r_sup, branch=branch,
    )
    bad = out.violations()
    if bad:
        raise InfeasibleError("constructed set violates constraints: " + "; ".join(bad))
    return out


def _pair_admissible(n: int, kappa: Fraction, p_conj: Fraction, kappa_conj: Fraction,
                     rng: RInterval, q: Fraction, r: Fraction) -> bool:
    """Direct substitution of every selection constraint at one (q, r)."""
    if not q > p_conj:
        return False
    if not rng.contains(r):
        return False
    den = Fraction(1, n) - Fraction(1, 2) + 1 / r
    if den <= 0:
        return False
    th = (1 / r - 1 / q) / den
    if not (0 < th < 1):
        return False
    if not kappa_conj * th < 2:
        return False
    gamma = _gamma_pick(kappa_conj, th)
    return gamma > kappa_conj and th * gamma <= 2


def feasible_by_search(cfg: ParamConfig, grid_steps: int = 16) -> bool:
    """Brute-force feasibility oracle, independent of ``select_exponents``.

    Scans a rational lattice of (q, r) pairs over (p', p'+64] x [1, min(q, 64))
    and reports whether any pair satisfies all selection constraints by direct
    substitution.  The lattice mixes a uniform grid with dyadically graded
    points toward both interval ends, so narrow admissible windows near p'
    or near the r cap are still sampled.  A False answer is a statement about
    this lattice, not a proof of infeasibility.
    """
    if grid_steps < 10:
        raise ValueError(f"grid_steps must be >= 10, got {grid_steps}")
    n, s, kappa = cfg.n, cfg.s, cfg.kappa
    if kappa * s <= s + 1:
        return False  # p <= 1: conjugate exponent undefined, no candidate q
    p, p_conj, kappa_conj = derived_exponents(s, kappa)
    rng = r_admissible_range(n, p, kappa)

    span = Fraction(64)
    q_offsets = {span * j / grid_steps for j in range(1, grid_steps + 1)}
    q_offsets |= {span / Fraction(2) ** j for j in range(1, grid_steps + 1)}
    for q_off in sorted(q_offsets):
        q = p_conj + q_off
        r_top = min(q, Fraction(64))
        if r_top <= 1:
            continue
        width = r_top - 1
        r_vals = {Fraction(1) + width * i / grid_steps for i in range(grid_steps)}
        r_vals |= {r_top - width / Fraction(2) ** i for i in range(1, grid_steps + 1)}
        for r in sorted(r_vals):
            if not 1 <= r < r_top:
                continue
            if _pair_admissible(n, kappa, p_conj, kappa_conj, rng, q, r):
                return True
    return False


def mixed_norm_exponents(exps: ExponentSet) -> tuple[Fraction, Fraction]:
    """Strictly interior companion pair (p~, kappa~) in (1, p) x (1, kappa),
    used for mixed space-time norms of field differences: midpoints."""
    return (1 + exps.p) / 2, (1 + exps.kappa) / 2
