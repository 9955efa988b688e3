"""Computable pieces of the global-existence argument.

Exponent bootstrap, the integrability threshold, the interpolation bound for
the maximal-regularity constant, the choice of dual exponent p' in [3/2, 2],
and the Gronwall envelope for the total mass.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .network import ReactionNetwork, classify_mass_condition, growth_exponent

_STAGNATION_RTOL = 1e-12


def admissible_p_threshold(n: int, lam: float) -> float:
    """(lambda - 1)(n + 2)/2; integrability exponents p above it bootstrap to L^inf."""
    if n < 1 or lam < 1:
        raise ValueError("need n >= 1 and lambda >= 1")
    return (lam - 1) * (n + 2) / 2


@dataclass
class BootstrapReport:
    p0: float
    n: int
    lam: float
    sequence: list[float]
    k0: Optional[int]
    diverged: bool
    above_threshold: bool

    def summary(self) -> str:
        seq = " → ".join(f"{p:g}" for p in self.sequence)
        if self.diverged:
            return f"{seq}, k0={self.k0}, diverged"
        return f"{seq}, stalled (no k0), not diverged"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["summary"] = self.summary()
        return d


def bootstrap_sequence(p0: float, n: int, lam: float, max_iter: int = 1000) -> BootstrapReport:
    """Iterate p_{k+1} = (n+2)(p_k/lam) / (n+2 - 2 p_k/lam).

    Stops once p_k/lam > (n+2)/2 (diverged, k0 = k), when the sequence stops
    increasing, or after ``max_iter`` steps. Starting points at or below the
    threshold are not an error: the report just comes back with
    ``diverged=False``.
    """
    if not p0 > 1:
        raise ValueError("p0 must be > 1")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    half = (n + 2) / 2
    seq = [float(p0)]
    k0 = None
    diverged = False
    for _ in range(max_iter):
        p = seq[-1]
        if p / lam > half:
            k0 = len(seq) - 1
            diverged = True
            break
        denom = n + 2 - 2 * p / lam
        nxt = math.inf if denom <= 0 else (n + 2) * (p / lam) / denom
        seq.append(nxt)
        if nxt <= p * (1 + _STAGNATION_RTOL):
            break
    else:
        if seq[-1] / lam > half:
            k0, diverged = len(seq) - 1, True
    return BootstrapReport(float(p0), n, lam, seq, k0, diverged,
                           p0 > admissible_p_threshold(n, lam))


def cmr_interpolation_bound(r: float, mr: float, c_three_halves: float) -> float:
    """mr^{-(4/r)(r-3/2)} * C(3/2)^{(3/r)(2-r)} for r in [3/2, 2]."""
    if not 1.5 <= r <= 2.0:
        raise ValueError("r must lie in [3/2, 2]")
    if not (mr > 0 and c_three_halves > 0):
        raise ValueError("mr and C(3/2) must be positive")
    if r == 1.5:
        return float(c_three_halves)
    if r == 2.0:
        return 1.0 / mr
    return mr ** (-(4.0 / r) * (r - 1.5)) * c_three_halves ** ((3.0 / r) * (2.0 - r))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open))

    def __contains__(self, x: float) -> bool:
        if self.empty:
            return False
        above = x > self.lo if self.lo_open else x >= self.lo
        below = x < self.hi if self.hi_open else x <= self.hi
        return above and below

    def to_dict(self) -> dict:
        if self.empty:
            return {"empty": True}
        return {"empty": False, "lo": self.lo, "hi": self.hi,
                "lo_open": self.lo_open, "hi_open": self.hi_open}

    def __str__(self) -> str:
        if self.empty:
            return "∅"
        return f"{'(' if self.lo_open else '['}{self.lo:g}, {self.hi:g}{')' if self.hi_open else ']'}"


EMPTY = Interval(1.0, 0.0)
FULL = Interval(1.5, 2.0)


@dataclass
class DualExponentWindow:
    d_max: float
    c_three_halves: float
    window: Interval
    branch_window: Interval
    branch: str
    empirical: bool = True

    def to_dict(self) -> dict:
        return {
            "d_max": self.d_max,
            "c_three_halves": self.c_three_halves,
            "window": self.window.to_dict(),
            "window_str": str(self.window),
            "branch_window": self.branch_window.to_dict(),
            "branch": self.branch,
            "empirical": self.empirical,
        }


def dual_exponent_lhs(p_prime: float, d_max: float, c_three_halves: float) -> float:
    """(3/p')(2-p') ln(D C(3/2)) - ln D with D = d_max/2; admissible iff < 0."""
    D = d_max / 2
    return (3.0 / p_prime) * (2.0 - p_prime) * math.log(D * c_three_halves) - math.log(D)


def select_dual_exponent(d_max: float, c_three_halves: float) -> DualExponentWindow:
    """Exponents p' in [3/2, 2] for which the interpolation bound is < 1.

    ``window`` is the exact solution set of (3/p')(2-p') ln q < ln D with
    D = d_max/2 and q = D C(3/2). ``branch_window`` applies the simpler
    one-sided rules 2-p' < ln D/(2 ln q) (q > 1) and 2-p' > 2 ln D/(3 ln q)
    (q < 1), which are sufficient and always lie inside ``window``.
    """
    if not (d_max > 0 and c_three_halves > 0):
        raise ValueError("d_max and C(3/2) must be positive")
    D = d_max / 2
    lnD = math.log(D)
    lnq = math.log(D * c_three_halves)

    # h(p') = 6/p' - 3 decreases from 1 at p'=3/2 to 0 at p'=2;
    # the condition is h(p') * lnq < lnD.
    if lnq == 0.0:
        window = FULL if lnD > 0 else EMPTY
        return DualExponentWindow(d_max, c_three_halves, window, EMPTY, "boundary q=1")

    rho = lnD / lnq
    if lnq > 0:
        # h < rho  <=>  p' > 6/(3 + rho)
        window = EMPTY if rho <= 0 else _clip(Interval(6.0 / (3.0 + rho), 2.0, lo_open=True))
        # 2 - p' < rho/2
        branch = EMPTY if rho <= 0 else _clip(Interval(2.0 - rho / 2, 2.0, lo_open=True))
        return DualExponentWindow(d_max, c_three_halves, window, branch, "q>1")

    # lnq < 0: h > rho
    if rho < 0:
        window = FULL
    elif rho >= 1:
        window = EMPTY
    else:
        window = _clip(Interval(1.5, 6.0 / (3.0 + rho), hi_open=True))
    # 2 - p' > 2 rho / 3
    branch = _clip(Interval(1.5, 2.0 - 2.0 * rho / 3, hi_open=True))
    return DualExponentWindow(d_max, c_three_halves, window, branch, "q<1")


def _clip(iv: Interval) -> Interval:
    lo, lo_open = (iv.lo, iv.lo_open) if iv.lo > 1.5 else (1.5, iv.lo_open and iv.lo == 1.5)
    hi, hi_open = (iv.hi, iv.hi_open) if iv.hi < 2.0 else (2.0, iv.hi_open and iv.hi == 2.0)
    out = Interval(lo, hi, lo_open, hi_open)
    return EMPTY if out.empty else out


def gronwall_mass_bound(c1: float, c2: float, m0: float, domain_volume: float,
                        boundary_inflow_rate: float, t: float) -> float:
    """Solution of m' = c1 m + (c2 |Omega| + B), m(0) = m0, at time t.

    e^{c1 t} m0 + (c2 |Omega| + B) (e^{c1 t} - 1)/c1, with the c1 -> 0 limit
    m0 + (c2 |Omega| + B) t.
    """
    if c1 < 0 or m0 < 0 or t < 0:
        raise ValueError("need c1 >= 0, m0 >= 0, t >= 0")
    beta = c2 * domain_volume + boundary_inflow_rate
    if c1 == 0.0:
        return m0 + beta * t
    return math.exp(c1 * t) * m0 + beta * math.expm1(c1 * t) / c1


@dataclass
class PreconditionReport:
    lam: int
    n: int
    p: float
    threshold: float
    p_exceeds_threshold: bool
    p_prime: float
    empirical_cmr: Optional[float] = None
    cmr_below_one: Optional[bool] = None
    mass_condition: str = ""
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


def check_preconditions(network: ReactionNetwork, n: int, p: float,
                        empirical_cmr: Optional[float] = None) -> PreconditionReport:
    """Collect lambda, the p-threshold, the conjugate p' and the C_mr(p') < 1 test."""
    if not p > 1:
        raise ValueError("p must be > 1 (conjugate exponent undefined)")
    lam = growth_exponent(network)
    thr = admissible_p_threshold(n, lam)
    rep = PreconditionReport(lam, n, p, thr, p > thr, p / (p - 1),
                             mass_condition=str(classify_mass_condition(network)))
    if empirical_cmr is not None:
        rep.empirical_cmr = float(empirical_cmr)
        rep.cmr_below_one = empirical_cmr < 1
        rep.notes.append("C_mr value is empirical (a lower estimate)")
    return rep
