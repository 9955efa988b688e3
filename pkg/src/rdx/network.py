"""Reversible mass-action reaction networks.

A network is a list of species (each with a diffusion coefficient) and a
list of reversible reactions

    mu_1j M_1 + ... + mu_Ij M_I  <=>  nu_1j M_1 + ... + nu_Ij M_I

with forward/backward rate constants kf_j, kb_j. The source term for
species i is f_i(u) = sum_j s_ij R_j(u) with s_ij = nu_ij - mu_ij and
R_j(u) = kf_j prod_m u_m^mu_mj - kb_j prod_m u_m^nu_mj.

Networks are read from a small line-oriented text format::

    # comment
    species A D=1.0
    species B D=0.5
    species C D=0.1
    A + B <-> C : kf=1.0, kb=0.5
    2A -> B : kf=0.3
    0 -> A : kf=0.1      # '0' is the empty complex
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

NAME_RE = r"[A-Za-z][A-Za-z0-9_]*"
FLOAT_RE = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"

_SPECIES_LINE = re.compile(rf"^species\s+(?P<name>{NAME_RE})\s+D\s*=\s*(?P<d>{FLOAT_RE})\s*$")
_TERM = re.compile(rf"^\s*(?P<coef>\d+)?\s*(?P<name>{NAME_RE})\s*$")
_RATE = re.compile(rf"^\s*(?P<key>kf|kb)\s*=\s*(?P<val>{FLOAT_RE})\s*$")


class NetworkSyntaxError(ValueError):
    """Raised for malformed reaction files; carries 1-based line/column."""

    def __init__(self, message: str, line: int, column: int = 1):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Species:
    name: str
    index: int
    diffusion: float

    def __post_init__(self):
        if not re.fullmatch(NAME_RE, self.name):
            raise ValueError(f"invalid species name {self.name!r}")
        if not self.diffusion > 0:
            raise ValueError(f"diffusion coefficient of {self.name} must be positive")


@dataclass(frozen=True)
class Reaction:
    mu: tuple[int, ...]
    nu: tuple[int, ...]
    kf: float
    kb: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(int(x) for x in self.mu))
        object.__setattr__(self, "nu", tuple(int(x) for x in self.nu))
        object.__setattr__(self, "kf", float(self.kf))
        object.__setattr__(self, "kb", float(self.kb))
        if len(self.mu) != len(self.nu):
            raise ValueError("mu and nu must have the same length")
        if any(x < 0 for x in self.mu + self.nu):
            raise ValueError("stoichiometric coefficients must be nonnegative")
        if self.mu == self.nu:
            raise ValueError("reaction has identical sides (mu == nu)")
        if self.kf < 0 or self.kb < 0:
            raise ValueError("negative rate constant")
        if not self.kf + self.kb > 0:
            raise ValueError("at least one of kf, kb must be positive")

    @property
    def forward_degree(self) -> int:
        return sum(self.mu)

    @property
    def backward_degree(self) -> int:
        return sum(self.nu)

    @property
    def reversible(self) -> bool:
        return self.kf > 0 and self.kb > 0


@dataclass(frozen=True)
class ReactionNetwork:
    species: tuple[Species, ...]
    reactions: tuple[Reaction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "species", tuple(self.species))
        object.__setattr__(self, "reactions", tuple(self.reactions))
        if not self.species:
            raise ValueError("a network needs at least one species")
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError("duplicate species names")
        for i, s in enumerate(self.species):
            if s.index != i:
                raise ValueError(f"species {s.name} has index {s.index}, expected {i}")
        for r in self.reactions:
            if len(r.mu) != len(self.species):
                raise ValueError("reaction stoichiometry does not match species count")

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.species]

    @property
    def diffusion(self) -> np.ndarray:
        return np.array([s.diffusion for s in self.species])

    @cached_property
    def mu(self) -> np.ndarray:
        """Forward stoichiometry, shape (I, J)."""
        return np.array([r.mu for r in self.reactions], dtype=int).reshape(-1, self.n_species).T

    @cached_property
    def nu(self) -> np.ndarray:
        """Backward stoichiometry, shape (I, J)."""
        return np.array([r.nu for r in self.reactions], dtype=int).reshape(-1, self.n_species).T

    @cached_property
    def stoich(self) -> np.ndarray:
        """Stoichiometric matrix S with s_ij = nu_ij - mu_ij, shape (I, J)."""
        return self.nu - self.mu

    @cached_property
    def _kf(self) -> np.ndarray:
        return np.array([r.kf for r in self.reactions], dtype=float)

    @cached_property
    def _kb(self) -> np.ndarray:
        return np.array([r.kb for r in self.reactions], dtype=float)

    def index_of(self, name: str) -> int:
        for s in self.species:
            if s.name == name:
                return s.index
        raise KeyError(name)

    def rates(self, u: np.ndarray) -> np.ndarray:
        """Reaction rates R_j for nonnegative u of shape (I, ...); returns (J, ...).

        No input checking: callers pass clipped states.
        """
        u = np.asarray(u, dtype=float)
        out = np.empty((self.n_reactions,) + u.shape[1:])
        for j, r in enumerate(self.reactions):
            out[j] = r.kf * _monomial(u, r.mu) - r.kb * _monomial(u, r.nu)
        return out

    def source_field(self, u: np.ndarray) -> np.ndarray:
        """f(u) = S R(u) for u of shape (I, ...), unchecked."""
        u = np.asarray(u, dtype=float)
        if self.n_reactions == 0:
            return np.zeros_like(u)
        return np.tensordot(self.stoich.astype(float), self.rates(u), axes=(1, 0))


def _monomial(u: np.ndarray, powers: Sequence[int]) -> np.ndarray:
    # zero exponents are skipped, so 0**0 contributes a factor 1
    out = np.ones(u.shape[1:])
    for m, p in enumerate(powers):
        if p == 1:
            out = out * u[m]
        elif p > 1:
            out = out * u[m] ** p
    return out


# ---------------------------------------------------------------------------
# parsing / rendering


def parse_network(text: str) -> ReactionNetwork:
    """Parse the reaction file format into a ReactionNetwork.

    Species may be declared anywhere in the file; their order of declaration
    fixes their index. Errors raise NetworkSyntaxError with the line and
    column of the offending token.
    """
    species: list[Species] = []
    index: dict[str, int] = {}
    reaction_lines: list[tuple[int, str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        indent = len(raw) - len(raw.lstrip())
        if re.match(r"species\b", stripped):
            m = _SPECIES_LINE.match(stripped)
            if not m:
                raise NetworkSyntaxError(
                    "expected 'species NAME D=FLOAT'", lineno, indent + 1
                )
            name = m.group("name")
            if name in index:
                raise NetworkSyntaxError(
                    f"duplicate species declaration {name}", lineno, indent + m.start("name") + 1
                )
            d = float(m.group("d"))
            if not d > 0:
                raise NetworkSyntaxError(
                    f"diffusion coefficient of {name} must be positive", lineno, indent + m.start("d") + 1
                )
            index[name] = len(species)
            species.append(Species(name, len(species), d))
        else:
            reaction_lines.append((lineno, raw, indent))

    if not species:
        raise NetworkSyntaxError("no species declared", 1)

    reactions = [_parse_reaction(raw, lineno, index) for lineno, raw, _ in reaction_lines]
    return ReactionNetwork(tuple(species), tuple(reactions))


def _parse_reaction(raw: str, lineno: int, index: dict[str, int]) -> Reaction:
    if ":" not in raw:
        raise NetworkSyntaxError("expected ':' followed by rate constants", lineno, len(raw) + 1)
    colon = raw.index(":")
    lhs_rhs, rates_txt = raw[:colon], raw[colon + 1:]

    if "<->" in lhs_rhs:
        arrow, reversible = "<->", True
    elif "->" in lhs_rhs:
        arrow, reversible = "->", False
    else:
        raise NetworkSyntaxError("expected '<->' or '->'", lineno, 1)
    a = lhs_rhs.index(arrow)
    left_txt, right_txt = lhs_rhs[:a], lhs_rhs[a + len(arrow):]
    n = len(index)
    mu = _parse_side(left_txt, 0, lineno, index, n)
    nu = _parse_side(right_txt, a + len(arrow), lineno, index, n)

    rates: dict[str, float] = {}
    offset = colon + 1
    for part in rates_txt.split(","):
        m = _RATE.match(part)
        if not m:
            raise NetworkSyntaxError("expected 'kf=FLOAT[, kb=FLOAT]'", lineno, offset + 1)
        key = m.group("key")
        if key in rates:
            raise NetworkSyntaxError(f"{key} given twice", lineno, offset + m.start("key") + 1)
        val = float(m.group("val"))
        if val < 0:
            raise NetworkSyntaxError(f"negative rate constant {key}={val}", lineno, offset + m.start("val") + 1)
        rates[key] = val
        offset += len(part) + 1
    if "kf" not in rates:
        raise NetworkSyntaxError("missing kf", lineno, colon + 2)
    if "kb" in rates and not reversible:
        raise NetworkSyntaxError("kb given for irreversible '->' reaction", lineno, colon + 2)
    if reversible and "kb" not in rates:
        raise NetworkSyntaxError("reversible '<->' reaction needs kb", lineno, colon + 2)

    if mu == nu:
        raise NetworkSyntaxError("reaction has identical sides", lineno, 1)
    try:
        return Reaction(tuple(mu), tuple(nu), rates["kf"], rates.get("kb", 0.0))
    except ValueError as exc:
        raise NetworkSyntaxError(str(exc), lineno, 1) from None


def _parse_side(txt: str, offset: int, lineno: int, index: dict[str, int], n: int) -> list[int]:
    coeffs = [0] * n
    if not txt.strip():
        raise NetworkSyntaxError("empty reaction side (write 0 for no species)", lineno, offset + 1)
    if txt.strip() == "0":
        return coeffs
    pos = offset
    for term in txt.split("+"):
        m = _TERM.match(term)
        if not m:
            raise NetworkSyntaxError(f"malformed term {term.strip()!r}", lineno, pos + 1)
        name = m.group("name")
        if name not in index:
            raise NetworkSyntaxError(f"unknown species {name}", lineno, pos + m.start("name") + 1)
        coeffs[index[name]] += int(m.group("coef") or 1)
        pos += len(term) + 1
    return coeffs


def render_network(network: ReactionNetwork) -> str:
    """Canonical text form; parse_network(render_network(n)) == n."""
    lines = [f"species {s.name} D={s.diffusion!r}" for s in network.species]
    names = network.names

    def side(coeffs):
        terms = []
        for name, c in zip(names, coeffs):
            if c == 1:
                terms.append(name)
            elif c > 1:
                terms.append(f"{c}{name}")
        return " + ".join(terms) or "0"

    for r in network.reactions:
        if r.kb > 0:
            lines.append(f"{side(r.mu)} <-> {side(r.nu)} : kf={r.kf!r}, kb={r.kb!r}")
        else:
            lines.append(f"{side(r.mu)} -> {side(r.nu)} : kf={r.kf!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# evaluation


def _check_state(network: ReactionNetwork, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (network.n_species,):
        raise ValueError(f"expected a vector of {network.n_species} concentrations, got shape {u.shape}")
    return u


def reaction_rate(network: ReactionNetwork, j: int, u) -> float:
    """Net rate R_j(u) = kf prod u^mu - kb prod u^nu of reaction ``j``."""
    if not 0 <= j < network.n_reactions:
        raise IndexError(f"reaction index {j} out of range")
    u = _check_state(network, u)
    if np.any(u < 0):
        raise ValueError("negative concentration; clip before evaluating rates")
    r = network.reactions[j]
    return float(r.kf * _monomial(u[:, None], r.mu)[0] - r.kb * _monomial(u[:, None], r.nu)[0])


def source(network: ReactionNetwork, u) -> np.ndarray:
    """Species production rates f(u) = S R(u)."""
    u = _check_state(network, u)
    return network.source_field(u[:, None])[:, 0]


def growth_exponent(network: ReactionNetwork) -> int:
    """Largest total degree over both sides of all reactions (1 if none)."""
    if not network.reactions:
        return 1
    return max(max(r.forward_degree, r.backward_degree) for r in network.reactions)


def growth_constant(network: ReactionNetwork) -> np.ndarray:
    """Per-species C_i = sum_j |s_ij| (kf_j + kb_j) so |f_i(u)| <= C_i max(1,|u|)^lambda."""
    if not network.reactions:
        return np.zeros(network.n_species)
    return np.abs(network.stoich) @ (network._kf + network._kb)


class MassKind(str, Enum):
    CONSERVED = "Conserved"
    DISSIPATIVE = "Dissipative"
    MASS_CONTROL = "MassControl"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class MassCondition:
    kind: MassKind
    c1: Optional[float] = None
    c2: Optional[float] = None

    def __post_init__(self):
        has = self.c1 is not None and self.c2 is not None
        if has != (self.kind is MassKind.MASS_CONTROL):
            raise ValueError("c1/c2 are present iff kind is MassControl")

    def constants(self) -> Optional[tuple[float, float]]:
        """(C1, C2) with sum f <= C1 sum u + C2, or None when not established."""
        if self.kind is MassKind.MASS_CONTROL:
            return self.c1, self.c2
        if self.kind is MassKind.UNKNOWN:
            return None
        return 0.0, 0.0

    def __str__(self):
        if self.kind is MassKind.MASS_CONTROL:
            return f"MassControl C1={self.c1:g} C2={self.c2:g}"
        return self.kind.value


def classify_mass_condition(network: ReactionNetwork) -> MassCondition:
    """Sufficient-condition classifier for the mass-control bound.

    sum_i f_i = sum_j sigma_j (kf_j u^mu_j - kb_j u^nu_j) with
    sigma_j = sum_i s_ij. Only monomials with a positive coefficient can make
    the total mass grow; if all of them have total degree <= 1 they are
    bounded by sum_i u_i (degree 1) or a constant (degree 0).
    """
    if network.n_reactions == 0:
        return MassCondition(MassKind.CONSERVED)
    sigma = network.stoich.sum(axis=0)
    if np.all(sigma == 0):
        return MassCondition(MassKind.CONSERVED)

    positive: list[tuple[int, float]] = []  # (degree, coefficient)
    for s, r in zip(sigma, network.reactions):
        if s > 0 and r.kf > 0:
            positive.append((r.forward_degree, s * r.kf))
        elif s < 0 and r.kb > 0:
            positive.append((r.backward_degree, -s * r.kb))

    if not positive:
        return MassCondition(MassKind.DISSIPATIVE)
    if any(deg > 1 for deg, _ in positive):
        return MassCondition(MassKind.UNKNOWN)
    c1 = float(sum(c for deg, c in positive if deg == 1))
    c2 = float(sum(c for deg, c in positive if deg == 0))
    return MassCondition(MassKind.MASS_CONTROL, c1, c2)


def lipschitz_estimate(network: ReactionNetwork, lo, hi, samples: int = 500, seed: int = 0) -> float:
    """Sampled Lipschitz constant of f on the box [lo, hi] in the Euclidean norm.

    On a convex set the constant is sup ||Df||_2; we take the max of the
    spectral norm of a central-difference Jacobian over random points of
    the box and its corners. This is an estimate from below.
    """
    n = network.n_species
    rng = np.random.default_rng(seed)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,))
    corners = np.array(np.meshgrid(*[[a, b] for a, b in zip(lo, hi)], indexing="ij")).reshape(n, -1)
    pts = np.concatenate([corners, lo[:, None] + (hi - lo)[:, None] * rng.random((n, samples))], axis=1)
    h = 1e-6 * max(1.0, float(np.max(np.abs(hi))))
    jac = np.empty((pts.shape[1], n, n))
    for m in range(n):
        e = np.zeros((n, 1))
        e[m] = h
        # one-sided at the lower face so points stay in the nonnegative orthant
        lo_pt = np.maximum(pts - e, 0.0)
        jac[:, :, m] = ((network.source_field(pts + e) - network.source_field(lo_pt)) / (pts + e - lo_pt)[m]).T
    return float(np.max(np.linalg.norm(jac, ord=2, axis=(1, 2))))
