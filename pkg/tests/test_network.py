import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rdx.network import (MassKind, NetworkSyntaxError, Reaction, ReactionNetwork, Species,
                         classify_mass_condition, growth_constant, growth_exponent,
                         lipschitz_estimate, parse_network, reaction_rate, render_network, source)

ABC = "species A D=1.0\nspecies B D=0.5\nspecies C D=0.1\nA + B <-> C : kf=1.0, kb=0.5\n"
AB = "species A D=1\nspecies B D=1\nA <-> B : kf=1, kb=1\n"


@pytest.fixture
def abc():
    return parse_network(ABC)


# -- parsing ---------------------------------------------------------------

def test_parse_abc(abc):
    assert abc.names == ["A", "B", "C"]
    assert abc.n_reactions == 1
    r = abc.reactions[0]
    assert r.mu == (1, 1, 0) and r.nu == (0, 0, 1)
    assert r.kf == 1.0 and r.kb == 0.5
    assert abc.stoich[:, 0].tolist() == [-1, -1, 1]
    assert abc.diffusion.tolist() == [1.0, 0.5, 0.1]


def test_parse_no_reactions():
    net = parse_network("species A D=1.0")
    assert net.n_species == 1 and net.n_reactions == 0
    assert net.stoich.shape == (1, 0)


def test_unknown_species():
    with pytest.raises(NetworkSyntaxError, match="unknown species B") as ei:
        parse_network("species A D=1.0\nA + B -> C : kf=1.0")
    assert ei.value.line == 2
    assert ei.value.column == 5


@pytest.mark.parametrize("text, msg", [
    ("species A D=1\nspecies A D=2", "duplicate species"),
    ("species A D=1\nspecies B D=1\nA -> B : kf=-1", "negative rate constant"),
    ("species A D=1\nspecies B D=1\nA <-> B : kf=1, kb=-0.5", "negative rate constant"),
    ("species A D=1\nA + A -> 2A : kf=1", "identical sides"),
    ("species A D=1\nspecies B D=1\nA => B : kf=1", "expected '<->' or '->'"),
    ("species A D=1\nspecies B D=1\nA -> B kf=1", "expected ':'"),
    ("species A D=1\nspecies B D=1\nA -> B : kb=1", "missing kf"),
    ("species A D=1\nspecies B D=1\nA -> B : kf=1, kb=1", "irreversible"),
    ("species A D=0", "must be positive"),
    ("species 1A D=1", "expected 'species NAME D=FLOAT'"),
    ("species A D=1\nspecies B D=1\nA + -> B : kf=1", "malformed term"),
    ("species A D=1\nspecies B D=1\nA -> B : kf=1, kf=2", "given twice"),
    ("# only a comment\n", "no species"),
])
def test_parse_errors(text, msg):
    with pytest.raises(NetworkSyntaxError, match=msg):
        parse_network(text)


def test_syntax_error_position():
    with pytest.raises(NetworkSyntaxError) as ei:
        parse_network("species A D=1\nspecies B D=1\n\nA -> B : kf=-2")
    assert ei.value.line == 4
    assert ei.value.column == 13


def test_comments_coefficients_and_scientific():
    net = parse_network("""
        # a comment
        species X D=2.5e-1
        species Y_2 D=1E0
        2X + Y_2 <-> 3 Y_2 : kf=1e-2, kb=3.5
        X + X -> Y_2 : kf=.5
    """)
    assert net.diffusion.tolist() == [0.25, 1.0]
    assert net.reactions[0].mu == (2, 1) and net.reactions[0].nu == (0, 3)
    assert net.reactions[1].mu == (2, 0) and net.reactions[1].kb == 0.0
    assert net.stoich.tolist() == [[-2, -2], [2, 1]]


def test_species_declared_after_use():
    net = parse_network("A -> B : kf=1\nspecies B D=1\nspecies A D=2")
    assert net.names == ["B", "A"]
    assert net.reactions[0].mu == (0, 1)


def test_reaction_validation():
    with pytest.raises(ValueError):
        Reaction((1, 0), (1, 0), 1.0, 0.0)
    with pytest.raises(ValueError):
        Reaction((1, 0), (0, 1), 0.0, 0.0)
    with pytest.raises(ValueError):
        Species("A", 0, 0.0)
    with pytest.raises(ValueError):
        ReactionNetwork((Species("A", 1, 1.0),))


# -- evaluation ------------------------------------------------------------

def test_reaction_rate_examples(abc):
    # 1*2*3 - 0.5*4
    assert reaction_rate(abc, 0, [2, 3, 4]) == pytest.approx(4.0, abs=0)
    assert reaction_rate(abc, 0, [0, 0, 0]) == 0.0
    # detailed balance kf*A*B = kb*C
    assert reaction_rate(abc, 0, [1, 1, 2]) == 0.0


def test_reaction_rate_errors(abc):
    with pytest.raises(IndexError):
        reaction_rate(abc, 1, [1, 1, 1])
    with pytest.raises(ValueError, match="negative"):
        reaction_rate(abc, 0, [1, -1e-300, 1])
    with pytest.raises(ValueError):
        reaction_rate(abc, 0, [1, 1])


def test_zero_power_convention():
    net = parse_network("species A D=1\nspecies B D=1\n2A <-> B : kf=3, kb=2")
    # B does not appear on the left, so u_B = 0 must not zero the forward rate
    assert reaction_rate(net, 0, [2.0, 0.0]) == 12.0


def test_source_examples(abc):
    assert source(abc, [2, 3, 4]).tolist() == [-4.0, -4.0, 4.0]
    assert source(abc, [1, 1, 2]).tolist() == [0.0, 0.0, 0.0]
    ab = parse_network(AB)
    assert source(ab, [2, 0]).tolist() == [-2.0, 2.0]
    assert source(parse_network("species A D=1"), [3.0]).tolist() == [0.0]
    with pytest.raises(ValueError):
        source(abc, [1, 2])


def test_source_field_matches_pointwise(abc):
    rng = np.random.default_rng(1)
    u = rng.random((3, 7))
    field = abc.source_field(u)
    for k in range(7):
        np.testing.assert_array_equal(field[:, k], source(abc, u[:, k]))


@pytest.mark.parametrize("text, lam", [
    (ABC, 2),
    ("species A D=1\nspecies B D=1\nspecies C D=1\n2A + B <-> 3C : kf=1, kb=1", 3),
    (AB, 1),
    ("species A D=1", 1),
])
def test_growth_exponent(text, lam):
    assert growth_exponent(parse_network(text)) == lam


def test_classify_examples(abc):
    mc = classify_mass_condition(parse_network("species A D=1\nspecies B D=1\n2A <-> 2B : kf=1, kb=2"))
    assert mc.kind is MassKind.CONSERVED
    mc = classify_mass_condition(abc)
    assert mc.kind is MassKind.MASS_CONTROL
    assert (mc.c1, mc.c2) == (0.5, 0.0)
    mc = classify_mass_condition(parse_network("species A D=1\nspecies B D=1\nA + B -> 2A + 2B : kf=1"))
    assert mc.kind is MassKind.UNKNOWN
    assert mc.constants() is None


def test_classify_dissipative_and_constant_term():
    mc = classify_mass_condition(parse_network("species A D=1\nspecies B D=1\n2A -> B : kf=1"))
    assert mc.kind is MassKind.DISSIPATIVE
    assert mc.constants() == (0.0, 0.0)
    # backward monomial of a 2A -> B style reaction: sigma=-1, backward degree 1
    mc = classify_mass_condition(parse_network("species A D=1\nspecies B D=1\n2A <-> B : kf=1, kb=3"))
    assert (mc.kind, mc.c1, mc.c2) == (MassKind.MASS_CONTROL, 3.0, 0.0)
    assert classify_mass_condition(parse_network("species A D=1")).kind is MassKind.CONSERVED


# -- property tests --------------------------------------------------------

@st.composite
def networks(draw, max_species=4, max_reactions=3, max_coef=2):
    n = draw(st.integers(1, max_species))
    species = tuple(Species(f"S{i}", i, draw(st.floats(0.01, 2.0))) for i in range(n))
    m = draw(st.integers(0, max_reactions))
    reactions = []
    coef = st.lists(st.integers(0, max_coef), min_size=n, max_size=n)
    for _ in range(m):
        mu = draw(coef)
        nu = draw(coef.filter(lambda v, mu=mu: v != mu))
        kf = draw(st.floats(0.0, 3.0))
        kb = draw(st.floats(0.0, 3.0))
        if kf + kb == 0:
            kf = 1.0
        reactions.append(Reaction(tuple(mu), tuple(nu), kf, kb))
    return ReactionNetwork(species, tuple(reactions))


def _random_states(net, seed, count=200):
    rng = np.random.default_rng(seed)
    return 10.0 * rng.random((net.n_species, count))


@settings(max_examples=150, deadline=None)
@given(networks(), st.integers(0, 2**31 - 1))
def test_growth_bound(net, seed):
    u = _random_states(net, seed)
    f = net.source_field(u)
    lam = growth_exponent(net)
    C = growth_constant(net)
    bound = C[:, None] * np.maximum(1.0, np.linalg.norm(u, axis=0)) ** lam
    assert np.all(np.abs(f) <= bound * (1 + 1e-12))


@settings(max_examples=150, deadline=None)
@given(networks(), st.integers(0, 2**31 - 1))
def test_mass_condition_is_sound(net, seed):
    mc = classify_mass_condition(net)
    u = _random_states(net, seed)
    total = net.source_field(u).sum(axis=0)
    lam = growth_exponent(net)
    if mc.kind is MassKind.CONSERVED:
        scale = np.maximum(1.0, np.linalg.norm(u, axis=0)) ** lam * max(1.0, growth_constant(net).sum())
        assert np.all(np.abs(total) <= 1e-12 * scale)
    elif mc.kind is MassKind.DISSIPATIVE:
        assert np.all(total <= 1e-12 * np.maximum(1.0, np.abs(net.source_field(u)).sum(axis=0)))
    elif mc.kind is MassKind.MASS_CONTROL:
        slack = 1e-12 * np.maximum(1.0, np.abs(net.source_field(u)).sum(axis=0))
        assert np.all(total <= mc.c1 * u.sum(axis=0) + mc.c2 + slack)


@settings(max_examples=100, deadline=None)
@given(networks())
def test_render_roundtrip(net):
    assert parse_network(render_network(net)) == net


def test_classification_is_deterministic(abc):
    assert classify_mass_condition(abc) == classify_mass_condition(parse_network(ABC))


def _telescoped_difference(a, abar):
    # sum_m a_1..a_{m-1} (a_m - abar_m) abar_{m+1}..abar_I
    total = 0.0
    for m in range(len(a)):
        total += math.prod(a[:m]) * (a[m] - abar[m]) * math.prod(abar[m + 1:])
    return total


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-5, 5), min_size=n, max_size=n),
    st.lists(st.floats(-5, 5), min_size=n, max_size=n))))
def test_product_difference_identity(pair):
    a, abar = pair
    lhs = math.prod(a) - math.prod(abar)
    rhs = _telescoped_difference(a, abar)
    scale = max(1.0, sum(abs(x) for x in a + abar)) ** len(a)
    assert abs(lhs - rhs) <= 1e-12 * scale


def test_rate_difference_expansion(abc):
    # expanding R(u1) - R(u2) monomial by monomial via the telescoped identity
    rng = np.random.default_rng(3)
    for _ in range(50):
        u1, u2 = rng.random(3) * 4, rng.random(3) * 4
        r = abc.reactions[0]
        fw = _telescoped_difference([x for x, p in zip(u1, r.mu) for _ in range(p)],
                                    [x for x, p in zip(u2, r.mu) for _ in range(p)])
        bw = _telescoped_difference([x for x, p in zip(u1, r.nu) for _ in range(p)],
                                    [x for x, p in zip(u2, r.nu) for _ in range(p)])
        expanded = r.kf * fw - r.kb * bw
        direct = reaction_rate(abc, 0, u1) - reaction_rate(abc, 0, u2)
        assert expanded == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_lipschitz_estimate_linear():
    # f = [[-1, 1], [1, -1]] u has spectral norm 2
    L = lipschitz_estimate(parse_network(AB), 0.0, 3.0)
    assert L == pytest.approx(2.0, rel=1e-6)


def test_empty_complex():
    net = parse_network("species A D=1\n0 -> A : kf=0.25\nA -> 0 : kf=2")
    assert net.reactions[0].mu == (0,) and net.reactions[0].nu == (1,)
    assert source(net, [1.0]).tolist() == [0.25 - 2.0]
    mc = classify_mass_condition(net)
    assert (mc.kind, mc.c1, mc.c2) == (MassKind.MASS_CONTROL, 0.0, 0.25)
