import itertools

import numpy as np
import pytest

from lawvere.algebra import (
    Relation,
    algebra_homs,
    congruence_quotient,
    find_algebra_iso,
    free_algebra,
    is_homomorphism,
    present,
)
from lawvere.site import NotConverged
from lawvere.theory import BUILTIN_THEORIES, f_q_theory

# free algebra on k generators, counted by hand for each clone
FREE_SIZES = {
    "f2": lambda k: 2 ** k,
    "semilattice": lambda k: 2 ** k,
    "pointed": lambda k: k + 1,
    "degenerate": lambda k: k,
    "lz-action": lambda k: 3 * k,
}


@pytest.mark.parametrize("name", sorted(FREE_SIZES))
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_free_sizes(name, k):
    t = BUILTIN_THEORIES[name](3)
    a = free_algebra(t, k).algebra
    assert a.size == FREE_SIZES[name](k)
    assert a.check(full=True) == []


@pytest.mark.parametrize("name", ["f2", "semilattice"])
def test_binary_truncation_has_no_finite_free_model_on_three(name):
    # with only binary operations associativity is not an equation of the
    # truncated theory, so the free model on three generators is infinite
    t = BUILTIN_THEORIES[name](2)
    assert free_algebra(t, 2).algebra.size == 4
    with pytest.raises(NotConverged):
        free_algebra(t, 3, bound=8)


def test_free_f2_at_three_on_four_generators():
    a = free_algebra(f_q_theory(2, 3), 4).algebra
    assert a.size == 16 and a.check() == []


def f2_vectors(k):
    """Oracle: the vectors of F_2^k."""
    t = f_q_theory(2, 3)
    vecs = list(itertools.product((0, 1), repeat=k))
    return t, vecs


def test_free_f2_matches_vector_oracle():
    t, vecs = f2_vectors(3)
    p = free_algebra(t, 3)
    a = p.algebra
    plus = t.category.hom(1, 2)[3]  # coefficients (1, 1)
    # send generator i to the i-th unit vector and extend by the operations
    unit = {p.generator_map[i]: tuple(int(j == i) for j in range(3)) for i in range(3)}
    value = dict(unit)
    while len(value) < a.size:
        for x, y in itertools.product(list(value), repeat=2):
            z = a.apply(plus, (x, y))
            value.setdefault(z, tuple((u + v) % 2 for u, v in zip(value[x], value[y])))
    assert sorted(value.values()) == vecs
    # the labelling is additive on every pair
    for x, y in itertools.product(range(a.size), repeat=2):
        assert value[a.apply(plus, (x, y))] == tuple((u + v) % 2 for u, v in zip(value[x], value[y]))


def test_plane_mod_generators_is_line():
    t = f_q_theory(2, 2)
    p = free_algebra(t, 2)
    g1, g2 = p.generator_map
    q = congruence_quotient(p.algebra, [(g1, g2)])
    assert q.algebra.size == 2
    assert q.algebra.check(full=True) == []
    assert is_homomorphism(p.algebra, q.algebra, q.map)


def test_empty_relation_gives_isomorphic_algebra():
    t = f_q_theory(2, 2)
    a = free_algebra(t, 2).algebra
    q = congruence_quotient(a, [])
    assert q.algebra.size == a.size
    assert find_algebra_iso(a, q.algebra) is not None


def test_quotient_universal_property():
    t = BUILTIN_THEORIES["semilattice"](2)
    a = free_algebra(t, 2).algebra
    b = free_algebra(t, 1).algebra
    pairs = [(1, 2)]
    q = congruence_quotient(a, pairs)
    through = {tuple(h[x] for x in q.map) for h in algebra_homs(q.algebra, b)}
    direct = {h for h in algebra_homs(a, b) if all(h[x] == h[y] for x, y in pairs)}
    assert through == direct
    assert len(through) == len(list(algebra_homs(q.algebra, b)))


def test_presented_relations():
    # one generator g with g + g = g collapses F_2 to the zero space
    t = f_q_theory(2, 2)
    plus = t.category.hom(1, 2)[3]
    p = present(t, 1, [Relation(plus, (0, 0), 0)])
    assert p.algebra.size == 1


def test_hom_counts_between_free_f2():
    # hom(F_2^j, F_2^k) has 2^(j k) elements
    t = f_q_theory(2, 2)
    for j in range(3):
        for k in range(3):
            a, b = free_algebra(t, j).algebra, free_algebra(t, k).algebra
            assert len(list(algebra_homs(a, b))) == 2 ** (j * k)


def test_element_budget_raises():
    t = f_q_theory(2, 3)
    with pytest.raises(NotConverged):
        free_algebra(t, 4, max_elements=50)


def test_check_detects_broken_table():
    a = free_algebra(f_q_theory(2, 2), 2).algebra
    ev = a.ev.copy()
    ev[5, -1] = (ev[5, -1] + 1) % a.size
    from lawvere.algebra import FiniteAlgebra
    broken = FiniteAlgebra(a.theory, a.size, ev)
    assert broken.check(full=True) != []
    assert np.array_equal(a.ev, free_algebra(f_q_theory(2, 2), 2).algebra.ev)
