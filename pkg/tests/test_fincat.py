import itertools

import pytest
from hypothesis import given, settings, strategies as st

from lawvere.fincat import (
    Bifunctor,
    Diagram,
    FinCategory,
    FinFunctor,
    check_category,
    coend_of,
    colimit,
    constant_presheaf,
    count_homs,
    discrete_category,
    empty_presheaf,
    end_of,
    find_iso,
    function_category,
    functor_to_terminal,
    homs,
    identity_functor,
    lan,
    limit,
    poset_category,
    product_category,
    representable,
    restrict,
    ran,
    terminal_category,
    twisted_codiagram,
    twisted_diagram,
)


def arrow_category():
    # 0 -> 1 with a single arrow
    return poset_category(["a", "b"], lambda i, j: i <= j)


def span_category():
    # two arrows out of a common source: l <- m -> r
    objs = ["l", "m", "r"]
    arrows = [("idl", 0, 0), ("idm", 1, 1), ("idr", 2, 2), ("p", 1, 0), ("q", 1, 2)]
    comp = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 3): 3, (3, 1): 3, (2, 4): 4, (4, 1): 4}
    return FinCategory(objs, arrows, [0, 1, 2], comp, name="span")


def idempotent_monoid():
    # one object, arrows id and e with e.e = e
    return FinCategory(["*"], [("id", 0, 0), ("e", 0, 0)], [0], {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 1})


def test_terminal_category_is_valid():
    assert check_category(terminal_category()) == []


def test_wrong_target_reported_as_endpoint():
    c = arrow_category()
    bad = FinCategory(c.objects, list(zip(c.arrow_names, c.src, c.tgt)), c.identities,
                      {(1, 1): 1, (2, 2): 2, (2, 1): 1, (1, 0): 1, (0, 0): 0}, name="bad")
    # (id_b, f) should be f, but the table points at id_a-shaped arrow 0 -> 0
    bad._table[2, 1] = 0
    kinds = [v.kind for v in check_category(bad)]
    assert kinds.count("endpoint") == 1


def test_missing_composite_is_distinct_kind():
    c = arrow_category()
    table = dict(c._table)
    del table[2, 1]
    bad = FinCategory(c.objects, list(zip(c.arrow_names, c.src, c.tgt)), c.identities, table)
    assert "missing_composite" in {v.kind for v in check_category(bad)}


def test_function_category_on_small_sets():
    c = function_category([0, 1, 2])
    assert c.n_arrows == 11
    assert check_category(c) == []
    big = function_category([1, 2, 3])
    assert check_category(big) == []
    assert sum(len(big.hom(a, 2)) for a in range(3)) == 39


def test_product_and_opposite_are_categories():
    c = product_category(arrow_category(), span_category())
    assert check_category(c) == []
    assert check_category(span_category().opposite()) == []


# ----------------------------------------------------------------- limits


def discrete_diagram(sizes):
    return Diagram(discrete_category([str(i) for i in range(len(sizes))]), list(sizes),
                   [tuple(range(s)) for s in sizes])


def test_empty_limit_is_singleton():
    empty = FinCategory([], [], [], {})
    assert limit(Diagram(empty, [], [])).size == 1
    assert colimit(Diagram(empty, [], [])).size == 0


def test_product_cardinality():
    assert limit(discrete_diagram([2, 3])).size == 6


def parallel_pair():
    objs = ["s", "t"]
    arrows = [("ids", 0, 0), ("idt", 1, 1), ("f", 0, 1), ("g", 0, 1)]
    comp = {(0, 0): 0, (1, 1): 1, (2, 0): 2, (3, 0): 3, (1, 2): 2, (1, 3): 3}
    return FinCategory(objs, arrows, [0, 1], comp)


def test_equalizer():
    d = Diagram(parallel_pair(), [3, 2], [(0, 1, 2), (0, 1), (0, 1, 1), (0, 0, 1)])
    lim = limit(d)
    assert lim.projection(0) == (0, 2)


def test_limit_cone_is_universal():
    d = Diagram(parallel_pair(), [3, 2], [(0, 1, 2), (0, 1), (0, 1, 1), (0, 0, 1)])
    lim = limit(d)
    # every cone from a 2-element apex factors uniquely
    for a0 in itertools.product(range(3), repeat=2):
        legs = [a0, tuple(d.maps[2][x] for x in a0)]
        fac = lim.factor(legs)
        ok = all(d.maps[2][x] == d.maps[3][x] for x in a0)
        assert (fac is not None) == ok
        if ok:
            assert tuple(lim.families[i][0] for i in fac) == a0


def components_oracle(p):
    """Connected components of the category of elements by DFS."""
    cat = p.category
    nodes = list(p.elements())
    adj = {n: set() for n in nodes}
    for f in range(cat.n_arrows):
        for x in range(p.sizes[cat.tgt[f]]):
            a, b = (cat.tgt[f], x), (cat.src[f], p.actions[f][x])
            adj[a].add(b)
            adj[b].add(a)
    seen, count = set(), 0
    for n in nodes:
        if n in seen:
            continue
        count += 1
        stack = [n]
        while stack:
            m = stack.pop()
            if m not in seen:
                seen.add(m)
                stack.extend(adj[m])
    return count


def limit_oracle(p):
    cat = p.category
    count = 0
    for fam in itertools.product(*[range(s) for s in p.sizes]):
        if all(p.actions[f][fam[cat.tgt[f]]] == fam[cat.src[f]] for f in range(cat.n_arrows)):
            count += 1
    return count


def sample_presheaves():
    fs = function_category([0, 1, 2])
    yield representable(fs, 1)
    yield representable(fs, 2)
    yield constant_presheaf(fs, "ab")
    span = span_category()
    yield representable(span, 1)
    # l = {0,1}, m = {0,1,2}, r = {0}; restriction along p is 0,1 -> 0,2 and along q is 0 -> 1
    yield type(representable(span, 0))(span, [2, 3, 1], [(0, 1), (0, 1, 2), (0,), (0, 2), (1,)])
    yield representable(idempotent_monoid(), 0)
    yield empty_presheaf(span)


@pytest.mark.parametrize("p", list(sample_presheaves()))
def test_kan_along_terminal_functor(p):
    assert p.check() == []
    t = functor_to_terminal(p.category)
    assert lan(t, p).presheaf.sizes == [components_oracle(p)]
    assert ran(t, p).presheaf.sizes == [limit_oracle(p)]


@pytest.mark.parametrize("p", list(sample_presheaves()))
def test_kan_along_identity(p):
    f = identity_functor(p.category)
    for ext in (lan(f, p), ran(f, p)):
        assert ext.presheaf.check() == []
        assert find_iso(ext.presheaf, p) is not None


def test_lan_unit_is_natural_and_iso_for_identity():
    p = representable(span_category(), 1)
    res = lan(identity_functor(p.category), p)
    assert res.unit.check() == []
    assert res.unit.is_iso()


def inclusion_functor():
    """The arrow category ``a -> b`` into the function category on {0,1,2} as ``1 -> 2``."""
    src = arrow_category()
    dst = function_category([0, 1, 2])
    f1 = dst.hom(1, 2)[0]
    return FinFunctor(src, dst, [1, 2], [dst.identities[1], f1, dst.identities[2]])


def yoneda_cases():
    f = inclusion_functor()
    yield f
    span = span_category()
    # collapse the span onto the arrow category: l, r -> b, m -> a
    arr = arrow_category()
    yield FinFunctor(span, arr, [1, 0, 1], [2, 0, 2, 1, 1])
    yield functor_to_terminal(function_category([0, 1, 2]))


@pytest.mark.parametrize("f", list(yoneda_cases()))
def test_functor_checks(f):
    assert f.check() == []


@pytest.mark.parametrize("f", list(yoneda_cases()))
def test_lan_of_representable_is_representable(f):
    for c in range(f.source.n_objects):
        ext = lan(f, representable(f.source, c)).presheaf
        iso = find_iso(ext, representable(f.target, f.obj_map[c]))
        assert iso is not None and iso.verify()


def small_presheaves(cat, max_size=2):
    """Every presheaf on ``cat`` with value sizes <= ``max_size`` (brute force)."""
    out = []
    for sizes in itertools.product(range(max_size + 1), repeat=cat.n_objects):
        choices = []
        for f in range(cat.n_arrows):
            choices.append(list(itertools.product(range(sizes[cat.src[f]]), repeat=sizes[cat.tgt[f]])))
        for acts in itertools.product(*choices):
            p = type(representable(cat, 0))(cat, list(sizes), list(acts))
            if p.check() == []:
                out.append(p)
    return out


def test_adjunction_counts_on_two_object_example():
    f = FinFunctor(discrete_category(["x", "y"]), arrow_category(), [0, 1], [0, 2])
    ps = small_presheaves(f.source)
    qs = small_presheaves(f.target)
    assert len(ps) > 5 and len(qs) > 5
    for p in ps:
        L = lan(f, p).presheaf
        R = ran(f, p).presheaf
        for q in qs:
            rq = restrict(f, q)
            assert count_homs(L, q) == count_homs(p, rq)
            assert count_homs(rq, p) == count_homs(q, R)


def test_lan_bijection_is_explicit():
    f = inclusion_functor()
    p = representable(f.source, 0)
    res = lan(f, p)
    q = representable(f.target, 2)
    rq = restrict(f, q)
    # precompose with the unit: hom(lan p, q) -> hom(p, f^* q) is a bijection
    images = set()
    for t in homs(res.presheaf, q):
        images.add(res.unit.then(restrict_nat(f, t)).key())
    assert images == {s.key() for s in homs(p, rq)}


def restrict_nat(f, t):
    from lawvere.fincat import NatTransformation
    return NatTransformation(restrict(f, t.source), restrict(f, t.target),
                             [t.components[f.obj_map[c]] for c in range(f.source.n_objects)])


# ------------------------------------------------------------ ends / coends


def test_end_of_hom_on_terminal():
    assert len(end_of(Bifunctor.hom(terminal_category()))) == 1


def test_end_of_function_sets_counts_endos():
    c = poset_category(["0", "1"], lambda i, j: i <= j)
    p = type(representable(c, 0))(c, [2, 3], [(0, 1), (0, 1, 1), (0, 1, 2)])
    assert p.check() == []
    h = Bifunctor.function_sets(p, p)
    assert len(end_of(h)) == count_homs(p, p)


def test_coend_over_discrete_is_sum_of_products():
    c = discrete_category(["x", "y"])
    p = constant_presheaf(c, "ab")
    d = Diagram(c, [3, 1], [(0, 1, 2), (0,)])
    assert coend_of(Bifunctor.tensor(p, d)).size == 2 * 3 + 2 * 1


@pytest.mark.parametrize("cat", [arrow_category(), span_category(), idempotent_monoid(), function_category([0, 1, 2])])
def test_end_and_coend_match_twisted_arrow(cat):
    h = Bifunctor.hom(cat)
    assert len(end_of(h)) == limit(twisted_diagram(h)).size
    assert coend_of(h).size == colimit(twisted_codiagram(h)).size
    p = representable(cat, 0)
    h2 = Bifunctor.function_sets(p, p)
    assert len(end_of(h2)) == limit(twisted_diagram(h2)).size


def test_coend_change_of_variables():
    # coend^c y(c)(a) x P(c) ~= P(a), a co-Yoneda instance
    cat = span_category()
    p = type(representable(cat, 0))(cat, [2, 3, 1], [(0, 1), (0, 1, 2), (0,), (0, 2), (1,)])
    for a in range(cat.n_objects):
        h = Bifunctor(cat, lambda x, y: len(cat.hom(a, y)) * p.sizes[x],
                      lambda u, y, z: (z // p.sizes[cat.tgt[u]]) * p.sizes[cat.src[u]] + p.actions[u][z % p.sizes[cat.tgt[u]]],
                      lambda x, v, z: cat.hom(a, cat.tgt[v]).index(cat.compose(v, cat.hom(a, cat.src[v])[z // p.sizes[x]])) * p.sizes[x] + z % p.sizes[x])
        assert coend_of(h).size == p.sizes[a]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=3, max_size=3), st.lists(st.integers(0, 2), min_size=3, max_size=3))
def test_equalizer_matches_pointwise_agreement(f, g):
    d = Diagram(parallel_pair(), [3, 3], [(0, 1, 2), (0, 1, 2), tuple(f), tuple(g)])
    assert limit(d).projection(0) == tuple(x for x in range(3) if f[x] == g[x])
