import itertools

import pytest

from lawvere.algebra import algebra_homs, congruence_quotient, find_algebra_iso, free_algebra
from lawvere.fincat import Presheaf, constant_presheaf, coproduct_presheaf, homs, product_presheaf, representable
from lawvere.fincat.kan import lan
from lawvere.models import (
    Model,
    NotAModel,
    adjunction_check,
    forget,
    free_model,
    model_hom_nat,
    modelify,
    representable_comparison,
)
from lawvere.site import NotConverged, is_sheaf
from lawvere.theory import BUILTIN_THEORIES, f_q_theory, model_of


def power(t, xs):
    sc = t.site.category
    values = [list(itertools.product(xs, repeat=int(o))) for o in sc.objects]
    return Presheaf.from_function(sc, values, lambda f, v: tuple(v[i] for i in sc.functions[f]))


@pytest.fixture(scope="module")
def f2():
    return f_q_theory(2, 3)


def test_free_on_one_and_three(f2):
    sc = f2.site.category
    one = free_model(representable(sc, 1), f2)
    three = free_model(representable(sc, 3), f2)
    assert one.model.size == 2 and three.model.size == 8
    assert forget(one.model).sizes == [1, 2, 4, 8]
    assert is_sheaf(forget(three.model), f2.site)
    assert model_of(one.model.presheaf, f2)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_free_on_powers(f2, k):
    r = free_model(power(f2, range(k)), f2)
    assert r.model.size == 2 ** k
    assert r.unit.check() == []
    assert r.model.algebra.check(full=True) == []


def test_modelify_fixes_models(f2):
    p = representable(f2.category, 2)
    r = modelify(p, f2)
    assert r.model.presheaf is p
    assert r.unit.is_iso() and r.unit.components == [tuple(range(n)) for n in p.sizes]


def test_modelify_lan_of_point_is_line(f2):
    k = lan(f2.tau, representable(f2.site.category, 1))
    assert modelify(k.presheaf, f2).model.size == 2


def test_modelify_all_operations_agrees(f2):
    k = lan(f2.tau, power(f2, range(3))).presheaf
    fast = modelify(k, f2).model.algebra
    full = modelify(k, f2, all_operations=True).model.algebra
    assert find_algebra_iso(fast, full) is not None


def test_coproduct_of_lines(f2):
    line = representable(f2.category, 1)
    r = modelify(coproduct_presheaf(line, line), f2)
    assert r.model.size == 4
    # congruence route: free on both carriers, glued by the relations of each line
    a = free_algebra(f2, 4)
    g = a.generator_map
    zero = a.algebra.const_values[0]
    q = congruence_quotient(a.algebra, [(g[0], zero), (g[2], zero)])
    assert find_algebra_iso(r.model.algebra, q.algebra) is not None


def test_modelify_unit_is_universal(f2):
    # maps out of the presheaf into a model factor uniquely through the unit
    line = representable(f2.category, 1)
    p = coproduct_presheaf(line, line)
    r = modelify(p, f2)
    target = free_model(representable(f2.site.category, 1), f2).model
    direct = sorted(h.key() for h in homs(p, target.presheaf))
    via = sorted(r.unit.then(model_hom_nat(r.model, target, h, on_site=False)).key()
                 for h in algebra_homs(r.model.algebra, target.algebra))
    assert via == direct and len(set(via)) == len(via)


def test_from_presheaf_round_trip(f2):
    m = free_model(representable(f2.site.category, 2), f2).model
    again = Model.from_presheaf(m.presheaf, f2)
    assert find_algebra_iso(m.algebra, again.algebra) is not None
    with pytest.raises(NotAModel):
        Model.from_presheaf(constant_presheaf(f2.category, "ab"), f2)


@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_adjunction_bijection(f2, k):
    x = power(f2, range(k))
    free = free_model(x, f2)
    for target in (1, 2):
        m = free_model(representable(f2.site.category, target), f2).model
        rep = adjunction_check(x, m, free)
        assert rep.ok
        assert rep.model_homs == (2 ** target) ** k


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_free_on_representable_is_representable(f2, n):
    iso = representable_comparison(f2, n)
    assert iso is not None and iso.verify()


def test_products_of_models_are_models(f2):
    a = free_model(representable(f2.site.category, 1), f2).model
    b = free_model(representable(f2.site.category, 2), f2).model
    prod = product_presheaf(a.presheaf, b.presheaf)
    assert model_of(prod, f2)
    assert Model.from_presheaf(prod, f2).size == 8


def test_forget_is_conservative_on_isos(f2):
    a = free_model(representable(f2.site.category, 1), f2).model
    for h in algebra_homs(a.algebra, a.algebra):
        nat = model_hom_nat(a, a, h)
        assert nat.is_iso() == (len(set(h)) == a.size)


def test_other_theories_free_models():
    for name, expected in [("semilattice", 4), ("pointed", 3), ("lz-action", 6), ("degenerate", 2)]:
        t = BUILTIN_THEORIES[name](2)
        x = representable(t.site.category, 2)
        r = free_model(x, t)
        assert r.model.size == expected
        assert representable_comparison(t, 2, r) is not None


def test_not_a_sheaf_rejected(f2):
    with pytest.raises(ValueError):
        free_model(constant_presheaf(f2.site.category, "ab"), f2)


def test_bound_is_enforced():
    t = f_q_theory(2, 2)
    with pytest.raises(NotConverged):
        free_model(power(t, range(3)), t, bound=4)
