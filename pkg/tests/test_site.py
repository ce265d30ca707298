import itertools

import pytest

from lawvere.fincat import (
    FinCategory,
    NatTransformation,
    Presheaf,
    constant_presheaf,
    empty_presheaf,
    find_iso,
    homs,
    poset_category,
    representable,
)
from lawvere.site import (
    FiniteSite,
    NotConverged,
    TruncatedFinSetSite,
    covers_are_coproducts,
    is_sheaf,
    is_sheaf_for_topology,
    plus,
    sheafify,
)


def power_presheaf(site, xs):
    """``m |-> xs^m`` with restriction by precomposition."""
    cat = site.category
    values = [list(itertools.product(xs, repeat=int(o))) for o in cat.objects]
    return Presheaf.from_function(cat, values, lambda f, v: tuple(v[i] for i in cat.functions[f]))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_representables_are_sheaves(n):
    s = TruncatedFinSetSite(n)
    assert covers_are_coproducts(s)
    for m in range(n + 1):
        assert is_sheaf(representable(s.category, m), s)


def test_y1_on_n3_is_sheaf():
    s = TruncatedFinSetSite(3)
    assert is_sheaf(representable(s.category, 1), s).ok


def test_constant_presheaf_fails_on_empty_cover():
    s = TruncatedFinSetSite(3)
    res = is_sheaf(constant_presheaf(s.category, "ab"), s)
    assert not res
    assert res.cover.apex == 0 and res.cover.arrows == ()
    assert res.reason == "not injective"


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_power_presheaves_are_sheaves(k):
    s = TruncatedFinSetSite(3)
    assert is_sheaf(power_presheaf(s, range(k)), s)


def random_presheaves(site, count, seed):
    """Constant and power presheaves with seeded random value sets."""
    import random
    rng = random.Random(seed)
    cat = site.category
    out = []
    for _ in range(count):
        xs = list(range(rng.randint(0, 3)))
        out.append(constant_presheaf(cat, xs))
        out.append(power_presheaf(site, xs))
    return out


@pytest.mark.parametrize("n", [1, 2, 3])
def test_generator_check_agrees_with_full_topology(n):
    s = TruncatedFinSetSite(n)
    cat = s.category
    cases = [representable(cat, m) for m in range(n + 1)] + random_presheaves(s, 4, n)
    cases.append(empty_presheaf(cat))
    for p in cases:
        assert bool(is_sheaf(p, s)) == bool(is_sheaf_for_topology(p, s))


def test_sheafify_fixes_sheaves():
    s = TruncatedFinSetSite(2)
    p = representable(s.category, 2)
    res = sheafify(p, s)
    assert res.presheaf is p and res.rounds == 1
    assert res.unit.is_iso()


def test_sheafify_constant():
    s = TruncatedFinSetSite(2)
    res = sheafify(constant_presheaf(s.category, "ab"), s)
    assert res.presheaf.sizes == [1, 2, 4]
    assert is_sheaf(res.presheaf, s)
    assert find_iso(res.presheaf, power_presheaf(s, "ab")) is not None
    assert res.unit.check() == []


def test_sheafify_empty():
    s = TruncatedFinSetSite(3)
    res = sheafify(empty_presheaf(s.category), s)
    assert res.presheaf.sizes == [1, 0, 0, 0]


def test_sheafify_idempotent():
    s = TruncatedFinSetSite(2)
    once = sheafify(constant_presheaf(s.category, "abc"), s).presheaf
    twice = sheafify(once, s)
    assert twice.presheaf is once and twice.unit.is_iso()


def test_bound_validation_and_not_converged():
    s = TruncatedFinSetSite(2)
    with pytest.raises(ValueError):
        sheafify(constant_presheaf(s.category, "ab"), s, bound=0)
    with pytest.raises(NotConverged):
        sheafify(constant_presheaf(s.category, "abc"), s, max_elements=5)


@pytest.mark.parametrize("values", ["a", "ab", ""])
def test_reflection_universal_property(values):
    s = TruncatedFinSetSite(2)
    cat = s.category
    for p in (constant_presheaf(cat, values), empty_presheaf(cat)):
        res = sheafify(p, s)
        for k in range(3):
            q = power_presheaf(s, range(k))
            if q.total_size() > 100:
                continue
            factorings = {}
            for t in homs(res.presheaf, q):
                key = res.unit.then(t).key()
                factorings[key] = factorings.get(key, 0) + 1
            assert sorted(factorings) == sorted(u.key() for u in homs(p, q))
            assert all(v == 1 for v in factorings.values())


def test_general_site_with_sieves():
    # poset 0 <= 2, 1 <= 2 with {0 -> 2, 1 -> 2} covering 2
    cat = poset_category(["u", "v", "w"], lambda i, j: i == j or j == 2)
    site = FiniteSite(cat, [(2, [cat.hom(0, 2)[0], cat.hom(1, 2)[0]])])
    p = constant_presheaf(cat, "ab")
    assert is_sheaf(p, site).reason == "not surjective"
    res = sheafify(p, site)
    assert res.presheaf.sizes == [2, 2, 4]
    assert is_sheaf(res.presheaf, site) and is_sheaf_for_topology(res.presheaf, site)


def test_cover_arrows_must_share_codomain():
    cat = poset_category(["u", "v"], lambda i, j: i <= j)
    with pytest.raises(ValueError):
        FiniteSite(cat, [(1, [cat.identities[0]])])


def test_plus_unit_is_natural():
    s = TruncatedFinSetSite(3)
    p = constant_presheaf(s.category, "ab")
    q, eta = plus(p, s)
    assert q.check() == [] and eta.check() == []
