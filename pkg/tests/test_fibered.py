import random
from itertools import product

import pytest

from lawvere import linalg as la
from lawvere.fibered import (
    BundleMap,
    FiberedPresentation,
    LawvereModel,
    LinearBundle,
    SetMap,
    Square,
    alpha_beta,
    beta_alpha,
    canonical_cospans,
    canonical_projection_instances,
    check_beck_chevalley,
    check_projection_formula,
    fiber,
    identity_map,
    is_linton,
    lawvere_to_linton,
    linton_slot,
    linton_to_lawvere,
    linton_violations,
    pi_bundle,
    pi_counit,
    pi_unit,
    product_linton,
    projection_map,
    projection_naturality,
    pullback_bundle,
    sigma_bundle,
    sigma_counit,
    sigma_unit,
    tensor_bundle,
    triangle_identities,
    zero_bundle,
)
from lawvere.fincat import check_category, constant_presheaf, find_iso, representable
from lawvere.fincat.enumerate import iter_presheaves
from lawvere.models import vector_space
from lawvere.theory import degenerate_theory, f_q_theory

BASE = (0, 1, 2)


def random_map(rng, m, n):
    return SetMap(tuple(rng.randrange(n) for _ in range(m)), n)


def random_bundle_map(rng, v, w, bound=3):
    K = v.K
    mats = tuple(la.matrix([[rng.randint(-bound, bound) for _ in range(v.dims[p])] for _ in range(w.dims[p])],
                           K, (w.dims[p], v.dims[p])) for p in range(v.base))
    return BundleMap(v, w, mats)


# ---------------------------------------------------------------- reindexing


def test_pullback_along_identity_and_constant():
    v = LinearBundle((1, 3, 0))
    assert pullback_bundle(SetMap.identity(3), v) == v
    assert pullback_bundle(SetMap((1, 1, 1, 1), 3), v).dims == (3, 3, 3, 3)


def test_pullback_along_composite():
    rng = random.Random(5)
    for _ in range(50):
        psi, phi = random_map(rng, 4, 3), random_map(rng, 3, 2)
        v = LinearBundle(tuple(rng.randrange(4) for _ in range(2)))
        assert pullback_bundle(psi.then(phi), v) == pullback_bundle(psi, pullback_bundle(phi, v))


def test_sigma_and_pi_over_a_point():
    phi = SetMap((0, 0, 0), 1)
    v = LinearBundle((1, 2, 3))
    assert sigma_bundle(phi, v).dims == pi_bundle(phi, v).dims == (6,)
    inj = sigma_unit(phi, v).mats
    assert la.entries(inj[1]) == [[0, 0], [1, 0], [0, 1], [0, 0], [0, 0], [0, 0]]
    proj = pi_counit(phi, v).mats
    assert all(la.equal(p, i.transpose()) for p, i in zip(proj, inj))
    w = LinearBundle((2,))
    assert la.entries(sigma_counit(phi, w).mats[0]) == [[1, 0, 1, 0, 1, 0], [0, 1, 0, 1, 0, 1]]
    assert la.entries(pi_unit(phi, w).mats[0]) == [[1, 0], [0, 1]] * 3


def test_empty_preimage_gives_zero_fibers():
    phi = SetMap((0, 0), 2)
    v = LinearBundle((2, 1))
    assert sigma_bundle(phi, v).dims == pi_bundle(phi, v).dims == (3, 0)


def test_bijection_sum_is_reindexing():
    phi = SetMap((2, 0, 1), 3)
    v = LinearBundle((1, 2, 3))
    assert sigma_bundle(phi, v).dims == (2, 3, 1)
    assert sigma_unit(phi, v).is_iso()


def test_triangle_identities_exhaustive_small():
    for m, n in product(range(4), range(1, 4)):
        for phi in SetMap.all(m, n):
            for dv in product(range(3), repeat=m):
                w = LinearBundle(tuple((k + sum(dv)) % 3 for k in range(n)))
                assert triangle_identities(phi, LinearBundle(dv), w) == []


def test_triangle_identities_over_a_prime_field():
    K = la.field(5)
    phi = SetMap((0, 1, 1, 0), 3)
    assert triangle_identities(phi, LinearBundle((2, 3, 1, 4), K), LinearBundle((2, 0, 3), K)) == []


# ------------------------------------------------------------ Beck-Chevalley


def test_identity_square_gives_identity():
    i = SetMap.identity(3)
    v = LinearBundle((1, 0, 2))
    c = check_beck_chevalley(Square(i, i, i, i), v)
    assert c.is_iso and c.map == identity_map(v)


def test_mixed_square():
    X = SetMap((0, 1), 2)
    Y = SetMap((0, 0, 1), 2)
    sq = Square.pullback(X, Y)
    assert (sq.Xt.values, sq.Yt.values) == ((0, 1, 2), (0, 0, 1))
    c = check_beck_chevalley(sq, LinearBundle((1, 2, 3)))
    assert c.is_iso and c.map.source.dims == (3, 3)


def test_non_pullback_square_fails():
    one, empty = SetMap.identity(1), SetMap((), 1)
    c = check_beck_chevalley(Square(empty, empty, one, one), LinearBundle((2,)))
    assert not c.is_iso and "0 -> 2" in c.failure


def test_square_must_commute():
    with pytest.raises(ValueError):
        Square(SetMap((0,), 2), SetMap((0,), 2), SetMap.identity(2), SetMap((1, 0), 2))


def test_beck_chevalley_canonical_sweep():
    n = 0
    for X, Y in canonical_cospans(3):
        sq = Square.pullback(X, Y)
        v = LinearBundle(tuple((b + 1) % 4 for b in range(Y.domain)))
        assert check_beck_chevalley(sq, v).is_iso
        n += 1
    assert n > 500


def test_beck_chevalley_random_squares():
    rng = random.Random(11)
    for _ in range(200):
        c = rng.randrange(1, 5)
        X, Y = random_map(rng, rng.randrange(5), c), random_map(rng, rng.randrange(5), c)
        v = LinearBundle(tuple(rng.randrange(4) for _ in range(Y.domain)), la.field(3))
        assert check_beck_chevalley(Square.pullback(X, Y), v).is_iso


# --------------------------------------------------------- projection formula


def test_projection_identity_map():
    i = SetMap.identity(2)
    tp, t = LinearBundle((2, 1)), LinearBundle((3, 2))
    m = projection_map(i, tp, t)
    assert m == identity_map(tensor_bundle(tp, t))


def test_projection_two_to_one():
    phi = SetMap((0, 0), 1)
    m = check_projection_formula(phi, LinearBundle((3,)), LinearBundle((1, 2))).map
    assert m.source.dims == m.target.dims == (9,)
    # block 0 has basis x (x) e0, block 1 has x (x) e_y; target is x (x) (e0, e1, e2)
    perm = [3 * x for x in range(3)] + [3 * x + 1 + y for x in range(3) for y in range(2)]
    expected = la.selection(9, [(r, s) for s, r in enumerate(perm)], 9, la.QQ)
    assert la.equal(m.mats[0], expected)


def test_projection_zero_bundle():
    phi = SetMap((0, 1, 1), 2)
    c = check_projection_formula(phi, LinearBundle((2, 3)), zero_bundle(3))
    assert c.is_iso and c.map.source.dims == c.map.target.dims == (0, 0)


def test_projection_canonical_sweep_small():
    assert all(check_projection_formula(*x).is_iso for x in canonical_projection_instances(2, 2))


def test_projection_naturality():
    rng = random.Random(3)
    for _ in range(40):
        q = rng.randrange(1, 3)
        phi = random_map(rng, rng.randrange(4), q)
        dims = lambda n: LinearBundle(tuple(rng.randrange(3) for _ in range(n)))
        a, b, c, d = dims(q), dims(q), dims(phi.domain), dims(phi.domain)
        assert projection_naturality(phi, random_bundle_map(rng, a, b), random_bundle_map(rng, c, d))


# ------------------------------------------------------- fibered presentation


def test_total_category_and_lifts():
    fp = FiberedPresentation(degenerate_theory(1), BASE)
    assert fp.category.n_arrows == 65
    assert check_category(fp.category) == []
    assert fp.projection.check() == []
    assert fp.check_lifts() == []


def test_not_every_arrow_is_cartesian():
    fp = FiberedPresentation(degenerate_theory(1), BASE)
    arrows = range(fp.category.n_arrows)
    assert any(not fp.is_cartesian(h) for h in arrows)
    assert any(not fp.is_opcartesian(h) for h in arrows)


def test_opcartesian_lift_needs_room():
    fp = FiberedPresentation(degenerate_theory(1), (1, 2))
    to_point = next(a for a in range(fp.base.n_arrows) if fp.base.src[a] == 1 and fp.base.tgt[a] == 0)
    full = fp.fibers[1].obj((1, 1))
    assert fp.opcartesian_lift(to_point, full) is None
    assert fp.opcartesian_lift(to_point, fp.fibers[1].obj((1, 0))) is not None


def test_f2_total_category_lifts():
    fp = FiberedPresentation(f_q_theory(2, 1), BASE)
    assert fp.check_lifts() == []


# ------------------------------------------------------------------ models


@pytest.fixture(scope="module")
def deg():
    return degenerate_theory(1)


@pytest.fixture(scope="module")
def f2():
    return f_q_theory(2, 2)


def test_alpha_at_a_point_is_evaluation(deg):
    y1 = representable(deg.category, 1)
    p = lawvere_to_linton(LawvereModel.from_models(deg, [y1], BASE))
    assert p.sizes == y1.sizes and p.actions == y1.actions


def test_beta_at_a_point_is_the_model(f2):
    a = vector_space(f2, 1).presheaf
    m = linton_to_lawvere(a, f2, BASE)
    direct = LawvereModel.from_models(f2, [a], BASE)
    for I in BASE:
        for key, c in direct.components[I].items():
            assert m.components[I][key].actions == c.actions


def test_lawvere_model_checks(f2):
    m = LawvereModel.from_models(f2, [vector_space(f2, 1).presheaf, vector_space(f2, 2).presheaf], BASE)
    assert m.check_cartesian() == [] and m.check_multiplicative() == []


def test_non_multiplicative_is_rejected(deg):
    bad = LawvereModel.from_models(deg, [constant_presheaf(deg.category, "ab")], BASE)
    report = bad.check_multiplicative()
    assert report and report[0].witness[0] == ()
    with pytest.raises(ValueError, match="along"):
        lawvere_to_linton(bad)


def test_non_linton_is_rejected(deg):
    f = fiber(deg, 2)
    p = constant_presheaf(f.category, "ab")
    assert linton_violations(p, deg)
    with pytest.raises(ValueError):
        alpha_beta(p, deg, BASE)


def test_degenerate_exhaustive_round_trip(deg):
    # Linton models on the square (0,0),(0,1),(1,0),(1,1): a bijection P(1,1) = P(1,0) x P(0,1)
    f = fiber(deg, 2)
    count = 0
    for a, b, c in product(range(3), range(3), range(5)):
        for p in iter_presheaves(f.category, (1, a, b, c)):
            if not is_linton(p, deg):
                continue
            count += 1
            assert alpha_beta(p, deg, BASE).ok
            assert beta_alpha(linton_to_lawvere(p, deg, BASE)).ok
    assert count == 5 * 1 + 1 + 2 * 2 + 24


@pytest.mark.parametrize("dims", [(0, 1), (1, 1), (1, 2), (2, 2)])
def test_f2_round_trip_on_products(f2, dims):
    models = [vector_space(f2, d).presheaf for d in dims]
    p = product_linton(f2, models)
    assert is_linton(p, f2)
    assert alpha_beta(p, f2, BASE).ok
    assert beta_alpha(LawvereModel.from_models(f2, models, BASE)).ok


def test_f2_round_trip_on_representables(f2):
    f = fiber(f2, 2)
    for T in [(1, 0), (1, 2), (2, 2)]:
        p = representable(f.category, f.obj(T))
        assert is_linton(p, f2) and alpha_beta(p, f2, BASE).ok


def test_beta_of_representable_is_representable_family(deg):
    f = fiber(deg, 2)
    T = (1, 0)
    m = linton_to_lawvere(representable(f.category, f.obj(T)), deg, BASE)
    for j, n in enumerate(T):
        assert find_iso(linton_slot(representable(f.category, f.obj(T)), deg, j),
                        representable(deg.category, n)) is not None
    assert m.check_cartesian() == [] and m.check_multiplicative() == []
