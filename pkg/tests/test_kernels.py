import random
from fractions import Fraction as F

import pytest

from lawvere.fincat import Presheaf, discrete_category, representable
from lawvere.kernels import (
    BasedSpace,
    Kernel,
    KernelError,
    MeasSpace,
    cartesian_lift,
    compose,
    dirac,
    exhaustive_associativity,
    factorisation_nullity,
    is_concrete,
    lift_laws,
    product_map,
    pullback_space,
    pushforward,
    random_associativity,
    random_based_space,
    random_kernel,
    strict_monoidal_sweep,
    tensor_kernels,
    tensor_spaces,
)
from lawvere.site import TruncatedFinSetSite


def flat(n, name=""):
    return BasedSpace.trivial(MeasSpace.of(n, name))


def table(src, tgt, rows, phi=(0,)):
    return Kernel.from_table(src, tgt, phi, [dict(enumerate(r)) for r in rows])


def test_dirac_is_identity():
    rng = random.Random(1)
    for _ in range(50):
        a, b = random_based_space(rng, 4, 2), random_based_space(rng, 4, 2)
        k = random_kernel(rng, a, b)
        assert compose(dirac(a), k) == k == compose(k, dirac(b))


def test_stochastic_product_is_matrix_product():
    x = flat(2)
    k = table(x, x, [[F(1, 2), F(1, 2)], [F(1, 3), F(2, 3)]])
    k2 = table(x, x, [[F(1), F(0)], [F(1, 4), F(3, 4)]])
    # [[1/2,1/2],[1/3,2/3]] @ [[1,0],[1/4,3/4]]
    expected = [[F(5, 8), F(3, 8)], [F(1, 2), F(1, 2)]]
    c = compose(k, k2)
    assert c.dense() == expected and c.is_stochastic()


def test_norm_bound():
    x = flat(2)
    k = table(x, x, [[F(2), F(0)], [F(1), F(-1)]])
    k2 = table(x, x, [[F(1), F(-2)], [F(3), F(0)]])
    assert (k.norm, k2.norm) == (2, 3)
    c = compose(k, k2)
    # rows (2,-4) and (-2,-2)
    assert c.dense() == [[2, -4], [-2, -2]] and c.norm == 6 <= k.norm * k2.norm


def test_dirac_edge_cases():
    empty = flat(0)
    assert dirac(empty).rows == () and dirac(empty).norm == 0
    x = flat(3)
    assert dirac(x).norm == 1
    assert compose(dirac(x), dirac(x)) == dirac(x)


def test_support_condition_enforced():
    base = MeasSpace.of(2)
    x = BasedSpace(MeasSpace.of(2), base, (0, 1))
    with pytest.raises(KernelError, match="fibered product"):
        Kernel.from_table(x, x, (0, 1), [{1: F(1)}, {}])


def test_compose_rejects_mismatch():
    with pytest.raises(KernelError):
        compose(dirac(flat(2)), dirac(flat(3)))


def test_pushforward_functor():
    rng = random.Random(7)
    x = flat(4)
    assert pushforward((0, 1, 2, 3), x, x) == dirac(x)
    for _ in range(30):
        h = tuple(rng.randrange(4) for _ in range(4))
        g = tuple(rng.randrange(4) for _ in range(4))
        gh = tuple(g[v] for v in h)
        assert pushforward(gh, x, x) == compose(pushforward(h, x, x), pushforward(g, x, x))
    const = pushforward((2, 2, 2, 2), x, x)
    assert all(r == ((2, 1),) for r in const.rows)


def test_pushforward_rejects_non_commuting_square():
    base = MeasSpace.of(2)
    x = BasedSpace(MeasSpace.of(2), base, (0, 1))
    with pytest.raises(KernelError, match="commute"):
        pushforward((1, 1), x, x)


def test_lift_over_identity_is_a_reindexing():
    base = MeasSpace.of(2)
    z = BasedSpace(MeasSpace.of(2), base, (0, 1))
    x = BasedSpace(MeasSpace.of(3), base, (0, 0, 1))
    k = Kernel.from_table(z, x, (0, 1), [{0: F(1, 2), 1: F(-1)}, {2: F(3)}])
    lift = cartesian_lift(k)
    pb, px = pullback_space(x, (0, 1), base)
    assert px == (0, 1, 2) and pb.proj == x.proj
    assert lift.kernel.rows == k.rows


def test_lift_over_two_points():
    J, I = MeasSpace.of(2, "J"), MeasSpace.of(1, "I")
    z = BasedSpace(MeasSpace.of(2), J, (0, 1))
    x = BasedSpace(MeasSpace.of(2), I, (0, 0))
    k = Kernel.from_table(z, x, (0, 0), [{0: F(1, 3), 1: F(2, 3)}, {1: F(5)}])
    lift = cartesian_lift(k)
    # pairs (x, j) in order: (0,0), (0,1), (1,0), (1,1)
    assert lift.kernel.dense() == [[F(1, 3), 0, F(2, 3), 0], [0, 0, 0, F(5)]]
    assert compose(lift.kernel, lift.projection) == k
    assert factorisation_nullity(k) == 0


def test_lift_perturbation_breaks_round_trip():
    J, I = MeasSpace.of(2), MeasSpace.of(1)
    z = BasedSpace(MeasSpace.of(1), J, (0,))
    x = BasedSpace(MeasSpace.of(1), I, (0,))
    k = Kernel.from_table(z, x, (0, 0), [{0: F(1)}])
    lift = cartesian_lift(k)
    # move the mass from (x0, j0) to (x0, j1): off the graph of f, so not a kernel over id_J
    with pytest.raises(KernelError):
        Kernel(z, lift.kernel.target, (0, 1), (((1, F(1)),),))
    # perturb on the graph: the marginal changes
    bumped = Kernel(z, lift.kernel.target, (0, 1), (((0, F(2)),),))
    assert compose(bumped, lift.projection) != k


def test_tensor_of_diracs():
    a, b = flat(2), flat(3)
    assert tensor_kernels(dirac(a), dirac(b)) == dirac(tensor_spaces(a, b))


def test_tensor_of_stochastic_kernels():
    x, y = flat(2), flat(2)
    k1 = table(x, y, [[F(1, 2), F(1, 2)], [F(1), 0]])
    k2 = table(x, y, [[F(1, 4), F(3, 4)], [0, F(1)]])
    t = tensor_kernels(k1, k2)
    assert t.is_stochastic() and t.norm == k1.norm * k2.norm
    assert t(2, 0) == F(1, 4)  # (1,0) -> (0,0): 1 * 1/4


def test_interchange():
    rng = random.Random(4)
    for _ in range(20):
        xs = [random_based_space(rng, 3, 2) for _ in range(6)]
        k1, k1b = random_kernel(rng, xs[0], xs[1]), random_kernel(rng, xs[1], xs[2])
        k2, k2b = random_kernel(rng, xs[3], xs[4]), random_kernel(rng, xs[4], xs[5])
        left = compose(tensor_kernels(k1, k2), tensor_kernels(k1b, k2b))
        assert left == tensor_kernels(compose(k1, k1b), compose(k2, k2b))


def test_tensor_preserves_support_over_product_base():
    base = MeasSpace.of(2)
    x = BasedSpace(MeasSpace.of(3), base, (0, 1, 1))
    k = random_kernel(random.Random(2), x, x, (1, 0))
    t = tensor_kernels(k, dirac(x))
    assert t.phi == (2, 3, 0, 1) and t.support_violation() is None


def test_product_map():
    assert product_map((1, 0), (2, 0, 1), 3) == (5, 3, 4, 2, 0, 1)


def test_law_sweeps():
    assert all(r.ok for r in exhaustive_associativity(2))
    assert all(r.ok for r in random_associativity(random.Random(0), 100))
    assert all(r.ok for r in lift_laws(random.Random(0), 50))
    assert strict_monoidal_sweep(2).ok


def test_representable_is_concrete():
    site = TruncatedFinSetSite(2)
    for n in range(3):
        assert is_concrete(representable(site.category, n), site)


def test_glued_presheaf_is_not_concrete():
    # two elements at 2 that every point map sends to the single element at 1
    site = TruncatedFinSetSite(2)
    cat = site.category
    fn = cat.functions

    def act(f, x):
        s, t = cat.src[f], cat.tgt[f]
        if s == 2 and t == 2:
            return x if len(set(fn[f])) == 2 else "u"
        return "u" if s == 2 else "*"

    p = Presheaf.from_function(cat, [["*"], ["*"], ["u", "v"]], act)
    assert p.check() == []
    res = is_concrete(p, site)
    assert not res and res.witness == (2, 0, 1)


def test_concreteness_without_a_point():
    cat = discrete_category(["X"])
    assert is_concrete(Presheaf(cat, [3], [(0, 1, 2)]), {})
