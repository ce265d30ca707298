"""Linear bundles over finite sets, and fibered theories over a base of finite sets.

The first half works in the bifibration of linear bundles: reindexing,
sums and products along maps of finite sets, Beck-Chevalley comparisons for
squares, and the projection formula.  Every comparison is assembled from
units and counits as an explicit matrix and tested for invertibility over
exact arithmetic.

The second half realises a single-sorted theory as a split fibration over
finite sets (the fiber over ``I`` is the ``I``-fold power of the theory),
and compares the two notions of model fiberwise: multiplicative fibered
functors (``LawvereModel``) against presheaves on the fiber whose
restriction to arities is a sheaf (Linton models), via ``alpha`` and
``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterator, Sequence

from . import linalg as la
from .fincat.core import (
    FinCategory,
    FinFunctor,
    Isomorphism,
    NatTransformation,
    Presheaf,
    Violation,
    function_category,
    representable,
    restrict,
    witness_iso,
)
from .site import is_sheaf
from .theory import TheoryPresentation

# ------------------------------------------------------------ base maps


@dataclass(frozen=True)
class SetMap:
    """A function ``{0..n-1} -> {0..codomain-1}`` given by its values."""

    values: tuple[int, ...]
    codomain: int

    def __post_init__(self):
        if any(not 0 <= v < self.codomain for v in self.values):
            raise ValueError(f"values {self.values} out of range for codomain {self.codomain}")

    @property
    def domain(self) -> int:
        return len(self.values)

    def preimage(self, q: int) -> list[int]:
        return self.fibers[q]

    @cached_property
    def fibers(self) -> tuple[list[int], ...]:
        out: tuple[list[int], ...] = tuple([] for _ in range(self.codomain))
        for p, v in enumerate(self.values):
            out[v].append(p)
        return out

    def then(self, other: "SetMap") -> "SetMap":
        """``other . self``."""
        return SetMap(tuple(other.values[v] for v in self.values), other.codomain)

    @staticmethod
    def identity(n: int) -> "SetMap":
        return SetMap(tuple(range(n)), n)

    @staticmethod
    def all(m: int, n: int) -> Iterator["SetMap"]:
        for v in product(range(n), repeat=m):
            yield SetMap(v, n)


# ------------------------------------------------------------ bundles


@dataclass(frozen=True)
class LinearBundle:
    """A family of based vector spaces ``V_p`` indexed by ``p < base``."""

    dims: tuple[int, ...]
    K: object = la.QQ
    labels: tuple[tuple, ...] | None = None

    def __post_init__(self):
        if any(d < 0 for d in self.dims):
            raise ValueError("fiber dimensions must be non-negative")
        if self.labels is not None and [len(x) for x in self.labels] != list(self.dims):
            raise ValueError("basis labels do not match the dimensions")

    @property
    def base(self) -> int:
        return len(self.dims)

    def basis(self, p: int) -> tuple:
        return self.labels[p] if self.labels is not None else tuple(range(self.dims[p]))

    def same_fibers(self, other: "LinearBundle") -> bool:
        return self.dims == other.dims and self.K == other.K


@dataclass(frozen=True)
class BundleMap:
    """Pointwise linear maps ``T_p: V_p -> W_p`` (matrices act on column vectors)."""

    source: LinearBundle
    target: LinearBundle
    mats: tuple[la.Matrix, ...]

    def __post_init__(self):
        if self.source.base != self.target.base or len(self.mats) != self.source.base:
            raise ValueError("bundle map over mismatched bases")
        for p, a in enumerate(self.mats):
            if a.shape != (self.target.dims[p], self.source.dims[p]):
                raise ValueError(f"matrix at {p} has shape {a.shape}, expected "
                                 f"{(self.target.dims[p], self.source.dims[p])}")

    def then(self, other: "BundleMap") -> "BundleMap":
        return BundleMap(self.source, other.target, tuple(b * a for a, b in zip(self.mats, other.mats)))

    def is_iso(self) -> bool:
        return all(la.is_invertible(a) for a in self.mats)

    def inverse(self) -> "BundleMap":
        return BundleMap(self.target, self.source, tuple(la.inverse(a) for a in self.mats))

    def __eq__(self, other) -> bool:
        return (isinstance(other, BundleMap) and self.source.same_fibers(other.source)
                and self.target.same_fibers(other.target)
                and all(la.equal(a, b) for a, b in zip(self.mats, other.mats)))

    __hash__ = None


def identity_map(v: LinearBundle) -> BundleMap:
    return BundleMap(v, v, tuple(la.eye(d, v.K) for d in v.dims))


def zero_bundle(base: int, K=la.QQ) -> LinearBundle:
    return LinearBundle((0,) * base, K)


def _check_base(phi: SetMap, v: LinearBundle, side: str) -> None:
    n = phi.codomain if side == "codomain" else phi.domain
    if v.base != n:
        raise ValueError(f"bundle over {v.base} points, map {side} has {n}")


def pullback_bundle(phi: SetMap, v: LinearBundle) -> LinearBundle:
    """``(phi* V)_p = V_phi(p)``."""
    _check_base(phi, v, "codomain")
    labels = tuple(v.basis(q) for q in phi.values) if v.labels is not None else None
    return LinearBundle(tuple(v.dims[q] for q in phi.values), v.K, labels)


def pullback_map(phi: SetMap, f: BundleMap) -> BundleMap:
    return BundleMap(pullback_bundle(phi, f.source), pullback_bundle(phi, f.target),
                     tuple(f.mats[q] for q in phi.values))


def _summed(phi: SetMap, v: LinearBundle) -> LinearBundle:
    _check_base(phi, v, "domain")
    dims = tuple(sum(v.dims[p] for p in phi.preimage(q)) for q in range(phi.codomain))
    labels = tuple(tuple((p, b) for p in phi.preimage(q) for b in v.basis(p)) for q in range(phi.codomain))
    return LinearBundle(dims, v.K, labels)


def sigma_bundle(phi: SetMap, v: LinearBundle) -> LinearBundle:
    """``(Sigma_phi V)_q``: direct sum of the fibers over the preimage, blocks in ascending order."""
    return _summed(phi, v)


def pi_bundle(phi: SetMap, v: LinearBundle) -> LinearBundle:
    """``(Pi_phi V)_q``: product of the fibers over the preimage (same blocks; different universal maps)."""
    return _summed(phi, v)


def sigma_map(phi: SetMap, f: BundleMap) -> BundleMap:
    K = f.source.K
    mats = tuple(la.block_diag([f.mats[p] for p in phi.preimage(q)], K) for q in range(phi.codomain))
    return BundleMap(sigma_bundle(phi, f.source), sigma_bundle(phi, f.target), mats)


def pi_map(phi: SetMap, f: BundleMap) -> BundleMap:
    K = f.source.K
    mats = tuple(la.block_diag([f.mats[p] for p in phi.preimage(q)], K) for q in range(phi.codomain))
    return BundleMap(pi_bundle(phi, f.source), pi_bundle(phi, f.target), mats)


def _injections(phi: SetMap, v: LinearBundle) -> list[la.Matrix]:
    """``V_p -> (Sigma V)_phi(p)`` for every ``p``."""
    out: list = [None] * v.base
    for q in range(phi.codomain):
        total = sum(v.dims[x] for x in phi.preimage(q))
        off = 0
        for p in phi.preimage(q):
            out[p] = la.selection(total, [(off + b, b) for b in range(v.dims[p])], v.dims[p], v.K)
            off += v.dims[p]
    return out


def sigma_unit(phi: SetMap, v: LinearBundle) -> BundleMap:
    """``V -> phi* Sigma_phi V``: the coproduct injections."""
    w = pullback_bundle(phi, sigma_bundle(phi, v))
    return BundleMap(v, w, tuple(_injections(phi, v)))


def sigma_counit(phi: SetMap, w: LinearBundle) -> BundleMap:
    """``Sigma_phi phi* W -> W``: the codiagonal (sum of the copies)."""
    s = sigma_bundle(phi, pullback_bundle(phi, w))
    mats = tuple(la.hstack([la.eye(w.dims[q], w.K)] * len(phi.preimage(q)), w.K, w.dims[q])
                 for q in range(phi.codomain))
    return BundleMap(s, w, mats)


def pi_unit(phi: SetMap, w: LinearBundle) -> BundleMap:
    """``W -> Pi_phi phi* W``: the diagonal."""
    s = pi_bundle(phi, pullback_bundle(phi, w))
    mats = tuple(la.vstack([la.eye(w.dims[q], w.K)] * len(phi.preimage(q)), w.K, w.dims[q])
                 for q in range(phi.codomain))
    return BundleMap(w, s, mats)


def pi_counit(phi: SetMap, v: LinearBundle) -> BundleMap:
    """``phi* Pi_phi V -> V``: the product projections."""
    w = pullback_bundle(phi, pi_bundle(phi, v))
    mats = tuple(a.transpose() for a in _injections(phi, v))
    return BundleMap(w, v, mats)


def triangle_identities(phi: SetMap, v: LinearBundle, w: LinearBundle) -> list[str]:
    """Failures among the four triangle identities, for ``v`` over the domain and ``w`` over the codomain."""
    bad = []
    # Sigma -| phi*
    if sigma_map(phi, sigma_unit(phi, v)).then(sigma_counit(phi, sigma_bundle(phi, v))) != identity_map(sigma_bundle(phi, v)):
        bad.append("sigma: counit . Sigma(unit)")
    if sigma_unit(phi, pullback_bundle(phi, w)).then(pullback_map(phi, sigma_counit(phi, w))) != \
            identity_map(pullback_bundle(phi, w)):
        bad.append("sigma: phi*(counit) . unit")
    # phi* -| Pi
    if pi_unit(phi, pi_bundle(phi, v)).then(pi_map(phi, pi_counit(phi, v))) != identity_map(pi_bundle(phi, v)):
        bad.append("pi: Pi(counit) . unit")
    if pullback_map(phi, pi_unit(phi, w)).then(pi_counit(phi, pullback_bundle(phi, w))) != \
            identity_map(pullback_bundle(phi, w)):
        bad.append("pi: counit . phi*(unit)")
    return bad


# ---------------------------------------------------------- Beck-Chevalley


@dataclass(frozen=True)
class Square:
    """A commutative square ``X . Yt = Y . Xt`` of finite sets.

    ``Xt: P -> B`` and ``Yt: P -> A`` out of the apex, ``X: A -> C`` and
    ``Y: B -> C`` into the corner.
    """

    Xt: SetMap
    Yt: SetMap
    X: SetMap
    Y: SetMap

    def __post_init__(self):
        if self.Yt.then(self.X) != self.Xt.then(self.Y):
            raise ValueError("square does not commute")

    @staticmethod
    def pullback(X: SetMap, Y: SetMap) -> "Square":
        """The canonical fiber product, pairs ``(b, a)`` in lexicographic order."""
        pairs = [(b, a) for b in range(Y.domain) for a in range(X.domain) if Y.values[b] == X.values[a]]
        return Square(SetMap(tuple(b for b, _ in pairs), Y.domain), SetMap(tuple(a for _, a in pairs), X.domain), X, Y)


@dataclass
class Comparison:
    """A canonical comparison map with the verdict of the rank test."""

    map: BundleMap
    is_iso: bool
    inverse: BundleMap | None
    failure: str | None = None


def beck_chevalley_map(sq: Square, v: LinearBundle) -> BundleMap:
    """``Yt_! Xt* V -> X* Y_! V``, the mate of ``Xt* (unit of Y_! -| Y*)``.

    With ``Xt* Y* = Yt* X*``, the map is the transpose under ``Yt_! -| Yt*``
    of ``Xt*(unit_V): Xt* V -> Xt* Y* Y_! V``.
    """
    unit = pullback_map(sq.Xt, sigma_unit(sq.Y, v))  # Xt* V -> Yt* X* Y_! V
    target = pullback_bundle(sq.X, sigma_bundle(sq.Y, v))
    return sigma_map(sq.Yt, unit).then(sigma_counit(sq.Yt, target))


def check_beck_chevalley(sq: Square, v: LinearBundle) -> Comparison:
    m = beck_chevalley_map(sq, v)
    return _verdict(m)


def _verdict(m: BundleMap) -> Comparison:
    for p, a in enumerate(m.mats):
        if not la.is_invertible(a):
            return Comparison(m, False, None, f"fiber {p}: {a.shape[1]} -> {a.shape[0]} is not invertible")
    inv = m.inverse()
    ok = m.then(inv) == identity_map(m.source) and inv.then(m) == identity_map(m.target)
    return Comparison(m, ok, inv if ok else None, None if ok else "inverse check failed")


def nondecreasing_maps(m: int, n: int) -> Iterator[SetMap]:
    """Maps ``m -> n`` with non-decreasing values: one per isomorphism class of ``m``-point sets over ``n``."""
    def go(start, left):
        if left == 0:
            yield ()
            return
        for v in range(start, n):
            for rest in go(v, left - 1):
                yield (v,) + rest
    for vals in go(0, m):
        yield SetMap(vals, n)


def canonical_cospans(max_size: int) -> Iterator[tuple[SetMap, SetMap]]:
    """Cospans ``A -> C <- B`` with non-decreasing legs, sizes up to ``max_size``.

    Every cospan is isomorphic to one of these (sort ``A`` and ``B`` by image).
    """
    for c in range(max_size + 1):
        for a in range(max_size + 1):
            for b in range(max_size + 1):
                for X in nondecreasing_maps(a, c):
                    for Y in nondecreasing_maps(b, c):
                        yield X, Y


# --------------------------------------------------------- tensor products


def tensor_bundle(a: LinearBundle, b: LinearBundle) -> LinearBundle:
    """Pointwise tensor; basis of ``A_p (x) B_p`` is pairs in lexicographic order."""
    if a.base != b.base:
        raise ValueError("tensor of bundles over different bases")
    labels = tuple(tuple((x, y) for x in a.basis(p) for y in b.basis(p)) for p in range(a.base))
    return LinearBundle(tuple(x * y for x, y in zip(a.dims, b.dims)), a.K, labels)


def tensor_map(f: BundleMap, g: BundleMap) -> BundleMap:
    K = f.source.K
    return BundleMap(tensor_bundle(f.source, g.source), tensor_bundle(f.target, g.target),
                     tuple(la.kron(x, y, K) for x, y in zip(f.mats, g.mats)))


def projection_map(phi: SetMap, tp: LinearBundle, t: LinearBundle) -> BundleMap:
    """``Sigma_phi(phi* T' (x) T) -> T' (x) Sigma_phi T``.

    The transpose under ``Sigma_phi -| phi*`` of ``id (x) unit``, i.e. at ``q``
    the block ``p`` is ``id_{T'_q} (x) (injection of T_p)``.
    """
    inner = tensor_map(identity_map(pullback_bundle(phi, tp)), sigma_unit(phi, t))
    # inner: phi* T' (x) T -> phi* T' (x) phi* Sigma T = phi* (T' (x) Sigma T)
    target = tensor_bundle(tp, sigma_bundle(phi, t))
    return sigma_map(phi, inner).then(sigma_counit(phi, target))


def check_projection_formula(phi: SetMap, tp: LinearBundle, t: LinearBundle) -> Comparison:
    _check_base(phi, tp, "codomain")
    _check_base(phi, t, "domain")
    return _verdict(projection_map(phi, tp, t))


def projection_naturality(phi: SetMap, fp: BundleMap, f: BundleMap) -> bool:
    """The comparison commutes with ``Sigma(phi* f' (x) f)`` and ``f' (x) Sigma f``."""
    left = sigma_map(phi, tensor_map(pullback_map(phi, fp), f))
    right = tensor_map(fp, sigma_map(phi, f))
    top = projection_map(phi, fp.source, f.source)
    bottom = projection_map(phi, fp.target, f.target)
    return top.then(right) == left.then(bottom)


def canonical_projection_instances(max_size: int, max_dim: int) -> Iterator[tuple[SetMap, LinearBundle, LinearBundle]]:
    """``(phi, T', T)`` with ``|P|, |Q| <= max_size`` and dims ``<= max_dim``, one per isomorphism class.

    An instance is a multiset of fiber types ``(dim T'_q, multiset of dims of
    T over q)``; permuting the domain and codomain compatibly conjugates the
    comparison by permutation matrices, so this covers every instance.
    """
    types = [(d, ms) for k in range(max_size + 1) for ms in _multisets(k, max_dim) for d in range(max_dim + 1)]
    for q in range(max_size + 1):
        for seq in _nondecreasing_sequences(len(types), q):
            fibers = [types[i] for i in seq]
            if sum(len(ms) for _, ms in fibers) > max_size:
                continue
            values = tuple(x for x, (_, ms) in enumerate(fibers) for _ in ms)
            yield (SetMap(values, q), LinearBundle(tuple(d for d, _ in fibers)),
                   LinearBundle(tuple(v for _, ms in fibers for v in ms)))


def _nondecreasing_sequences(n: int, length: int) -> Iterator[tuple[int, ...]]:
    for m in nondecreasing_maps(length, n):
        yield m.values


def _multisets(k: int, max_dim: int) -> Iterator[tuple[int, ...]]:
    for m in nondecreasing_maps(k, max_dim + 1):
        yield m.values


# ------------------------------------------------------------ fibers of a theory


class Fiber:
    """The ``size``-fold power of a theory category: the fiber over a set of that size.

    Objects are tuples of arities and arrows tuples of theory arrows, both
    encoded in mixed radix so that the fiber over a point has the same
    indices as the theory itself.
    """

    def __init__(self, t: TheoryPresentation, size: int):
        self.theory = t
        self.size = size
        base = t.category
        self._n_obj = base.n_objects
        self._n_arr = base.n_arrows
        self.objects = list(product(range(self._n_obj), repeat=size))
        arrows = []
        for g in product(range(self._n_arr), repeat=size):
            s = self.obj(tuple(base.src[x] for x in g))
            d = self.obj(tuple(base.tgt[x] for x in g))
            arrows.append(("(" + ",".join(base.arrow_names[x] for x in g) + ")", s, d))
        ids = [self.arrow(tuple(base.identities[c] for c in o)) for o in self.objects]

        def comp(g, f):
            gs, fs = self.arrow_tuple(g), self.arrow_tuple(f)
            parts = [base.raw_compose(a, b) for a, b in zip(gs, fs)]
            if any(p is None for p in parts):
                return None
            return self.arrow(tuple(parts))

        self.category = FinCategory(["(" + ",".join(map(str, o)) + ")" for o in self.objects],
                                    arrows, ids, comp, name=f"{t.name}^{size}")

    def obj(self, o: Sequence[int]) -> int:
        return _radix(o, self._n_obj)

    def arrow(self, g: Sequence[int]) -> int:
        return _radix(g, self._n_arr)

    def arrow_tuple(self, g: int) -> tuple[int, ...]:
        return _unradix(g, self._n_arr, self.size)

    def pull(self, phi: SetMap, x: Sequence[int]) -> tuple[int, ...]:
        """Reindex an object or arrow tuple of the fiber over ``phi.codomain``."""
        return tuple(x[v] for v in phi.values)

    def delta(self, j: int, x: int, arrow: bool = False) -> tuple[int, ...]:
        """``x`` at slot ``j`` and the initial object (or its identity) elsewhere."""
        fill = self.theory.category.identities[0] if arrow else 0
        return tuple(x if k == j else fill for k in range(self.size))

    def injection(self, T: Sequence[int], j: int) -> int:
        """``delta_j T_j -> T``: the identity at ``j`` and the unique arrow out of ``0`` elsewhere."""
        cat = self.theory.category
        return self.arrow(tuple(cat.identities[T[k]] if k == j else cat.hom(0, T[k])[0]
                                for k in range(self.size)))


@lru_cache(maxsize=None)
def fiber(t: TheoryPresentation, size: int) -> Fiber:
    return Fiber(t, size)


def push_object(phi: SetMap, T: Sequence[int], n: int) -> tuple[int, ...] | None:
    """Fiberwise sums ``(phi_! T)_k``, or ``None`` when some sum exceeds the truncation ``n``."""
    out = tuple(sum(T[i] for i in phi.preimage(k)) for k in range(phi.codomain))
    return out if all(s <= n for s in out) else None


def push_unit(t: TheoryPresentation, phi: SetMap, T: Sequence[int]) -> tuple[int, ...] | None:
    """``T -> phi^* phi_! T``: each ``T_i`` included as its block of the sum over its fiber."""
    S = push_object(phi, T, t.n)
    if S is None:
        return None
    offsets = {}
    for k in range(phi.codomain):
        o = 0
        for i in phi.preimage(k):
            offsets[i] = o
            o += T[i]
    return tuple(t.tau_of(T[i], S[phi.values[i]], range(offsets[i], offsets[i] + T[i]))
                 for i in range(len(T)))


def _radix(xs: Sequence[int], b: int) -> int:
    r = 0
    for x in xs:
        r = r * b + x
    return r


def _unradix(r: int, b: int, n: int) -> tuple[int, ...]:
    out = [0] * n
    for k in range(n - 1, -1, -1):
        r, out[k] = divmod(r, b)
    return tuple(out)


class FiberedPresentation:
    """The Grothendieck category of the fibers over finite sets of the given sizes.

    An arrow ``(I, T) -> (K, S)`` is a map ``phi: I -> K`` with an arrow
    ``T -> phi^* S`` of the fiber over ``I``.  Chosen cartesian lifts are
    identities in the fiber, so the cleavage is split.  Opcartesian lifts
    exist only where the fiberwise sums stay within the truncation.
    """

    def __init__(self, t: TheoryPresentation, base_sizes: Sequence[int]):
        self.theory = t
        self.base = function_category(base_sizes, name="sets")
        self.sizes = list(base_sizes)
        self.fibers = [fiber(t, s) for s in base_sizes]
        self.maps = [SetMap(v, base_sizes[self.base.tgt[a]]) for a, v in enumerate(self.base.functions)]
        objects, self._obj = [], {}
        for b, fb in enumerate(self.fibers):
            for T in range(fb.category.n_objects):
                self._obj[b, T] = len(objects)
                objects.append((b, T))
        arrows, self.arrow_data, self._arr = [], [], {}
        for a in range(self.base.n_arrows):
            b, c = self.base.src[a], self.base.tgt[a]
            fb, fc = self.fibers[b], self.fibers[c]
            for S in range(fc.category.n_objects):
                pS = fb.obj(fb.pull(self.maps[a], fc.objects[S]))
                for T in range(fb.category.n_objects):
                    for g in fb.category.hom(T, pS):
                        self._arr[a, S, g] = len(arrows)
                        self.arrow_data.append((a, S, g))
                        arrows.append((f"{self.base.arrow_names[a]}|{fb.category.arrow_names[g]}",
                                       self._obj[b, T], self._obj[c, S]))
        ids = [self._arr[self.base.identities[b], T, self.fibers[b].category.identities[T]] for b, T in objects]

        def comp(h, k):
            (a2, R, g2), (a1, S, g1) = self.arrow_data[h], self.arrow_data[k]
            if arrows[k][2] != arrows[h][1]:
                return None
            b = self.base.src[a1]
            fb = self.fibers[b]
            pulled = fb.arrow(fb.pull(self.maps[a1], self.fibers[self.base.src[a2]].arrow_tuple(g2)))
            return self._arr[self.base.compose(a2, a1), R, fb.category.compose(pulled, g1)]

        names = [f"{base_sizes[b]}:{self.fibers[b].category.objects[T]}" for b, T in objects]
        self.objects = objects
        self.category = FinCategory(names, arrows, ids, comp, name=f"fibered {t.name}")
        self.projection = FinFunctor(self.category, self.base, [b for b, _ in objects],
                                     [a for a, _, _ in self.arrow_data], name="p")

    def object_id(self, b: int, T: Sequence[int]) -> int:
        return self._obj[b, self.fibers[b].obj(T)]

    def cartesian_lift(self, a: int, S: int) -> int:
        """The chosen cartesian arrow over base arrow ``a`` ending at object ``S`` of the target fiber."""
        b, c = self.base.src[a], self.base.tgt[a]
        fb = self.fibers[b]
        pS = fb.obj(fb.pull(self.maps[a], self.fibers[c].objects[S]))
        return self._arr[a, S, fb.category.identities[pS]]

    def opcartesian_lift(self, a: int, T: int) -> int | None:
        """The chosen opcartesian arrow over ``a`` out of object ``T`` of the source fiber, if sums allow."""
        b, c = self.base.src[a], self.base.tgt[a]
        fb = self.fibers[b]
        To = fb.objects[T]
        unit = push_unit(self.theory, self.maps[a], To)
        if unit is None:
            return None
        S = self.fibers[c].obj(push_object(self.maps[a], To, self.theory.n))
        return self._arr[a, S, fb.arrow(unit)]

    def is_cartesian(self, lift: int) -> bool:
        """Every arrow into the target whose base part factors through ``lift``'s factors uniquely."""
        cat, base, p = self.category, self.base, self.projection
        a = p.arr_map[lift]
        for h in cat.arrows_into(cat.tgt[lift]):
            for u in base.hom(base.src[p.arr_map[h]], base.src[a]):
                if base.compose(a, u) != p.arr_map[h]:
                    continue
                sols = [k for k in cat.hom(cat.src[h], cat.src[lift])
                        if p.arr_map[k] == u and cat.compose(lift, k) == h]
                if len(sols) != 1:
                    return False
        return True

    def is_opcartesian(self, lift: int) -> bool:
        cat, base, p = self.category, self.base, self.projection
        a = p.arr_map[lift]
        for h in cat.arrows_from(cat.src[lift]):
            for u in base.hom(base.tgt[a], base.tgt[p.arr_map[h]]):
                if base.compose(u, a) != p.arr_map[h]:
                    continue
                sols = [k for k in cat.hom(cat.tgt[lift], cat.tgt[h])
                        if p.arr_map[k] == u and cat.compose(k, lift) == h]
                if len(sols) != 1:
                    return False
        return True

    def check_lifts(self) -> list[Violation]:
        """Enumerate the universal properties of every chosen lift, and splitness of the cartesian ones."""
        cat, base = self.category, self.base
        report: list[Violation] = []
        for a in range(base.n_arrows):
            for S in range(self.fibers[base.tgt[a]].category.n_objects):
                lift = self.cartesian_lift(a, S)
                if not self.is_cartesian(lift):
                    report.append(Violation("cartesian", f"{cat.arrow_names[lift]} is not cartesian", (a, S)))
            for T in range(self.fibers[base.src[a]].category.n_objects):
                lift = self.opcartesian_lift(a, T)
                if lift is not None and not self.is_opcartesian(lift):
                    report.append(Violation("opcartesian", f"{cat.arrow_names[lift]} is not opcartesian", (a, T)))
        for a1 in range(base.n_arrows):
            for a2 in base.arrows_from(base.tgt[a1]):
                for S in range(self.fibers[base.tgt[a2]].category.n_objects):
                    l2 = self.cartesian_lift(a2, S)
                    l1 = self.cartesian_lift(a1, self._pull_index(a2, S))
                    if cat.compose(l2, l1) != self.cartesian_lift(base.compose(a2, a1), S):
                        report.append(Violation("split", "chosen cartesian lifts do not compose", (a1, a2, S)))
        return report

    def _pull_index(self, a: int, S: int) -> int:
        fb = self.fibers[self.base.src[a]]
        return fb.obj(fb.pull(self.maps[a], self.fibers[self.base.tgt[a]].objects[S]))


# ------------------------------------------------------------ models


Key = tuple[int, int]


class LawvereModel:
    """A fibered functor into families of sets over ``I x J``, given fiberwise.

    ``components[I][i, j]`` is a presheaf on the fiber over ``I`` whose value
    at ``T`` is the ``(i, j)`` member of the family ``M^I(T)``.  Reindexing is
    required to hold on the nose (split), so the identification
    ``M^I(phi^* T)(i, j) = M^K(T)(phi(i), j)`` uses the same element indices.
    """

    def __init__(self, t: TheoryPresentation, J: int, components: dict[int, dict[Key, Presheaf]]):
        self.theory = t
        self.J = J
        self.components = components

    @property
    def sizes(self) -> list[int]:
        return sorted(self.components)

    @classmethod
    def from_models(cls, t: TheoryPresentation, models: Sequence[Presheaf], sizes: Sequence[int]) -> "LawvereModel":
        """``M^I(T)(i, j) = A_j(T_i)`` for a ``J``-family of presheaves ``A_j`` on the theory."""
        comps = {}
        for I in sizes:
            f = fiber(t, I)
            comps[I] = {(i, j): _slot_presheaf(f, i, a) for i in range(I) for j, a in enumerate(models)}
        return cls(t, len(models), comps)

    def check_cartesian(self) -> list[Violation]:
        t, report = self.theory, []
        for I in self.sizes:
            fi = fiber(t, I)
            for K in self.sizes:
                fk = fiber(t, K)
                for phi in SetMap.all(I, K):
                    for g in range(fk.category.n_arrows):
                        pg = fi.arrow(fi.pull(phi, fk.arrow_tuple(g)))
                        for (i, j), p in self.components[I].items():
                            if p.actions[pg] != self.components[K][phi.values[i], j].actions[g]:
                                report.append(Violation("cartesian", f"reindexing along {phi.values} changes "
                                                        f"member ({i},{j}) at {fk.category.arrow_names[g]}",
                                                        (phi.values, K, g, i, j)))
                                break
                        else:
                            continue
                        break
        return report

    def check_multiplicative(self) -> list[Violation]:
        """``M^K(phi_! T)(k, j) -> prod_{phi(i) = k} M^I(T)(i, j)`` is bijective wherever ``phi_! T`` exists."""
        t, report = self.theory, []
        for I in self.sizes:
            fi = fiber(t, I)
            for K in self.sizes:
                fk = fiber(t, K)
                for phi in SetMap.all(I, K):
                    for T in fi.objects:
                        S = push_object(phi, T, t.n)
                        if S is None:
                            continue
                        unit = fi.arrow(push_unit(t, phi, T))
                        Ti, Sk = fi.obj(T), fk.obj(S)
                        for k in range(K):
                            for j in range(self.J):
                                legs = [self.components[I][i, j] for i in phi.preimage(k)]
                                expected = 1
                                for leg in legs:
                                    expected *= leg.sizes[Ti]
                                source = self.components[K][k, j].sizes[Sk]
                                images = {tuple(leg.actions[unit][x] for leg in legs) for x in range(source)}
                                if source != expected or len(images) != source:
                                    report.append(Violation("multiplicative", f"not a product along {phi.values} "
                                                            f"at {T}, member ({k},{j}): {source} vs {expected}",
                                                            (phi.values, T, k, j)))
        return report


def _slot_presheaf(f: Fiber, i: int, a: Presheaf) -> Presheaf:
    """``T -> a(T_i)`` on the fiber ``f``."""
    cat = f.category
    sizes = [a.sizes[o[i]] for o in f.objects]
    actions = [a.actions[f.arrow_tuple(g)[i]] for g in range(cat.n_arrows)]
    labels = [[a.label(o[i], x) for x in range(a.sizes[o[i]])] for o in f.objects]
    return Presheaf(cat, sizes, actions, labels)


def product_linton(t: TheoryPresentation, models: Sequence[Presheaf]) -> Presheaf:
    """``T -> prod_j A_j(T_j)`` on the fiber over ``len(models)``."""
    f = fiber(t, len(models))
    values = [list(product(*(range(a.sizes[c]) for a, c in zip(models, o)))) for o in f.objects]

    def act(g, x):
        gs = f.arrow_tuple(g)
        return tuple(a.actions[h][v] for a, h, v in zip(models, gs, x))

    return Presheaf.from_function(f.category, values, act)


def linton_slot(p: Presheaf, t: TheoryPresentation, j: int) -> Presheaf:
    """``n -> P(delta_j n)``: the ``j``-th slot of a presheaf on the fiber, as a presheaf on the theory."""
    f = fiber(t, _fiber_size(p, t))
    cat = t.category
    sizes = [p.sizes[f.obj(f.delta(j, n))] for n in range(cat.n_objects)]
    actions = [p.actions[f.arrow(f.delta(j, g, arrow=True))] for g in range(cat.n_arrows)]
    labels = [[p.label(f.obj(f.delta(j, n)), x) for x in range(sizes[n])] for n in range(cat.n_objects)]
    return Presheaf(cat, sizes, actions, labels)


def _fiber_size(p: Presheaf, t: TheoryPresentation) -> int:
    n, size = p.category.n_objects, 0
    while t.category.n_objects ** size < n:
        size += 1
    if t.category.n_objects ** size != n:
        raise ValueError("presheaf is not on a fiber of this theory")
    return size


def linton_violations(p: Presheaf, t: TheoryPresentation) -> list[Violation]:
    """``P(T) -> prod_j P(delta_j T_j)`` bijective, and every slot restricted to arities a sheaf."""
    J = _fiber_size(p, t)
    f = fiber(t, J)
    report = []
    for T in f.objects:
        Ti = f.obj(T)
        legs = [(f.injection(T, j), f.obj(f.delta(j, T[j]))) for j in range(J)]
        expected = 1
        for _, d in legs:
            expected *= p.sizes[d]
        images = {tuple(p.actions[g][x] for g, _ in legs) for x in range(p.sizes[Ti])}
        if p.sizes[Ti] != expected or len(images) != expected:
            report.append(Violation("product", f"value at {T} is not the product of its slots", (T,)))
    for j in range(J):
        if not is_sheaf(restrict(t.tau, linton_slot(p, t, j)), t.site):
            report.append(Violation("slot", f"slot {j} restricted to arities is not a sheaf", (j,)))
    return report


def is_linton(p: Presheaf, t: TheoryPresentation) -> bool:
    return not linton_violations(p, t)


def lawvere_to_linton(m: LawvereModel) -> Presheaf:
    """``alpha_J``: maps of families from the diagonal of ``J x J`` into ``M^J(T)``.

    Such a map picks one element of each diagonal member, so the value at
    ``T`` is ``prod_j M^J(T)(j, j)`` and arrows act slotwise.
    """
    bad = m.check_cartesian() or m.check_multiplicative()
    if bad:
        raise ValueError(f"not a Lawvere model: {bad[0].detail}")
    f = fiber(m.theory, m.J)
    diag = [m.components[m.J][j, j] for j in range(m.J)]
    values = [list(product(*(range(d.sizes[T]) for d in diag))) for T in range(f.category.n_objects)]
    return Presheaf.from_function(f.category, values,
                                  lambda g, x: tuple(d.actions[g][v] for d, v in zip(diag, x)))


def linton_to_lawvere(p: Presheaf, t: TheoryPresentation, sizes: Sequence[int]) -> LawvereModel:
    """``beta_J``: ``M^I(T)(i, j) = P(delta_j T_i)``, the value at the point ``(i, j)`` of ``I x J``."""
    J = _fiber_size(p, t)
    return LawvereModel.from_models(t, [linton_slot(p, t, j) for j in range(J)], sizes)


@dataclass
class RoundTrip:
    """Witnessed isomorphisms, one per component; ``None`` marks a failure."""

    isos: dict[tuple, Isomorphism | None]

    @property
    def ok(self) -> bool:
        return bool(self.isos) and all(v is not None for v in self.isos.values())


def alpha_beta(p: Presheaf, t: TheoryPresentation, sizes: Sequence[int]) -> RoundTrip:
    """``P -> alpha(beta(P))``, ``x -> (P(iota_j) x)_j``, checked to be a natural isomorphism."""
    bad = linton_violations(p, t)
    if bad:
        raise ValueError(f"not a Linton model: {bad[0].detail}")
    back = lawvere_to_linton(linton_to_lawvere(p, t, sizes))
    f = fiber(t, _fiber_size(p, t))
    comps = []
    for Ti, T in enumerate(f.objects):
        legs = [f.injection(T, j) for j in range(f.size)]
        index = {v: k for k, v in enumerate(back.labels[Ti])}
        comps.append(tuple(index[tuple(p.actions[g][x] for g in legs)] for x in range(p.sizes[Ti])))
    return RoundTrip({(): witness_iso(NatTransformation(p, back, comps))})


def beta_alpha(m: LawvereModel) -> RoundTrip:
    """``beta(alpha(M)) -> M``: a family of diagonal elements goes to its ``j``-th member, componentwise."""
    back = linton_to_lawvere(lawvere_to_linton(m), m.theory, m.sizes)
    isos = {}
    for I in m.sizes:
        for key, target in m.components[I].items():
            source = back.components[I][key]
            j = key[1]
            comps = [tuple(source.labels[T][y][j] for y in range(source.sizes[T]))
                     for T in range(source.category.n_objects)]
            isos[(I, *key)] = witness_iso(NatTransformation(source, target, comps))
    return RoundTrip(isos)
