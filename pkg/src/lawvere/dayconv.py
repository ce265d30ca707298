"""Day convolution and internal hom over finite monoidal categories.

A monoidal structure may be partial: the tensor of two objects can be
undefined (a truncated theory has no object ``m * n`` once it exceeds ``N``).
Day convolution then runs its coend over the pairs whose tensor exists, which
is still enough for the reflection into models to produce the tensor product.
The internal hom needs a total structure, except into a model, whose values at
large arities are determined by its carrier.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .fincat.core import (
    FinCategory,
    Isomorphism,
    NatTransformation,
    Presheaf,
    Violation,
    poset_category,
    representable,
    witness_iso,
)
from .fincat.homs import iter_homs
from .theory import TheoryPresentation


class MonoidalFinCategory:
    """A (possibly partial) monoidal structure on a finite category.

    ``tensor_obj(a, b)`` returns ``None`` where undefined.  Structure arrows:
    ``associator(a, b, c): (a b) c -> a (b c)``, ``left_unitor(a): e a -> a``,
    ``right_unitor(a): a e -> a`` and ``symmetry(a, b): a b -> b a``.
    """

    def __init__(self, base: FinCategory, unit: int,
                 tensor_obj: Callable[[int, int], int | None],
                 tensor_arr: Callable[[int, int], int],
                 associator: Callable[[int, int, int], int] | None = None,
                 left_unitor: Callable[[int], int] | None = None,
                 right_unitor: Callable[[int], int] | None = None,
                 symmetry: Callable[[int, int], int] | None = None,
                 name: str = ""):
        self.base = base
        self.unit = unit
        self._tobj = tensor_obj
        self._tarr = lru_cache(maxsize=None)(tensor_arr)
        ids = base.identities
        self.associator = associator or (lambda a, b, c: ids[self.tensor(self.tensor(a, b), c)])
        self.left_unitor = left_unitor or (lambda a: ids[a])
        self.right_unitor = right_unitor or (lambda a: ids[a])
        self.symmetry = symmetry
        self.name = name or base.name
        self._subcats: dict[frozenset[int], list[int]] = {}

    def tensor(self, a: int, b: int) -> int | None:
        return self._tobj(a, b)

    def tensor_arrows(self, f: int, g: int) -> int | None:
        cat = self.base
        if self.tensor(cat.src[f], cat.src[g]) is None or self.tensor(cat.tgt[f], cat.tgt[g]) is None:
            return None
        return self._tarr(f, g)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        n = self.base.n_objects
        return [(a, b) for a in range(n) for b in range(n) if self.tensor(a, b) is not None]

    @property
    def total(self) -> bool:
        return len(self.pairs) == self.base.n_objects ** 2

    def left_partners(self, b: int) -> list[int]:
        return [a for a in range(self.base.n_objects) if self.tensor(a, b) is not None]

    def right_partners(self, a: int) -> list[int]:
        return [b for b in range(self.base.n_objects) if self.tensor(a, b) is not None]

    def generators_on(self, objs: Sequence[int]) -> list[int]:
        """Generators of the full subcategory on ``objs``."""
        key = frozenset(objs)
        hit = self._subcats.get(key)
        if hit is None:
            if len(key) == self.base.n_objects:
                hit = list(self.base.generators())
            else:
                sub, amap = full_subcategory(self.base, sorted(key))
                hit = [amap[g] for g in sub.generators()]
            self._subcats[key] = hit
        return hit

    def __repr__(self) -> str:
        return f"MonoidalFinCategory({self.name})"


def full_subcategory(cat: FinCategory, objs: Sequence[int]) -> tuple[FinCategory, list[int]]:
    """The full subcategory on ``objs`` and the map from its arrow ids to ``cat``'s."""
    pos = {o: i for i, o in enumerate(objs)}
    amap = [f for a in objs for b in objs for f in cat.hom(a, b)]
    back = {f: i for i, f in enumerate(amap)}
    arrows = [(cat.arrow_names[f], pos[cat.src[f]], pos[cat.tgt[f]]) for f in amap]

    def comp(g, f):
        h = cat.raw_compose(amap[g], amap[f])
        return None if h is None else back[h]

    sub = FinCategory([cat.objects[o] for o in objs], arrows, [back[cat.identities[o]] for o in objs], comp,
                      name=f"{cat.name}|{len(objs)}")
    return sub, amap


# ---------------------------------------------------------------- checks


def check_monoidal(m: MonoidalFinCategory, max_pairs: int | None = None) -> list[Violation]:
    """Functoriality of the tensor, naturality of the structure arrows, pentagon, triangle, hexagon.

    Only triples and pairs whose tensors are defined are checked.
    """
    cat = m.base
    n = cat.n_objects
    T = m.tensor
    report: list[Violation] = []
    comp = cat.compose

    def bad(kind, detail, witness):
        report.append(Violation(kind, detail, witness))

    for a, b in m.pairs:
        if m.tensor_arrows(cat.identities[a], cat.identities[b]) != cat.identities[T(a, b)]:
            bad("tensor_identity", f"id{cat.objects[a]} (x) id{cat.objects[b]} is not an identity", (a, b))
    # functoriality: (g f) (x) (k h) = (g (x) k)(f (x) h) whenever defined
    checked = 0
    arrows = range(cat.n_arrows)
    for f in arrows:
        for h in arrows:
            if T(cat.src[f], cat.src[h]) is None or T(cat.tgt[f], cat.tgt[h]) is None:
                continue
            fh = m.tensor_arrows(f, h)
            if cat.src[fh] != T(cat.src[f], cat.src[h]) or cat.tgt[fh] != T(cat.tgt[f], cat.tgt[h]):
                bad("tensor_endpoints", "tensor of arrows has the wrong endpoints", (f, h))
                continue
            for g in cat.arrows_from(cat.tgt[f]):
                for k in cat.arrows_from(cat.tgt[h]):
                    if T(cat.tgt[g], cat.tgt[k]) is None:
                        continue
                    lhs = m.tensor_arrows(comp(g, f), comp(k, h))
                    rhs = comp(m.tensor_arrows(g, k), fh)
                    if lhs != rhs:
                        bad("tensor_functor", "interchange law fails", (g, f, k, h))
                        return report
                    checked += 1
                    if max_pairs is not None and checked >= max_pairs:
                        break
    ids = cat.identities
    trip = [(a, b, c) for a in range(n) for b in range(n) for c in range(n)
            if T(a, b) is not None and T(b, c) is not None
            and T(T(a, b), c) is not None and T(a, T(b, c)) is not None]
    for a, b, c in trip:
        al = m.associator(a, b, c)
        if cat.src[al] != T(T(a, b), c) or cat.tgt[al] != T(a, T(b, c)):
            bad("associator", "associator has the wrong endpoints", (a, b, c))
    for a in range(n):
        if T(m.unit, a) is None or T(a, m.unit) is None:
            bad("unit", f"unit tensor with {cat.objects[a]} undefined", (a,))
            continue
        lu, ru = m.left_unitor(a), m.right_unitor(a)
        if (cat.src[lu], cat.tgt[lu]) != (T(m.unit, a), a) or (cat.src[ru], cat.tgt[ru]) != (T(a, m.unit), a):
            bad("unitor", "unitor has the wrong endpoints", (a,))
    if report:
        return report
    # naturality of associator and unitors on generators
    gens = cat.generators()
    for f in gens:
        a, a2 = cat.src[f], cat.tgt[f]
        e = ids[m.unit]
        if comp(m.left_unitor(a2), m.tensor_arrows(e, f)) != comp(f, m.left_unitor(a)):
            bad("unitor_natural", "left unitor is not natural", (f,))
        if comp(m.right_unitor(a2), m.tensor_arrows(f, e)) != comp(f, m.right_unitor(a)):
            bad("unitor_natural", "right unitor is not natural", (f,))
        for b in range(n):
            for c in range(n):
                for slot in range(3):
                    objs = [b, c]
                    objs.insert(slot, a)
                    objs2 = list(objs)
                    objs2[slot] = a2
                    if not _assoc_defined(m, *objs) or not _assoc_defined(m, *objs2):
                        continue
                    fs = [ids[o] for o in objs]
                    fs[slot] = f
                    left = m.tensor_arrows(m.tensor_arrows(fs[0], fs[1]), fs[2])
                    right = m.tensor_arrows(fs[0], m.tensor_arrows(fs[1], fs[2]))
                    if comp(m.associator(*objs2), left) != comp(right, m.associator(*objs)):
                        bad("associator_natural", "associator is not natural", (f, slot, b, c))
    for a, b, c in trip:
        for d in range(n):
            if not (_assoc_defined(m, T(a, b), c, d) and _assoc_defined(m, a, b, T(c, d))
                    and _assoc_defined(m, a, b, c) and _assoc_defined(m, b, c, d)
                    and _assoc_defined(m, a, T(b, c), d)):
                continue
            lhs = comp(m.associator(a, b, T(c, d)), m.associator(T(a, b), c, d))
            rhs = comp(m.tensor_arrows(ids[a], m.associator(b, c, d)),
                       comp(m.associator(a, T(b, c), d), m.tensor_arrows(m.associator(a, b, c), ids[d])))
            if lhs != rhs:
                bad("pentagon", "pentagon fails", (a, b, c, d))
    e = m.unit
    for a in range(n):
        for b in range(n):
            if not _assoc_defined(m, a, e, b):
                continue
            lhs = comp(m.tensor_arrows(ids[a], m.left_unitor(b)), m.associator(a, e, b))
            rhs = m.tensor_arrows(m.right_unitor(a), ids[b])
            if lhs != rhs:
                bad("triangle", "triangle fails", (a, b))
    if m.symmetry is not None:
        report.extend(_check_symmetry(m))
    return report


def _assoc_defined(m: MonoidalFinCategory, a, b, c) -> bool:
    T = m.tensor
    if a is None or b is None or c is None:
        return False
    return (T(a, b) is not None and T(b, c) is not None
            and T(T(a, b), c) is not None and T(a, T(b, c)) is not None)


def _check_symmetry(m: MonoidalFinCategory) -> list[Violation]:
    cat, T, s, comp, ids = m.base, m.tensor, m.symmetry, m.base.compose, m.base.identities
    report = []
    for a, b in m.pairs:
        sab = s(a, b)
        if (cat.src[sab], cat.tgt[sab]) != (T(a, b), T(b, a)):
            report.append(Violation("symmetry", "symmetry has the wrong endpoints", (a, b)))
            return report
        if comp(s(b, a), sab) != ids[T(a, b)]:
            report.append(Violation("symmetry", "symmetry is not involutive", (a, b)))
    for f in cat.generators():
        for b in range(cat.n_objects):
            a, a2 = cat.src[f], cat.tgt[f]
            if T(a, b) is None or T(a2, b) is None:
                continue
            lhs = comp(s(a2, b), m.tensor_arrows(f, ids[b]))
            rhs = comp(m.tensor_arrows(ids[b], f), s(a, b))
            if lhs != rhs:
                report.append(Violation("symmetry_natural", "symmetry is not natural", (f, b)))
    n = cat.n_objects
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if not (_assoc_defined(m, a, b, c) and _assoc_defined(m, b, c, a) and _assoc_defined(m, b, a, c)):
                    continue
                lhs = comp(m.associator(b, c, a), comp(s(a, T(b, c)), m.associator(a, b, c)))
                rhs = comp(m.tensor_arrows(ids[b], s(a, c)),
                           comp(m.associator(b, a, c), m.tensor_arrows(s(a, b), ids[c])))
                if lhs != rhs:
                    report.append(Violation("hexagon", "hexagon fails", (a, b, c)))
    return report


# -------------------------------------------------------------- fixtures


def cartesian_finsets(cat: FinCategory, sizes: Sequence[int]) -> MonoidalFinCategory:
    """Finite sets under cartesian product, defined where the product is among ``sizes``.

    ``cat`` must be the function category on ``sizes`` (for example a site's
    category); pairs ``(i, j)`` are ordered as ``i * |b| + j``.
    """
    index = {(cat.src[f], cat.tgt[f], v): f for f, v in enumerate(cat.functions)}
    where = {s: i for i, s in enumerate(sizes)}

    def tobj(a, b):
        return where.get(sizes[a] * sizes[b])

    def tarr(f, g):
        b2 = sizes[cat.tgt[g]]
        vf, vg = cat.functions[f], cat.functions[g]
        vals = tuple(x * b2 + y for x in vf for y in vg)
        return index[tobj(cat.src[f], cat.src[g]), tobj(cat.tgt[f], cat.tgt[g]), vals]

    def sym(a, b):
        na, nb = sizes[a], sizes[b]
        vals = tuple(j * na + i for i in range(na) for j in range(nb))
        return index[tobj(a, b), tobj(b, a), vals]

    return MonoidalFinCategory(cat, where[1], tobj, tarr, symmetry=sym, name=f"{cat.name} (x)")


def theory_monoidal(t: TheoryPresentation) -> MonoidalFinCategory:
    """The tensor of a commutative theory: ``m (x) n = m n`` (where at most ``N``).

    ``u (x) v`` has component ``(i, j)`` equal to ``u_i`` with the ``a``-th
    variable replaced by ``v_j`` acting on block ``a``.  Functoriality of this
    formula is exactly commutativity of the theory; see :func:`tensor_sketchy`.
    """
    cat, N = t.category, t.n

    def tobj(a, b):
        return a * b if a * b <= N else None

    def tarr(u, v):
        m, m2 = cat.src[u], cat.tgt[u]
        n, n2 = cat.src[v], cat.tgt[v]
        target = m2 * n2
        comps = []
        cu, cv = t.components(u), t.components(v)
        for i in range(m):
            for j in range(n):
                if m2 == 0:
                    comps.append(cu[i])
                    continue
                ws = [cat.compose(t.tau_of(n2, target, tuple(a * n2 + b for b in range(n2))), cv[j]) for a in range(m2)]
                comps.append(cat.compose(t.copair(m2, target, ws), cu[i]))
        return t.copair(m * n, target, comps)

    def sym(a, b):
        return t.tau_of(a * b, a * b, tuple(j * a + i for i in range(a) for j in range(b)))

    return MonoidalFinCategory(cat, 1, tobj, tarr, symmetry=sym, name=f"{t.name} (x)")


def discrete_monoid(elements: Sequence[str], op: Callable[[int, int], int], unit: int, name: str) -> MonoidalFinCategory:
    n = len(elements)
    cat = FinCategory(list(elements), [(f"id{e}", i, i) for i, e in enumerate(elements)], range(n),
                      {(i, i): i for i in range(n)}, name=name)
    return MonoidalFinCategory(cat, unit, op, lambda f, g: op(f, g), symmetry=lambda a, b: op(a, b), name=name)


def monoid_category(elements: Sequence[str], op: Callable[[int, int], int], unit: int, name: str) -> MonoidalFinCategory:
    """One object; arrows are the elements of a commutative monoid, which is also the tensor."""
    n = len(elements)
    cat = FinCategory(["*"], [(e, 0, 0) for e in elements], [unit],
                      {(g, f): op(g, f) for g in range(n) for f in range(n)}, name=name)
    return MonoidalFinCategory(cat, 0, lambda a, b: 0, op, associator=lambda a, b, c: unit,
                               left_unitor=lambda a: unit, right_unitor=lambda a: unit,
                               symmetry=lambda a, b: unit, name=name)


def chain(n: int, meet: bool) -> MonoidalFinCategory:
    """The chain ``0 < 1 < ... < n-1`` under ``min`` (unit top) or ``max`` (unit bottom)."""
    cat = poset_category([str(i) for i in range(n)], lambda i, j: i <= j)
    op = min if meet else max

    def tarr(f, g):
        return cat.hom(op(cat.src[f], cat.src[g]), op(cat.tgt[f], cat.tgt[g]))[0]

    def sym(a, b):
        return cat.identities[op(a, b)]

    name = f"chain{n}-{'min' if meet else 'max'}"
    return MonoidalFinCategory(cat, n - 1 if meet else 0, op, tarr, symmetry=sym, name=name)


def _finset1() -> MonoidalFinCategory:
    from .site import TruncatedFinSetSite
    return cartesian_finsets(TruncatedFinSetSite(1).category, [0, 1])


def _theory1(name: str) -> Callable[[], MonoidalFinCategory]:
    def build():
        from .theory import BUILTIN_THEORIES
        return theory_monoidal(BUILTIN_THEORIES[name](1))
    return build


MONOIDAL_FIXTURES: dict[str, Callable[[], MonoidalFinCategory]] = {
    "z2-discrete": lambda: discrete_monoid(["0", "1"], lambda a, b: (a + b) % 2, 0, "z2-discrete"),
    "z3-discrete": lambda: discrete_monoid(["0", "1", "2"], lambda a, b: (a + b) % 3, 0, "z3-discrete"),
    "z2-monoid": lambda: monoid_category(["0", "1"], lambda a, b: (a + b) % 2, 0, "z2-monoid"),
    "chain3-min": lambda: chain(3, True),
    "chain3-max": lambda: chain(3, False),
    "finset1-cartesian": _finset1,
    "f2-theory-1": _theory1("f2"),
}


# --------------------------------------------------------- day convolution


@dataclass
class DayProduct:
    """``P (x) Q`` with its coend data.

    An element at ``C`` is the class of ``(x, y, u)`` with ``x`` in ``P(a)``,
    ``y`` in ``Q(b)`` and ``u: C -> a (x) b``; ``reps[C][i]`` is the least
    member ``(a, b, x, y, u)`` of class ``i``.
    """

    presheaf: Presheaf
    left: Presheaf
    right: Presheaf
    monoidal: MonoidalFinCategory
    reps: list[list[tuple[int, int, int, int, int]]]
    _classify: list[Callable[[int, int, int, int, int], int]] = field(repr=False)

    def classify(self, c: int, a: int, b: int, x: int, y: int, u: int) -> int:
        return self._classify[c](a, b, x, y, u)


class _Blocks:
    """Dense ids for the triples ``(x, y, u)`` at a fixed object ``C``."""

    def __init__(self, m: MonoidalFinCategory, p: Presheaf, q: Presheaf, c: int):
        cat = m.base
        self.blocks = []
        self.offset = {}
        self.hom_index = {}
        off = 0
        for a, b in m.pairs:
            homs = cat.hom(c, m.tensor(a, b))
            size = p.sizes[a] * q.sizes[b] * len(homs)
            self.offset[a, b] = off
            self.blocks.append((a, b, off, q.sizes[b], homs))
            self.hom_index[a, b] = {u: i for i, u in enumerate(homs)}
            off += size
        self.total = off
        self.starts = np.array([blk[2] for blk in self.blocks] + [off], dtype=np.int64)

    def ids(self, a, b, x, y, k):
        _, _, off, nq, homs = self.blocks[self._pos(a, b)]
        return off + (x * nq + y) * len(homs) + k

    def _pos(self, a, b):
        if not hasattr(self, "_posmap"):
            self._posmap = {(blk[0], blk[1]): i for i, blk in enumerate(self.blocks)}
        return self._posmap[a, b]

    def decode(self, e: int) -> tuple[int, int, int, int, int]:
        i = int(np.searchsorted(self.starts, e, side="right")) - 1
        a, b, off, nq, homs = self.blocks[i]
        r, k = divmod(e - off, len(homs))
        x, y = divmod(r, nq)
        return a, b, x, y, homs[k]


def _coend_relations(m: MonoidalFinCategory, p: Presheaf, q: Presheaf, blk: _Blocks, c: int):
    """Pairs of triple ids identified by the coend, one batch per generating arrow."""
    cat = m.base
    lhs, rhs = [], []
    for (a, b) in m.pairs:
        homs = cat.hom(c, m.tensor(a, b))
        if not homs:
            continue
        for side in (0, 1):
            partners = m.left_partners(b) if side == 0 else m.right_partners(a)
            for g in m.generators_on(partners):
                if (cat.src[g] != (a if side == 0 else b)):
                    continue
                a2, b2 = (cat.tgt[g], b) if side == 0 else (a, cat.tgt[g])
                idb = cat.identities[b] if side == 0 else cat.identities[a]
                tg = m.tensor_arrows(g, idb) if side == 0 else m.tensor_arrows(idb, g)
                idx2 = blk.hom_index[a2, b2]
                moved = np.array([idx2[cat.compose(tg, u)] for u in homs], dtype=np.int64)
                K = np.arange(len(homs), dtype=np.int64)
                if side == 0:
                    X2 = np.arange(p.sizes[a2], dtype=np.int64)
                    X = np.array(p.actions[g], dtype=np.int64) if p.sizes[a2] else X2
                    Y = np.arange(q.sizes[b], dtype=np.int64)
                    xs, ys, ks = np.meshgrid(np.arange(X2.size), Y, K, indexing="ij")
                    left = blk.ids(a, b, X[xs], ys, ks) if X2.size else np.zeros(0, dtype=np.int64)
                    right = blk.ids(a2, b2, xs, ys, moved[ks])
                else:
                    Y2 = np.arange(q.sizes[b2], dtype=np.int64)
                    Y = np.array(q.actions[g], dtype=np.int64) if q.sizes[b2] else Y2
                    Xs = np.arange(p.sizes[a], dtype=np.int64)
                    xs, ys, ks = np.meshgrid(Xs, np.arange(Y2.size), K, indexing="ij")
                    left = blk.ids(a, b, xs, Y[ys], ks) if Y2.size else np.zeros(0, dtype=np.int64)
                    right = blk.ids(a2, b2, xs, ys, moved[ks])
                lhs.append(np.ravel(left))
                rhs.append(np.ravel(right))
    if not lhs:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(lhs), np.concatenate(rhs)


def _least_labels(n: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    g = coo_matrix((np.ones(a.size, dtype=np.int8), (a, b)), shape=(n, n))
    ncomp, comp = connected_components(g, directed=False)
    least = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(least, comp, np.arange(n))
    return least[comp]


def day_tensor(p: Presheaf, q: Presheaf, m: MonoidalFinCategory) -> DayProduct:
    """``(P (x) Q)(C)``: the coend over defined pairs ``(a, b)`` of ``P(a) x Q(b) x hom(C, a (x) b)``.

    The coend relation is imposed along generators of the full subcategories
    of left and right partners, which generate every arrow between defined
    pairs.  Classes are represented by their least member.
    """
    cat = m.base
    n = cat.n_objects
    blocks, labels, values, reps, where = [], [], [], [], []
    for c in range(n):
        blk = _Blocks(m, p, q, c)
        a, b = _coend_relations(m, p, q, blk, c)
        lab = _least_labels(blk.total, a, b)
        roots = np.unique(lab)
        dense = np.full(blk.total, -1, dtype=np.int64)
        dense[roots] = np.arange(roots.size)
        blocks.append(blk)
        labels.append(dense[lab])
        reps.append([blk.decode(int(e)) for e in roots])
        values.append(roots)
    actions = []
    for h in range(cat.n_arrows):
        x, c = cat.src[h], cat.tgt[h]
        blk = blocks[x]
        row = []
        for a, b, xx, yy, u in reps[c]:
            k = blk.hom_index[a, b][cat.compose(u, h)]
            row.append(int(labels[x][blk.ids(a, b, xx, yy, k)]))
        actions.append(tuple(row))
    pres = Presheaf(cat, [len(r) for r in reps], actions, [list(r) for r in reps])

    def make(c):
        blk, lab = blocks[c], labels[c]

        def classify(a, b, x, y, u):
            return int(lab[blk.ids(a, b, x, y, blk.hom_index[a, b][u])])
        return classify

    return DayProduct(pres, p, q, m, reps, [make(c) for c in range(n)])


# ------------------------------------------------------------- witnesses


def _nat(src: Presheaf, tgt: Presheaf, f: Callable[[int, int], int]) -> NatTransformation:
    return NatTransformation(src, tgt, [tuple(f(c, i) for i in range(src.sizes[c])) for c in range(len(src.sizes))])


def yoneda_tensor_iso(m: MonoidalFinCategory, a: int, b: int) -> Isomorphism | None:
    """``y(a) (x) y(b) -> y(a (x) b)``, ``(s, t, u) |-> (s (x) t) u``."""
    cat = m.base
    ya, yb, yab = representable(cat, a), representable(cat, b), representable(cat, m.tensor(a, b))
    d = day_tensor(ya, yb, m)
    index = [{f: i for i, f in enumerate(vs)} for vs in yab.labels]

    def f(c, i):
        a1, b1, x, y, u = d.reps[c][i]
        s, t = ya.labels[a1][x], yb.labels[b1][y]
        return index[c][cat.compose(m.tensor_arrows(s, t), u)]

    return witness_iso(_nat(d.presheaf, yab, f))


def right_unit_iso(m: MonoidalFinCategory, p: Presheaf) -> Isomorphism | None:
    """``P (x) y(e) -> P``, ``(x, t, u) |-> P(rho (1 (x) t) u) x``."""
    cat = m.base
    ye = representable(cat, m.unit)
    d = day_tensor(p, ye, m)

    def f(c, i):
        a, b, x, y, u = d.reps[c][i]
        t = ye.labels[b][y]
        arrow = cat.compose(m.right_unitor(a), cat.compose(m.tensor_arrows(cat.identities[a], t), u))
        return p.actions[arrow][x]

    return witness_iso(_nat(d.presheaf, p, f))


def left_unit_iso(m: MonoidalFinCategory, p: Presheaf) -> Isomorphism | None:
    cat = m.base
    ye = representable(cat, m.unit)
    d = day_tensor(ye, p, m)

    def f(c, i):
        a, b, x, y, u = d.reps[c][i]
        t = ye.labels[a][x]
        arrow = cat.compose(m.left_unitor(b), cat.compose(m.tensor_arrows(t, cat.identities[b]), u))
        return p.actions[arrow][y]

    return witness_iso(_nat(d.presheaf, p, f))


def symmetry_iso(m: MonoidalFinCategory, p: Presheaf, q: Presheaf) -> Isomorphism | None:
    """``P (x) Q -> Q (x) P``, ``(x, y, u) |-> (y, x, s u)``."""
    cat = m.base
    pq, qp = day_tensor(p, q, m), day_tensor(q, p, m)

    def f(c, i):
        a, b, x, y, u = pq.reps[c][i]
        return qp.classify(c, b, a, y, x, cat.compose(m.symmetry(a, b), u))

    return witness_iso(_nat(pq.presheaf, qp.presheaf, f))


def associator_iso(m: MonoidalFinCategory, p: Presheaf, q: Presheaf, r: Presheaf) -> Isomorphism | None:
    """``(P (x) Q) (x) R -> P (x) (Q (x) R)`` through representatives."""
    cat = m.base
    pq = day_tensor(p, q, m)
    left = day_tensor(pq.presheaf, r, m)
    qr = day_tensor(q, r, m)
    right = day_tensor(p, qr.presheaf, m)

    def f(c, i):
        c12, c3, w, z, u = left.reps[c][i]
        a, b, x, y, v = pq.reps[c12][w]
        bc = m.tensor(b, c3)
        inner = qr.classify(bc, b, c3, y, z, cat.identities[bc])
        arrow = cat.compose(m.associator(a, b, c3), cat.compose(m.tensor_arrows(v, cat.identities[c3]), u))
        return right.classify(c, a, bc, x, inner, arrow)

    return witness_iso(_nat(left.presheaf, right.presheaf, f))


# ------------------------------------------------------------ internal hom


@dataclass
class DayHom:
    """``[P, Q]`` with ``elements[C][i]`` the components of a transformation ``P -> Q(- (x) C)``."""

    presheaf: Presheaf
    elements: list[list[tuple[tuple[int, ...], ...]]]


def shifted(q: Presheaf, m: MonoidalFinCategory, c: int) -> Presheaf:
    """``Q(- (x) C)`` on the base."""
    cat = m.base
    n = cat.n_objects
    sizes = [q.sizes[m.tensor(a, c)] for a in range(n)]
    idc = cat.identities[c]
    return Presheaf(cat, sizes, [q.actions[m.tensor_arrows(f, idc)] for f in range(cat.n_arrows)])


def day_hom(p: Presheaf, q: Presheaf, m: MonoidalFinCategory) -> DayHom:
    """``[P, Q](C)``: the end over ``C'`` of ``Q(C' (x) C) ** P(C')``, i.e. maps ``P -> Q(- (x) C)``."""
    if not m.total:
        raise ValueError("the internal hom needs a total tensor; use model_day_hom into a model")
    cat = m.base
    n = cat.n_objects
    elements = [[tuple(t.components) for t in iter_homs(p, shifted(q, m, c))] for c in range(n)]
    index = [{e: i for i, e in enumerate(level)} for level in elements]
    actions = []
    for g in range(cat.n_arrows):
        x, c = cat.src[g], cat.tgt[g]
        acts = [q.actions[m.tensor_arrows(cat.identities[a], g)] for a in range(n)]
        row = []
        for comps in elements[c]:
            moved = tuple(tuple(acts[a][v] for v in comps[a]) for a in range(n))
            row.append(index[x][moved])
        actions.append(tuple(row))
    return DayHom(Presheaf(cat, [len(e) for e in elements], actions, [list(e) for e in elements]), elements)


def curry(m: MonoidalFinCategory, p: Presheaf, r: Presheaf, q: Presheaf, phi: NatTransformation,
          pr: DayProduct, hom: DayHom) -> NatTransformation:
    """``P (x) R -> Q`` to ``R -> [P, Q]``: ``z |-> (x |-> phi(x, z, id))``."""
    cat = m.base
    n = cat.n_objects
    index = [{e: i for i, e in enumerate(level)} for level in hom.elements]
    comps = []
    for c in range(n):
        row = []
        for z in range(r.sizes[c]):
            fam = []
            for a in range(n):
                ac = m.tensor(a, c)
                fam.append(tuple(phi.components[ac][pr.classify(ac, a, c, x, z, cat.identities[ac])]
                                 for x in range(p.sizes[a])))
            row.append(index[c][tuple(fam)])
        comps.append(tuple(row))
    return NatTransformation(r, hom.presheaf, comps)


def day_adjunction_check(m: MonoidalFinCategory, p: Presheaf, r: Presheaf, q: Presheaf) -> tuple[int, int, bool]:
    """Counts of ``hom(P (x) R, Q)`` and ``hom(R, [P, Q])``, and whether currying is a bijection between them."""
    pr = day_tensor(p, r, m)
    hom = day_hom(p, q, m)
    left = list(iter_homs(pr.presheaf, q))
    right = {t.key() for t in iter_homs(r, hom.presheaf)}
    images = [curry(m, p, r, q, phi, pr, hom) for phi in left]
    keys = {t.key() for t in images}
    ok = all(t.check() == [] for t in images) and len(keys) == len(left) and keys == right
    return len(left), len(right), ok


def day_laws(m: MonoidalFinCategory, presheaves: Sequence[Presheaf]) -> list[Violation]:
    """Unit, associativity and symmetry isomorphisms on ``presheaves``, and Yoneda on all pairs of objects."""
    cat = m.base
    report = []
    for a in range(cat.n_objects):
        for b in range(cat.n_objects):
            if m.tensor(a, b) is not None and yoneda_tensor_iso(m, a, b) is None:
                report.append(Violation("yoneda", "y(a) (x) y(b) is not y(a (x) b)", (a, b)))
    for i, p in enumerate(presheaves):
        if left_unit_iso(m, p) is None or right_unit_iso(m, p) is None:
            report.append(Violation("unit", "unit law fails", (i,)))
    for i, p in enumerate(presheaves):
        for j, q in enumerate(presheaves):
            if m.symmetry is not None and symmetry_iso(m, p, q) is None:
                report.append(Violation("symmetry", "symmetry fails", (i, j)))
    for i, p in enumerate(presheaves):
        for j, q in enumerate(presheaves):
            for k, r in enumerate(presheaves):
                if associator_iso(m, p, q, r) is None:
                    report.append(Violation("associativity", "associativity fails", (i, j, k)))
    return report


# --------------------------------------------------- commutative theories


@dataclass
class CommutativeTheory:
    theory: TheoryPresentation
    monoidal: MonoidalFinCategory


def commutative_theory(t: TheoryPresentation, check: bool = True) -> CommutativeTheory:
    """Attach the tensor of :func:`theory_monoidal`; ``check`` raises when :func:`tensor_sketchy` fails."""
    ct = CommutativeTheory(t, theory_monoidal(t))
    if check:
        report = tensor_sketchy(ct)
        if report:
            raise ValueError(f"{t.name} is not commutative: {report[0].detail}")
    return ct


def tensor_sketchy(ct: CommutativeTheory) -> list[Violation]:
    """Coherence of the tensor of a theory, exhaustively over defined pairs of arrows.

    Checks that ``u (x) v`` equals both ways of doing ``u`` and ``v`` one after
    the other (the naturality of ``T (x) -`` in ``T``), that the unit is
    strict, that tau is strict monoidal, and that the symmetry is natural.
    """
    t, m = ct.theory, ct.monoidal
    cat, sc = t.category, t.site.category
    T, comp, ids = m.tensor, cat.compose, cat.identities
    report: list[Violation] = []
    n = cat.n_objects
    for u in range(cat.n_arrows):
        a, a2 = cat.src[u], cat.tgt[u]
        if m.tensor_arrows(u, ids[1]) != u or m.tensor_arrows(ids[1], u) != u:
            report.append(Violation("unit", f"{cat.arrow_names[u]} (x) id1 is not {cat.arrow_names[u]}", (u,)))
            return report
        for b in range(n):
            for b2 in range(n):
                if T(a, b) is None or T(a2, b2) is None:
                    continue
                for v in cat.hom(b, b2):
                    uv = m.tensor_arrows(u, v)
                    if T(a, b2) is not None:
                        first_v = comp(m.tensor_arrows(u, ids[b2]), m.tensor_arrows(ids[a], v))
                        if first_v != uv:
                            report.append(Violation("sketchy", "tensor is not natural in the left factor: "
                                                    f"{cat.arrow_names[u]} and {cat.arrow_names[v]} do not commute",
                                                    (u, v, "left")))
                            return report
                    if T(a2, b) is not None:
                        first_u = comp(m.tensor_arrows(ids[a2], v), m.tensor_arrows(u, ids[b]))
                        if first_u != uv:
                            report.append(Violation("sketchy", "tensor is not natural in the right factor: "
                                                    f"{cat.arrow_names[u]} and {cat.arrow_names[v]} do not commute",
                                                    (u, v, "right")))
                            return report
                    if comp(m.symmetry(a2, b2), uv) != comp(m.tensor_arrows(v, u), m.symmetry(a, b)):
                        report.append(Violation("symmetry", "symmetry is not natural", (u, v)))
                        return report
    site_m = cartesian_finsets(sc, list(range(n)))
    for f in range(sc.n_arrows):
        for g in range(sc.n_arrows):
            fg = site_m.tensor_arrows(f, g)
            if fg is None:
                continue
            if t.tau.arr_map[fg] != m.tensor_arrows(t.tau.arr_map[f], t.tau.arr_map[g]):
                report.append(Violation("tau_monoidal", "tau(f x g) != tau f (x) tau g", (f, g)))
                return report
    return report


@dataclass
class TensorResult:
    """A tensor product of models with its universal bilinear map ``carrier1 x carrier2 -> carrier``."""

    model: "Model"
    bilinear: tuple[tuple[int, ...], ...]
    route: str
    other: "TensorResult | None" = None
    iso: tuple[tuple[int, ...], tuple[int, ...]] | None = None


def _day_route(m1, m2, ct: CommutativeTheory, bound: int) -> TensorResult:
    from .models import modelify
    t, m = ct.theory, ct.monoidal
    d = day_tensor(m1.presheaf, m2.presheaf, m)
    r = modelify(d.presheaf, t, bound=bound)
    one = t.category.identities[1]
    unit1 = r.unit.components[1]
    table = tuple(tuple(unit1[d.classify(1, 1, 1, x, y, one)] for y in range(m2.size)) for x in range(m1.size))
    return TensorResult(r.model, table, "day")


def bilinear_relations(a1, a2, t: TheoryPresentation) -> list:
    """Relations making ``(x, y) |-> g[x * |a2| + y]`` a homomorphism in each argument, for generating operations."""
    from .algebra import Relation
    n2 = a2.size
    rels = []
    for f in t.op_generators:
        k = t.category.tgt[f]
        for side, (this, other) in enumerate(((a1, a2), (a2, a1))):
            for args in product(range(this.size), repeat=k):
                value = this.apply(f, args)
                for z in range(other.size):
                    def gen(x, z=z):
                        return x * n2 + z if side == 0 else z * n2 + x
                    rels.append(Relation(f, tuple(gen(x) for x in args), gen(value)))
    return rels


def _congruence_route(m1, m2, ct: CommutativeTheory, bound: int) -> TensorResult:
    from .algebra import present
    from .models import Model
    t = ct.theory
    a1, a2 = m1.algebra, m2.algebra
    pres = present(t, a1.size * a2.size, bilinear_relations(a1, a2, t), bound=bound)
    gm = pres.generator_map
    table = tuple(tuple(gm[x * a2.size + y] for y in range(a2.size)) for x in range(a1.size))
    return TensorResult(Model(pres.algebra), table, "congruence")


def model_tensor(m1, m2, ct: CommutativeTheory, route: str = "both", bound: int = 64) -> TensorResult:
    """Tensor product of two models.

    ``day`` reflects the Day convolution into models; ``congruence`` presents
    the algebra generated by pairs subject to bilinearity.  ``both`` computes
    the two and attaches an isomorphism matching their bilinear maps.
    """
    from .algebra import find_algebra_iso
    if route == "day":
        return _day_route(m1, m2, ct, bound)
    if route == "congruence":
        return _congruence_route(m1, m2, ct, bound)
    if route != "both":
        raise ValueError(f"unknown route {route!r}")
    a = _day_route(m1, m2, ct, bound)
    b = _congruence_route(m1, m2, ct, bound)
    a.other = b
    a.iso = _matching_iso(a, b)
    return a


def _matching_iso(a: TensorResult, b: TensorResult):
    """The isomorphism carrying one bilinear map to the other, if any (it is unique when it exists)."""
    from .algebra import is_homomorphism
    x, y = a.model.algebra, b.model.algebra
    if x.size != y.size:
        return None
    fwd = [-1] * x.size
    for ra, rb in zip(a.bilinear, b.bilinear):
        for u, v in zip(ra, rb):
            if fwd[u] not in (-1, v):
                return None
            fwd[u] = v
    if -1 in fwd:
        # elements outside the image of the bilinear map: fall back to a search
        from .algebra import algebra_homs
        for h in algebra_homs(x, y):
            if all(h[u] == v for u, v in enumerate(fwd) if v != -1) and len(set(h)) == x.size:
                fwd = list(h)
                break
        else:
            return None
    inv = [0] * x.size
    for u, v in enumerate(fwd):
        inv[v] = u
    if len(set(fwd)) != x.size or not is_homomorphism(x, y, fwd) or not is_homomorphism(y, x, inv):
        return None
    return tuple(fwd), tuple(inv)


def model_hom(m1, m2, ct: CommutativeTheory):
    """``[m1, m2]``: homomorphisms with pointwise operations.

    Pointwise operations of homomorphisms are homomorphisms because the theory
    is commutative; a result outside the hom-set raises ``ValueError``.
    """
    from .algebra import FiniteAlgebra, algebra_homs, tuples, _radix
    from .models import Model
    t = ct.theory
    a, b = m1.algebra, m2.algebra
    hs = np.array(list(algebra_homs(a, b)), dtype=np.int64).reshape(-1, a.size)
    k, N = hs.shape[0], t.n
    codes = {tuple(h): i for i, h in enumerate(hs.tolist())}
    xs = tuples(k, N)
    # pointwise: row r, op j, point p -> b.ev[code(hs[xs[r, :], p]), j]
    args = hs[xs] if N else np.zeros((1, 0, a.size), dtype=np.int64)
    arg_codes = _radix(np.moveaxis(args, 1, 2).reshape(-1, N), b.size).reshape(xs.shape[0], a.size) if N else \
        np.zeros((1, a.size), dtype=np.int64)
    vals = b.ev[arg_codes]  # rows x points x ops
    ev = np.zeros((xs.shape[0], b.sig.width), dtype=np.int64)
    for r in range(xs.shape[0]):
        for j in range(b.sig.width):
            key = tuple(vals[r, :, j].tolist())
            if key not in codes:
                raise ValueError("pointwise operation left the hom-set: the theory is not commutative")
            ev[r, j] = codes[key]
    labels = [tuple(h) for h in hs.tolist()]
    return Model(FiniteAlgebra(t, k, ev, labels=labels))


def _blockwise(m, g: int, blocks: int, rows: int) -> tuple[int, ...]:
    """Action of ``id_blocks (x) g`` (or ``g (x) id`` when ``rows``) on ``A^(blocks * c)``, radix coded.

    ``g: x -> c`` has components ``g_i``; on a ``blocks x c`` array of carrier
    elements it applies each ``g_i`` along the ``c`` axis.
    """
    t = m.theory
    cat = t.category
    x, c = cat.src[g], cat.tgt[g]
    comps = t.components(g)
    size = m.size
    out = []
    for code in range(size ** (blocks * c)):
        v = m.decode(blocks * c, code) if size else ()
        w = [0] * (blocks * x)
        for k in range(blocks):
            for i, f in enumerate(comps):
                if rows:
                    # g (x) id_blocks: entry (i, k) of an x-by-blocks array
                    w[i * blocks + k] = m.algebra.apply(f, [v[l * blocks + k] for l in range(c)])
                else:
                    w[k * x + i] = m.algebra.apply(f, [v[k * c + l] for l in range(c)])
        out.append(m.encode(blocks * x, w))
    return tuple(out)


def extended_shift(m, c: int) -> Presheaf:
    """``M(- (x) c)`` for a model ``M``, with ``M(a (x) c)`` read as ``A^(a c)`` even past the truncation."""
    t = m.theory
    cat = t.category
    sizes = [m.size ** (a * c) for a in range(cat.n_objects)]
    actions = [_blockwise(m, g, c, rows=1) for g in range(cat.n_arrows)]
    return Presheaf(cat, sizes, actions)


@lru_cache(maxsize=16)
def _shift_tables(m):
    cat = m.theory.category
    n = cat.n_objects
    shifts = [extended_shift(m, c) for c in range(n)]
    blockwise = [[_blockwise(m, g, a, rows=0) for a in range(n)] for g in range(cat.n_arrows)]
    return shifts, blockwise


def model_day_hom(p: Presheaf, m, ct: CommutativeTheory) -> DayHom:
    """``[P, M](c) = Nat(P, M(- (x) c))`` for a presheaf ``P`` on the theory and a model ``M``.

    A model extends to every finite power of its carrier, so the end makes
    sense even where the tensor of the truncated theory is undefined.  On a
    total tensor this agrees with :func:`day_hom`.
    """
    cat = ct.theory.category
    n = cat.n_objects
    shifts, blockwise = _shift_tables(m)
    elements = [[tuple(h.components) for h in iter_homs(p, shifts[c])] for c in range(n)]
    index = [{e: i for i, e in enumerate(level)} for level in elements]
    actions = []
    for g in range(cat.n_arrows):
        x, c = cat.src[g], cat.tgt[g]
        acts = blockwise[g]
        row = []
        for comps in elements[c]:
            moved = tuple(tuple(acts[a][v] for v in comps[a]) for a in range(n))
            row.append(index[x][moved])
        actions.append(tuple(row))
    return DayHom(Presheaf(cat, [len(e) for e in elements], actions, [list(e) for e in elements]), elements)


@dataclass
class MonoidalComparison:
    """``F(x * y) -> F(x) (x) F(y)``, extended from ``(a, b) |-> beta(unit a, unit b)``."""

    source: "Model"
    tensor: TensorResult
    map: tuple[int, ...] | None

    @property
    def is_iso(self) -> bool:
        return self.map is not None and len(set(self.map)) == self.source.size == self.tensor.model.size


def free_monoidal_comparison(x: Presheaf, y: Presheaf, ct: CommutativeTheory, route: str = "day",
                             bound: int = 64) -> MonoidalComparison:
    """Compare the free model on a product of sheaves with the tensor of the free models."""
    from .algebra import extend_hom
    from .fincat.core import product_presheaf
    from .models import free_model
    t = ct.theory
    fx, fy = free_model(x, t, bound=bound), free_model(y, t, bound=bound)
    fxy = free_model(product_presheaf(x, y), t, bound=bound)
    tens = model_tensor(fx.model, fy.model, ct, route=route, bound=bound)
    ux, uy, uxy = fx.unit.components[1], fy.unit.components[1], fxy.unit.components[1]
    partial: dict[int, int] = {}
    for e in range(x.sizes[1] * y.sizes[1]):
        a, b = divmod(e, y.sizes[1])
        v = tens.bilinear[ux[a]][uy[b]]
        if partial.setdefault(uxy[e], v) != v:
            return MonoidalComparison(fxy.model, tens, None)
    return MonoidalComparison(fxy.model, tens, extend_hom(fxy.model.algebra, tens.model.algebra, partial))


def model_currying_check(a, b, c, ct: CommutativeTheory, route: str = "congruence") -> tuple[int, int, bool]:
    """Counts of ``hom(a (x) b, c)`` and ``hom(a, [b, c])`` and whether currying is a bijection."""
    from .algebra import algebra_homs, is_homomorphism
    tens = model_tensor(a, b, ct, route=route)
    hom = model_hom(b, c, ct)
    index = {lab: i for i, lab in enumerate(hom.algebra.labels)}
    left = list(algebra_homs(tens.model.algebra, c.algebra))
    curried = set()
    ok = True
    for h in left:
        g = tuple(index[tuple(h[tens.bilinear[x][y]] for y in range(b.size))] for x in range(a.size))
        ok = ok and is_homomorphism(a.algebra, hom.algebra, g)
        curried.add(g)
    right = set(algebra_homs(a.algebra, hom.algebra))
    return len(left), len(right), ok and curried == right and len(curried) == len(left)
