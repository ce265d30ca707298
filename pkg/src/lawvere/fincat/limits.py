"""Limits and colimits of finite-set diagrams, ends and coends."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..unionfind import UnionFind
from .core import FinCategory, FinFunctor, Presheaf


@dataclass(eq=False)
class Diagram:
    """Covariant functor ``shape -> FinSet``; ``maps[u]`` sends ``D(src u)`` into ``D(tgt u)``."""

    shape: FinCategory
    sizes: list[int]
    maps: list[tuple[int, ...]]

    @classmethod
    def from_presheaf(cls, p: Presheaf) -> "Diagram":
        return cls(p.category.opposite(), list(p.sizes), list(p.actions))

    @classmethod
    def from_functor(cls, f: FinFunctor, sizes_of_target: Sequence[int], maps_of_target: Sequence[tuple[int, ...]]) -> "Diagram":
        return cls(f.source, [sizes_of_target[f.obj_map[j]] for j in range(f.source.n_objects)],
                   [maps_of_target[f.arr_map[u]] for u in range(f.source.n_arrows)])


@dataclass(eq=False)
class Limit:
    """Matching families with their projection cone."""

    diagram: Diagram
    families: list[tuple[int, ...]]

    @property
    def size(self) -> int:
        return len(self.families)

    def projection(self, j: int) -> tuple[int, ...]:
        return tuple(fam[j] for fam in self.families)

    def factor(self, legs: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
        """Unique factorisation of a competing cone through the limit.

        ``legs[j][a]`` is the image in ``D(j)`` of apex element ``a``.
        Returns ``None`` if the legs do not form a cone.
        """
        d = self.diagram
        shape = d.shape
        apex = len(legs[0]) if legs else 1
        for u in range(shape.n_arrows):
            s, t = shape.src[u], shape.tgt[u]
            if any(d.maps[u][legs[s][a]] != legs[t][a] for a in range(apex)):
                return None
        index = {fam: i for i, fam in enumerate(self.families)}
        return tuple(index[tuple(legs[j][a] for j in range(shape.n_objects))] for a in range(apex))


def limit(d: Diagram, order: Sequence[int] | None = None) -> Limit:
    """All families ``(x_j)`` with ``D(u) x_src = x_tgt``, by backtracking over objects."""
    shape = d.shape
    n = shape.n_objects
    order = list(range(n)) if order is None else list(order)
    pos = {j: i for i, j in enumerate(order)}
    # constraints checked once both endpoints are assigned
    checks: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for u in range(shape.n_arrows):
        s, t = shape.src[u], shape.tgt[u]
        checks[order[max(pos[s], pos[t])]].append((u, s, t))
    fam = [-1] * n
    out: list[tuple[int, ...]] = []

    def rec(i: int) -> None:
        if i == n:
            out.append(tuple(fam))
            return
        j = order[i]
        for x in range(d.sizes[j]):
            fam[j] = x
            if all(d.maps[u][fam[s]] == fam[t] for u, s, t in checks[j]):
                rec(i + 1)
        fam[j] = -1

    rec(0)
    out.sort()
    return Limit(d, out)


@dataclass(eq=False)
class Colimit:
    """Quotient of the disjoint union; classes indexed by least representative."""

    diagram: Diagram
    offsets: list[int]
    class_of: list[int]
    representatives: list[tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.representatives)

    def injection(self, j: int) -> tuple[int, ...]:
        o = self.offsets[j]
        return tuple(self.class_of[o + x] for x in range(self.diagram.sizes[j]))

    def factor(self, legs: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
        """Unique map out of the colimit agreeing with a cocone ``legs[j]: D(j) -> apex``."""
        d = self.diagram
        for u in range(d.shape.n_arrows):
            s, t = d.shape.src[u], d.shape.tgt[u]
            if any(legs[t][d.maps[u][x]] != legs[s][x] for x in range(d.sizes[s])):
                return None
        return tuple(legs[j][x] for j, x in self.representatives)


def colimit(d: Diagram) -> Colimit:
    shape = d.shape
    offsets, total = [], 0
    for n in d.sizes:
        offsets.append(total)
        total += n
    uf = UnionFind(total)
    for u in shape.generators() if shape.n_arrows < 4000 else range(shape.n_arrows):
        s, t = shape.src[u], shape.tgt[u]
        m = d.maps[u]
        os_, ot = offsets[s], offsets[t]
        for x in range(d.sizes[s]):
            uf.union(os_ + x, ot + m[x])
    class_of, roots = uf.classes()
    where = []
    for j, n in enumerate(d.sizes):
        where.extend((j, x) for x in range(n))
    return Colimit(d, offsets, class_of, [where[r] for r in roots])


def presheaf_limit(p: Presheaf) -> Limit:
    return limit(Diagram.from_presheaf(p))


def presheaf_colimit(p: Presheaf) -> Colimit:
    return colimit(Diagram.from_presheaf(p))


# ------------------------------------------------------------ ends / coends


class Bifunctor:
    """``H: C^op x C -> FinSet`` given by callables.

    ``size(a, b)`` is ``|H(a, b)|``; ``lmap(u, b, z)`` applies ``H(u, b)`` for
    ``u: a -> a'`` (so ``z`` lies in ``H(a', b)``); ``rmap(a, v, z)`` applies
    ``H(a, v)`` for ``v: b -> b'``.
    """

    def __init__(self, category: FinCategory, size: Callable[[int, int], int],
                 lmap: Callable[[int, int, int], int], rmap: Callable[[int, int, int], int]):
        self.category = category
        self.size = size
        self.lmap = lmap
        self.rmap = rmap

    @classmethod
    def hom(cls, c: FinCategory) -> "Bifunctor":
        def size(a, b):
            return len(c.hom(a, b))

        def lmap(u, b, z):
            a2 = c.tgt[u]
            t = c.hom(a2, b)[z]
            return c.hom(c.src[u], b).index(c.compose(t, u))

        def rmap(a, v, z):
            t = c.hom(a, c.src[v])[z]
            return c.hom(a, c.tgt[v]).index(c.compose(v, t))

        return cls(c, size, lmap, rmap)

    @classmethod
    def function_sets(cls, p: Presheaf, q: Presheaf) -> "Bifunctor":
        """``H(a, b) = [P(b), Q(a)]``; its end is the set of maps ``P -> Q``.

        Functions are encoded in mixed radix: digit ``x`` is the image of ``x``.
        """
        c = p.category

        def decode(code, n, base):
            out = []
            for _ in range(n):
                code, r = divmod(code, base)
                out.append(r)
            return out

        def encode(vals, base):
            code = 0
            for v in reversed(vals):
                code = code * base + v
            return code

        def size(a, b):
            return q.sizes[a] ** p.sizes[b]

        def lmap(u, b, z):
            fn = decode(z, p.sizes[b], q.sizes[c.tgt[u]])
            return encode([q.actions[u][y] for y in fn], q.sizes[c.src[u]])

        def rmap(a, v, z):
            fn = decode(z, p.sizes[c.src[v]], q.sizes[a])
            return encode([fn[p.actions[v][x]] for x in range(p.sizes[c.tgt[v]])], q.sizes[a])

        bf = cls(c, size, lmap, rmap)
        bf.decode = lambda a, b, z: decode(z, p.sizes[b], q.sizes[a])
        return bf

    @classmethod
    def tensor(cls, p: Presheaf, d: Diagram) -> "Bifunctor":
        """``H(a, b) = P(a) x D(b)`` for a presheaf ``P`` and covariant ``D``; element ``x * |D(b)| + y``."""
        c = p.category

        def size(a, b):
            return p.sizes[a] * d.sizes[b]

        def lmap(u, b, z):
            x, y = divmod(z, d.sizes[b])
            return p.actions[u][x] * d.sizes[b] + y

        def rmap(a, v, z):
            x, y = divmod(z, d.sizes[c.src[v]])
            return x * d.sizes[c.tgt[v]] + d.maps[v][y]

        return cls(c, size, lmap, rmap)


def end_of(h: Bifunctor) -> list[tuple[int, ...]]:
    """Families ``(w_c in H(c, c))`` with ``H(c, u) w_c = H(u, c') w_c'`` for ``u: c -> c'``."""
    c = h.category
    n = c.n_objects
    checks: list[list[int]] = [[] for _ in range(n)]
    for u in range(c.n_arrows):
        checks[max(c.src[u], c.tgt[u])].append(u)
    fam = [-1] * n
    out = []

    def rec(i):
        if i == n:
            out.append(tuple(fam))
            return
        for w in range(h.size(i, i)):
            fam[i] = w
            if all(h.rmap(c.src[u], u, fam[c.src[u]]) == h.lmap(u, c.tgt[u], fam[c.tgt[u]]) for u in checks[i]):
                rec(i + 1)
        fam[i] = -1

    rec(0)
    return out


def coend_of(h: Bifunctor) -> Colimit:
    """Quotient of ``sum_c H(c, c)`` by ``H(u, c) z ~ H(c', u) z`` for ``u: c -> c'``, ``z in H(c', c)``.

    Returned as a :class:`Colimit` whose representatives are ``(c, element)``.
    """
    c = h.category
    sizes = [h.size(x, x) for x in range(c.n_objects)]
    offsets, total = [], 0
    for s in sizes:
        offsets.append(total)
        total += s
    uf = UnionFind(total)
    for u in range(c.n_arrows):
        a, b = c.src[u], c.tgt[u]
        for z in range(h.size(b, a)):
            uf.union(offsets[a] + h.lmap(u, a, z), offsets[b] + h.rmap(b, u, z))
    class_of, roots = uf.classes()
    where = [(x, e) for x in range(c.n_objects) for e in range(sizes[x])]
    shape = FinCategory(c.objects, [], [], {}, name="objects")  # placeholder shape; only sizes are meaningful
    return Colimit(Diagram(shape, sizes, []), offsets, class_of, [where[r] for r in roots])


def twisted_arrow(c: FinCategory) -> FinCategory:
    """Objects are arrows ``u: a -> b``; a morphism ``u -> u'`` is ``(s, t)`` with ``u' = t . u . s``."""
    arrows, index = [], {}
    for u in range(c.n_arrows):
        a, b = c.src[u], c.tgt[u]
        for u2 in range(c.n_arrows):
            a2, b2 = c.src[u2], c.tgt[u2]
            for s in c.hom(a2, a):
                for t in c.hom(b, b2):
                    if c.compose(t, c.compose(u, s)) == u2:
                        index[u, u2, s, t] = len(arrows)
                        arrows.append((f"tw{len(arrows)}", u, u2))
    keys = list(index)
    ids = [index[u, u, c.identities[c.src[u]], c.identities[c.tgt[u]]] for u in range(c.n_arrows)]
    comp = {}
    for k1 in keys:
        u, u2, s1, t1 = k1
        for k2 in keys:
            if k2[0] != u2:
                continue
            _, u3, s2, t2 = k2
            comp[index[k2], index[k1]] = index[u, u3, c.compose(s1, s2), c.compose(t2, t1)]
    tw = FinCategory([c.arrow_names[u] for u in range(c.n_arrows)], arrows, ids, comp, name=f"Tw({c.name})")
    tw.twisted_keys = keys
    return tw


def twisted_diagram(h: Bifunctor) -> Diagram:
    """``u: a -> b`` maps to ``H(a, b)``; ``(s, t)`` acts by ``H(s, t)``.  Its limit is the end."""
    c = h.category
    tw = twisted_arrow(c)
    sizes = [h.size(c.src[u], c.tgt[u]) for u in range(c.n_arrows)]
    maps = []
    for (u, u2, s, t) in tw.twisted_keys:
        a, b = c.src[u], c.tgt[u]
        maps.append(tuple(h.lmap(s, c.tgt[u2], h.rmap(a, t, z)) for z in range(sizes[u])))
    return Diagram(tw, sizes, maps)


def twisted_codiagram(h: Bifunctor) -> Diagram:
    """Diagram on ``Tw(C)^op`` with ``u: a -> b`` mapped to ``H(b, a)``.  Its colimit is the coend."""
    c = h.category
    tw = twisted_arrow(c)
    op = tw.opposite()
    sizes = [h.size(c.tgt[u], c.src[u]) for u in range(c.n_arrows)]
    maps = []
    for (u, u2, s, t) in tw.twisted_keys:
        a2, b2 = c.src[u2], c.tgt[u2]
        maps.append(tuple(h.rmap(c.tgt[u], s, h.lmap(t, a2, z)) for z in range(sizes[u2])))
    return Diagram(op, sizes, maps)
