"""Left and right Kan extensions of presheaves along finite functors."""

from __future__ import annotations

from ..unionfind import UnionFind
from .core import FinFunctor, NatTransformation, Presheaf, representable, restrict
from .homs import iter_homs


class KanResult:
    """An extension together with its unit (for ``lan``) or counit (for ``ran``)."""

    def __init__(self, presheaf: Presheaf, unit: NatTransformation):
        self.presheaf = presheaf
        self.unit = unit


def lan(f: FinFunctor, p: Presheaf) -> KanResult:
    """Pointwise left Kan extension as a coend.

    ``lan(p)(d)`` is the quotient of pairs ``(c, x in p(c), t: d -> f c)`` by
    ``(c', p(u) x, t) ~ (c, x, f(u) . t)`` for ``u: c' -> c``; it is enough to
    impose this for a generating set of arrows ``u``.  Elements are labelled by
    their least representative ``(c, x, t)``.  The returned unit sends
    ``x in p(c)`` to the class of ``(c, x, id)``.
    """
    src, dst = f.source, f.target
    gens = src.generators()
    values, class_maps = [], []
    for d in range(dst.n_objects):
        pairs, index = [], {}
        for c in range(src.n_objects):
            for t in dst.hom(d, f.obj_map[c]):
                for x in range(p.sizes[c]):
                    index[c, x, t] = len(pairs)
                    pairs.append((c, x, t))
        uf = UnionFind(len(pairs))
        for u in gens:
            c1, c = src.src[u], src.tgt[u]
            fu = f.arr_map[u]
            for t in dst.hom(d, f.obj_map[c1]):
                ft = dst.compose(fu, t)
                for x in range(p.sizes[c]):
                    uf.union(index[c1, p.actions[u][x], t], index[c, x, ft])
        class_of, roots = uf.classes()
        values.append([pairs[r] for r in roots])
        class_maps.append((index, class_of))

    actions = []
    for a in range(dst.n_arrows):
        d1, d = dst.src[a], dst.tgt[a]
        index1, class1 = class_maps[d1]
        row = []
        for (c, x, t) in values[d]:
            row.append(class1[index1[c, x, dst.compose(t, a)]])
        actions.append(tuple(row))
    result = Presheaf(dst, [len(v) for v in values], actions, values)

    comps = []
    for c in range(src.n_objects):
        d = f.obj_map[c]
        index, class_of = class_maps[d]
        idt = dst.identities[d]
        comps.append(tuple(class_of[index[c, x, idt]] for x in range(p.sizes[c])))
    unit = NatTransformation(p, restrict(f, result), comps)
    return KanResult(result, unit)


def ran(f: FinFunctor, p: Presheaf) -> KanResult:
    """Pointwise right Kan extension as an end.

    ``ran(p)(d)`` is the set of natural transformations ``f^* y(d) -> p``;
    ``a: d' -> d`` acts by precomposition with ``f^* y(a)``.  The returned
    natural transformation is the counit ``f^* ran(p) -> p``, evaluating a
    family at the identity.
    """
    src, dst = f.source, f.target
    reps = [restrict(f, representable(dst, d)) for d in range(dst.n_objects)]
    values = [[tuple(t.components) for t in iter_homs(reps[d], p)] for d in range(dst.n_objects)]
    index = [{v: i for i, v in enumerate(vs)} for vs in values]
    actions = []
    for a in range(dst.n_arrows):
        d1, d = dst.src[a], dst.tgt[a]
        row = []
        for comps in values[d]:
            # s'(c)(t') = s(c)(a . t') for t': f c -> d'
            new = []
            for c in range(src.n_objects):
                homs1 = dst.hom(f.obj_map[c], d1)
                homs = dst.hom(f.obj_map[c], d)
                pos = {t: i for i, t in enumerate(homs)}
                new.append(tuple(comps[c][pos[dst.compose(a, t)]] for t in homs1))
            row.append(index[d1][tuple(new)])
        actions.append(tuple(row))
    result = Presheaf(dst, [len(v) for v in values], actions, values)

    comps = []
    for c in range(src.n_objects):
        d = f.obj_map[c]
        pos = dst.hom(d, d).index(dst.identities[d])
        comps.append(tuple(fam[c][pos] for fam in values[d]))
    counit = NatTransformation(restrict(f, result), p, comps)
    return KanResult(result, counit)
