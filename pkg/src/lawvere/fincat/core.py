"""Finite categories, functors, presheaves and natural transformations.

Objects and arrows are dense integer ids.  Composition is written
``cat.compose(g, f)`` for ``g . f`` (``f`` first).  A presheaf stores, for
every arrow ``f: a -> b``, the restriction map ``P(b) -> P(a)`` as a tuple
indexed by elements of ``P(b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence


class CategoryError(ValueError):
    pass


class FinCategory:
    """An explicit finite category.

    ``compose`` is either a mapping ``(g, f) -> h`` over composable pairs or a
    callable with the same contract; callables let large theory categories
    avoid materialising their composition table.
    """

    def __init__(
        self,
        objects: Sequence[str],
        arrows: Sequence[tuple[str, int, int]],
        identities: Sequence[int],
        compose: Mapping[tuple[int, int], int] | Callable[[int, int], int | None],
        name: str = "",
    ):
        self.objects = list(objects)
        self.arrow_names = [a[0] for a in arrows]
        self.src = [a[1] for a in arrows]
        self.tgt = [a[2] for a in arrows]
        self.identities = list(identities)
        self.name = name
        if callable(compose):
            self._compose_fn = compose
            self._table = None
        else:
            self._compose_fn = None
            self._table = dict(compose)
        self._hom: dict[tuple[int, int], list[int]] = {}
        for f in range(len(self.src)):
            self._hom.setdefault((self.src[f], self.tgt[f]), []).append(f)
        self._into: list[list[int]] | None = None
        self._gens: list[int] | None = None

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @property
    def n_arrows(self) -> int:
        return len(self.src)

    def hom(self, a: int, b: int) -> list[int]:
        return self._hom.get((a, b), [])

    def arrows_into(self, b: int) -> list[int]:
        if self._into is None:
            self._into = [[] for _ in self.objects]
            for f in range(self.n_arrows):
                self._into[self.tgt[f]].append(f)
        return self._into[b]

    def raw_compose(self, g: int, f: int) -> int | None:
        if self._table is not None:
            return self._table.get((g, f))
        return self._compose_fn(g, f)

    def compose(self, g: int, f: int) -> int:
        if self.tgt[f] != self.src[g]:
            raise CategoryError(f"arrows {self.arrow_names[g]} and {self.arrow_names[f]} are not composable")
        h = self.raw_compose(g, f)
        if h is None:
            raise CategoryError(f"missing composite {self.arrow_names[g]}.{self.arrow_names[f]}")
        return h

    def composable_pairs(self) -> Iterable[tuple[int, int]]:
        for f in range(self.n_arrows):
            for g in self.arrows_from(self.tgt[f]):
                yield g, f

    def arrows_from(self, a: int) -> list[int]:
        return [g for b in range(self.n_objects) for g in self.hom(a, b)]

    def object_id(self, name: str) -> int:
        try:
            return self.objects.index(name)
        except ValueError:
            raise CategoryError(f"unknown object {name!r}") from None

    def arrow_id(self, name: str) -> int:
        try:
            return self.arrow_names.index(name)
        except ValueError:
            raise CategoryError(f"unknown arrow {name!r}") from None

    def is_identity(self, f: int) -> bool:
        return self.identities[self.src[f]] == f

    def generators(self) -> list[int]:
        """A set of non-identity arrows whose composites give every arrow.

        Greedy: arrows are scanned in id order and kept when not already a
        composite of kept ones.
        """
        if self._gens is not None:
            return self._gens
        reached = set(self.identities)
        gens: list[int] = []
        for f in range(self.n_arrows):
            if f in reached:
                continue
            gens.append(f)
            frontier = [f]
            reached.add(f)
            # close under composition with everything already reached
            while frontier:
                new = []
                for h in frontier:
                    for g in gens:
                        for a, b in ((g, h), (h, g)):
                            if self.tgt[b] == self.src[a]:
                                c = self.compose(a, b)
                                if c not in reached:
                                    reached.add(c)
                                    new.append(c)
                    for r in list(reached):
                        for a, b in ((r, h), (h, r)):
                            if self.tgt[b] == self.src[a]:
                                c = self.compose(a, b)
                                if c not in reached:
                                    reached.add(c)
                                    new.append(c)
                frontier = new
        self._gens = gens
        return gens

    def opposite(self) -> "FinCategory":
        arrows = [(n, t, s) for n, s, t in zip(self.arrow_names, self.src, self.tgt)]

        def comp(g, f):
            return self.raw_compose(f, g)

        return FinCategory(self.objects, arrows, self.identities, comp, name=f"{self.name}^op")

    def __repr__(self) -> str:
        return f"FinCategory({self.name or '?'}: {self.n_objects} objects, {self.n_arrows} arrows)"


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    witness: tuple = ()


def check_category(c: FinCategory) -> list[Violation]:
    """List every violated category law; an empty list means ``c`` is a category."""
    report: list[Violation] = []
    for x, i in enumerate(c.identities):
        if c.src[i] != x or c.tgt[i] != x:
            report.append(Violation("identity", f"identity of {c.objects[x]} has wrong endpoints", (x, i)))
    comp: dict[tuple[int, int], int] = {}
    for g, f in c.composable_pairs():
        h = c.raw_compose(g, f)
        if h is None:
            report.append(Violation("missing_composite", f"{c.arrow_names[g]}.{c.arrow_names[f]} undefined", (g, f)))
            continue
        if c.src[h] != c.src[f] or c.tgt[h] != c.tgt[g]:
            report.append(Violation("endpoint", f"{c.arrow_names[g]}.{c.arrow_names[f]} = {c.arrow_names[h]} has wrong endpoints", (g, f, h)))
            continue
        comp[g, f] = h
    if report:
        return report
    for f in range(c.n_arrows):
        if comp[c.identities[c.tgt[f]], f] != f or comp[f, c.identities[c.src[f]]] != f:
            report.append(Violation("identity", f"identity law fails at {c.arrow_names[f]}", (f,)))
    for (g, f), gf in comp.items():
        for h in c.arrows_from(c.tgt[g]):
            if comp[h, gf] != comp[comp[h, g], f]:
                report.append(Violation("associativity", f"({c.arrow_names[h]}.{c.arrow_names[g]}).{c.arrow_names[f]}", (h, g, f)))
    return report


class FinFunctor:
    def __init__(self, source: FinCategory, target: FinCategory, obj_map: Sequence[int], arr_map: Sequence[int], name: str = ""):
        self.source = source
        self.target = target
        self.obj_map = list(obj_map)
        self.arr_map = list(arr_map)
        self.name = name

    def check(self) -> list[Violation]:
        s, t = self.source, self.target
        report = []
        for f in range(s.n_arrows):
            g = self.arr_map[f]
            if t.src[g] != self.obj_map[s.src[f]] or t.tgt[g] != self.obj_map[s.tgt[f]]:
                report.append(Violation("endpoint", f"image of {s.arrow_names[f]} has wrong endpoints", (f,)))
        if report:
            return report
        for x, i in enumerate(s.identities):
            if self.arr_map[i] != t.identities[self.obj_map[x]]:
                report.append(Violation("identity", f"identity of {s.objects[x]} not preserved", (x,)))
        for g, f in s.composable_pairs():
            if self.arr_map[s.compose(g, f)] != t.compose(self.arr_map[g], self.arr_map[f]):
                report.append(Violation("composition", f"{s.arrow_names[g]}.{s.arrow_names[f]} not preserved", (g, f)))
        return report

    def then(self, other: "FinFunctor") -> "FinFunctor":
        return FinFunctor(self.source, other.target,
                          [other.obj_map[x] for x in self.obj_map],
                          [other.arr_map[f] for f in self.arr_map])


def identity_functor(c: FinCategory) -> FinFunctor:
    return FinFunctor(c, c, range(c.n_objects), range(c.n_arrows), name="id")


def terminal_category() -> FinCategory:
    return FinCategory(["*"], [("id*", 0, 0)], [0], {(0, 0): 0}, name="1")


def functor_to_terminal(c: FinCategory) -> FinFunctor:
    return FinFunctor(c, terminal_category(), [0] * c.n_objects, [0] * c.n_arrows, name="!")


def discrete_category(names: Sequence[str]) -> FinCategory:
    arrows = [(f"id{n}", i, i) for i, n in enumerate(names)]
    return FinCategory(names, arrows, range(len(names)), {(i, i): i for i in range(len(names))}, name="discrete")


def poset_category(names: Sequence[str], leq: Callable[[int, int], bool]) -> FinCategory:
    """Thin category with an arrow ``i -> j`` iff ``leq(i, j)``."""
    n = len(names)
    arrows, index = [], {}
    for i in range(n):
        for j in range(n):
            if leq(i, j):
                index[i, j] = len(arrows)
                arrows.append((f"{names[i]}<={names[j]}", i, j))
    comp = {}
    for (i, j), f in index.items():
        for k in range(n):
            if (j, k) in index:
                comp[index[j, k], f] = index[i, k]
    return FinCategory(names, arrows, [index[i, i] for i in range(n)], comp, name="poset")


def product_category(c: FinCategory, d: FinCategory) -> FinCategory:
    """``c x d`` with object ``(x, y)`` at ``x * |d| + y`` and arrow ``(f, g)`` at ``f * |arr d| + g``."""
    nd, ad = d.n_objects, d.n_arrows
    objects = [f"({x},{y})" for x in c.objects for y in d.objects]
    arrows = [(f"({fn},{gn})", c.src[f] * nd + d.src[g], c.tgt[f] * nd + d.tgt[g])
              for f, fn in enumerate(c.arrow_names) for g, gn in enumerate(d.arrow_names)]
    ids = [c.identities[x] * ad + d.identities[y] for x in range(c.n_objects) for y in range(nd)]

    def comp(h, k):
        f2, g2 = divmod(h, ad)
        f1, g1 = divmod(k, ad)
        a = c.raw_compose(f2, f1)
        b = d.raw_compose(g2, g1)
        if a is None or b is None:
            return None
        return a * ad + b

    cat = FinCategory(objects, arrows, ids, comp, name=f"{c.name}x{d.name}")
    cat.factors = (c, d)
    return cat


# ---------------------------------------------------------------- presheaves


@dataclass(eq=False)
class Presheaf:
    """Contravariant functor ``category -> FinSet`` on dense element ids."""

    category: FinCategory
    sizes: list[int]
    actions: list[tuple[int, ...]]
    labels: list[list[Hashable]] | None = field(default=None, repr=False)

    def act(self, f: int, x: int) -> int:
        return self.actions[f][x]

    def label(self, c: int, x: int) -> Hashable:
        return self.labels[c][x] if self.labels else x

    def total_size(self) -> int:
        return sum(self.sizes)

    def elements(self) -> Iterable[tuple[int, int]]:
        for c, n in enumerate(self.sizes):
            for x in range(n):
                yield c, x

    def check(self, arrows: Iterable[tuple[int, int]] | None = None) -> list[Violation]:
        """Functoriality report; ``arrows`` restricts the composable pairs checked."""
        cat = self.category
        report = []
        for f in range(cat.n_arrows):
            a = self.actions[f]
            if len(a) != self.sizes[cat.tgt[f]] or any(not 0 <= v < self.sizes[cat.src[f]] for v in a):
                report.append(Violation("shape", f"action of {cat.arrow_names[f]} malformed", (f,)))
        if report:
            return report
        for c, i in enumerate(cat.identities):
            if self.actions[i] != tuple(range(self.sizes[c])):
                report.append(Violation("identity", f"identity on {cat.objects[c]} acts non-trivially", (c,)))
        pairs = cat.composable_pairs() if arrows is None else arrows
        for g, f in pairs:
            gf = cat.compose(g, f)
            af, ag, agf = self.actions[f], self.actions[g], self.actions[gf]
            for x in range(self.sizes[cat.tgt[g]]):
                if agf[x] != af[ag[x]]:
                    report.append(Violation("composition", f"P({cat.arrow_names[g]}.{cat.arrow_names[f]}) != P(f)P(g)", (g, f, x)))
                    break
        return report

    @classmethod
    def from_function(cls, cat: FinCategory, values: Sequence[Sequence[Hashable]], act: Callable[[int, Hashable], Hashable]) -> "Presheaf":
        """Build from labelled value sets and ``act(f, element_of_P(tgt f)) -> element_of_P(src f)``."""
        index = [{v: i for i, v in enumerate(vs)} for vs in values]
        actions = []
        for f in range(cat.n_arrows):
            s = cat.src[f]
            actions.append(tuple(index[s][act(f, v)] for v in values[cat.tgt[f]]))
        return cls(cat, [len(v) for v in values], actions, [list(v) for v in values])


def representable(cat: FinCategory, c: int) -> Presheaf:
    """Yoneda presheaf ``hom(-, c)``; elements labelled by arrow id."""
    homs = [cat.hom(x, c) for x in range(cat.n_objects)]
    return Presheaf.from_function(cat, homs, lambda u, t: cat.compose(t, u))


def restrict(f: FinFunctor, q: Presheaf) -> Presheaf:
    """Precomposition ``q . f``."""
    s = f.source
    labels = [q.labels[f.obj_map[c]] for c in range(s.n_objects)] if q.labels else None
    return Presheaf(s, [q.sizes[f.obj_map[c]] for c in range(s.n_objects)],
                    [q.actions[f.arr_map[u]] for u in range(s.n_arrows)], labels)


def constant_presheaf(cat: FinCategory, values: Sequence[Hashable]) -> Presheaf:
    return Presheaf.from_function(cat, [list(values)] * cat.n_objects, lambda f, v: v)


def empty_presheaf(cat: FinCategory) -> Presheaf:
    return Presheaf(cat, [0] * cat.n_objects, [() for _ in range(cat.n_arrows)], [[] for _ in cat.objects])


def terminal_presheaf(cat: FinCategory) -> Presheaf:
    return constant_presheaf(cat, ["*"])


def product_presheaf(p: Presheaf, q: Presheaf) -> Presheaf:
    cat = p.category
    values = [[(x, y) for x in range(p.sizes[c]) for y in range(q.sizes[c])] for c in range(cat.n_objects)]
    return Presheaf.from_function(cat, values, lambda f, v: (p.actions[f][v[0]], q.actions[f][v[1]]))


def coproduct_presheaf(p: Presheaf, q: Presheaf) -> Presheaf:
    cat = p.category
    values = [[(0, x) for x in range(p.sizes[c])] + [(1, y) for y in range(q.sizes[c])] for c in range(cat.n_objects)]
    return Presheaf.from_function(cat, values, lambda f, v: (v[0], (p if v[0] == 0 else q).actions[f][v[1]]))


@dataclass(eq=False)
class NatTransformation:
    source: Presheaf
    target: Presheaf
    components: list[tuple[int, ...]]

    def check(self) -> list[Violation]:
        p, q = self.source, self.target
        cat = p.category
        report = []
        for f in range(cat.n_arrows):
            a, b = cat.src[f], cat.tgt[f]
            ca, cb = self.components[a], self.components[b]
            for x in range(p.sizes[b]):
                if ca[p.actions[f][x]] != q.actions[f][cb[x]]:
                    report.append(Violation("naturality", f"square at {cat.arrow_names[f]} fails", (f, x)))
                    break
        return report

    def then(self, other: "NatTransformation") -> "NatTransformation":
        return NatTransformation(self.source, other.target,
                                 [tuple(g[v] for v in f) for f, g in zip(self.components, other.components)])

    def is_iso(self) -> bool:
        return all(len(set(c)) == len(c) == self.target.sizes[i] for i, c in enumerate(self.components))

    def inverse(self) -> "NatTransformation":
        comps = []
        for i, c in enumerate(self.components):
            inv = [0] * self.target.sizes[i]
            for x, y in enumerate(c):
                inv[y] = x
            comps.append(tuple(inv))
        return NatTransformation(self.target, self.source, comps)

    def key(self) -> tuple:
        return tuple(self.components)


def identity_nat(p: Presheaf) -> NatTransformation:
    return NatTransformation(p, p, [tuple(range(n)) for n in p.sizes])


@dataclass(eq=False)
class Isomorphism:
    """Mutually inverse natural transformations, both checked."""

    forward: NatTransformation
    backward: NatTransformation

    def verify(self) -> bool:
        f, b = self.forward, self.backward
        if f.check() or b.check():
            return False
        there = f.then(b)
        back = b.then(f)
        return (there.components == identity_nat(f.source).components
                and back.components == identity_nat(f.target).components)


def witness_iso(forward: NatTransformation) -> Isomorphism | None:
    """Package ``forward`` as a witnessed isomorphism, or ``None`` if it is not one."""
    if forward.check() or not forward.is_iso():
        return None
    iso = Isomorphism(forward, forward.inverse())
    return iso if iso.verify() else None


def function_category(sizes: Sequence[int], name: str = "FinSet") -> FinCategory:
    """Full subcategory of finite sets on ``{0..s-1}`` for each ``s`` in ``sizes``.

    An arrow ``m -> n`` is stored as its value tuple; arrows are ordered by
    ``(source, target, tuple)`` and named ``"m->n:v0v1..."``.
    """
    from itertools import product

    arrows, funcs, index = [], [], {}
    for i, m in enumerate(sizes):
        for j, n in enumerate(sizes):
            for v in product(range(n), repeat=m):
                index[i, j, v] = len(arrows)
                arrows.append((f"{m}->{n}:{''.join(map(str, v))}", i, j))
                funcs.append(v)
    ids = [index[i, i, tuple(range(m))] for i, m in enumerate(sizes)]
    src = [a[1] for a in arrows]
    tgt = [a[2] for a in arrows]

    def comp(g, f):
        if tgt[f] != src[g]:
            return None
        vg = funcs[g]
        return index[src[f], tgt[g], tuple(vg[x] for x in funcs[f])]

    cat = FinCategory([str(s) for s in sizes], arrows, ids, comp, name=name)
    cat.functions = funcs
    return cat
