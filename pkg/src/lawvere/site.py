"""Finite sites, the sheaf condition and sheafification.

Covers are families of arrows into a common apex.  The sheaf condition is
checked against the declared covers.  Sheafification uses the least covering
sieve on each object of the Grothendieck topology they generate: covering
sieves of a finite category are closed under intersection, so the plus
construction's colimit over covering sieves is the matching-family set of
that least sieve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .fincat.core import FinCategory, NatTransformation, Presheaf, function_category, identity_nat


class NotConverged(RuntimeError):
    """An iterative construction did not stabilise within its bound."""

    def __init__(self, bound: int, what: str = "construction"):
        super().__init__(f"{what} did not converge within bound {bound}")
        self.bound = bound
        self.what = what


@dataclass(frozen=True)
class Cover:
    apex: int
    arrows: tuple[int, ...]


class FiniteSite:
    """A finite category with a list of covering families."""

    def __init__(self, category: FinCategory, covers: Sequence[Cover | tuple[int, Sequence[int]]], name: str = ""):
        self.category = category
        self.covers = [c if isinstance(c, Cover) else Cover(c[0], tuple(c[1])) for c in covers]
        self.name = name
        for cv in self.covers:
            if any(category.tgt[f] != cv.apex for f in cv.arrows):
                raise ValueError(f"cover of {category.objects[cv.apex]} has an arrow with another codomain")
        self._smin: list[frozenset[int]] | None = None

    def covers_of(self, c: int) -> list[Cover]:
        return [cv for cv in self.covers if cv.apex == c]

    # -------------------------------------------------------------- sieves

    def generated_sieve(self, arrows: Sequence[int], apex: int) -> frozenset[int]:
        cat = self.category
        out = set()
        for f in arrows:
            for h in cat.arrows_into(cat.src[f]):
                out.add(cat.compose(f, h))
        return frozenset(out)

    def pullback_sieve(self, a: int, s: frozenset[int]) -> frozenset[int]:
        cat = self.category
        return frozenset(h for h in cat.arrows_into(cat.src[a]) if cat.compose(a, h) in s)

    def minimal_sieves(self) -> list[frozenset[int]]:
        """The least covering sieve on each object.

        Fixpoint of: start from the intersection of the generated sieves, then
        intersect with pullbacks of the current sieves and with composites
        ``f . g`` (``f`` in the sieve, ``g`` in the sieve on ``dom f``).
        """
        if self._smin is not None:
            return self._smin
        cat = self.category
        smin: list[frozenset[int]] = []
        for c in range(cat.n_objects):
            s = frozenset(cat.arrows_into(c))
            for cv in self.covers_of(c):
                s &= self.generated_sieve(cv.arrows, c)
            smin.append(s)
        changed = True
        while changed:
            changed = False
            for a in range(cat.n_arrows):
                c, c2 = cat.src[a], cat.tgt[a]
                s = smin[c] & self.pullback_sieve(a, smin[c2])
                if s != smin[c]:
                    smin[c] = s
                    changed = True
            for c in range(cat.n_objects):
                comp = set()
                for f in smin[c]:
                    for g in smin[cat.src[f]]:
                        comp.add(cat.compose(f, g))
                s = smin[c] & frozenset(comp)
                if s != smin[c]:
                    smin[c] = s
                    changed = True
        self._smin = smin
        return smin

    def __repr__(self) -> str:
        return f"FiniteSite({self.name or self.category.name}: {len(self.covers)} covers)"


class TruncatedFinSetSite(FiniteSite):
    """Finite sets ``0..N`` with all functions, covered by binary sums and the empty cover of 0."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("bound N must be positive")
        self.n = n
        cat = function_category(range(n + 1), name=f"FinSet<={n}")
        index = {(cat.src[f], cat.tgt[f], v): f for f, v in enumerate(cat.functions)}
        covers = [Cover(0, ())]
        self.sum_covers: dict[tuple[int, int], Cover] = {}
        for m in range(1, n + 1):
            for m1 in range(m + 1):
                m2 = m - m1
                left = index[m1, m, tuple(range(m1))]
                right = index[m2, m, tuple(range(m1, m))]
                cv = Cover(m, (left, right))
                covers.append(cv)
                self.sum_covers[m1, m2] = cv
        super().__init__(cat, covers, name=f"FinSet<={n}")

    def injection(self, m1: int, m2: int, side: int) -> int:
        return self.sum_covers[m1, m2].arrows[side]

    def arrow_of(self, m: int, n: int, values: Sequence[int]) -> int:
        """Arrow id of the function ``m -> n`` with the given values."""
        return self.category.hom(m, n)[_fn_rank(values, n)]

    def point(self, m: int, i: int) -> int:
        return self.arrow_of(1, m, (i,))


def _fn_rank(values: Sequence[int], n: int) -> int:
    r = 0
    for v in values:
        r = r * n + v
    return r


def covers_are_coproducts(site: TruncatedFinSetSite) -> bool:
    """Every declared cover's arrows are jointly bijective onto the apex."""
    funcs = site.category.functions
    for cv in site.covers:
        image = [y for f in cv.arrows for y in funcs[f]]
        if sorted(image) != list(range(int(site.category.objects[cv.apex]))):
            return False
    return True


# ------------------------------------------------------------ matching


class MatchingSpace:
    """Families ``(x_g in P(dom g))`` over generators of a sieve on ``apex`` that agree on overlaps."""

    def __init__(self, p: Presheaf, gens: Sequence[int], apex: int):
        cat = p.category
        self.presheaf = p
        self.gens = list(gens)
        self.apex = apex
        # bucket every composite g . h and chain each bucket to its first member
        first: dict[int, tuple[int, int]] = {}
        constraints: list[list[tuple[int, int, int, int]]] = [[] for _ in self.gens]
        self.witness: dict[int, tuple[int, int]] = {}
        for i, g in enumerate(self.gens):
            for h in cat.arrows_into(cat.src[g]):
                f = cat.compose(g, h)
                if f not in first:
                    first[f] = (i, h)
                    continue
                j, h2 = first[f]
                constraints[i].append((i, h, j, h2))
        self.witness = first
        self.constraints = constraints
        self._families: list[tuple[int, ...]] | None = None

    @property
    def families(self) -> list[tuple[int, ...]]:
        if self._families is None:
            self._families = self._enumerate()
        return self._families

    def _enumerate(self) -> list[tuple[int, ...]]:
        p = self.presheaf
        cat = p.category
        k = len(self.gens)
        fam = [-1] * k
        out: list[tuple[int, ...]] = []
        acts = p.actions

        def rec(i: int) -> None:
            if i == k:
                out.append(tuple(fam))
                return
            for x in range(p.sizes[cat.src[self.gens[i]]]):
                fam[i] = x
                if all(acts[h][fam[a]] == acts[h2][fam[b]] for a, h, b, h2 in self.constraints[i]):
                    rec(i + 1)
            fam[i] = -1

        rec(0)
        return out

    def restrict_element(self, x: int) -> tuple[int, ...]:
        """The family induced by ``x in P(apex)``."""
        return tuple(self.presheaf.actions[g][x] for g in self.gens)

    def value_at(self, fam: Sequence[int], f: int) -> int:
        """Component of the family at an arrow ``f`` of the generated sieve."""
        i, h = self.witness[f]
        return self.presheaf.actions[h][fam[i]]


@dataclass
class SheafCheck:
    ok: bool
    cover: Cover | None = None
    comparison: tuple[int, ...] | None = None
    reason: str = ""
    witness: tuple = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def _check_family(p: Presheaf, arrows: Sequence[int], apex: int, cover: Cover) -> SheafCheck | None:
    space = MatchingSpace(p, arrows, apex)
    index = {fam: i for i, fam in enumerate(space.families)}
    comp = tuple(index[space.restrict_element(x)] for x in range(p.sizes[apex]))
    seen: dict[int, int] = {}
    for x, y in enumerate(comp):
        if y in seen:
            return SheafCheck(False, cover, comp, "not injective", (seen[y], x))
        seen[y] = x
    if len(seen) != len(space.families):
        missing = next(i for i in range(len(space.families)) if i not in seen)
        return SheafCheck(False, cover, comp, "not surjective", (space.families[missing],))
    return None


def is_sheaf(p: Presheaf, site: FiniteSite) -> SheafCheck:
    """Check the sheaf condition for every declared cover.

    On failure the result names the cover, the comparison map from ``P(apex)``
    to matching families, and a witness (two colliding elements, or a family
    with no amalgamation).
    """
    for cv in site.covers:
        bad = _check_family(p, cv.arrows, cv.apex, cv)
        if bad is not None:
            return bad
    return SheafCheck(True)


def is_sheaf_for_topology(p: Presheaf, site: FiniteSite) -> SheafCheck:
    """The sheaf condition for the least covering sieve on each object.

    Equivalent to :func:`is_sheaf`; kept as an independent cross-check.
    """
    for c, s in enumerate(site.minimal_sieves()):
        gens = sieve_generators(site.category, s)
        bad = _check_family(p, gens, c, Cover(c, tuple(gens)))
        if bad is not None:
            return bad
    return SheafCheck(True)


def sieve_generators(cat: FinCategory, s: frozenset[int]) -> list[int]:
    """Greedy generating set: repeatedly take the arrow that covers most of what is left."""
    left = set(s)
    gens: list[int] = []
    through = {f: {cat.compose(f, h) for h in cat.arrows_into(cat.src[f])} & s for f in s}
    while left:
        best = min(left, key=lambda f: (-len(through[f] & left), f))
        gens.append(best)
        left -= through[best]
    return sorted(gens)


# -------------------------------------------------------- sheafification


@dataclass
class Sheafified:
    presheaf: Presheaf
    unit: NatTransformation
    rounds: int


def plus(p: Presheaf, site: FiniteSite) -> tuple[Presheaf, NatTransformation]:
    """One plus construction: ``P+(c)`` is the matching-family set of the least covering sieve on ``c``."""
    cat = p.category
    smin = site.minimal_sieves()
    spaces = []
    values: list[list[tuple[int, ...]]] = []
    for c in range(cat.n_objects):
        space = MatchingSpace(p, sieve_generators(cat, smin[c]), c)
        spaces.append(space)
        values.append(space.families)
    index = [{fam: i for i, fam in enumerate(vs)} for vs in values]
    actions = []
    for a in range(cat.n_arrows):
        c2, c = cat.src[a], cat.tgt[a]
        sp, sp2 = spaces[c], spaces[c2]
        row = []
        for fam in values[c]:
            row.append(index[c2][tuple(sp.value_at(fam, cat.compose(a, g)) for g in sp2.gens)])
        actions.append(tuple(row))
    result = Presheaf(cat, [len(v) for v in values], actions, [list(v) for v in values])
    unit = NatTransformation(p, result, [tuple(index[c][spaces[c].restrict_element(x)] for x in range(p.sizes[c]))
                                         for c in range(cat.n_objects)])
    return result, unit


def sheafify(p: Presheaf, site: FiniteSite, bound: int = 8, max_elements: int | None = None) -> Sheafified:
    """Apply the plus construction twice per round until a sheaf is reached.

    Raises :class:`NotConverged` when ``bound`` rounds do not suffice or an
    intermediate presheaf grows beyond ``max_elements``.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    if is_sheaf(p, site):
        return Sheafified(p, identity_nat(p), 1)
    cur, unit = p, identity_nat(p)
    for r in range(1, bound + 1):
        for _ in range(2):
            cur, eta = plus(cur, site)
            unit = unit.then(eta)
            if max_elements is not None and cur.total_size() > max_elements:
                raise NotConverged(bound, "sheafification")
        if is_sheaf(cur, site):
            return Sheafified(cur, unit, r)
    raise NotConverged(bound, "sheafification")
