"""Enumeration of all presheaves on a finite category with bounded value sets.

Actions are chosen for the generating arrows only; every other arrow gets the
action of a fixed factorisation through generators, and each functoriality
equation is checked as soon as the arrows it mentions are all known.
"""

from __future__ import annotations

from itertools import product
from typing import Iterator, Sequence

from .core import FinCategory, Presheaf


def _factorisations(cat: FinCategory, gens: Sequence[int]) -> dict[int, tuple[int, int]]:
    """``h -> (g, f)`` with ``h = g . f``, ``g`` a generator and ``f`` found earlier (breadth first)."""
    known = {i for i in cat.identities} | set(gens)
    out: dict[int, tuple[int, int]] = {}
    frontier = list(known)
    while frontier:
        new = []
        for f in frontier:
            for g in gens:
                if cat.src[g] != cat.tgt[f]:
                    continue
                h = cat.compose(g, f)
                if h not in known:
                    known.add(h)
                    out[h] = (g, f)
                    new.append(h)
        frontier = new
    if len(known) != cat.n_arrows:
        raise ValueError("generators do not generate the category")
    return out


def iter_presheaves(cat: FinCategory, sizes: Sequence[int]) -> Iterator[Presheaf]:
    """Every presheaf with the given value-set sizes (not up to isomorphism)."""
    gens = cat.generators()
    fact = _factorisations(cat, gens)
    ids = set(cat.identities)
    # derived arrows in an order where both factors come first
    order: list[int] = []
    placed = ids | set(gens)
    pending = dict(fact)
    while pending:
        for h, (g, f) in list(pending.items()):
            if f in placed:
                order.append(h)
                placed.add(h)
                del pending[h]
    touching: dict[int, list[tuple[int, int, int]]] = {}
    for g, f in cat.composable_pairs():
        gf = cat.compose(g, f)
        for a in {g, f, gf}:
            touching.setdefault(a, []).append((g, f, gf))

    actions: dict[int, tuple[int, ...]] = {i: tuple(range(sizes[cat.src[i]])) for i in cat.identities}

    def derive():
        for h in order:
            g, f = fact[h]
            if g in actions and f in actions and h not in actions:
                ag, af = actions[g], actions[f]
                actions[h] = tuple(af[v] for v in ag)

    def consistent(new):
        for g, f, gf in (t for a in new for t in touching.get(a, ())):
            if g in actions and f in actions and gf in actions:
                ag, af, agf = actions[g], actions[f], actions[gf]
                if any(agf[x] != af[ag[x]] for x in range(len(ag))):
                    return False
        return True

    def go(k):
        if k == len(gens):
            yield Presheaf(cat, list(sizes), [actions[f] for f in range(cat.n_arrows)])
            return
        g = gens[k]
        before = set(actions)
        for act in product(range(sizes[cat.src[g]]), repeat=sizes[cat.tgt[g]]):
            actions[g] = act
            derive()
            if consistent(set(actions) - before):
                yield from go(k + 1)
            for h in set(actions) - before:
                del actions[h]

    if any(sizes[cat.src[f]] == 0 and sizes[cat.tgt[f]] > 0 for f in range(cat.n_arrows)):
        return
    yield from go(0)


def all_presheaves(cat: FinCategory, max_size: int, min_size: int = 0) -> Iterator[Presheaf]:
    """Every presheaf with ``min_size <= |P(c)| <= max_size`` at each object."""
    for sizes in product(range(min_size, max_size + 1), repeat=cat.n_objects):
        yield from iter_presheaves(cat, sizes)
