"""Exhaustive enumeration of natural transformations between presheaves.

Backtracking over elements, object by object.  Choosing the image of an
element fixes the images of all of its restrictions, and candidates for a
new element are filtered by the restrictions already fixed.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from .core import Isomorphism, NatTransformation, Presheaf, witness_iso


def _restriction_lists(p: Presheaf) -> list[list[list[tuple[int, int, int]]]]:
    """``out[c][x]``: every ``(arrow f, source object, P(f)x)`` for ``f`` into ``c``."""
    cat = p.category
    out = []
    for c in range(cat.n_objects):
        into = cat.arrows_into(c)
        out.append([[(f, cat.src[f], p.actions[f][x]) for f in into] for x in range(p.sizes[c])])
    return out


def iter_homs(p: Presheaf, q: Presheaf, order: Sequence[int] | None = None, limit: int | None = None) -> Iterator[NatTransformation]:
    """Yield every natural transformation ``p -> q``.

    ``order`` is the object visiting order (default ascending ids).
    """
    cat = p.category
    if order is None:
        order = range(cat.n_objects)
    restr = _restriction_lists(p)
    assign: list[list[int]] = [[-1] * n for n in p.sizes]
    seq = [(c, x) for c in order for x in range(p.sizes[c])]
    qact = q.actions
    found = 0

    def place(c: int, x: int, y: int, trail: list[tuple[int, int]]) -> bool:
        for f, a, px in restr[c][x]:
            v = qact[f][y]
            cur = assign[a][px]
            if cur == -1:
                assign[a][px] = v
                trail.append((a, px))
            elif cur != v:
                return False
        return True

    def rec(i: int) -> Iterator[NatTransformation]:
        nonlocal found
        while i < len(seq) and assign[seq[i][0]][seq[i][1]] != -1:
            i += 1
        if i == len(seq):
            found += 1
            yield NatTransformation(p, q, [tuple(a) for a in assign])
            return
        c, x = seq[i]
        cons = [(f, assign[a][px]) for f, a, px in restr[c][x] if assign[a][px] != -1]
        for y in range(q.sizes[c]):
            if any(qact[f][y] != v for f, v in cons):
                continue
            trail: list[tuple[int, int]] = []
            if place(c, x, y, trail):
                yield from rec(i + 1)
                if limit is not None and found >= limit:
                    for a, px in trail:
                        assign[a][px] = -1
                    return
            for a, px in trail:
                assign[a][px] = -1

    yield from rec(0)


def homs(p: Presheaf, q: Presheaf, **kw) -> list[NatTransformation]:
    return list(iter_homs(p, q, **kw))


def count_homs(p: Presheaf, q: Presheaf) -> int:
    return sum(1 for _ in iter_homs(p, q))


def find_iso(p: Presheaf, q: Presheaf) -> Isomorphism | None:
    """Search for a witnessed isomorphism ``p ~= q``."""
    if p.sizes != q.sizes:
        return None
    for t in iter_homs(p, q):
        if t.is_iso():
            iso = witness_iso(t)
            if iso is not None:
                return iso
    return None
