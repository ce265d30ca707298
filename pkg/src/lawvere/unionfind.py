"""Union-find over dense integer ids with least-element representatives."""

from __future__ import annotations


class UnionFind:
    """Disjoint sets on ``0..n-1``; the root of every class is its least member."""

    def __init__(self, n: int = 0):
        self.parent = list(range(n))

    def __len__(self) -> int:
        return len(self.parent)

    def add(self) -> int:
        self.parent.append(len(self.parent))
        return len(self.parent) - 1

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True

    def classes(self) -> tuple[list[int], list[int]]:
        """Return ``(index_of, roots)``: class index per element, roots in ascending order."""
        roots: list[int] = []
        where: dict[int, int] = {}
        index_of = []
        for x in range(len(self.parent)):
            r = self.find(x)
            if r not in where:
                where[r] = len(roots)
                roots.append(r)
            index_of.append(where[r])
        return index_of, roots
