"""Finite algebras for a theory presentation, presented algebras and congruences.

An algebra is stored by its *evaluation table*: for every ``N``-tuple ``x`` of
elements, the values ``ev_x(b)`` of all ``N``-ary operations ``b``.  Operations
of smaller arity are read off by padding, constants agree across tuples.

Being a model amounts to three conditions: ``ev_x`` of the ``j``-th variable
is ``x_j``; constants agree; and for every endo-arrow ``c: N -> N`` of the
theory, ``ev_{c(x)}(b) = ev_x(c . b)`` where ``c(x)_j = ev_x(c_j)``.  The last
one composes, so it is enough to check it on generators of the monoid of
endo-arrows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterator, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .fincat.core import Presheaf, Violation
from .site import NotConverged
from .theory import TheoryPresentation
from .unionfind import UnionFind


class Signature:
    """Index data for evaluation tables of a theory (cached per theory)."""

    def __init__(self, t: TheoryPresentation):
        cat = t.category
        N = self.n = t.n
        self.theory = t
        self.ops = list(t.ops(N))
        self.index = {f: i for i, f in enumerate(self.ops)}
        self.proj = [self.index[t.point(N, j)] for j in range(N)]
        bang = t.tau_of(0, N, ())
        self.consts = [self.index[cat.compose(bang, k)] for k in t.ops(0)]
        self.n_consts = len(self.consts)
        self._embed: dict[int, int] = {}
        self.monoid_gens = _monoid_generators(t)
        self.subs = []
        for c in self.monoid_gens:
            comp_c = [self.index[cat.compose(c, t.point(N, j))] for j in range(N)]
            sub_c = [self.index[cat.compose(c, b)] for b in self.ops]
            self.subs.append((comp_c, sub_c))

    def embed(self, f: int) -> int:
        """Index of the ``n``-ary operation ``f`` viewed as ``N``-ary (extra variables ignored)."""
        hit = self._embed.get(f)
        if hit is None:
            t = self.theory
            n = t.category.tgt[f]
            hit = self.index[t.category.compose(t.tau_of(n, t.n, tuple(range(n))), f)]
            self._embed[f] = hit
        return hit

    @property
    def width(self) -> int:
        return len(self.ops)


def signature(t: TheoryPresentation) -> Signature:
    sig = getattr(t, "_signature", None)
    if sig is None:
        sig = Signature(t)
        t._signature = sig
    return sig


def _monoid_generators(t: TheoryPresentation) -> list[int]:
    """A small generating set of the endo-arrow monoid ``T(N, N)``.

    Greedy by gain: each step adds the element whose closure with the current
    generators is largest (ties to the least id).
    """
    cat = t.category
    N = t.n
    elems = cat.hom(N, N)
    ident = cat.identities[N]
    gens: list[int] = []
    reached = {ident}

    def closure(gs: list[int]) -> set[int]:
        seen = {ident}
        frontier = [ident]
        while frontier:
            new = []
            for x in frontier:
                for g in gs:
                    y = cat.compose(g, x)
                    if y not in seen:
                        seen.add(y)
                        new.append(y)
            frontier = new
        return seen

    while len(reached) < len(elems):
        best, best_set = None, reached
        for e in elems:
            if e in reached:
                continue
            got = closure(gens + [e])
            if len(got) > len(best_set):
                best, best_set = e, got
                if len(got) == len(elems):
                    break
        gens.append(best)
        reached = best_set
    return gens


def _radix(digits: np.ndarray, base: int) -> np.ndarray:
    """Mixed-radix codes of the rows of ``digits`` (first column most significant)."""
    out = np.zeros(digits.shape[0], dtype=np.int64)
    for j in range(digits.shape[1]):
        out = out * base + digits[:, j]
    return out


def tuples(size: int, n: int) -> np.ndarray:
    """All ``n``-tuples over ``range(size)`` in lexicographic order, one per row."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((size,) * n).reshape(n, -1).T
    return grids.astype(np.int64)


class FiniteAlgebra:
    """Carrier ``range(size)`` with an evaluation table ``ev[code(x), b]``."""

    def __init__(self, theory: TheoryPresentation, size: int, ev: np.ndarray,
                 consts: Sequence[int] = (), labels: Sequence | None = None):
        self.theory = theory
        self.sig = signature(theory)
        self.size = size
        self.ev = np.asarray(ev, dtype=np.int64).reshape(size ** self.sig.n, self.sig.width)
        if size:
            consts = [int(self.ev[0, c]) for c in self.sig.consts]
        self.const_values = list(consts)
        self.labels = list(labels) if labels is not None else list(range(size))

    def __repr__(self) -> str:
        return f"FiniteAlgebra({self.theory.name}, size={self.size})"

    # ---------------------------------------------------------- operations

    def op_table(self, f: int) -> np.ndarray:
        """Table of the operation ``f: 1 -> n`` over ``size ** n`` argument codes."""
        n = self.theory.category.tgt[f]
        N = self.sig.n
        if n == 0:
            k = self.theory.ops(0).index(f)
            return np.array([self.const_values[k]], dtype=np.int64)
        xs = tuples(self.size, n)
        pad = np.concatenate([xs, np.repeat(xs[:, :1], N - n, axis=1)], axis=1) if N > n else xs
        return self.ev[_radix(pad, self.size), self.sig.embed(f)]

    def apply(self, f: int, args: Sequence[int]) -> int:
        n = self.theory.category.tgt[f]
        if n == 0:
            return self.const_values[self.theory.ops(0).index(f)]
        N = self.sig.n
        x = list(args) + [args[0]] * (N - n)
        code = 0
        for a in x:
            code = code * self.size + a
        return int(self.ev[code, self.sig.embed(f)])

    # ---------------------------------------------------------- validation

    def check(self, full: bool = False) -> list[Violation]:
        """Model conditions; ``full`` checks every endo-arrow instead of generators."""
        sig, r, N = self.sig, self.size, self.sig.n
        report = []
        if r == 0:
            if sig.n_consts:
                report.append(Violation("constants", "empty carrier but the theory has constants", ()))
            return report
        xs = tuples(r, N)
        ev = self.ev
        for j, pj in enumerate(sig.proj):
            bad = np.nonzero(ev[:, pj] != xs[:, j])[0]
            if bad.size:
                report.append(Violation("projection", f"variable {j} does not evaluate to itself", (int(bad[0]),)))
        for c in sig.consts:
            if (ev[:, c] != ev[0, c]).any():
                report.append(Violation("constants", "a constant depends on its padding", (c,)))
        if full:
            cat, t = self.theory.category, self.theory
            subs = []
            for c in cat.hom(N, N):
                subs.append(([sig.index[cat.compose(c, t.point(N, j))] for j in range(N)],
                             [sig.index[cat.compose(c, b)] for b in sig.ops]))
        else:
            subs = sig.subs
        for comp_c, sub_c in subs:
            y = _radix(ev[:, comp_c], r)
            bad = np.nonzero((ev[y] != ev[:, sub_c]).any(axis=1))[0]
            if bad.size:
                report.append(Violation("substitution", "evaluation is not compatible with an endo-arrow", (int(bad[0]),)))
                break
        return report

    # --------------------------------------------------------- presheaves

    def power(self, n: int) -> int:
        return self.size ** n

    def forget_presheaf(self) -> Presheaf:
        """``n |-> A^n`` on the site, functions acting by reindexing."""
        sc = self.theory.site.category
        r = self.size
        actions = []
        cache: dict[int, np.ndarray] = {}
        for h in range(sc.n_arrows):
            m, n = sc.src[h], sc.tgt[h]
            if n not in cache:
                cache[n] = tuples(r, n)
            xs = cache[n]
            cols = list(sc.functions[h])
            actions.append(tuple(int(v) for v in _radix(xs[:, cols], r)) if m else (0,) * (r ** n))
        return Presheaf(sc, [r ** int(o) for o in sc.objects], actions)

    def theory_presheaf(self) -> Presheaf:
        """The model as a presheaf on the theory: ``n |-> A^n``, ``g`` acting by its components."""
        t = self.theory
        cat = t.category
        r = self.size
        tables: dict[int, np.ndarray] = {}
        actions = []
        for g in range(cat.n_arrows):
            m, n = cat.src[g], cat.tgt[g]
            cols = []
            for f in t.components(g):
                if f not in tables:
                    tables[f] = self.op_table(f)
                tab = tables[f]
                cols.append(tab if n else np.repeat(tab, r ** n))
            if m == 0:
                actions.append((0,) * (r ** n))
            else:
                actions.append(tuple(int(v) for v in _radix(np.stack(cols, axis=1), r)))
        return Presheaf(cat, [r ** k for k in range(cat.n_objects)], actions)

    # ---------------------------------------------------------- structure

    @cached_property
    def derivations(self) -> tuple[list[int], dict[int, tuple]]:
        """Greedy generating set with a derivation for every other element.

        A derivation is ``("const", k)`` or ``("ev", x, b)`` with ``x`` a tuple
        of earlier elements.
        """
        r, N, sig = self.size, self.sig.n, self.sig
        deriv: dict[int, tuple] = {}
        reached: list[int] = []
        if r and sig.n_consts:
            for k, v in enumerate(self.const_values):
                if v not in deriv:
                    deriv[v] = ("const", k)
                    reached.append(v)
        gens: list[int] = []
        seen_tuples: set[tuple[int, ...]] = set()

        def close():
            grew = True
            while grew:
                grew = False
                for x in product(list(reached), repeat=N):
                    if x in seen_tuples:
                        continue
                    seen_tuples.add(x)
                    code = 0
                    for a in x:
                        code = code * r + a
                    for b, v in enumerate(self.ev[code]):
                        v = int(v)
                        if v not in deriv:
                            deriv[v] = ("ev", x, b)
                            reached.append(v)
                            grew = True

        close()
        for a in range(r):
            if a not in deriv:
                gens.append(a)
                deriv[a] = ("gen",)
                reached.append(a)
                close()
        return gens, deriv


def algebra_homs(a: FiniteAlgebra, b: FiniteAlgebra, limit: int | None = None) -> Iterator[tuple[int, ...]]:
    """Every homomorphism ``a -> b`` as a value tuple, determined by the generators of ``a``."""
    gens, deriv = a.derivations
    order = [e for e in deriv if deriv[e][0] != "gen"]
    r, N = b.size, a.sig.n
    if a.size == 0:
        yield ()
        return
    if r == 0:
        return
    xs_a = tuples(a.size, N)
    found = 0
    for images in product(range(r), repeat=len(gens)):
        h = np.full(a.size, -1, dtype=np.int64)
        for g, v in zip(gens, images):
            h[g] = v
        for e in order:
            d = deriv[e]
            if d[0] == "const":
                h[e] = b.const_values[d[1]]
            else:
                code = 0
                for x in d[1]:
                    code = code * r + int(h[x])
                h[e] = b.ev[code, d[2]]
        # reuse derived positions, then check the whole table
        if (h[a.ev] != b.ev[_radix(h[xs_a], r)]).any():
            continue
        if any(h[c] != bc for c, bc in zip(a.const_values, b.const_values)):
            continue
        yield tuple(int(v) for v in h)
        found += 1
        if limit is not None and found >= limit:
            return


def extend_hom(a: FiniteAlgebra, b: FiniteAlgebra, partial: dict[int, int]) -> tuple[int, ...] | None:
    """The homomorphism ``a -> b`` extending ``partial``, or None when there is none.

    Closes the assigned elements under the operations; a clash, an element
    left unreached, or a failed final check all give None.
    """
    r, N = a.size, a.sig.n
    h = dict(partial)
    for k, v in enumerate(a.const_values):
        if h.setdefault(v, b.const_values[k]) != b.const_values[k]:
            return None
    seen: set[tuple[int, ...]] = set()
    grew = True
    while grew:
        grew = False
        for x in product(list(h), repeat=N):
            if x in seen:
                continue
            seen.add(x)
            code = 0
            for u in x:
                code = code * r + u
            image = b.ev[int(_radix(np.array([[h[u] for u in x]], dtype=np.int64), b.size)[0])] if N else b.ev[0]
            for v, w in zip(a.ev[code].tolist(), image.tolist()):
                if v not in h:
                    h[v] = w
                    grew = True
                elif h[v] != w:
                    return None
    if len(h) != r:
        return None
    out = tuple(h[u] for u in range(r))
    return out if is_homomorphism(a, b, out) else None


def is_homomorphism(a: FiniteAlgebra, b: FiniteAlgebra, h: Sequence[int]) -> bool:
    if a.size == 0:
        return True
    h = np.asarray(h, dtype=np.int64)
    return bool((h[a.ev] == b.ev[_radix(h[tuples(a.size, a.sig.n)], b.size)]).all())


def find_algebra_iso(a: FiniteAlgebra, b: FiniteAlgebra) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    """A pair of mutually inverse homomorphisms, both verified."""
    if a.size != b.size:
        return None
    for h in algebra_homs(a, b):
        if len(set(h)) == a.size:
            inv = [0] * a.size
            for x, y in enumerate(h):
                inv[y] = x
            if is_homomorphism(b, a, inv):
                return h, tuple(inv)
    return None


# ------------------------------------------------------------ congruences


@dataclass
class Quotient:
    algebra: FiniteAlgebra
    map: tuple[int, ...]


def congruence_quotient(a: FiniteAlgebra, pairs: Sequence[tuple[int, int]]) -> Quotient:
    """Quotient by the least congruence containing ``pairs``.

    Union-find closure: tuples whose entries are congruent must have
    congruent evaluation rows; repeated until no class merges.
    """
    r, N = a.size, a.sig.n
    uf = UnionFind(r)
    for x, y in pairs:
        uf.union(x, y)
    xs = tuples(r, N)
    while True:
        cls = np.array([uf.find(e) for e in range(r)], dtype=np.int64)
        keys = _radix(cls[xs], r) if r else np.zeros(0, dtype=np.int64)
        merged = False
        first: dict[int, int] = {}
        for code, key in enumerate(keys.tolist()):
            j = first.setdefault(key, code)
            if j != code:
                for u, v in zip(a.ev[j].tolist(), a.ev[code].tolist()):
                    if uf.union(u, v):
                        merged = True
        if not merged:
            break
    index_of, roots = uf.classes()
    k = len(roots)
    dense = np.array(index_of, dtype=np.int64)
    if k:
        reps = np.array(roots, dtype=np.int64)
        ev = dense[a.ev[_radix(reps[tuples(k, N)], r)]]
    else:
        ev = np.zeros((0, a.sig.width), dtype=np.int64)
    labels = [a.labels[x] for x in roots]
    return Quotient(FiniteAlgebra(a.theory, k, ev, labels=labels), tuple(index_of))


# ---------------------------------------------------- presented algebras


@dataclass
class Relation:
    """``op(args) = target`` with ``op: 1 -> len(args)`` and generator ids."""

    op: int
    args: tuple[int, ...]
    target: int


@dataclass
class Presented:
    algebra: FiniteAlgebra
    generator_map: tuple[int, ...]
    rounds: int = 0
    stats: dict = field(default_factory=dict)


def _components(lab: np.ndarray, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, bool]:
    """Merge the classes of ``a[i]`` and ``b[i]``; labels are least class members."""
    a, b = lab[a], lab[b]
    mask = a != b
    if not mask.any():
        return lab, False
    n = lab.size
    rows = np.concatenate([np.arange(n), a[mask]])
    cols = np.concatenate([lab, b[mask]])
    g = coo_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(n, n))
    ncomp, comp = connected_components(g, directed=False)
    least = np.full(ncomp, n, dtype=np.int64)
    np.minimum.at(least, comp, np.arange(n))
    return least[comp], True


class _Builder:
    """Array-backed state: element labels and rows ``(key, values)``."""

    def __init__(self, t: TheoryPresentation, n_gens: int, max_elements: int):
        self.t = t
        self.sig = sig = signature(t)
        self.max_elements = max_elements
        n0 = n_gens + sig.n_consts
        self.lab = np.arange(n0, dtype=np.int64)
        self.depth = np.zeros(n0, dtype=np.int64)
        self.const_ids = np.arange(n_gens, n0, dtype=np.int64)
        self.K = np.zeros((0, sig.n), dtype=np.int64)
        self.V = np.zeros((0, sig.width), dtype=np.int64)
        proj = list(sig.proj)
        # columns filled by fresh elements; repeated projections are merged instead
        self.first_proj = {}
        for j, pj in enumerate(proj):
            self.first_proj.setdefault(pj, j)
        fixed = set(proj) | set(sig.consts)
        self.free_cols = [i for i in range(sig.width) if i not in fixed]

    def new_elements(self, count: int, depth: np.ndarray) -> np.ndarray:
        n = self.lab.size
        if n + count > self.max_elements:
            raise NotConverged(self.max_elements, "presentation (element budget)")
        ids = np.arange(n, n + count, dtype=np.int64)
        self.lab = np.concatenate([self.lab, ids])
        self.depth = np.concatenate([self.depth, depth])
        return ids

    def class_depth(self) -> np.ndarray:
        d = np.full(self.lab.size, np.iinfo(np.int64).max, dtype=np.int64)
        np.minimum.at(d, self.lab, self.depth)
        return d

    def fresh_rows(self, keys: np.ndarray) -> None:
        sig = self.sig
        m = keys.shape[0]
        if m == 0:
            return
        d = 1 + (self.class_depth()[keys].max(axis=1) if sig.n else np.zeros(m, dtype=np.int64))
        V = np.zeros((m, sig.width), dtype=np.int64)
        nfree = len(self.free_cols)
        if nfree:
            ids = self.new_elements(m * nfree, np.repeat(d, nfree)).reshape(m, nfree)
            V[:, self.free_cols] = ids
        for pj, j in self.first_proj.items():
            V[:, pj] = keys[:, j]
        for c, e in zip(sig.consts, self.const_ids):
            V[:, c] = e
        self.K = np.concatenate([self.K, keys])
        self.V = np.concatenate([self.V, V])

    def merge(self, a: np.ndarray, b: np.ndarray) -> bool:
        self.lab, changed = _components(self.lab, a.ravel(), b.ravel())
        return changed

    def _row_codes(self, K: np.ndarray) -> np.ndarray:
        base = self.lab.size
        if K.shape[1] == 0:
            return np.zeros(K.shape[0], dtype=np.int64)
        if float(base) ** K.shape[1] < 2.0 ** 62:
            return _radix(K, base)
        return np.unique(K, axis=0, return_inverse=True)[1].ravel()

    def canonicalize(self) -> bool:
        """Relabel rows, enforce projections and constants, merge rows with equal keys."""
        sig = self.sig
        merged = False
        while True:
            K = self.lab[self.K]
            V = self.lab[self.V]
            a = [V[:, sig.proj].ravel()]
            b = [K.ravel()]
            for c, e in zip(sig.consts, self.const_ids):
                a.append(V[:, c])
                b.append(np.full(V.shape[0], e, dtype=np.int64))
            if K.shape[0]:
                _, first, inverse = np.unique(self._row_codes(K), return_index=True, return_inverse=True)
                inverse = inverse.ravel()
                a.append(V.ravel())
                b.append(V[first[inverse]].ravel())
            else:
                first = np.zeros(0, dtype=np.int64)
            if self.merge(np.concatenate(a), np.concatenate(b)):
                merged = True
                continue
            order = np.sort(first)
            self.K, self.V = K[order], V[order]
            return merged

    def settle(self) -> None:
        sig = self.sig
        self.canonicalize()
        while True:
            before = self.K.shape[0]
            derived_k = [self.V[:, comp_c] for comp_c, _ in sig.subs]
            derived_v = [self.V[:, sub_c] for _, sub_c in sig.subs]
            self.K = np.concatenate([self.K] + derived_k)
            self.V = np.concatenate([self.V] + derived_v)
            merged = self.canonicalize()
            if not merged and self.K.shape[0] == before:
                return

    def roots(self) -> np.ndarray:
        return np.nonzero(self.lab == np.arange(self.lab.size))[0]

    def missing(self, limit: int) -> np.ndarray:
        """Tuples without a row, shallowest first so that ties between old elements come early."""
        N = self.sig.n
        roots = self.roots()
        depth = self.class_depth()[roots]
        base = self.lab.size
        have = np.sort(_radix(self.K, base)) if self.K.shape[0] else np.zeros(0, dtype=np.int64)
        for level in np.unique(depth):
            low = roots[depth <= level]
            keys = low[tuples(low.size, N)]
            keys = keys[self.class_depth()[keys].max(axis=1) == level] if N else keys
            codes = _radix(keys, base)
            pos = np.searchsorted(have, codes)
            pos = np.minimum(pos, max(have.size - 1, 0))
            new = keys[(have.size == 0) | (have[pos] != codes)] if have.size else keys
            if new.shape[0]:
                return new[:limit]
        return np.zeros((0, N), dtype=np.int64)


def present(t: TheoryPresentation, n_gens: int, relations: Sequence[Relation], bound: int = 64,
            max_elements: int = 2_000_000, batch: int = 64) -> Presented:
    """The algebra generated by ``n_gens`` generators subject to ``relations``.

    Elements are classes of integer ids.  Rows are derived along monoid
    generators wherever possible; fresh rows (with fresh elements) are only
    created for tuples nothing derives, shallowest first, ``batch`` in the
    first round and four times as many in each later one.  More than
    ``bound`` such rounds, or more than ``max_elements`` element ids, raises
    :class:`NotConverged`.
    """
    sig = signature(t)
    N = sig.n
    b = _Builder(t, n_gens, max_elements)
    ops0 = t.ops(0)
    if relations:
        keys, cols, targets, const_pairs = [], [], [], []
        for rel in relations:
            n = len(rel.args)
            if n == 0:
                const_pairs.append((int(b.const_ids[ops0.index(rel.op)]), rel.target))
                continue
            keys.append(tuple(rel.args) + (rel.args[0],) * (N - n))
            cols.append(sig.embed(rel.op))
            targets.append(rel.target)
        if keys:
            karr = np.array(keys, dtype=np.int64)
            uniq, inverse = np.unique(karr, axis=0, return_inverse=True)
            start = b.K.shape[0]
            b.fresh_rows(uniq)
            vals = b.V[start + inverse.ravel(), np.array(cols)]
            b.merge(vals, np.array(targets, dtype=np.int64))
        if const_pairs:
            cp = np.array(const_pairs, dtype=np.int64)
            b.merge(cp[:, 0], cp[:, 1])
    rounds = 0
    while True:
        b.settle()
        todo = b.missing(batch)
        if todo.shape[0] == 0:
            break
        rounds += 1
        if rounds > bound:
            raise NotConverged(bound, "presentation")
        b.fresh_rows(todo)
        batch = min(batch * 4, 1 << 15)
    roots = b.roots()
    k = roots.size
    dense = np.full(b.lab.size, -1, dtype=np.int64)
    dense[roots] = np.arange(k)
    ev = np.zeros((k ** N, sig.width), dtype=np.int64)
    if b.K.shape[0]:
        ev[_radix(dense[b.K], k)] = dense[b.V]
    gen_map = tuple(int(dense[b.lab[g]]) for g in range(n_gens))
    labels: list = [None] * k
    for g in range(n_gens):
        if labels[gen_map[g]] is None:
            labels[gen_map[g]] = f"g{g}"
    labels = [lab if lab is not None else f"e{i}" for i, lab in enumerate(labels)]
    if b.K.shape[0] != k ** N:
        raise NotConverged(bound, "presentation (incomplete table)")
    alg = FiniteAlgebra(t, k, ev, labels=labels)
    return Presented(alg, gen_map, rounds, {"elements_created": int(b.lab.size), "rows": int(b.K.shape[0])})


def free_algebra(t: TheoryPresentation, n_gens: int, **kw) -> Presented:
    return present(t, n_gens, [], **kw)
