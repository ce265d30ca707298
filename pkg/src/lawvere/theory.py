"""Theory presentations: an identity-on-objects functor from a truncated
finite-set site into a finite category.

Objects are the sets ``0..N``.  An arrow ``m -> n`` of the theory category is
an ``m``-tuple of operations in ``n`` variables (its composites with the
coproduct injections), so an ``n``-ary operation is an arrow ``1 -> n``.
Built-in theories are generated from a *clone* description: the finite set
``F(n)`` of ``n``-ary operations, the variables, and substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Callable, Hashable, Sequence

from .fincat.core import FinCategory, FinFunctor, Presheaf, Violation, restrict
from .site import TruncatedFinSetSite, is_sheaf


@dataclass(frozen=True)
class Clone:
    """Operations of each arity ``0..N`` with variables and substitution.

    ``ops[n]`` lists labels of the ``n``-ary operations; ``var(n, j)`` is the
    index of the ``j``-th variable in ``ops[n]``; ``subst(n, u, k, vs)``
    substitutes ``vs`` (``n`` indices into ``ops[k]``) into ``u`` from ``ops[n]``.
    """

    name: str
    ops: tuple[tuple[Hashable, ...], ...]
    var: Callable[[int, int], int]
    subst: Callable[[int, int, int, Sequence[int]], int]


class TheoryPresentation:
    """``tau: site -> category``, identity on objects."""

    def __init__(self, site: TruncatedFinSetSite, category: FinCategory, tau: FinFunctor, name: str = ""):
        self.site = site
        self.category = category
        self.tau = tau
        self.name = name or category.name
        self.n = site.n

    # ---------------------------------------------------- operation access

    def ops(self, n: int) -> list[int]:
        """Arrow ids of the ``n``-ary operations, i.e. of ``1 -> n``."""
        return self.category.hom(1, n)

    def point(self, n: int, j: int) -> int:
        """The ``j``-th variable: image of the ``j``-th point ``1 -> n``."""
        return self.tau.arr_map[self.site.point(n, j)]

    def tau_of(self, m: int, n: int, values: Sequence[int]) -> int:
        return self.tau.arr_map[self.site.arrow_of(m, n, values)]

    @cached_property
    def _components(self) -> dict[int, tuple[int, ...]]:
        cat = self.category
        out = {}
        for g in range(cat.n_arrows):
            m, n = cat.src[g], cat.tgt[g]
            out[g] = tuple(cat.compose(g, self.point(m, i)) for i in range(m))
        return out

    def components(self, g: int) -> tuple[int, ...]:
        """``(g . tau(point_i))_i``: the operations making up ``g``."""
        return self._components[g]

    @cached_property
    def _copair(self) -> dict[tuple[int, int, tuple[int, ...]], int]:
        cat = self.category
        out = {}
        for g, comps in self._components.items():
            out.setdefault((cat.src[g], cat.tgt[g], comps), g)
        return out

    def copair(self, m: int, n: int, comps: Sequence[int]) -> int:
        """The arrow ``m -> n`` with the given operation components."""
        return self._copair[m, n, tuple(comps)]

    def substitute(self, u: int, vs: Sequence[int]) -> int:
        """``u(v_1, ..., v_k)``: compose the operation ``u: 1 -> k`` with the copairing of ``vs``."""
        cat = self.category
        k = cat.tgt[u]
        n = cat.tgt[vs[0]] if vs else None
        if n is None:
            raise ValueError("substitution into a constant needs an explicit arity; use compose")
        return cat.compose(self.copair(k, n, vs), u)

    @cached_property
    def op_generators(self) -> list[int]:
        """A set of operations whose substitution closure (with variables) is every operation."""
        cat = self.category
        N = self.n
        derived = [set(self.point(n, j) for j in range(n)) for n in range(N + 1)]
        gens: list[int] = []

        def close() -> None:
            changed = True
            while changed:
                changed = False
                for k in range(N + 1):
                    for u in list(derived[k]):
                        for n in range(N + 1):
                            for vs in product(sorted(derived[n]), repeat=k):
                                w = cat.compose(self.copair(k, n, vs), u)
                                if w not in derived[n]:
                                    derived[n].add(w)
                                    changed = True

        close()
        for n in range(N + 1):
            for f in self.ops(n):
                if f not in derived[n]:
                    gens.append(f)
                    derived[n].add(f)
                    close()
        return gens

    def op_label(self, f: int) -> str:
        return self.category.arrow_names[f]

    def __repr__(self) -> str:
        return f"TheoryPresentation({self.name}, N={self.n})"

    # ----------------------------------------------------- construction

    @classmethod
    def from_clone(cls, clone: Clone, n: int) -> "TheoryPresentation":
        site = TruncatedFinSetSite(n)
        ops = clone.ops
        if len(ops) < n + 1:
            raise ValueError(f"clone {clone.name} only lists arities up to {len(ops) - 1}")
        keys, index, arrows = [], {}, []
        for m in range(n + 1):
            for k in range(n + 1):
                for v in product(range(len(ops[k])), repeat=m):
                    index[m, k, v] = len(keys)
                    keys.append((m, k, v))
                    body = ",".join(str(ops[k][x]) for x in v)
                    arrows.append((f"{m}->{k}:[{body}]", m, k))
        ids = [index[m, m, tuple(clone.var(m, j) for j in range(m))] for m in range(n + 1)]
        cache: dict[tuple[int, int], int] = {}
        subst = lru_cache(maxsize=None)(clone.subst)

        def comp(g, f):
            hit = cache.get((g, f))
            if hit is not None:
                return hit
            m, k, fv = keys[f]
            k2, l, gv = keys[g]
            if k != k2:
                return None
            r = index[m, l, tuple(subst(k, u, l, gv) for u in fv)]
            cache[g, f] = r
            return r

        cat = FinCategory([str(i) for i in range(n + 1)], arrows, ids, comp, name=clone.name)
        cat.clone_keys = keys
        sc = site.category
        amap = [index[sc.src[h], sc.tgt[h], tuple(clone.var(sc.tgt[h], y) for y in sc.functions[h])]
                for h in range(sc.n_arrows)]
        tau = FinFunctor(sc, cat, list(range(n + 1)), amap, name="tau")
        theory = cls(site, cat, tau, name=clone.name)
        theory.clone = clone
        return theory


# ------------------------------------------------------------ built-ins


def _vectors(q: int, n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(product(range(q), repeat=n))


def field_clone(q: int, n: int) -> Clone:
    """Modules over the prime field ``F_q``: ``n``-ary operations are coefficient vectors."""
    if q < 2 or any(q % d == 0 for d in range(2, int(q ** 0.5) + 1)):
        raise ValueError("only prime fields F_q are supported")
    ops = tuple(tuple("".join(map(str, v)) for v in _vectors(q, k)) for k in range(n + 1))

    def rank(v):
        r = 0
        for x in v:
            r = r * q + x
        return r

    def var(k, j):
        return q ** (k - 1 - j)

    def subst(k, u, l, vs):
        coeff = _decode(u, q, k)
        acc = [0] * l
        for c, v in zip(coeff, vs):
            if c:
                for i, x in enumerate(_decode(v, q, l)):
                    acc[i] = (acc[i] + c * x) % q
        return rank(acc)

    return Clone(f"F{q}-modules", ops, var, subst)


def _decode(code: int, base: int, length: int) -> list[int]:
    out = [0] * length
    for i in range(length - 1, -1, -1):
        code, out[i] = divmod(code, base)
    return out


def pointed_set_clone(n: int) -> Clone:
    ops = tuple(tuple(["*"] + [f"x{j}" for j in range(k)]) for k in range(n + 1))
    return Clone("pointed-sets", ops, lambda k, j: j + 1, lambda k, u, l, vs: 0 if u == 0 else vs[u - 1])


def semilattice_clone(n: int) -> Clone:
    """Idempotent commutative monoids: an operation is the join of a subset of variables."""
    def label(mask, k):
        return "+".join(f"x{j}" for j in range(k) if mask >> j & 1) or "0"

    ops = tuple(tuple(label(mask, k) for mask in range(2 ** k)) for k in range(n + 1))

    def subst(k, u, l, vs):
        out = 0
        for j in range(k):
            if u >> j & 1:
                out |= vs[j]
        return out

    return Clone("semilattices", ops, lambda k, j: 1 << j, subst)


def degenerate_clone(n: int) -> Clone:
    """Only variables: models are sheaves on the site itself."""
    ops = tuple(tuple(f"x{j}" for j in range(k)) for k in range(n + 1))
    return Clone("degenerate", ops, lambda k, j: j, lambda k, u, l, vs: vs[u])


# left-zero monoid with unit: {1, a, b}, xy = x unless x = 1
_LZ = ("1", "a", "b")


def _lz_mul(x: int, y: int) -> int:
    return y if x == 0 else x


def monoid_action_clone(n: int) -> Clone:
    """Sets with an action of the non-commutative monoid ``{1, a, b}`` (``ab = a``, ``ba = b``)."""
    ops = tuple(tuple(f"{m}x{j}" for j in range(k) for m in _LZ) for k in range(n + 1))

    def subst(k, u, l, vs):
        j, m = divmod(u, 3)
        j2, m2 = divmod(vs[j], 3)
        return j2 * 3 + _lz_mul(m, m2)

    return Clone("lz-monoid-actions", ops, lambda k, j: 3 * j, subst)


def f_q_theory(q: int = 2, n: int = 3) -> TheoryPresentation:
    return TheoryPresentation.from_clone(field_clone(q, n), n)


def pointed_set_theory(n: int = 3) -> TheoryPresentation:
    return TheoryPresentation.from_clone(pointed_set_clone(n), n)


def semilattice_theory(n: int = 3) -> TheoryPresentation:
    return TheoryPresentation.from_clone(semilattice_clone(n), n)


def degenerate_theory(n: int = 3) -> TheoryPresentation:
    return TheoryPresentation.from_clone(degenerate_clone(n), n)


def monoid_action_theory(n: int = 3) -> TheoryPresentation:
    return TheoryPresentation.from_clone(monoid_action_clone(n), n)


BUILTIN_THEORIES: dict[str, Callable[[int], TheoryPresentation]] = {
    "f2": lambda n: f_q_theory(2, n),
    "f3": lambda n: f_q_theory(3, n),
    "pointed": pointed_set_theory,
    "semilattice": semilattice_theory,
    "degenerate": degenerate_theory,
    "lz-action": monoid_action_theory,
}


# ----------------------------------------------------------- validation


def validate_theory(t: TheoryPresentation) -> list[Violation]:
    """Identity on objects, functoriality of tau, additivity on covers, subcanonicity."""
    report: list[Violation] = []
    cat, site, tau = t.category, t.site, t.tau
    if cat.n_objects != site.category.n_objects or list(tau.obj_map) != list(range(cat.n_objects)):
        report.append(Violation("identity_on_objects", "tau is not the identity on objects", tuple(tau.obj_map)))
        return report
    sc = site.category
    for v in tau.check():
        report.append(Violation("functor", v.detail, v.witness))
    for cv in site.covers:
        legs = [tau.arr_map[f] for f in cv.arrows]
        for T in range(cat.n_objects):
            seen = {}
            for g in cat.hom(cv.apex, T):
                key = tuple(cat.compose(g, leg) for leg in legs)
                if key in seen:
                    report.append(Violation("additivity", f"cover of {sc.objects[cv.apex]} is not a coproduct in the theory: "
                                            f"two arrows into {cat.objects[T]} agree on the legs", (cv, T, seen[key], g)))
                    break
                seen[key] = g
            else:
                expected = 1
                for leg in legs:
                    expected *= len(cat.hom(cat.src[leg], T))
                if len(seen) != expected:
                    report.append(Violation("additivity", f"cover of {sc.objects[cv.apex]} is not a coproduct in the theory: "
                                            f"some cocone into {cat.objects[T]} has no copairing", (cv, T)))
    for T in range(cat.n_objects):
        res = is_sheaf(restricted_representable(t, T), site)
        if not res:
            report.append(Violation("subcanonicity", f"y({cat.objects[T]}) restricted along tau is not a sheaf", (T, res)))
    return report


def restricted_representable(t: TheoryPresentation, T: int) -> Presheaf:
    """``y(T)`` restricted along tau, without building ``y(T)`` on the whole theory."""
    cat, sc = t.category, t.site.category
    homs = [cat.hom(c, T) for c in range(sc.n_objects)]
    return Presheaf.from_function(sc, homs, lambda h, g: cat.compose(g, t.tau.arr_map[h]))


def model_of(p: Presheaf, t: TheoryPresentation) -> bool:
    """Linton condition: the restriction along tau is a sheaf."""
    return bool(is_sheaf(restrict(t.tau, p), t.site))
