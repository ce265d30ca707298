"""Models of a theory, the forgetful functor, modelification and free models.

A model is a presheaf on the theory category whose restriction along tau is a
sheaf.  Concretely it is a finite algebra: the carrier is the value at 1 and
the value at ``n`` is identified with ``n``-tuples through the points.  Models
here carry both faces and convert between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import itertools

import numpy as np

from .algebra import FiniteAlgebra, Presented, Relation, _radix, algebra_homs, present, signature, tuples
from .fincat.core import Isomorphism, NatTransformation, Presheaf, identity_nat, representable, restrict, witness_iso
from .fincat.homs import iter_homs
from .fincat.kan import lan
from .site import is_sheaf
from .theory import TheoryPresentation, _decode, model_of


class NotAModel(ValueError):
    pass


class Model:
    """A model, backed by an algebra and optionally by a given presheaf on the theory.

    Elements of the value at ``n`` are encoded as ``n``-tuples of carrier
    elements.  For an algebra-backed model the encoding is the mixed-radix code;
    for a presheaf-backed one it goes through the points.
    """

    def __init__(self, algebra: FiniteAlgebra, presheaf: Presheaf | None = None,
                 decode: list[list[tuple[int, ...]]] | None = None):
        self.theory = algebra.theory
        self.algebra = algebra
        self._given = presheaf
        self._decode = decode

    @classmethod
    def from_algebra(cls, a: FiniteAlgebra) -> "Model":
        return cls(a)

    @classmethod
    def from_presheaf(cls, p: Presheaf, t: TheoryPresentation) -> "Model":
        if not model_of(p, t):
            raise NotAModel("restriction along tau is not a sheaf")
        N = t.n
        r = p.sizes[1]
        decode = []
        for n in range(N + 1):
            pts = [p.actions[t.point(n, j)] for j in range(n)]
            decode.append([tuple(pt[q] for pt in pts) for q in range(p.sizes[n])])
        sig = signature(t)
        ev = np.zeros((r ** N, sig.width), dtype=np.int64)
        if r:
            enc = {x: q for q, x in enumerate(decode[N])}
            for code, x in enumerate(tuples(r, N).tolist()):
                q = enc[tuple(x)]
                ev[code] = [p.actions[b][q] for b in sig.ops]
        labels = p.labels[1] if p.labels else None
        return cls(FiniteAlgebra(t, r, ev, labels=labels), p, decode)

    @property
    def size(self) -> int:
        return self.algebra.size

    @cached_property
    def presheaf(self) -> Presheaf:
        return self._given if self._given is not None else self.algebra.theory_presheaf()

    @cached_property
    def underlying(self) -> Presheaf:
        if self._given is not None:
            return restrict(self.theory.tau, self._given)
        return self.algebra.forget_presheaf()

    @cached_property
    def _tables(self) -> list[np.ndarray]:
        """``_tables[n][e]`` is ``decode(n, e)``, one row per element."""
        if self._decode is None:
            return [tuples(self.size, n) for n in range(self.theory.n + 1)]
        return [np.array(level, dtype=np.int64).reshape(len(level), n) for n, level in enumerate(self._decode)]

    def encode_rows(self, n: int, rows: np.ndarray) -> tuple[int, ...]:
        """``encode`` applied to each row of an integer array."""
        if self._encode is not None:
            return tuple(self._encode[n][tuple(r)] for r in rows.tolist())
        return tuple(_radix(rows, self.size).tolist())

    def decode(self, n: int, e: int) -> tuple[int, ...]:
        if self._decode is not None:
            return self._decode[n][e]
        r, out = self.size, []
        for _ in range(n):
            e, d = divmod(e, r)
            out.append(d)
        return tuple(reversed(out))

    @cached_property
    def _encode(self) -> list[dict[tuple[int, ...], int]] | None:
        if self._decode is None:
            return None
        return [{x: q for q, x in enumerate(level)} for level in self._decode]

    def encode(self, n: int, x: Sequence[int]) -> int:
        if self._encode is not None:
            return self._encode[n][tuple(x)]
        code = 0
        for a in x:
            code = code * self.size + a
        return code

    def __repr__(self) -> str:
        return f"Model({self.theory.name}, size={self.size})"


def forget(m: Model) -> Presheaf:
    """The underlying sheaf ``restrict(tau, m)``."""
    return m.underlying


def model_hom_nat(src: Model, tgt: Model, h: Sequence[int], on_site: bool = True) -> NatTransformation:
    """An algebra map as a natural transformation, on the site (underlying sheaves) or on the theory."""
    t = src.theory
    p, q = (forget(src), forget(tgt)) if on_site else (src.presheaf, tgt.presheaf)
    hv = np.asarray(h, dtype=np.int64)
    comps = []
    for n in range(t.n + 1):
        comps.append(tgt.encode_rows(n, hv[src._tables[n]]))
    return NatTransformation(p, q, comps)


# ------------------------------------------------------------ reflection


@dataclass
class Reflection:
    """A model with the unit from the input presheaf into it."""

    model: Model
    unit: NatTransformation
    presented: Presented | None = None


def generator_relations(p: Presheaf, t: TheoryPresentation, ops: Sequence[int] | None = None) -> list[Relation]:
    """``P(f) q = f(P(point_0) q, ...)`` for each operation ``f: 1 -> n`` and ``q`` in ``P(n)``.

    Naturality at a substitution follows from naturality at its parts, so the
    generating operations of the theory suffice; pass ``ops`` to use others.
    """
    ops = t.op_generators if ops is None else ops
    cat = t.category
    rels = []
    for f in ops:
        n = cat.tgt[f]
        pts = [p.actions[t.point(n, j)] for j in range(n)]
        act = p.actions[f]
        for q in range(p.sizes[n]):
            rels.append(Relation(f, tuple(pt[q] for pt in pts), act[q]))
    return rels


def modelify(p: Presheaf, t: TheoryPresentation, bound: int = 64, max_elements: int = 2_000_000,
             all_operations: bool = False) -> Reflection:
    """Reflect a presheaf on the theory into models.

    A model map out of ``p`` is fixed by its value on ``P(1)`` and must respect
    the action of every operation, so the reflection is the algebra presented
    by generators ``P(1)`` and those relations.  Raises ``NotConverged`` past
    ``bound`` fresh-row rounds.
    """
    if model_of(p, t):
        return Reflection(Model.from_presheaf(p, t), identity_nat(p))
    ops = [f for n in range(t.n + 1) for f in t.ops(n)] if all_operations else None
    pres = present(t, p.sizes[1], generator_relations(p, t, ops), bound=bound, max_elements=max_elements)
    m = Model(pres.algebra)
    gm = pres.generator_map
    target = m.presheaf
    comps = []
    for n in range(t.n + 1):
        pts = [p.actions[t.point(n, j)] for j in range(n)]
        comps.append(tuple(m.encode(n, [gm[pt[q]] for pt in pts]) for q in range(p.sizes[n])))
    return Reflection(m, NatTransformation(p, target, comps), pres)


def free_model(x: Presheaf, t: TheoryPresentation, bound: int = 64, max_elements: int = 2_000_000) -> Reflection:
    """Left adjoint to :func:`forget`: left Kan extension along tau, then modelify.

    The unit is a map from ``x`` into the underlying sheaf of the result.
    """
    if not is_sheaf(x, t.site):
        raise ValueError("free_model expects a sheaf on the site")
    k = lan(t.tau, x)
    r = modelify(k.presheaf, t, bound=bound, max_elements=max_elements)
    u = forget(r.model)
    comps = [tuple(r.unit.components[c][v] for v in k.unit.components[c]) for c in range(len(x.sizes))]
    return Reflection(r.model, NatTransformation(x, u, comps), r.presented)


# ------------------------------------------------------------- adjunction


@dataclass
class AdjunctionReport:
    model_homs: int
    sheaf_homs: int
    bijective: bool
    pairs: list[tuple[tuple[int, ...], tuple]]

    @property
    def ok(self) -> bool:
        return self.bijective and self.model_homs == self.sheaf_homs


def transpose(free: Reflection, m: Model, h: Sequence[int]) -> NatTransformation:
    """``U(h) . unit`` for an algebra map ``h`` out of the free model."""
    return free.unit.then(model_hom_nat(free.model, m, h))


def adjunction_check(x: Presheaf, m: Model, free: Reflection | None = None) -> AdjunctionReport:
    """Enumerate both hom-sets and check that transposition is a bijection between them."""
    t = m.theory
    free = free_model(x, t) if free is None else free
    mod = [h for h in algebra_homs(free.model.algebra, m.algebra)]
    images = [transpose(free, m, h) for h in mod]
    sheaf_keys = {s.key() for s in iter_homs(x, forget(m))}
    got = {s.key() for s in images}
    ok = all(s.check() == [] for s in images) and len(got) == len(mod) and got == sheaf_keys
    return AdjunctionReport(len(mod), len(sheaf_keys), ok, [(h, s.key()) for h, s in zip(mod, images)])


def representable_comparison(t: TheoryPresentation, n: int, free: Reflection | None = None) -> Isomorphism | None:
    """Witness ``F(y(n)) = y(tau n)``: an arrow ``g: m -> n`` goes to ``g`` acting on the generic tuple."""
    sc = t.site.category
    free = free_model(representable(sc, n), t) if free is None else free
    m = free.model
    yn = representable(t.category, n)
    x = free.unit.source
    generic = m.decode(n, free.unit.components[n][x.labels[n].index(sc.identities[n])])
    cat = t.category
    comps = []
    for c in range(cat.n_objects):
        row = []
        for g in yn.labels[c]:
            row.append(m.encode(c, [m.algebra.apply(f, generic) for f in t.components(g)]))
        comps.append(tuple(row))
    fwd = NatTransformation(yn, m.presheaf, comps)
    if fwd.check():
        return None
    return witness_iso(fwd)


def vector_space(t: TheoryPresentation, dim: int) -> Model:
    """``F_q^dim`` as a model of the field theory, built from coordinates (not presented).

    ``t`` must come from :func:`field_clone`; an operation with coefficients
    ``c`` sends ``x`` to ``sum_j c_j x_j``.
    """
    q = len(t.ops(1))
    sig = signature(t)
    N = t.n
    vecs = np.array(list(itertools.product(range(q), repeat=dim)), dtype=np.int64).reshape(q ** dim, dim)
    weights = q ** np.arange(dim - 1, -1, -1, dtype=np.int64)
    size = q ** dim
    xs = tuples(size, N)
    coeff = np.array([_coefficients(t, f, q) for f in sig.ops], dtype=np.int64).reshape(len(sig.ops), N)
    # value of op b on tuple x: sum_j coeff[b, j] * vecs[x_j]
    stacked = vecs[xs] if N else np.zeros((1, 0, dim), dtype=np.int64)
    out = np.einsum("bj,rjd->rbd", coeff, stacked) % q
    ev = out @ weights if dim else np.zeros((xs.shape[0], len(sig.ops)), dtype=np.int64)
    labels = ["".join(map(str, v)) for v in vecs.tolist()]
    return Model(FiniteAlgebra(t, size, ev, labels=labels))


def _coefficients(t: TheoryPresentation, f: int, q: int) -> list[int]:
    """Coefficient vector of a field operation ``f: 1 -> n``."""
    _, n, (code,) = t.category.clone_keys[f]
    return _decode(code, q, n)
