"""Finitely supported signed kernels between spaces lying over base sets.

Spaces are finite sets of points standing in for standard Borel spaces, so
every integral is a finite sum and every identity between kernels can be
tested as an exact equality of rational tables.  A kernel ``X1 -> M X2``
lies over a base map ``phi: I1 -> I2`` and may only put mass on points of
``X2`` above ``phi`` of the base point of its source.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Mapping, Sequence

from . import linalg as la
from .fincat.core import Presheaf
from .site import TruncatedFinSetSite

Mass = Fraction
Row = tuple[tuple[int, Fraction], ...]


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class MeasSpace:
    """A finite ordered set of points."""

    points: tuple[Hashable, ...]
    name: str = ""

    @property
    def size(self) -> int:
        return len(self.points)

    @staticmethod
    def of(n: int, name: str = "") -> "MeasSpace":
        return MeasSpace(tuple(range(n)), name)

    def index(self, x: Hashable) -> int:
        return self.points.index(x)


@dataclass(frozen=True)
class AtomicMeasure:
    """A signed measure given by its nonzero point masses, in point order."""

    space: MeasSpace
    masses: Row

    @staticmethod
    def from_dict(space: MeasSpace, masses: Mapping[int, Fraction]) -> "AtomicMeasure":
        return AtomicMeasure(space, _row(masses))

    @staticmethod
    def dirac(space: MeasSpace, x: int) -> "AtomicMeasure":
        return AtomicMeasure(space, ((x, Fraction(1)),))

    def __getitem__(self, x: int) -> Fraction:
        for y, m in self.masses:
            if y == x:
                return m
        return Fraction(0)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(y for y, _ in self.masses)

    @property
    def norm(self) -> Fraction:
        """Total variation."""
        return sum((abs(m) for _, m in self.masses), Fraction(0))

    @property
    def total(self) -> Fraction:
        return sum((m for _, m in self.masses), Fraction(0))


def _row(masses: Mapping[int, Fraction]) -> Row:
    return tuple(sorted((x, Fraction(m)) for x, m in masses.items() if m != 0))


@dataclass(frozen=True)
class BasedSpace:
    """A space ``X`` with a map ``f: X -> I`` to a base set."""

    space: MeasSpace
    base: MeasSpace
    proj: tuple[int, ...]

    def __post_init__(self):
        if len(self.proj) != self.space.size or any(not 0 <= i < self.base.size for i in self.proj):
            raise KernelError("projection does not map the space into its base")

    @staticmethod
    def trivial(space: MeasSpace) -> "BasedSpace":
        return BasedSpace(space, MeasSpace.of(1), (0,) * space.size)

    @property
    def size(self) -> int:
        return self.space.size

    def fiber(self, i: int) -> list[int]:
        return [x for x, j in enumerate(self.proj) if j == i]


@dataclass(frozen=True)
class Kernel:
    """``k: X1 -> M X2`` over ``phi: I1 -> I2``; ``rows[x1]`` holds the nonzero masses of ``k(x1)``.

    The support condition ``k(x1)(x2) != 0 => phi(f1(x1)) = f2(x2)`` is
    checked on construction.
    """

    source: BasedSpace
    target: BasedSpace
    phi: tuple[int, ...]
    rows: tuple[Row, ...]

    def __post_init__(self):
        if len(self.phi) != self.source.base.size or any(not 0 <= v < self.target.base.size for v in self.phi):
            raise KernelError("base map does not match the base sets")
        if len(self.rows) != self.source.size:
            raise KernelError(f"{len(self.rows)} rows for a source of {self.source.size} points")
        bad = self.support_violation()
        if bad is not None:
            x1, x2 = bad
            raise KernelError(f"mass at ({self.source.space.points[x1]!r}, {self.target.space.points[x2]!r}) "
                              "lies outside the fibered product")

    @staticmethod
    def from_table(source: BasedSpace, target: BasedSpace, phi: Sequence[int],
                   table: Sequence[Mapping[int, Fraction]]) -> "Kernel":
        return Kernel(source, target, tuple(phi), tuple(_row(r) for r in table))

    def support_violation(self) -> tuple[int, int] | None:
        f1, f2 = self.source.proj, self.target.proj
        for x1, row in enumerate(self.rows):
            i2 = self.phi[f1[x1]]
            for x2, m in row:
                if not 0 <= x2 < self.target.size:
                    return x1, x2
                if f2[x2] != i2:
                    return x1, x2
        return None

    def row(self, x1: int) -> AtomicMeasure:
        return AtomicMeasure(self.target.space, self.rows[x1])

    def __call__(self, x1: int, x2: int) -> Fraction:
        return self.row(x1)[x2]

    @property
    def norm(self) -> Fraction:
        """``sup_x1 ||k(x1)||``, zero on an empty source."""
        return max((self.row(x).norm for x in range(self.source.size)), default=Fraction(0))

    def dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.target.size for _ in range(self.source.size)]
        for x1, row in enumerate(self.rows):
            for x2, m in row:
                out[x1][x2] = m
        return out

    def is_stochastic(self) -> bool:
        return all(m >= 0 for r in self.rows for _, m in r) and all(
            self.row(x).total == 1 for x in range(self.source.size))


def compose(k: Kernel, k2: Kernel) -> Kernel:
    """``k2 . k``: ``(x1, x3) -> sum_x2 k(x1, x2) k2(x2, x3)``."""
    if k.target != k2.source:
        raise KernelError("kernels are not composable: target and source spaces differ")
    rows = []
    for row in k.rows:
        acc: dict[int, Fraction] = {}
        for x2, m in row:
            for x3, m2 in k2.rows[x2]:
                acc[x3] = acc.get(x3, 0) + m * m2
        rows.append(_row(acc))
    return Kernel(k.source, k2.target, tuple(k2.phi[i] for i in k.phi), tuple(rows))


def dirac(x: BasedSpace) -> Kernel:
    """``x -> delta_x`` over the identity of the base."""
    return Kernel(x, x, tuple(range(x.base.size)), tuple(((i, Fraction(1)),) for i in range(x.size)))


def pushforward(h: Sequence[int], source: BasedSpace, target: BasedSpace, phi: Sequence[int] | None = None) -> Kernel:
    """``x -> delta_h(x)`` for a point map ``h`` over ``phi`` (default: the identity of a shared base)."""
    if phi is None:
        if source.base != target.base:
            raise KernelError("pushforward between different bases needs a base map")
        phi = range(source.base.size)
    phi = tuple(phi)
    if len(h) != source.size or any(not 0 <= y < target.size for y in h):
        raise KernelError("point map does not go from source to target")
    for x, y in enumerate(h):
        if target.proj[y] != phi[source.proj[x]]:
            raise KernelError(f"square does not commute at {source.space.points[x]!r}")
    return Kernel(source, target, phi, tuple(((y, Fraction(1)),) for y in h))


# ------------------------------------------------------------ cartesian lifts


def pullback_space(x: BasedSpace, phi: Sequence[int], base: MeasSpace) -> tuple[BasedSpace, tuple[int, ...]]:
    """``X x_I J`` over ``J`` for ``phi: J -> I``, pairs ``(x, j)`` in lexicographic order, with ``p_X``."""
    pairs = [(a, j) for a in range(x.size) for j in range(base.size) if x.proj[a] == phi[j]]
    space = MeasSpace(tuple((x.space.points[a], base.points[j]) for a, j in pairs), f"{x.space.name}x{base.name}")
    return BasedSpace(space, base, tuple(j for _, j in pairs)), tuple(a for a, _ in pairs)


@dataclass(frozen=True)
class Lift:
    kernel: Kernel
    projection: Kernel  # pushforward of p_X, over phi


def cartesian_lift(k: Kernel) -> Lift:
    """``k~(z)(x, j) = k(z)(x) [j = f(z)]``, a kernel over the identity of ``J`` with ``M p_X . k~ = k``."""
    bad = k.support_violation()
    if bad is not None:
        raise KernelError(f"support condition fails at {bad}")
    z, x = k.source, k.target
    pb, px = pullback_space(x, k.phi, z.base)
    where = {(a, j): n for n, (a, j) in enumerate(zip(px, pb.proj))}
    rows = tuple(tuple((where[a, z.proj[c]], m) for a, m in k.rows[c]) for c in range(z.size))
    lifted = Kernel(z, pb, tuple(range(z.base.size)), tuple(tuple(sorted(r)) for r in rows))
    return Lift(lifted, pushforward(px, pb, x, k.phi))


def factorisation_nullity(k: Kernel) -> int:
    """Dimension of the space of kernels ``a`` over ``id_J`` with ``M p_X . a = 0``.

    Zero means the lift is the unique factorisation.  Coordinates of ``a``
    are the entries allowed by its support condition.
    """
    lift = cartesian_lift(k)
    pb, px = lift.kernel.target, lift.projection
    z = k.source
    coords = [(c, b) for c in range(z.size) for b in range(pb.size) if pb.proj[b] == z.proj[c]]
    outputs = [(c, a) for c in range(z.size) for a in range(k.target.size)]
    col = {key: n for n, key in enumerate(coords)}
    rows = [[0] * len(coords) for _ in outputs]
    for r, (c, a) in enumerate(outputs):
        for b in range(pb.size):
            if (c, b) in col:
                for t, m in px.rows[b]:
                    if t == a:
                        rows[r][col[c, b]] += m
    if not coords:
        return 0
    mat = la.matrix(rows, la.QQ, (len(outputs), len(coords)))
    return len(coords) - mat.rank()


# ----------------------------------------------------------------- tensors


def tensor_spaces(a: BasedSpace, b: BasedSpace) -> BasedSpace:
    space = MeasSpace(tuple(product(a.space.points, b.space.points)), f"{a.space.name}x{b.space.name}")
    base = MeasSpace(tuple(product(a.base.points, b.base.points)), f"{a.base.name}x{b.base.name}")
    nb = b.base.size
    return BasedSpace(space, base, tuple(i * nb + j for i in a.proj for j in b.proj))


def tensor_kernels(k1: Kernel, k2: Kernel) -> Kernel:
    """Product measures: ``(x1, x2) -> k1(x1) (x) k2(x2)`` over ``phi1 x phi2``."""
    n2, nb = k2.target.size, k2.target.base.size
    rows = tuple(tuple((y1 * n2 + y2, m1 * m2) for y1, m1 in r1 for y2, m2 in r2)
                 for r1 in k1.rows for r2 in k2.rows)
    phi = tuple(p * nb + q for p in k1.phi for q in k2.phi)
    return Kernel(tensor_spaces(k1.source, k2.source), tensor_spaces(k1.target, k2.target), phi, rows)


def product_map(h1: Sequence[int], h2: Sequence[int], n2: int) -> tuple[int, ...]:
    """``h1 x h2`` on lexicographically ordered pairs, ``n2`` the size of the second target."""
    return tuple(a * n2 + b for a in h1 for b in h2)


# ---------------------------------------------------------------- concreteness


@dataclass(frozen=True)
class Concreteness:
    concrete: bool
    witness: tuple[int, int, int] | None = None  # object, two elements with equal evaluations

    def __bool__(self) -> bool:
        return self.concrete


def is_concrete(p: Presheaf, points: TruncatedFinSetSite | Mapping[int, Sequence[int]]) -> Concreteness:
    """Is ``P(c) -> prod_j P(1)``, ``x -> (P(point_j) x)_j``, injective for every object?

    ``points`` is the finite-set site (points of ``n`` are the maps ``1 -> n``)
    or a mapping from objects to their point arrows; objects it omits have no
    canonical map and are skipped, so a category without a point object is
    concrete vacuously.
    """
    if isinstance(points, TruncatedFinSetSite):
        site = points
        points = {n: [site.point(n, j) for j in range(n)] for n in range(site.n + 1)}
    for c, pts in sorted(points.items()):
        seen: dict[tuple[int, ...], int] = {}
        for x in range(p.sizes[c]):
            key = tuple(p.actions[f][x] for f in pts)
            if key in seen:
                return Concreteness(False, (c, seen[key], x))
            seen[key] = x
    return Concreteness(True)


# ------------------------------------------------------------- random kernels


def random_based_space(rng, max_points: int, max_base: int, name: str = "") -> BasedSpace:
    base = MeasSpace.of(rng.randint(1, max_base), name.upper())
    n = rng.randint(0, max_points)
    return BasedSpace(MeasSpace.of(n, name), base, tuple(rng.randrange(base.size) for _ in range(n)))


def random_mass(rng, denominators: Sequence[int] = (1, 2, 3, 5)) -> Fraction:
    return Fraction(rng.randint(-4, 4), rng.choice(denominators))


def random_kernel(rng, source: BasedSpace, target: BasedSpace, phi: Sequence[int] | None = None,
                  mass: Callable = random_mass) -> Kernel:
    """Random masses on a random subset of each allowed fiber; ``phi`` random if not given."""
    if phi is None:
        if target.base.size == 0:
            raise KernelError("no base map into an empty base")
        phi = tuple(rng.randrange(target.base.size) for _ in range(source.base.size))
    table = []
    for x1 in range(source.size):
        allowed = target.fiber(phi[source.proj[x1]])
        table.append({x2: mass(rng) for x2 in allowed if rng.random() < 0.7})
    return Kernel.from_table(source, target, phi, table)


# ------------------------------------------------------------------- law sweeps


@dataclass
class LawResult:
    law: str
    checked: int
    failures: list[str]
    witnesses: list[dict[str, "Kernel"]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, description: str, **kernels: "Kernel") -> None:
        self.failures.append(description)
        self.witnesses.append(kernels)


def unit_kernels(a: BasedSpace, b: BasedSpace) -> list[Kernel]:
    """The zero kernel and every kernel with a single unit mass, over one-point bases."""
    zero = Kernel(a, b, (0,), ((),) * a.size)
    out = [zero]
    for x, y in product(range(a.size), range(b.size)):
        out.append(Kernel(a, b, (0,), tuple(((y, Fraction(1)),) if z == x else () for z in range(a.size))))
    return out


def exhaustive_associativity(max_points: int = 4) -> list[LawResult]:
    """Dirac identity and associativity on every triple of unit kernels.

    Composition is linear in each argument, so agreement on unit kernels
    gives agreement on all kernels between spaces of these sizes.
    """
    spaces = [BasedSpace.trivial(MeasSpace.of(n)) for n in range(max_points + 1)]
    units = {(i, j): unit_kernels(spaces[i], spaces[j]) for i in range(len(spaces)) for j in range(len(spaces))}
    ident, assoc = LawResult("dirac identity", 0, []), LawResult("associativity", 0, [])
    for (a, b), ks in units.items():
        for k in ks:
            ident.checked += 1
            if not compose(dirac(spaces[a]), k) == k == compose(k, dirac(spaces[b])):
                ident.fail(f"sizes {a}->{b}: {k.rows}", k=k)
    for a, b, c, d in product(range(len(spaces)), repeat=4):
        for k1 in units[a, b]:
            for k2 in units[b, c]:
                k12 = compose(k1, k2)
                for k3 in units[c, d]:
                    assoc.checked += 1
                    if compose(k12, k3) != compose(k1, compose(k2, k3)):
                        assoc.fail(f"sizes {a},{b},{c},{d}: {k1.rows} {k2.rows} {k3.rows}", k1=k1, k2=k2, k3=k3)
    return [ident, assoc]


def random_associativity(rng, trials: int = 1000, max_points: int = 6, max_base: int = 3) -> list[LawResult]:
    """Random chains ``X1 -> X2 -> X3 -> X4`` over random bases and base maps."""
    ident, assoc = LawResult("dirac identity (random)", 0, []), LawResult("associativity (random)", 0, [])
    norm = LawResult("norm submultiplicativity", 0, [])
    for t in range(trials):
        xs = [random_based_space(rng, max_points, max_base, f"x{i}") for i in range(4)]
        k1, k2, k3 = (random_kernel(rng, xs[i], xs[i + 1]) for i in range(3))
        ident.checked += 1
        if not compose(dirac(xs[0]), k1) == k1 == compose(k1, dirac(xs[1])):
            ident.fail(f"trial {t}", k=k1)
        assoc.checked += 1
        if compose(compose(k1, k2), k3) != compose(k1, compose(k2, k3)):
            assoc.fail(f"trial {t}", k1=k1, k2=k2, k3=k3)
        norm.checked += 1
        if compose(k1, k2).norm > k1.norm * k2.norm:
            norm.fail(f"trial {t}", k1=k1, k2=k2)
    return [ident, assoc, norm]


def random_lift_instance(rng, max_base: int = 3, max_points: int = 4) -> Kernel:
    """A kernel ``Z -> M X`` over a random ``phi: J -> I``."""
    J = MeasSpace.of(rng.randint(1, max_base), "J")
    I = MeasSpace.of(rng.randint(1, max_base), "I")
    nz, nx = rng.randint(0, max_points), rng.randint(0, max_points)
    z = BasedSpace(MeasSpace.of(nz, "z"), J, tuple(rng.randrange(J.size) for _ in range(nz)))
    x = BasedSpace(MeasSpace.of(nx, "x"), I, tuple(rng.randrange(I.size) for _ in range(nx)))
    return random_kernel(rng, z, x)


def lift_laws(rng, trials: int = 200) -> list[LawResult]:
    fact, uniq = LawResult("lift factorisation", 0, []), LawResult("lift uniqueness", 0, [])
    for t in range(trials):
        k = random_lift_instance(rng)
        lift = cartesian_lift(k)
        fact.checked += 1
        if compose(lift.kernel, lift.projection) != k or lift.kernel.phi != tuple(range(k.source.base.size)):
            fact.fail(f"trial {t}", k=k)
        uniq.checked += 1
        if factorisation_nullity(k) != 0:
            uniq.fail(f"trial {t}", k=k)
    return [fact, uniq]


def strict_monoidal_sweep(max_points: int = 3) -> LawResult:
    """``pushforward(h1) (x) pushforward(h2) = pushforward(h1 x h2)`` for all point maps."""
    res = LawResult("strict monoidality", 0, [])
    spaces = [BasedSpace.trivial(MeasSpace.of(n)) for n in range(max_points + 1)]
    maps = [(a, b, h) for a in range(max_points + 1) for b in range(max_points + 1)
            for h in product(range(b), repeat=a)]
    for (a1, b1, h1), (a2, b2, h2) in product(maps, repeat=2):
        res.checked += 1
        left = tensor_kernels(pushforward(h1, spaces[a1], spaces[b1]), pushforward(h2, spaces[a2], spaces[b2]))
        src = tensor_spaces(spaces[a1], spaces[a2])
        tgt = tensor_spaces(spaces[b1], spaces[b2])
        right = pushforward(product_map(h1, h2, b2), src, tgt)
        if left != right:
            res.fail(f"{h1} x {h2}", left=left, right=right)
    return res


def family_laws(kernels: Mapping[str, Kernel]) -> list[LawResult]:
    """Dirac identity and lift factorisation for each kernel, associativity for each composable triple."""
    ident, assoc = LawResult("dirac identity", 0, []), LawResult("associativity", 0, [])
    fact, uniq = LawResult("lift factorisation", 0, []), LawResult("lift uniqueness", 0, [])
    for name, k in kernels.items():
        ident.checked += 1
        if not compose(dirac(k.source), k) == k == compose(k, dirac(k.target)):
            ident.fail(name, k=k)
        lift = cartesian_lift(k)
        fact.checked += 1
        if compose(lift.kernel, lift.projection) != k:
            fact.fail(name, k=k)
        uniq.checked += 1
        if factorisation_nullity(k) != 0:
            uniq.fail(name, k=k)
    items = list(kernels.items())
    for (n1, k1), (n2, k2), (n3, k3) in product(items, repeat=3):
        if k1.target != k2.source or k2.target != k3.source:
            continue
        assoc.checked += 1
        if compose(compose(k1, k2), k3) != compose(k1, compose(k2, k3)):
            assoc.fail(f"{n1}, {n2}, {n3}", k1=k1, k2=k2, k3=k3)
    return [ident, assoc, fact, uniq]
