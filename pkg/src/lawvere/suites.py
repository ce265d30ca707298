"""Law suites over parsed inputs, with deterministic machine-readable reports.

A suite expands its inputs into instances, runs each, and records one status
per (instance, law).  Failures carry witnesses written in the input formats,
so feeding a witness back through ``textio.parse`` and the same suite
reproduces the failure.  The JSON-lines report leaves out timing: the same
inputs and seed give the same bytes.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import textio as tx
from .dayconv import MonoidalFinCategory, check_monoidal, day_laws
from .fibered import (
    LinearBundle,
    SetMap,
    Square,
    alpha_beta,
    beta_alpha,
    canonical_cospans,
    canonical_projection_instances,
    check_beck_chevalley,
    check_projection_formula,
    fiber,
    linton_to_lawvere,
    product_linton,
)
from .fincat.core import Presheaf, constant_presheaf, representable
from .kernels import KernelError, LawResult, family_laws, lift_laws, random_associativity
from .models import adjunction_check, free_model, representable_comparison
from .site import NotConverged
from .theory import TheoryPresentation, validate_theory

PASS, FAIL, NOT_CONVERGED = "pass", "fail", "not-converged"
EXIT_CODES = {PASS: 0, FAIL: 1, NOT_CONVERGED: 2}
MAX_WITNESSES = 5


class SuiteInputError(ValueError):
    """Unknown suite or an input of the wrong kind."""


@dataclass
class LawStatus:
    instance: str
    law: str
    status: str
    checked: int = 1
    witnesses: list[dict[str, str]] = field(default_factory=list)

    def record(self) -> dict:
        return {"instance": self.instance, "law": self.law, "status": self.status,
                "checked": self.checked, "witnesses": self.witnesses}


@dataclass
class SuiteReport:
    suite: str
    seed: int
    bounds: dict
    laws: list[LawStatus]
    timing: float = 0.0

    @property
    def status(self) -> str:
        got = {law.status for law in self.laws}
        if FAIL in got:
            return FAIL
        return NOT_CONVERGED if NOT_CONVERGED in got else PASS

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def sorted_laws(self) -> list[LawStatus]:
        return sorted(self.laws, key=lambda s: (s.instance, s.law))

    def jsonl(self) -> str:
        head = {"suite": self.suite, "seed": self.seed, "bounds": self.bounds,
                "status": self.status, "laws": len(self.laws)}
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(s.record(), sort_keys=True) for s in self.sorted_laws()]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        out = [f"suite {self.suite}  seed {self.seed}  bounds {json.dumps(self.bounds, sort_keys=True)}"]
        for s in self.sorted_laws():
            out.append(f"  {s.status.upper():13} {s.instance}: {s.law} ({s.checked} checked)")
            for w in s.witnesses:
                for role, body in w.items():
                    out.append(f"    [{role}]")
                    out += [f"      {ln}" for ln in body.rstrip("\n").splitlines()]
        n = {k: sum(s.status == k for s in self.laws) for k in (PASS, FAIL, NOT_CONVERGED)}
        out.append(f"{self.status.upper()}: {n[PASS]} pass, {n[FAIL]} fail, "
                   f"{n[NOT_CONVERGED]} not converged in {self.timing:.2f}s")
        return "\n".join(out) + "\n"


Inputs = Sequence[tuple[str, object]]


def _expect(inputs: Inputs, kind: type, what: str) -> None:
    for label, obj in inputs:
        if not isinstance(obj, kind):
            raise SuiteInputError(f"{label}: expected {what}, got {type(obj).__name__}")


def _status(ok: bool) -> str:
    return PASS if ok else FAIL


# ------------------------------------------------------------------ kernels


def _from_law(instance: str, r: LawResult) -> LawStatus:
    ws = [{"detail": d, "kernels": tx.dump(tx.kernel_file(w))}
          for d, w in zip(r.failures, r.witnesses)][:MAX_WITNESSES]
    return LawStatus(instance, r.law, _status(r.ok), r.checked, ws)


def kern_laws(inputs: Inputs, rng: random.Random, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, tx.KernelFile, "a kernel file")
    out = []
    for label, kf in inputs:
        built = {}
        for name in kf.kernels:
            try:
                built[name] = kf.kernel(name)
            except (KernelError, tx.ParseError) as e:
                alone = tx.KernelFile(kf.spaces, kf.over, kf.funs, {name: kf.kernels[name]})
                out.append(LawStatus(f"{label}:{name}", "support condition", FAIL, 1,
                                     [{"detail": str(e), "kernels": tx.dump(alone)}]))
            else:
                out.append(LawStatus(f"{label}:{name}", "support condition", PASS))
        out += [_from_law(label, r) for r in family_laws(built)]
    if trials > 0:
        out += [_from_law("random", r) for r in random_associativity(rng, trials)]
        out += [_from_law("random", r) for r in lift_laws(rng, max(1, trials // 5))]
    return out


# ------------------------------------------------------------------ bundles


def _points(prefix: str, n: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(n)]


def _fib_file(sets: dict[str, int], funs: dict[str, tuple[str, str, SetMap]],
              bundles: dict[str, tuple[str, LinearBundle]]) -> str:
    ff = tx.FibFile()
    for name, n in sets.items():
        ff.sets[name] = _points(name.lower(), n)
    ff.funs.update(funs)
    ff.bundles.update(bundles)
    if bundles:
        ff.K = next(iter(bundles.values()))[1].K
    return tx.dump(ff)


def square_witness(X: SetMap, Y: SetMap, v: LinearBundle) -> str:
    return _fib_file({"A": X.domain, "B": Y.domain, "C": X.codomain},
                     {"X": ("A", "C", X), "Y": ("B", "C", Y)}, {"V": ("B", v)})


def projection_witness(phi: SetMap, tp: LinearBundle, t: LinearBundle) -> str:
    return _fib_file({"P": phi.domain, "Q": phi.codomain}, {"phi": ("P", "Q", phi)},
                     {"Tq": ("Q", tp), "T": ("P", t)})


def _sweep(instance: str, law: str, items, check, witness) -> LawStatus:
    s = LawStatus(instance, law, PASS, 0)
    for item in items:
        s.checked += 1
        verdict = check(*item)
        if not verdict.is_iso:
            s.status = FAIL
            if len(s.witnesses) < MAX_WITNESSES:
                s.witnesses.append({"detail": verdict.failure or "not an isomorphism", "bundles": witness(*item)})
    return s


def _file_squares(ff: tx.FibFile):
    for xn, (a, c, X) in ff.funs.items():
        for yn, (b, c2, Y) in ff.funs.items():
            if c != c2:
                continue
            for vn, (base, v) in ff.bundles.items():
                if base == b:
                    yield f"{xn},{yn},{vn}", X, Y, v


def fib_beck_chevalley(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, tx.FibFile, "a bundle file")
    if inputs:
        out = []
        for label, ff in inputs:
            for name, X, Y, v in _file_squares(ff):
                out.append(_sweep(f"{label}:{name}", "beck-chevalley", [(X, Y, v)],
                                  lambda X, Y, v: check_beck_chevalley(Square.pullback(X, Y), v), square_witness))
        return out
    size, dim = bounds["size"], bounds["dim"]
    return [_sweep(f"canonical<={size}", "beck-chevalley", _canonical_squares(size, dim),
                   lambda X, Y, v: check_beck_chevalley(Square.pullback(X, Y), v), square_witness)]


def _canonical_squares(size: int, dim: int):
    """Each canonical cospan with the bundles ``b -> (b + s) mod (dim + 1)``.

    The comparison is block diagonal over the points of the apex, each block
    depending on one fiber only, so these shifts exercise every fiber
    dimension at every point.
    """
    for X, Y in canonical_cospans(size):
        for s in range(dim + 1):
            yield X, Y, LinearBundle(tuple((b + s) % (dim + 1) for b in range(Y.domain)))


def fib_projection(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, tx.FibFile, "a bundle file")
    if inputs:
        out = []
        for label, ff in inputs:
            for pn, (p, q, phi) in ff.funs.items():
                for an, (qa, tp) in ff.bundles.items():
                    for bn, (pb, t) in ff.bundles.items():
                        if qa == q and pb == p:
                            out.append(_sweep(f"{label}:{pn},{an},{bn}", "projection formula",
                                              [(phi, tp, t)], check_projection_formula, projection_witness))
        return out
    size, dim = bounds["size"], bounds["dim"]
    return [_sweep(f"canonical<={size},dim<={dim}", "projection formula",
                   canonical_projection_instances(size, dim), check_projection_formula, projection_witness)]


# ------------------------------------------------------------ alpha / beta


def linton_instances(t: TheoryPresentation, size: int, bound: int = 8) -> list[tuple[str, Presheaf]]:
    """Representables on the fiber over ``size`` and products of free models on representables."""
    f = fiber(t, size)
    out = [(f"y{T}", representable(f.category, f.obj(T))) for T in f.objects]
    sc = t.site.category
    frees = [free_model(representable(sc, n), t, bound=bound).model.presheaf for n in range(t.n + 1)]
    for idx in _tuples(len(frees), size):
        out.append((f"F{idx}", product_linton(t, [frees[i] for i in idx])))
    return out


def _tuples(n: int, k: int):
    if k == 0:
        yield ()
        return
    for first in range(n):
        for rest in _tuples(n, k - 1):
            yield (first,) + rest


def fib_alpha_beta(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, TheoryPresentation, "a theory file")
    J = bounds["base"]
    sizes = tuple(range(J + 1))
    out = []
    for label, t in inputs:
        try:
            instances = linton_instances(t, J, bounds["bound"])
        except NotConverged as e:
            out.append(LawStatus(label, "free models", NOT_CONVERGED, 1,
                                 [{"detail": str(e), "theory": tx.dump(t)}]))
            continue
        for name, p in instances:
            inst = f"{label}:{name}"
            w = {"theory": tx.dump(t), "presheaf": tx.dump(p)}
            try:
                ab = alpha_beta(p, t, sizes)
                ba = beta_alpha(linton_to_lawvere(p, t, sizes))
            except ValueError as e:
                out.append(LawStatus(inst, "round trip", FAIL, 1, [{"detail": str(e), **w}]))
                continue
            out.append(LawStatus(inst, "alpha beta = id", _status(ab.ok), len(ab.isos), [] if ab.ok else [w]))
            out.append(LawStatus(inst, "beta alpha = id", _status(ba.ok), len(ba.isos), [] if ba.ok else [w]))
    return out


# ------------------------------------------------------------ day, theories


def day_suite(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, MonoidalFinCategory, "a monoidal category")
    out = []
    for label, m in inputs:
        cat = m.base
        bad = check_monoidal(m)
        out.append(LawStatus(label, "monoidal structure", _status(not bad), 1,
                             [{"detail": f"{v.kind}: {v.detail} at {v.witness}"} for v in bad[:MAX_WITNESSES]]))
        ps = [representable(cat, c) for c in range(cat.n_objects)] + [constant_presheaf(cat, "ab")]
        found = day_laws(m, ps)
        for law in ("yoneda", "unit", "symmetry", "associativity"):
            hits = [v for v in found if v.kind == law]
            ws = [{"detail": f"{v.detail} at {v.witness}",
                   **{f"presheaf{i}": tx.dump(ps[i]) for i in v.witness if law != "yoneda"}}
                  for v in hits[:MAX_WITNESSES]]
            out.append(LawStatus(label, law, _status(not hits), 1, ws))
    return out


def theory_validate(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, TheoryPresentation, "a theory file")
    out = []
    for label, t in inputs:
        bad = validate_theory(t)
        ws = [{"detail": f"{v.kind}: {v.detail} at {v.witness}", "theory": tx.dump(t)} for v in bad[:MAX_WITNESSES]]
        out.append(LawStatus(label, "theory axioms", _status(not bad), 1, ws))
    return out


def theory_adjunction(inputs: Inputs, rng, bounds: dict, trials: int) -> list[LawStatus]:
    _expect(inputs, TheoryPresentation, "a theory file")
    out = []
    for label, t in inputs:
        sc = t.site.category
        try:
            frees = [free_model(representable(sc, n), t, bound=bounds["bound"]) for n in range(t.n + 1)]
        except NotConverged as e:
            out.append(LawStatus(label, "free models", NOT_CONVERGED, 1, [{"detail": str(e), "theory": tx.dump(t)}]))
            continue
        for n, free in enumerate(frees):
            iso = representable_comparison(t, n, free)
            out.append(LawStatus(f"{label}:y{n}", "F y = y tau", _status(iso is not None), 1,
                                 [] if iso is not None else [{"theory": tx.dump(t)}]))
            for k, target in enumerate(frees):
                rep = adjunction_check(free.unit.source, target.model, free)
                w = {"theory": tx.dump(t), "sheaf": tx.dump(free.unit.source), "model": f"free on y({k})"}
                out.append(LawStatus(f"{label}:y{n}->Fy{k}", "adjunction bijection", _status(rep.ok),
                                     rep.model_homs, [] if rep.ok else [w]))
    return out


SUITES: dict[str, Callable[..., list[LawStatus]]] = {
    "kern-laws": kern_laws,
    "fib-beck-chevalley": fib_beck_chevalley,
    "fib-projection": fib_projection,
    "fib-alpha-beta": fib_alpha_beta,
    "day-laws": day_suite,
    "theory-validate": theory_validate,
    "theory-adjunction": theory_adjunction,
}

DEFAULT_BOUNDS = {"bound": 8, "size": 4, "dim": 3, "base": 2}


def run_suite(name: str, inputs: Inputs, seed: int = 0, bounds: dict | None = None, trials: int = 1000) -> SuiteReport:
    """Run the named suite; the report is a pure function of (name, inputs, seed, bounds, trials)."""
    if name not in SUITES:
        raise SuiteInputError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    b = {**DEFAULT_BOUNDS, **(bounds or {})}
    if name == "kern-laws":
        b["trials"] = trials
    start = time.perf_counter()
    laws = SUITES[name](list(inputs), random.Random(seed), b, trials)
    return SuiteReport(name, seed, b, laws, time.perf_counter() - start)
