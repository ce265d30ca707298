"""Command line entry point: ``lawvere <group> <verb> [files] [options]``.

Exit codes: 0 every law passed, 1 a law failed, 2 a construction did not
converge within its bound, 3 the input could not be read or understood.
``LAWVERE_SEED`` and ``LAWVERE_BOUND`` override the seed and bound defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import Sequence

from . import linalg as la
from . import textio as tx
from .algebra import free_algebra
from .dayconv import MONOIDAL_FIXTURES, commutative_theory, day_hom, day_tensor, model_tensor
from .fincat.core import Presheaf, representable
from .kernels import KernelError, cartesian_lift, compose, tensor_kernels
from .models import free_model
from .site import NotConverged
from .suites import SuiteInputError, run_suite

EXIT_PASS, EXIT_FAIL, EXIT_NOT_CONVERGED, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{name}={raw!r} is not an integer") from None


def _load(path: str, kind: str | None = None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    try:
        return tx.parse(text, kind)
    except tx.ParseError as e:
        raise InputError(f"{path}: {e}") from None


def _field(spec: str | None):
    if spec is None:
        return None
    if spec in ("rat", "QQ"):
        return la.QQ
    try:
        return la.field(int(spec))
    except ValueError as e:
        raise InputError(f"--field {spec}: {e}") from None


def _with_field(ff: tx.FibFile, K) -> tx.FibFile:
    if K is None:
        return ff
    bundles = {n: (b, replace(v, K=K)) for n, (b, v) in ff.bundles.items()}
    return replace(ff, K=K, bundles=bundles, maps={})


def _monoidal(name: str):
    if name not in MONOIDAL_FIXTURES:
        raise InputError(f"unknown monoidal fixture {name!r}; choose from {', '.join(sorted(MONOIDAL_FIXTURES))}")
    return MONOIDAL_FIXTURES[name]()


def _rebase(p: Presheaf, cat, path: str) -> Presheaf:
    """Move a parsed presheaf onto ``cat``, whose canonical text must match the file's category."""
    if tx.dump_category(p.category, header=False) != tx.dump_category(cat, header=False):
        raise InputError(f"{path}: presheaf is not over the category of the chosen fixture")
    return Presheaf(cat, p.sizes, p.actions, p.labels)


def _emit(args, text: str, record: dict, code: int = EXIT_PASS) -> int:
    if args.format == "jsonl":
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    return code


def _report(args, report) -> int:
    sys.stdout.write(report.jsonl() if args.format == "jsonl" else report.text())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.jsonl())
    return report.exit_code


def _suite(args, name: str, inputs, **kw) -> int:
    bounds = {"bound": args.bound}
    for key in ("size", "dim", "base"):
        if getattr(args, key, None) is not None:
            bounds[key] = getattr(args, key)
    return _report(args, run_suite(name, inputs, seed=args.seed, bounds=bounds, **kw))


# ------------------------------------------------------------------ verbs


def theory_validate(args) -> int:
    return _suite(args, "theory-validate", [(p, _load(p, "theory")) for p in args.files])


def theory_adjunction(args) -> int:
    return _suite(args, "theory-adjunction", [(p, _load(p, "theory")) for p in args.files])


def theory_free(args) -> int:
    t = _load(args.file, "theory")
    if args.generators < 0:
        raise InputError("--generators must be non-negative")
    try:
        alg = free_algebra(t, args.generators, bound=args.bound).algebra
    except NotConverged as e:
        e.instance = tx.dump(t) + f"# generators {args.generators}\n"
        raise
    text = f"free model on {args.generators} generators: carrier size {alg.size}\n"
    if args.show:
        text += tx.dump(alg.forget_presheaf())
    return _emit(args, text, {"generators": args.generators, "size": alg.size})


def theory_tensor_models(args) -> int:
    t = _load(args.file, "theory")
    ct = commutative_theory(t)
    sc = t.site.category
    a, b = (free_model(representable(sc, n), t, bound=args.bound).model for n in (args.left, args.right))
    res = model_tensor(a, b, ct, route=args.route, bound=args.bound)
    record = {"route": args.route, "left": a.size, "right": b.size, "size": res.model.size}
    text = f"{args.route}: F(y{args.left}) (x) F(y{args.right}) has carrier size {res.model.size}\n"
    code = EXIT_PASS
    if args.route == "both":
        agree = res.iso is not None
        record.update(other_size=res.other.model.size, agree=agree)
        text += f"congruence route: size {res.other.model.size}; routes {'agree' if agree else 'DISAGREE'}\n"
        code = EXIT_PASS if agree else EXIT_FAIL
    return _emit(args, text, record, code)


def _day_inputs(args):
    m = _monoidal(args.monoidal)
    p, q = (_rebase(_load(path, "presheaf"), m.base, path) for path in (args.left, args.right))
    return m, p, q


def day_tensor_cmd(args) -> int:
    m, p, q = _day_inputs(args)
    d = day_tensor(p, q, m).presheaf
    return _emit(args, tx.dump(d), {"sizes": list(d.sizes)})


def day_hom_cmd(args) -> int:
    m, p, q = _day_inputs(args)
    try:
        h = day_hom(p, q, m).presheaf
    except ValueError as e:
        raise InputError(str(e)) from None
    return _emit(args, tx.dump(h), {"sizes": list(h.sizes)})


def day_laws_cmd(args) -> int:
    names = args.monoidal or sorted(MONOIDAL_FIXTURES)
    return _suite(args, "day-laws", [(n, _monoidal(n)) for n in names])


def fib_bc(args) -> int:
    K = _field(args.field)
    return _suite(args, "fib-beck-chevalley", [(p, _with_field(_load(p, "bundles"), K)) for p in args.files])


def fib_projection(args) -> int:
    K = _field(args.field)
    return _suite(args, "fib-projection", [(p, _with_field(_load(p, "bundles"), K)) for p in args.files])


def fib_alpha_beta(args) -> int:
    return _suite(args, "fib-alpha-beta", [(p, _load(p, "theory")) for p in args.files])


def _kernel(kf: tx.KernelFile, name: str):
    if name not in kf.kernels:
        raise InputError(f"no kernel named {name!r}")
    return kf.kernel(name)


def kern_compose(args) -> int:
    kf = _load(args.file, "kernels")
    k = compose(_kernel(kf, args.first), _kernel(kf, args.second))
    return _emit(args, tx.dump(tx.kernel_file({args.name: k})), {"norm": str(k.norm), "stochastic": k.is_stochastic()})


def kern_lift(args) -> int:
    kf = _load(args.file, "kernels")
    lift = cartesian_lift(_kernel(kf, args.kernel))
    out = tx.kernel_file({"lift": lift.kernel, "proj": lift.projection})
    return _emit(args, tx.dump(out), {"points": lift.kernel.target.size})


def kern_tensor(args) -> int:
    kf = _load(args.file, "kernels")
    k = tensor_kernels(_kernel(kf, args.first), _kernel(kf, args.second))
    return _emit(args, tx.dump(tx.kernel_file({args.name: k})), {"norm": str(k.norm)})


def kern_laws(args) -> int:
    return _suite(args, "kern-laws", [(p, _load(p, "kernels")) for p in args.files], trials=args.trials)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $LAWVERE_SEED or 0)")
    common.add_argument("--bound", type=int, default=None, help="iteration bound (default: $LAWVERE_BOUND or 8)")
    common.add_argument("--field", default=None, help="prime q or 'rat' for bundle files")
    common.add_argument("--trials", type=int, default=1000, help="random trials for kernel laws")
    common.add_argument("--format", choices=("text", "jsonl"), default="text")
    common.add_argument("--report", default=None, help="also write the JSON-lines report here")

    parser = argparse.ArgumentParser(prog="lawvere", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    def verb(group, name, fn, help):
        p = group.add_parser(name, parents=[common], help=help)
        p.set_defaults(fn=fn)
        return p

    th = groups.add_parser("theory", help="theory presentations").add_subparsers(dest="verb", required=True)
    verb(th, "validate", theory_validate, "check the theory axioms").add_argument("files", nargs="+")
    verb(th, "adjunction-check", theory_adjunction, "free/forget bijections on representables").add_argument("files", nargs="+")
    p = verb(th, "free", theory_free, "free model on n generators")
    p.add_argument("file")
    p.add_argument("--generators", type=int, required=True)
    p.add_argument("--show", action="store_true", help="print the model presheaf")
    p = verb(th, "tensor-models", theory_tensor_models, "tensor of the free models on y(left), y(right)")
    p.add_argument("file")
    p.add_argument("--left", type=int, default=1)
    p.add_argument("--right", type=int, default=1)
    p.add_argument("--route", choices=("day", "congruence", "both"), default="both")

    day = groups.add_parser("day", help="Day convolution").add_subparsers(dest="verb", required=True)
    for name, fn in (("tensor", day_tensor_cmd), ("hom", day_hom_cmd)):
        p = verb(day, name, fn, f"Day {name} of two presheaf files")
        p.add_argument("left")
        p.add_argument("right")
        p.add_argument("--monoidal", required=True, help="fixture name")
    verb(day, "laws", day_laws_cmd, "unit, associativity, symmetry, Yoneda").add_argument(
        "--monoidal", action="append", help="fixture name (repeatable; default all)")

    fib = groups.add_parser("fib", help="bundles over finite sets").add_subparsers(dest="verb", required=True)
    for name, fn in (("beck-chevalley", fib_bc), ("projection", fib_projection)):
        p = verb(fib, name, fn, f"{name} check (canonical sweep when no files are given)")
        p.add_argument("files", nargs="*")
        p.add_argument("--size", type=int, default=None)
        p.add_argument("--dim", type=int, default=None)
    p = verb(fib, "alpha-beta", fib_alpha_beta, "Lawvere/Linton round trips")
    p.add_argument("files", nargs="+")
    p.add_argument("--base", type=int, default=None, help="size of the base object (default 2)")

    kern = groups.add_parser("kern", help="atomic-measure kernels").add_subparsers(dest="verb", required=True)
    for name, fn in (("compose", kern_compose), ("tensor", kern_tensor)):
        p = verb(kern, name, fn, f"{name} two kernels from a file")
        p.add_argument("file")
        p.add_argument("first")
        p.add_argument("second")
        p.add_argument("--name", default=name[:4])
    p = verb(kern, "lift", kern_lift, "cartesian lift of a kernel")
    p.add_argument("file")
    p.add_argument("kernel")
    verb(kern, "laws", kern_laws, "kernel laws on files plus seeded random sweeps").add_argument("files", nargs="*")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.seed is None:
            args.seed = _env_int("LAWVERE_SEED", 0)
        if args.bound is None:
            args.bound = _env_int("LAWVERE_BOUND", 8)
        return args.fn(args)
    except (InputError, SuiteInputError, KernelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NotConverged as e:
        print(f"not converged: {e}", file=sys.stderr)
        sys.stderr.write(getattr(e, "instance", ""))
        return EXIT_NOT_CONVERGED


if __name__ == "__main__":
    sys.exit(main())
