"""Command line interface: ``staglab solve | generate | verify``.

Exit status: 0 success, 1 numerical invariant violation, 2 input or usage
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import instances
from .diagnostics import analyze_run
from .errors import MatrixMarketError, StaglabError, ZeroRhsError
from .gmres import run_gmres
from .mmio import read_matrix_market, read_rhs, write_matrix_market, write_rhs
from .report import RunConfig, build_report, write_report
from .thresholds import Thresholds
from .verify import builtin_instances, run_suite, sweep_instances

log = logging.getLogger("staglab")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _steps(text):
    if not text:
        return set()
    return {int(t) for t in text.split(",") if t.strip()}


def _generate(kind, args) -> instances.ProblemInstance:
    kind = kind.replace("_", "-")
    if kind == "paper-example":
        return instances.paper_example()
    if kind == "cyclic-shift":
        return instances.cyclic_shift_instance(args.n)
    if kind == "planted":
        return instances.planted_singular_hessenberg(args.n, _steps(args.steps), args.seed)
    if kind == "step-one":
        return instances.step_one_stagnation(args.n, args.seed)
    if kind == "random":
        return instances.random_instance(args.n, args.seed)
    raise InputError(f"unknown generator {kind!r}; choose from {sorted(instances.GENERATORS)}")


def _load_instance_dir(path: Path) -> instances.ProblemInstance:
    A = read_matrix_market(path / "matrix.mtx")
    b = read_rhs(path / "rhs.txt")
    meta = {}
    if (path / "instance.json").exists():
        meta = json.loads((path / "instance.json").read_text())
    expected = meta.get("expected_stagnation_steps")
    return instances.ProblemInstance(
        A, b, meta.get("provenance", {"source": str(path)}),
        None if expected is None else frozenset(expected),
    )


def _rhs(source, n):
    if source == "e1":
        b = np.zeros(n, dtype=complex)
        b[0] = 1
        return b
    if source.startswith("random:"):
        rng = np.random.default_rng(int(source.split(":", 1)[1]))
        return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    b = read_rhs(source)
    if b.shape != (n,):
        raise InputError(f"right-hand side has length {b.shape[0]}, matrix order is {n}")
    return b


def load_source(source, args) -> instances.ProblemInstance:
    """Instance directory, ``.mtx`` file or generator name."""
    path = Path(source)
    if path.is_dir():
        inst = _load_instance_dir(path)
        if args.rhs is not None:
            inst = instances.ProblemInstance(inst.matrix, _rhs(args.rhs, inst.n), inst.provenance, None)
        return inst
    if path.suffix == ".mtx" or path.exists():
        A = read_matrix_market(path)
        if A.shape[0] != A.shape[1]:
            raise InputError(f"matrix must be square, got {A.shape}")
        return instances.ProblemInstance(A, _rhs(args.rhs or "e1", A.shape[0]), {"source": str(path)}, None)
    inst = _generate(source, args)
    if args.rhs is not None:
        inst = instances.ProblemInstance(inst.matrix, _rhs(args.rhs, inst.n), inst.provenance, None)
    return inst


def _thresholds(args):
    return Thresholds.from_env(eps_z=args.eps_z, eps_s=args.eps_s, eps_eig=args.eps_eig)


def cmd_solve(args) -> int:
    thr = _thresholds(args)
    inst = load_source(args.source, args)
    cfg = RunConfig(
        matrix_source=args.source,
        rhs_source=args.rhs or "e1",
        max_iter=args.max_iter,
        conv_tol=args.tol,
        report_path=args.report,
        emit_harmonic=not args.no_harmonic,
        emit_vectors=args.emit_vectors,
        thresholds=thr,
    )
    state, _, status = run_gmres(inst.operator(), inst.rhs, max_iter=cfg.max_iter, rtol=cfg.conv_tol)
    analysis = analyze_run(state, thr)
    report = build_report(cfg, state, analysis, status, inst.provenance)
    if args.report:
        write_report(report, args.report, args.format)
    print(f"{'m':>4} {'resnorm':>22} {'stagnated':>9} {'consistent':>10}")
    for it in report["iterations"]:
        print(f"{it['m']:>4} {it['resnorm']:>22.15e} {it['stagnated']!s:>9} {it['predicates_consistent']!s:>10}")
    print(f"status: {status}")
    bad = [it["m"] for it in report["iterations"] if it["applicable"] and not it["predicates_consistent"]]
    if bad:
        log.error("stagnation indicators disagree at steps %s", bad)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_generate(args) -> int:
    inst = _generate(args.kind, args)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_market(out / "matrix.mtx", inst.matrix, comment=json.dumps(inst.provenance))
    write_rhs(out / "rhs.txt", inst.rhs)
    meta = {
        "provenance": inst.provenance,
        "expected_stagnation_steps": None if inst.expected_stagnation_steps is None
        else sorted(inst.expected_stagnation_steps),
    }
    (out / "instance.json").write_text(json.dumps(meta, indent=1) + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    thr = _thresholds(args)
    insts = []
    for src in args.instance or []:
        insts.append(load_source(src, args))
    if args.seed_sweep:
        insts.extend(sweep_instances(args.seed_sweep, args.n))
    if not insts or args.builtin:
        insts.extend(builtin_instances())
    results = run_suite(insts, thr, jobs=args.jobs)
    failed = 0
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{status} {r.name}: {r.checks} checks")
        for msg in r.failures:
            print(f"    {msg}")
        failed += not r.ok
    print(f"{len(results) - failed}/{len(results)} instances passed")
    return EXIT_VIOLATION if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="staglab", description="GMRES stagnation and harmonic Ritz diagnostics")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--n", type=int, default=10, help="problem size for generators")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--steps", default="", help="planted stagnation steps, comma separated")
        sp.add_argument("--rhs", default=None, help="'e1', 'random:<seed>' or a file of 're im' lines")
        sp.add_argument("--eps-z", type=float, default=None)
        sp.add_argument("--eps-s", type=float, default=None)
        sp.add_argument("--eps-eig", type=float, default=None)

    s = sub.add_parser("solve", help="run instrumented GMRES and write a report")
    s.add_argument("source", help="instance directory, .mtx file or generator name")
    s.add_argument("--max-iter", type=int, default=None)
    s.add_argument("--tol", type=float, default=1e-10, help="relative convergence tolerance")
    s.add_argument("--report", default=None)
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.add_argument("--no-harmonic", action="store_true")
    s.add_argument("--emit-vectors", action="store_true")
    common(s)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("generate", help="write a generated instance to a directory")
    g.add_argument("kind", help=f"one of {sorted(instances.GENERATORS)}")
    g.add_argument("-o", "--output", required=True)
    common(g)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="run all theorem checks; exit 1 on any failure")
    v.add_argument("--instance", action="append", help="instance directory, .mtx file or generator name")
    v.add_argument("--seed-sweep", type=int, default=0, help="number of random instances")
    v.add_argument("--builtin", action="store_true", help="also run the built-in stagnation instances")
    v.add_argument("--jobs", type=int, default=1)
    common(v)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "max_iter", None) is not None and args.max_iter < 1:
        parser.error("--max-iter must be >= 1")
    try:
        return args.func(args)
    except (InputError, MatrixMarketError, ZeroRhsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StaglabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
