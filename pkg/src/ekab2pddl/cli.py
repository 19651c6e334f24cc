"""Command-line entry point.

Exit codes: 0 success, 1 domain error (bad input, failed check), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import ecq as Q
from .sexp import SExpError

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class DomainFailure(Exception):
    """A check ran but came out negative (exit code 1)."""


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_task(path: str, ontology: str | None):
    from .ekab import load_task, parse_task
    from .ontology import parse_ontology
    if ontology is None:
        return load_task(path)
    return parse_task(_read(path), os.path.dirname(os.path.abspath(path)),
                      tbox=parse_ontology(_read(ontology)))


# -- subcommands ----------------------------------------------------------------------------


def cmd_compile(args) -> int:
    from .compiler import compile_task, validate_compilation
    from .pddl import emit_pddl

    task = _load_task(args.task, args.ontology)
    task.validate()
    out = compile_task(task, tseitin=args.tseitin, strict_copy_rules=args.strict_copy_rules)
    domain, problem = emit_pddl(out.task)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, text in (("domain.pddl", domain), ("problem.pddl", problem)):
        with open(os.path.join(args.out_dir, name), "w") as fh:
            fh.write(text)
    report = {k: out.report[k] for k in ("rules", "max_arity", "strata", "compile_ms")}
    agree = True
    if args.validate_depth is not None:
        v = validate_compilation(out, args.validate_depth)
        report["validation"] = {"depth": v.depth, "agree": v.agree}
        agree = v.agree
        if not agree:
            print(f"validation failed: {v.message}", file=sys.stderr)
    with open(os.path.join(args.out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if agree else EXIT_DOMAIN


def cmd_rewrite(args) -> int:
    from .ontology import parse_ontology
    from .rewriter import RewritingSet, exponential_oracle

    tbox = parse_ontology(_read(args.ontology))
    q = Q.parse_ucq(_read(args.query))
    if args.oracle == "chase":
        raise argparse.ArgumentTypeError("the chase oracle yields answers, not a program; "
                                         "use `answer --oracle chase`")
    prog = exponential_oracle(tbox, q) if args.oracle == "exp" else RewritingSet(tbox, [q]).program
    if args.emit == "stats":
        print(json.dumps({"rules": len(prog.rules), "max_arity": prog.max_arity(),
                          "predicates": len(prog.arities)}, sort_keys=True))
    else:
        sys.stdout.write(prog.text())
    return EXIT_OK


def cmd_answer(args) -> int:
    from .ontology import parse_ontology, parse_state
    from .rewriter import INCONCLUSIVE, oracle_answers, restricted_chase_oracle

    tbox = parse_ontology(_read(args.ontology))
    state = parse_state(_read(args.state))
    text = _read(args.query)
    if args.oracle == "poly":
        q = Q.parse_ecq(text)
        order = Q.free_vars(q)
        rows = Q.eval_ecq(state, tbox, q, order=order)
    else:
        u = Q.parse_ucq(text)
        if args.oracle == "exp":
            rows = oracle_answers(tbox, state, u)
        else:
            rows = restricted_chase_oracle(tbox, state, u, args.depth)
            if rows == INCONCLUSIVE:
                print(INCONCLUSIVE)
                return EXIT_OK
    for t in sorted(rows):
        print(" ".join(t) if t else "true")
    return EXIT_OK


def _read_plan(path: str) -> list[tuple[str, tuple]]:
    steps = []
    for raw in _read(path).splitlines():
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        parts = line.strip("()").split()
        steps.append((parts[0], tuple(parts[1:])))
    return steps


def cmd_plan(args) -> int:
    from .ekab import bfs_plan, ground, plan_valid
    from .pddl import parse_pddl, pddl_bfs_plan, pddl_ground, pddl_plan_valid

    if args.pddl:
        task = parse_pddl(_read(args.pddl[0]), _read(args.pddl[1]))
        if args.search is not None:
            plan = pddl_bfs_plan(task, args.search)
        else:
            plan = [pddl_ground(task, n, a) for n, a in _read_plan(args.plan)]
            ok = pddl_plan_valid(task, plan)
    else:
        task = _load_task(args.task, args.ontology)
        task.validate()
        if args.search is not None:
            plan = bfs_plan(task, args.search)
        else:
            acts = {a.name: a for a in task.actions}
            plan = []
            for n, a in _read_plan(args.plan):
                if n not in acts:
                    raise ValueError(f"unknown action {n}")
                plan.append(ground(acts[n], a))
            ok = plan_valid(task, plan)
    if args.search is not None:
        if plan is None:
            print(f"no plan of length <= {args.search}")
            return EXIT_DOMAIN
        for g in plan:
            print(g)
        return EXIT_OK
    print("valid" if ok else "invalid")
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_validate(args) -> int:
    from .compiler import compile_task, validate_compilation

    task = _load_task(args.task, args.ontology)
    task.validate()
    out = compile_task(task, tseitin=args.tseitin)
    v = validate_compilation(out, args.depth)
    print(json.dumps(v.as_dict(), indent=2))
    return EXIT_OK if v.agree else EXIT_DOMAIN


def cmd_bench_gen(args) -> int:
    from .bench import BenchSpec
    from .ekab import write_task

    spec = BenchSpec(args.family, n=args.n, m=args.m, k=args.k, seed=args.seed)
    task = spec.build()
    path = write_task(task, args.out_dir, spec.label.replace("-", "_"))
    print(path)
    return EXIT_OK


def cmd_dump_model(args) -> int:
    from .datalog import dump_model, evaluate, parse_facts, parse_program

    prog = parse_program(_read(args.program))
    facts = parse_facts(_read(args.facts)) if args.facts else []
    sys.stdout.write(dump_model(evaluate(prog, facts)))
    return EXIT_OK


def cmd_scale_report(args) -> int:
    from .report import scale_report

    sizes = range(args.min_size, args.max_size + 1)
    csv_path, png_path, rows = scale_report(args.out_dir, sizes)
    bad = [r.axioms for r in rows if r.rules != r.predicted_rules]
    print(csv_path)
    print(png_path)
    if bad:
        print(f"rule count differs from the closed form at sizes {bad}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ekab2pddl", description=(
        "Compile planning tasks over Horn description-logic ontologies into PDDL "
        "with derived predicates."))
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile an eKAB task to PDDL")
    c.add_argument("task")
    c.add_argument("--ontology", help="ontology file (default: the one named in the task)")
    c.add_argument("--tseitin", action="store_true", help="name complex conditions")
    c.add_argument("--strict-copy-rules", action="store_true",
                   help="copy rules for every state predicate")
    c.add_argument("--out-dir", default=".")
    c.add_argument("--validate-depth", type=int, metavar="N")
    c.set_defaults(func=cmd_compile)

    r = sub.add_parser("rewrite", help="rewrite a UCQ over an ontology into Datalog")
    r.add_argument("ontology")
    r.add_argument("query")
    r.add_argument("--oracle", choices=("poly", "exp", "chase"), default="poly")
    r.add_argument("--emit", choices=("datalog", "stats"), default="datalog")
    r.set_defaults(func=cmd_rewrite)

    a = sub.add_parser("answer", help="certain answers of a query over a state")
    a.add_argument("ontology")
    a.add_argument("state", help="one fact per line, e.g. C(a)")
    a.add_argument("query")
    a.add_argument("--oracle", choices=("poly", "exp", "chase"), default="poly")
    a.add_argument("--depth", type=int, default=4, help="chase depth")
    a.set_defaults(func=cmd_answer)

    pl = sub.add_parser("plan", help="check a plan file or search for a plan")
    pl.add_argument("task", nargs="?")
    pl.add_argument("plan", nargs="?", help="one ground action per line")
    pl.add_argument("--ontology")
    pl.add_argument("--pddl", nargs=2, metavar=("DOMAIN", "PROBLEM"),
                    help="check against a PDDL task instead")
    pl.add_argument("--search", type=int, metavar="DEPTH", help="breadth-first search")
    pl.set_defaults(func=cmd_plan)

    v = sub.add_parser("validate", help="dual bounded search on task and compilation")
    v.add_argument("task")
    v.add_argument("--ontology")
    v.add_argument("--depth", type=int, default=4)
    v.add_argument("--tseitin", action="store_true")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bench-gen", help="write a benchmark task and its ontology")
    b.add_argument("family", choices=("robot", "robotconj", "queens", "cats"))
    b.add_argument("--n", type=int, default=3)
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--k", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out-dir", default=".")
    b.set_defaults(func=cmd_bench_gen)

    d = sub.add_parser("dump-model", help="evaluate a Datalog program, print sorted facts")
    d.add_argument("program")
    d.add_argument("facts", nargs="?")
    d.set_defaults(func=cmd_dump_model)

    s = sub.add_parser("scale-report", help="rule counts and arities over growing TBoxes")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--min-size", type=int, default=2)
    s.add_argument("--max-size", type=int, default=30)
    s.set_defaults(func=cmd_scale_report)
    return p


def _check_usage(parser, args) -> None:
    if args.command == "plan":
        if args.pddl is None and args.task is None:
            parser.error("plan needs a task or --pddl DOMAIN PROBLEM")
        if args.search is None:
            need = args.task if args.pddl else args.plan
            if need is None:
                parser.error("plan needs a plan file unless --search is given")
            if args.pddl:
                args.plan = args.task
    for name in ("validate_depth", "depth", "search"):
        val = getattr(args, name, None)
        if val is not None and val < 0:
            parser.error(f"--{name.replace('_', '-')} must be non-negative")
    if args.command == "scale-report" and not 1 <= args.min_size <= args.max_size:
        parser.error("need 1 <= --min-size <= --max-size")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _check_usage(parser, args)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, SExpError, OSError, RuntimeError, DomainFailure) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
