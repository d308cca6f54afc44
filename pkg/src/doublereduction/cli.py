"""Command-line entry point: ``doublereduction <command> PROBLEM [options]``.

Exit status is 0 exactly when every check the command performs passed.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import oracle
from .conservation import association, check_divergence, divergence, reduce_mod_system
from .coordinates import (
    chain_rule_residuals,
    transform_conserved_rowrep,
    transformed_bracket,
    transport_residual,
)
from .expr import to_str, total_derivative
from .pipeline import (
    COMBO,
    STRATEGIES,
    ComboSyntaxError,
    NoAssociatedGenerator,
    NotAssociatedError,
    ReductionStep,
    SelectionStrategy,
    UnknownGeneratorError,
    parse_combo,
    reduce_once,
    run_pipeline,
)
from .problem import Problem, ProblemError, load
from .report import CanonicalDump, association_table, dump_trace, step_lines, trace_lines


def _out(lines) -> None:
    for line in lines:
        print(line)


def _numeric(label: str, verdict: oracle.Verdict) -> tuple[str, bool]:
    if verdict.inconclusive:
        return f"{label}: INCONCLUSIVE (no sample point evaluated)", False
    state = "pass" if verdict.passed else "FAIL"
    return f"{label}: {state} (max |residual| {verdict.max_abs_residual:.3e} over {verdict.evaluated} samples)", verdict.passed


def cmd_check_div(problem: Problem, args) -> int:
    T = problem.conserved
    result = check_divergence(T, args.seed)
    div = reduce_mod_system(divergence(T.components, T.ctx), T.system)
    line, ok_num = _numeric("numeric check", oracle.verify_zero(div, T.ctx, args.samples, args.seed))
    if result.holds:
        how = "identically" if result.trivial else "on solutions"
        print(f"divergence: vanishes {how} (symbolic)")
    else:
        print("divergence: does NOT vanish (symbolic)")
        print(f"residual: {to_str(result.residual)}")
    print(line)
    if args.emit == "canonical":
        dump = CanonicalDump()
        dump.add("residual", "problem", T.ctx, div)
        print(dump.to_json())
    return 0 if result.holds and ok_num else 1


def _requested_generator(problem: Problem, args):
    if args.combo:
        return parse_combo(args.combo, problem.generators)
    if args.gen:
        return problem.generator(args.gen)
    return None


def cmd_check_assoc(problem: Problem, args) -> int:
    T = problem.conserved
    X = _requested_generator(problem, args)
    gens = [X] if X is not None else problem.generators
    if not gens:
        print("no generators declared")
        return 1
    rows = [association(T, g, args.seed) for g in gens]
    _out(association_table(rows))
    ok = True
    for a in rows:
        checks = [oracle.verify_zero(c, T.ctx, args.samples, args.seed) for c in a.reduced]
        confirmed = all(v.passed for v in checks) == a.associated and not any(v.inconclusive for v in checks)
        ok &= confirmed
        if not confirmed:
            print(f"{a.generator.name}: numeric check disagrees with the symbolic verdict")
    if args.emit == "canonical":
        dump = CanonicalDump()
        for a in rows:
            for x, c in zip(T.ctx.independents, a.reduced):
                dump.add(f"{a.generator.name}.bracket^{x}", "problem", T.ctx, c)
        print(dump.to_json())
    if X is not None:
        ok &= rows[0].associated
    return 0 if ok else 1


def cmd_reduce(problem: Problem, args) -> int:
    X = _requested_generator(problem, args)
    if X is None:
        print("reduce needs --gen NAME or --combo EXPR")
        return 2
    change = problem.changes[1].build(problem.ctx) if 1 in problem.changes else None
    step = reduce_once(problem.system, problem.conserved, X, problem.generators, change=change)
    _out(step_lines(step))
    if args.emit == "canonical":
        dump = CanonicalDump()
        ch = step.change
        for name, c in zip(ch.target.independents, step.full_T.components):
            dump.add(f"T^{name}", "stage1", ch.target, c)
        print(dump.to_json())
    return 0 if step.divergence.holds and step.rowrep_agrees and step.bracket_vanishes else 1


def _strategy(problem: Problem, args) -> SelectionStrategy:
    base = problem.strategy or SelectionStrategy()
    kind = args.strategy or (COMBO if args.combo else base.kind)
    combo = args.combo or base.combo
    return SelectionStrategy(kind, combo if kind == COMBO else None, base.injected)


def _pipeline(problem: Problem, args):
    changes = {stage: spec.build for stage, spec in problem.changes.items()}
    return run_pipeline(problem.system, problem.conserved, problem.generators, _strategy(problem, args), changes)


def cmd_pipeline(problem: Problem, args) -> int:
    trace = _pipeline(problem, args)
    _out(trace_lines(trace))
    if args.emit == "canonical":
        dump = CanonicalDump()
        dump_trace(trace, dump)
        print(dump.to_json())
    ok = trace.complete and trace.first_integral.verified and trace.order_drops_by_one
    ok = ok and all(
        s.divergence.holds and s.rowrep_agrees and s.bracket_vanishes and s.canonical_flux_vanishes for s in trace.steps
    )
    return 0 if ok else 1


def _step_checks(step: ReductionStep):
    """(label, expressions that must vanish, their context) for one stage."""
    ch, T = step.change, step.incoming
    yield "transport identity", [transport_residual(T, step.full_T, ch)], ch.target
    rowrep = transform_conserved_rowrep(T, ch, step.full_system)
    yield "row-replacement vs matrix form", [a - b for a, b in zip(step.full_T.components, rowrep.components)], ch.target
    yield "chain rule", chain_rule_residuals(T.components[0], ch), ch.target
    br = transformed_bracket(T, step.used_generator, ch)
    yield "transformed bracket", [reduce_mod_system(c, step.full_system) for c in br], ch.target
    div = divergence(step.reduced_T.components, step.reduced_system.ctx)
    yield "reduced divergence", [reduce_mod_system(div, step.reduced_system)], step.reduced_system.ctx


def cmd_verify(problem: Problem, args) -> int:
    T = problem.conserved
    lines, ok = [], True

    def record(label, exprs, ctx):
        nonlocal ok
        verdict = oracle.verify_all_zero(exprs, ctx, args.samples, args.seed)
        line, passed = _numeric(label, verdict)
        lines.append(line)
        ok &= passed

    div = reduce_mod_system(divergence(T.components, T.ctx), T.system)
    record("divergence of T", [div], T.ctx)
    for g in problem.generators:
        a = association(T, g, args.seed)
        verdict = oracle.verify_all_zero(a.reduced, T.ctx, args.samples, args.seed)
        agrees = verdict.passed == a.associated and not verdict.inconclusive
        ok &= agrees
        lines.append(
            f"association {g.name}: {a.verdict}; numeric {'agrees' if agrees else 'DISAGREES'} "
            f"(max |bracket| {verdict.max_abs_residual:.3e})"
        )
    trace = _pipeline(problem, args)
    for step in trace.steps:
        for label, exprs, ctx in _step_checks(step):
            record(f"stage {step.stage} {label}", exprs, ctx)
    if trace.complete:
        fi = trace.first_integral
        residual = reduce_mod_system(total_derivative(fi.lhs, fi.variable, fi.system.ctx), fi.system)
        record("first integral", [residual], fi.system.ctx)
    else:
        lines.append(f"pipeline incomplete: {trace.diagnostic}")
        ok = False
    _out(lines)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


COMMANDS = {
    "check-div": cmd_check_div,
    "check-assoc": cmd_check_assoc,
    "reduce": cmd_reduce,
    "pipeline": cmd_pipeline,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublereduction",
        description="Conservation laws, associated symmetries and double reduction of PDE systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("problem", help="problem file, or a bundled name such as wave2p1")
        p.add_argument("--samples", type=int, default=20, help="numeric samples per check (default 20)")
        p.add_argument("--seed", type=int, default=0, help="oracle seed (default 0)")
        p.add_argument("--emit", choices=["canonical"], help="also print a canonical JSON dump")
        return p

    common(sub.add_parser("check-div", help="verify that the conserved vector is conserved"))
    for name, help_text in (("check-assoc", "association table"), ("reduce", "one reduction step")):
        p = common(sub.add_parser(name, help=help_text))
        group = p.add_mutually_exclusive_group()
        group.add_argument("--gen", help="generator name")
        group.add_argument("--combo", help='combination such as "X1 + c1*X2 + c2*X3"')
    for name, help_text in (("pipeline", "full double reduction"), ("verify", "numeric verification of every step")):
        p = common(sub.add_parser(name, help=help_text))
        p.add_argument("--strategy", choices=STRATEGIES)
        p.add_argument("--combo", help="stage-1 combination (implies --strategy combo)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.samples < 1:
        print("error: --samples must be at least 1", file=sys.stderr)
        return 2
    try:
        problem = load(args.problem)
        return COMMANDS[args.command](problem, args)
    except (ProblemError, UnknownGeneratorError, ComboSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NotAssociatedError, NoAssociatedGenerator) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
