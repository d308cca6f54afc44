"""Plain-text reports and the canonical JSON dump used by the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .conservation import Association
from .expr import Expr, VariableContext, from_atom, pretty, to_str
from .pipeline import ReductionStep, ReductionTrace


@dataclass
class CanonicalDump:
    """Labelled expressions, each tied to the context needed to parse it back."""

    contexts: dict[str, VariableContext] = field(default_factory=dict)
    items: list[tuple[str, str, Expr]] = field(default_factory=list)

    def add(self, label: str, ctx_label: str, ctx: VariableContext, e: Expr) -> None:
        self.contexts.setdefault(ctx_label, ctx)
        self.items.append((label, ctx_label, e))

    def to_json(self) -> str:
        doc = {
            "contexts": {k: context_to_dict(c) for k, c in self.contexts.items()},
            "expressions": [{"label": lab, "context": c, "expr": to_str(e)} for lab, c, e in self.items],
        }
        return json.dumps(doc, indent=2)


def context_to_dict(ctx: VariableContext) -> dict:
    return {
        "independents": list(ctx.independents),
        "dependents": list(ctx.dependents),
        "parameters": list(ctx.parameters),
        "functions": list(ctx.functions),
        "depends": {u: list(xs) for u, xs in ctx.depends},
    }


def context_from_dict(d: dict) -> VariableContext:
    return VariableContext(
        independents=tuple(d["independents"]),
        dependents=tuple(d["dependents"]),
        parameters=tuple(d["parameters"]),
        functions=tuple(d["functions"]),
        depends=tuple((u, tuple(xs)) for u, xs in d.get("depends", {}).items()),
    )


def describe_context(ctx: VariableContext) -> str:
    deps = ", ".join(f"{u}({','.join(ctx.args_of(u))})" for u in ctx.dependents)
    return f"independents {' '.join(ctx.independents)}; dependents {deps}"


def association_table(rows: list[Association]) -> list[str]:
    width = max([len(a.generator.name) for a in rows] + [9])
    lines = [f"{'generator':<{width}}  verdict          [T,X] modulo the system"]
    for a in rows:
        xs = a.generator.ctx.independents
        comps = ", ".join(f"{x}: {to_str(c)}" for x, c in zip(xs, a.reduced))
        lines.append(f"{a.generator.name:<{width}}  {a.verdict:<15}  ({comps})")
    return lines


def step_lines(step: ReductionStep) -> list[str]:
    ch = step.change
    X = step.used_generator
    lines = [f"stage {step.stage}: reduce by {X.name} = {X}"]
    lines.append(f"  association: {step.association.verdict}")
    for name, d in ch.new_independents:
        tag = "  (canonical)" if name == ch.canonical else ""
        lines.append(f"  {name} = {to_str(d)}{tag}")
    for name, d in ch.new_dependents:
        lines.append(f"  {name} = {to_str(d)}")
    lines.append(f"  J = {to_str(ch.J)}")
    lines.append(f"  reduced system ({describe_context(step.reduced_system.ctx)}):")
    for eq in step.reduced_system.equations:
        lines.append(f"    {to_str(eq.lhs)} = 0    [solved for {to_str(from_atom(eq.leading))}]")
    lines.append("  transformed conserved vector:")
    for name, c in zip(ch.target.independents, step.full_T.components):
        tag = "  (dropped)" if name == ch.canonical else ""
        lines.append(f"    T^{name} = {to_str(c)}{tag}")
    lines.append(f"  D_{ch.canonical} T^{ch.canonical} vanishes: {'yes' if step.canonical_flux_vanishes else 'NO'}")
    lines.append(f"  reduced divergence vanishes: {'yes' if step.divergence.holds else 'NO'}")
    lines.append(f"  row-replacement form agrees: {'yes' if step.rowrep_agrees else 'NO'}")
    lines.append(f"  transformed bracket vanishes: {'yes' if step.bracket_vanishes else 'NO'}")
    if step.inherited:
        lines.append("  inherited generators:")
        for inh in step.inherited:
            if inh.inheritable:
                lines.append(f"    {inh.source.name} -> {inh.projected}   (full: {inh.full})")
            else:
                lines.append(f"    {inh.source.name}: not inheritable ({inh.reason})")
    return lines


def trace_lines(trace: ReductionTrace) -> list[str]:
    lines = []
    for step in trace.steps:
        lines.extend(step_lines(step))
    if trace.complete:
        fi = trace.first_integral
        lines.append("first integral:")
        lines.append(f"  T = {to_str(fi.lhs)} = {fi.constant_name}")
        lines.append(f"  factored: {pretty(fi.lhs)} = {fi.constant_name}")
        lines.append(f"  total derivative vanishes on the final ODE: {'yes' if fi.verified else 'NO'}")
        if trace.definitions:
            lines.append("back-substitution:")
            lines.extend(f"  {n} = {pretty(d)}" for n, d in trace.definitions)
        lines.append(f"order: {trace.original_order} -> {trace.final_order}")
    else:
        lines.append(f"incomplete trace after {len(trace.steps)} step(s): {trace.diagnostic}")
    if trace.diagnostic and trace.complete:
        lines.append(f"warning: {trace.diagnostic}")
    return lines


def dump_trace(trace: ReductionTrace, dump: CanonicalDump) -> None:
    for step in trace.steps:
        ch = step.change
        label = f"stage{step.stage}"
        for name, c in zip(ch.target.independents, step.full_T.components):
            dump.add(f"{label}.T^{name}", label, ch.target, c)
        for k, eq in enumerate(step.reduced_system.equations, 1):
            dump.add(f"{label}.E{k}", label, ch.target, eq.lhs)
        dump.add(f"{label}.J", label, ch.target, ch.J)
    if trace.complete:
        fi = trace.first_integral
        dump.add("first_integral", "final", fi.system.ctx, fi.lhs)
        for n, d in trace.definitions:
            dump.add(f"definition.{n}", "original", trace.system.ctx, d)


__all__ = [
    "CanonicalDump",
    "association_table",
    "context_from_dict",
    "context_to_dict",
    "describe_context",
    "dump_trace",
    "step_lines",
    "trace_lines",
]
