"""Model statistics, minimality lint, pretty printing, and graph export.

Statistics and lint cover the machine's own declarations; imported
library declarations are excluded (they are audited on the library
module itself). The nested-rule count uses this repository's convention:
every update, par, if-then-else and call node counts as one rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

from .errors import NotControlStateShaped
from .syntax import (
    App,
    Binary,
    Call,
    Const,
    Expr,
    If,
    Machine,
    Name,
    Par,
    Rule,
    Skip,
    Unary,
    Update,
    format_value,
)


@dataclass(frozen=True)
class ModelStats:
    n_monitored: int
    n_controlled: int
    n_derived: int
    n_static: int
    n_rule_declarations: int
    n_rules_including_nested: int


@dataclass(frozen=True)
class LintReport:
    unused_declarations: Tuple[str, ...]
    shadowed_names: Tuple[str, ...]


@dataclass(frozen=True)
class GraphDoc:
    mode_location: str
    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str, str], ...]  # (source, target, guard label)
    text: str


def count_rule_nodes(rule: Rule) -> int:
    if isinstance(rule, Skip):
        return 0
    if isinstance(rule, Update):
        return 1
    if isinstance(rule, Call):
        return 1
    if isinstance(rule, Par):
        return 1 + sum(count_rule_nodes(sub) for sub in rule.rules)
    if isinstance(rule, If):
        n = 1 + count_rule_nodes(rule.then)
        if rule.orelse is not None:
            n += count_rule_nodes(rule.orelse)
        return n
    raise AssertionError(rule)


def stats(machine: Machine) -> ModelStats:
    own_rules = [r for r in machine.rules.values() if not r.origin]
    return ModelStats(
        n_monitored=len(machine.functions_of_kind("monitored", own_only=True)),
        n_controlled=len(machine.functions_of_kind("controlled", own_only=True)),
        n_derived=len(machine.functions_of_kind("derived", own_only=True)),
        n_static=len(machine.functions_of_kind("static", own_only=True)),
        n_rule_declarations=len(own_rules),
        n_rules_including_nested=sum(count_rule_nodes(r.body) for r in own_rules),
    )


# -- lint -------------------------------------------------------------------

def _expr_uses(machine: Machine, expr: Expr, used: Set[str]) -> None:
    if isinstance(expr, Const):
        return
    if isinstance(expr, Name):
        if not expr.ident.startswith("$"):
            used.add(expr.ident)
            decl = machine.functions.get(expr.ident)
            if decl is not None and decl.kind == "derived":
                d = machine.derived_defs.get(expr.ident)
                if d is not None:
                    _expr_uses(machine, d.body, used)
        return
    if isinstance(expr, App):
        used.add(expr.func)
        _note_timer_use(machine, expr.arg, used)
        decl = machine.functions.get(expr.func)
        if decl is not None and decl.kind == "derived":
            d = machine.derived_defs.get(expr.func)
            if d is not None:
                _expr_uses(machine, d.body, used)
        return
    if isinstance(expr, Unary):
        _expr_uses(machine, expr.operand, used)
        return
    if isinstance(expr, Binary):
        _expr_uses(machine, expr.left, used)
        _expr_uses(machine, expr.right, used)
        return


def _note_timer_use(machine: Machine, arg: str, used: Set[str]) -> None:
    if arg.startswith("$"):
        return
    used.add(arg)
    timer = machine.timers.get(arg)
    if timer is not None:
        used.add(timer.duration_static)


def _rule_uses(machine: Machine, rule: Rule, used: Set[str],
               visited_rules: Set[str]) -> None:
    if isinstance(rule, Skip):
        return
    if isinstance(rule, Update):
        if isinstance(rule.target, App):
            used.add(rule.target.func)
            _note_timer_use(machine, rule.target.arg, used)
        else:
            used.add(rule.target.ident)
        _expr_uses(machine, rule.value, used)
        return
    if isinstance(rule, Par):
        for sub in rule.rules:
            _rule_uses(machine, sub, used, visited_rules)
        return
    if isinstance(rule, If):
        _expr_uses(machine, rule.cond, used)
        _rule_uses(machine, rule.then, used, visited_rules)
        if rule.orelse is not None:
            _rule_uses(machine, rule.orelse, used, visited_rules)
        return
    if isinstance(rule, Call):
        used.add(rule.rule)
        if rule.arg is not None:
            _note_timer_use(machine, rule.arg, used)
        if rule.rule not in visited_rules and rule.rule in machine.rules:
            visited_rules.add(rule.rule)
            _rule_uses(machine, machine.rules[rule.rule].body, used, visited_rules)
        return
    raise AssertionError(rule)


def lint(machine: Machine) -> LintReport:
    """Report own declarations unreachable from the main rule."""
    used: Set[str] = set()
    visited: Set[str] = set()
    if machine.main_rule is not None:
        roots = [machine.main_rule]
    else:
        roots = list(machine.rules)  # modules: audit each rule as a root
    for root in roots:
        used.add(root)
        visited.add(root)
        _rule_uses(machine, machine.rules[root].body, used, visited)
    unused: List[str] = []
    for f in machine.functions.values():
        if not f.origin and f.name not in used:
            unused.append(f.name)
    for t in machine.timers.values():
        if not t.origin and t.name not in used:
            unused.append(t.name)
    for r in machine.rules.values():
        if not r.origin and r.name not in used:
            unused.append(r.name)
    return LintReport(unused_declarations=tuple(sorted(unused)),
                      shadowed_names=machine.shadowed)


# -- pretty printing ----------------------------------------------------------

_PRECEDENCE = {"or": 1, "and": 2, "=": 4, "!=": 4, "<": 4, "<=": 4, ">": 4,
               ">=": 4, "+": 5, "-": 5, "*": 6}


def format_expr(expr: Expr, parent_prec: int = 0) -> str:
    if isinstance(expr, Const):
        return format_value(expr.value)
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, App):
        return f"{expr.func}({expr.arg})"
    if isinstance(expr, Unary):
        text = f"not {format_expr(expr.operand, 3)}"
        return f"({text})" if parent_prec > 3 else text
    assert isinstance(expr, Binary)
    prec = _PRECEDENCE[expr.op]
    non_assoc = expr.op in ("=", "!=", "<", "<=", ">", ">=")
    left = format_expr(expr.left, prec + 1 if non_assoc else prec)
    right = format_expr(expr.right, prec + 1)
    text = f"{left} {expr.op} {right}"
    return f"({text})" if prec < parent_prec else text


def format_rule(rule: Rule, indent: int = 0) -> List[str]:
    pad = "    " * indent
    if isinstance(rule, Skip):
        return [pad + "skip"]
    if isinstance(rule, Update):
        if isinstance(rule.target, App):
            target = f"{rule.target.func}({rule.target.arg})"
        else:
            target = rule.target.ident
        return [f"{pad}{target} := {format_expr(rule.value)}"]
    if isinstance(rule, Call):
        arg = rule.arg or ""
        return [f"{pad}{rule.rule}[{arg}]"]
    if isinstance(rule, Par):
        lines = [pad + "par"]
        for sub in rule.rules:
            lines.extend(format_rule(sub, indent + 1))
        lines.append(pad + "endpar")
        return lines
    assert isinstance(rule, If)
    lines = [f"{pad}if {format_expr(rule.cond)} then"]
    lines.extend(format_rule(rule.then, indent + 1))
    if rule.orelse is not None:
        lines.append(pad + "else")
        lines.extend(format_rule(rule.orelse, indent + 1))
    lines.append(pad + "endif")
    return lines


def pretty_print(machine: Machine) -> str:
    """Canonical source text for the machine's own declarations."""
    lines: List[str] = [("module " if machine.is_module else "asm ") + machine.name, ""]
    for imp in machine.imports:
        lines.append(f"import {imp}")
    if machine.imports:
        lines.append("")
    lines.append("signature:")
    own = lambda items: [d for d in items if not d.origin]  # noqa: E731
    for name, literals in machine.domains.items():
        lines.append(f"    enum domain {name} = {{ {' | '.join(literals)} }}")
    for f in own(list(machine.functions.values())):
        codomain = f"Timer -> {f.codomain}" if f.timer_indexed else f.codomain
        lines.append(f"    {f.kind} {f.name} : {codomain}")
    for t in own(list(machine.timers.values())):
        lines.append(f"    timer {t.name} : {t.duration_static}")
    lines.append("")
    lines.append("definitions:")
    for name, d in machine.derived_defs.items():
        if d.origin:
            continue
        param = f"({d.param} in Timer)" if d.param else ""
        lines.append(f"    function {name}{param} = {format_expr(d.body)}")
    for name, value in machine.static_values.items():
        decl = machine.functions.get(name)
        if decl is not None and not decl.origin:
            lines.append(f"    function {name} = {format_value(value)}")
    for r in own(list(machine.rules.values())):
        param = f"({r.param} in Timer)" if r.param else ""
        head = "main rule" if r.name == machine.main_rule else "rule"
        lines.append("")
        lines.append(f"    {head} {r.name}{param} =")
        lines.extend(format_rule(r.body, 2))
    if machine.init:
        lines.append("")
        lines.append("default init s0:")
        for name, value in machine.init.items():
            lines.append(f"    function {name} = {format_value(value)}")
    return "\n".join(lines) + "\n"


def machines_equal(a: Machine, b: Machine) -> bool:
    """Structural equality over everything the source text determines."""
    return (
        a.name == b.name
        and a.is_module == b.is_module
        and a.domains == b.domains
        and a.imports == b.imports
        and {n: (f.kind, f.codomain, f.timer_indexed) for n, f in a.functions.items()}
        == {n: (f.kind, f.codomain, f.timer_indexed) for n, f in b.functions.items()}
        and {n: t.duration_static for n, t in a.timers.items()}
        == {n: t.duration_static for n, t in b.timers.items()}
        and {n: (r.body, r.param) for n, r in a.rules.items()}
        == {n: (r.body, r.param) for n, r in b.rules.items()}
        and {n: (d.body, d.param) for n, d in a.derived_defs.items()}
        == {n: (d.body, d.param) for n, d in b.derived_defs.items()}
        and a.static_values == b.static_values
        and a.init == b.init
        and a.main_rule == b.main_rule
    )


# -- control-state graph export ---------------------------------------------

def export_state_graph(machine: Machine) -> GraphDoc:
    """Mode-transition graph from a main rule shaped as guarded mode dispatch."""
    if machine.main_rule is None:
        raise NotControlStateShaped("modules have no main rule")
    body = machine.rules[machine.main_rule].body
    if not isinstance(body, Par):
        raise NotControlStateShaped("main rule is not a par of guarded branches")

    mode: Optional[str] = None
    branches: List[Tuple[str, Rule]] = []
    for sub in body.rules:
        if not (isinstance(sub, If) and sub.orelse is None
                and isinstance(sub.cond, Binary) and sub.cond.op == "="
                and isinstance(sub.cond.left, Name)
                and isinstance(sub.cond.right, Name)):
            raise NotControlStateShaped("branch is not 'if <mode> = <value> then ...'")
        loc, lit = sub.cond.left.ident, sub.cond.right.ident
        decl = machine.functions.get(loc)
        if decl is None or decl.kind != "controlled" or decl.codomain not in machine.domains:
            raise NotControlStateShaped(f"guard location '{loc}' is not an enum mode")
        if lit not in machine.literal_domain:
            raise NotControlStateShaped(f"guard value '{lit}' is not an enum literal")
        if mode is None:
            mode = loc
        elif mode != loc:
            raise NotControlStateShaped("branches guard more than one location")
        branches.append((lit, sub.then))
    if mode is None:
        raise NotControlStateShaped("main rule has no branches")

    edges: Dict[Tuple[str, str], List[str]] = {}

    def scan(rule: Rule, source: str, path: List[str], seen: Tuple[str, ...]) -> None:
        if isinstance(rule, Update):
            if (isinstance(rule.target, Name) and rule.target.ident == mode
                    and isinstance(rule.value, Name)
                    and rule.value.ident in machine.literal_domain):
                label = " and ".join(path) if path else "true"
                edges.setdefault((source, rule.value.ident), []).append(label)
            return
        if isinstance(rule, Par):
            for sub in rule.rules:
                scan(sub, source, path, seen)
            return
        if isinstance(rule, If):
            cond = format_expr(rule.cond)
            scan(rule.then, source, path + [cond], seen)
            if rule.orelse is not None:
                scan(rule.orelse, source, path + [f"not ({cond})"], seen)
            return
        if isinstance(rule, Call) and rule.rule not in seen:
            scan(machine.rules[rule.rule].body, source, path, seen + (rule.rule,))
            return

    for lit, subtree in branches:
        scan(subtree, lit, [], ())

    nodes = machine.domains[machine.functions[mode].codomain]
    edge_list = tuple(
        (src, dst, " or ".join(dict.fromkeys(labels)))
        for (src, dst), labels in sorted(edges.items())
    )
    out = [f"digraph {machine.name} {{", "    rankdir=LR;"]
    for node in nodes:
        out.append(f'    "{node}";')
    for src, dst, label in edge_list:
        text = label.replace('"', "'")
        out.append(f'    "{src}" -> "{dst}" [label="{text}"];')
    out.append("}")
    return GraphDoc(mode_location=mode, nodes=tuple(nodes), edges=edge_list,
                    text="\n".join(out) + "\n")
