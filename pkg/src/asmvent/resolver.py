"""Name resolution and type checking: RawModel -> Machine.

Imports are merged into the importing machine's namespace with an origin
tag, so statistics and lint can tell the machine's own declarations from
library ones. The timer library's ``start``/``expired`` functions are
ordinary (timer-indexed) declarations here; only ``duration($t)`` is a
builtin, resolved through the timer declarations.
"""
from __future__ import annotations

import os
from importlib import resources
from typing import Dict, List, Optional, Set, Tuple

from .errors import (
    DuplicateDeclaration,
    TypeMismatch,
    UnknownImport,
    UnresolvedSymbol,
)
from .parser import RawModel, parse_text
from .syntax import (
    App,
    Binary,
    BUILTIN_DOMAINS,
    Call,
    Const,
    DerivedDef,
    Expr,
    FunctionDecl,
    If,
    Machine,
    Name,
    Par,
    Rule,
    RuleDecl,
    Skip,
    TIME_LIBRARY,
    TimerDecl,
    Unary,
    Update,
    Value,
)

NUMERIC = {"Integer", "Duration", "Instant"}


def _bundled_model_text(name: str) -> Optional[str]:
    path = resources.files("asmvent.assets.models").joinpath(f"{name}.asm")
    if path.is_file():
        return path.read_text(encoding="utf-8")
    return None


def default_import_loader(name: str, importer_origin: Optional[str]) -> RawModel:
    text = _bundled_model_text(name)
    origin = f"<bundled>/{name}.asm"
    if text is None and importer_origin and importer_origin != "<inline>":
        candidate = os.path.join(os.path.dirname(importer_origin), f"{name}.asm")
        if os.path.isfile(candidate):
            with open(candidate, encoding="utf-8") as fh:
                text = fh.read()
            origin = candidate
    if text is None:
        raise UnknownImport(f"cannot locate module '{name}'")
    return parse_text(text, origin)


class Resolver:
    def __init__(self, raw: RawModel, import_loader=default_import_loader):
        self.raw = raw
        self.import_loader = import_loader
        self.machine = Machine(
            name=raw.name,
            is_module=raw.is_module,
            source_path=raw.origin,
        )
        self.shadowed: List[str] = []

    # -- declaration merging ---------------------------------------------

    def resolve(self) -> Machine:
        m = self.machine
        imported: List[Tuple[RawModel, str]] = []
        seen_imports: Set[str] = set()
        for imp_name, line in self.raw.imports:
            if imp_name in seen_imports:
                raise DuplicateDeclaration(f"module '{imp_name}' imported twice")
            seen_imports.add(imp_name)
            imported.append((self.import_loader(imp_name, self.raw.origin), imp_name))
        m.imports = tuple(name for _, name in imported)

        for raw_mod, mod_name in imported:
            if raw_mod.imports:
                raise UnknownImport(f"module '{mod_name}' may not import further modules")
            self._merge_declarations(raw_mod, origin=mod_name)
        self._merge_declarations(self.raw, origin="")

        self._check_timers()
        self._bind_defs(imported)
        self._bind_init()
        self._resolve_rules()
        m.shadowed = tuple(self.shadowed)
        return m

    def _merge_declarations(self, raw: RawModel, origin: str) -> None:
        m = self.machine
        for name, literals, _line in raw.domains:
            if name in m.domains or name in BUILTIN_DOMAINS or name == "Timer":
                raise DuplicateDeclaration(f"domain '{name}' already declared")
            for lit in literals:
                if lit in m.literal_domain:
                    raise DuplicateDeclaration(
                        f"enum literal '{lit}' already belongs to domain "
                        f"'{m.literal_domain[lit]}'")
                if literals.count(lit) > 1:
                    raise DuplicateDeclaration(f"enum literal '{lit}' repeated")
                m.literal_domain[lit] = name
            m.domains[name] = literals
        for fn in raw.functions:
            self._add_function(fn, origin)
        for name, duration, line in raw.timers:
            if name in m.timers:
                raise DuplicateDeclaration(f"timer '{name}' already declared")
            m.timers[name] = TimerDecl(name, duration, origin=origin, line=line)
        for rr in raw.rules:
            if rr.name in m.rules:
                if origin == "" and m.rules[rr.name].origin:
                    self.shadowed.append(rr.name)
                else:
                    raise DuplicateDeclaration(f"rule '{rr.name}' already declared")
            m.rules[rr.name] = RuleDecl(rr.name, rr.body, rr.param, origin=origin, line=rr.line)
            if rr.is_main:
                if m.main_rule is not None:
                    raise DuplicateDeclaration("more than one main rule")
                m.main_rule = rr.name

    def _add_function(self, fn, origin: str) -> None:
        m = self.machine
        if fn.name in m.functions:
            if origin == "" and m.functions[fn.name].origin:
                self.shadowed.append(fn.name)
            else:
                raise DuplicateDeclaration(f"function '{fn.name}' already declared")
        if fn.name in m.literal_domain:
            raise DuplicateDeclaration(f"'{fn.name}' already names an enum literal")
        if fn.codomain not in BUILTIN_DOMAINS and fn.codomain not in m.domains:
            raise UnresolvedSymbol(
                f"function '{fn.name}' has unknown codomain '{fn.codomain}'")
        m.functions[fn.name] = FunctionDecl(
            fn.name, fn.kind, fn.codomain, fn.timer_indexed, origin=origin, line=fn.line)

    def _check_timers(self) -> None:
        m = self.machine
        if m.timers and not m.uses_time and not m.is_module:
            raise UnresolvedSymbol(
                f"machine '{m.name}' declares timers but does not import {TIME_LIBRARY}")
        for t in m.timers.values():
            decl = m.functions.get(t.duration_static)
            if decl is None or decl.kind != "static":
                raise UnresolvedSymbol(
                    f"timer '{t.name}' needs a static duration function, "
                    f"got '{t.duration_static}'")
            if decl.codomain not in NUMERIC:
                raise TypeMismatch(
                    f"duration of timer '{t.name}' must be numeric, "
                    f"'{t.duration_static}' is {decl.codomain}")

    # -- definitions, init -------------------------------------------------

    def _bind_defs(self, imported) -> None:
        m = self.machine
        all_defs = []
        for raw_mod, mod_name in imported:
            all_defs.extend((d, mod_name) for d in raw_mod.defs)
        all_defs.extend((d, "") for d in self.raw.defs)
        for (name, param, body, _line), origin in all_defs:
            decl = m.functions.get(name)
            if decl is None:
                raise UnresolvedSymbol(f"definition for undeclared function '{name}'")
            if decl.kind == "derived":
                if (param is not None) != decl.timer_indexed:
                    raise TypeMismatch(
                        f"derived '{name}' parameter does not match its declaration")
                got = self._type_of(body, param)
                self._require_compatible(decl.codomain, got, f"derived '{name}'")
                m.derived_defs[name] = DerivedDef(name, body, param, origin=origin)
            elif decl.kind == "static":
                if param is not None:
                    raise TypeMismatch(f"static '{name}' cannot take a parameter")
                value = self._const_eval(body)
                self._check_value(decl.codomain, value, f"static '{name}'")
                m.static_values[name] = value
            else:
                raise TypeMismatch(
                    f"'function {name} = ...' is only valid for derived or static "
                    f"functions, '{name}' is {decl.kind}")
        for f in m.functions.values():
            if f.kind == "derived" and f.name not in m.derived_defs:
                raise UnresolvedSymbol(f"derived function '{f.name}' has no definition")

    def _bind_init(self) -> None:
        m = self.machine
        for name, expr, _line in self.raw.init_entries:
            decl = m.functions.get(name)
            if decl is None:
                raise UnresolvedSymbol(f"init for undeclared function '{name}'")
            if decl.kind != "controlled" or decl.timer_indexed:
                raise TypeMismatch(f"init may only set plain controlled functions ('{name}')")
            value = self._const_eval(expr)
            self._check_value(decl.codomain, value, f"init of '{name}'")
            m.init[name] = value
        if not m.is_module:
            for f in m.functions_of_kind("controlled"):
                if f.timer_indexed or f.origin:
                    continue
                if f.name not in m.init:
                    raise UnresolvedSymbol(
                        f"controlled function '{f.name}' has no init value")

    def _const_eval(self, expr: Expr) -> Value:
        if isinstance(expr, Const):
            return expr.value
        if isinstance(expr, Name):
            if expr.ident in self.machine.literal_domain:
                return expr.ident
            if expr.ident in self.machine.static_values:
                return self.machine.static_values[expr.ident]
            raise UnresolvedSymbol(f"'{expr.ident}' is not a constant")
        if isinstance(expr, Binary) and expr.op in ("+", "-", "*"):
            left = self._const_eval(expr.left)
            right = self._const_eval(expr.right)
            if not isinstance(left, int) or not isinstance(right, int):
                raise TypeMismatch("arithmetic on non-numeric constant")
            return {"+": left + right, "-": left - right, "*": left * right}[expr.op]
        raise TypeMismatch("expression is not constant")

    def _check_value(self, codomain: str, value: Value, what: str) -> None:
        if codomain == "Boolean":
            ok = isinstance(value, bool)
        elif codomain in NUMERIC:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, str) and self.machine.literal_domain.get(value) == codomain
        if not ok:
            raise TypeMismatch(f"{what}: {value!r} is not a {codomain}")

    # -- rule bodies ---------------------------------------------------------

    def _resolve_rules(self) -> None:
        m = self.machine
        for decl in m.rules.values():
            self._check_rule(decl.body, decl.param, decl.name)
        self._check_macro_cycles()
        if not m.is_module and m.main_rule is None:
            raise UnresolvedSymbol(f"machine '{m.name}' has no main rule")

    def _check_rule(self, rule: Rule, param: Optional[str], where: str) -> None:
        m = self.machine
        if isinstance(rule, Skip):
            return
        if isinstance(rule, Par):
            for sub in rule.rules:
                self._check_rule(sub, param, where)
            return
        if isinstance(rule, If):
            got = self._type_of(rule.cond, param)
            self._require_compatible("Boolean", got, f"guard in '{where}'")
            self._check_rule(rule.then, param, where)
            if rule.orelse is not None:
                self._check_rule(rule.orelse, param, where)
            return
        if isinstance(rule, Call):
            target = m.rules.get(rule.rule)
            if target is None:
                raise UnresolvedSymbol(f"'{where}' calls undeclared rule '{rule.rule}'")
            if target.param is not None:
                if rule.arg is None:
                    raise TypeMismatch(f"rule '{rule.rule}' needs a timer argument")
                self._check_timer_arg(rule.arg, param, where)
            elif rule.arg is not None:
                raise TypeMismatch(f"rule '{rule.rule}' takes no argument")
            return
        if isinstance(rule, Update):
            target = rule.target
            if isinstance(target, App):
                decl = m.functions.get(target.func)
                if decl is None or not decl.timer_indexed:
                    raise UnresolvedSymbol(
                        f"'{where}' updates unknown location '{target.func}(...)'")
                self._check_timer_arg(target.arg, param, where)
            else:
                decl = m.functions.get(target.ident)
                if decl is None:
                    raise UnresolvedSymbol(
                        f"'{where}' updates undeclared function '{target.ident}'")
            if decl.kind != "controlled":
                raise TypeMismatch(
                    f"'{where}' updates {decl.kind} function '{decl.name}'; "
                    "only controlled functions can be updated")
            got = self._type_of(rule.value, param)
            self._require_compatible(decl.codomain, got, f"update of '{decl.name}' in '{where}'")
            return
        raise AssertionError(f"unknown rule node {rule!r}")

    def _check_timer_arg(self, arg: str, param: Optional[str], where: str) -> None:
        if arg.startswith("$"):
            if arg != param:
                raise UnresolvedSymbol(f"unbound variable '{arg}' in '{where}'")
            return
        if arg not in self.machine.timers:
            raise UnresolvedSymbol(f"'{where}' references undeclared timer '{arg}'")

    def _check_macro_cycles(self) -> None:
        m = self.machine
        color: Dict[str, int] = {}

        def visit(name: str, stack: List[str]) -> None:
            color[name] = 1
            for callee in _called_rules(m.rules[name].body):
                if callee not in m.rules:
                    continue
                if color.get(callee) == 1:
                    cycle = " -> ".join(stack + [name, callee])
                    raise TypeMismatch(f"recursive macro rules: {cycle}")
                if color.get(callee, 0) == 0:
                    visit(callee, stack + [name])
            color[name] = 2

        for rule_name in m.rules:
            if color.get(rule_name, 0) == 0:
                visit(rule_name, [])

    # -- expression typing -----------------------------------------------

    def _type_of(self, expr: Expr, param: Optional[str]) -> str:
        m = self.machine
        if isinstance(expr, Const):
            return "Boolean" if isinstance(expr.value, bool) else "Integer"
        if isinstance(expr, Name):
            if expr.ident.startswith("$"):
                if expr.ident != param:
                    raise UnresolvedSymbol(f"unbound variable '{expr.ident}'")
                return "Timer"
            if expr.ident in m.literal_domain:
                return m.literal_domain[expr.ident]
            decl = m.functions.get(expr.ident)
            if decl is None:
                raise UnresolvedSymbol(f"unknown name '{expr.ident}'")
            if decl.timer_indexed:
                raise TypeMismatch(f"'{expr.ident}' needs a timer argument")
            return decl.codomain
        if isinstance(expr, App):
            self._check_timer_arg(expr.arg, param, expr.func)
            if expr.func == "duration":
                if "duration" not in m.functions:
                    return "Duration"
            decl = m.functions.get(expr.func)
            if decl is None:
                raise UnresolvedSymbol(f"unknown function '{expr.func}'")
            if not decl.timer_indexed:
                raise TypeMismatch(f"'{expr.func}' does not take a timer argument")
            return decl.codomain
        if isinstance(expr, Unary):
            got = self._type_of(expr.operand, param)
            self._require_compatible("Boolean", got, "operand of 'not'")
            return "Boolean"
        if isinstance(expr, Binary):
            left = self._type_of(expr.left, param)
            right = self._type_of(expr.right, param)
            if expr.op in ("and", "or"):
                self._require_compatible("Boolean", left, f"left of '{expr.op}'")
                self._require_compatible("Boolean", right, f"right of '{expr.op}'")
                return "Boolean"
            if expr.op in ("=", "!="):
                if not self._compatible(left, right):
                    raise TypeMismatch(
                        f"cannot compare {left} with {right}")
                return "Boolean"
            if expr.op in ("<", "<=", ">", ">="):
                if left not in NUMERIC or right not in NUMERIC:
                    raise TypeMismatch(f"'{expr.op}' needs numeric operands")
                return "Boolean"
            if expr.op in ("+", "-", "*"):
                if left not in NUMERIC or right not in NUMERIC:
                    raise TypeMismatch(f"'{expr.op}' needs numeric operands")
                return "Integer"
        raise AssertionError(f"unknown expression node {expr!r}")

    def _compatible(self, a: str, b: str) -> bool:
        if a == b:
            return True
        return a in NUMERIC and b in NUMERIC

    def _require_compatible(self, want: str, got: str, what: str) -> None:
        if not self._compatible(want, got):
            raise TypeMismatch(f"{what}: expected {want}, got {got}")


def _called_rules(rule: Rule) -> List[str]:
    if isinstance(rule, Call):
        return [rule.rule]
    if isinstance(rule, Par):
        out: List[str] = []
        for sub in rule.rules:
            out.extend(_called_rules(sub))
        return out
    if isinstance(rule, If):
        out = _called_rules(rule.then)
        if rule.orelse is not None:
            out.extend(_called_rules(rule.orelse))
        return out
    return []


def resolve(raw: RawModel, import_loader=default_import_loader) -> Machine:
    return Resolver(raw, import_loader).resolve()


def shadowed_names(raw: RawModel, import_loader=default_import_loader) -> List[str]:
    r = Resolver(raw, import_loader)
    r.resolve()
    return r.shadowed


def parse(text: str, origin: Optional[str] = None,
          import_loader=default_import_loader) -> Machine:
    """Parse and resolve source text into an executable machine."""
    return resolve(parse_text(text, origin or "<inline>"), import_loader)


def parse_file(path: str, import_loader=default_import_loader) -> Machine:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read(), origin=path, import_loader=import_loader)
