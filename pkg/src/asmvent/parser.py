"""Lexer and recursive-descent parser for the textual model language.

The grammar (docs/grammar.md has the full EBNF) covers machine/module
headers, imports, enum domain and function declarations, timer
declarations, macro and main rule definitions built from update / par /
if-then-else / call / skip, derived and static function definitions, and
a default-init block. Expressions are boolean connectives over
(in)equalities, with integer arithmetic for the timer library.

Parsing stops at names: resolution against the signature (imports,
types, call targets) happens in :mod:`asmvent.resolver`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .errors import ModelSyntaxError
from .syntax import App, Binary, Call, Const, Expr, If, Name, Par, Rule, Skip, Unary, Update

KEYWORDS = {
    "asm", "module", "import", "signature", "definitions",
    "enum", "domain", "dynamic", "monitored", "controlled", "derived", "static",
    "timer", "rule", "macro", "main", "function", "default", "init",
    "skip", "par", "endpar", "if", "then", "else", "endif",
    "and", "or", "not", "in", "true", "false",
}

SYMBOLS = [
    ":=", "!=", ">=", "<=", "->",
    ":", "=", ">", "<", "(", ")", "{", "}", "[", "]", "|", "+", "-", "*",
]


@dataclass
class Token:
    type: str  # keyword name, IDENT, VAR, INT, symbol, EOF
    value: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_" or ch == "$":
            j = i + 1 if ch == "$" else i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if ch == "$":
                if len(word) < 2:
                    raise ModelSyntaxError("empty variable name", line, start_col)
                tokens.append(Token("VAR", word, line, start_col))
            elif word in KEYWORDS:
                tokens.append(Token(word, word, line, start_col))
            else:
                tokens.append(Token("IDENT", word, line, start_col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token(sym, sym, line, start_col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ModelSyntaxError(f"unexpected character {ch!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# Declarations as parsed, before resolution.

@dataclass
class RawFunction:
    name: str
    kind: str
    codomain: str
    timer_indexed: bool
    line: int


@dataclass
class RawRule:
    name: str
    param: Optional[str]
    body: Rule
    is_main: bool
    line: int


@dataclass
class RawModel:
    name: str
    is_module: bool
    origin: Optional[str] = None
    imports: List[Tuple[str, int]] = field(default_factory=list)
    domains: List[Tuple[str, Tuple[str, ...], int]] = field(default_factory=list)
    functions: List[RawFunction] = field(default_factory=list)
    timers: List[Tuple[str, str, int]] = field(default_factory=list)
    rules: List[RawRule] = field(default_factory=list)
    # `function name [param] = expr` bodies for derived and static functions
    defs: List[Tuple[str, Optional[str], Expr, int]] = field(default_factory=list)
    init_name: Optional[str] = None
    init_entries: List[Tuple[str, Expr, int]] = field(default_factory=list)


class Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *types: str) -> bool:
        return self.cur.type in types

    def advance(self) -> Token:
        tok = self.cur
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def expect(self, type_: str) -> Token:
        if self.cur.type != type_:
            self.fail(type_)
        return self.advance()

    def fail(self, expected: str) -> None:
        tok = self.cur
        found = tok.value or tok.type
        raise ModelSyntaxError(f"found {found!r}", tok.line, tok.col, expected=expected)

    # -- top level -----------------------------------------------------

    def parse_model(self, origin: Optional[str] = None) -> RawModel:
        if self.at("asm"):
            self.advance()
            is_module = False
        elif self.at("module"):
            self.advance()
            is_module = True
        else:
            self.fail("'asm' or 'module'")
        name = self.expect("IDENT").value
        model = RawModel(name=name, is_module=is_module, origin=origin)

        while self.at("import"):
            tok = self.advance()
            model.imports.append((self.expect("IDENT").value, tok.line))

        self.expect("signature")
        self.expect(":")
        self.parse_signature(model)

        self.expect("definitions")
        self.expect(":")
        self.parse_definitions(model)

        if self.at("default"):
            self.parse_init(model)

        self.expect("EOF")
        return model

    def parse_signature(self, model: RawModel) -> None:
        while True:
            if self.at("enum"):
                line = self.advance().line
                self.expect("domain")
                name = self.expect("IDENT").value
                self.expect("=")
                self.expect("{")
                literals = [self.expect("IDENT").value]
                while self.at("|"):
                    self.advance()
                    literals.append(self.expect("IDENT").value)
                self.expect("}")
                model.domains.append((name, tuple(literals), line))
            elif self.at("dynamic", "monitored", "controlled", "derived", "static"):
                if self.at("dynamic"):
                    self.advance()
                kind_tok = self.advance()
                if kind_tok.type not in ("monitored", "controlled", "derived", "static"):
                    raise ModelSyntaxError(
                        f"found {kind_tok.value!r}", kind_tok.line, kind_tok.col,
                        expected="function kind")
                name = self.expect("IDENT").value
                self.expect(":")
                first = self.expect("IDENT").value
                timer_indexed = False
                codomain = first
                if self.at("->"):
                    if first != "Timer":
                        self.fail("'Timer' before '->'")
                    self.advance()
                    codomain = self.expect("IDENT").value
                    timer_indexed = True
                model.functions.append(
                    RawFunction(name, kind_tok.type, codomain, timer_indexed, kind_tok.line))
            elif self.at("timer"):
                line = self.advance().line
                name = self.expect("IDENT").value
                self.expect(":")
                duration = self.expect("IDENT").value
                model.timers.append((name, duration, line))
            else:
                break

    def parse_definitions(self, model: RawModel) -> None:
        while True:
            if self.at("function"):
                line = self.advance().line
                name = self.expect("IDENT").value
                param = self.parse_param()
                self.expect("=")
                model.defs.append((name, param, self.parse_expr(), line))
            elif self.at("rule", "macro", "main"):
                is_main = False
                if self.at("main"):
                    self.advance()
                    is_main = True
                if self.at("macro"):
                    self.advance()
                line = self.expect("rule").line
                name = self.expect("IDENT").value
                param = self.parse_param()
                self.expect("=")
                body = self.parse_rule()
                model.rules.append(RawRule(name, param, body, is_main, line))
            else:
                break

    def parse_param(self) -> Optional[str]:
        if not self.at("("):
            return None
        # Lookahead: '(' VAR 'in' ... is a parameter list, anything else is not.
        if self.tokens[self.pos + 1].type != "VAR":
            return None
        self.advance()
        var = self.expect("VAR").value
        self.expect("in")
        self.expect("IDENT")  # the Timer domain
        self.expect(")")
        return var

    def parse_init(self, model: RawModel) -> None:
        self.expect("default")
        self.expect("init")
        model.init_name = self.expect("IDENT").value
        self.expect(":")
        while self.at("function"):
            line = self.advance().line
            name = self.expect("IDENT").value
            self.expect("=")
            model.init_entries.append((name, self.parse_expr(), line))

    # -- rules -----------------------------------------------------------

    def parse_rule(self) -> Rule:
        if self.at("skip"):
            self.advance()
            return Skip()
        if self.at("par"):
            self.advance()
            rules = [self.parse_rule()]
            while not self.at("endpar"):
                rules.append(self.parse_rule())
            self.advance()
            return Par(tuple(rules))
        if self.at("if"):
            self.advance()
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_rule()
            orelse = None
            if self.at("else"):
                self.advance()
                orelse = self.parse_rule()
            self.expect("endif")
            return If(cond, then, orelse)
        if self.at("IDENT"):
            ident = self.advance().value
            if self.at("["):
                self.advance()
                arg = None
                if self.at("IDENT", "VAR"):
                    arg = self.advance().value
                self.expect("]")
                return Call(ident, arg)
            if self.at("("):
                self.advance()
                arg = self.advance()
                if arg.type not in ("IDENT", "VAR"):
                    raise ModelSyntaxError(
                        f"found {arg.value!r}", arg.line, arg.col, expected="timer name")
                self.expect(")")
                self.expect(":=")
                return Update(App(ident, arg.value), self.parse_expr())
            self.expect(":=")
            return Update(Name(ident), self.parse_expr())
        self.fail("a rule")
        raise AssertionError  # unreachable

    # -- expressions -------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.at("or"):
            self.advance()
            left = Binary("or", left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.at("and"):
            self.advance()
            left = Binary("and", left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.at("not"):
            self.advance()
            return Unary("not", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_arith()
        if self.at("=", "!=", ">=", "<=", ">", "<"):
            op = self.advance().type
            return Binary(op, left, self.parse_arith())
        return left

    def parse_arith(self) -> Expr:
        left = self.parse_term()
        while self.at("+", "-"):
            op = self.advance().type
            left = Binary(op, left, self.parse_term())
        return left

    def parse_term(self) -> Expr:
        left = self.parse_factor()
        while self.at("*"):
            self.advance()
            left = Binary("*", left, self.parse_factor())
        return left

    def parse_factor(self) -> Expr:
        if self.at("INT"):
            return Const(int(self.advance().value))
        if self.at("true"):
            self.advance()
            return Const(True)
        if self.at("false"):
            self.advance()
            return Const(False)
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if self.at("VAR"):
            return Name(self.advance().value)
        if self.at("IDENT"):
            ident = self.advance().value
            if self.at("("):
                self.advance()
                arg = self.advance()
                if arg.type not in ("IDENT", "VAR"):
                    raise ModelSyntaxError(
                        f"found {arg.value!r}", arg.line, arg.col, expected="timer name")
                self.expect(")")
                return App(ident, arg.value)
            return Name(ident)
        self.fail("an expression")
        raise AssertionError  # unreachable


def parse_text(text: str, origin: Optional[str] = None) -> RawModel:
    """Parse source text to a raw (unresolved) model."""
    return Parser(tokenize(text)).parse_model(origin)
