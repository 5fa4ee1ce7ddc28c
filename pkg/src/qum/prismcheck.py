"""Independent checker for the generated PRISM text.

Parses the emitted CTMC subset (modules, integer variables, guarded commands,
labels, `const double`), then re-derives the chain with textbook product
semantics: a module's alphabet is the set of action labels syntactically
present in it; a synchronized transition needs one enabled command from every
alphabet member and multiplies their rates; unlabeled commands interleave.

This module deliberately shares no code with the generator or the engine so
that agreement between the two routes means something.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional


class PrismSyntaxError(Exception):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>//[^\n]*)
  | (?P<newline>\n)
  | (?P<number>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op>->|\.\.|<=|>=|!=|[\[\](){}:;'=<>&|,])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    pos = 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            raise PrismSyntaxError(line, f"unexpected character {text[pos]!r}")
        kind = match.lastgroup
        value = match.group()
        pos = match.end()
        if kind == "newline":
            line += 1
            continue
        if kind in ("ws", "comment"):
            continue
        tokens.append(Token(kind, value, line))
    return tokens


# Expressions are nested tuples:
#   ("bool", value) | ("var", name) | ("int", value)
#   ("cmp", op, lhs, rhs) | ("and", parts) | ("or", parts)
Expr = tuple


def eval_expr(expr: Expr, env: dict[str, int]) -> bool:
    tag = expr[0]
    if tag == "bool":
        return expr[1]
    if tag == "and":
        return all(eval_expr(e, env) for e in expr[1])
    if tag == "or":
        return any(eval_expr(e, env) for e in expr[1])
    if tag == "cmp":
        _, op, lhs, rhs = expr
        a = env[lhs[1]] if lhs[0] == "var" else lhs[1]
        b = env[rhs[1]] if rhs[0] == "var" else rhs[1]
        return {
            "=": a == b,
            "!=": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[op]
    raise ValueError(f"cannot evaluate {expr!r}")


def expr_vars(expr: Expr) -> set[str]:
    tag = expr[0]
    if tag in ("and", "or"):
        out: set[str] = set()
        for e in expr[1]:
            out |= expr_vars(e)
        return out
    if tag == "cmp":
        out = set()
        for operand in (expr[2], expr[3]):
            if operand[0] == "var":
                out.add(operand[1])
        return out
    return set()


@dataclass
class VarDecl:
    name: str
    lo: int
    hi: int
    init: int


@dataclass
class Command:
    action: Optional[str]
    guard: Expr
    rate: float
    update: tuple[tuple[str, int], ...]  # ((var, value), ...)
    line: int


@dataclass
class Module:
    name: str
    variables: list[VarDecl] = field(default_factory=list)
    commands: list[Command] = field(default_factory=list)

    @property
    def alphabet(self) -> set[str]:
        return {c.action for c in self.commands if c.action is not None}


@dataclass
class PrismFile:
    model_type: str
    constants: list[str]
    modules: list[Module]
    labels: dict[str, Expr]

    def var_order(self) -> list[VarDecl]:
        return [v for m in self.modules for v in m.variables]

    def symbols(self) -> set[str]:
        names = {c for c in self.constants}
        names |= {v.name for v in self.var_order()}
        names |= set(self.labels)
        return names


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1].line if self.tokens else 1
            raise PrismSyntaxError(last, "unexpected end of input")
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise PrismSyntaxError(tok.line, f"expected {text!r}, found {tok.text!r}")
        return tok

    def expect_kind(self, kind: str) -> Token:
        tok = self.next()
        if tok.kind != kind:
            raise PrismSyntaxError(tok.line, f"expected {kind}, found {tok.text!r}")
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    # ------------------------------------------------------------------
    def parse_file(self) -> PrismFile:
        header = self.next()
        if header.text != "ctmc":
            raise PrismSyntaxError(header.line, f"expected 'ctmc', found {header.text!r}")
        constants: list[str] = []
        modules: list[Module] = []
        labels: dict[str, Expr] = {}
        while self.peek() is not None:
            tok = self.peek()
            if tok.text == "const":
                self.next()
                self.expect("double")
                name = self.expect_kind("name").text
                self.expect(";")
                constants.append(name)
            elif tok.text == "module":
                modules.append(self.parse_module())
            elif tok.text == "label":
                name, expr = self.parse_label()
                if name in labels:
                    raise PrismSyntaxError(tok.line, f"label {name!r} defined twice")
                labels[name] = expr
            else:
                raise PrismSyntaxError(tok.line, f"unexpected {tok.text!r}")
        return PrismFile("ctmc", constants, modules, labels)

    def parse_module(self) -> Module:
        self.expect("module")
        name = self.expect_kind("name").text
        module = Module(name)
        while not self.at("endmodule"):
            tok = self.peek()
            if tok is None:
                raise PrismSyntaxError(self.tokens[-1].line, "unterminated module")
            if tok.text == "[":
                module.commands.append(self.parse_command())
            else:
                module.variables.append(self.parse_vardecl())
        self.expect("endmodule")
        return module

    def parse_vardecl(self) -> VarDecl:
        name = self.expect_kind("name").text
        self.expect(":")
        self.expect("[")
        lo = int(self.expect_kind("number").text)
        self.expect("..")
        hi = int(self.expect_kind("number").text)
        self.expect("]")
        self.expect("init")
        init = int(self.expect_kind("number").text)
        self.expect(";")
        return VarDecl(name, lo, hi, init)

    def parse_command(self) -> Command:
        start = self.expect("[")
        action = None
        if not self.at("]"):
            action = self.expect_kind("name").text
        self.expect("]")
        guard = self.parse_expr()
        self.expect("->")
        rate_tok = self.expect_kind("number")
        rate = float(rate_tok.text)
        self.expect(":")
        update = self.parse_update()
        self.expect(";")
        return Command(action, guard, rate, update, start.line)

    def parse_update(self) -> tuple[tuple[str, int], ...]:
        assignments: list[tuple[str, int]] = []
        while True:
            self.expect("(")
            var = self.expect_kind("name").text
            self.expect("'")
            self.expect("=")
            value = int(self.expect_kind("number").text)
            self.expect(")")
            assignments.append((var, value))
            if self.at("&"):
                self.next()
                continue
            break
        return tuple(assignments)

    def parse_label(self) -> tuple[str, Expr]:
        self.expect("label")
        name_tok = self.expect_kind("string")
        self.expect("=")
        expr = self.parse_expr()
        self.expect(";")
        return name_tok.text.strip('"'), expr

    # Expression grammar: or over and over atoms.
    def parse_expr(self) -> Expr:
        parts = [self.parse_and()]
        while self.at("|"):
            self.next()
            parts.append(self.parse_and())
        return parts[0] if len(parts) == 1 else ("or", tuple(parts))

    def parse_and(self) -> Expr:
        parts = [self.parse_atom()]
        while self.at("&"):
            self.next()
            parts.append(self.parse_atom())
        return parts[0] if len(parts) == 1 else ("and", tuple(parts))

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise PrismSyntaxError(self.tokens[-1].line, "unexpected end of expression")
        if tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            # A parenthesized operand may continue as a comparison;
            # the generated subset never does, so treat it as a group.
            return inner
        if tok.text == "true":
            self.next()
            return ("bool", True)
        if tok.text == "false":
            self.next()
            return ("bool", False)
        lhs = self.parse_operand()
        op_tok = self.next()
        if op_tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise PrismSyntaxError(op_tok.line, f"expected comparison, found {op_tok.text!r}")
        rhs = self.parse_operand()
        return ("cmp", op_tok.text, lhs, rhs)

    def parse_operand(self) -> Expr:
        tok = self.next()
        if tok.kind == "number":
            return ("int", int(tok.text))
        if tok.kind == "name":
            return ("var", tok.text)
        raise PrismSyntaxError(tok.line, f"expected variable or constant, found {tok.text!r}")


def parse(text: str) -> PrismFile:
    return Parser(tokenize(text)).parse_file()


# ---------------------------------------------------------------------------
# Product-chain interpreter


@dataclass
class ChainEdge:
    source: tuple[int, ...]
    target: tuple[int, ...]
    rate: float
    action: Optional[str]


@dataclass
class Chain:
    var_names: tuple[str, ...]
    initial: tuple[int, ...]
    states: list[tuple[int, ...]]
    edges: list[ChainEdge]


def build_chain(pf: PrismFile, state_cap: int = 1_000_000) -> Chain:
    decls = pf.var_order()
    var_names = tuple(d.name for d in decls)
    var_pos = {d.name: i for i, d in enumerate(decls)}
    initial = tuple(d.init for d in decls)

    actions = sorted({a for m in pf.modules for a in m.alphabet})
    sync_members = {a: [m for m in pf.modules if a in m.alphabet] for a in actions}

    def env_of(state: tuple[int, ...]) -> dict[str, int]:
        return dict(zip(var_names, state))

    def apply(state: tuple[int, ...], updates) -> tuple[int, ...]:
        out = list(state)
        for var, value in updates:
            out[var_pos[var]] = value
        return tuple(out)

    states: list[tuple[int, ...]] = [initial]
    index = {initial: 0}
    edges: list[ChainEdge] = []
    frontier = [initial]
    while frontier:
        state = frontier.pop()
        env = env_of(state)
        successors: list[tuple[tuple[int, ...], float, Optional[str]]] = []
        for module in pf.modules:
            for cmd in module.commands:
                if cmd.action is None and eval_expr(cmd.guard, env):
                    successors.append((apply(state, cmd.update), cmd.rate, None))
        for action in actions:
            parts: list[list[Command]] = []
            blocked = False
            for module in sync_members[action]:
                enabled = [
                    c
                    for c in module.commands
                    if c.action == action and eval_expr(c.guard, env)
                ]
                if not enabled:
                    blocked = True
                    break
                parts.append(enabled)
            if blocked:
                continue
            combos: list[tuple[float, list]] = [(1.0, [])]
            for enabled in parts:
                combos = [
                    (rate * c.rate, ups + list(c.update))
                    for rate, ups in combos
                    for c in enabled
                ]
            for rate, ups in combos:
                successors.append((apply(state, ups), rate, action))
        for target, rate, action in successors:
            if target not in index:
                if len(states) >= state_cap:
                    raise RuntimeError(f"state cap {state_cap} exceeded")
                index[target] = len(states)
                states.append(target)
                frontier.append(target)
            edges.append(ChainEdge(state, target, rate, action))
    return Chain(var_names, initial, states, edges)


def edge_multiset(chain: Chain) -> dict[tuple, int]:
    out: dict[tuple, int] = {}
    for e in chain.edges:
        key = (e.source, e.target, repr(e.rate))
        out[key] = out.get(key, 0) + 1
    return out


def csl_identifiers(property_text: str) -> set[str]:
    """Bare identifiers in a property line, for symbol cross-checks."""
    names = set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", property_text))
    return names - {"P", "U", "true", "false"}
