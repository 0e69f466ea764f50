"""Text syntax for ``.vta`` programs.

    program := decl* "process" proc
    decl    := "contract" NAME "=" "<" NAT "," NAT "," NAT ">"
    proc    := term ("||" term)*
    term    := "0" | "(" "new" NAME (":" contract)? ")" term
             | "!" cap "." term | cap "." term | nameref "[" proc "]"
             | "tick" | "tock" | "(" proc ")"
    cap     := "in" NAME | "out" NAME | "open" NAME
             | "consume" | "~consume" | "tick"
    nameref := NAME | "~" NAME

``//`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict

from .syntax import (
    FRESH, FROZEN, RESERVED_CURR, Ambient, Consume, Contract, In, Open, Out,
    Prefix, Process, Repl, Restrict, TickAccept, TICK, TOCK, ZERO, par,
)

KEYWORDS = {"new", "in", "out", "open", "consume", "tick", "tock",
            "contract", "process"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<par>\|\|)
  | (?P<nat>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<punct>[()\[\]<>,.!~=:])
""", re.VERBOSE)


class ParseError(Exception):
    def __init__(self, message, line, column, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{line}:{column}: {message}{detail}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'nat', 'name', 'kw', 'sym', 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        chunk = m.group()
        if kind == "ident":
            tokens.append(Token("kw" if chunk in KEYWORDS else "name", chunk, line, col))
        elif kind == "nat":
            tokens.append(Token("nat", chunk, line, col))
        elif kind in ("par", "punct"):
            tokens.append(Token("sym", chunk, line, col))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", line, col))
    return tokens


@dataclass
class Program:
    contracts: Dict[str, Contract] = field(default_factory=dict)
    main: Process = ZERO

    def render(self) -> str:
        lines = [f"contract {n} = {t}" for n, t in self.contracts.items()]
        from .syntax import render
        lines.append(f"process {render(self.main)}")
        return "\n".join(lines) + "\n"


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, expected, tok=None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.line, tok.column, expected)

    def at(self, text):
        return self.tok.kind in ("sym", "kw") and self.tok.text == text

    def expect(self, text):
        if not self.at(text):
            self.error([repr(text)])
        self.i += 1

    def name(self) -> str:
        tok = self.tok
        if tok.kind != "name":
            self.error(["NAME"])
        if tok.text == RESERVED_CURR:
            raise ParseError(f"{RESERVED_CURR!r} is reserved", tok.line, tok.column)
        self.i += 1
        return tok.text

    def nat(self) -> int:
        if self.tok.kind != "nat":
            self.error(["NAT"])
        value = int(self.tok.text)
        self.i += 1
        return value

    def contract(self) -> Contract:
        self.expect("<")
        rho = self.nat()
        self.expect(",")
        kappa = self.nat()
        self.expect(",")
        tau = self.nat()
        self.expect(">")
        return Contract(rho, kappa, tau)

    # proc := term ("||" term)*
    def proc(self) -> Process:
        terms = [self.term()]
        while self.at("||"):
            self.i += 1
            terms.append(self.term())
        return par(*terms)

    def cap(self):
        tok = self.tok
        if tok.kind == "kw" and tok.text in ("in", "out", "open"):
            self.i += 1
            n = self.name()
            return {"in": In, "out": Out, "open": Open}[tok.text](n)
        if self.at("consume"):
            self.i += 1
            return Consume(FRESH)
        if self.at("~") and self.peek().kind == "kw" and self.peek().text == "consume":
            self.i += 2
            return Consume(FROZEN)
        if self.at("tick"):
            self.i += 1
            return TickAccept()
        self.error(["in", "out", "open", "consume", "~consume", "tick"])

    def term(self) -> Process:
        tok = self.tok
        if tok.kind == "nat":
            if tok.text != "0":
                self.error(["0"])
            self.i += 1
            return ZERO
        if self.at("("):
            if self.peek().kind == "kw" and self.peek().text == "new":
                self.i += 2
                n = self.name()
                ann = None
                if self.at(":"):
                    self.i += 1
                    ann = self.contract()
                self.expect(")")
                return Restrict(n, ann, self.term())
            self.i += 1
            inner = self.proc()
            self.expect(")")
            return inner
        if self.at("!"):
            self.i += 1
            cap = self.cap()
            self.expect(".")
            return Repl(cap, self.term())
        if self.at("tick"):
            if self.peek().kind == "sym" and self.peek().text == ".":
                self.i += 2
                return Prefix(TickAccept(), self.term())
            self.i += 1
            return TICK
        if self.at("tock"):
            self.i += 1
            return TOCK
        if tok.kind == "kw" and tok.text in ("in", "out", "open", "consume"):
            cap = self.cap()
            self.expect(".")
            return Prefix(cap, self.term())
        if self.at("~"):
            nxt = self.peek()
            if nxt.kind == "kw" and nxt.text == "consume":
                cap = self.cap()
                self.expect(".")
                return Prefix(cap, self.term())
            self.i += 1
            n = self.name()
            return self._ambient(n, FROZEN)
        if tok.kind == "name":
            n = self.name()
            return self._ambient(n, FRESH)
        self.error(["0", "(", "!", "in", "out", "open", "consume", "~consume",
                    "tick", "tock", "~", "NAME"])

    def _ambient(self, n, mark) -> Ambient:
        self.expect("[")
        body = self.proc()
        self.expect("]")
        return Ambient(n, mark, body)

    def finish(self):
        if self.tok.kind != "eof":
            self.error(["end of input", "'||'"])


def parse_process(text: str) -> Process:
    p = _Parser(text)
    result = p.proc()
    p.finish()
    return result


def parse_program(text: str) -> Program:
    p = _Parser(text)
    contracts = {}
    while p.at("contract"):
        start = p.tok
        p.i += 1
        n = p.name()
        p.expect("=")
        t = p.contract()
        if n in contracts:
            raise ParseError(f"duplicate contract for {n!r}", start.line, start.column)
        contracts[n] = t
    if not p.at("process"):
        p.error(["contract", "process"])
    p.i += 1
    main = p.proc()
    p.finish()
    return Program(contracts, main)
