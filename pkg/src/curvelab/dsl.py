"""Tiny surface-definition language.

A source file looks like::

    # inverse stereographic projection
    dim 3;
    f = (2*x/(1+x^2+y^2), 2*y/(1+x^2+y^2), (1-x^2-y^2)/(1+x^2+y^2));
    domain x in [-2, 2], y in [-2, 2];

Expressions are parsed into nested tuples so that a parsed spec is an
immutable, hashable value::

    ("num", 2.0)  ("var", "x")  ("neg", e)  ("pow", e, 3)
    ("add" | "sub" | "mul" | "div", a, b)  ("call", "sin", e)
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import (
    ArityError,
    DimensionMismatchError,
    DSLSyntaxError,
    UnknownFunctionError,
    UnknownIdentifierError,
)

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")
VARIABLES = ("x", "y")
CONSTANTS = {"pi": math.pi}
KEYWORDS = ("dim", "f", "domain", "periodic", "normalize", "name", "in")

DEFAULT_DOMAIN = ((-1.0, 1.0), (-1.0, 1.0))

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),;=\[\]])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


@dataclass(frozen=True)
class SurfaceSpec:
    """Parsed immersion U -> R^dim, optionally normalized onto the unit sphere."""

    name: str
    ambient_dim: int
    components: tuple
    domain: tuple = DEFAULT_DOMAIN
    periods: tuple | None = None
    normalize: bool = False
    source: str = ""

    @property
    def periodic(self) -> bool:
        return self.periods is not None

    def with_components(self, components, **changes) -> "SurfaceSpec":
        """Copy with new expression trees (used by reparametrisations)."""
        fields = dict(
            name=self.name,
            ambient_dim=len(components),
            components=tuple(components),
            domain=self.domain,
            periods=self.periods,
            normalize=self.normalize,
            source="",
        )
        fields.update(changes)
        return SurfaceSpec(**fields)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg, tok=None, cls=DSLSyntaxError):
        tok = tok or self.tok
        where = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise cls(f"{msg}, found {where}", tok.pos, self.text)

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.error(f"expected {text!r}")

    def number(self) -> float:
        """A constant expression such as ``2*pi*sqrt(2)``."""
        tok = self.tok
        node = self.expr()
        if _has_variables(node):
            self.error("expected a constant expression", tok)
        from .jet import evaluate_expr

        value = float(evaluate_expr(node, 0.0, 0.0))
        if not math.isfinite(value):
            self.error("constant expression is not finite", tok)
        return value

    # statements
    def parse(self) -> SurfaceSpec:
        dim = comps = domain = periods = name = None
        normalize = False
        f_tok = None
        while self.tok.kind != "eof":
            tok = self.tok
            if tok.kind != "ident" or tok.text not in KEYWORDS[:-1]:
                self.error("expected a statement (dim, f, domain, periodic, normalize, name)")
            seen = {"dim": dim, "f": comps, "domain": domain, "periodic": periods, "name": name}
            if seen.get(tok.text) is not None or (tok.text == "normalize" and normalize):
                self.error(f"duplicate {tok.text!r} statement", tok)
            self.i += 1
            if tok.text == "dim":
                if self.tok.kind != "num" or not re.fullmatch(r"\d+", self.tok.text):
                    self.error("expected an integer dimension")
                dim = int(self.tok.text)
                if dim < 1:
                    self.error("dimension must be positive")
                self.i += 1
            elif tok.text == "f":
                f_tok = tok
                self.expect("=")
                self.expect("(")
                comps = [self.expr()]
                while self.accept(","):
                    comps.append(self.expr())
                if not self.accept(")"):
                    self.error("expected ',' or ')' to close the component list")
            elif tok.text == "domain":
                domain = self.domain()
            elif tok.text == "periodic":
                periods = (self.number(), self.number())
                if min(periods) <= 0:
                    self.error("periods must be positive", tok)
            elif tok.text == "normalize":
                normalize = True
            elif tok.text == "name":
                if self.tok.kind != "ident":
                    self.error("expected a name")
                name = self.tok.text
                self.i += 1
            # the final statement may omit its semicolon
            if not self.accept(";") and self.tok.kind != "eof":
                self.error("expected ';'")
        if dim is None:
            self.error("missing 'dim' statement")
        if comps is None:
            self.error("missing 'f = (...)' statement")
        if len(comps) != dim:
            raise DimensionMismatchError(
                f"dim {dim} declared but {len(comps)} components given", f_tok.pos, self.text
            )
        if domain is None:
            domain = ((0.0, periods[0]), (0.0, periods[1])) if periods else DEFAULT_DOMAIN
        return SurfaceSpec(
            name=name or "unnamed",
            ambient_dim=dim,
            components=tuple(comps),
            domain=domain,
            periods=periods,
            normalize=normalize,
            source=self.text,
        )

    def domain(self):
        out = {}
        for k in range(2):
            if k:
                self.expect(",")
            tok = self.tok
            if tok.text not in VARIABLES or tok.text in out:
                self.error("expected 'x' or 'y'")
            self.i += 1
            self.expect("in")
            self.expect("[")
            a = self.number()
            self.expect(",")
            b = self.number()
            self.expect("]")
            if not b > a:
                self.error("empty interval", tok)
            out[tok.text] = (a, b)
        return out["x"], out["y"]

    # expressions: sum -> term -> unary -> power -> atom
    def expr(self):
        node = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = "add" if self.tok.text == "+" else "sub"
            self.i += 1
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = "mul" if self.tok.text == "*" else "div"
            self.i += 1
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.accept("-"):
            return ("neg", self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            tok = self.tok
            sign = -1 if self.accept("-") else 1
            if self.accept("("):
                sign = sign * (-1 if self.accept("-") else 1)
                n = self._int_exponent()
                self.expect(")")
            else:
                n = self._int_exponent()
            if self.tok.kind == "op" and self.tok.text == "^":
                self.error("chained powers need parentheses", tok)
            return ("pow", base, sign * n)
        return base

    def _int_exponent(self) -> int:
        tok = self.tok
        if tok.kind != "num" or not re.fullmatch(r"\d+", tok.text):
            self.error("exponent must be an integer literal")
        self.i += 1
        return int(tok.text)

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return ("num", float(tok.text))
        if tok.kind == "ident":
            self.i += 1
            if tok.text in VARIABLES:
                return ("var", tok.text)
            if tok.text in CONSTANTS:
                return ("num", CONSTANTS[tok.text])
            if self.tok.text == "(" and self.tok.kind == "op":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {tok.text!r}", tok.pos, self.text)
                self.i += 1
                arg = self.expr()
                if self.tok.text == ",":
                    raise ArityError(f"{tok.text} takes exactly one argument", self.tok.pos, self.text)
                self.expect(")")
                return ("call", tok.text, arg)
            if tok.text in FUNCTIONS:
                raise ArityError(f"{tok.text} needs a parenthesized argument", tok.pos, self.text)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.pos, self.text)
        if self.accept("("):
            node = self.expr()
            if not self.accept(")"):
                self.error("expected ')'")
            return node
        self.error("expected an expression")


def _has_variables(node) -> bool:
    if node[0] == "var":
        return True
    return any(isinstance(ch, tuple) and _has_variables(ch) for ch in node[1:])


def parse_surface(text: str) -> SurfaceSpec:
    """Parse DSL source into a :class:`SurfaceSpec`."""
    return _Parser(text).parse()


def parse_expr(text: str):
    """Parse a single expression (handy for tests and substitutions)."""
    p = _Parser(text)
    node = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected trailing input")
    return node


def substitute(node, x=None, y=None):
    """Replace the variables of an expression tree by other trees."""
    repl = {"x": x, "y": y}
    tag = node[0]
    if tag == "var":
        return repl[node[1]] if repl[node[1]] is not None else node
    if tag == "num":
        return node
    if tag == "neg":
        return ("neg", substitute(node[1], x, y))
    if tag == "pow":
        return ("pow", substitute(node[1], x, y), node[2])
    if tag == "call":
        return ("call", node[1], substitute(node[2], x, y))
    return (tag, substitute(node[1], x, y), substitute(node[2], x, y))


def to_source(node) -> str:
    """Render an expression tree back to DSL text (fully parenthesized)."""
    tag = node[0]
    if tag == "num":
        return repr(node[1]) if node[1] >= 0 else f"({node[1]!r})"
    if tag == "var":
        return node[1]
    if tag == "neg":
        return f"(-{to_source(node[1])})"
    if tag == "pow":
        n = node[2]
        return f"({to_source(node[1])})^{n}" if n >= 0 else f"({to_source(node[1])})^(-{-n})"
    if tag == "call":
        return f"{node[1]}({to_source(node[2])})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[tag]
    return f"({to_source(node[1])} {sym} {to_source(node[2])})"


def spec_to_source(spec: SurfaceSpec) -> str:
    lines = [f"name {spec.name};", f"dim {spec.ambient_dim};"]
    comps = ",\n     ".join(to_source(c) for c in spec.components)
    lines.append(f"f = ({comps});")
    (x0, x1), (y0, y1) = spec.domain
    lines.append(f"domain x in [{x0!r}, {x1!r}], y in [{y0!r}, {y1!r}];")
    if spec.periods:
        lines.append(f"periodic {spec.periods[0]!r} {spec.periods[1]!r};")
    if spec.normalize:
        lines.append("normalize;")
    return "\n".join(lines) + "\n"
