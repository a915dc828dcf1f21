"""STL formula AST, text parser, and pretty printer.

Formulas are trees over named real-valued signal channels.  Atomic
predicates are affine, ``a * channel + b >= 0``; ``<=`` atoms desugar by
negating the affine map.  Temporal operators carry closed time intervals
in seconds which the semantics map onto sample indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class FormulaError(ValueError):
    """Malformed formula (bad interval, unknown channel, ...)."""


class ParseError(FormulaError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


def _check_interval(t1, t2):
    if not (0.0 <= t1 <= t2):
        raise FormulaError(f"malformed interval [{t1},{t2}]: need 0 <= t1 <= t2")


@dataclass(frozen=True)
class Predicate:
    """Affine atom a*y[channel] + b >= 0.

    ``scale`` records the normalization divided out of (a, b) at
    construction time; it is reporting metadata and does not enter
    evaluation.
    """

    channel: str
    a: float = 1.0
    b: float = 0.0
    scale: float = field(default=1.0, compare=False)


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Always:
    t1: float
    t2: float
    child: "Formula"

    def __post_init__(self):
        _check_interval(self.t1, self.t2)


@dataclass(frozen=True)
class Eventually:
    t1: float
    t2: float
    child: "Formula"

    def __post_init__(self):
        _check_interval(self.t1, self.t2)


@dataclass(frozen=True)
class Until:
    t1: float
    t2: float
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        _check_interval(self.t1, self.t2)


Formula = Predicate | Not | And | Or | Always | Eventually | Until


def channels_of(f: Formula) -> set:
    """All channel names referenced by the formula."""
    if isinstance(f, Predicate):
        return {f.channel}
    if isinstance(f, Not):
        return channels_of(f.child)
    if isinstance(f, (And, Or)):
        out = set()
        for c in f.children:
            out |= channels_of(c)
        return out
    if isinstance(f, (Always, Eventually)):
        return channels_of(f.child)
    if isinstance(f, Until):
        return channels_of(f.left) | channels_of(f.right)
    raise TypeError(f"not a formula node: {f!r}")


# ---------------------------------------------------------------------------
# pretty printer

def _num(x: float) -> str:
    return repr(float(x))


def format_formula(f: Formula) -> str:
    """Render a formula in the textual grammar accepted by parse_formula."""
    if isinstance(f, Predicate):
        return f"{_num(f.a)}*{f.channel} >= {_num(-f.b)}"
    if isinstance(f, Not):
        return f"!({format_formula(f.child)})"
    if isinstance(f, And):
        return "(" + " & ".join(format_formula(c) for c in f.children) + ")"
    if isinstance(f, Or):
        return "(" + " | ".join(format_formula(c) for c in f.children) + ")"
    if isinstance(f, Always):
        return f"G[{_num(f.t1)},{_num(f.t2)}]({format_formula(f.child)})"
    if isinstance(f, Eventually):
        return f"F[{_num(f.t1)},{_num(f.t2)}]({format_formula(f.child)})"
    if isinstance(f, Until):
        return (f"({format_formula(f.left)} U[{_num(f.t1)},{_num(f.t2)}] "
                f"{format_formula(f.right)})")
    raise TypeError(f"not a formula node: {f!r}")


# ---------------------------------------------------------------------------
# parser

class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind},{self.text!r})"


def _tokenize(text):
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    two_char = (">=", "<=")
    single = "&|!()[],*+-"
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if text[i:i + 2] in two_char:
            toks.append(_Token("cmp", text[i:i + 2], line, col))
            i += 2
            col += 2
            continue
        if c in single:
            toks.append(_Token(c, c, line, col))
            i += 1
            col += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE" or
                             (text[j] in "+-" and text[j - 1] in "eE")):
                j += 1
            toks.append(_Token("num", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    """Recursive descent over: Or < And < Until < unary (!, G, F) < atom."""

    def __init__(self, tokens, channel_names):
        self.toks = tokens
        self.pos = 0
        self.channels = channel_names

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t.kind != kind:
            raise ParseError(f"expected {kind!r}, got {t.text!r}", t.line, t.col)
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError(msg, tok.line, tok.col)

    def parse(self):
        f = self.or_expr()
        t = self.peek()
        if t.kind != "eof":
            self.error(f"trailing input {t.text!r}")
        return f

    def or_expr(self):
        parts = [self.and_expr()]
        while self.peek().kind == "|":
            self.next()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_expr(self):
        parts = [self.until_expr()]
        while self.peek().kind == "&":
            self.next()
            parts.append(self.until_expr())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def until_expr(self):
        left = self.unary()
        t = self.peek()
        if t.kind == "name" and t.text == "U":
            self.next()
            t1, t2 = self.interval()
            right = self.unary()
            try:
                return Until(t1, t2, left, right)
            except FormulaError as e:
                self.error(str(e), t)
        return left

    def interval(self):
        self.expect("[")
        t1 = self.number()
        self.expect(",")
        t2 = self.number()
        self.expect("]")
        return t1, t2

    def number(self):
        sign = 1.0
        if self.peek().kind == "-":
            self.next()
            sign = -1.0
        t = self.expect("num")
        try:
            return sign * float(t.text)
        except ValueError:
            raise ParseError(f"bad number {t.text!r}", t.line, t.col)

    def unary(self):
        t = self.peek()
        if t.kind == "!":
            self.next()
            return Not(self.unary())
        if t.kind == "name" and t.text in ("G", "F") and \
                self.toks[self.pos + 1].kind == "[":
            self.next()
            t1, t2 = self.interval()
            child = self.unary()
            cls = Always if t.text == "G" else Eventually
            try:
                return cls(t1, t2, child)
            except FormulaError as e:
                self.error(str(e), t)
        if t.kind == "(":
            self.next()
            f = self.or_expr()
            self.expect(")")
            return f
        return self.atom()

    def atom(self):
        # <lin-expr> (>=|<=) <signed number>, restricted to one channel;
        # a bare channel name is sugar for `channel >= 0`.
        start = self.peek()
        coeff, const, channel = self.lin_expr()
        if channel is None:
            self.error("atom has no channel", start)
        t = self.peek()
        if t.kind != "cmp":
            if channel is not None and coeff == 1.0 and const == 0.0:
                return self._pred(channel, 1.0, 0.0, start)
            self.error("expected '>=' or '<='", t)
        op = self.next().text
        rhs = self.number()
        if op == ">=":
            a, b = coeff, const - rhs
        else:
            a, b = -coeff, rhs - const
        return self._pred(channel, a, b, start)

    def _pred(self, channel, a, b, tok):
        if channel not in self.channels:
            self.error(f"unknown channel {channel!r}", tok)
        return Predicate(channel, a, b)

    def lin_expr(self):
        coeff, const, channel = 0.0, 0.0, None
        sign = 1.0
        while True:
            c, k, ch = self.term(sign)
            const += k
            if ch is not None:
                if channel is not None and ch != channel:
                    self.error(f"atom references two channels "
                               f"({channel!r} and {ch!r})")
                channel = ch
                coeff += c
            t = self.peek()
            if t.kind == "+":
                self.next()
                sign = 1.0
            elif t.kind == "-":
                self.next()
                sign = -1.0
            else:
                return coeff, const, channel

    def term(self, sign):
        t = self.peek()
        if t.kind == "-":
            self.next()
            return self.term(-sign)
        if t.kind == "num":
            x = sign * float(self.next().text)
            if self.peek().kind == "*":
                self.next()
                name = self.expect("name")
                return x, 0.0, name.text
            return 0.0, x, None
        if t.kind == "name":
            self.next()
            return sign, 0.0, t.text
        self.error(f"expected a term, got {t.text!r}")


def parse_formula(text: str, channel_names) -> Formula:
    """Parse formula text against a known channel set.

    Raises ParseError (with line/column) on syntax errors, unknown
    channels, or malformed intervals.
    """
    return _Parser(_tokenize(text), set(channel_names)).parse()
