"""Textual syntax for polynomials and Weyl forms.

Grammar (whitespace-insensitive)::

    expr   := ['+'|'-'] term (('+'|'-') term)*
    term   := factor (('*' | '/' | '^') factor)*      # '^' between dx's is a wedge
    factor := atom ['^' INT]
    atom   := INT | 'i' | 'L' | 'x'INT | 'y'INT | 'dx'INT | '(' expr ')'

Division is only allowed by constants.  ``L`` stands for lambda.
"""

from __future__ import annotations

import re

from .errors import ParseError
from .poly import BasePoly
from .scalar import ONE, ZERO, Scalar
from .weyl import TruncationPolicy, WeylForm, wedge_sign

__all__ = ["parse_poly", "format_poly", "parse_weyl", "format_weyl"]

_TOKEN = re.compile(r"\s*(?:(\d+)|(dx\d+|x\d+|y\d+)|([iL])|([-+*/^()]))")

# A parsed value is {(k, xmono, ymono, J): Scalar}; products are commutative in
# x, y and lambda and anticommuting in dx.


class _Parser:
    def __init__(self, text: str, dim: int, allow_weyl: bool):
        self.text = text
        self.dim = dim
        self.allow_weyl = allow_weyl
        self.tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            m = _TOKEN.match(stripped, pos)
            if not m:
                bad = _skip_ws(stripped, pos)
                raise ParseError(f"unexpected character {stripped[bad]!r}", text, bad)
            start = m.start(m.lastindex)
            self.tokens.append((m.group(m.lastindex), m.lastindex, start))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message):
        raise ParseError(message, self.text, self.peek()[2])

    def parse(self):
        if not self.tokens:
            self.error("empty expression")
        value = self.expr()
        if self.i != len(self.tokens):
            self.error(f"unexpected token {self.peek()[0]!r}")
        return value

    def expr(self):
        tok, _, _ = self.peek()
        sign = 1
        if tok in ("+", "-"):
            self.take()
            sign = -1 if tok == "-" else 1
        value = self.term()
        if sign < 0:
            value = _neg(value)
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            rhs = self.term()
            value = _add(value, rhs if op == "+" else _neg(rhs))
        return value

    def term(self):
        value = self.factor()
        while True:
            tok, _, pos = self.peek()
            if tok == "*":
                self.take()
                value = _mul(value, self.factor())
            elif tok == "/":
                self.take()
                rhs = self.factor()
                c = _as_constant(rhs)
                if c is None:
                    raise ParseError("division by a non-constant", self.text, pos)
                if not c:
                    raise ParseError("division by zero", self.text, pos)
                value = _scale(value, ONE / c)
            elif tok == "^":
                # powers were consumed in factor(), so this '^' is a wedge
                self.take()
                nxt, _, npos = self.peek()
                if nxt is None or not nxt.startswith("dx"):
                    raise ParseError("'^' must be followed by an integer power or a dx", self.text, npos)
                rhs = self.factor()
                value = _mul(value, rhs)
            else:
                return value

    def factor(self):
        tok = self.peek()[0]
        value = self.atom()
        if self.peek()[0] == "^" and self.i + 1 < len(self.tokens) and self.tokens[self.i + 1][1] == 1:
            if tok is not None and tok.startswith("dx"):
                raise ParseError(f"{tok} cannot be raised to a power", self.text, self.peek()[2])
            self.take()
            exp = int(self.take()[0])
            out = _const(self.dim, ONE)
            for _ in range(exp):
                out = _mul(out, value)
            return out
        return value

    def atom(self):
        tok, kind, pos = self.take()
        if tok is None:
            raise ParseError("unexpected end of input", self.text, pos)
        if kind == 1:
            return _const(self.dim, Scalar(int(tok)))
        if tok == "i":
            return _const(self.dim, Scalar(0, 1))
        if tok == "L":
            if not self.allow_weyl:
                raise ParseError("lambda is not allowed in a base polynomial", self.text, pos)
            return {(1, (0,) * self.dim, (0,) * self.dim, ()): ONE}
        if kind == 2:
            name, idx = re.match(r"(dx|x|y)(\d+)", tok).groups()
            idx = int(idx)
            if not 1 <= idx <= self.dim:
                raise ParseError(f"variable {tok} out of range 1..{self.dim}", self.text, pos)
            if name != "x" and not self.allow_weyl:
                raise ParseError(f"{tok} is not allowed in a base polynomial", self.text, pos)
            unit = tuple(int(i == idx - 1) for i in range(self.dim))
            zero = (0,) * self.dim
            if name == "x":
                return {(0, unit, zero, ()): ONE}
            if name == "y":
                return {(0, zero, unit, ()): ONE}
            return {(0, zero, zero, (idx - 1,)): ONE}
        if tok == "(":
            value = self.expr()
            if self.take()[0] != ")":
                self.i -= 1
                self.error("expected ')'")
            return value
        raise ParseError(f"unexpected token {tok!r}", self.text, pos)


def _skip_ws(text, pos):
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def _const(dim, c):
    return {(0, (0,) * dim, (0,) * dim, ()): c} if c else {}


def _as_constant(v):
    if not v:
        return ZERO
    if len(v) == 1:
        (k, xm, ym, J), c = next(iter(v.items()))
        if not k and not any(xm) and not any(ym) and not J:
            return c
    return None


def _add(a, b):
    out = dict(a)
    for key, c in b.items():
        s = out.get(key, ZERO) + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return out


def _neg(a):
    return {key: -c for key, c in a.items()}


def _scale(a, c):
    return {key: v * c for key, v in a.items() if v * c}


def _mul(a, b):
    out = {}
    for (k1, x1, y1, J1), c1 in a.items():
        for (k2, x2, y2, J2), c2 in b.items():
            sign, J = wedge_sign(J1, J2)
            if not sign:
                continue
            key = (k1 + k2, tuple(p + q for p, q in zip(x1, x2)), tuple(p + q for p, q in zip(y1, y2)), J)
            c = c1 * c2
            if sign < 0:
                c = -c
            s = out.get(key, ZERO) + c
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def parse_poly(text: str, nvars: int) -> BasePoly:
    """Parse a polynomial in x1..x{nvars} (no y, dx or L)."""
    value = _Parser(text, nvars, allow_weyl=False).parse()
    return BasePoly(nvars, {xm: c for (_, xm, _, _), c in value.items()})


def parse_weyl(text: str, policy: TruncationPolicy) -> WeylForm:
    """Parse a Weyl form; terms above the truncation are rejected, not dropped."""
    value = _Parser(text, policy.dim, allow_weyl=True).parse()
    grouped: dict = {}
    for (k, xm, ym, J), c in value.items():
        if sum(ym) + 2 * k > policy.n_max:
            raise ParseError(
                f"term of Fedosov degree {sum(ym) + 2 * k} exceeds n_max={policy.n_max}", text, len(text)
            )
        grouped.setdefault((k, ym, J), {})[xm] = c
    return WeylForm(policy, {key: BasePoly(policy.dim, t) for key, t in grouped.items()})


# -- formatting -------------------------------------------------------------------


def _negative(c: Scalar) -> bool:
    return c.re < 0 or (c.re == 0 and c.im < 0)


def _monomial_factors(k, xm, ym, J) -> list[str]:
    parts = []
    if k:
        parts.append("L" if k == 1 else f"L^{k}")
    for name, mono in (("x", xm), ("y", ym)):
        for i, e in enumerate(mono):
            if e:
                parts.append(f"{name}{i + 1}" if e == 1 else f"{name}{i + 1}^{e}")
    if J:
        parts.append("^".join(f"dx{j + 1}" for j in J))
    return parts


def _format_terms(entries) -> str:
    """entries: list of (Scalar, factor strings) in output order."""
    if not entries:
        return "0"
    out = []
    for idx, (c, factors) in enumerate(entries):
        neg = _negative(c)
        a = -c if neg else c
        if factors and a == ONE:
            body = "*".join(factors)
        else:
            body = "*".join([str(a)] + factors)
        if idx == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def format_poly(p: BasePoly, names: str = "x") -> str:
    entries = []
    for mono, c in p.sorted_terms():
        factors = [f"{names}{i + 1}" if e == 1 else f"{names}{i + 1}^{e}" for i, e in enumerate(mono) if e]
        entries.append((c, factors))
    return _format_terms(entries)


def format_weyl(w: WeylForm) -> str:
    entries = []
    for (k, alpha, J), p in w.sorted_items():
        for xm, c in p.sorted_terms():
            entries.append((c, _monomial_factors(k, xm, alpha, J)))
    return _format_terms(entries)
