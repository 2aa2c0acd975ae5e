"""Sparse multivariate polynomials over Q(i) in the chart coordinates x1..xN."""

from __future__ import annotations

from functools import lru_cache
from math import comb

from gmpy2 import mpq

from .linalg import Matrix, shape
from .errors import StructuralError
from .scalar import ONE, ZERO, Scalar, as_scalar

__all__ = [
    "BasePoly",
    "MultiIndex",
    "poly_mul",
    "poly_diff",
    "poly_subst_linear",
    "poly_compose",
    "monomial_subst_linear",
]

MultiIndex = tuple[int, ...]


class BasePoly:
    """Immutable sparse polynomial ``{exponent tuple: Scalar}``.

    Zero coefficients are never stored, so two polynomials are equal exactly
    when their term dictionaries are.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        if terms:
            for mono, c in terms.items():
                mono = tuple(mono)
                if len(mono) != nvars:
                    raise StructuralError(f"monomial {mono} does not have {nvars} exponents")
                if any(e < 0 for e in mono):
                    raise StructuralError(f"negative exponent in {mono}")
                c = as_scalar(c)
                if c:
                    clean[mono] = clean.get(mono, ZERO) + c
                    if not clean[mono]:
                        del clean[mono]
        self.terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, nvars: int, terms: dict) -> BasePoly:
        # caller guarantees canonical form
        p = object.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> BasePoly:
        return cls._wrap(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c=1) -> BasePoly:
        c = as_scalar(c)
        return cls._wrap(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def variable(cls, nvars: int, index: int) -> BasePoly:
        """The coordinate x_{index+1} (0-based index)."""
        if not 0 <= index < nvars:
            raise StructuralError(f"variable index {index} out of range for {nvars} variables")
        mono = tuple(int(i == index) for i in range(nvars))
        return cls._wrap(nvars, {mono: ONE})

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, BasePoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Scalar)):
            return self == BasePoly.constant(self.nvars, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def _check(self, other: BasePoly):
        if self.nvars != other.nvars:
            raise StructuralError(f"variable-count mismatch: {self.nvars} vs {other.nvars}")

    def _coerce(self, other) -> BasePoly:
        if isinstance(other, BasePoly):
            self._check(other)
            return other
        return BasePoly.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for mono, c in other.terms.items():
            v = out.get(mono)
            if v is None:
                out[mono] = c
            else:
                v = v + c
                if v:
                    out[mono] = v
                else:
                    del out[mono]
        return BasePoly._wrap(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return BasePoly._wrap(self.nvars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, BasePoly):
            return poly_mul(self, other)
        c = as_scalar(other)
        if not c:
            return BasePoly.zero(self.nvars)
        return BasePoly._wrap(self.nvars, {m: v * c for m, v in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        c = as_scalar(other)
        return self * (ONE / c)

    def __pow__(self, k: int):
        if k < 0:
            raise StructuralError("negative powers are not polynomials")
        out = BasePoly.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(m) for m in self.terms}) <= 1

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_term(self) -> Scalar:
        return self.terms.get((0,) * self.nvars, ZERO)

    def coefficient(self, mono) -> Scalar:
        return self.terms.get(tuple(mono), ZERO)

    def sorted_terms(self) -> list[tuple[MultiIndex, Scalar]]:
        """Terms in graded-lex order, highest degree first."""
        return sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0])))

    def diff(self, var: int) -> BasePoly:
        return poly_diff(self, var)

    def evaluate(self, point) -> Scalar:
        if len(point) != self.nvars:
            raise StructuralError(f"point has {len(point)} coordinates, expected {self.nvars}")
        point = [as_scalar(v) for v in point]
        total = ZERO
        for mono, c in self.terms.items():
            term = c
            for v, e in zip(point, mono):
                if e:
                    term = term * v**e
            total = total + term
        return total

    def map_coefficients(self, fn) -> BasePoly:
        return BasePoly(self.nvars, {m: fn(c) for m, c in self.terms.items()})

    def __repr__(self):
        from .text import format_poly

        return f"BasePoly({format_poly(self)!r})"

    def __str__(self):
        from .text import format_poly

        return format_poly(self)


def poly_mul(a: BasePoly, b: BasePoly) -> BasePoly:
    a._check(b)
    if not a.terms or not b.terms:
        return BasePoly.zero(a.nvars)
    out: dict = {}
    get = out.get
    for ma, ca in a.terms.items():
        for mb, cb in b.terms.items():
            m = tuple(x + y for x, y in zip(ma, mb))
            v = get(m)
            out[m] = ca * cb if v is None else v + ca * cb
    return BasePoly._wrap(a.nvars, {m: c for m, c in out.items() if c})


def poly_diff(a: BasePoly, var: int) -> BasePoly:
    if not 0 <= var < a.nvars:
        raise StructuralError(f"variable index {var} out of range for {a.nvars} variables")
    out = {}
    for mono, c in a.terms.items():
        e = mono[var]
        if e:
            out[mono[:var] + (e - 1,) + mono[var + 1 :]] = c * e
    return BasePoly._wrap(a.nvars, out)


@lru_cache(maxsize=1 << 16)
def monomial_subst_linear(mono: MultiIndex, m: Matrix) -> tuple[tuple[MultiIndex, mpq], ...]:
    """Expand prod_i (sum_j m[i][j] x_j)^{mono_i} into rational monomial terms."""
    n = len(mono)
    acc: dict = {(0,) * n: mpq(1)}
    for i, e in enumerate(mono):
        if not e:
            continue
        row = [(j, v) for j, v in enumerate(m[i]) if v]
        # multinomial expansion of (sum_j row_j x_j)^e
        power: dict = {}
        for ks in _compositions(e, len(row)):
            coeff = mpq(1)
            rest = e
            mon = [0] * n
            for (j, v), k in zip(row, ks):
                if k:
                    coeff *= comb(rest, k) * v**k
                    mon[j] += k
                rest -= k
            power[tuple(mon)] = power.get(tuple(mon), mpq(0)) + coeff
        nxt: dict = {}
        for ma, ca in acc.items():
            for mb, cb in power.items():
                mm = tuple(x + y for x, y in zip(ma, mb))
                nxt[mm] = nxt.get(mm, mpq(0)) + ca * cb
        acc = nxt
    return tuple((mon, c) for mon, c in acc.items() if c)


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def poly_subst_linear(a: BasePoly, m: Matrix) -> BasePoly:
    """The polynomial x -> a(M x)."""
    if shape(m) != (a.nvars, a.nvars):
        raise StructuralError(f"matrix of shape {shape(m)} does not act on {a.nvars} variables")
    out: dict = {}
    for mono, c in a.terms.items():
        for mm, r in monomial_subst_linear(mono, m):
            out[mm] = out.get(mm, ZERO) + c * Scalar._raw(r, mpq(0))
    return BasePoly._wrap(a.nvars, {k: v for k, v in out.items() if v})


def poly_compose(relation: BasePoly, polys: list[BasePoly]) -> BasePoly:
    """Substitute ``polys[i]`` for the i-th variable of ``relation``."""
    if relation.nvars != len(polys):
        raise StructuralError(f"relation has {relation.nvars} variables but {len(polys)} polynomials given")
    if not polys:
        raise StructuralError("nothing to substitute")
    nv = polys[0].nvars
    total = BasePoly.zero(nv)
    cache: dict = {}
    for mono, c in relation.terms.items():
        term = BasePoly.constant(nv, c)
        for i, e in enumerate(mono):
            if e:
                key = (i, e)
                if key not in cache:
                    cache[key] = polys[i] ** e
                term = term * cache[key]
        total = total + term
    return total
