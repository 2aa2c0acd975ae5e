"""Truncated Weyl-algebra valued forms over a linear symplectic chart.

A :class:`WeylForm` is a finite sum of terms

    coefficient(x) * lambda^k * y^alpha * dx_{J[0]} ^ ... ^ dx_{J[-1]}

stored as ``{(k, alpha, J): BasePoly}``.  The Fedosov degree of such a term is
``|alpha| + 2k``; every form carries a :class:`TruncationPolicy` and silently
drops terms of Fedosov degree above ``policy.n_max``.

Fiber products use the Moyal product

    a o b = sum_m (-i lambda / 2)^m / m! * mu(Pi_hat^m (a (x) b))

with ``Pi^{j,n+j} = pi_sign`` and ``Pi^{n+j,j} = -pi_sign``.  The default
``pi_sign = -1`` makes ``Pi`` the inverse of the standard symplectic matrix,
which is what gives ``[x1, x_{n+1}]_star = +i lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import product as cartesian

from gmpy2 import mpq

from .errors import DivisibilityError, StructuralError
from .linalg import Matrix, exterior_power_row, inverse, shape, standard_symplectic
from .poly import BasePoly, monomial_subst_linear, poly_diff, poly_subst_linear
from .scalar import ONE, Scalar, as_scalar

__all__ = [
    "TruncationPolicy",
    "WeylForm",
    "HodgeParts",
    "moyal_mul",
    "graded_commutator",
    "i_lambda_commutator",
    "lambda_divide",
    "lambda_multiply",
    "delta",
    "delta_star",
    "delta_minus",
    "hodge_decompose",
    "symbol",
    "exterior_d",
    "act_group_element",
    "act_on_poly",
    "theta_form",
    "omega_form",
    "wedge_sign",
]

Key = tuple  # (k, alpha, J)


@dataclass(frozen=True)
class TruncationPolicy:
    n_max: int
    dim: int
    pi_sign: int = -1

    def __post_init__(self):
        if self.dim <= 0 or self.dim % 2:
            raise StructuralError(f"dim must be even and positive, got {self.dim}")
        if self.n_max < 0:
            raise StructuralError(f"n_max must be nonnegative, got {self.n_max}")
        if self.pi_sign not in (1, -1):
            raise StructuralError(f"pi_sign must be +1 or -1, got {self.pi_sign}")

    @property
    def n(self) -> int:
        return self.dim // 2

    def extended(self, extra: int) -> TruncationPolicy:
        return replace(self, n_max=self.n_max + extra)

    def with_n_max(self, n_max: int) -> TruncationPolicy:
        return replace(self, n_max=n_max)


def wedge_sign(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign and sorted index tuple of dx_a ^ dx_b; sign 0 if they overlap."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    sa = set(a)
    if sa.intersection(b):
        return 0, ()
    inversions = 0
    for q in b:
        inversions += sum(1 for p in a if p > q)
    return (-1 if inversions & 1 else 1), tuple(sorted(a + b))


def _normalize_form_index(J) -> tuple[int, tuple[int, ...]]:
    J = tuple(J)
    if len(set(J)) != len(J):
        return 0, ()
    sign = 1
    arr = list(J)
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


class WeylForm:
    """Immutable truncated section of Lambda^* W over a chart."""

    __slots__ = ("policy", "terms", "_hash")

    def __init__(self, policy: TruncationPolicy, terms=None):
        self.policy = policy
        dim = policy.dim
        clean: dict = {}
        for (k, alpha, J), coeff in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != dim:
                raise StructuralError(f"multi-index {alpha} does not have {dim} entries")
            if k < 0 or any(e < 0 for e in alpha):
                raise StructuralError(f"negative exponent in term {(k, alpha, J)}")
            if any(not 0 <= j < dim for j in J):
                raise StructuralError(f"form index out of range in {J}")
            sign, J = _normalize_form_index(J)
            if not sign or sum(alpha) + 2 * k > policy.n_max:
                continue
            if not isinstance(coeff, BasePoly):
                coeff = BasePoly.constant(dim, coeff)
            elif coeff.nvars != dim:
                raise StructuralError(f"coefficient has {coeff.nvars} variables, chart has {dim}")
            if sign < 0:
                coeff = -coeff
            key = (k, alpha, J)
            if key in clean:
                coeff = clean[key] + coeff
            if coeff:
                clean[key] = coeff
            else:
                clean.pop(key, None)
        self.terms = clean
        self._hash = None

    @classmethod
    def _wrap(cls, policy: TruncationPolicy, terms: dict) -> WeylForm:
        # caller guarantees canonical, truncated, nonzero terms
        w = object.__new__(cls)
        w.policy = policy
        w.terms = terms
        w._hash = None
        return w

    # constructors -----------------------------------------------------------

    @classmethod
    def zero(cls, policy: TruncationPolicy) -> WeylForm:
        return cls._wrap(policy, {})

    @classmethod
    def from_base(cls, f, policy: TruncationPolicy, k: int = 0) -> WeylForm:
        if not isinstance(f, BasePoly):
            f = BasePoly.constant(policy.dim, f)
        return cls(policy, {(k, (0,) * policy.dim, ()): f})

    @classmethod
    def from_series(cls, series, policy: TruncationPolicy) -> WeylForm:
        """Embed a lambda-series [f0, f1, ...] of base polynomials at y-degree 0."""
        return cls(policy, {(k, (0,) * policy.dim, ()): f for k, f in enumerate(series) if f})

    @classmethod
    def monomial(cls, policy, coeff=1, k=0, alpha=None, J=()) -> WeylForm:
        alpha = tuple(alpha) if alpha is not None else (0,) * policy.dim
        return cls(policy, {(k, alpha, tuple(J)): coeff})

    @classmethod
    def y(cls, policy: TruncationPolicy, index: int) -> WeylForm:
        """The fiber variable y_{index+1}."""
        alpha = tuple(int(i == index) for i in range(policy.dim))
        return cls.monomial(policy, 1, 0, alpha)

    @classmethod
    def dx(cls, policy: TruncationPolicy, index: int) -> WeylForm:
        return cls.monomial(policy, 1, 0, None, (index,))

    @classmethod
    def lam(cls, policy: TruncationPolicy, power: int = 1) -> WeylForm:
        return cls.monomial(policy, 1, power)

    # arithmetic -------------------------------------------------------------

    def _check(self, other: WeylForm):
        if self.policy != other.policy:
            raise StructuralError(f"policy mismatch: {self.policy} vs {other.policy}")

    def __add__(self, other):
        if not isinstance(other, WeylForm):
            return NotImplemented
        self._check(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for key, p in other.terms.items():
            cur = out.get(key)
            if cur is None:
                out[key] = p
            else:
                cur = cur + p
                if cur:
                    out[key] = cur
                else:
                    del out[key]
        return WeylForm._wrap(self.policy, out)

    def __neg__(self):
        return WeylForm._wrap(self.policy, {key: -p for key, p in self.terms.items()})

    def __sub__(self, other):
        if not isinstance(other, WeylForm):
            return NotImplemented
        return self + (-other)

    def __mul__(self, c):
        """Multiplication by a Scalar or a base polynomial (pointwise in x)."""
        if isinstance(c, WeylForm):
            raise TypeError("use moyal_mul for the fiberwise product of two WeylForms")
        if isinstance(c, BasePoly):
            out = {key: p * c for key, p in self.terms.items()}
        else:
            c = as_scalar(c)
            out = {key: p * c for key, p in self.terms.items()}
        return WeylForm._wrap(self.policy, {key: p for key, p in out.items() if p})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (ONE / as_scalar(c))

    def __eq__(self, other):
        if not isinstance(other, WeylForm):
            return NotImplemented
        return self.policy == other.policy and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.policy, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self):
        return bool(self.terms)

    # structure --------------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.policy.dim

    def fedosov_degree(self) -> float:
        """min |alpha| + 2k over nonzero terms; infinity for the zero form."""
        return min((sum(a) + 2 * k for k, a, _ in self.terms), default=math.inf)

    def form_degrees(self) -> set[int]:
        return {len(J) for _, _, J in self.terms}

    def form_degree(self) -> int:
        """The form degree of a homogeneous (or zero) form."""
        degs = self.form_degrees()
        if len(degs) > 1:
            raise StructuralError(f"form is not homogeneous in form degree: {sorted(degs)}")
        return degs.pop() if degs else 0

    def by_form_degree(self) -> dict[int, WeylForm]:
        parts: dict = {}
        for key, p in self.terms.items():
            parts.setdefault(len(key[2]), {})[key] = p
        return {l: WeylForm._wrap(self.policy, t) for l, t in sorted(parts.items())}

    def by_fedosov_degree(self) -> dict[int, WeylForm]:
        parts: dict = {}
        for key, p in self.terms.items():
            parts.setdefault(sum(key[1]) + 2 * key[0], {})[key] = p
        return {d: WeylForm._wrap(self.policy, t) for d, t in sorted(parts.items())}

    def sector(self, q: int, l: int) -> WeylForm:
        """Component with y-degree q and form degree l."""
        return WeylForm._wrap(
            self.policy,
            {key: p for key, p in self.terms.items() if sum(key[1]) == q and len(key[2]) == l},
        )

    def filter(self, pred) -> WeylForm:
        return WeylForm._wrap(self.policy, {key: p for key, p in self.terms.items() if pred(key)})

    def truncate(self, n_max: int) -> WeylForm:
        """Drop terms above ``n_max`` and record the smaller policy."""
        pol = self.policy.with_n_max(n_max)
        return WeylForm._wrap(pol, {key: p for key, p in self.terms.items() if sum(key[1]) + 2 * key[0] <= n_max})

    def with_policy(self, policy: TruncationPolicy) -> WeylForm:
        if policy.dim != self.policy.dim or policy.pi_sign != self.policy.pi_sign:
            raise StructuralError(f"cannot move {self.policy} to {policy}")
        if policy.n_max < self.policy.n_max:
            return self.truncate(policy.n_max)
        return WeylForm._wrap(policy, dict(self.terms))

    def lambda_series(self) -> list[BasePoly]:
        """The y-free 0-form part as [coefficient of lambda^0, lambda^1, ...]."""
        kmax = self.policy.n_max // 2
        zero_alpha = (0,) * self.dim
        return [self.terms.get((k, zero_alpha, ()), BasePoly.zero(self.dim)) for k in range(kmax + 1)]

    def sorted_items(self):
        return sorted(self.terms.items(), key=lambda t: (sum(t[0][1]) + 2 * t[0][0], len(t[0][2]), t[0]))

    def __repr__(self):
        from .text import format_weyl

        return f"WeylForm({format_weyl(self)!r}, n_max={self.policy.n_max})"

    def __str__(self):
        from .text import format_weyl

        return format_weyl(self)


# -- Moyal product --------------------------------------------------------------


def _falling(a: int, t: int) -> int:
    out = 1
    for i in range(t):
        out *= a - i
    return out


@lru_cache(maxsize=1 << 18)
def _moyal_monomials(alpha, beta, n: int, pi_sign: int):
    """Expansion of y^alpha o y^beta as ((gamma, m, Scalar), ...).

    exp(c Pi_hat) factorises over the canonical pairs (j, n+j), each factor
    being exp(c s A_j) exp(-c s B_j) with A_j = d_{y_j} (x) d_{y_{n+j}} and
    B_j = d_{y_{n+j}} (x) d_{y_j}; c = -i lambda/2 contributes lambda^m.
    """
    per_pair = []
    for j in range(n):
        choices = []
        for t in range(min(alpha[j], beta[n + j]) + 1):
            ft = _falling(alpha[j], t) * _falling(beta[n + j], t)
            for u in range(min(alpha[n + j], beta[j]) + 1):
                fu = _falling(alpha[n + j], u) * _falling(beta[j], u)
                coeff = mpq(ft * fu, math.factorial(t) * math.factorial(u))
                if u & 1:
                    coeff = -coeff
                choices.append((t, u, coeff))
        per_pair.append(choices)
    base = tuple(a + b for a, b in zip(alpha, beta))
    out = []
    for combo in cartesian(*per_pair):
        gamma = list(base)
        m = 0
        coeff = mpq(1)
        for j, (t, u, c) in enumerate(combo):
            gamma[j] -= t + u
            gamma[n + j] -= t + u
            m += t + u
            coeff *= c
        # (pi_sign * (-i/2))^m
        coeff *= mpq(pi_sign, 2) ** m
        phase = m % 4  # (-i)^m: 1, -i, -1, i
        if phase == 0:
            s = Scalar._raw(coeff, mpq(0))
        elif phase == 1:
            s = Scalar._raw(mpq(0), -coeff)
        elif phase == 2:
            s = Scalar._raw(-coeff, mpq(0))
        else:
            s = Scalar._raw(mpq(0), coeff)
        out.append((tuple(gamma), m, s))
    return tuple(out)


def _raw_product(
    a: WeylForm, b: WeylForm, limit: int, max_order: int | None = None, odd_only: bool = False
) -> dict:
    """Moyal product as a raw term dict, keeping Fedosov degree <= limit."""
    if max_order is not None:
        return _raw_product_reference(a, b, limit, max_order, odd_only)
    from .packed import PackedForm  # packed builds on this module

    wide = a.policy.with_n_max(max(limit, a.policy.n_max))
    pa, pb = PackedForm.from_weyl(a, wide), PackedForm.from_weyl(b, wide)
    raw = pa.product(pb, limit, "odd" if odd_only else "full")
    return PackedForm(wide, PackedForm._clean(raw)).to_weyl().terms


def _raw_product_reference(
    a: WeylForm, b: WeylForm, limit: int, max_order: int | None = None, odd_only: bool = False
) -> dict:
    """Term-by-term Moyal product over cached monomial expansions.

    Slower than the FLINT path; kept for the undeformed product and as an
    independent implementation to test against.
    """
    pol = a.policy
    n = pol.n
    acc: dict = {}
    items_b = [(kb, beta, Jb, pb, sum(beta) + 2 * kb) for (kb, beta, Jb), pb in b.terms.items()]
    for (ka, alpha, Ja), pa in a.terms.items():
        da = sum(alpha) + 2 * ka
        if da > limit:
            continue
        for kb, beta, Jb, pb, db in items_b:
            if da + db > limit:
                continue
            sign, J = wedge_sign(Ja, Jb)
            if not sign:
                continue
            prod = pa * pb
            if not prod:
                continue
            if sign < 0:
                prod = -prod
            for gamma, m, c in _moyal_monomials(alpha, beta, n, pol.pi_sign):
                if (max_order is not None and m > max_order) or (odd_only and not m & 1):
                    continue
                key = (ka + kb + m, gamma, J)
                bucket = acc.get(key)
                if bucket is None:
                    bucket = acc[key] = {}
                for mono, v in prod.terms.items():
                    w = bucket.get(mono)
                    bucket[mono] = v * c if w is None else w + v * c
    out = {}
    for key, bucket in acc.items():
        bucket = {m: v for m, v in bucket.items() if v}
        if bucket:
            out[key] = BasePoly._wrap(pol.dim, bucket)
    return out


def moyal_mul(a: WeylForm, b: WeylForm) -> WeylForm:
    """Fiberwise Moyal product combined with the wedge product of forms."""
    a._check(b)
    return WeylForm._wrap(a.policy, _raw_product(a, b, a.policy.n_max))


def pointwise_mul(a: WeylForm, b: WeylForm) -> WeylForm:
    """The undeformed product mu (commutative in y, wedge in dx)."""
    a._check(b)
    return WeylForm._wrap(a.policy, _raw_product(a, b, a.policy.n_max, max_order=0))


def _raw_commutator(a: WeylForm, b: WeylForm, limit: int) -> dict:
    # Swapping the factors of an order-m Moyal term costs (-1)^m and swapping
    # the forms costs exactly the graded sign, so [a, b] is twice the odd part.
    out = _raw_product(a, b, limit, odd_only=True)
    return {key: p + p for key, p in out.items()}


def graded_commutator(a: WeylForm, b: WeylForm) -> WeylForm:
    """[a, b] = a o b - (-1)^{|a||b|} b o a, summed over form-degree components."""
    a._check(b)
    return WeylForm._wrap(a.policy, _raw_commutator(a, b, a.policy.n_max))


def i_lambda_commutator(a: WeylForm, b: WeylForm) -> WeylForm:
    """(i/lambda) [a, b].

    The commutator is formed two degrees above the truncation so that dividing
    by lambda does not lose the top Fedosov degree.
    """
    a._check(b)
    pol = a.policy
    raw = _raw_commutator(a, b, pol.n_max + 2)
    out = {}
    for (k, alpha, J), p in raw.items():
        if k < 1:
            raise DivisibilityError(
                f"commutator term lambda^{k} y^{alpha} dx{J} is not divisible by lambda", (k, alpha, J)
            )
        if sum(alpha) + 2 * (k - 1) <= pol.n_max:
            out[(k - 1, alpha, J)] = p * _I
    return WeylForm._wrap(pol, out)


_I = Scalar(0, 1)


def lambda_divide(a: WeylForm, power: int) -> WeylForm:
    if power < 1:
        raise StructuralError(f"power must be positive, got {power}")
    out = {}
    for (k, alpha, J), p in a.terms.items():
        if k < power:
            raise DivisibilityError(
                f"term lambda^{k} y^{alpha} dx{J} is not divisible by lambda^{power}", (k, alpha, J)
            )
        out[(k - power, alpha, J)] = p
    return WeylForm._wrap(a.policy, out)


def lambda_multiply(a: WeylForm, power: int) -> WeylForm:
    return WeylForm(a.policy, {(k + power, alpha, J): p for (k, alpha, J), p in a.terms.items()})


# -- delta calculus ---------------------------------------------------------------


def _insert_dx(j: int, J: tuple[int, ...]):
    """dx_j ^ dx_J as (sign, sorted tuple); sign 0 when j is already in J."""
    if j in J:
        return 0, ()
    pos = sum(1 for i in J if i < j)
    return (-1 if pos & 1 else 1), J[:pos] + (j,) + J[pos:]


def _accumulate(out: dict, key, p: BasePoly):
    cur = out.get(key)
    if cur is None:
        out[key] = p
    else:
        cur = cur + p
        if cur:
            out[key] = cur
        else:
            del out[key]


def delta(b: WeylForm) -> WeylForm:
    """sum_k dx_k ^ d b / d y_k."""
    out: dict = {}
    for (k, alpha, J), p in b.terms.items():
        for j, e in enumerate(alpha):
            if not e:
                continue
            sign, J2 = _insert_dx(j, J)
            if not sign:
                continue
            alpha2 = alpha[:j] + (e - 1,) + alpha[j + 1 :]
            _accumulate(out, (k, alpha2, J2), p * (sign * e))
    return WeylForm._wrap(b.policy, out)


def delta_star(b: WeylForm) -> WeylForm:
    """sum_k y_k * (d/dx_k contracted into b)."""
    out: dict = {}
    n_max = b.policy.n_max
    for (k, alpha, J), p in b.terms.items():
        if sum(alpha) + 1 + 2 * k > n_max:
            continue
        for pos, j in enumerate(J):
            alpha2 = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1 :]
            J2 = J[:pos] + J[pos + 1 :]
            _accumulate(out, (k, alpha2, J2), -p if pos & 1 else p)
    return WeylForm._wrap(b.policy, out)


def delta_minus(b: WeylForm) -> WeylForm:
    """delta^* weighted by 1/(q+l) on each (y-degree q, form degree l) component."""
    out: dict = {}
    n_max = b.policy.n_max
    for (k, alpha, J), p in b.terms.items():
        q, l = sum(alpha), len(J)
        if q + l == 0 or q + 1 + 2 * k > n_max:
            continue
        scaled = p * Scalar._raw(mpq(1, q + l), mpq(0))
        for pos, j in enumerate(J):
            alpha2 = alpha[:j] + (alpha[j] + 1,) + alpha[j + 1 :]
            J2 = J[:pos] + J[pos + 1 :]
            _accumulate(out, (k, alpha2, J2), -scaled if pos & 1 else scaled)
    return WeylForm._wrap(b.policy, out)


def symbol(b: WeylForm) -> WeylForm:
    """Projection onto y-degree 0 and form degree 0."""
    return b.filter(lambda key: not key[2] and not any(key[1]))


@dataclass(frozen=True)
class HodgeParts:
    exact_part: WeylForm
    coexact_part: WeylForm
    symbol_part: WeylForm

    def total(self) -> WeylForm:
        return self.exact_part + self.coexact_part + self.symbol_part


def hodge_decompose(b: WeylForm) -> HodgeParts:
    """b = delta delta^- b + delta^- delta b + sigma(b).

    delta^- raises the Fedosov degree by one, so it is evaluated one degree
    above the truncation before delta brings it back down.
    """
    pol = b.policy
    wide = b.with_policy(pol.extended(1))
    exact = delta(delta_minus(wide)).with_policy(pol)
    coexact = delta_minus(delta(b))
    return HodgeParts(exact, coexact, symbol(b))


def exterior_d(b: WeylForm) -> WeylForm:
    """Exterior derivative in x acting on the coefficient functions."""
    out: dict = {}
    for (k, alpha, J), p in b.terms.items():
        for j in range(b.dim):
            dp = poly_diff(p, j)
            if not dp:
                continue
            sign, J2 = _insert_dx(j, J)
            if not sign:
                continue
            _accumulate(out, (k, alpha, J2), dp if sign > 0 else -dp)
    return WeylForm._wrap(b.policy, out)


def theta_form(policy: TruncationPolicy) -> WeylForm:
    """sum_{k,l} omega_{kl} y_k dx_l; delta = -(i/lambda)[theta, .]."""
    w = standard_symplectic(policy.dim)
    terms = {}
    for k in range(policy.dim):
        for l in range(policy.dim):
            if w[k][l]:
                alpha = tuple(int(i == k) for i in range(policy.dim))
                terms[(0, alpha, (l,))] = BasePoly.constant(policy.dim, Scalar._raw(w[k][l], mpq(0)))
    return WeylForm(policy, terms)


def omega_form(policy: TruncationPolicy) -> WeylForm:
    """The scalar symplectic 2-form sum_j dx_j ^ dx_{n+j} at Fedosov degree 0."""
    n = policy.n
    zero = (0,) * policy.dim
    return WeylForm(policy, {(0, zero, (j, n + j)): BasePoly.constant(policy.dim, 1) for j in range(n)})


# -- group action --------------------------------------------------------------


def act_on_poly(f: BasePoly, g: Matrix) -> BasePoly:
    """(g . f)(x) = f(g^{-1} x)."""
    return poly_subst_linear(f, inverse(g))


def act_group_element(b: WeylForm, g: Matrix) -> WeylForm:
    """Substitute x -> g^{-1} x, y -> g^{-1} y and dx -> g^{-1} dx simultaneously."""
    if shape(g) != (b.dim, b.dim):
        raise StructuralError(f"matrix of shape {shape(g)} does not act on dimension {b.dim}")
    m = inverse(g)
    out: dict = {}
    subst_cache: dict = {}
    for (k, alpha, J), p in b.terms.items():
        pk = subst_cache.get(p)
        if pk is None:
            pk = subst_cache[p] = poly_subst_linear(p, m)
        forms = exterior_power_row(m, J)
        for gamma, c in monomial_subst_linear(alpha, m):
            for K, minor in forms:
                coeff = c * minor
                _accumulate(out, (k, gamma, K), pk * Scalar._raw(coeff, mpq(0)))
    return WeylForm._wrap(b.policy, out)
