"""FLINT-backed working representation of Weyl forms for the engine's hot loops.

A :class:`PackedForm` maps ``(k, q, J)`` (lambda power, y-degree, wedge index) to
a pair ``(re, im)`` of rational polynomials in x_1..x_2n, y_1..y_2n that are
homogeneous of degree q in y.  The Moyal product of two such blocks at order m
lands in a single block ``(ka + kb + m, qa + qb - 2m, Ja ^ Jb)``, so truncation
by Fedosov degree only ever drops whole blocks.

Conversion to and from :class:`~fedosov.weyl.WeylForm` is exact.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import product as cartesian

import flint
from gmpy2 import mpq

from .poly import BasePoly
from .scalar import Scalar
from .weyl import TruncationPolicy, WeylForm, wedge_sign

__all__ = ["PackedForm"]

_ZQ = mpq(0)


@lru_cache(maxsize=None)
def _context(dim: int):
    names = tuple(f"x{i + 1}" for i in range(dim)) + tuple(f"y{i + 1}" for i in range(dim))
    return flint.fmpq_mpoly_ctx.get(names, "lex")


def _fmpq(v) -> flint.fmpq:
    v = mpq(v)
    return flint.fmpq(int(v.numerator), int(v.denominator))


@lru_cache(maxsize=4096)
def _pair_choices(tmax: int, umax: int, pi_sign: int):
    out = []
    for t in range(tmax + 1):
        for u in range(umax + 1):
            out.append((t, u, mpq(pi_sign**t * (-pi_sign) ** u, math.factorial(t) * math.factorial(u))))
    return tuple(out)


def _insert(j: int, J: tuple[int, ...]):
    if j in J:
        return 0, ()
    pos = sum(1 for i in J if i < j)
    return (-1 if pos & 1 else 1), J[:pos] + (j,) + J[pos:]


class PackedForm:
    __slots__ = ("policy", "blocks", "_derivs", "_degrees")

    def __init__(self, policy: TruncationPolicy, blocks: dict):
        self.policy = policy
        self.blocks = blocks
        self._derivs: dict = {}
        self._degrees: dict = {}

    # conversion ---------------------------------------------------------------

    @classmethod
    def from_weyl(cls, w: WeylForm, policy: TruncationPolicy | None = None) -> PackedForm:
        policy = policy or w.policy
        dim = policy.dim
        re_parts: dict = {}
        im_parts: dict = {}
        for (k, alpha, J), p in w.terms.items():
            q = sum(alpha)
            if q + 2 * k > policy.n_max:
                continue
            key = (k, q, J)
            re_d = re_parts.setdefault(key, {})
            im_d = im_parts.setdefault(key, {})
            for xm, c in p.terms.items():
                exps = xm + alpha
                if c.re:
                    re_d[exps] = _fmpq(c.re)
                if c.im:
                    im_d[exps] = _fmpq(c.im)
        ctx = _context(dim)
        return cls(policy, {key: (ctx.from_dict(re_parts[key]), ctx.from_dict(im_parts[key])) for key in re_parts})

    def to_weyl(self) -> WeylForm:
        dim = self.policy.dim
        grouped: dict = {}
        for (k, _, J), (re, im) in self.blocks.items():
            for part, is_im in ((re, False), (im, True)):
                for exps, c in part.to_dict().items():
                    exps = tuple(map(int, exps))
                    q = mpq(int(c.p), int(c.q))
                    bucket = grouped.setdefault((k, exps[dim:], J), {})
                    xm = exps[:dim]
                    old = bucket.get(xm)
                    if old is None:
                        bucket[xm] = Scalar._raw(_ZQ, q) if is_im else Scalar._raw(q, _ZQ)
                    elif is_im:
                        bucket[xm] = Scalar._raw(old.re, old.im + q)
                    else:
                        bucket[xm] = Scalar._raw(old.re + q, old.im)
        return WeylForm._wrap(self.policy, {key: BasePoly._wrap(dim, b) for key, b in grouped.items()})

    @classmethod
    def zero(cls, policy: TruncationPolicy) -> PackedForm:
        return cls(policy, {})

    # linear structure ----------------------------------------------------------

    @staticmethod
    def _clean(blocks: dict) -> dict:
        return {key: v for key, v in blocks.items() if not (v[0].is_zero() and v[1].is_zero())}

    def __add__(self, other: PackedForm) -> PackedForm:
        out = dict(self.blocks)
        for key, (re, im) in other.blocks.items():
            cur = out.get(key)
            out[key] = (re, im) if cur is None else (cur[0] + re, cur[1] + im)
        return PackedForm(self.policy, self._clean(out))

    def __neg__(self) -> PackedForm:
        return PackedForm(self.policy, {key: (-re, -im) for key, (re, im) in self.blocks.items()})

    def __sub__(self, other: PackedForm) -> PackedForm:
        return self + (-other)

    def scale(self, c: mpq) -> PackedForm:
        f = _fmpq(c)
        return PackedForm(self.policy, {key: (re * f, im * f) for key, (re, im) in self.blocks.items()})

    def times(self, c: Scalar, lam: int = 0) -> PackedForm:
        """Multiply by the central element c * lambda^lam."""
        a, b = _fmpq(c.re), _fmpq(c.im)
        out = {}
        for (k, q, J), (re, im) in self.blocks.items():
            if q + 2 * (k + lam) > self.policy.n_max:
                continue
            out[(k + lam, q, J)] = (re * a - im * b, re * b + im * a) if b else (re * a, im * a)
        return PackedForm(self.policy, self._clean(out))

    def __eq__(self, other):
        if not isinstance(other, PackedForm):
            return NotImplemented
        return self.policy == other.policy and self.blocks == other.blocks

    def __bool__(self):
        return bool(self.blocks)

    def truncate(self, n_max: int) -> PackedForm:
        return PackedForm(self.policy, {key: v for key, v in self.blocks.items() if key[1] + 2 * key[0] <= n_max})

    def by_fedosov_degree(self) -> dict[int, PackedForm]:
        parts: dict = {}
        for key, v in self.blocks.items():
            parts.setdefault(key[1] + 2 * key[0], {})[key] = v
        return {d: PackedForm(self.policy, b) for d, b in sorted(parts.items())}

    def symbol_blocks(self) -> dict:
        return {key: v for key, v in self.blocks.items() if key[1] == 0 and not key[2]}

    # derivatives ------------------------------------------------------------------

    def _y_derivative(self, key, ys: tuple[int, ...]):
        cache = self._derivs.setdefault(key, {})
        hit = cache.get(ys)
        if hit is not None:
            return hit
        if not any(ys):
            hit = self.blocks[key]
        else:
            idx = max(i for i, e in enumerate(ys) if e)
            prev = ys[:idx] + (ys[idx] - 1,) + ys[idx + 1 :]
            re, im = self._y_derivative(key, prev)
            var = self.policy.dim + idx
            hit = (re.derivative(var), im.derivative(var))
        cache[ys] = hit
        return hit

    def _y_degrees(self, key):
        hit = self._degrees.get(key)
        if hit is None:
            re, im = self.blocks[key]
            dim = self.policy.dim
            dr = re.degrees()[dim:] if not re.is_zero() else (0,) * dim
            di = im.degrees()[dim:] if not im.is_zero() else (0,) * dim
            hit = self._degrees[key] = tuple(max(a, b) for a, b in zip(dr, di))
        return hit

    def delta(self) -> PackedForm:
        """sum_j dx_j ^ d/dy_j."""
        dim = self.policy.dim
        out: dict = {}
        for (k, q, J), (re, im) in self.blocks.items():
            for j in range(dim):
                sign, J2 = _insert(j, J)
                if not sign:
                    continue
                var = dim + j
                dre, dim_ = re.derivative(var), im.derivative(var)
                if sign < 0:
                    dre, dim_ = -dre, -dim_
                _acc(out, (k, q - 1, J2), dre, dim_)
        return PackedForm(self.policy, self._clean(out))

    def delta_minus(self) -> PackedForm:
        """sum_j y_j contracted with d/dx_j, weighted by 1/(q + l)."""
        dim = self.policy.dim
        ctx = _context(dim)
        n_max = self.policy.n_max
        out: dict = {}
        for (k, q, J), (re, im) in self.blocks.items():
            l = len(J)
            if q + l == 0 or q + 1 + 2 * k > n_max:
                continue
            w = flint.fmpq(1, q + l)
            for pos, j in enumerate(J):
                y = ctx.gen(dim + j) * (-w if pos & 1 else w)
                _acc(out, (k, q + 1, J[:pos] + J[pos + 1 :]), re * y, im * y)
        return PackedForm(self.policy, self._clean(out))

    def exterior_d(self) -> PackedForm:
        dim = self.policy.dim
        out: dict = {}
        for (k, q, J), (re, im) in self.blocks.items():
            for j in range(dim):
                sign, J2 = _insert(j, J)
                if not sign:
                    continue
                dre, dim_ = re.derivative(j), im.derivative(j)
                if sign < 0:
                    dre, dim_ = -dre, -dim_
                _acc(out, (k, q, J2), dre, dim_)
        return PackedForm(self.policy, self._clean(out))

    # Moyal products -------------------------------------------------------------------

    def product(self, other: PackedForm, limit: int | None = None, mode: str = "full") -> dict:
        """Raw Moyal product blocks.

        ``mode`` is "full", "odd" (only odd orders, i.e. half the graded
        commutator) or "symbol" (only the y-free 0-form part).
        """
        pol = self.policy
        dim = pol.dim
        n = dim // 2
        limit = pol.n_max if limit is None else limit
        out: dict = {}
        for ka_key in self.blocks:
            ka, qa, Ja = ka_key
            for kb_key in other.blocks:
                kb, qb, Jb = kb_key
                if qa + qb + 2 * (ka + kb) > limit:
                    continue
                if mode == "symbol" and (qa != qb or Ja or Jb):
                    continue
                sign, J = wedge_sign(Ja, Jb)
                if not sign:
                    continue
                ya = self._y_degrees(ka_key)
                yb = other._y_degrees(kb_key)
                per_pair = [_pair_choices(min(ya[j], yb[n + j]), min(ya[n + j], yb[j]), pol.pi_sign) for j in range(n)]
                for combo in cartesian(*per_pair):
                    m = 0
                    for t, u, _ in combo:
                        m += t + u
                    if mode == "odd" and not m & 1:
                        continue
                    if mode == "symbol" and m != qa:
                        continue
                    ea = [0] * dim
                    eb = [0] * dim
                    coeff = mpq(sign, 2**m)
                    for j, (t, u, c) in enumerate(combo):
                        ea[j], ea[n + j] = t, u
                        eb[n + j], eb[j] = t, u
                        coeff *= c
                    are, aim = self._y_derivative(ka_key, tuple(ea))
                    if are.is_zero() and aim.is_zero():
                        continue
                    bre, bim = other._y_derivative(kb_key, tuple(eb))
                    if bre.is_zero() and bim.is_zero():
                        continue
                    pre = are * bre
                    pim = are * bim
                    if not aim.is_zero():
                        pre -= aim * bim
                        pim += aim * bre
                    if pre.is_zero() and pim.is_zero():
                        continue
                    f = _fmpq(coeff)
                    pre, pim = pre * f, pim * f
                    # (-i)^m
                    phase = m & 3
                    if phase == 1:
                        pre, pim = pim, -pre
                    elif phase == 2:
                        pre, pim = -pre, -pim
                    elif phase == 3:
                        pre, pim = -pim, pre
                    _acc(out, (ka + kb + m, qa + qb - 2 * m, J), pre, pim)
        return out

    def moyal(self, other: PackedForm) -> PackedForm:
        return PackedForm(self.policy, self._clean(self.product(other)))

    def i_commutator(self, other: PackedForm) -> PackedForm:
        """(i/lambda)[self, other]; the graded commutator is twice the odd part."""
        raw = self.product(other, self.policy.n_max + 2, "odd")
        out = {}
        two = flint.fmpq(2)
        for (k, q, J), (re, im) in raw.items():
            if q + 2 * (k - 1) <= self.policy.n_max:
                # i * (re + i im) * 2
                out[(k - 1, q, J)] = (-im * two, re * two)
        return PackedForm(self.policy, self._clean(out))

    def symbol_series(self, other: PackedForm) -> dict[int, tuple]:
        """lambda-power -> (re, im) of sigma(self o other)."""
        raw = self.product(other, mode="symbol")
        return {k: v for (k, _, _), v in self._clean(raw).items()}


def _acc(out: dict, key, re, im):
    cur = out.get(key)
    out[key] = (re, im) if cur is None else (cur[0] + re, cur[1] + im)


def series_to_polys(series: dict, dim: int, k_max: int) -> list[BasePoly]:
    """Convert {k: (re, im)} with y-free polynomials into BasePolys for k <= k_max."""
    out = []
    for k in range(k_max + 1):
        terms: dict = {}
        v = series.get(k)
        if v is not None:
            for part, is_im in ((v[0], False), (v[1], True)):
                for exps, c in part.to_dict().items():
                    xm = tuple(map(int, exps))[:dim]
                    q = mpq(int(c.p), int(c.q))
                    old = terms.get(xm)
                    re, im = (old.re, old.im) if old is not None else (_ZQ, _ZQ)
                    terms[xm] = Scalar._raw(re, im + q) if is_im else Scalar._raw(re + q, im)
        out.append(BasePoly._wrap(dim, {m: c for m, c in terms.items() if c}))
    return out
