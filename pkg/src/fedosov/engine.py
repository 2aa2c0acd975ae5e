"""The Fedosov construction on a chart: Gamma form, curvature, the r fixed point,
the flat connection D, quantization and the induced star product.

Every solve runs at a *work* truncation ``n_max + guard``.  The r fixed point and
quantized sections are exact through the work degree, while anything involving a
delta (which lowers the Fedosov degree) or a division by lambda loses exactness
at the top, so checks compare after truncating back to ``n_max``.

Internally everything runs on :class:`~fedosov.packed.PackedForm`; the public
functions take and return :class:`~fedosov.weyl.WeylForm`.  Operations on a
user form lift it to the work policy, compute there and return at the form's
own policy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from gmpy2 import mpq

from .chart import Chart, is_fully_symmetric, poisson_bracket
from .errors import ConvergenceError, FlatnessError, StructuralError
from .groups import CheckReport
from .packed import PackedForm, series_to_polys
from .poly import BasePoly
from .scalar import I, Scalar
from .text import format_poly, format_weyl
from .weyl import TruncationPolicy, WeylForm, act_on_poly, omega_form, symbol

__all__ = [
    "FedosovData",
    "StarSeries",
    "build_gamma_form",
    "nabla_apply",
    "curvature_R",
    "solve_r",
    "weyl_curvature_Omega",
    "D_apply",
    "quantize",
    "star_product",
    "star_series",
    "verify_dq_axioms",
    "solve_chart",
    "conventions",
    "DELTA_SIGN_IN_D",
    "DEFAULT_GUARD",
]

DELTA_SIGN_IN_D = -1
DEFAULT_GUARD = 2
_HALF = mpq(1, 2)


def conventions(policy: TruncationPolicy) -> dict:
    """The sign and normalisation choices every report echoes."""
    return {
        "omega": "omega[j][n+j] = 1, omega[n+j][j] = -1",
        "pi_sign": policy.pi_sign,
        "moyal_constant": "-i*L/2",
        "moyal_product": "a o b = sum_m (-i*L/2)^m/m! mu(Pi^m(a (x) b)), Pi[j][n+j] = pi_sign",
        "delta_sign_in_D": DELTA_SIGN_IN_D,
        "D": "D b = nabla b - delta b + (i/L)[r, b]",
        "curvature": "R = d Gamma + (i/L) Gamma o Gamma",
        "poisson_bracket": "{f,g} = sum_j df/dx_j dg/dx_(n+j) - df/dx_(n+j) dg/dx_j",
        "group_action": "(g.b)(x, y, dx) = b(g^-1 x, g^-1 y, g^-1 dx)",
    }


def build_gamma_form(chart: Chart, policy: TruncationPolicy | None = None) -> WeylForm:
    """Gamma = 1/2 sum Gamma_ijk y_i y_j dx_k."""
    policy = policy or chart.policy
    if not is_fully_symmetric(chart.christoffel):
        raise StructuralError("Christoffel symbols are not fully symmetric (need a torsionfree symplectic connection)")
    half = Scalar(1, 0) / 2
    out = WeylForm.zero(policy)
    for (i, j, k), p in chart.christoffel.items():
        alpha = [0] * chart.dim
        alpha[i] += 1
        alpha[j] += 1
        out = out + WeylForm(policy, {(0, tuple(alpha), (k,)): p * half})
    return out


class _CommutatorCache:
    """(i/lambda)[a, b] assembled from Fedosov-homogeneous pieces.

    Successive fixed-point iterates share their low-degree pieces, so each
    pairwise product is formed once however many passes an iteration takes.
    Entries are keyed by degrees and validated by equality of the pieces.
    """

    def __init__(self, policy: TruncationPolicy):
        self.policy = policy
        self.table: dict = {}

    def __call__(self, tag: str, a: PackedForm, b: PackedForm) -> PackedForm:
        out = PackedForm.zero(self.policy)
        limit = self.policy.n_max + 2
        parts_b = b.by_fedosov_degree()
        for da, ca in a.by_fedosov_degree().items():
            for db, cb in parts_b.items():
                if da + db > limit:
                    continue
                key = (tag, da, db)
                hit = self.table.get(key)
                if hit is None or hit[0] != ca or hit[1] != cb:
                    hit = self.table[key] = (ca, cb, ca.i_commutator(cb))
                out = out + hit[2]
        return out


@dataclass(frozen=True, eq=False)
class FedosovData:
    """A solved chart.  Forms are stored at ``work_policy``."""

    chart: Chart
    policy: TruncationPolicy
    work_policy: TruncationPolicy
    gamma_form: WeylForm
    R: WeylForm
    r: WeylForm
    Omega: WeylForm
    iterations_used: int
    _gamma: PackedForm = field(repr=False)
    _r: PackedForm = field(repr=False)
    _cache: _CommutatorCache = field(repr=False)
    _quantized: dict = field(init=False, default_factory=dict, repr=False, compare=False)

    @property
    def n_max(self) -> int:
        return self.policy.n_max

    @property
    def guard(self) -> int:
        return self.work_policy.n_max - self.policy.n_max

    @property
    def safe_k(self) -> int:
        """Largest lambda-order of the star product that is exact."""
        return self.n_max // 2

    def lift(self, b: WeylForm) -> PackedForm:
        if b.policy.dim != self.policy.dim or b.policy.pi_sign != self.policy.pi_sign:
            raise StructuralError("form does not live on this chart's Weyl bundle")
        if b.policy.n_max > self.work_policy.n_max:
            raise StructuralError(
                f"form truncated at {b.policy.n_max} exceeds the work truncation {self.work_policy.n_max}"
            )
        return PackedForm.from_weyl(b, self.work_policy)

    def omega_residual(self) -> WeylForm:
        return (self.Omega + omega_form(self.work_policy)).truncate(self.n_max)

    def summary(self) -> dict:
        residual = self.omega_residual()
        deg = self.r.fedosov_degree()
        return {
            "dim": self.chart.dim,
            "n_max": self.n_max,
            "work_n_max": self.work_policy.n_max,
            "group_order": self.chart.group.order,
            "iterations": self.iterations_used,
            "r_fedosov_degree": None if deg == float("inf") else int(deg),
            "R": format_weyl(self.R.truncate(self.n_max)),
            "omega_residual": format_weyl(residual),
            "flat": not residual,
            "conventions": conventions(self.policy),
        }


# -- packed kernels -------------------------------------------------------------------


def _nabla(b: PackedForm, gamma: PackedForm, cache: _CommutatorCache) -> PackedForm:
    return b.exterior_d() + cache("gamma", gamma, b)


def _D(b: PackedForm, data: FedosovData) -> PackedForm:
    return _nabla(b, data._gamma, data._cache) - b.delta() + data._cache("r", data._r, b)


def _quantize_monomial(mono: tuple[int, ...], data: FedosovData) -> PackedForm:
    hit = data._quantized.get(mono)
    if hit is not None:
        return hit
    work = data.work_policy
    base = PackedForm.from_weyl(WeylForm.from_base(BasePoly(work.dim, {mono: 1}), work))
    s = base
    cap = work.n_max + 2
    for _ in range(cap):
        nxt = base + (_nabla(s, data._gamma, data._cache) + data._cache("r", data._r, s)).delta_minus()
        if nxt == s:
            data._quantized[mono] = s
            return s
        s = nxt
    raise ConvergenceError(f"quantization did not stabilise within {cap} passes")


def _quantize_packed(f, data: FedosovData) -> PackedForm:
    # Q is linear over C[[lambda]], so it is assembled from cached monomial lifts
    symbol_form = _as_symbol(f, data.work_policy)
    total = PackedForm.zero(data.work_policy)
    for (k, _, _), p in symbol_form.sorted_items():
        for mono, c in p.sorted_terms():
            total = total + _quantize_monomial(mono, data).times(c, k)
    return total


def _solve_r_packed(R: PackedForm, gamma: PackedForm, cache: _CommutatorCache) -> tuple[PackedForm, int]:
    r0 = R.delta_minus()
    r = r0
    cap = R.policy.n_max + 1
    for it in range(1, cap + 1):
        nxt = r0 + (_nabla(r, gamma, cache) + cache("rr", r, r).scale(_HALF)).delta_minus()
        if nxt == r:
            return r, it
        r = nxt
    raise ConvergenceError(f"r iteration did not stabilise within {cap} passes")


def _omega_packed(R: PackedForm, r: PackedForm, gamma: PackedForm, cache: _CommutatorCache) -> PackedForm:
    omega = PackedForm.from_weyl(omega_form(R.policy))
    return -omega + R - r.delta() + _nabla(r, gamma, cache) + cache("rr", r, r).scale(_HALF)


# -- public operations ------------------------------------------------------------------


def nabla_apply(b: WeylForm, data: FedosovData) -> WeylForm:
    """nabla b = d b + (i/lambda)[Gamma, b]."""
    return _nabla(data.lift(b), data._gamma, data._cache).to_weyl().with_policy(b.policy)


def curvature_R(data: FedosovData) -> WeylForm:
    """R = d Gamma + (i/lambda) Gamma o Gamma, recomputed from the Gamma form."""
    g = PackedForm.from_weyl(data.gamma_form)
    # (i/lambda) Gamma o Gamma = (i/2lambda)[Gamma, Gamma] for a 1-form
    return (g.exterior_d() + g.i_commutator(g).scale(_HALF)).to_weyl()


def solve_r(data: FedosovData, R: WeylForm | None = None) -> tuple[WeylForm, int]:
    """Fixed point r = delta^- R + delta^-(nabla r + (i/lambda) r o r).

    Returns r and the number of applications of the iteration map up to and
    including the one that reproduced its input.
    """
    R = data.R if R is None else R
    r, its = _solve_r_packed(PackedForm.from_weyl(R, data.work_policy), data._gamma, data._cache)
    return r.to_weyl(), its


def weyl_curvature_Omega(data: FedosovData, check: bool = True) -> WeylForm:
    """-omega + R - delta r + nabla r + (i/lambda) r o r, at the work truncation.

    With ``check`` the identity Omega = -omega is enforced through n_max.
    """
    R = PackedForm.from_weyl(data.R)
    Omega = _omega_packed(R, data._r, data._gamma, data._cache).to_weyl()
    if check:
        residual = (Omega + omega_form(data.work_policy)).truncate(data.n_max)
        if residual:
            raise FlatnessError(f"Omega + omega = {format_weyl(residual)}", residual)
    return Omega


def solve_chart(chart: Chart, n_max: int | None = None, guard: int = DEFAULT_GUARD, check: bool = True) -> FedosovData:
    """Run the whole construction on a chart.

    Raises FlatnessError when ``check`` is set and Omega + omega does not
    vanish through n_max.
    """
    if guard < 1:
        raise StructuralError(f"guard must be at least 1, got {guard}")
    policy = chart.policy if n_max is None else chart.policy.with_n_max(n_max)
    work = policy.extended(guard)
    gamma_w = build_gamma_form(chart, work)
    gamma = PackedForm.from_weyl(gamma_w)
    cache = _CommutatorCache(work)
    R = gamma.exterior_d() + gamma.i_commutator(gamma).scale(_HALF)
    r, its = _solve_r_packed(R, gamma, cache)
    Omega = _omega_packed(R, r, gamma, cache).to_weyl()
    data = FedosovData(chart, policy, work, gamma_w, R.to_weyl(), r.to_weyl(), Omega, its, gamma, r, cache)
    if check:
        residual = data.omega_residual()
        if residual:
            raise FlatnessError(f"Omega + omega = {format_weyl(residual)}", residual)
    return data


def D_apply(b: WeylForm, data: FedosovData) -> WeylForm:
    """D b = nabla b - delta b + (i/lambda)[r, b]."""
    return _D(data.lift(b), data).to_weyl().with_policy(b.policy)


def _as_symbol(f, policy: TruncationPolicy) -> WeylForm:
    if isinstance(f, WeylForm):
        if symbol(f) != f:
            raise StructuralError("quantize needs a form of y-degree 0 and form degree 0")
        return f.with_policy(policy)
    if isinstance(f, BasePoly):
        return WeylForm.from_base(f, policy)
    return WeylForm.from_series(_series_of(f), policy)


def quantize(f, data: FedosovData) -> WeylForm:
    """The flat section with symbol f, at the work truncation.

    ``f`` is a BasePoly, a lambda-series (list of BasePoly or StarSeries) or a
    symbol-type WeylForm.  Solves s = f + delta^-(nabla s + (i/lambda)[r, s]).
    """
    return _quantize_packed(f, data).to_weyl()


@dataclass(frozen=True)
class StarSeries:
    """mu[k] is the coefficient of lambda^k in f * g, for k = 0..len(mu) - 1."""

    mu: tuple[BasePoly, ...]
    n_max: int = field(default=0, compare=False)
    requested: int = field(default=0, compare=False)

    def __getitem__(self, k: int) -> BasePoly:
        return self.mu[k]

    def __len__(self):
        return len(self.mu)

    @property
    def orders(self) -> int:
        return len(self.mu) - 1

    def to_dict(self) -> dict:
        return {f"mu_{k}": format_poly(p) for k, p in enumerate(self.mu)}


def _series_of(f) -> list[BasePoly]:
    if isinstance(f, StarSeries):
        return list(f.mu)
    if isinstance(f, BasePoly):
        return [f]
    return list(f)


def star_series(f, g, data: FedosovData, orders: int | None = None) -> StarSeries:
    """f * g = sigma(Q(f) o Q(g)) for BasePolys or lambda-series.

    Coefficients mu_k are returned for k <= orders; anything above the safe
    range floor(n_max / 2) is cut with a warning.
    """
    safe = data.safe_k
    requested = safe if orders is None else orders
    if requested > safe:
        warnings.warn(
            f"lambda-orders above {safe} are not exact at n_max={data.n_max}; truncating to {safe}",
            stacklevel=2,
        )
    k_max = min(requested, safe)
    series = _quantize_packed(f, data).symbol_series(_quantize_packed(g, data))
    mu = series_to_polys(series, data.policy.dim, k_max)
    return StarSeries(tuple(mu), data.n_max, requested)


def star_product(f: BasePoly, g: BasePoly, data: FedosovData, orders: int | None = None) -> StarSeries:
    return star_series(f, g, data, orders)


# -- axiom checks ---------------------------------------------------------------------


def _record(report: dict, name: str, ok: bool, example=None):
    entry = report.setdefault(name, {"passed": True, "checked": 0, "counterexample": None})
    entry["checked"] += 1
    if not ok and entry["passed"]:
        entry["passed"] = False
        entry["counterexample"] = example


def _fmt(*polys) -> list[str]:
    return [format_poly(p) for p in polys]


def verify_dq_axioms(data: FedosovData, samples, lambda_orders: int) -> CheckReport:
    """DQ1-DQ3, associativity modulo lambda^(orders+1) and G-equivariance.

    Pairs are consecutive samples (cyclically), triples likewise.
    Equivariance compares g.(f * h) with (g.f) * (g.h) for each generator g.
    """
    orders = min(lambda_orders, data.safe_k)
    samples = list(samples)
    dim = data.policy.dim
    one = BasePoly.constant(dim, 1)
    gens = data.chart.group.generators
    report: dict = {}
    m = len(samples)
    for idx, f in enumerate(samples):
        g = samples[(idx + 1) % m]
        h = samples[(idx + 2) % m]
        fg = star_series(f, g, data, orders)
        _record(report, "DQ1", fg[0] == f * g, _fmt(f, g))
        if orders >= 1:
            gf = star_series(g, f, data, orders)
            ok = gf[0] == fg[0] and fg[1] - gf[1] == poisson_bracket(f, g) * I
            _record(report, "DQ2", ok, _fmt(f, g))
        for left, right in ((f, one), (one, f)):
            s = star_series(left, right, data, orders)
            ok = s[0] == f and not any(s.mu[1:])
            _record(report, "DQ3", ok, _fmt(left, right))
        lhs = star_series(fg, h, data, orders)
        rhs = star_series(f, star_series(g, h, data, orders), data, orders)
        _record(report, "associativity", lhs == rhs, _fmt(f, g, h))
        for gen in gens:
            moved = star_series(act_on_poly(f, gen), act_on_poly(g, gen), data, orders)
            ok = all(act_on_poly(a, gen) == b for a, b in zip(fg.mu, moved.mu))
            _record(report, "equivariance", ok, _fmt(f, g))
    for name in ("DQ1", "DQ2", "DQ3", "associativity", "equivariance"):
        report.setdefault(name, {"passed": True, "checked": 0, "counterexample": None})
    violations = [{"axiom": k, "counterexample": v["counterexample"]} for k, v in report.items() if not v["passed"]]
    return CheckReport(not violations, violations, {"axioms": report, "lambda_orders": orders})
