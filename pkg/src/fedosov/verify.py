"""Seeded random inputs and the property suite behind ``fedosov verify``."""

from __future__ import annotations

import random

from .chart import Chart, check_connection_invariance, average_christoffel, symmetric_christoffel
from .engine import D_apply, FedosovData, nabla_apply, quantize, verify_dq_axioms
from .groups import FiniteGroup, check_symplectic_action, reynolds_average
from .poly import BasePoly
from .scalar import Scalar
from .text import format_poly, format_weyl
from .weyl import (
    TruncationPolicy,
    WeylForm,
    act_group_element,
    act_on_poly,
    delta,
    hodge_decompose,
    i_lambda_commutator,
    moyal_mul,
    theta_form,
)

__all__ = [
    "random_scalar",
    "random_poly",
    "random_weyl",
    "random_sector_form",
    "random_torsionfree_christoffel",
    "random_symmetric_christoffel",
    "random_invariant_christoffel",
    "run_property_suite",
]


def random_scalar(rng: random.Random, complex_: bool = True, bound: int = 5) -> Scalar:
    re = rng.randint(-bound, bound)
    im = rng.randint(-bound, bound) if complex_ and rng.random() < 0.3 else 0
    den = rng.choice((1, 1, 1, 2, 3))
    return Scalar(re, im) / den


def _random_mono(rng, nvars, degree):
    mono = [0] * nvars
    for _ in range(degree):
        mono[rng.randrange(nvars)] += 1
    return tuple(mono)


def random_poly(rng: random.Random, nvars: int, max_degree: int, nterms: int = 4, complex_: bool = False) -> BasePoly:
    terms = {}
    for _ in range(nterms):
        mono = _random_mono(rng, nvars, rng.randint(0, max_degree))
        terms[mono] = random_scalar(rng, complex_)
    return BasePoly(nvars, terms)


def random_sector_form(
    rng: random.Random, policy: TruncationPolicy, q: int, l: int, k: int = 0, nterms: int = 3, x_degree: int = 1
) -> WeylForm:
    """Random form of y-degree q, form degree l and lambda-power k."""
    dim = policy.dim
    terms = {}
    for _ in range(nterms):
        alpha = _random_mono(rng, dim, q)
        J = tuple(sorted(rng.sample(range(dim), l)))
        terms[(k, alpha, J)] = random_poly(rng, dim, x_degree, 2, complex_=True)
    return WeylForm(policy, terms)


def random_weyl(
    rng: random.Random, policy: TruncationPolicy, nterms: int = 4, max_form: int | None = None, x_degree: int = 1
) -> WeylForm:
    dim = policy.dim
    max_form = dim if max_form is None else max_form
    out = WeylForm.zero(policy)
    for _ in range(nterms):
        k = rng.randint(0, policy.n_max // 2)
        q = rng.randint(0, policy.n_max - 2 * k)
        l = rng.randint(0, max_form)
        out = out + random_sector_form(rng, policy, q, l, k, 1, x_degree)
    return out


def random_torsionfree_christoffel(rng: random.Random, dim: int, max_degree: int = 1, nentries: int = 3) -> dict:
    """Random Gamma_ijk symmetric in (i, j) only."""
    out = {}
    for _ in range(nentries):
        i, j, k = (rng.randrange(dim) for _ in range(3))
        p = random_poly(rng, dim, max_degree, 2)
        out[(i, j, k)] = p
        out[(j, i, k)] = p
    return {key: p for key, p in out.items() if p}


def random_symmetric_christoffel(rng: random.Random, dim: int, max_degree: int = 1, nentries: int = 3) -> dict:
    entries = {}
    for _ in range(nentries):
        key = tuple(sorted(rng.randrange(dim) for _ in range(3)))
        entries[key] = random_poly(rng, dim, max_degree, 2)
    return symmetric_christoffel(entries, dim)


def random_invariant_christoffel(
    rng: random.Random, group: FiniteGroup, max_degree: int = 1, nentries: int = 3, attempts: int = 20
) -> dict:
    """Reynolds average of a random fully symmetric Gamma; retried until nonzero."""
    gamma = {}
    for _ in range(attempts):
        gamma = average_christoffel(random_symmetric_christoffel(rng, group.dim, max_degree, nentries), group)
        if gamma:
            break
    return gamma


# -- the suite ---------------------------------------------------------------------


class _Tally:
    def __init__(self):
        self.checks: dict = {}

    def record(self, name: str, ok: bool, example=None):
        entry = self.checks.setdefault(name, {"passed": True, "checked": 0, "counterexample": None})
        entry["checked"] += 1
        if not ok and entry["passed"]:
            entry["passed"] = False
            entry["counterexample"] = example

    def merge(self, name: str, entry: dict):
        self.checks[name] = entry

    @property
    def ok(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def run_property_suite(data: FedosovData | None, chart: Chart, seed: int, samples: int, flatness_error=None) -> dict:
    """Run every check on a chart.  ``data`` is None when the solve failed
    the flatness check, in which case ``flatness_error`` carries the residual."""
    rng = random.Random(seed)
    tally = _Tally()
    group = chart.group
    policy = chart.policy
    dim = chart.dim

    action = check_symplectic_action(group)
    tally.record("symplectic_action", action.ok, action.violations[:1] or None)
    inv = check_connection_invariance(chart)
    tally.record("connection_invariance", inv.ok, inv.violations[:1] or None)

    theta = theta_form(policy)
    sectors = [(q, l) for q in range(policy.n_max + 1) for l in range(dim + 1)]
    for idx in range(samples):
        q, l = sectors[idx % len(sectors)]
        b = random_sector_form(rng, policy, q, l)
        parts = hodge_decompose(b)
        tally.record("hodge_identity", parts.total() == b, format_weyl(b))
        tally.record("delta_squared", not delta(delta(b)), format_weyl(b))
        tally.record("delta_theta", delta(b) == -i_lambda_commutator(theta, b), format_weyl(b))

    if data is None:
        residual = flatness_error.residual if flatness_error is not None else None
        tally.record("omega_residual", False, format_weyl(residual) if residual is not None else "solve failed")
    else:
        tally.record("omega_residual", not data.omega_residual(), format_weyl(data.omega_residual()))
        work = data.work_policy
        low = policy.with_n_max(max(policy.n_max - 1, 0))
        for _ in range(max(1, samples // 5)):
            f = random_poly(rng, dim, 4, 3)
            s = quantize(f, data)
            sym_ok = s.filter(lambda key: not key[2] and not any(key[1])) == WeylForm.from_base(f, work)
            tally.record("symbol_of_quantization", sym_ok, format_poly(f))
            tally.record("quantization_flat", not D_apply(s, data).truncate(data.n_max), format_poly(f))
            a = random_weyl(rng, low, 3, 1)
            b2 = random_weyl(rng, low, 3, 1)
            for g in group.generators:
                ga = act_group_element(a, g)
                gb = act_group_element(b2, g)
                tally.record(
                    "equivariance_product", act_group_element(moyal_mul(a, b2), g) == moyal_mul(ga, gb), format_weyl(a)
                )
                tally.record("equivariance_delta", act_group_element(delta(a), g) == delta(ga), format_weyl(a))
                tally.record(
                    "equivariance_nabla",
                    act_group_element(nabla_apply(a, data), g) == nabla_apply(ga, data),
                    format_weyl(a),
                )
                tally.record(
                    "equivariance_D", act_group_element(D_apply(a, data), g) == D_apply(ga, data), format_weyl(a)
                )
                q_ok = act_group_element(s, g) == quantize(act_on_poly(f, g), data)
                tally.record("equivariance_quantize", q_ok, format_poly(f))
        dq_samples = [random_poly(rng, dim, 3, 3) for _ in range(max(3, samples // 10))]
        dq_samples.append(reynolds_average(random_poly(rng, dim, 2, 3), group))
        report = verify_dq_axioms(data, dq_samples, data.safe_k)
        for name, entry in report.details["axioms"].items():
            tally.merge(name, entry)
    return {"ok": tally.ok, "seed": seed, "samples": samples, "checks": tally.checks}
