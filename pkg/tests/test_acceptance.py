"""Acceptance suite.  Every comparison is exact; one PASS/FAIL line per criterion
is printed in the terminal summary.  Run on its own with

    python3 -m pytest tests/test_acceptance.py
"""

import random
import time
from fractions import Fraction

import pytest
from conftest import GROUPS, brute_isotropy, chart_path, moyal_oracle, sample_points

from fedosov import (
    Chart,
    D_apply,
    TruncationPolicy,
    WeylForm,
    act_group_element,
    classify_point,
    delta,
    delta_minus,
    enumerate_group,
    hodge_decompose,
    load_chart,
    moyal_mul,
    nabla_apply,
    orbit_type_stratification,
    parse_poly,
    quantize,
    solve_chart,
    star_product,
    symbol,
    symplectize_connection,
    verify_dq_axioms,
)
from fedosov.chart import is_torsionfree, nabla_omega
from fedosov.verify import (
    random_invariant_christoffel,
    random_poly,
    random_sector_form,
    random_symmetric_christoffel,
    random_torsionfree_christoffel,
    random_weyl,
)
from fedosov.weyl import act_on_poly, i_lambda_commutator, omega_form, theta_form

CRITERIA = {
    "test_cone_reproduction": "1 cone star product matches the Moyal oracle",
    "test_flatness": "2 Omega = -omega on five invariant curved charts",
    "test_symbol_isomorphism": "3 sigma(Q f) = f and D(Q f) = 0",
    "test_dq_axioms": "4 DQ1, DQ2, DQ3 and associativity",
    "test_hodge_de_rham": "5 Hodge-de Rham identity, delta^2 = 0, delta = -(i/L)[theta, .]",
    "test_equivariance": "6 group action commutes with o, delta, nabla, D and Q",
    "test_stratification_oracle": "7 orbit types match brute-force isotropy",
    "test_symplectization": "8 symplectization is symplectic, torsionfree and idempotent",
}


def _random_chart(group_name: str, n_max: int, seed: str, max_degree: int = 2, nentries: int = 3) -> Chart:
    gens, dim = GROUPS[group_name]
    group = enumerate_group(gens, dim=dim)
    gamma = random_invariant_christoffel(random.Random(seed), group, max_degree, nentries)
    return Chart(dim, tuple(gens), gamma, TruncationPolicy(n_max, dim))


def _curved_charts() -> dict:
    return {
        "cone_curved": load_chart(chart_path("cone_curved")),
        "z4_curved": _random_chart("Z4", 5, "z4"),
        "z3_curved": _random_chart("Z3", 4, "z3"),
        "z2xz2_curved": load_chart(chart_path("z2xz2_curved")),
        "z4xz4_curved": _random_chart("Z4xZ4", 4, "z4xz4", nentries=4),
    }


CURVED = _curved_charts()
_SOLVED: dict = {}


def solved(name: str):
    if name not in _SOLVED:
        _SOLVED[name] = solve_chart(CURVED[name])
    return _SOLVED[name]


def test_cone_reproduction():
    data = solve_chart(load_chart(chart_path("cone")))
    assert data.safe_k >= 4
    gens = [parse_poly(t, 2) for t in ("x1^2 + x2^2", "x1^2 - x2^2", "2*x1*x2")]
    minus = data.chart.group.elements[1]
    start = time.perf_counter()
    products = {(i, j): star_product(f, g, data, 4) for i, f in enumerate(gens) for j, g in enumerate(gens)}
    elapsed = time.perf_counter() - start
    for (i, j), series in products.items():
        assert list(series.mu) == moyal_oracle(gens[i], gens[j], 4)
        assert all(act_on_poly(mu, minus) == mu for mu in series.mu)
    assert elapsed < 1.0


def test_flatness():
    start = time.perf_counter()
    for name in CURVED:
        data = solved(name)
        assert data.n_max in (4, 5, 6)
        assert data.R.truncate(data.n_max)
        assert data.iterations_used <= data.n_max
        assert not (data.Omega + omega_form(data.work_policy)).truncate(data.n_max)
    assert {c.dim for c in CURVED.values()} == {2, 4}
    assert time.perf_counter() - start < 60.0


@pytest.mark.parametrize("name", sorted(CURVED))
def test_symbol_isomorphism(name):
    data = solved(name)
    rng = random.Random(f"symbol-{name}")
    for _ in range(50):
        f = random_poly(rng, data.policy.dim, 4, 4, complex_=True)
        qf = quantize(f, data)
        assert symbol(qf) == WeylForm.from_base(f, data.work_policy)
        assert not D_apply(qf, data).truncate(data.n_max)


@pytest.mark.parametrize("name", sorted(CURVED))
def test_dq_axioms(name):
    data = solved(name)
    rng = random.Random(f"dq-{name}")
    samples = [random_poly(rng, data.policy.dim, 3, 3) for _ in range(50)]
    report = verify_dq_axioms(data, samples, data.safe_k)
    assert report.details["lambda_orders"] == data.safe_k
    for axiom, entry in report.details["axioms"].items():
        assert entry["passed"], (axiom, entry["counterexample"])
        assert entry["checked"] >= (50 if axiom != "equivariance" else 50 * len(data.chart.group.generators))
    assert report.ok


def test_hodge_de_rham():
    rng = random.Random("hodge")
    policies = [TruncationPolicy(5, 2), TruncationPolicy(4, 4)]
    sectors = [(pol, q, l) for pol in policies for q in range(pol.n_max + 1) for l in range(pol.dim + 1)]
    count = 0
    while count < 200:
        for pol, q, l in sectors:
            k = rng.randint(0, (pol.n_max - q) // 2)
            b = random_sector_form(rng, pol, q, l, k)
            assert hodge_decompose(b).total() == b
            # delta^- raises the degree, so compose one degree up and cut back
            wide = b.with_policy(pol.extended(1))
            composed = delta(delta_minus(wide)) + delta_minus(delta(wide)) + symbol(wide)
            assert composed.with_policy(pol) == b
            assert not delta(delta(b))
            assert delta(b) == -i_lambda_commutator(theta_form(pol), b)
            count += 1


EQUIVARIANCE_CHARTS = {
    "trivial": lambda: load_chart(chart_path("constant_christoffel")),
    "Z2": lambda: load_chart(chart_path("cone_curved")),
    "Z4": lambda: CURVED["z4_curved"],
}


@pytest.mark.parametrize("group_name", sorted(EQUIVARIANCE_CHARTS))
def test_equivariance(group_name):
    data = solve_chart(EQUIVARIANCE_CHARTS[group_name]())
    rng = random.Random(f"equivariance-{group_name}")
    low = data.policy.with_n_max(data.n_max - 1)
    elements = data.chart.group.elements
    assert len(elements) == {"trivial": 1, "Z2": 2, "Z4": 4}[group_name]
    for _ in range(50):
        a, b = random_weyl(rng, low, 3), random_weyl(rng, low, 3)
        f = random_poly(rng, data.policy.dim, 4, 3)
        qf = quantize(f, data)
        ab, da, na, Da = moyal_mul(a, b), delta(a), nabla_apply(a, data), D_apply(a, data)
        for g in elements:
            ga, gb = act_group_element(a, g), act_group_element(b, g)
            assert act_group_element(ab, g) == moyal_mul(ga, gb)
            assert act_group_element(da, g) == delta(ga)
            assert act_group_element(na, g) == nabla_apply(ga, data)
            assert act_group_element(Da, g) == D_apply(ga, data)
            assert act_group_element(qf, g) == quantize(act_on_poly(f, g), data)


STRATIFIED = ["Z3", "Z4", "Z2xZ2", "D4", "Z4xZ4"]


def test_stratification_oracle():
    for name in STRATIFIED:
        gens, dim = GROUPS[name]
        group = enumerate_group(gens, dim=dim)
        assert group.order <= 16
        strata = orbit_type_stratification(group)
        rng = random.Random(f"strata-{name}")
        for pt in sample_points(group, rng, 200):
            stab = brute_isotropy(group, pt)
            matches = [s for s in strata if s.contains(stab)]
            assert len(matches) == 1
            assert classify_point(strata, group, [Fraction(int(c.p), int(c.q)) for c in pt]) == matches[0]

    cone = load_chart(chart_path("cone")).group
    strata = orbit_type_stratification(cone)
    summary = sorted((s.isotropy_order, s.fixed_dim, s.is_principal) for s in strata)
    assert summary == [(1, 2, True), (2, 0, False)]
    assert classify_point(strata, cone, [0, 0]).isotropy_order == 2
    assert classify_point(strata, cone, [1, 0]).is_principal


def test_symplectization():
    rng = random.Random("symplectize")
    for idx in range(10):
        dim = 2 if idx % 2 == 0 else 4
        gamma = random_torsionfree_christoffel(rng, dim, 2, 4)
        out = symplectize_connection(gamma, dim)
        assert not nabla_omega(out, dim)
        assert is_torsionfree(out)
        assert symplectize_connection(out, dim) == out
        already = random_symmetric_christoffel(rng, dim, 2, 3)
        assert symplectize_connection(already, dim) == already


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
