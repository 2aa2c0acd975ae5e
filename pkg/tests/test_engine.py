import dataclasses
import random
import warnings

import pytest
from conftest import MINUS_I2, moyal_oracle, solved

from fedosov import (
    Chart,
    D_apply,
    FlatnessError,
    Scalar,
    StructuralError,
    TruncationPolicy,
    WeylForm,
    act_group_element,
    build_gamma_form,
    curvature_R,
    delta,
    delta_minus,
    graded_commutator,
    moyal_mul,
    nabla_apply,
    parse_poly,
    parse_weyl,
    poisson_bracket,
    quantize,
    solve_chart,
    solve_r,
    star_product,
    symbol,
    verify_dq_axioms,
    weyl_curvature_Omega,
)
from fedosov.chart import average_christoffel, symmetric_christoffel
from fedosov.engine import DELTA_SIGN_IN_D, star_series
from fedosov.groups import enumerate_group, reynolds_average
from fedosov.packed import PackedForm
from fedosov.scalar import I
from fedosov.verify import random_invariant_christoffel, random_poly, random_weyl
from fedosov.weyl import act_on_poly, i_lambda_commutator, omega_form

CURVED = ["constant_christoffel", "cone_curved", "z2xz2_curved"]


def P(text, nvars=2):
    return parse_poly(text, nvars)


def flat_chart(dim=2, n_max=6, gens=()):
    return Chart(dim, tuple(gens), {}, TruncationPolicy(n_max, dim))


# -- Gamma form and nabla ----------------------------------------------------------


def test_gamma_form_examples():
    pol = TruncationPolicy(4, 2)
    assert not build_gamma_form(flat_chart(n_max=4))
    chart = Chart(2, (), {(0, 0, 0): P("3")}, pol)
    assert build_gamma_form(chart) == parse_weyl("3/2*y1^2*dx1", pol)


def test_gamma_form_rejects_torsionfree_only_input():
    chart = Chart(2, (), {(0, 1, 1): P("1"), (1, 0, 1): P("1")}, TruncationPolicy(4, 2))
    with pytest.raises(StructuralError):
        build_gamma_form(chart)


def test_gamma_form_of_averaged_symbols_is_invariant():
    group = enumerate_group([MINUS_I2])
    gamma = average_christoffel(symmetric_christoffel({(0, 0, 1): P("x1 + 1"), (1, 1, 1): P("x2 - x1")}, 2), group)
    chart = Chart(2, (group.elements[1],), gamma, TruncationPolicy(4, 2))
    form = build_gamma_form(chart)
    assert form and act_group_element(form, group.elements[1]) == form


def test_nabla_flat_examples():
    data = solve_chart(flat_chart())
    pol = data.policy
    f = P("x1^3*x2 - i*x2")
    assert nabla_apply(WeylForm.from_base(f, pol), data) == parse_weyl("3*x1^2*x2*dx1 + (x1^3 - i)*dx2", pol)
    assert not nabla_apply(parse_weyl("y1", pol), data)


@pytest.mark.parametrize("name", CURVED)
def test_nabla_graded_leibniz(name):
    data = solved(name)
    rng = random.Random(7)
    pol = data.policy
    for _ in range(5):
        a = random_weyl(rng, pol, 3, 1)
        b = random_weyl(rng, pol, 3, 1)
        for da, pa in a.by_form_degree().items():
            lhs = nabla_apply(moyal_mul(pa, b), data)
            rhs = moyal_mul(nabla_apply(pa, data), b) + moyal_mul(pa, nabla_apply(b, data)) * (-1) ** da
            assert lhs == rhs


# -- curvature -----------------------------------------------------------------------


def test_curvature_flat_and_constant():
    assert not solve_chart(flat_chart()).R
    data = solved("constant_christoffel")
    g = data.gamma_form
    # dGamma vanishes, leaving (i/lambda) Gamma o Gamma
    assert curvature_R(data) == i_lambda_commutator(g, g) * Scalar("1/2")
    assert curvature_R(data) == data.R
    assert data.R


@pytest.mark.parametrize("name", CURVED)
def test_nabla_squared_is_curvature(name):
    data = solved(name)
    rng = random.Random(3)
    R = data.R
    for _ in range(20):
        b = random_weyl(rng, data.work_policy, 4, 2)
        lhs = nabla_apply(nabla_apply(b, data), data)
        assert not (lhs - i_lambda_commutator(R, b)).truncate(data.n_max)


# -- r and Omega ---------------------------------------------------------------------


def test_flat_chart_has_zero_r():
    data = solve_chart(flat_chart())
    assert not data.r and data.iterations_used == 1
    assert weyl_curvature_Omega(data) == -omega_form(data.work_policy)


@pytest.mark.parametrize("name", CURVED)
def test_r_postconditions(name):
    data = solved(name)
    assert data.r.fedosov_degree() >= 3
    assert not delta_minus(data.r)
    assert data.iterations_used <= data.n_max
    r, its = solve_r(data)
    assert r == data.r and its == data.iterations_used
    assert not data.omega_residual()


def test_constant_christoffel_at_n_max_4():
    data = solved("constant_christoffel", 4)
    assert data.r.fedosov_degree() >= 3 and not delta_minus(data.r)
    assert not data.omega_residual()


def test_iterations_bounded_on_random_invariant_connections():
    rng = random.Random(2024)
    for gens, dim, n_max in [([MINUS_I2], 2, 6), ([[[0, -1], [1, 0]]], 2, 5), ([], 2, 4)]:
        group = enumerate_group(gens, dim=dim)
        for _ in range(4):
            gamma = random_invariant_christoffel(rng, group, 2, 4)
            chart = Chart(dim, group.generators, gamma, TruncationPolicy(n_max, dim))
            data = solve_chart(chart)
            assert data.iterations_used <= n_max
            assert not data.omega_residual()


@pytest.mark.parametrize("name", CURVED)
def test_omega_is_central(name):
    data = solved(name)
    Omega = weyl_curvature_Omega(data)
    rng = random.Random(8)
    for _ in range(20):
        b = random_weyl(rng, data.work_policy, 3, 2)
        assert not graded_commutator(Omega, b).truncate(data.n_max)


def test_flatness_error_carries_residual():
    data = solved("constant_christoffel")
    broken = dataclasses.replace(data, _r=PackedForm.zero(data.work_policy))
    with pytest.raises(FlatnessError) as info:
        weyl_curvature_Omega(broken)
    assert info.value.residual


# -- D -------------------------------------------------------------------------------


def test_delta_sign_regression():
    assert DELTA_SIGN_IN_D == -1
    data = solve_chart(flat_chart())
    pol = data.policy
    assert not D_apply(parse_weyl("x1 + y1", pol), data)
    # the opposite sign would leave d x1 + delta y1 = 2 dx1
    assert nabla_apply(parse_weyl("x1 + y1", pol), data) + delta(parse_weyl("x1 + y1", pol)) == parse_weyl("2*dx1", pol)


@pytest.mark.parametrize("name", CURVED)
def test_D_squared_vanishes(name):
    data = solved(name)
    rng = random.Random(4)
    for _ in range(20):
        b = random_weyl(rng, data.work_policy, 4, 2)
        assert not D_apply(D_apply(b, data), data).truncate(data.n_max)


@pytest.mark.parametrize("name", CURVED)
def test_D_graded_leibniz(name):
    data = solved(name)
    rng = random.Random(5)
    pol = data.work_policy
    for _ in range(5):
        a = random_weyl(rng, pol, 3, 1)
        b = random_weyl(rng, pol, 3, 1)
        for da, pa in a.by_form_degree().items():
            lhs = D_apply(moyal_mul(pa, b), data)
            rhs = moyal_mul(D_apply(pa, data), b) + moyal_mul(pa, D_apply(b, data)) * (-1) ** da
            # D lowers the Fedosov degree by one
            assert lhs.truncate(pol.n_max - 1) == rhs.truncate(pol.n_max - 1)


# -- quantization ------------------------------------------------------------------


def test_quantize_flat_examples():
    data = solve_chart(flat_chart())
    pol = data.work_policy
    assert quantize(P("x1"), data) == parse_weyl("x1 + y1", pol)
    assert quantize(P("x1^2"), data) == parse_weyl("x1^2 + 2*x1*y1 + y1^2", pol)
    assert quantize(P("1"), data) == parse_weyl("1", pol)


def test_flat_quantization_is_taylor_lift():
    data = solve_chart(flat_chart(n_max=8))
    f = P("x1^3*x2 - 2*x2^2 + i*x1")
    # f(x + y) with every term kept
    expected = parse_weyl(
        "(x1 + y1)^3*(x2 + y2) - 2*(x2 + y2)^2 + i*(x1 + y1)",
        data.work_policy,
    )
    assert quantize(f, data) == expected


@pytest.mark.parametrize("name", CURVED)
def test_quantization_is_inverse_to_symbol(name):
    data = solved(name)
    dim = data.policy.dim
    rng = random.Random(9)
    for _ in range(5):
        f, g = random_poly(rng, dim, 3, 3), random_poly(rng, dim, 3, 3)
        qf, qg = quantize(f, data), quantize(g, data)
        assert symbol(qf) == WeylForm.from_base(f, data.work_policy)
        assert not D_apply(qf, data).truncate(data.n_max)
        # the product of flat sections is flat, so it is the quantization of its symbol
        s = moyal_mul(qf, qg)
        assert quantize(symbol(s), data).truncate(data.n_max) == s.truncate(data.n_max)


@pytest.mark.parametrize("name", ["cone_curved", "z2xz2_curved"])
def test_quantization_is_equivariant(name):
    data = solved(name)
    rng = random.Random(10)
    for _ in range(5):
        f = random_poly(rng, data.policy.dim, 3, 3)
        for g in data.chart.group.elements:
            assert quantize(act_on_poly(f, g), data) == act_group_element(quantize(f, data), g)


def test_quantize_accepts_series():
    data = solved("constant_christoffel")
    f, g = P("x1^2"), P("x2 - 1")
    combo = quantize([f, g], data)
    assert combo == quantize(f, data) + moyal_mul(WeylForm.lam(data.work_policy), quantize(g, data))
    with pytest.raises(StructuralError):
        quantize(parse_weyl("y1", data.work_policy), data)


# -- star product ----------------------------------------------------------------------


def test_star_flat_examples():
    data = solve_chart(flat_chart())
    x1, x2 = P("x1"), P("x2")
    fg, gf = star_product(x1, x2, data), star_product(x2, x1, data)
    assert fg[0] == P("x1*x2")
    assert [a - b for a, b in zip(fg.mu, gf.mu)] == [P("0"), P("i"), P("0"), P("0")]
    f = P("x1^2*x2 - 3*i")
    one = P("1")
    for s in (star_product(f, one, data), star_product(one, f, data)):
        assert s[0] == f and not any(s.mu[1:])


def test_star_on_cone_invariants_matches_moyal(cone_data):
    u, w = P("x1^2 + x2^2"), P("2*x1*x2")
    assert list(star_product(u, w, cone_data).mu) == moyal_oracle(u, w, 4)


@pytest.mark.parametrize("dim", [2, 4])
def test_flat_star_equals_base_moyal(dim):
    data = solve_chart(flat_chart(dim, 6))
    rng = random.Random(dim)
    for _ in range(6):
        f, g = random_poly(rng, dim, 3, 3, True), random_poly(rng, dim, 3, 3, True)
        assert list(star_product(f, g, data).mu) == moyal_oracle(f, g, 3)


def test_antisymmetric_part_of_mu1_is_i_times_bracket():
    rng = random.Random(12)
    for name in CURVED:
        data = solved(name)
        dim = data.policy.dim
        for _ in range(3):
            f, g = random_poly(rng, dim, 3, 3), random_poly(rng, dim, 3, 3)
            mu1 = star_product(f, g, data)[1] - star_product(g, f, data)[1]
            assert mu1 == poisson_bracket(f, g) * I


def test_bilinearity():
    data = solved("cone_curved")
    rng = random.Random(13)
    f, f2, g = (random_poly(rng, 2, 3, 3) for _ in range(3))
    a, b = I + 2, Scalar("-1/3")
    lhs = star_product(f * a + f2 * b, g, data)
    rhs = [p * a + q * b for p, q in zip(star_product(f, g, data).mu, star_product(f2, g, data).mu)]
    assert list(lhs.mu) == rhs


def test_star_of_invariants_is_invariant():
    data = solved("cone_curved")
    group = data.chart.group
    rng = random.Random(14)
    for _ in range(3):
        f = reynolds_average(random_poly(rng, 2, 4, 4), group)
        g = reynolds_average(random_poly(rng, 2, 4, 4), group)
        for mu in star_product(f, g, data).mu:
            assert reynolds_average(mu, group) == mu


def test_safe_range_regression():
    data = solved("constant_christoffel", 4)
    assert data.safe_k == 2
    assert len(star_product(P("x1"), P("x2"), data)) == 3
    with pytest.warns(UserWarning, match="not exact"):
        capped = star_series(P("x1"), P("x2"), data, 5)
    assert len(capped) == 3
    # mu_k in the safe range does not change when the truncation is raised
    high = solved("constant_christoffel", 8)
    rng = random.Random(15)
    for _ in range(4):
        f, g = random_poly(rng, 2, 4, 3), random_poly(rng, 2, 4, 3)
        assert star_product(f, g, data) == star_product(f, g, high, 2)


def test_n_max_zero_is_pointwise():
    data = solve_chart(flat_chart(n_max=0))
    f, g = P("x1^2 - x2"), P("3*x1*x2")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        s = star_product(f, g, data)
    assert list(s.mu) == [f * g]


# -- DQ axioms ---------------------------------------------------------------------------


def test_dq_axioms_flat_orders_3():
    data = solve_chart(flat_chart(n_max=6))
    rng = random.Random(16)
    samples = [random_poly(rng, 2, 4, 3) for _ in range(6)]
    report = verify_dq_axioms(data, samples, 3)
    assert report.ok, report.violations
    assert report.details["lambda_orders"] == 3


def test_dq_axioms_constant_christoffel_orders_2():
    data = solved("constant_christoffel", 4)
    rng = random.Random(17)
    samples = [random_poly(rng, 2, 3, 3) for _ in range(6)]
    report = verify_dq_axioms(data, samples, 2)
    assert report.ok, report.violations


def test_dq_axioms_unit():
    data = solved("cone_curved")
    report = verify_dq_axioms(data, [P("1"), P("1")], 3)
    assert report.ok
    assert all(report.details["axioms"][name]["checked"] for name in ("DQ1", "DQ2", "DQ3", "associativity"))


def test_flipped_pi_breaks_dq2():
    chart = flat_chart()
    flipped = Chart(2, (), {}, TruncationPolicy(6, 2, pi_sign=1))
    samples = [P("x1"), P("x2"), P("x1*x2^2")]
    assert verify_dq_axioms(solve_chart(chart), samples, 2).ok
    report = verify_dq_axioms(solve_chart(flipped), samples, 2)
    assert not report.details["axioms"]["DQ2"]["passed"]
    assert report.details["axioms"]["DQ2"]["counterexample"] is not None
