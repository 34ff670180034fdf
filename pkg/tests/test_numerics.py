"""Numeric kernels against integrals, roots, and ODE flows with known
closed forms."""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbound.numerics import (
    NumericalFailure,
    Tolerances,
    find_root,
    integrate,
    integrate_phase_ode,
    integrate_semi_infinite,
    maximize_scalar,
)

TOL = Tolerances()


# ----------------------------------------------------------------------
# quadrature


def test_integrate_polynomial_exact():
    res = integrate(lambda r: 3 * r * r, 0.0, 2.0, TOL)
    assert res.value == pytest.approx(8.0, rel=1e-12)
    assert res.error < 1e-8


def test_integrate_known_transcendentals():
    cases = [
        (lambda r: math.exp(-r), 0.0, 10.0, 1.0 - math.exp(-10.0)),
        (lambda r: math.sin(r), 0.0, math.pi, 2.0),
        (lambda r: 1.0 / (1.0 + r * r), 0.0, 1.0, math.pi / 4.0),
    ]
    for f, a, b, want in cases:
        assert integrate(f, a, b, TOL).value == pytest.approx(want, rel=1e-11)


def test_integrate_empty_and_reversed_interval():
    assert integrate(lambda r: 1.0, 2.0, 2.0, TOL).value == 0.0
    with pytest.raises(ValueError):
        integrate(lambda r: 1.0, 3.0, 2.0, TOL)


def test_breakpoints_recover_kinked_integrand():
    f = lambda r: abs(r - 1.0)  # integral over [0, 3]: 1/2 + 2 = 2.5
    res = integrate(f, 0.0, 3.0, TOL, breakpoints=(1.0,))
    assert res.value == pytest.approx(2.5, rel=1e-12)


def test_singular_left_endpoint():
    # integral of r^(-1/2) over (0, 4] = 2*sqrt(4) = 4
    res = integrate(lambda r: 1.0 / math.sqrt(r), 0.0, 4.0, TOL,
                    singular_left=True)
    assert res.value == pytest.approx(4.0, rel=1e-10)


def test_singular_right_endpoint():
    # integral of (1-r)^(-1/2) over [0, 1) = 2
    res = integrate(lambda r: 1.0 / math.sqrt(1.0 - r), 0.0, 1.0, TOL,
                    singular_right=True)
    assert res.value == pytest.approx(2.0, rel=1e-10)


def test_both_endpoints_singular():
    # integral of 1/sqrt(r(1-r)) over (0, 1) = pi
    res = integrate(
        lambda r: 1.0 / math.sqrt(r * (1.0 - r)), 0.0, 1.0, TOL,
        singular_left=True, singular_right=True,
    )
    assert res.value == pytest.approx(math.pi, rel=1e-10)


def test_endpoint_substitution_never_evaluates_at_the_far_end():
    # an integrand that would raise if evaluated at r = 0 exactly, with the
    # singularity declared only on the wrong (right) side: the collapse
    # guard must keep the quadrature finite and still converge
    def f(r: float) -> float:
        return 1.0 / math.sqrt(r) if r > 0.0 else 1.0 / 0.0

    res = integrate(f, 0.0, 1.0, TOL, singular_left=True, singular_right=True)
    assert res.value == pytest.approx(2.0, rel=1e-9)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
@settings(max_examples=40, deadline=None)
def test_interval_additivity(a_len, b_len):
    f = lambda r: math.exp(-r) * math.cos(r)
    a, m, b = 0.5, 0.5 + a_len, 0.5 + a_len + b_len
    whole = integrate(f, a, b, TOL).value
    split = integrate(f, a, m, TOL).value + integrate(f, m, b, TOL).value
    assert whole == pytest.approx(split, rel=1e-10, abs=1e-12)


def test_semi_infinite_exponential_and_power_tails():
    res = integrate_semi_infinite(lambda r: math.exp(-r), 0.0, TOL, scale=1.0)
    assert res.value == pytest.approx(1.0, rel=1e-10)
    res = integrate_semi_infinite(
        lambda r: 1.0 / (1.0 + r) ** 3, 0.0, TOL,
        scale=1.0, decay_hint="power", power=3.0,
    )
    assert res.value == pytest.approx(0.5, rel=1e-8)


def test_semi_infinite_power_hint_needs_decaying_power():
    with pytest.raises(ValueError):
        integrate_semi_infinite(
            lambda r: 1.0 / (1.0 + r), 0.0, TOL,
            scale=1.0, decay_hint="power", power=1.0,
        )


def test_semi_infinite_survives_underestimated_scale():
    # the cutoff-doubling loop compensates for a length scale guessed 5x
    # too short
    res = integrate_semi_infinite(
        lambda r: math.exp(-r / 5.0), 0.0, TOL, scale=1.0
    )
    assert res.value == pytest.approx(5.0, rel=1e-9)


# ----------------------------------------------------------------------
# roots and maxima


def test_find_root_simple():
    root = find_root(lambda x: x * x - 2.0, 0.0, 2.0, TOL)
    assert root == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_find_root_requires_bracket():
    with pytest.raises(ValueError):
        find_root(lambda x: x * x + 1.0, -1.0, 1.0, TOL)


@given(st.floats(0.1, 5.0))
@settings(max_examples=30, deadline=None)
def test_find_root_exponential_crossing(c):
    root = find_root(lambda x: math.exp(x) - c - 1.0, -1.0, 10.0, TOL)
    assert root == pytest.approx(math.log(1.0 + c), rel=1e-10, abs=1e-12)


def test_maximize_scalar_interior_and_boundary():
    x, fx = maximize_scalar(lambda t: -(t - 1.3) ** 2 + 2.0, 0.0, 4.0, TOL)
    assert x == pytest.approx(1.3, abs=1e-5)
    assert fx == pytest.approx(2.0, abs=1e-10)
    x, fx = maximize_scalar(lambda t: t, 0.0, 4.0, TOL)
    assert x == 4.0 and fx == 4.0


# ----------------------------------------------------------------------
# phase ODE


def test_phase_ode_linear_flow_crossings():
    # y' = 1: y goes 0 -> 10, crossing pi, 2pi, 3pi  (three multiples)
    run = integrate_phase_ode(lambda r, y: 1.0, 0.0, 10.0, 0.0, TOL)
    assert run.y_end == pytest.approx(10.0, rel=1e-9)
    assert run.n_crossings == 3
    assert run.crossing_radii == pytest.approx(
        [math.pi, 2 * math.pi, 3 * math.pi], rel=1e-6
    )


def test_phase_ode_matches_logistic_closed_form():
    # y' = y(1-y), y(0) = 1/2: y(r) = 1/(1+exp(-r))
    run = integrate_phase_ode(lambda r, y: y * (1.0 - y), 0.0, 5.0, 0.5, TOL)
    assert run.y_end == pytest.approx(1.0 / (1.0 + math.exp(-5.0)), rel=1e-8)
    assert run.n_crossings == 0


def test_phase_ode_breakpoints_land_on_kinks():
    # a kinked rate: without the breakpoint the integrator would smear the
    # corner; with it, the flow is exact to tolerance
    def rhs(r, y):
        return 2.0 if r < 1.0 else 0.5

    run = integrate_phase_ode(rhs, 0.0, 3.0, 0.0, TOL, breakpoints=(1.0,))
    assert run.y_end == pytest.approx(3.0, rel=1e-7)


def test_tolerances_halved_doubles_budgets():
    t = Tolerances()
    h = t.halved()
    assert h.quad_rel == t.quad_rel / 2
    assert h.ode_rel == t.ode_rel / 2
    assert h.max_subdivisions == 2 * t.max_subdivisions
    assert h.max_steps == 2 * t.max_steps
