import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftbell import epp as E


@given(st.floats(0, 0.1), st.floats(0, 1e-3))
def test_physical_infidelity_monotone(q, eps):
    base = E.physical_infidelity(q, eps)
    assert base >= 0
    assert E.physical_infidelity(q + 1e-4, eps) >= base
    assert E.physical_infidelity(q, eps + 1e-5) >= base


def test_physical_infidelity_noiseless_limit():
    # with perfect local operations only pairs of bad raw ebits survive at second order
    q = 1e-3
    assert math.isclose(E.physical_infidelity(q, 0.0), 6 * q ** 2 + 48 * q ** 3)
    with pytest.raises(ValueError):
        E.physical_infidelity(-0.1, 0.0)


def test_iteration_settles_near_local_floor():
    seq = E.iterate_infidelity(0.1 / 3, 2e-4, 8)
    assert seq[0] == pytest.approx(0.1)
    assert all(b < a for a, b in zip(seq[:3], seq[1:4]))
    assert seq[-1] == pytest.approx(E.physical_infidelity(seq[-1] / 3, 2e-4), rel=1e-3)


@settings(max_examples=50)
@given(st.floats(1e-6, 2e-4), st.floats(1e-7, 5e-3))
def test_reject_bounds_ordered(eps, eps6):
    r = E.epp_reject_bounds(eps, eps6, 2)
    assert 0 <= r.f1 <= r.f2
    if r.clamped:
        assert r.f1 == 0


def test_reject_bounds_need_positive_level():
    with pytest.raises(ValueError):
        E.epp_reject_bounds(1e-4, 1e-4, 0)


def test_c_fixed_points_solve_the_quadratic():
    e = E.eps0()
    for c in E.C_fixed_points():
        assert math.isclose(c, 6 * c ** 2 * e ** 2 + 24 * e * c + E.G_SAT, rel_tol=1e-9)
    lo, hi = E.C_fixed_points()
    assert lo < hi


def test_exact_acceptance_is_a_probability():
    p = E.physical_acceptance(0.01, 1e-4)
    assert 0.5 < p < 1.0
    assert E.physical_acceptance(0.0, 0.0) == pytest.approx(1.0)


def test_acceptance_drops_with_noise():
    assert E.physical_acceptance(0.02, 1e-4) < E.physical_acceptance(0.005, 1e-4)


def test_recursion_domains():
    with pytest.raises(ValueError):
        E.scheme_b_recursions(1, 1.0)
    with pytest.raises(ValueError):
        E.infidelity_threshold("A", k=2)
    with pytest.raises(ValueError):
        E.infidelity_threshold("C")


@pytest.mark.parametrize("scheme", ["A", "B"])
def test_plans_saturate_and_bound_from_both_sides(scheme):
    fn = E.scheme_a_recursions if scheme == "A" else E.scheme_b_recursions
    plan = fn(3, E.sigma6_after_rounds(1))
    assert plan.l_prime is not None and plan.l_doubleprime is not None
    assert plan.l_doubleprime <= plan.l_prime
    d = plan.as_dict()
    assert list(d) == sorted(d)


def test_thresholds_are_ordered():
    a = E.infidelity_threshold("A", 3)
    b = E.infidelity_threshold("B")
    assert 0 < b < a < 1
