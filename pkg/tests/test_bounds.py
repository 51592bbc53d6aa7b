import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftbell import bounds as B


def _triples_oracle(n, sigma):
    """Sum of sigma products over 3-subsets of an explicit location list.

    The bound counts triples touching at most two location kinds, so triples
    with three distinct kinds are skipped here as well.
    """
    locs = [(t, s) for t, (c, s) in enumerate(zip(n, sigma)) for _ in range(int(c))]
    return sum(a[1] * b[1] * c[1] for a, b, c in itertools.combinations(locs, 3)
               if len({a[0], b[0], c[0]}) < 3)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=4),
       st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4))
def test_third_order_without_pairs_counts_triples(n, sig):
    sigma = np.array(sig[:len(n)])
    inp = B.ThirdOrderInput(n, sigma, np.zeros((len(n), len(n))))
    assert math.isclose(B.third_order_F(inp), _triples_oracle(n, sigma), rel_tol=1e-9, abs_tol=1e-12)


def test_third_order_pairs_only_lower_the_bound():
    n = np.array([4, 3, 5])
    s = np.array([0.3, 0.5, 1.0])
    free = B.third_order_F(B.ThirdOrderInput(n, s, np.zeros((3, 3))))
    a = np.array([[1, 0, 0], [0, 0, 0], [0, 0, 2]], float)
    assert B.third_order_F(B.ThirdOrderInput(n, s, a)) < free


def test_third_order_input_validation():
    with pytest.raises(ValueError):
        B.ThirdOrderInput([1, 2], [0.1], np.zeros((2, 2)))
    with pytest.raises(ValueError):
        B.ThirdOrderInput([1, -2], [0.1, 0.2], np.zeros((2, 2)))


@given(st.floats(1.0, 1e4), st.floats(0.0, 1e7), st.floats(0.0, 1.0))
def test_prop_bound_convert_dominates_cubic(A2, B2, frac):
    _, a2p, xmax = B.prop_bound_convert(0.0, 0.0, A2, B2)
    x = frac * xmax
    assert a2p * x ** 2 >= (A2 * x ** 2 + B2 * x ** 3) * (1 - 1e-9)


def test_bayes_acceptance_domain():
    assert B.bayes_acceptance(1.0, 10.0, 3, 1e-3) > 1.0
    with pytest.raises(ValueError):
        B.bayes_acceptance(1.0, 10.0, 3, 0.2)


def test_swap_xz_is_an_involution():
    v = np.arange(7.0)
    assert np.array_equal(B.swap_xz(B.swap_xz(v)), v)
    m = np.arange(49.0).reshape(7, 7)
    assert np.array_equal(B.swap_xz(B.swap_xz(m)), m)


@pytest.fixture(scope="module")
def system():
    return B.iterate_system()


def test_system_converges(system):
    assert system.converged
    assert 1e-4 < system.eps0 < 1e-3
    assert np.all(system.sigma_inf <= system.sigma_sup + 1e-12)


def test_level_bounds_order_and_decay(system):
    eps = system.eps0 / 4
    lb = B.level_bounds(4, eps, system)
    assert np.all(lb.mu <= lb.nu + 1e-30)
    assert np.all(np.diff(lb.nu[:, 4]) < 0)
    assert lb.nu[-1, 4] <= lb.nu5_envelope * (1 + 1e-9)


def test_level_bounds_above_threshold_is_rejected(system):
    with pytest.raises(ValueError):
        B.level_bounds(2, 2 * system.eps0, system)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 0.9))
def test_rho1_monotone(system, frac):
    a = B.rho1(frac * system.eps0 * 0.9, system)
    b = B.rho1(frac * system.eps0, system)
    assert 0 < a <= b


def test_reports_are_parseable(system):
    import json
    assert "eps0" in json.loads(B.report_json(system))
    assert B.report_csv(system).splitlines()[0].count(",") > 2
