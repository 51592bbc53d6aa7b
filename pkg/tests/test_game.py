import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftbell import game as G


def test_square_is_consistent():
    info = G.check_square()
    assert all(info.values()) if isinstance(info, dict) else info


def test_classical_value_by_direct_enumeration():
    # independent oracle: every deterministic answer (row signs, column signs) pair
    best = 0
    rows = [r for r in itertools.product((1, -1), repeat=3) if np.prod(r) == 1]
    cols = [c for c in itertools.product((1, -1), repeat=3) if np.prod(c) == -1]
    for A in itertools.product(rows, repeat=3):
        # Bob's best column per b is independent across b
        wins = 0
        for b in range(3):
            wins += max(sum(A[a][b] == col[a] for a in range(3)) for col in cols)
        best = max(best, wins)
    got = G.classical_optimum()
    assert got["value"] == Fraction(best, 9) == Fraction(8, 9)
    assert got["alice_tables"] == got["bob_tables"] == 64


def test_quantum_strategy_always_wins():
    rates = G.verify_quantum_strategy(shots=30, seed=1)
    assert len(rates) == 9
    assert all(r == 1.0 for r in rates.values())


def test_a_bit_flip_on_a_shared_qubit_loses_sometimes():
    rates = G.verify_quantum_strategy(shots=30, seed=1, error="XIII")
    assert min(rates.values()) < 1.0


@pytest.mark.parametrize("method", G.METHODS)
def test_failure_bounds_ordered_and_decaying(method):
    eps = 1e-4
    prev = None
    for k in (2, 3, 4):
        lo, up = G.game_failure_bounds(method, k, eps)
        assert 0 <= lo <= up
        if prev:
            assert up < prev
        prev = up


@settings(max_examples=20, deadline=None)
@given(st.floats(-30, -3))
def test_k0_bounds_ordered(logd):
    lo, hi = G.k0_bounds(10 ** logd, 1e-4, "InterfaceEppB")
    assert lo <= hi


@pytest.mark.parametrize("method", G.METHODS)
def test_chi_bounds_ordered(method):
    lo, up = G.chi_bounds(method, 3, 0)
    assert 0 < lo <= up
    glo, gup = G.chi_bounds(method, 3, 0, game=True)
    assert (glo, gup) == pytest.approx((2 * lo, 2 * up))


def test_chi_domain():
    with pytest.raises(ValueError):
        G.chi_bounds("DirectEncoding", 1)
    with pytest.raises(ValueError):
        G.chi_bounds("InterfaceEppA", 3, m=3)
    with pytest.raises(ValueError):
        G.chi_bounds("Teleport", 3)


def test_spacetime_domain_and_ordering():
    with pytest.raises(ValueError):
        G.spacetime_overhead("InterfaceEppB", 51)
    for k in (2, 10, 50):
        assert G.spacetime_overhead("InterfaceEppB", k)[1] < G.spacetime_overhead("InterfaceEppA", k)[1]


@settings(max_examples=25)
@given(st.floats(-40, -2.4), st.floats(0.1, 2.0))
def test_theorem_counts_grow_as_delta_shrinks(logd, step):
    up1, lo1 = G.theorem_main(10 ** logd)
    up2, lo2 = G.theorem_main(10 ** (logd - step))
    assert up2 >= up1 and lo2 >= lo1
    assert lo1 <= up1


def test_theorem_domain():
    with pytest.raises(ValueError):
        G.theorem_main(1.5)
    with pytest.raises(ValueError):
        G.theorem_main(1e-2)
    with pytest.raises(ValueError):
        G.theorem_main(1e-3, eps=1.0)


def test_saving_is_positive_on_a_grid():
    deltas = np.logspace(-3, -30, 28)
    assert 0 < G.minimum_saving(deltas) < 1
