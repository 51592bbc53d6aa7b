import itertools
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftbell.pauli import (CssCode, PauliString, StabilizerTableau, commutes, gf2_rank, gf2_solve,
                          group_equivalent, shor_code, steane_code, validate_css_bell)

MATS = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Z": np.array([[1, 0], [0, -1]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
}

paulis = st.integers(1, 3).flatmap(
    lambda n: st.tuples(st.sampled_from("+-"), st.text("IXYZ", min_size=n, max_size=n)))


def dense(p: PauliString) -> np.ndarray:
    s = str(p)
    return p.sign * reduce(np.kron, [MATS[c] for c in s[1:]])


def same_len(a, b):
    n = min(len(a[1]), len(b[1]))
    return PauliString.from_str(a[0] + a[1][:n]), PauliString.from_str(b[0] + b[1][:n])


@given(paulis, paulis)
def test_product_matches_dense_matrices(a, b):
    p, q = same_len(a, b)
    prod = dense(p) @ dense(q)
    got = dense(p * q)
    # anticommuting products carry +-i, which the Hermitian convention drops
    assert np.allclose(prod, got) or np.allclose(prod, 1j * got) or np.allclose(prod, -1j * got)
    if commutes(p, q):
        assert np.allclose(prod, got)


@given(paulis, paulis)
def test_commutation_matches_dense(a, b):
    p, q = same_len(a, b)
    P, Q = dense(p), dense(q)
    assert commutes(p, q) == np.allclose(P @ Q, Q @ P)


def test_parse_and_print():
    p = PauliString.from_str("-xyZi")
    assert str(p) == "-XYZI"
    assert p.weight() == 3
    assert PauliString.single(3, {1: "Y"}) == PauliString.from_str("IYI")
    with pytest.raises(ValueError):
        PauliString.from_str("XQ")


def _span_rank(m):
    """Brute-force rank: log2 of the number of distinct row combinations."""
    rows = [tuple(r) for r in m]
    seen = set()
    for mask in itertools.product((0, 1), repeat=len(rows)):
        v = np.zeros(m.shape[1], np.uint8)
        for bit, r in zip(mask, m):
            if bit:
                v ^= r
        seen.add(v.tobytes())
    return int(np.log2(len(seen)))


@settings(max_examples=60)
@given(st.integers(1, 6), st.integers(1, 7), st.integers(0, 2 ** 31 - 1))
def test_gf2_rank_oracle(r, c, seed):
    m = np.random.default_rng(seed).integers(0, 2, (r, c), dtype=np.uint8)
    assert gf2_rank(m) == _span_rank(m)


@settings(max_examples=40)
@given(st.integers(2, 6), st.integers(0, 2 ** 31 - 1))
def test_gf2_solve_returns_solution(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 2, (n, n), dtype=np.uint8)
    x = rng.integers(0, 2, n, dtype=np.uint8)
    b = x @ a % 2                   # a row combination
    sol = gf2_solve(a, b)
    assert sol is not None and np.array_equal(sol @ a % 2, b)


def _statevector_bell(n):
    psi = np.zeros(2 ** (2 * n))
    for bits in itertools.product((0, 1), repeat=n):
        idx = int("".join(map(str, bits + bits)), 2)
        psi[idx] = 1
    return psi / np.linalg.norm(psi)


@pytest.mark.parametrize("n", [1, 2])
def test_bell_pairs_against_statevector(n):
    t = StabilizerTableau.bell_pairs(n)
    psi = _statevector_bell(n)
    for s in t.stabilizers:
        assert np.allclose(dense(s) @ psi, psi)


def test_measurement_deterministic_on_stabilizer():
    t = StabilizerTableau.bell_pairs(2)
    rng = np.random.default_rng(0)
    assert t.measure(PauliString.from_str("XIXI"), rng=rng) == 0
    assert t.measure(PauliString.from_str("ZIZI"), rng=rng) == 0
    assert t.measure(PauliString.from_str("-ZIZI"), rng=rng) == 1


def test_measurement_random_then_repeatable():
    t = StabilizerTableau.zero_state(1)
    rng = np.random.default_rng(5)
    first = t.measure(PauliString.from_str("X"), rng=rng)
    for _ in range(5):
        assert t.measure(PauliString.from_str("X"), rng=rng) == first


def test_bundled_codes_validate():
    assert validate_css_bell(steane_code())
    assert validate_css_bell(shor_code())


@pytest.mark.parametrize("seed", range(5))
def test_validation_with_random_outcomes(seed):
    assert validate_css_bell(steane_code(), forced=False, rng=np.random.default_rng(seed))


def test_group_equivalence_ignores_generator_choice():
    gens = [PauliString.from_str(s) for s in ("XX", "ZZ")]
    other = [PauliString.from_str(s) for s in ("-YY", "ZZ")]
    assert group_equivalent(gens, other)
    assert not group_equivalent(gens, [PauliString.from_str("XX"), PauliString.from_str("-ZZ")])


def test_code_parser_reports_line_numbers():
    with pytest.raises(ValueError, match="line 3"):
        CssCode.from_text("X:\nXXXX\nXQXX\n")
    with pytest.raises(ValueError):
        CssCode.from_text("X:\nXX\nZ:\nZI\nLX:\nXX\nLZ:\nZZ\n")   # ZI anticommutes with XX
