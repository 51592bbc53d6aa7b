import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ftbell import framesim as fs
from ftbell import gadgets as gl

# frozen from the gadget builders; the acceptance module holds the reference vectors
CENSUS = {
    "prep-zero": [5, 3, 0, 1, 11, 0, 0],
    "prep-plus": [3, 5, 1, 0, 11, 0, 0],
    "ec": [8, 8, 8, 8, 36, 0, 0],
    "knill-ec": [8, 8, 8, 8, 36, 0, 0],
    "identity-exrec": [16, 16, 16, 16, 72, 0, 7],
    "meas-z-exrec": [8, 8, 8, 15, 36, 0, 0],
    "direct-ebit": [40, 40, 33, 33, 166, 7, 0],
    "epp-5to1": [0, 0, 8, 0, 8, 5, 0],
}


@pytest.mark.parametrize("name", sorted(CENSUS))
def test_census(name):
    assert gl.get_gadget(name).census.tolist() == CENSUS[name]


def test_unknown_gadget():
    with pytest.raises(KeyError):
        gl.get_gadget("no-such-gadget")


def test_noise_model_domain():
    with pytest.raises(ValueError):
        gl.NoiseModel(2.0)
    with pytest.raises(ValueError):
        gl.NoiseModel(1e-3, sigma=(1,) * 6)
    nm = gl.NoiseModel(1e-3, eps6=5e-4)
    assert nm.rates()[5] == 5e-4
    assert nm.rates()[4] == 1e-3


def test_dump_format():
    line = gl.get_gadget("prep-zero").dump().splitlines()[0].split()
    assert len(line) == 5 and line[0] == "0"


@pytest.mark.parametrize("name", ["ec", "cnot-exrec", "direct-ebit", "interface-epp", "shor-xx"])
def test_noiseless_runs_accept_and_succeed(name):
    g = gl.get_gadget(name)
    res = fs.run_batch(g, fs.FaultBatch(4))
    assert res.accepted.all()
    assert not res.bad.any()


def _random_faults(g, k, rng):
    tab, lens = fs._support_table(g, "werner")
    locs = rng.choice(g.n_locations, size=k, replace=False)
    return {int(l): int(tab[l, rng.integers(lens[l])]) for l in locs}


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["ec", "knill-ec", "prep-zero-exrec", "meas-z-exrec", "direct-ebit"]),
       st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_frame_sim_agrees_with_tableau(name, k, seed):
    """The Pauli-frame result equals a full stabilizer simulation shot for shot."""
    g = gl.get_gadget(name)
    faults = _random_faults(g, k, np.random.default_rng(seed))
    fb = fs.FaultBatch(1)
    for l, c in faults.items():
        fb.add([l], [c])
    res = fs.run_batch(g, fb)
    tab = fs.tableau_run(g, faults, seed)
    assert bool(res.anc_ok[0]) == tab["anc_ok"]
    assert bool(res.proto_ok[0]) == tab["proto_ok"]
    if tab["anc_ok"] and tab["proto_ok"]:
        for lab, v in res.terms.items():
            assert int(v[0]) == int(tab["terms"][lab])


@pytest.mark.parametrize("name", ["ec", "knill-ec", "identity-exrec", "prep-zero-exrec"])
def test_single_faults_are_never_malignant(name):
    assert fs.single_fault_scan(gl.get_gadget(name)).malignant.sum() == 0


def test_mpm_bounds_and_symmetry():
    m = fs.enumerate_mpm(gl.get_gadget("ec"))
    assert m.check_bounds()
    assert np.allclose(m.alpha, m.alpha.T)
    # a location pair can only be malignant if it exists
    assert m.alpha[5].sum() == 0 and m.alpha[6].sum() == 0


def test_sampled_mpm_tracks_exact():
    g = gl.get_gadget("ec")
    exact = fs.enumerate_mpm(g).alpha
    samp = fs.sample_mpm(g, 200, seed=3).alpha
    big = exact >= 40
    assert np.all(np.abs(samp[big] - exact[big]) <= 0.1 * exact[big])
    assert np.all(samp[exact == 0] == 0)


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_contains_point(k, n):
    k = min(k, n)
    lo, hi = fs.wilson_ci(k, n)
    assert 0 <= lo <= k / n <= hi <= 1


def test_stratified_is_deterministic_and_bounded():
    g = gl.get_gadget("ec")
    nm = gl.NoiseModel(1e-3)
    a = fs.logical_error_rate(g, nm, 4000, seed=11)
    b = fs.logical_error_rate(g, nm, 4000, seed=11)
    assert a == b
    rate, (lo, hi) = a
    assert lo <= rate <= hi


def test_stratified_threads_do_not_change_results():
    g = gl.get_gadget("ec")
    nm = gl.NoiseModel(2e-3)
    one = fs.stratified_estimate(g, nm, 3000, seed=4, threads=1).evaluate(nm.rates())
    two = fs.stratified_estimate(g, nm, 3000, seed=4, threads=2).evaluate(nm.rates())
    assert one == two


def test_stratified_matches_plain_sampling():
    g = gl.get_gadget("ec")
    nm = gl.NoiseModel(4e-3)
    strat, (lo, hi) = fs.logical_error_rate(g, nm, 20_000, seed=1)
    plain = fs.direct_rate(g, nm, 100_000, seed=2)
    plo, phi = plain["rate_ci"]
    assert lo <= phi and plo <= hi


def test_zero_noise_rate():
    rate, ci = fs.logical_error_rate(gl.get_gadget("ec"), gl.NoiseModel(0.0), 10)
    assert rate == 0.0 and ci[0] == 0.0


def test_pseudo_threshold_of_ec_is_bracketed():
    r = fs.pseudo_threshold(gl.get_gadget("ec"), shots=20_000, seed=5)
    assert r["bracketed"]
    assert 2e-3 < r["threshold"] < 2e-2
    assert r["ci"][0] <= r["threshold"] <= r["ci"][1]
