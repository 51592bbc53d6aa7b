import pytest

from ftbell import flow as F


@pytest.fixture(scope="module", params=["X", "Z"])
def solved(request):
    net = F.build_network(request.param)
    return net, F.enumerate_feasible(net, 3)


def test_every_solution_passes_the_independent_check(solved):
    net, sols = solved
    for w, group in sols.items():
        for s in group:
            assert F.check_solution(net, s) == []
            assert s.order == w == F.fault_order(s.saturated)


def test_no_single_fault_solutions(solved):
    _, sols = solved
    assert sols[1] == []


def test_tampered_flow_is_caught(solved):
    net, sols = solved
    s = sols[2][0]
    e, f = s.flow[0]
    bad = F.FeasibleSolution(s.error_type, s.saturated, ((e, f + 1),) + s.flow[1:], s.order)
    assert F.check_solution(net, bad)


def test_csv_lists_every_edge(solved):
    net, sols = solved
    lines = net.to_csv(sols[2][0].flow_dict()).splitlines()
    assert lines[0] == "u,v,capacity,flow"
    assert len(lines) == len(net.edges) + 1


def test_relabel_round_trip():
    net = F.build_network("X")
    fwd = {v: f"v_{v}" for v in net.vertices}
    back = {b: a for a, b in fwd.items()}
    again = net.relabel(fwd).relabel(back)
    assert again.capacity == net.capacity and again.parity == net.parity


def test_domain_errors():
    with pytest.raises(ValueError):
        F.build_network("Y")
    with pytest.raises(ValueError):
        F.enumerate_feasible(F.build_network("X"), 5)


def test_y_cases_are_the_overlap():
    nets = {"X": F.build_network("X"), "Z": F.build_network("Z")}
    t = F.classify_cases(F.enumerate_feasible(nets["X"], 2), F.enumerate_feasible(nets["Z"], 2), nets)
    c = t["cases"]
    assert set(c["2II_Y"]) == set(c["2II_X"]) & set(c["2II_Z"])
    assert t["counts"]["2II_X"] == len(c["2II_X"])
