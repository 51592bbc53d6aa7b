"""Logical-error flow networks for the Interface+EPP circuit.

Each side runs CNOT(1->2), CNOT(3->4), CNOT(3->1) on its four logical
blocks and measures blocks 2, 3, 4 in Z, X, Z.  A bad component (interface
or exRec) injects a logical error that propagates through the CNOTs; the
flow on an edge counts propagation paths, so parity at a sink tells whether
that sink sees the error.

X network sinks: D1 (output pair, must be odd), D2 (block 2), D3 (block 4).
Z network sinks: D1 (output pair), D2 (block 3).  Alice is side 1, Bob side 2.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field

from .gadgets import EPP_CNOTS, EPP_MEAS

__all__ = [
    "FlowNetwork", "FeasibleSolution", "build_network", "enumerate_feasible",
    "classify_cases", "fault_order", "sink_flows", "check_solution", "weighted_2I",
    "INTERFACES", "EXRECS", "MEAS_EXRECS",
]

S, T = "S", "T"
INTERFACES = "NOPQ"                  # ebit 1..4
EXRECS = {1: "ABC", 2: "GHI"}        # CNOT exRecs in EPP_CNOTS order
MEAS_EXRECS = {1: "DEF", 2: "JKL"}   # measurement exRecs for blocks 2, 3, 4


@dataclass
class FlowNetwork:
    error_type: str
    vertices: list
    capacity: dict            # (u, v) -> int
    sources: dict             # label -> vertex fed directly from S
    parity: dict              # sink -> required parity of f(sink, T)
    _paths: dict = field(default_factory=dict, repr=False)

    @property
    def edges(self) -> list:
        return sorted(self.capacity)

    def successors(self, u) -> list:
        return [v for (a, v) in self.edges if a == u]

    def relabel(self, mapping: dict) -> "FlowNetwork":
        m = lambda x: mapping.get(x, x)
        return FlowNetwork(self.error_type, [m(v) for v in self.vertices],
                           {(m(u), m(v)): c for (u, v), c in self.capacity.items()},
                           {k: m(v) for k, v in self.sources.items()},
                           {m(k): p for k, p in self.parity.items()})

    def to_csv(self, flow: dict | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["u", "v", "capacity", "flow"])
        for e in self.edges:
            w.writerow([e[0], e[1], self.capacity[e], (flow or {}).get(e, 0)])
        return buf.getvalue()


@dataclass(frozen=True)
class FeasibleSolution:
    error_type: str
    saturated: tuple          # source labels at capacity
    flow: tuple               # ((u, v), f) for every edge with f > 0
    order: int

    @property
    def components(self) -> tuple:
        return tuple(sorted({component(s) for s in self.saturated}))

    def flow_dict(self) -> dict:
        return dict(self.flow)


def component(label: str) -> str:
    """'A.c' -> 'A', 'N1' -> 'N1', 'D' -> 'D'."""
    return label.split(".")[0]


def _kind(comp: str) -> str:
    if comp[0] in INTERFACES:
        return "interface"
    if any(comp in s for s in EXRECS.values()):
        return "cnot"
    return "meas"


# ---------------------------------------------------------------- construction

def _raw_graph(error_type: str):
    """Unpruned edges, source attachments and sinks for one error type."""
    edges, sources = set(), {}
    sinks = ("D1", "D2", "D3") if error_type == "X" else ("D1", "D2")
    for side in (1, 2):
        seg = {b: f"w{b + 1}{side}_0" for b in range(4)}
        for b in range(4):
            sources[f"{INTERFACES[b]}{side}"] = seg[b]
        for g, (c, t) in zip(EXRECS[side], EPP_CNOTS):
            c1 = f"w{c + 1}{side}_{g}"
            t1 = f"w{t + 1}{side}_{g}"
            edges |= {(seg[c], c1), (seg[t], t1)}
            # X copies control -> target, Z copies target -> control
            edges.add((seg[c], t1) if error_type == "X" else (seg[t], c1))
            sources[f"{g}.c"], sources[f"{g}.t"] = c1, t1
            seg[c], seg[t] = c1, t1
        edges.add((seg[0], "D1"))
        sink_of = {"X": {"Z": iter(("D2", "D3"))}, "Z": {"X": iter(("D2",))}}[error_type]
        for (b, basis), mlabel in zip(EPP_MEAS, MEAS_EXRECS[side]):
            if basis not in sink_of:
                continue        # this error type commutes with the measurement
            mv = f"m{b + 1}{side}"
            edges |= {(seg[b], mv), (mv, next(sink_of[basis]))}
            sources[mlabel] = mv
    for d in sinks:
        edges.add((d, T))
    return edges, sources, sinks


def build_network(error_type: str) -> FlowNetwork:
    """Propagation network for logical X or Z errors through Interface+EPP."""
    error_type = error_type.upper()
    if error_type not in ("X", "Z"):
        raise ValueError("error_type must be 'X' or 'Z'")
    edges, sources, sinks = _raw_graph(error_type)
    # keep only vertices that can reach T
    live = {T}
    changed = True
    while changed:
        changed = False
        for u, v in edges:
            if v in live and u not in live:
                live.add(u)
                changed = True
    edges = {e for e in edges if e[0] in live and e[1] in live}
    sources = {k: v for k, v in sources.items() if v in live}
    verts = sorted({u for e in edges for u in e} | {S})
    net = FlowNetwork(error_type, verts, {}, sources,
                      {d: (1 if d == "D1" else 0) for d in sinks})
    for e in edges:
        net.capacity[e] = 0
    for lab, v in sources.items():
        net.capacity[(S, v)] = 0
    full = _propagate(net, list(sources))
    for e in net.capacity:
        net.capacity[e] = full.get(e, 0)
    return net


def _paths_to_T(net: FlowNetwork) -> dict:
    if not net._paths:
        succ: dict = {}
        for u, v in net.capacity:
            succ.setdefault(u, []).append(v)
        memo = {T: 1}

        def count(u):
            if u not in memo:
                memo[u] = sum(count(v) for v in succ.get(u, ()))
            return memo[u]

        for v in net.vertices:
            count(v)
        net._paths = memo
    return net._paths


def _propagate(net: FlowNetwork, saturated) -> dict:
    """Path-count flow: every propagation path from a saturated source carries one unit."""
    P = _paths_to_T(net)
    succ: dict = {}
    for u, v in net.capacity:
        if u != S:
            succ.setdefault(u, []).append(v)
    flow: dict = {}
    for lab in saturated:
        x = net.sources[lab]
        flow[(S, x)] = flow.get((S, x), 0) + P[x]
        reach = {x: 1}                   # number of paths x -> u
        for u in _topo(succ, x):
            for v in succ.get(u, ()):
                reach[v] = reach.get(v, 0) + reach[u]
                flow[(u, v)] = flow.get((u, v), 0) + reach[u] * P[v]
    return flow


def _topo(succ: dict, start) -> list:
    seen, out = set(), []

    def visit(u):
        if u in seen:
            return
        seen.add(u)
        for v in succ.get(u, ()):
            visit(v)
        out.append(u)

    visit(start)
    return out[::-1]


# ---------------------------------------------------------------- enumeration

def sink_flows(net: FlowNetwork, saturated) -> dict:
    flow = _propagate(net, saturated)
    return {d: flow.get((d, T), 0) for d in net.parity}


def accepted(net: FlowNetwork, saturated) -> bool:
    """Every comparison sink has even flow."""
    f = sink_flows(net, saturated)
    return all(f[d] % 2 == 0 for d in net.parity if d != "D1")


def is_feasible(net: FlowNetwork, saturated) -> bool:
    f = sink_flows(net, saturated)
    return all(f[d] % 2 == p for d, p in net.parity.items())


def fault_order(labels) -> int:
    """Faults needed: one per bad interface, two per bad exRec (a malignant pair)."""
    comps = {component(s) for s in labels}
    return sum(1 if _kind(c) == "interface" else 2 for c in comps)


def enumerate_feasible(net: FlowNetwork, max_source_weight: int = 2) -> dict:
    """{fault order: [FeasibleSolution]} over all saturation patterns up to that order."""
    if not 1 <= max_source_weight <= 4:
        raise ValueError("max_source_weight must lie in 1..4")
    labels = sorted(net.sources)
    out: dict = {w: [] for w in range(1, max_source_weight + 1)}
    for r in range(1, 2 * max_source_weight + 1):
        for combo in itertools.combinations(labels, r):
            w = fault_order(combo)
            if w > max_source_weight:
                continue
            if is_feasible(net, combo):
                flow = _propagate(net, combo)
                out[w].append(FeasibleSolution(net.error_type, combo,
                                               tuple(sorted((e, f) for e, f in flow.items() if f)), w))
    for w in out:
        out[w].sort(key=lambda s: s.saturated)
    return out


def check_solution(net: FlowNetwork, sol: FeasibleSolution) -> list:
    """Independent re-check; returns a list of violated constraints (empty if fine)."""
    f = sol.flow_dict()
    bad = []
    for e, v in f.items():
        if e not in net.capacity:
            bad.append(f"unknown edge {e}")
        elif v > net.capacity[e]:
            bad.append(f"capacity exceeded on {e}")
    for v in net.vertices:
        if v in (S, T):
            continue
        fin = sum(x for (a, b), x in f.items() if b == v)
        fout = sum(x for (a, b), x in f.items() if a == v)
        if fin != fout:
            bad.append(f"conservation fails at {v}")
    for lab, v in net.sources.items():
        x = f.get((S, v), 0)
        want = net.capacity[(S, v)] if lab in sol.saturated else 0
        # shared source vertices add up, so only check labels that own their vertex
        if sum(1 for w in net.sources.values() if w == v) == 1 and x != want:
            bad.append(f"source edge {lab} neither empty nor saturated")
    for d, p in net.parity.items():
        if f.get((d, T), 0) % 2 != p:
            bad.append(f"parity at {d}")
    return bad


# ---------------------------------------------------------------- case table

_PAULI = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def _exrec_classes(nets: dict, g: str) -> list:
    """Two-block Pauli classes (control first) on CNOT exRec g that are accepted but bad."""
    out = []
    for xc, zc, xt, zt in itertools.product((0, 1), repeat=4):
        if not (xc or zc or xt or zt):
            continue
        xs = [s for s, b in ((f"{g}.c", xc), (f"{g}.t", xt)) if b and s in nets["X"].sources]
        zs = [s for s, b in ((f"{g}.c", zc), (f"{g}.t", zt)) if b and s in nets["Z"].sources]
        if not (accepted(nets["X"], xs) and accepted(nets["Z"], zs)):
            continue
        if is_feasible(nets["X"], xs) or is_feasible(nets["Z"], zs):
            out.append(_PAULI[(xc, zc)] + _PAULI[(xt, zt)])
    return sorted(out)


def _pair_name(comps) -> str:
    return "".join(sorted(comps, key=lambda c: (c[1], c[0])))


def classify_cases(solutions_x: dict, solutions_z: dict, nets: dict | None = None) -> dict:
    """Group feasible solutions into the second- and third-order cases."""
    nets = nets or {"X": build_network("X"), "Z": build_network("Z")}

    def by_kind(sol):
        comps = sol.components
        kinds = sorted(_kind(c) for c in comps)
        return comps, kinds

    table: dict = {k: [] for k in ("2I", "2II_X", "2II_Z", "2II_Y", "2III", "3I", "3II",
                                   "3III", "3IV", "other")}
    exrecs = [g for s in (1, 2) for g in EXRECS[s]]
    for g in exrecs:
        for cls in _exrec_classes(nets, g):
            table["2I"].append(f"{g}:{cls}")
    pairs = {}
    for et, sols in (("X", solutions_x), ("Z", solutions_z)):
        pairs[et] = set()
        for w in (2, 3, 4):
            for s in sols.get(w, []):
                comps, kinds = by_kind(s)
                n_in = kinds.count("interface")
                if kinds == ["interface", "interface"]:
                    pairs[et].add(_pair_name(comps))
                elif kinds == ["interface"] * 3:
                    table["3IV"].append(f"{et}:{'+'.join(comps)}")
                elif n_in == 1 and len(comps) == 2:
                    table["3II"].append(f"{et}:{'+'.join(comps)}")
                elif n_in == 0 and len(comps) == 2:
                    # two exRecs cost three faults only when they share an EC
                    if _consecutive(*comps):
                        table["3I"].append(f"{et}:{'+'.join(comps)}")
                elif len(comps) == 1 or w == 4:
                    continue
                else:
                    table["other"].append(f"{et}:{'+'.join(s.saturated)}")
    table["2II_X"] = sorted(pairs["X"])
    table["2II_Z"] = sorted(pairs["Z"])
    table["2II_Y"] = sorted(pairs["X"] & pairs["Z"])
    # one interface carries two faults: same component sets as 2II, each ordered both ways
    table["3III"] = sorted(f"{a}{b}" for p in pairs["X"] | pairs["Z"]
                           for a, b in (( p[:2], p[2:]), (p[2:], p[:2])))
    # one fault in the EPP part alone is corrected, so 2III reduces to order one
    table["2III"] = sorted(f"{et}:{'+'.join(s.components)}"
                           for et, sols in (("X", solutions_x), ("Z", solutions_z))
                           for s in sols.get(1, []))
    for k in ("3I", "3II", "3IV", "other"):
        table[k] = sorted(set(table[k]))
    return {"cases": table, "counts": {k: len(v) for k, v in table.items()}}


def _consecutive(a: str, b: str) -> bool:
    """Two exRecs on the same side that act one after the other on a common block."""
    for side, gs in EXRECS.items():
        blocks = {g: set(cb) for g, cb in zip(gs, EPP_CNOTS)}
        last = {}
        for g, cb in zip(gs, EPP_CNOTS):
            for blk in cb:
                last[blk] = g
        for (blk, _), m in zip(EPP_MEAS, MEAS_EXRECS[side]):
            blocks[m] = {blk}
        if a in blocks and b in blocks:
            if a in MEAS_EXRECS[side] or b in MEAS_EXRECS[side]:
                m, g = (a, b) if a in MEAS_EXRECS[side] else (b, a)
                if g in MEAS_EXRECS[side]:
                    return False
                return last[next(iter(blocks[m]))] == g
            return bool(blocks[a] & blocks[b])
    return False


def weighted_2I(dist: dict, malignant_pairs: float) -> float:
    """Malignant pairs across all CNOT exRecs whose logical error is accepted but bad.

    dist maps two-letter class labels (control first) to their fraction of
    the exRec's malignant pairs.
    """
    nets = {"X": build_network("X"), "Z": build_network("Z")}
    total = 0.0
    for side in (1, 2):
        for g in EXRECS[side]:
            total += sum(dist.get(c, 0.0) for c in _exrec_classes(nets, g))
    return total * malignant_pairs


def case_table_json(table: dict) -> str:
    return json.dumps(table, indent=2, sort_keys=True, ensure_ascii=False)
