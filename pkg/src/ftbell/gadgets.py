"""Circuit IR with typed noisy locations, and builders for the Steane-code gadgets.

A gadget is a flat program: noisy *locations* (preparations, gates, waits,
measurements, nonlocal resources) interleaved with noiseless classical steps
(syndrome decoding, feed-forward, acceptance checks, logical snapshots).  The
program is interpreted by :mod:`ftbell.framesim` and by the tableau engine.

Qubit numbering is global and every ancilla gets fresh qubits, so a gadget
never reuses a wire after it has been measured.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Sequence

import numpy as np


class LocationKind(IntEnum):
    PREP_ZERO = 1
    PREP_PLUS = 2
    MEAS_X = 3
    MEAS_Z = 4
    CNOT = 5
    NONLOCAL = 6
    WAIT = 7


KIND_NAMES = ("prep0", "prep+", "measX", "measZ", "cnot", "nonlocal", "wait")

# op name -> default kind
_OP_KIND = {
    "prep0": LocationKind.PREP_ZERO,
    "prep+": LocationKind.PREP_PLUS,
    "mx": LocationKind.MEAS_X,
    "mz": LocationKind.MEAS_Z,
    "cnot": LocationKind.CNOT,
    "cz": LocationKind.CNOT,
    "ebit": LocationKind.NONLOCAL,
    "wait": LocationKind.WAIT,
}
TWO_QUBIT_OPS = ("cnot", "cz", "ebit")

# Hamming check matrix matching data/steane.css: qubit i is in check b iff bit b of i+1
HAMMING = np.array([[((i + 1) >> b) & 1 for i in range(7)] for b in range(3)], np.uint8)


@dataclass(frozen=True)
class Location:
    id: int
    kind: LocationKind
    op: str
    qubits: tuple
    timestep: int
    party: str = "A"
    guard: str | None = None


@dataclass(frozen=True)
class Classical:
    """Noiseless classical step.

    op is one of
      decode  : Hamming-decode rec flips `src` and flip `pauli` on `targets[pos]`
      logical : bit `name` = parity(src) xor (syndrome != 0)
      xor     : bit `name` = xor of `src`
      func    : bit `name` = fn(*src)
      check   : reject the shot unless xor(src) == 0
      feed    : if xor(src) apply `pauli` to every qubit in `targets`
      snap    : record the ideal logical class of each block in `blocks`
    Entries of `src` are location ids (measurement flips) or bit names.
    """
    op: str
    src: tuple = ()
    name: str | None = None
    targets: tuple = ()
    pauli: str = ""
    group: str = "anc"
    guard: str | None = None
    blocks: tuple = ()
    fn: Callable | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Gadget:
    name: str
    n_qubits: int
    program: tuple
    blocks: dict              # label -> 7 qubit indices of output code blocks
    terms: tuple              # (label, sources) whose xor must vanish for success
    inputs: dict = field(default_factory=dict)   # label -> qubits of clean input codewords
    meta: dict = field(default_factory=dict)

    @property
    def locations(self) -> list[Location]:
        return [op for op in self.program if isinstance(op, Location)]

    @property
    def census(self) -> np.ndarray:
        return census(self)

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    def verification_points(self) -> list[Classical]:
        return [op for op in self.program if isinstance(op, Classical) and op.op == "check"]

    def dump(self) -> str:
        lines = []
        for loc in self.locations:
            qs = ",".join(str(q) for q in loc.qubits)
            lines.append(f"{loc.id} {int(loc.kind)} {qs} {loc.timestep} {loc.party}")
        return "\n".join(lines) + ("\n" if lines else "")


def census(g: Gadget) -> np.ndarray:
    n = np.zeros(7, np.int64)
    for loc in g.locations:
        n[int(loc.kind) - 1] += 1
    return n


@dataclass
class NoiseModel:
    """Independent Pauli noise.  eps is the local CNOT rate; eps_i = sigma_i * eps.

    ebit_model selects the support of kind-6 'ebit' locations: 'werner' puts
    X, Y or Z on Alice's half, 'depolarizing' uses all 15 two-qubit Paulis.
    eps6 (absolute) overrides sigma[5] * eps when given.
    """
    eps: float
    sigma: tuple = (4 / 15, 4 / 15, 4 / 15, 4 / 15, 1.0, 1.0, 4 / 5)
    eps6: float | None = None
    ebit_model: str = "werner"

    def __post_init__(self):
        if len(self.sigma) != 7:
            raise ValueError("sigma must have 7 entries")
        for r in self.rates():
            if not 0.0 <= r <= 1.0:
                raise ValueError("every eps_i must lie in [0, 1]")

    def rates(self) -> np.ndarray:
        r = np.asarray(self.sigma, float) * self.eps
        if self.eps6 is not None:
            r[5] = self.eps6
        return r

    def support(self, loc: Location) -> np.ndarray:
        """Pauli codes a fault at `loc` is drawn from (uniformly).

        One-qubit code c: x = c & 1, z = c >> 1 (1=X, 2=Z, 3=Y).  Two-qubit code:
        low two bits on the first qubit, high two bits on the second.
        """
        return fault_support(loc, self.ebit_model)


def fault_support(loc: Location, ebit_model: str = "werner") -> np.ndarray:
    if loc.op in ("prep0", "mz"):
        return np.array([1])
    if loc.op in ("prep+", "mx"):
        return np.array([2])
    if loc.op == "wait":
        return np.array([1, 2, 3])
    if loc.op == "ebit" and ebit_model == "werner":
        return np.array([1, 2, 3])
    return np.arange(1, 16)


# ---------------------------------------------------------------- builder

class Circuit:
    """Mutable helper that emits a gadget program."""

    def __init__(self):
        self.program: list = []
        self.n = 0
        self._busy: dict[int, int] = {}
        self._guard: str | None = None
        self._party = "A"
        self._nbits = 0
        self._nloc = 0

    # qubits and bookkeeping
    def alloc(self, k: int) -> list[int]:
        qs = list(range(self.n, self.n + k))
        self.n += k
        return qs

    def party(self, p: str) -> "Circuit":
        self._party = p
        return self

    def guard(self, g: str | None) -> "Circuit":
        self._guard = g
        return self

    def fresh(self, stem: str) -> str:
        self._nbits += 1
        return f"{stem}{self._nbits}"

    def _loc(self, op: str, qubits: Sequence[int], kind: LocationKind | None = None,
             party: str | None = None) -> int:
        t = max(self._busy.get(q, -1) for q in qubits) + 1
        for q in qubits:
            self._busy[q] = t
        lid = self._nloc
        self._nloc += 1
        self.program.append(Location(lid, kind or _OP_KIND[op], op, tuple(qubits), t,
                                     party or self._party, self._guard))
        return lid

    # noisy locations
    def prep0(self, q):
        return self._loc("prep0", [q])

    def prepp(self, q):
        return self._loc("prep+", [q])

    def mx(self, q):
        return self._loc("mx", [q])

    def mz(self, q):
        return self._loc("mz", [q])

    def wait(self, q):
        return self._loc("wait", [q])

    def cnot(self, c, t, kind=None, party=None):
        return self._loc("cnot", [c, t], kind, party)

    def cz(self, a, b, kind=None):
        return self._loc("cz", [a, b], kind)

    def ebit(self, a, b):
        return self._loc("ebit", [a, b], party="S")

    # classical steps
    def classical(self, op: str, **kw) -> Classical:
        kw.setdefault("guard", self._guard)
        c = Classical(op, **kw)
        self.program.append(c)
        return c

    def decode(self, recs, targets, pauli):
        self.classical("decode", src=tuple(recs), targets=tuple(targets), pauli=pauli)

    def logical(self, recs, stem="m") -> str:
        name = self.fresh(stem)
        self.classical("logical", src=tuple(recs), name=name)
        return name

    def xor(self, src, stem="b") -> str:
        name = self.fresh(stem)
        self.classical("xor", src=tuple(src), name=name)
        return name

    def func(self, fn, src, stem="f") -> str:
        name = self.fresh(stem)
        self.classical("func", src=tuple(src), name=name, fn=fn)
        return name

    def check(self, src, group="anc"):
        self.classical("check", src=tuple(src), group=group)

    def feed(self, src, pauli, targets):
        self.classical("feed", src=tuple(src), pauli=pauli, targets=tuple(targets))

    def snap(self, name, blocks: dict):
        self.classical("snap", name=name, blocks=tuple((k, tuple(v)) for k, v in blocks.items()))

    def build(self, name, blocks, terms, inputs=None, **meta) -> Gadget:
        return Gadget(name, self.n, tuple(self.program), dict(blocks), tuple(terms),
                      dict(inputs or {}), meta)


# ---------------------------------------------------------------- Steane pieces

# encoder for |0>: |+> on qubits 0, 1, 3 then these CNOTs (0-indexed)
ENCODER_CNOTS = ((1, 2), (3, 5), (0, 4), (1, 5), (0, 2), (3, 6), (3, 4), (2, 6))
ENCODER_PLUS = (0, 1, 3)
# weight-3 logical Z representative checked by the verifier
VERIFY_SUPPORT = (2, 4, 5)


def prep_block(c: Circuit, basis: str) -> list[int]:
    """Verified encoded |0> (basis 'Z') or |+> (basis 'X'); returns the 7 data qubits.

    The |+> version is the Hadamard dual: preparation bases swapped and every
    CNOT reversed, with an X-basis verifier.
    """
    q = c.alloc(8)
    data, v = q[:7], q[7]
    if basis == "Z":
        for i in range(7):
            (c.prepp if i in ENCODER_PLUS else c.prep0)(data[i])
        for a, b in ENCODER_CNOTS:
            c.cnot(data[a], data[b])
        c.prep0(v)
        for i in VERIFY_SUPPORT:
            c.cnot(data[i], v)
        r = c.mz(v)
    elif basis == "X":
        for i in range(7):
            (c.prep0 if i in ENCODER_PLUS else c.prepp)(data[i])
        for a, b in ENCODER_CNOTS:
            c.cnot(data[b], data[a])
        c.prepp(v)
        for i in VERIFY_SUPPORT:
            c.cnot(v, data[i])
        r = c.mx(v)
    else:
        raise ValueError("basis must be 'X' or 'Z'")
    c.check([r], group="anc")
    return data


def steane_ec(c: Circuit, data: Sequence[int], order: str = "xz") -> list[int]:
    """Steane EC in place.

    order="xz" extracts the X syndrome (|+> ancilla) first, "zx" the Z
    syndrome first.  The two orders are Hadamard duals of each other.
    """
    if order not in ("xz", "zx"):
        raise ValueError(f"unknown EC order {order!r}")
    for pauli in order.upper():
        if pauli == "X":
            anc = prep_block(c, "X")
            for d, a in zip(data, anc):
                c.cnot(d, a)
            recs = [c.mz(a) for a in anc]
        else:
            anc = prep_block(c, "Z")
            for d, a in zip(data, anc):
                c.cnot(a, d)
            recs = [c.mx(a) for a in anc]
        c.decode(recs, data, pauli)
    return list(data)


def knill_ec(c: Circuit, data: Sequence[int]) -> list[int]:
    """Knill EC: teleport the block through an encoded Bell pair; returns the new block."""
    a1 = prep_block(c, "X")
    a2 = prep_block(c, "Z")
    for x, y in zip(a1, a2):
        c.cnot(x, y)
    for d, x in zip(data, a1):
        c.cnot(d, x)
    rx = [c.mx(d) for d in data]
    rz = [c.mz(x) for x in a1]
    mz = c.logical(rz, "kz")
    mx = c.logical(rx, "kx")
    c.feed([mz], "X", a2)
    c.feed([mx], "Z", a2)
    return list(a2)


# EC order guarding a Z-basis (|0>, Z measurement) or X-basis block: the
# syndrome that matters most is extracted last.
_ORDER = {"Z": "zx", "X": "xz"}


def _ec(c: Circuit, data, kind: str, order: str = "xz"):
    if kind == "steane":
        return steane_ec(c, data, order)
    if kind == "knill":
        return knill_ec(c, data)
    raise ValueError(f"unknown EC kind {kind!r}")


def _out(label, which):
    return ("out", label, which)


def _snap(snap, label, which):
    return ("snap", snap, label, which)


# ---------------------------------------------------------------- gadgets

def build_prep_zero() -> Gadget:
    c = Circuit()
    d = prep_block(c, "Z")
    return c.build("prep_zero", {"D": d}, [("D.x", [_out("D", "x")])])


def build_prep_plus() -> Gadget:
    c = Circuit()
    d = prep_block(c, "X")
    return c.build("prep_plus", {"D": d}, [("D.z", [_out("D", "z")])])


def build_prep_exrec(basis: str = "Z", strict: bool = False) -> Gadget:
    """Verified preparation followed by one EC.

    Only the logical flip that changes the prepared eigenstate counts as a
    failure unless strict=True, in which case either logical flip does.
    """
    c = Circuit()
    d = prep_block(c, basis)
    steane_ec(c, d, _ORDER[basis])
    bad = "x" if basis == "Z" else "z"
    terms = [("D.x", [_out("D", "x")]), ("D.z", [_out("D", "z")])] if strict else \
        [(f"D.{bad}", [_out("D", bad)])]
    return c.build(f"prep_{'zero' if basis == 'Z' else 'plus'}_exrec", {"D": d}, terms)


def build_steane_ec() -> Gadget:
    c = Circuit()
    d = c.alloc(7)
    steane_ec(c, d)
    return c.build("steane_ec", {"D": d}, [("D.x", [_out("D", "x")]), ("D.z", [_out("D", "z")])],
                   inputs={"D": d})


def build_knill_ec() -> Gadget:
    c = Circuit()
    d = c.alloc(7)
    out = knill_ec(c, d)
    return c.build("knill_ec", {"D": out}, [("D.x", [_out("D", "x")]), ("D.z", [_out("D", "z")])],
                   inputs={"D": d})


def build_cnot_exrec(sigma6_role: str = "nonlocal", ec: str = "steane") -> Gadget:
    """Leading ECs, transversal CNOT, trailing ECs.  Success means the output
    logical frame equals the CNOT image of the frame entering the Rec."""
    if sigma6_role not in ("local", "nonlocal"):
        raise ValueError("sigma6_role must be 'local' or 'nonlocal'")
    kind = LocationKind.NONLOCAL if sigma6_role == "nonlocal" else LocationKind.CNOT
    c = Circuit()
    a, b = c.alloc(7), c.alloc(7)
    inputs = {"A": list(a), "B": list(b)}
    # The control block corrects Z first and the target block X first, so the
    # exRec maps to itself under Hadamard duality with the blocks swapped.
    a = _ec(c, a, ec, "zx")
    b = _ec(c, b, ec, "xz")
    c.snap("in", {"A": a, "B": b})
    for x, y in zip(a, b):
        c.cnot(x, y, kind=kind)
    a = _ec(c, a, ec, "zx")
    b = _ec(c, b, ec, "xz")
    terms = [
        ("A.x", [_out("A", "x"), _snap("in", "A", "x")]),
        ("A.z", [_out("A", "z"), _snap("in", "A", "z"), _snap("in", "B", "z")]),
        ("B.x", [_out("B", "x"), _snap("in", "B", "x"), _snap("in", "A", "x")]),
        ("B.z", [_out("B", "z"), _snap("in", "B", "z")]),
    ]
    return c.build("cnot_exrec", {"A": a, "B": b}, terms, inputs=inputs)


def build_identity_exrec() -> Gadget:
    c = Circuit()
    d = c.alloc(7)
    steane_ec(c, d)
    c.snap("in", {"D": d})
    for q in d:
        c.wait(q)
    steane_ec(c, d)
    terms = [("D.x", [_out("D", "x"), _snap("in", "D", "x")]),
             ("D.z", [_out("D", "z"), _snap("in", "D", "z")])]
    return c.build("identity_exrec", {"D": d}, terms, inputs={"D": d})


def build_meas_exrec(basis: str = "Z") -> Gadget:
    """Leading EC then transversal destructive measurement, decoded to one bit."""
    c = Circuit()
    d = c.alloc(7)
    steane_ec(c, d, _ORDER[basis])
    c.snap("in", {"D": d})
    recs = [(c.mz if basis == "Z" else c.mx)(q) for q in d]
    m = c.logical(recs)
    which = "x" if basis == "Z" else "z"
    terms = [("M", [("bit", m), _snap("in", "D", which)])]
    return c.build(f"meas_{basis.lower()}_exrec", {}, terms, inputs={"D": d})


def interface_block(c: Circuit, psi: int | None = None) -> tuple[int, list[int], list[int]]:
    """Teleportation of physical qubit psi into a fresh encoded block.

    Returns (psi, block, rec ids).  psi is an input wire, not a location.
    The flag `a` copies b twice around the fan-out so a bit flip on b in
    between is caught; the reversed CNOT(a -> b) is kept as a location.
    """
    if psi is None:
        psi = c.alloc(1)[0]
    a, b = c.alloc(2)
    c.prep0(a)
    c.prepp(b)
    block = prep_block(c, "Z")
    c.cnot(b, a)
    for q in block:
        c.cnot(b, q)
    c.cnot(b, a)
    c.cnot(a, b)
    c.cnot(psi, b)
    m1 = c.mx(psi)
    ra = c.mz(a)
    m2 = c.mz(b)
    c.check([ra], group="proto")
    c.feed([m2], "X", block)
    c.feed([m1], "Z", block)
    for q in block:
        c.wait(q)
    return psi, block, [m1, ra, m2]


def build_interface(with_ec: bool = True) -> Gadget:
    c = Circuit()
    psi, block, _ = interface_block(c)
    if with_ec:
        steane_ec(c, block)
    terms = [("D.x", [_out("D", "x")]), ("D.z", [_out("D", "z")])]
    return c.build("interface" if with_ec else "interface_teleport", {"D": block}, terms,
                   inputs={"psi": [psi]})


def build_direct_ebit(ec: str = "steane") -> Gadget:
    """Logical ebit from |+> on Alice, |0> on Bob and 7 cross-party CNOTs."""
    c = Circuit()
    c.party("A")
    a = prep_block(c, "X")
    a = _ec(c, a, ec, "zx")
    c.party("B")
    b = prep_block(c, "Z")
    b = _ec(c, b, ec, "xz")
    for x, y in zip(a, b):
        c.cnot(x, y, kind=LocationKind.NONLOCAL, party="S")
    c.party("A")
    a = _ec(c, a, ec, "zx")
    c.party("B")
    b = _ec(c, b, ec, "xz")
    terms = [("AB.x", [_out("A", "x"), _out("B", "x")]),
             ("AB.z", [_out("A", "z"), _out("B", "z")])]
    return c.build("direct_ebit", {"A": a, "B": b}, terms)


def build_gate_teleported_cnot() -> Gadget:
    """Cross-party CNOT from one ebit: qubits (control, e_A, e_B, target)."""
    c = Circuit()
    ctl, ea, eb, tgt = c.alloc(4)
    c.ebit(ea, eb)
    c.party("A")
    c.cnot(ctl, ea)
    m1 = c.mz(ea)
    c.party("B")
    c.feed([m1], "X", [eb])
    c.cnot(eb, tgt)
    m2 = c.mx(eb)
    c.party("A")
    c.feed([m2], "Z", [ctl])
    terms = [("C.x", [("phys", ctl, "x")]), ("C.z", [("phys", ctl, "z")]),
             ("T.x", [("phys", tgt, "x")]), ("T.z", [("phys", tgt, "z")])]
    return c.build("gate_teleported_cnot", {}, terms, inputs={"C": [ctl], "T": [tgt]})


# ---------------------------------------------------------------- EPP

def build_epp(kind: str) -> Gadget:
    if kind == "simple_2to1":
        return _epp_simple()
    if kind == "physical_5to1":
        return _epp_5to1()
    if kind == "logical_4to1":
        return build_interface_epp()
    raise ValueError(f"unknown EPP kind {kind!r}")


def _epp_simple() -> Gadget:
    c = Circuit()
    a1, b1, a2, b2 = c.alloc(4)
    c.ebit(a1, b1)
    c.ebit(a2, b2)
    c.party("A")
    c.cnot(a1, a2)
    ra = c.mz(a2)
    c.party("B")
    c.cnot(b1, b2)
    rb = c.mz(b2)
    c.check([ra, rb], group="proto")
    terms = [("AB.x", [("phys", a1, "x"), ("phys", b1, "x")]),
             ("AB.z", [("phys", a1, "z"), ("phys", b1, "z")])]
    return c.build("epp_simple_2to1", {}, terms, meta={"ebits": [(a1, b1), (a2, b2)]})


def _epp_5to1() -> Gadget:
    """Five-to-one purification on three wires per side; ebits 4 and 5 refill
    wires 2 and 3 after the first pair of X measurements."""
    c = Circuit()
    A = c.alloc(3)
    B = c.alloc(3)
    for x, y in zip(A, B):
        c.ebit(x, y)
    recs = {"A": [], "B": []}
    for side, w in (("A", A), ("B", B)):
        c.party(side)
        c.cz(w[0], w[1])
        c.cz(w[1], w[2])
        recs[side] += [c.mx(w[1]), c.mx(w[2])]
    A2 = c.alloc(2)
    B2 = c.alloc(2)
    for x, y in zip(A2, B2):
        c.ebit(x, y)
    for side, w0, w in (("A", A[0], A2), ("B", B[0], B2)):
        c.party(side)
        c.cnot(w[0], w0)
        c.cz(w[0], w[1])
        recs[side] += [c.mx(w[0]), c.mx(w[1])]
    for ra, rb in zip(recs["A"], recs["B"]):
        c.check([ra, rb], group="proto")
    terms = [("AB.x", [("phys", A[0], "x"), ("phys", B[0], "x")]),
             ("AB.z", [("phys", A[0], "z"), ("phys", B[0], "z")])]
    return c.build("epp_physical_5to1", {}, terms, meta={"output": (A[0], B[0])})


# Logical 4->1 purification, per side: A = CNOT(1->2), B = CNOT(3->4), then the
# reversed C = CNOT(3->1); blocks 2, 3, 4 are measured in Z, X, Z and compared.
EPP_CNOTS = ((0, 1), (2, 3), (2, 0))
EPP_MEAS = ((1, "Z"), (2, "X"), (3, "Z"))


def build_interface_epp(interface: bool = True) -> Gadget:
    """Level-1 Interface+EPP: four raw ebits, each half encoded by an interface,
    then the logical 4->1 purification on both sides.

    With interface=False the four logical ebits are taken as clean inputs and
    only the purification exRecs are noisy.
    """
    c = Circuit()
    blocks = {"A": [], "B": []}
    raw = []
    if interface:
        # raw ebit halves are the interface inputs
        for _ in range(4):
            x, y = c.alloc(2)
            c.ebit(x, y)
            raw.append((x, y))
        for x, y in raw:
            for side, psi in (("A", x), ("B", y)):
                c.party(side)
                _, blk, _ = interface_block(c, psi)
                steane_ec(c, blk)
                blocks[side].append(blk)
    else:
        for side in ("A", "B"):
            for _ in range(4):
                blocks[side].append(c.alloc(7))
    inputs = {} if interface else {f"{s}{i}": blocks[s][i] for s in "AB" for i in range(4)}
    meas = {"A": [], "B": []}
    for side in ("A", "B"):
        c.party(side)
        blk = blocks[side]
        for ctl, tgt in EPP_CNOTS:
            for x, y in zip(blk[ctl], blk[tgt]):
                c.cnot(x, y)
            steane_ec(c, blk[ctl])
            steane_ec(c, blk[tgt])
        for i, basis in EPP_MEAS:
            recs = [(c.mz if basis == "Z" else c.mx)(q) for q in blk[i]]
            meas[side].append(c.logical(recs))
    for ma, mb in zip(meas["A"], meas["B"]):
        c.check([ma, mb], group="proto")
    a0, b0 = blocks["A"][0], blocks["B"][0]
    terms = [("AB.x", [_out("A", "x"), _out("B", "x")]),
             ("AB.z", [_out("A", "z"), _out("B", "z")])]
    meta = {"raw_ebits": raw, "side_blocks": blocks}
    return c.build("interface_epp" if interface else "logical_epp", {"A": a0, "B": b0}, terms,
                   inputs=inputs, **meta)


# ---------------------------------------------------------------- Shor measurement

def cat_block(c: Circuit, size: int) -> tuple[list[int], int]:
    """Cat state on `size` qubits grown as two CNOT chains from a |+> root,
    verified by comparing the two chain ends.  Returns (qubits, verifier rec)."""
    q = c.alloc(size)
    root = q[0]
    c.prepp(root)
    for x in q[1:]:
        c.prep0(x)
    n1 = (size - 1) // 2
    left, right = q[1:1 + n1], q[1 + n1:]
    for chain in (left, right):
        prev = root
        for x in chain:
            c.cnot(prev, x)
            prev = x
    v = c.alloc(1)[0]
    c.prep0(v)
    ends = [left[-1] if left else root, right[-1]]
    for e in ends:
        c.cnot(e, v)
    r = c.mz(v)
    return q, r


def shor_round(c: Circuit, blocks: Sequence[Sequence[int]], pauli: str) -> tuple[str, int]:
    """One cat-state measurement of the transversal `pauli` on `blocks`."""
    data = [q for blk in blocks for q in blk]
    cat, rv = cat_block(c, len(data))
    for x, d in zip(cat, data):
        if pauli == "X":
            c.cnot(x, d)
        else:
            c.cz(x, d)
    recs = [c.mx(x) for x in cat]
    return c.xor(recs, "r"), rv


def build_shor_cat(size: int = 14) -> Gadget:
    c = Circuit()
    cat, rv = cat_block(c, size)
    c.check([rv], group="anc")
    recs = [c.mx(x) for x in cat]
    m = c.xor(recs, "r")
    return c.build("shor_cat", {}, [("M", [("bit", m)])])


def shor_single_round(blocks: int = 2, pauli: str = "X") -> Gadget:
    c = Circuit()
    data = [c.alloc(7) for _ in range(blocks)]
    r, rv = shor_round(c, data, pauli)
    c.check([rv], group="anc")
    return c.build("shor_round", {}, [("M", [("bit", r)])],
                   inputs={f"D{i}": d for i, d in enumerate(data)})


def adaptive_majority(r1, r2, r3):
    """Outcome of the 2-or-3 round rule: r1 if the first two agree, else r3."""
    return np.where(r1 == r2, r1, r3)


def build_shor_measurement(operator: str = "XX") -> Gadget:
    """Adaptive Shor measurement of a transversal logical Pauli on 1 or 2 blocks.

    Two rounds, and a third only when they disagree; ECs on every block before
    and after each round.  Input blocks carry a logical Bell pair when the
    operator acts on two blocks (so XX and ZZ are +1), else |+> or |0>.
    """
    op = operator.upper()
    if op not in ("X", "Z", "XX", "ZZ"):
        raise ValueError(f"unsupported operator {operator!r}")
    pauli, nb = op[0], len(op)
    c = Circuit()
    data = [c.alloc(7) for _ in range(nb)]
    inputs = {f"D{i}": d for i, d in enumerate(data)}
    for d in data:
        steane_ec(c, d)
    c.snap("in", {f"D{i}": d for i, d in enumerate(data)})
    bits, vers = [], []
    for rnd in range(3):
        if rnd == 2:
            g = c.xor(bits[:2], "g")
            c.guard(g)
        r, rv = shor_round(c, data, pauli)
        c.check([rv], group="anc")
        bits.append(r)
        for d in data:
            steane_ec(c, d)
    c.guard(None)
    final = c.func(adaptive_majority, bits, "maj")
    which = "x" if pauli == "Z" else "z"
    terms = [("M", [("bit", final)] + [_snap("in", f"D{i}", which) for i in range(nb)])]
    return c.build(f"shor_{op.lower()}", {f"D{i}": d for i, d in enumerate(data)}, terms,
                   inputs=inputs, prepared={"X": "plus", "Z": "zero"}[pauli])


GADGETS: dict[str, Callable[[], Gadget]] = {
    "prep-zero": build_prep_zero,
    "prep-plus": build_prep_plus,
    "prep-zero-exrec": lambda: build_prep_exrec("Z"),
    "prep-plus-exrec": lambda: build_prep_exrec("X"),
    "ec": build_steane_ec,
    "knill-ec": build_knill_ec,
    "cnot-exrec": build_cnot_exrec,
    "identity-exrec": build_identity_exrec,
    "meas-z-exrec": lambda: build_meas_exrec("Z"),
    "meas-x-exrec": lambda: build_meas_exrec("X"),
    "interface": build_interface,
    "interface-teleport": lambda: build_interface(False),
    "direct-ebit": build_direct_ebit,
    "gate-teleported-cnot": build_gate_teleported_cnot,
    "epp-2to1": lambda: build_epp("simple_2to1"),
    "epp-5to1": lambda: build_epp("physical_5to1"),
    "interface-epp": build_interface_epp,
    "logical-epp": lambda: build_interface_epp(False),
    "shor-cat": build_shor_cat,
    "shor-round": shor_single_round,
    "shor-xx": lambda: build_shor_measurement("XX"),
}


def get_gadget(name: str) -> Gadget:
    try:
        return GADGETS[name]()
    except KeyError:
        raise KeyError(f"unknown gadget {name!r}; choose from {sorted(GADGETS)}") from None
