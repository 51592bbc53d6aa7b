"""Pauli-frame Monte Carlo over gadgets.

The frame of every shot is a pair of bit rows (x, z) per qubit, so a batch of
shots is two uint8 arrays of shape (n_qubits, shots).  Faults are handed to
the interpreter as columns of (location id, Pauli code) per shot, which covers
independent sampling, exact pair enumeration and stratified sampling alike.

Measurement records hold flips relative to the noiseless reference run, and
classical steps (decoding, feed-forward, checks) act on those flips.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .gadgets import (HAMMING, KIND_NAMES, Classical, Gadget, Location, LocationKind,
                      NoiseModel, fault_support)
from .pauli import PauliString, StabilizerTableau

_POW = (1 << np.arange(3)).astype(np.uint8)


def _syndrome(rows: np.ndarray) -> np.ndarray:
    """rows: (7, S) flips -> syndrome integer 0..7 per shot (0 = clean)."""
    s = (HAMMING.astype(np.uint8) @ rows) & 1
    return (s * _POW[:, None]).sum(axis=0).astype(np.uint8)


def decode_bits(rows: np.ndarray) -> np.ndarray:
    """Ideal logical value of a 7-bit frame row block: parity xor (syndrome != 0)."""
    return (rows.sum(axis=0) & 1).astype(np.uint8) ^ (_syndrome(rows) != 0)


# ---------------------------------------------------------------- faults

@dataclass
class FaultBatch:
    """Fault columns: loc[c][s] is the location hit in column c of shot s (-1 none)."""
    shots: int
    locs: list = field(default_factory=list)
    codes: list = field(default_factory=list)

    def add(self, loc: np.ndarray, code: np.ndarray):
        self.locs.append(np.asarray(loc, np.int64))
        self.codes.append(np.asarray(code, np.uint8))

    def index(self, n_loc: int) -> list:
        """Per column: (sorted shot order, start offsets per location)."""
        out = []
        for loc in self.locs:
            order = np.argsort(loc, kind="stable")
            starts = np.searchsorted(loc[order], np.arange(n_loc + 1))
            out.append((order, starts))
        return out


@dataclass
class BatchResult:
    shots: int
    anc_ok: np.ndarray            # every ancilla verification passed
    proto_ok: np.ndarray          # every protocol comparison passed
    terms: dict                   # label -> uint8 flip of the success condition
    bits: dict

    @property
    def accepted(self) -> np.ndarray:
        return self.anc_ok & self.proto_ok

    @property
    def bad(self) -> np.ndarray:
        out = np.zeros(self.shots, bool)
        for v in self.terms.values():
            out |= v.astype(bool)
        return out

    @property
    def failed(self) -> np.ndarray:
        return self.accepted & self.bad


def run_batch(g: Gadget, faults: FaultBatch, return_frame: bool = False):
    S = faults.shots
    n_loc = g.n_locations
    x = np.zeros((g.n_qubits, S), np.uint8)
    z = np.zeros((g.n_qubits, S), np.uint8)
    bits: dict = {}
    snaps: dict = {}
    anc_ok = np.ones(S, bool)
    proto_ok = np.ones(S, bool)
    idx = faults.index(n_loc)

    def fault(loc: Location):
        for (order, starts), code in zip(idx, faults.codes):
            a, b = starts[loc.id], starts[loc.id + 1]
            if a == b:
                continue
            sh = order[a:b]
            if loc.guard is not None:
                sh = sh[bits[loc.guard][sh].astype(bool)]
            c = code[sh]
            q0 = loc.qubits[0]
            x[q0, sh] ^= c & 1
            z[q0, sh] ^= (c >> 1) & 1
            if len(loc.qubits) == 2:
                q1 = loc.qubits[1]
                x[q1, sh] ^= (c >> 2) & 1
                z[q1, sh] ^= (c >> 3) & 1

    def src_rows(src):
        return np.stack([bits[s] for s in src])

    def xor_src(src):
        out = np.zeros(S, np.uint8)
        for s in src:
            out ^= bits[s]
        return out

    for op in g.program:
        if isinstance(op, Location):
            q = op.qubits
            o = op.op
            if o in ("prep0", "prep+"):
                x[q[0]] = 0
                z[q[0]] = 0
                fault(op)
            elif o == "ebit":
                x[list(q)] = 0
                z[list(q)] = 0
                fault(op)
            elif o == "mz":
                fault(op)
                bits[op.id] = x[q[0]].copy()
            elif o == "mx":
                fault(op)
                bits[op.id] = z[q[0]].copy()
            elif o == "cnot":
                c, t = q
                x[t] ^= x[c]
                z[c] ^= z[t]
                fault(op)
            elif o == "cz":
                a, b = q
                z[a] ^= x[b]
                z[b] ^= x[a]
                fault(op)
            elif o == "wait":
                fault(op)
            else:
                raise ValueError(f"unknown op {o}")
            continue
        c = op.op
        mask = None if op.guard is None else bits[op.guard].astype(bool)
        if c == "decode":
            syn = _syndrome(src_rows(op.src))
            if mask is not None:
                syn = np.where(mask, syn, 0)
            tgt = x if op.pauli == "X" else z
            for i, qq in enumerate(op.targets):
                tgt[qq] ^= (syn == i + 1)
        elif c == "logical":
            bits[op.name] = decode_bits(src_rows(op.src))
        elif c == "xor":
            bits[op.name] = xor_src(op.src)
        elif c == "func":
            bits[op.name] = np.asarray(op.fn(*[bits[s] for s in op.src]), np.uint8)
        elif c == "check":
            bad = xor_src(op.src).astype(bool)
            if mask is not None:
                bad &= mask
            if op.group == "anc":
                anc_ok &= ~bad
            else:
                proto_ok &= ~bad
        elif c == "feed":
            f = xor_src(op.src)
            if mask is not None:
                f &= mask
            for qq in op.targets:
                if "X" in op.pauli:
                    x[qq] ^= f
                if "Z" in op.pauli:
                    z[qq] ^= f
        elif c == "snap":
            for label, qs in op.blocks:
                qs = list(qs)
                snaps[(op.name, label)] = (decode_bits(x[qs]), decode_bits(z[qs]))
        else:
            raise ValueError(f"unknown classical op {c}")

    outs = {lab: (decode_bits(x[list(qs)]), decode_bits(z[list(qs)])) for lab, qs in g.blocks.items()}
    terms = {}
    for label, sources in g.terms:
        v = np.zeros(S, np.uint8)
        for s in sources:
            if s[0] == "out":
                v ^= outs[s[1]][0 if s[2] == "x" else 1]
            elif s[0] == "snap":
                v ^= snaps[(s[1], s[2])][0 if s[3] == "x" else 1]
            elif s[0] == "bit":
                v ^= bits[s[1]]
            elif s[0] == "phys":
                v ^= (x if s[2] == "x" else z)[s[1]]
        terms[label] = v
    res = BatchResult(S, anc_ok, proto_ok, terms, bits)
    return (res, x, z) if return_frame else res


# ---------------------------------------------------------------- sampling

def _kind_index(g: Gadget) -> np.ndarray:
    return np.array([int(l.kind) - 1 for l in g.locations], np.int64)


def _supports(g: Gadget, ebit_model: str) -> list:
    return [fault_support(l, ebit_model) for l in g.locations]


def sample_independent(g: Gadget, noise: NoiseModel, shots: int,
                       rng: np.random.Generator) -> FaultBatch:
    """Every location faults independently with its kind's rate."""
    rates = noise.rates()[_kind_index(g)]
    sup = _supports(g, noise.ebit_model)
    hit = rng.random((len(rates), shots)) < rates[:, None]
    li, si = np.nonzero(hit)
    # spread each shot's faults across columns so a column holds one per shot
    order = np.lexsort((li, si))
    li, si = li[order], si[order]
    rank = np.zeros(len(si), np.int64)
    if len(si):
        first = np.r_[0, np.nonzero(np.diff(si))[0] + 1]
        run = np.repeat(first, np.diff(np.r_[first, len(si)]))
        rank = np.arange(len(si)) - run
    fb = FaultBatch(shots)
    for r in range(int(rank.max()) + 1 if len(rank) else 0):
        sel = rank == r
        loc = np.full(shots, -1, np.int64)
        code = np.zeros(shots, np.uint8)
        loc[si[sel]] = li[sel]
        for l in np.unique(li[sel]):
            m = sel & (li == l)
            code[si[m]] = rng.choice(sup[l], size=int(m.sum()))
        fb.add(loc, code)
    return fb


@dataclass
class ShotResult:
    accepted: bool
    anc_ok: bool
    proto_ok: bool
    residual: dict          # block label -> PauliString of the final frame on that block
    logical_class: dict     # block label -> one of "I", "X", "Y", "Z"
    terms: dict


_CLASS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def run_shot(g: Gadget, noise: NoiseModel, seed) -> ShotResult:
    rng = np.random.default_rng(seed)
    fb = sample_independent(g, noise, 1, rng)
    res, x, z = run_batch(g, fb, return_frame=True)
    residual, classes = {}, {}
    for lab, qs in g.blocks.items():
        qs = list(qs)
        residual[lab] = PauliString(x[qs, 0], z[qs, 0])
        classes[lab] = _CLASS[(int(decode_bits(x[qs])[0]), int(decode_bits(z[qs])[0]))]
    return ShotResult(bool(res.accepted[0]), bool(res.anc_ok[0]), bool(res.proto_ok[0]),
                      residual, classes, {k: int(v[0]) for k, v in res.terms.items()})




# ---------------------------------------------------------------- tableau engine

def _is_deterministic(t: StabilizerTableau, p: PauliString) -> bool:
    n = t.n
    anti = (t.x[n:] @ p.z + t.z[n:] @ p.x) % 2
    return not anti.any()


def relative_pauli(ref: StabilizerTableau, noisy: StabilizerTableau) -> tuple:
    """Pauli R (up to phase and stabilizers) with noisy = R ref R^dagger."""
    n = ref.n
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    for i in range(n):
        g = PauliString(ref.x[n + i], ref.z[n + i], -1 if ref.r[n + i] else 1)
        if noisy.measure(g) != 0:
            x ^= ref.x[i]
            z ^= ref.z[i]
    return x, z


def _encode_zero(t: StabilizerTableau, qs):
    from .gadgets import ENCODER_CNOTS, ENCODER_PLUS
    for i in ENCODER_PLUS:
        t.h(qs[i])
    for a, b in ENCODER_CNOTS:
        t.cnot(qs[a], qs[b])


def _apply_code(t: StabilizerTableau, qubits, code: int):
    n = t.n
    x = np.zeros(n, np.uint8)
    z = np.zeros(n, np.uint8)
    x[qubits[0]] ^= code & 1
    z[qubits[0]] ^= (code >> 1) & 1
    if len(qubits) == 2:
        x[qubits[1]] ^= (code >> 2) & 1
        z[qubits[1]] ^= (code >> 3) & 1
    t.apply_pauli(PauliString(x, z))


def _logical_flip(ref: StabilizerTableau, rx, rz, qs, spares, which: str) -> int:
    """Logical flip of the relative Pauli on block qs, free of stabilizer ambiguity.

    The block logical (Zbar for which='x', Xbar for 'z') is completed by spare
    logicals P so that it becomes a stabilizer of the ideal state; the flip is
    the ideal decoding on qs plus the commutation of the spare part with P.
    """
    n = ref.n
    qs = list(qs)
    base = int(decode_bits((rx if which == "x" else rz)[qs, None])[0])
    if not spares:
        return base
    for combo in itertools.product(range(4), repeat=len(spares)):
        px = np.zeros(n, np.uint8)
        pz = np.zeros(n, np.uint8)
        (pz if which == "x" else px)[qs] = 1
        for c, sp in zip(combo, spares):
            px[sp] ^= c & 1
            pz[sp] ^= c >> 1
        if _is_deterministic(ref, PauliString(px, pz)):
            mask = np.zeros(n, np.uint8)
            for sp in spares:
                mask[sp] = 1
            return base ^ int((rx @ (pz * mask) + rz @ (px * mask)) % 2)
    return base


def tableau_run(g: Gadget, faults: dict, seed=0) -> dict:
    """Single shot with full tableaux for the reference and the faulty run.

    faults maps location id -> Pauli code.  Random measurement outcomes of the
    faulty run follow the reference branch, so flips are comparable with the
    frame simulator shot for shot.  Returns anc_ok, proto_ok and the terms.
    """
    rng = np.random.default_rng(seed)
    blocks = [list(qs) for qs in g.inputs.values() if len(qs) == 7]
    # Each encoded input is a logical Bell pair with a spare reference block,
    # otherwise a logical operator would sit in the stabilizer group and the
    # relative Pauli could not see it.  Gadgets whose terms read raw
    # measurement bits need those bits fixed in the ideal run, so they keep
    # plain |0> inputs.
    raw = any(src[0] in ("bit", "phys") for _, sources in g.terms for src in sources)
    n = g.n_qubits + (0 if raw else 7 * len(blocks))
    ref = StabilizerTableau.zero_state(n)
    bad = StabilizerTableau.zero_state(n)
    spares = [] if raw else [list(range(g.n_qubits + 7 * j, g.n_qubits + 7 * j + 7))
                             for j in range(len(blocks))]
    for t in (ref, bad):
        for qs in blocks:
            _encode_zero(t, qs)
        for qs, spare in zip(blocks, spares):
            _encode_zero(t, spare)
            for q in qs:
                t.h(q)
            for a, b in zip(qs, spare):
                t.cnot(a, b)
    vals = ({}, {})        # actual bits in (ref, bad)
    snaps = {}
    anc_ok = proto_ok = True

    def active(guard):
        return guard is None or bool(vals[1][guard] ^ vals[0][guard])

    def pauli_on(q, which):
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        (x if which == "X" else z)[q] = 1
        return PauliString(x, z)

    for op in g.program:
        if isinstance(op, Location):
            q = op.qubits
            f = faults.get(op.id, 0) if active(op.guard) else 0
            if op.op in ("mz", "mx"):
                if f:
                    _apply_code(bad, q, f)
                m = pauli_on(q[0], "Z" if op.op == "mz" else "X")
                # the two runs draw their random outcomes independently; only
                # parities that are fixed in the ideal circuit are compared
                br = ref.measure(m, rng=rng)
                bb = bad.measure(m, rng=rng)
                vals[0][op.id], vals[1][op.id] = br, bb
                continue
            for t in (ref, bad):
                if op.op == "prep+":
                    t.h(q[0])
                elif op.op == "ebit":
                    t.h(q[0])
                    t.cnot(q[0], q[1])
                elif op.op == "cnot":
                    t.cnot(*q)
                elif op.op == "cz":
                    t.cz(*q)
            if f:
                _apply_code(bad, q, f)
            continue
        c = op.op
        on = active(op.guard)
        for k, t in ((0, ref), (1, bad)):
            v = vals[k]
            if c == "decode" and on:
                rows = np.array([[v[s]] for s in op.src], np.uint8)
                syn = int(_syndrome(rows)[0])
                if syn:
                    qq = op.targets[syn - 1]
                    t.apply_pauli(pauli_on(qq, op.pauli))
            elif c == "logical":
                rows = np.array([[v[s]] for s in op.src], np.uint8)
                v[op.name] = int(decode_bits(rows)[0])
            elif c == "xor":
                v[op.name] = int(sum(v[s] for s in op.src) % 2)
            elif c == "func":
                v[op.name] = int(np.asarray(op.fn(*[np.array([v[s]]) for s in op.src]))[0])
            elif c == "feed" and on:
                if sum(v[s] for s in op.src) % 2:
                    for qq in op.targets:
                        for pl in op.pauli:
                            t.apply_pauli(pauli_on(qq, pl))
        if c == "check" and on:
            flip = sum(vals[1][s] ^ vals[0][s] for s in op.src) % 2
            if flip:
                if op.group == "anc":
                    anc_ok = False
                else:
                    proto_ok = False
        elif c == "snap":
            rx, rz = relative_pauli(ref, bad)
            for label, qs in op.blocks:
                qs = list(qs)
                snaps[(op.name, label)] = (_logical_flip(ref, rx, rz, qs, spares, "x"),
                                           _logical_flip(ref, rx, rz, qs, spares, "z"))
    rx, rz = relative_pauli(ref, bad)
    terms = {}
    for label, sources in g.terms:
        v = 0
        for s in sources:
            if s[0] == "out":
                v ^= _logical_flip(ref, rx, rz, g.blocks[s[1]], spares, s[2])
            elif s[0] == "snap":
                v ^= snaps[(s[1], s[2])][0 if s[3] == "x" else 1]
            elif s[0] == "bit":
                v ^= vals[1][s[1]] ^ vals[0][s[1]]
            elif s[0] == "phys":
                v ^= int((rx if s[2] == "x" else rz)[s[1]])
        terms[label] = v
    return {"anc_ok": anc_ok, "proto_ok": proto_ok, "terms": terms}


# ---------------------------------------------------------------- exhaustive scans

def _support_table(g: Gadget, ebit_model: str):
    sup = _supports(g, ebit_model)
    tab = np.zeros((len(sup), 15), np.uint8)
    lens = np.array([len(s) for s in sup], np.int64)
    for i, s in enumerate(sup):
        tab[i, :len(s)] = s
    return tab, lens


def _class_code(res: BatchResult, labels) -> np.ndarray:
    code = np.zeros(res.shots, np.int64)
    for i, lab in enumerate(labels):
        code |= res.terms[lab].astype(np.int64) << i
    return code


@dataclass
class SingleFaultScan:
    n: np.ndarray            # census
    reject: np.ndarray       # per kind: locations weighted by the fraction of Paulis rejected
    logical: dict            # class label -> per-kind weighted counts (accepted shots only)
    malignant: np.ndarray    # per kind, accepted and any term violated


def single_fault_scan(g: Gadget, ebit_model: str = "werner") -> SingleFaultScan:
    """Inject every supported Pauli at every location, one at a time."""
    tab, lens = _support_table(g, ebit_model)
    kinds = _kind_index(g)
    loc = np.repeat(np.arange(len(lens)), lens)
    code = np.concatenate([tab[i, :lens[i]] for i in range(len(lens))]) if len(lens) else np.zeros(0)
    w = 1.0 / lens[loc] if len(loc) else np.zeros(0)
    fb = FaultBatch(len(loc))
    fb.add(loc, code)
    res = run_batch(g, fb)
    rej = ~res.accepted
    acc = res.accepted
    labels = [lab for lab, _ in g.terms]
    cls = _class_code(res, labels)
    out = SingleFaultScan(census_of(g), np.zeros(7), {}, np.zeros(7))
    np.add.at(out.reject, kinds[loc], w * rej)
    np.add.at(out.malignant, kinds[loc], w * (acc & res.bad))
    for v in np.unique(cls[acc & res.bad]):
        arr = np.zeros(7)
        m = acc & (cls == v)
        np.add.at(arr, kinds[loc[m]], w[m])
        out.logical[_term_label(labels, int(v))] = arr
    return out


def census_of(g: Gadget) -> np.ndarray:
    from .gadgets import census
    return census(g)


def _term_label(labels, v: int) -> str:
    return "+".join(lab for i, lab in enumerate(labels) if (v >> i) & 1) or "I"


def block_class_label(labels, v: int) -> str:
    """Terms named '<block>.x' / '<block>.z' -> per-block class string such as 'ZI'."""
    blocks = []
    for lab in labels:
        b = lab.split(".")[0]
        if b not in blocks:
            blocks.append(b)
    out = ""
    for b in blocks:
        xb = any((v >> i) & 1 for i, lab in enumerate(labels) if lab == f"{b}.x")
        zb = any((v >> i) & 1 for i, lab in enumerate(labels) if lab == f"{b}.z")
        out += _CLASS[(int(xb), int(zb))]
    return out


# ---------------------------------------------------------------- malignant pairs

@dataclass
class MalignantPairMatrix:
    alpha: np.ndarray        # 7x7 symmetric
    n: np.ndarray
    samples_per_pair: int    # Pauli combinations per pair (exact enumeration) or samples
    classes: dict = field(default_factory=dict)   # class code -> 7x7 weights
    labels: tuple = ()
    exact: bool = True

    def check_bounds(self) -> bool:
        a, n = self.alpha, self.n
        if not np.allclose(a, a.T):
            return False
        for i in range(7):
            for j in range(7):
                cap = n[i] * (n[i] - 1) / 2 if i == j else n[i] * n[j]
                if a[i, j] > cap + 1e-9 or a[i, j] < -1e-12:
                    return False
        return True

    def lower(self) -> list:
        return [[float(self.alpha[i, j]) for j in range(i + 1)] for i in range(7)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind"] + list(KIND_NAMES))
        for i in range(7):
            w.writerow([KIND_NAMES[i]] + [f"{v:.4f}" for v in self.alpha[i]])
        w.writerow(["census"] + [int(v) for v in self.n])
        return buf.getvalue()


def _pair_chunks(lens: np.ndarray, tab: np.ndarray, chunk: int):
    """Yield (loc1, code1, loc2, code2) arrays covering every location pair and
    every Pauli combination exactly once."""
    L = len(lens)
    all_loc = np.repeat(np.arange(L), lens)
    all_code = np.concatenate([tab[i, :lens[i]] for i in range(L)])
    offset = np.r_[0, np.cumsum(lens)]
    buf = []
    size = 0
    for i in range(L - 1):
        l2 = all_loc[offset[i + 1]:]
        c2 = all_code[offset[i + 1]:]
        for p in tab[i, :lens[i]]:
            buf.append((np.full(len(l2), i), np.full(len(l2), p, np.uint8), l2, c2))
            size += len(l2)
            if size >= chunk:
                yield tuple(np.concatenate(z) for z in zip(*buf))
                buf, size = [], 0
    if buf:
        yield tuple(np.concatenate(z) for z in zip(*buf))


def _mpm_chunk(args):
    g, l1, c1, l2, c2, lens, kinds, labels = args
    fb = FaultBatch(len(l1))
    fb.add(l1, c1)
    fb.add(l2, c2)
    res = run_batch(g, fb)
    mal = res.failed
    w = 1.0 / (lens[l1] * lens[l2])
    k1, k2 = kinds[l1], kinds[l2]
    a = np.zeros((7, 7))
    np.add.at(a, (np.maximum(k1, k2), np.minimum(k1, k2)), w * mal)
    cls = _class_code(res, labels)
    per = {}
    for v in np.unique(cls[mal]):
        m = mal & (cls == v)
        b = np.zeros((7, 7))
        np.add.at(b, (np.maximum(k1[m], k2[m]), np.minimum(k1[m], k2[m])), w[m])
        per[int(v)] = b
    return a, per


def enumerate_mpm(g: Gadget, ebit_model: str = "werner", chunk: int = 200_000,
                  threads: int = 1) -> MalignantPairMatrix:
    """Exact malignant-pair matrix: every unordered location pair, every Pauli
    combination from the two supports, all other locations clean.  A pair's
    contribution is the fraction of combinations that are accepted and fail."""
    tab, lens = _support_table(g, ebit_model)
    kinds = _kind_index(g)
    labels = [lab for lab, _ in g.terms]
    jobs = ((g, l1, c1, l2, c2, lens, kinds, labels)
            for l1, c1, l2, c2 in _pair_chunks(lens, tab, chunk))
    low = np.zeros((7, 7))
    classes: dict = {}
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            results = list(ex.map(_mpm_chunk, jobs))
    else:
        results = map(_mpm_chunk, jobs)
    for a, per in results:
        low += a
        for v, b in per.items():
            classes[v] = classes.get(v, 0) + b
    sym = low + np.tril(low, -1).T
    classes = {v: b + np.tril(b, -1).T for v, b in classes.items()}
    return MalignantPairMatrix(sym, census_of(g), int(lens.max()) ** 2 if len(lens) else 0,
                               classes, tuple(labels))


def sample_mpm(g: Gadget, samples_per_pair: int, seed=0, ebit_model: str = "werner",
               chunk: int = 200_000) -> MalignantPairMatrix:
    """Sampled variant: each pair gets `samples_per_pair` random Pauli combinations."""
    tab, lens = _support_table(g, ebit_model)
    kinds = _kind_index(g)
    labels = [lab for lab, _ in g.terms]
    rng = np.random.default_rng(seed)
    L = len(lens)
    i, j = np.triu_indices(L, 1)
    low = np.zeros((7, 7))
    step = max(1, chunk // samples_per_pair)
    for s in range(0, len(i), step):
        ii = np.repeat(i[s:s + step], samples_per_pair)
        jj = np.repeat(j[s:s + step], samples_per_pair)
        c1 = tab[ii, (rng.random(len(ii)) * lens[ii]).astype(np.int64)]
        c2 = tab[jj, (rng.random(len(jj)) * lens[jj]).astype(np.int64)]
        fb = FaultBatch(len(ii))
        fb.add(ii, c1)
        fb.add(jj, c2)
        mal = run_batch(g, fb).failed
        k1, k2 = kinds[ii], kinds[jj]
        np.add.at(low, (np.maximum(k1, k2), np.minimum(k1, k2)), mal / samples_per_pair)
    sym = low + np.tril(low, -1).T
    return MalignantPairMatrix(sym, census_of(g), samples_per_pair, {}, tuple(labels), exact=False)


def error_type_distribution(m: MalignantPairMatrix, sigma=(4 / 15,) * 4 + (1.0, 1.0, 4 / 5)) -> dict:
    """Distribution over logical classes of malignant events, each pair weighted
    by its relative probability sigma_i * sigma_j."""
    s = np.asarray(sigma, float)
    wmat = np.outer(s, s)
    tot = {}
    for v, b in m.classes.items():
        # b is symmetric with the off-diagonal split; use the lower triangle once
        low = np.tril(b)
        tot[block_class_label(m.labels, v)] = tot.get(block_class_label(m.labels, v), 0.0) + \
            float((low * wmat).sum())
    z = sum(tot.values())
    return {k: v / z for k, v in sorted(tot.items())} if z else {}


def compare_mpm(m: MalignantPairMatrix, reference) -> list:
    """Entrywise comparison rows (i, j, ours, reference, rel_diff) for the lower triangle."""
    ref = np.asarray(reference, float)
    rows = []
    for i in range(7):
        for j in range(i + 1):
            a, b = float(m.alpha[i, j]), float(ref[i, j])
            rel = (a - b) / b if b else (0.0 if a == 0 else math.inf)
            rows.append((i + 1, j + 1, a, b, rel))
    return rows


# ---------------------------------------------------------------- stratified sampling

def _compositions(k: int, caps: list):
    """All ways to place k faults across kinds with per-kind caps."""
    def rec(i, left):
        if i == len(caps):
            if left == 0:
                yield ()
            return
        for c in range(min(left, caps[i]) + 1):
            for rest in rec(i + 1, left - c):
                yield (c,) + rest
    yield from rec(0, k)


def _log_binom(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


@dataclass
class StratifiedEstimate:
    """Per fault-composition outcome counts.  Given a composition (how many
    faults of each kind), locations and Paulis are uniform, so the conditional
    outcome fractions do not depend on eps; only the composition weights do."""
    n: np.ndarray
    kmax: int
    comps: list
    shots: np.ndarray
    fail: np.ndarray         # accepted and bad
    reject: np.ndarray       # any check failed
    anc_reject: np.ndarray   # an ancilla verification failed
    proto_reject: np.ndarray  # ancillas fine but a protocol comparison failed

    def weights(self, rates) -> tuple[np.ndarray, float]:
        """Composition probabilities and the probability mass beyond kmax."""
        r = np.asarray(rates, float)
        logs = []
        for comp in self.comps:
            lp = 0.0
            for t, c in enumerate(comp):
                n, p = int(self.n[t]), float(r[t])
                if c and p <= 0:
                    lp = -math.inf
                    break
                lp += _log_binom(n, c) + (c * math.log(p) if c else 0.0) + \
                    ((n - c) * math.log1p(-p) if p < 1 else (0.0 if n == c else -math.inf))
            logs.append(lp)
        w = np.exp(np.array(logs)) if logs else np.zeros(0)
        p0 = math.exp(sum(int(self.n[t]) * math.log1p(-float(r[t])) for t in range(7) if r[t] < 1))
        tail = max(0.0, 1.0 - p0 - float(w.sum()))
        return w, tail

    def evaluate(self, rates, z: float = 1.96) -> dict:
        w, tail = self.weights(rates)
        ns = np.maximum(self.shots, 1)
        f = self.fail / ns
        rj = self.reject / ns
        lo, hi = wilson(self.fail, self.shots, z)
        rlo, rhi = wilson(self.reject, self.shots, z)
        p_fail = float(w @ f)
        p_rej = float(w @ rj)
        fail_lo, fail_hi = float(w @ lo), float(w @ hi) + tail
        acc_lo, acc_hi = 1 - float(w @ rhi) - tail, 1 - float(w @ rlo)
        acc = 1 - p_rej
        prj = float(w @ (self.proto_reject / ns))
        anc_ok = 1 - float(w @ (self.anc_reject / ns))
        return {
            "p_fail": p_fail, "p_accept": acc,
            "rate": p_fail / acc if acc > 0 else math.nan,
            "rate_ci": (fail_lo / max(acc_hi, 1e-300), fail_hi / max(acc_lo, 1e-300)),
            "p_reject": p_rej, "p_reject_ci": (float(w @ rlo), float(w @ rhi) + tail),
            "proto_reject_given_anc": prj / anc_ok if anc_ok > 0 else math.nan,
            "tail": tail,
        }


def wilson(k, n, z: float = 1.96):
    """Vectorized Wilson score interval; empty strata give [0, 1]."""
    k = np.asarray(k, float)
    n = np.asarray(n, float)
    nn = np.maximum(n, 1)
    p = k / nn
    den = 1 + z * z / nn
    mid = (p + z * z / (2 * nn)) / den
    half = z * np.sqrt(p * (1 - p) / nn + z * z / (4 * nn * nn)) / den
    # the endpoints are exact at k = 0 and k = n; rounding would leave 1e-17
    lo = np.where((n > 0) & (k > 0), np.clip(mid - half, 0, 1), 0.0)
    hi = np.where((n > 0) & (k < n), np.clip(mid + half, 0, 1), 1.0)
    return lo, hi


def wilson_ci(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    lo, hi = wilson(k, n, z)
    return float(lo), float(hi)


def _sample_composition(comp, kind_locs, tab, lens, shots, rng):
    cols = []
    for t, c in enumerate(comp):
        if not c:
            continue
        pool = kind_locs[t]
        draw = rng.integers(len(pool), size=(shots, c))
        while c > 1:
            srt = np.sort(draw, axis=1)
            dup = (np.diff(srt, axis=1) == 0).any(axis=1)
            if not dup.any():
                break
            draw[dup] = rng.integers(len(pool), size=(int(dup.sum()), c))
        for col in range(c):
            loc = pool[draw[:, col]]
            code = tab[loc, (rng.random(shots) * lens[loc]).astype(np.int64)]
            cols.append((loc, code))
    fb = FaultBatch(shots)
    for loc, code in cols:
        fb.add(loc, code)
    return fb


def _strat_job(args):
    g, comp, shots, seed, ebit_model = args
    rng = np.random.default_rng(seed)
    tab, lens = _support_table(g, ebit_model)
    kinds = _kind_index(g)
    kind_locs = [np.nonzero(kinds == t)[0] for t in range(7)]
    res = run_batch(g, _sample_composition(comp, kind_locs, tab, lens, shots, rng))
    return (int(res.failed.sum()), int((~res.accepted).sum()), int((~res.anc_ok).sum()),
            int((res.anc_ok & ~res.proto_ok).sum()))


def stratified_estimate(g: Gadget, noise: NoiseModel, shots: int, seed=0, kmax: int = 4,
                        min_per_comp: int = 200, threads: int = 1) -> StratifiedEstimate:
    """Sample `shots` runs spread over fault compositions with 1..kmax faults.

    Shots are allocated in proportion to each composition's probability under
    `noise` (with a floor), and every composition has its own derived seed, so
    the result does not depend on `threads`.
    """
    n = census_of(g)
    rates = noise.rates()
    caps = [int(n[t]) if rates[t] > 0 else 0 for t in range(7)]
    comps = [c for k in range(1, kmax + 1) for c in _compositions(k, caps)]
    est = StratifiedEstimate(n, kmax, comps, np.zeros(len(comps), np.int64),
                             np.zeros(len(comps), np.int64), np.zeros(len(comps), np.int64),
                             np.zeros(len(comps), np.int64), np.zeros(len(comps), np.int64))
    w, _ = est.weights(rates)
    share = w / w.sum() if w.sum() > 0 else np.full(len(w), 1 / max(len(w), 1))
    alloc = np.maximum(min_per_comp, np.round(share * shots)).astype(np.int64)
    seeds = np.random.SeedSequence(seed).spawn(len(comps))
    jobs = [(g, comp, int(a), s, noise.ebit_model) for comp, a, s in zip(comps, alloc, seeds)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            out = list(ex.map(_strat_job, jobs))
    else:
        out = [_strat_job(j) for j in jobs]
    for i, (f, r, ra, rp) in enumerate(out):
        est.shots[i] = alloc[i]
        est.fail[i], est.reject[i], est.anc_reject[i], est.proto_reject[i] = f, r, ra, rp
    return est


def logical_error_rate(g: Gadget, noise: NoiseModel, shots: int, seed=0, kmax: int = 4,
                       threads: int = 1) -> tuple[float, tuple]:
    """Logical failure probability conditional on acceptance, with a 95% interval."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if noise.rates().max() == 0:
        return 0.0, (0.0, wilson_ci(0, shots)[1])
    ev = stratified_estimate(g, noise, shots, seed, kmax, threads=threads).evaluate(noise.rates())
    return ev["rate"], ev["rate_ci"]


def direct_rate(g: Gadget, noise: NoiseModel, shots: int, seed=0, shards: int = 8,
                threads: int = 1) -> dict:
    """Plain Monte Carlo with independent faults, sharded by SeedSequence.spawn."""
    seeds = np.random.SeedSequence(seed).spawn(shards)
    per = [shots // shards + (1 if i < shots % shards else 0) for i in range(shards)]
    jobs = [(g, noise, k, s) for k, s in zip(per, seeds)]
    if threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            out = list(ex.map(_direct_job, jobs))
    else:
        out = [_direct_job(j) for j in jobs]
    fail = sum(o[0] for o in out)
    acc = sum(o[1] for o in out)
    proto = sum(o[2] for o in out)
    anc = sum(o[3] for o in out)
    return {"shots": shots, "accepted": acc, "failed": fail,
            "rate": fail / acc if acc else math.nan, "rate_ci": wilson_ci(fail, acc),
            "proto_reject_given_anc": proto / anc if anc else math.nan,
            "proto_reject_ci": wilson_ci(proto, anc)}


def _direct_job(args):
    g, noise, shots, seed = args
    rng = np.random.default_rng(seed)
    res = run_batch(g, sample_independent(g, noise, shots, rng))
    return (int(res.failed.sum()), int(res.accepted.sum()),
            int((res.anc_ok & ~res.proto_ok).sum()), int(res.anc_ok.sum()))


def pseudo_threshold(g: Gadget, sigma=(4 / 15,) * 4 + (1.0, 1.0, 4 / 5), shots: int = 100_000,
                     seed=0, eps_range=(1e-5, 0.3), kmax: int | None = None,
                     threads: int = 1) -> dict:
    """Crossing of the conditional logical rate with eps.

    The stratified estimate is built once at a trial eps and then re-weighted
    for every eps during root finding; the interval comes from the crossings
    of the upper and lower confidence curves.
    """
    from scipy.optimize import brentq

    lo_e, hi_e = eps_range
    grid = np.geomspace(lo_e, hi_e, 60)
    mean_faults = float(np.dot(census_of(g), sigma))
    trial = None
    est = None
    # iterate: crossing estimate -> resample around it
    for _ in range(3):
        e_ref = trial if trial else 1.0 / (mean_faults * 10)
        noise = NoiseModel(min(e_ref, 1 / max(sigma)), tuple(sigma))
        km = kmax or _pick_kmax(census_of(g), noise.rates())
        est = stratified_estimate(g, noise, shots, seed, km, threads=threads)
        f = lambda e, key="rate": _ev(est, sigma, e)[key] - e
        vals = np.array([f(e) for e in grid])
        idx = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
        if not len(idx):
            return {"threshold": math.nan, "bracketed": False, "ci": (math.nan, math.nan)}
        a, b = grid[idx[0]], grid[idx[0] + 1]
        new = brentq(f, a, b)
        if trial and abs(new - trial) / trial < 0.02:
            trial = new
            break
        trial = new
    ci = []
    for side in (1, 0):
        h = lambda e: _ev(est, sigma, e)["rate_ci"][side] - e
        vals = np.array([h(e) for e in grid])
        idx = np.nonzero(np.diff(np.sign(vals)) != 0)[0]
        ci.append(brentq(h, grid[idx[0]], grid[idx[0] + 1]) if len(idx) else math.nan)
    return {"threshold": trial, "bracketed": True, "ci": tuple(ci), "kmax": est.kmax,
            "shots": int(est.shots.sum())}


def _ev(est, sigma, e):
    return est.evaluate(np.asarray(sigma) * e)


def _pick_kmax(n, rates, tol=1e-4, limit=8):
    from scipy.stats import poisson
    lam = float(np.dot(n, rates))
    for k in range(2, limit + 1):
        if poisson.sf(k, lam) < tol * max(lam, 1e-12) ** 2:
            return k
    return limit
