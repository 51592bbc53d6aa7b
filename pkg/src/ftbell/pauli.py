"""Symplectic Pauli algebra, stabilizer tableaux and CSS codes over GF(2).

Paulis are Hermitian: a sign in {+1, -1} and bit vectors x, z with
Y stored as x=z=1.  The product of two anticommuting Paulis carries a
factor of +-i; we keep only its sign (X*Z = -iY is recorded as -Y).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString", "pauli_mul", "commutes", "StabilizerTableau",
    "measure_pauli", "group_equivalent", "CssCode", "validate_css_bell",
    "gf2_rref", "gf2_rank", "gf2_solve", "steane_code", "shor_code",
]


def _phase_exponent(x1, z1, x2, z2) -> int:
    """Power of i picked up by P1*P2 for Hermitian single-qubit factors."""
    # Aaronson-Gottesman g function, vectorised
    x1 = x1.astype(np.int64); z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64); z2 = z2.astype(np.int64)
    g = np.where(
        (x1 == 0) & (z1 == 0), 0,
        np.where((x1 == 1) & (z1 == 1), z2 - x2,
                 np.where(x1 == 1, z2 * (2 * x2 - 1), x2 * (1 - 2 * z2))))
    return int(g.sum())


@dataclass(frozen=True)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    sign: int = 1

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be equal-length bit vectors")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8))

    @classmethod
    def from_str(cls, s: str) -> "PauliString":
        """Parse '+XIZY', '-ZZ' or 'XX'."""
        s = s.strip()
        sign = 1
        if s[:1] in "+-":
            sign = -1 if s[0] == "-" else 1
            s = s[1:]
        s = s.upper()
        if any(c not in "IXYZ" for c in s):
            raise ValueError(f"bad Pauli string {s!r}")
        x = np.array([c in "XY" for c in s], np.uint8)
        z = np.array([c in "ZY" for c in s], np.uint8)
        return cls(x, z, sign)

    @classmethod
    def single(cls, n: int, ops: dict[int, str], sign: int = 1) -> "PauliString":
        """Sparse constructor: {qubit: 'X'|'Y'|'Z'}."""
        x = np.zeros(n, np.uint8)
        z = np.zeros(n, np.uint8)
        for q, c in ops.items():
            x[q] = c in "XY"
            z[q] = c in "ZY"
        return cls(x, z, sign)

    def __str__(self) -> str:
        chars = np.array(list("IXZY"))[self.x + 2 * self.z]
        return ("+" if self.sign > 0 else "-") + "".join(chars)

    __repr__ = __str__

    def __eq__(self, other) -> bool:
        return (isinstance(other, PauliString) and self.sign == other.sign
                and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z))

    def __hash__(self) -> int:
        return hash((self.sign, self.x.tobytes(), self.z.tobytes()))

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x, self.z, -self.sign)

    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    def is_identity(self) -> bool:
        return not (self.x.any() or self.z.any())

    def symplectic(self) -> np.ndarray:
        return np.concatenate([self.x, self.z])

    def tensor(self, other: "PauliString") -> "PauliString":
        return PauliString(np.concatenate([self.x, other.x]),
                           np.concatenate([self.z, other.z]), self.sign * other.sign)


def commutes(p: PauliString, q: PauliString) -> bool:
    if p.n != q.n:
        raise ValueError("length mismatch")
    return int((p.x @ q.z + p.z @ q.x) % 2) == 0


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Product pq.  The +-i of an anticommuting product is folded into the sign."""
    if p.n != q.n:
        raise ValueError(f"length mismatch: {p.n} vs {q.n}")
    e = _phase_exponent(p.x, p.z, q.x, q.z) % 4
    sign = p.sign * q.sign * (1 if e in (0, 1) else -1)
    return PauliString(p.x ^ q.x, p.z ^ q.z, sign)


# ---------------------------------------------------------------- GF(2) helpers

def gf2_rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2); returns (matrix, pivot columns)."""
    a = (np.array(m, dtype=np.uint8) & 1).copy()
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.nonzero(a[r:, c])[0]
        if len(hit) == 0:
            continue
        k = r + hit[0]
        if k != r:
            a[[r, k]] = a[[k, r]]
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def gf2_rank(m: np.ndarray) -> int:
    if np.size(m) == 0:
        return 0
    return len(gf2_rref(m)[1])


def gf2_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """One solution y of y @ a = b (row combination), or None."""
    a = np.array(a, dtype=np.uint8) & 1
    b = np.array(b, dtype=np.uint8) & 1
    rows = a.shape[0]
    aug = np.concatenate([a, np.eye(rows, dtype=np.uint8)], axis=1)
    red, piv = gf2_rref(aug)
    cols = a.shape[1]
    target = b.copy()
    comb = np.zeros(rows, np.uint8)
    for i, c in enumerate(piv):
        if c >= cols:
            break
        if target[c]:
            target ^= red[i, :cols]
            comb ^= red[i, cols:]
    if target.any():
        return None
    return comb


def _product(gens: Sequence[PauliString], mask: np.ndarray, n: int) -> PauliString:
    out = PauliString.identity(n)
    for g, m in zip(gens, mask):
        if m:
            out = out * g
    return out


# ---------------------------------------------------------------- tableau

class StabilizerTableau:
    """Aaronson-Gottesman tableau.  Rows 0..n-1 destabilizers, n..2n-1 stabilizers."""

    def __init__(self, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.x = x
        self.z = z
        self.r = r
        self.n = x.shape[1]

    @classmethod
    def zero_state(cls, n: int) -> "StabilizerTableau":
        x = np.zeros((2 * n, n), np.uint8)
        z = np.zeros((2 * n, n), np.uint8)
        x[np.arange(n), np.arange(n)] = 1
        z[n + np.arange(n), np.arange(n)] = 1
        return cls(x, z, np.zeros(2 * n, np.uint8))

    @classmethod
    def bell_pairs(cls, n: int) -> "StabilizerTableau":
        """2n qubits with qubit i paired to qubit n+i in (|00>+|11>)/sqrt2."""
        t = cls.zero_state(2 * n)
        for i in range(n):
            t.h(i)
            t.cnot(i, n + i)
        return t

    def copy(self) -> "StabilizerTableau":
        return StabilizerTableau(self.x.copy(), self.z.copy(), self.r.copy())

    def _row(self, i: int) -> PauliString:
        return PauliString(self.x[i], self.z[i], -1 if self.r[i] else 1)

    @property
    def stabilizers(self) -> list[PauliString]:
        return [self._row(self.n + i) for i in range(self.n)]

    @property
    def destabilizers(self) -> list[PauliString]:
        return [self._row(i) for i in range(self.n)]

    def _set_row(self, i: int, p: PauliString):
        self.x[i] = p.x
        self.z[i] = p.z
        self.r[i] = 0 if p.sign > 0 else 1

    def _rowmul(self, h: int, i: int):
        """row h <- row i * row h (rows commute or h is a destabilizer)."""
        e = (2 * int(self.r[h]) + 2 * int(self.r[i])
             + _phase_exponent(self.x[i], self.z[i], self.x[h], self.z[h])) % 4
        self.r[h] = 0 if e in (0, 1) else 1
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    # Clifford gates
    def h(self, a: int):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, c: int, t: int):
        self.r ^= self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a: int, b: int):
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def apply_pauli(self, p: PauliString):
        # conjugation flips the sign of every row that anticommutes with p
        anti = (self.x @ p.z + self.z @ p.x) % 2
        self.r ^= anti.astype(np.uint8)

    def measure(self, p: PauliString, forced: int | None = None,
                rng: np.random.Generator | None = None) -> int:
        """Measure Hermitian Pauli p in place; returns outcome bit (0 means +1)."""
        if p.n != self.n:
            raise ValueError("length mismatch")
        n = self.n
        anti = ((self.x @ p.z + self.z @ p.x) % 2).astype(bool)
        stab_anti = np.nonzero(anti[n:])[0]
        if len(stab_anti) == 0:
            # deterministic: p = +-prod of stabilizers whose destabilizer anticommutes
            acc = PauliString.identity(n)
            for i in np.nonzero(anti[:n])[0]:
                acc = acc * self._row(n + i)
            if not (np.array_equal(acc.x, p.x) and np.array_equal(acc.z, p.z)):
                raise RuntimeError("tableau inconsistent")
            bit = 0 if acc.sign == p.sign else 1
            if forced is not None and forced != bit:
                raise ValueError("forced outcome contradicts a deterministic measurement")
            return bit
        q = n + stab_anti[0]
        for i in np.nonzero(anti)[0]:
            if i != q:
                self._rowmul(i, q)
        self.x[q - n] = self.x[q]
        self.z[q - n] = self.z[q]
        self.r[q - n] = self.r[q]
        if forced is None:
            rng = rng or np.random.default_rng()
            forced = int(rng.integers(2))
        self._set_row(q, p if forced == 0 else -p)
        return int(forced)

    def canonical_stabilizers(self) -> list[PauliString]:
        return canonical_generators(self.stabilizers)

    def check(self) -> bool:
        """Tableau invariants: symplectic pairing and independence."""
        n = self.n
        m = np.concatenate([self.x, self.z], axis=1).astype(np.int64)
        j = np.concatenate([m[:, n:], m[:, :n]], axis=1)
        form = (m @ j.T) % 2
        want = np.zeros((2 * n, 2 * n), np.int64)
        want[np.arange(n), n + np.arange(n)] = 1
        want[n + np.arange(n), np.arange(n)] = 1
        return bool(np.array_equal(form, want))


def measure_pauli(t: StabilizerTableau, p: PauliString, forced_outcome: int | None = None,
                  rng: np.random.Generator | None = None) -> tuple[int, StabilizerTableau]:
    """Functional wrapper: returns (outcome bit, new tableau)."""
    t2 = t.copy()
    bit = t2.measure(p, forced_outcome, rng)
    return bit, t2


# ---------------------------------------------------------------- groups

def _matrix(gens: Sequence[PauliString], n: int) -> np.ndarray:
    if not gens:
        return np.zeros((0, 2 * n), np.uint8)
    return np.array([g.symplectic() for g in gens], np.uint8)


def canonical_generators(gens: Sequence[PauliString]) -> list[PauliString]:
    """Row-reduce a commuting generator list; signs follow the row operations."""
    gens = [g for g in gens]
    if not gens:
        return []
    n = gens[0].n
    rows = list(gens)
    mat = _matrix(rows, n)
    r = 0
    for c in range(2 * n):
        hit = [i for i in range(r, len(rows)) if mat[i, c]]
        if not hit:
            continue
        k = hit[0]
        rows[r], rows[k] = rows[k], rows[r]
        mat[[r, k]] = mat[[k, r]]
        for i in range(len(rows)):
            if i != r and mat[i, c]:
                rows[i] = rows[r] * rows[i]
                mat[i] ^= mat[r]
        r += 1
    return rows[:r]


def group_equivalent(gens_a: Sequence[PauliString], gens_b: Sequence[PauliString],
                     up_to_sign: bool = False) -> bool:
    """True iff both lists generate the same (commuting) Pauli group."""
    if not gens_a and not gens_b:
        return True
    n = (gens_a or gens_b)[0].n
    if any(g.n != n for g in list(gens_a) + list(gens_b)):
        raise ValueError("length mismatch")
    ma, mb = _matrix(gens_a, n), _matrix(gens_b, n)
    ra, rb = gf2_rank(ma), gf2_rank(mb)
    if ra != rb or gf2_rank(np.concatenate([ma, mb])) != ra:
        return False
    if up_to_sign:
        return True
    for src, dst, msrc in ((gens_a, gens_b, ma), (gens_b, gens_a, mb)):
        for g in dst:
            if g.is_identity():
                if g.sign < 0:
                    return False
                continue
            comb = gf2_solve(msrc, g.symplectic())
            if _product(src, comb, n).sign != g.sign:
                return False
    return True


# ---------------------------------------------------------------- CSS codes

@dataclass(frozen=True)
class CssCode:
    n: int
    k: int
    d: int | None
    x_stabilizers: tuple
    z_stabilizers: tuple
    logical_x: tuple
    logical_z: tuple
    name: str = field(default="css", compare=False)

    def __post_init__(self):
        for p in self.x_stabilizers + self.z_stabilizers + self.logical_x + self.logical_z:
            if p.n != self.n:
                raise ValueError("operator length does not match n")
        if any(p.z.any() for p in self.x_stabilizers) or any(p.x.any() for p in self.z_stabilizers):
            raise ValueError("X: section must be X-type and Z: section Z-type")
        stabs = self.stabilizers
        for a in stabs:
            for b in stabs:
                if not commutes(a, b):
                    raise ValueError(f"stabilizers {a} and {b} do not commute")
        for lo in self.logical_x + self.logical_z:
            for s in stabs:
                if not commutes(lo, s):
                    raise ValueError(f"logical {lo} does not commute with {s}")
        if len(self.logical_x) != self.k or len(self.logical_z) != self.k:
            raise ValueError("need one X and one Z logical per encoded qubit")
        for i in range(self.k):
            for j in range(self.k):
                if commutes(self.logical_x[i], self.logical_z[j]) != (i != j):
                    raise ValueError("logical operators are not paired")

    @property
    def stabilizers(self) -> list[PauliString]:
        return list(self.x_stabilizers) + list(self.z_stabilizers)

    @property
    def hx(self) -> np.ndarray:
        return np.array([p.x for p in self.x_stabilizers], np.uint8)

    @property
    def hz(self) -> np.ndarray:
        return np.array([p.z for p in self.z_stabilizers], np.uint8)

    @classmethod
    def from_text(cls, text: str, name: str = "css", d: int | None = None) -> "CssCode":
        """Parse sections 'X:', 'Z:', 'LX:', 'LZ:' with one Pauli per line."""
        sections: dict[str, list[PauliString]] = {"X": [], "Z": [], "LX": [], "LZ": []}
        cur = None
        n = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head = line.rstrip(":").upper()
            if line.endswith(":") and head in sections:
                cur = head
                continue
            if cur is None:
                raise ValueError(f"line {lineno}: operator before any section header")
            try:
                p = PauliString.from_str(line)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if n is None:
                n = p.n
            elif p.n != n:
                raise ValueError(f"line {lineno}: expected {n} qubits, got {p.n}")
            sections[cur].append(p)
        if n is None:
            raise ValueError("empty code file")
        rank = gf2_rank(_matrix(sections["X"] + sections["Z"], n))
        return cls(n, n - rank, d, tuple(sections["X"]), tuple(sections["Z"]),
                   tuple(sections["LX"]), tuple(sections["LZ"]), name)

    @classmethod
    def from_file(cls, path: str | Path) -> "CssCode":
        path = Path(path)
        return cls.from_text(path.read_text(), name=path.stem)

    def to_text(self) -> str:
        def body(ps):
            return "\n".join(str(p)[1:] for p in ps)
        return (f"X:\n{body(self.x_stabilizers)}\nZ:\n{body(self.z_stabilizers)}\n"
                f"LX:\n{body(self.logical_x)}\nLZ:\n{body(self.logical_z)}\n")

    def syndrome_table(self, kind: str) -> dict[tuple, np.ndarray]:
        """Minimum-weight (single-qubit) correction per syndrome.

        kind='X' decodes X errors with the Z checks, kind='Z' the converse.
        """
        h = self.hz if kind == "X" else self.hx
        table = {tuple(np.zeros(h.shape[0], np.uint8)): np.zeros(self.n, np.uint8)}
        for q in range(self.n):
            e = np.zeros(self.n, np.uint8)
            e[q] = 1
            table.setdefault(tuple(h @ e % 2), e)
        return table


def _pad(p: PauliString, left: int, right: int) -> PauliString:
    return PauliString(np.concatenate([np.zeros(left, np.uint8), p.x, np.zeros(right, np.uint8)]),
                       np.concatenate([np.zeros(left, np.uint8), p.z, np.zeros(right, np.uint8)]),
                       p.sign)


def bell_target_group(code: CssCode) -> list[PauliString]:
    """Stabilizers of the encoded Bell pair on Alice's block (0..n-1) and Bob's (n..2n-1)."""
    n = code.n
    gens = [_pad(s, 0, n) for s in code.stabilizers] + [_pad(s, n, 0) for s in code.stabilizers]
    gens.append(_pad(code.logical_x[0], 0, n) * _pad(code.logical_x[0], n, 0))
    gens.append(_pad(code.logical_z[0], 0, n) * _pad(code.logical_z[0], n, 0))
    return gens


def _correction(code: CssCode, kind: str, target: int, n: int) -> PauliString:
    """Opposite-type Pauli flipping one check of `kind` and no same-type logical."""
    stabs = list(code.x_stabilizers) if kind == "X" else list(code.z_stabilizers)
    logical = code.logical_x[0] if kind == "X" else code.logical_z[0]
    rows = [p.x if kind == "X" else p.z for p in stabs + [logical]]
    h = np.array(rows, np.uint8)
    want = np.zeros(len(rows), np.uint8)
    want[target] = 1
    sol = gf2_solve(h.T.copy(), want)
    if sol is None:
        raise ValueError("stabilizers are not independent")
    if kind == "X":
        return PauliString(np.zeros(n, np.uint8), sol)
    return PauliString(sol, np.zeros(n, np.uint8))


def validate_css_bell(code: CssCode, forced: bool = True,
                      rng: np.random.Generator | None = None) -> bool:
    """Measure Alice's X checks then Bob's Z checks on n raw ebits.

    With forced=True every outcome is forced to +1; otherwise outcomes are
    random and each -1 is undone by the same Pauli on both blocks.  True iff the
    final group equals that of the encoded Bell pair.
    """
    if code.k != 1:
        raise ValueError("only k = 1 codes are supported")
    n = code.n
    t = StabilizerTableau.bell_pairs(n)
    rng = rng or np.random.default_rng()
    steps = [(s, 0, "X", i) for i, s in enumerate(code.x_stabilizers)]
    steps += [(s, n, "Z", i) for i, s in enumerate(code.z_stabilizers)]
    for s, off, kind, idx in steps:
        p = _pad(s, off, n - off) if off == 0 else _pad(s, off, 0)
        bit = t.measure(p, 0 if forced else None, rng)
        if bit:
            # the ebits tie the check on one block to its twin on the other,
            # so the flip is undone on both blocks (one classical bit sent)
            c = _correction(code, kind, idx, n)
            t.apply_pauli(c.tensor(c))
    return group_equivalent(t.stabilizers, bell_target_group(code))


def steane_code() -> CssCode:
    from importlib.resources import files
    return CssCode.from_text(files("ftbell.data").joinpath("steane.css").read_text(),
                             name="steane", d=3)


def shor_code() -> CssCode:
    from importlib.resources import files
    return CssCode.from_text(files("ftbell.data").joinpath("shor9.css").read_text(),
                             name="shor9", d=3)
