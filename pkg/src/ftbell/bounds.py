"""Analytic bounds on exRec failure rates at every concatenation level.

Kinds are indexed 1..7 in prose and 0..6 in arrays:
prep |0>, prep |+>, meas X, meas Z, local CNOT, nonlocal resource, wait.
An MPM is stored as a full symmetric 7x7 array; sums "over j <= i" read
its lower triangle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np

__all__ = [
    "DEFAULT_SIGMA", "C_REJECT", "MU0", "ThirdOrderInput", "BoundState",
    "load_reference", "third_order_F", "second_order_sum", "prop_bound_convert",
    "bayes_acceptance", "cnot_level1", "level1_bounds", "iterate_system",
    "jacobian_stability", "level_bounds", "rho1", "direct_encoding_ebit_bounds",
    "report_json", "report_csv",
]

DEFAULT_SIGMA = np.array([4 / 15, 4 / 15, 4 / 15, 4 / 15, 1.0, 1.0, 4 / 5])
# mean number of single-fault locations that reject a verified ancilla
C_REJECT = 10.8
# lower-bound scale for the closed-form envelope mu_5^(k) >= mu0 (eps/mu0)^(2^k)
MU0 = 1 / 1061.0
# number of verified ancillas inside each exRec, keyed by kind index (1-based)
ANCILLA_COUNT = {1: 3, 2: 3, 3: 2, 4: 2, 5: 8, 6: 8, 7: 4}
EPS0_DIRECT = 2.25e-4


def symmetric(lower: Sequence[Sequence[float]]) -> np.ndarray:
    """Full 7x7 symmetric matrix from ragged lower-triangular rows."""
    a = np.zeros((7, 7))
    for i, row in enumerate(lower):
        for j, v in enumerate(row):
            a[i, j] = a[j, i] = v
    return a


def load_reference() -> dict[str, dict]:
    """Bundled reference MPMs and censuses, keyed by exRec name."""
    raw = json.loads(resources.files("ftbell.data").joinpath("mpm_reference.json").read_text())
    out = {}
    for name, entry in raw.items():
        n = None if entry["n"] is None else np.array(entry["n"], dtype=float)
        out[name] = {"n": n, "alpha": symmetric(entry["alpha"])}
    return out


def swap_xz(v: np.ndarray) -> np.ndarray:
    """Relabel kinds 1<->2 and 3<->4 (the |0>/|+> and Z/X duality)."""
    perm = [1, 0, 3, 2, 4, 5, 6]
    if v.ndim == 1:
        return v[perm]
    return v[np.ix_(perm, perm)]


@dataclass
class ThirdOrderInput:
    n: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    sigma_neg: np.ndarray | None = None  # set for F-bar: sigma_L on negative terms

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.alpha = np.asarray(self.alpha, dtype=float)
        if self.alpha.shape != (len(self.n), len(self.n)) or self.sigma.shape != self.n.shape:
            raise ValueError("census, sigma and alpha dimensions disagree")
        if (self.n < 0).any() or (self.sigma < 0).any() or (self.alpha < 0).any():
            raise ValueError("third-order inputs must be nonnegative")
        if self.sigma_neg is not None:
            self.sigma_neg = np.asarray(self.sigma_neg, dtype=float)


def third_order_F(inp: ThirdOrderInput) -> float:
    """Triangle-count bound on the eps^3 coefficient, excluding malignant pairs.

    f_ss = C(n_s,3) s^3 - (n_s - 2) s' a_ss / 3
    f_st = C(n_s,2) n_t s_s^2 s_t + C(n_t,2) n_s s_s s_t^2
           - (n_s - 1) s'_s a_st / 3 - (n_t - 1) s'_t a_st / 3
    where s' = s unless a separate sigma_neg is given.
    """
    n, s, a = inp.n, inp.sigma, inp.alpha
    sn = s if inp.sigma_neg is None else inp.sigma_neg
    total = 0.0
    m = len(n)
    for i in range(m):
        if n[i] == 0:
            continue
        total += math.comb(int(n[i]), 3) * s[i] ** 3 - (n[i] - 2) * sn[i] * a[i, i] / 3
        for j in range(i):
            if n[j] == 0:
                continue
            total += (math.comb(int(n[i]), 2) * n[j] * s[i] ** 2 * s[j]
                      + math.comb(int(n[j]), 2) * n[i] * s[i] * s[j] ** 2)
            total -= ((n[i] - 1) * sn[i] + (n[j] - 1) * sn[j]) * a[i, j] / 3
    if total < 0:
        raise ValueError(f"negative third-order bound {total:.3f}: inconsistent inputs")
    return total


def second_order_sum(alpha: np.ndarray, sigma: np.ndarray, sigma2: np.ndarray | None = None) -> float:
    """sum_{j<=i} alpha(i,j) sigma_i sigma_j over the lower triangle."""
    s2 = sigma if sigma2 is None else sigma2
    return float(np.sum(np.tril(alpha) * np.outer(sigma, s2)))


def prop_bound_convert(A1: float, B1: float, A2: float, B2: float) -> tuple[float, float, float]:
    """Fold cubic terms into quadratic ones.

    From A1 x^2 - B1 x^3 <= y <= A2 x^2 + B2 x^3 returns (A1', A2', x_max)
    with A1' x^2 <= y <= A2' x^2 for x <= x_max = 1/A2'.
    """
    if A2 <= 0:
        raise ValueError("A2 must be positive")
    if B2 < 0:
        raise ValueError("B2 must be nonnegative")
    a2p = 0.5 * A2 * (1 + math.sqrt(1 + 4 * B2 / A2 ** 2))
    return A1 - B1 / a2p, a2p, 1 / a2p


def bayes_acceptance(raw_upper: float, C: float, s: int, eps_domain: float) -> float:
    """Divide by the worst-case acceptance probability (1 - C eps)^s."""
    if C * eps_domain >= 1:
        raise ValueError(f"domain violation: C*eps = {C * eps_domain:.3g} >= 1")
    return raw_upper * (1 - C * eps_domain) ** (-s)


@dataclass
class Level1Cnot:
    S: float            # second-order coefficient
    F: float            # third-order coefficient
    A: float
    B: float
    D: float
    poly_S: np.ndarray  # S as a polynomial in sigma6 (ascending)
    poly_F: np.ndarray  # F as a cubic in sigma6


def cnot_level1(ref: Mapping[str, dict] | None = None, sigma6: float = 1.0,
                C: float = C_REJECT) -> Level1Cnot:
    """Level-1 CNOT-exRec coefficients with the cross-block CNOT rate sigma6*eps."""
    ref = ref or load_reference()
    a, n = ref["cnot"]["alpha"], ref["cnot"]["n"]

    def parts(x):
        s = DEFAULT_SIGMA.copy()
        s[5] = x
        return second_order_sum(a, s), third_order_F(ThirdOrderInput(n, s, a))

    S, F = parts(sigma6)
    grid = np.arange(4.0)
    poly_S = np.polynomial.polynomial.polyfit(grid, [parts(x)[0] for x in grid], 2)
    poly_F = np.polynomial.polynomial.polyfit(grid, [parts(x)[1] for x in grid], 3)
    _, B, dom = prop_bound_convert(S, 0.0, S, F)
    # every location has rate at most max(1, sigma6) * eps
    locs = n.sum() - n[5] + n[5] * max(1.0, sigma6)
    A = S * (1 - locs * dom)
    D = bayes_acceptance(B, C, ANCILLA_COUNT[5], dom)
    return Level1Cnot(S, F, A, B, D, poly_S, poly_F)


@dataclass
class BoundState:
    k: int
    A: np.ndarray        # per kind, index 0..6 (nan where undefined)
    D: np.ndarray
    B: np.ndarray
    sigma_L: np.ndarray
    sigma_U: np.ndarray
    eps0: float

    def as_dict(self) -> dict:
        return {
            "k": self.k, "eps0": self.eps0,
            "A": _clean(self.A), "B": _clean(self.B), "D": _clean(self.D),
            "sigma_L": _clean(self.sigma_L), "sigma_U": _clean(self.sigma_U),
        }


def _clean(v: np.ndarray) -> list:
    return [None if not np.isfinite(x) else float(x) for x in v]


def exrec_table(ref: Mapping[str, dict] | None = None, nonlocal_kind: bool = False) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """MPM and census per exRec kind t (1-based) used by the level recursion.

    The |+>-prep and X-measurement exRecs are the X/Z duals of the |0> and
    Z ones.  Without a nonlocal kind the cross-block CNOTs of the CNOT-exRec
    are ordinary local CNOTs and are kept as kind 6 with sigma_6 = sigma_5.
    """
    ref = ref or load_reference()
    prep, mz = ref["prep_zero"], ref["meas_z"]
    table = {
        1: (prep["alpha"], prep["n"]),
        2: (swap_xz(prep["alpha"]), swap_xz(prep["n"])),
        3: (swap_xz(mz["alpha"]), swap_xz(mz["n"])),
        4: (mz["alpha"], mz["n"]),
        5: (ref["cnot"]["alpha"], ref["cnot"]["n"]),
        7: (ref["identity"]["alpha"], ref["identity"]["n"]),
    }
    if nonlocal_kind:
        table[6] = (ref["cnot"]["alpha"], ref["cnot"]["n"])
    return table


def _step(table, sL, sU, eps0, C, nonlocal_kind):
    """One application of the level map; returns (A, B, D) per kind."""
    A = np.full(7, np.nan)
    B = np.full(7, np.nan)
    D = np.full(7, np.nan)
    for t, (alpha, n) in table.items():
        sl, su = sL.copy(), sU.copy()
        if t == 5 or not nonlocal_kind:
            # cross-block CNOTs of a local CNOT-exRec are local CNOTs
            sl[5], su[5] = sl[4], su[4]
        S_U = second_order_sum(alpha, su)
        S_L = second_order_sum(alpha, sl)
        Fbar = third_order_F(ThirdOrderInput(n, su, alpha, sigma_neg=sl))
        _, B[t - 1], _ = prop_bound_convert(S_U, 0.0, S_U, Fbar)
        D[t - 1] = bayes_acceptance(B[t - 1], C, ANCILLA_COUNT[t], eps0)
        A[t - 1] = S_L * (1 - n.sum() * eps0)
    return A, B, D


def initial_sigma(sigma6: float | None = None) -> np.ndarray:
    s = DEFAULT_SIGMA.copy()
    if sigma6 is not None:
        s[5] = sigma6
    return s


@dataclass
class SystemResult:
    trajectory: list[BoundState]
    fixed_point: BoundState
    converged: bool
    sigma_inf: np.ndarray
    sigma_sup: np.ndarray
    eps0: float


def iterate_system(ref: Mapping[str, dict] | None = None, max_k: int = 100,
                   tol: float = 1e-9, C: float = C_REJECT,
                   sigma6: float | None = None, eps0_init: float | None = None) -> SystemResult:
    """Run the level recursion to its fixed point.

    sigma_L,t = A_t / D_5 and sigma_U,t = D_t / A_5 at each level; sigma_5
    stays 1.  With sigma6 given, kind 6 (nonlocal CNOT) is tracked and the
    threshold also takes 1/D_6 into account.
    """
    nonlocal_kind = sigma6 is not None
    table = exrec_table(ref, nonlocal_kind)
    sL = initial_sigma(sigma6)
    sU = sL.copy()
    if eps0_init is None:
        # level-1 Bayes factor is taken at the edge eps = 1/B_5^(1)
        _, B, _ = _step(table, sL, sU, 0.0, C, nonlocal_kind)
        eps0 = 1 / B[4]
    else:
        eps0 = eps0_init
    traj: list[BoundState] = []
    converged = False
    for k in range(1, max_k + 1):
        A, B, D = _step(table, sL, sU, eps0, C, nonlocal_kind)
        if not np.all(np.isfinite(D[~np.isnan(D)])) or D[4] > 1e12:
            raise ArithmeticError(f"bound coefficients diverge at level {k}")
        cand = [1 / D[4]] + ([1 / D[5]] if nonlocal_kind else [])
        eps0_new = min([eps0] + cand) if k > 1 or eps0_init is not None else min(cand)
        new_L = sL.copy()
        new_U = sU.copy()
        for t in table:
            if t == 5:
                continue
            new_L[t - 1] = A[t - 1] / D[4]
            new_U[t - 1] = D[t - 1] / A[4]
        traj.append(BoundState(k, A, D, B, new_L.copy(), new_U.copy(), eps0_new))
        change = max(np.nanmax(np.abs(new_U - sU) / np.maximum(np.abs(sU), 1e-300)),
                     np.nanmax(np.abs(new_L - sL) / np.maximum(np.abs(sL), 1e-12)),
                     abs(eps0_new - eps0) / eps0)
        if k > 1:
            prev = traj[-2]
            change = max(change, float(np.nanmax(np.abs(D - prev.D) / np.abs(prev.D))))
        sL, sU, eps0 = new_L, new_U, eps0_new
        if k > 1 and change < tol:
            converged = True
            break
    sig_L = np.array([s.sigma_L for s in traj])
    sig_U = np.array([s.sigma_U for s in traj])
    return SystemResult(traj, traj[-1], converged, sig_L.min(axis=0), sig_U.max(axis=0), traj[-1].eps0)


def jacobian_stability(fn: Callable[[np.ndarray], np.ndarray] | None = None,
                       point: np.ndarray | None = None, ref: Mapping[str, dict] | None = None,
                       h: float = 1e-6) -> float:
    """Spectral radius of a finite-difference Jacobian.

    With no map given, uses the local level map on the state
    (sigma_L, sigma_U) over kinds 1-4, 7 at its fixed point.  eps0 is held
    at its fixed-point value: the min() that updates it is not smooth.
    """
    if fn is None:
        table = exrec_table(ref)
        kinds = [1, 2, 3, 4, 7]
        idx = [t - 1 for t in kinds]
        m = len(kinds)

        fp = iterate_system(ref).fixed_point

        def fn(v):
            sL, sU = initial_sigma(), initial_sigma()
            sL[idx], sU[idx] = v[:m], v[m:]
            A, B, D = _step(table, sL, sU, fp.eps0, C_REJECT, False)
            return np.concatenate([A[idx] / D[4], D[idx] / A[4]])

        if point is None:
            point = np.concatenate([fp.sigma_L[idx], fp.sigma_U[idx]])
    point = np.asarray(point, dtype=float)
    f0 = fn(point)
    J = np.zeros((len(f0), len(point)))
    for j in range(len(point)):
        step = h * max(abs(point[j]), 1e-3)
        up, dn = point.copy(), point.copy()
        up[j] += step
        dn[j] -= step
        J[:, j] = (fn(up) - fn(dn)) / (2 * step)
    return float(np.max(np.abs(np.linalg.eigvals(J))))


@dataclass
class LevelBounds:
    mu: np.ndarray   # (k, 7) lower bounds per kind
    nu: np.ndarray   # (k, 7) upper bounds per kind
    nu5_envelope: float
    mu5_envelope: float


def level_bounds(k: int, eps: float, system: SystemResult | None = None,
                 eps0: float | None = None, mu0: float = MU0) -> LevelBounds:
    """Unroll A (eps^(k-1))^2 <= eps^(k) <= D (eps^(k-1))^2 from eps^(0) = eps."""
    system = system or iterate_system()
    eps0 = system.eps0 if eps0 is None else eps0
    if eps > eps0 * (1 + 1e-12):
        raise ValueError(f"eps={eps:.3g} above threshold {eps0:.3g}")
    traj = system.trajectory
    mu = np.zeros((k, 7))
    nu = np.zeros((k, 7))
    m5 = n5 = eps
    for lev in range(1, k + 1):
        st = traj[min(lev, len(traj)) - 1]
        A = np.nan_to_num(st.A)
        D = np.nan_to_num(st.D)
        mu[lev - 1] = A * m5 ** 2
        nu[lev - 1] = D * n5 ** 2
        m5, n5 = mu[lev - 1, 4], nu[lev - 1, 4]
    env_nu = eps0 * (eps / eps0) ** (2 ** k)
    env_mu = mu0 * (eps / mu0) ** (2 ** k)
    return LevelBounds(mu, nu, env_nu, env_mu)


def rho1(eps: float, system: SystemResult | None = None, rtol: float = 1e-18) -> float:
    """sum_{k>=1} nu_5^(k)(eps), summed until the terms stop mattering."""
    system = system or iterate_system()
    eps0 = system.eps0
    if eps > eps0 * (1 + 1e-12):
        raise ValueError("rho1 needs eps below the threshold")
    if eps == 0:
        return 0.0
    traj = system.trajectory
    total, n5, lev = 0.0, eps, 1
    while True:
        D5 = traj[min(lev, len(traj)) - 1].D[4]
        n5 = D5 * n5 ** 2
        total += n5
        if n5 < rtol * total or lev > 200:
            return total
        lev += 1


@dataclass
class DirectEncodingBounds:
    lower: float
    upper: float
    coefficients: dict = field(default_factory=dict)


def direct_encoding_ebit_bounds(k: int, eps: float, sigma6: float = 2.09,
                                ref: Mapping[str, dict] | None = None,
                                system: SystemResult | None = None) -> DirectEncodingBounds:
    """P(logical ebit bad) for the Direct-Encoding circuit (two preps, nonlocal CNOT)."""
    # the level-1 polynomial holds for any small eps; the level-k envelopes need eps <= eps0'
    limit = 1e-3 if k == 1 else EPS0_DIRECT
    if eps < 0 or eps > limit * (1 + 1e-9):
        raise ValueError(f"eps must lie in [0, {limit}] for Direct Encoding at k={k}")
    ref = ref or load_reference()
    a, n = ref["ebit_direct"]["alpha"], ref["ebit_direct"]["n"]
    if k == 1:
        s = initial_sigma(sigma6)
        S = second_order_sum(a, s)
        F = third_order_F(ThirdOrderInput(n, s, a))
        eps6 = sigma6 * eps
        lower = S * eps ** 2 * (1 - eps) ** (n.sum() - n[5] - 2) * (1 - eps6) ** n[5]
        return DirectEncodingBounds(lower, S * eps ** 2 + F * eps ** 3, {"S": S, "F": F})
    local = iterate_system(ref)
    system = system or iterate_system(ref, sigma6=sigma6, eps0_init=EPS0_DIRECT)
    sup, inf = system.sigma_sup, system.sigma_inf
    S_U = second_order_sum(a, sup)
    S_L = second_order_sum(a, inf)
    Fbar = third_order_F(ThirdOrderInput(n, sup, a, sigma_neg=inf))
    lb = level_bounds(k - 1, eps, local)
    nu5, mu5 = lb.nu[-1, 4], lb.mu[-1, 4]
    # nu5^(k-1) is largest at k=2, which fixes the folded quadratic coefficient
    nu5_max = level_bounds(1, EPS0_DIRECT, local).nu[0, 4]
    folded = S_U + Fbar * nu5_max
    nu6 = sup[5] * nu5
    upper = S_U * nu5 ** 2 + Fbar * nu5 ** 3
    lower = max(0.0, S_L * mu5 ** 2 * (1 - (n.sum() - n[5] - 2) * nu5 - n[5] * nu6))
    eps0 = local.eps0
    coeffs = {"S_U": S_U, "Fbar": Fbar, "folded_upper": folded, "S_L": S_L,
              "upper_envelope_scale": folded * eps0,
              "lower_envelope_scale": S_L * MU0}
    return DirectEncodingBounds(lower, upper, coeffs)


def report_json(system: SystemResult, eps: float | None = None, k_max: int = 5) -> str:
    """Bounds report keyed by kind and level, stable key order."""
    doc: dict = {"eps0": system.eps0, "converged": system.converged, "levels": {}}
    names = ["prep_zero", "prep_plus", "meas_x", "meas_z", "cnot", "nonlocal", "wait"]
    lb = level_bounds(k_max, eps, system) if eps is not None else None
    for st in system.trajectory:
        lev = {}
        for i, name in enumerate(names):
            if np.isnan(st.D[i]) and i != 4:
                continue
            entry = {"A": _f(st.A[i]), "D": _f(st.D[i]), "sigma_L": _f(st.sigma_L[i]),
                     "sigma_U": _f(st.sigma_U[i]), "eps0": st.eps0}
            if lb is not None and st.k <= k_max:
                entry["mu"] = float(lb.mu[st.k - 1, i])
                entry["nu"] = float(lb.nu[st.k - 1, i])
            lev[name] = entry
        doc["levels"][str(st.k)] = lev
    fp = system.fixed_point
    doc["fixed_point"] = fp.as_dict()
    return json.dumps(doc, indent=2, sort_keys=True)


def _f(x: float):
    return None if not np.isfinite(x) else float(x)


def report_csv(system: SystemResult) -> str:
    rows = ["k,kind,A,D,sigma_L,sigma_U,eps0"]
    for st in system.trajectory:
        for i in range(7):
            if np.isnan(st.D[i]):
                continue
            rows.append(f"{st.k},{i + 1},{st.A[i]!r},{st.D[i]!r},{st.sigma_L[i]!r},{st.sigma_U[i]!r},{st.eps0!r}")
    return "\n".join(rows) + "\n"


def level1_bounds(ref: Mapping[str, dict] | None = None, C: float = C_REJECT) -> BoundState:
    """Level-1 A_t, B_t, D_t for every local exRec kind (first step of the recursion)."""
    return iterate_system(ref, max_k=1, C=C).trajectory[0]
