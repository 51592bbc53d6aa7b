"""Entanglement purification: physical recursion, interface bound, and the
Scheme A / Scheme B logical-EPP recursions.

Rates are per location.  eps is the local physical error rate and eps6 the
infidelity 3q of a raw ebit; sigma6 = eps6 / eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import bounds as B

__all__ = [
    "EppState", "LogicalEppPlan", "EPS0_PRIME", "BETA", "C1", "U_LOWER",
    "physical_infidelity", "iterate_infidelity", "physical_acceptance", "plan_initial_rounds",
    "interface_error_bound", "interface_step_bound", "epp_reject_bounds",
    "level1_logical_bounds", "kappa2_A", "kappa2_B", "scheme_a_recursions",
    "scheme_b_recursions", "infidelity_threshold", "sigma6_after_rounds",
    "lprime_table", "C_fixed_points",
]

EPS0_PRIME = B.EPS0_DIRECT
C1 = 18.1
BETA = (1.0043, 2.8, 628.5, 2.43, 521.3)
U_LOWER = (16.0, 4404.0, 6067.0)
GAMMA1 = 1788           # locations of one Interface+EPP unit at k=1, ebits excluded
N_INTERFACE = np.array([14, 12, 9, 11, 58, 0, 7], dtype=float)

# malignant-pair counts feeding the level-1 display
PAIRS_P2 = 2587.3       # two faults inside one logical-EPP exRec (lower bound)
PAIRS_P2_UPPER = 2587.9
PAIRS_EBIT = (29.1, 11.6, 1.32)     # two bad logical ebits: 0, 1, 2 of them raw-ebit faults
CUBIC_UPPER = (879251.2, 42811.2)   # eps^3 and eps^2 eps6 terms at k = 1
CUBIC_UPPER_K = (454366.8, 87223.3)  # same for k >= 2
G_SAT = 2084.2          # saturated Scheme-A coefficient on (nu_5^(k-1))^2
H_Z, H_XY = 517.4, 1252.4
P2_DECAY = 2.1


@dataclass
class EppState:
    q: float
    eps: float
    round: int
    accept_prob: float = math.nan

    def __post_init__(self):
        if not 0 <= 3 * self.q <= 1 + 1e-12:
            raise ValueError("need 0 <= 3q <= 1")
        if not (math.isnan(self.accept_prob) or 0 <= self.accept_prob <= 1):
            raise ValueError("accept_prob outside [0, 1]")


@dataclass
class LogicalEppPlan:
    scheme: str
    k: int
    m: int
    sigma6: float
    eps: float
    l_prime: int | None
    l_doubleprime: int | None
    g_upper: list[float] = field(default_factory=list)
    h_lower: list[float] = field(default_factory=list)
    saturated: dict = field(default_factory=dict)
    constraints: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = asdict(self)
        return {key: d[key] for key in sorted(d)}


# ---------------------------------------------------------------- physical EPP

def physical_infidelity(q: float, eps: float) -> float:
    """Infidelity after one 5->1 round for Werner input q and local rate eps."""
    if not (0 <= q <= 1 and 0 <= eps <= 1):
        raise ValueError("q and eps must lie in [0, 1]")
    return (eps / 2 + 63 / 16 * eps ** 2 + 49 / 4 * q * eps + 6 * q ** 2
            + 879 / 64 * eps ** 3 + 107 / 2 * q * eps ** 2 + 345 / 4 * q ** 2 * eps + 48 * q ** 3)


def iterate_infidelity(q0: float, eps: float, rounds: int) -> list[float]:
    """[3 q0, I1, I2, ...]: each round feeds I/3 back in as the new q."""
    out = [3 * q0]
    q = q0
    for _ in range(rounds):
        I = physical_infidelity(q, eps)
        out.append(I)
        q = min(I / 3, 1 / 3)
    return out


def sigma6_after_rounds(m: int, eps: float = EPS0_PRIME, q0: float = 0.1 / 3) -> float:
    return iterate_infidelity(q0, eps, m)[-1] / eps


def _epp_acceptance(q: float, eps: float, shots: int, seed) -> float:
    from . import framesim, gadgets
    g = gadgets.build_epp("physical_5to1")
    noise = gadgets.NoiseModel(eps, eps6=3 * q)
    res = framesim.run_batch(g, framesim.sample_independent(g, noise, shots, np.random.default_rng(seed)))
    return float(res.accepted.mean())


def physical_acceptance(q: float, eps: float, sigma=None) -> float:
    """P(5->1 round accepts), exact over raw-ebit errors and up to one local fault.

    The neglected mass (two or more local faults) is below (n eps)^2 / 2.
    """
    from itertools import product
    from . import framesim, gadgets
    g = gadgets.build_epp("physical_5to1")
    noise = gadgets.NoiseModel(eps, sigma=sigma or gadgets.NoiseModel(eps).sigma)
    rates = noise.rates()
    locs = g.locations
    ebits = [i for i, l in enumerate(locs) if l.op == "ebit"]
    local = [i for i, l in enumerate(locs) if l.op != "ebit"]
    p_ok = np.prod([1 - rates[int(locs[i].kind) - 1] for i in local])
    # columns: one per ebit, plus one for the local fault
    cfgs, probs = [], []
    singles = [(None, 0, 1.0)]
    for i in local:
        r = rates[int(locs[i].kind) - 1]
        sup = gadgets.fault_support(locs[i])
        for c in sup:
            singles.append((i, int(c), r / (1 - r) / len(sup)))
    for pattern in product(range(4), repeat=len(ebits)):
        pe = np.prod([1 - 3 * q if c == 0 else q for c in pattern])
        for li, lc, w in singles:
            cfgs.append((pattern, li, lc))
            probs.append(pe * w * p_ok)
    n = len(cfgs)
    fb = framesim.FaultBatch(n)
    for j, e in enumerate(ebits):
        loc = np.array([e if c[0][j] else -1 for c in cfgs])
        fb.add(loc, np.array([c[0][j] for c in cfgs]))
    fb.add(np.array([-1 if c[1] is None else c[1] for c in cfgs]), np.array([c[2] for c in cfgs]))
    res = framesim.run_batch(g, fb)
    return float(np.asarray(probs) @ res.accepted)


def plan_initial_rounds(q0: float, eps: float, target: float, shots: int = 20_000,
                        seed: int = 0, max_rounds: int = 20) -> tuple[int, list[float]]:
    """Fewest 5->1 rounds m with I^(m) <= target, plus MC acceptance per round."""
    floor = physical_infidelity(0.0, eps)
    if 3 * q0 <= target:
        return 0, []
    if floor >= target:
        raise ValueError(f"target {target:.3g} unreachable: infidelity floor I(0, eps) = {floor:.3g}")
    q, accept = q0, []
    for m in range(1, max_rounds + 1):
        accept.append(_epp_acceptance(q, eps, shots, None if seed is None else seed + m) if shots else math.nan)
        I = physical_infidelity(q, eps)
        if I <= target:
            return m, accept
        q = I / 3
    raise ValueError("target not reached within max_rounds")


# ---------------------------------------------------------------- interface

_SYSTEM = None


def _system():
    global _SYSTEM
    if _SYSTEM is None:
        _SYSTEM = B.iterate_system()
    return _SYSTEM


def eps0() -> float:
    return _system().eps0


def interface_error_bound(eps: float) -> float:
    """Upper bound f_in(eps) on P(Enc_l bad); the same for every level l."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps >= eps0() * (1 + 1e-12):
        raise ValueError(f"eps={eps:.3g} must be below the threshold {eps0():.4g}")
    if eps == 0:
        return 0.0
    r = B.rho1(eps, _system())
    b0, b1, b2, b3, b4 = BETA
    return math.exp(b0 * C1 * (eps + r)) * (b1 * eps + b2 * eps ** 2 + b3 * r + b4 * r ** 2)


def interface_step_bound(nu5: float, C: float = B.C_REJECT) -> float:
    """Bound on P(Enc_{l -> l+1} bad) given the level-l CNOT rate nu5."""
    return 521.4 * nu5 * (1 - C * nu5)


# ---------------------------------------------------------------- rejection

@dataclass
class RejectBounds:
    f1: float
    f2: float
    clamped: bool


def epp_reject_bounds(eps: float, eps6: float, k: int = 2) -> RejectBounds:
    """Lower (f1) and upper (f2) bounds on P(logical ebit rejected).

    f1 is a truncated series valid for k >= 2 and is clamped at 0.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    f2 = 4 * eps6 + 12 * eps + 8 * interface_error_bound(eps)
    u0, u1, u2 = U_LOWER
    raw = 22.4 * eps + 4 * eps6 - (u0 * eps6 ** 2 + u1 * eps * eps6 + u2 * eps ** 2)
    return RejectBounds(max(raw, 0.0), f2, raw < 0)


# ---------------------------------------------------------------- level-1 logical ebit

@dataclass
class Level1Logical:
    lower: float
    upper: float
    kappa1: tuple[float, float, float]   # coefficient of sigma6^i eps^2 in the lower bound
    kappa2: float                        # upper / eps^2 at eps = eps0'


def level1_logical_bounds(eps: float, sigma6: float) -> Level1Logical:
    """P(logical ebit bad) after one round of logical EPP at k = 1."""
    if eps < 0 or eps > EPS0_PRIME * (1 + 1e-9):
        raise ValueError(f"eps must lie in [0, {EPS0_PRIME}]")
    eps6 = sigma6 * eps
    rb = epp_reject_bounds(eps, eps6, 1)
    terms = (PAIRS_P2 * (1 - eps) ** (GAMMA1 - 2) * (1 - eps6) ** 4,
             PAIRS_EBIT[1] * sigma6 * (1 - eps) ** (GAMMA1 - 1) * (1 - eps6) ** 3,
             PAIRS_EBIT[2] * sigma6 ** 2 * (1 - eps) ** GAMMA1 * (1 - eps6) ** 2)
    kappa1 = tuple(t / (1 - rb.f1) for t in terms)
    lower = sum(kappa1) * eps ** 2
    upper = _upper_poly(eps, eps6) / (1 - rb.f2)
    return Level1Logical(lower, upper, kappa1, kappa2_B(sigma6))


def _upper_poly(eps, eps6):
    return (PAIRS_EBIT[2] * eps6 ** 2 + PAIRS_EBIT[1] * eps * eps6 + PAIRS_P2_UPPER * eps ** 2
            + CUBIC_UPPER[0] * eps ** 3 + CUBIC_UPPER[1] * eps6 * eps ** 2)


def kappa2_B(sigma6: float, eps: float = EPS0_PRIME) -> float:
    """kappa_2(1, sigma6): level-1 upper bound over eps^2, taken at eps."""
    eps6 = sigma6 * eps
    return _upper_poly(eps, eps6) / eps ** 2 / (1 - epp_reject_bounds(eps, eps6).f2)


def kappa2_A(k: int, sigma6: float, eps: float = EPS0_PRIME) -> float:
    """kappa_2^A(k, sigma6): one logical EPP round on level-k interfaced ebits."""
    if k < 2:
        raise ValueError("Scheme A coefficients need k >= 2")
    eps6 = sigma6 * eps
    p2 = G_SAT / P2_DECAY ** (2 ** k - 2)
    s = (p2 + PAIRS_EBIT[0] + PAIRS_EBIT[1] * sigma6 + PAIRS_EBIT[2] * sigma6 ** 2
         + CUBIC_UPPER_K[0] * eps + CUBIC_UPPER_K[1] * sigma6 * eps)
    return s / (1 - epp_reject_bounds(eps, eps6).f2)


def kappa1_A(k: int, sigma6: float, eps: float = EPS0_PRIME) -> tuple[float, float, float]:
    """Lower-bound coefficients of sigma6^i eps^2 for Scheme A at level k."""
    eps6 = sigma6 * eps
    rb = epp_reject_bounds(eps, eps6, k)
    rates = np.nan_to_num(B.initial_sigma(sigma6)) * eps
    rates[5] = 0.0
    survive = 1 - 8 * float(N_INTERFACE @ rates)
    base = (PAIRS_EBIT[0] * (1 - eps6) ** 4 / (1 - eps) ** 2,
            PAIRS_EBIT[1] * sigma6 * (1 - eps6) ** 3 / (1 - eps),
            PAIRS_EBIT[2] * sigma6 ** 2 * (1 - eps6) ** 2)
    return tuple(b * survive / (1 - rb.f1) for b in base)


# ---------------------------------------------------------------- Scheme A / B

# Relative tolerance used to call a sequence saturated.
SAT_TOL = 0.2


def _levels(k: int, eps: float):
    lb = B.level_bounds(max(k, 1), eps, _system())
    nu = np.concatenate([[eps], lb.nu[:, 4]])    # nu[j] = nu_5^(j)
    mu = np.concatenate([[eps], lb.mu[:, 4]])
    return nu, mu


def _saturation_round(seq, limit, tol=SAT_TOL):
    """First 1-based round whose value is within tol (relative) of limit."""
    for i, v in enumerate(seq):
        if abs(v - limit) <= tol * limit:
            return i + 1
    return None


def _h_start(kappa1, eps, pz=(2 / 3, 2 / 3, 2 / 3)):
    """Split the level-1 lower bound into its Z and X/Y parts.

    The two parts sum to the lower bound itself, so h^(1) is a valid lower
    bound on P(bad) after the first round.
    """
    hz = sum(p * c for p, c in zip(pz, kappa1)) * eps ** 2
    return hz, sum(kappa1) * eps ** 2 - hz


def scheme_a_recursions(k: int, sigma6: float, eps: float = EPS0_PRIME, m: int = 0,
                        rounds: int = 12) -> LogicalEppPlan:
    """Iterate the Scheme-A upper (g) and lower (h) sequences at level k."""
    if k < 2:
        raise ValueError("Scheme A recursions need k >= 2")
    nu, mu = _levels(k, eps)
    v, vk, w = nu[k - 1], nu[k], mu[k - 1]
    b = G_SAT * v ** 2
    g = [kappa2_A(k, sigma6, eps) * eps ** 2]
    basin = (1 - math.sqrt(b)) / 6
    for _ in range(rounds - 1):
        x = g[-1]
        den = 1 - 4 * x - 12 * vk
        if den <= 0:
            break
        g.append((6 * x ** 2 + b + 24 * x * v) / den)
    hz, hxy = _h_start(kappa1_A(k, sigma6, eps), eps)
    h = _h_iterate(hz, hxy, [w] * rounds)
    h_sat = (H_Z + H_XY) * w ** 2
    return LogicalEppPlan("A", k, m, sigma6, eps, _saturation_round(g, b), _saturation_round(h, h_sat),
                          g, h, {"g": b, "h": h_sat},
                          {"basin": basin, "in_basin": g[0] <= basin})


def _h_iterate(hz, hxy, mus):
    h = [hz + hxy]
    for w in mus[1:]:
        hz, hxy = 4 * hz ** 2 + H_Z * w ** 2, 2 * hxy ** 2 + H_XY * w ** 2
        h.append(hz + hxy)
    return h


def C_fixed_points(eps_ref: float | None = None) -> tuple[float, float]:
    """(stable, unstable) roots of C = 6 C^2 eps0^2 + 24 eps0 C + 2084.2."""
    e = eps0() if eps_ref is None else eps_ref
    a, bq, c = 6 * e ** 2, 24 * e - 1, G_SAT
    disc = bq ** 2 - 4 * a * c
    r = math.sqrt(disc)
    return (-bq - r) / (2 * a), (-bq + r) / (2 * a)


def scheme_b_recursions(k: int, sigma6: float, eps: float = EPS0_PRIME, m: int = 0,
                        rounds: int | None = None) -> LogicalEppPlan:
    """Alternate interface and logical EPP up to level k, then keep purifying."""
    if k < 2:
        raise ValueError("Scheme B recursions need k >= 2")
    rounds = rounds or k + 8
    nu, mu = _levels(k, eps)
    e0 = eps0()
    C = [kappa2_B(sigma6, eps)]
    _, unstable = C_fixed_points(e0)
    g = [C[0] * eps ** 2]
    for l in range(2, rounds + 1):
        j = min(l - 1, k - 1)              # level of the exRecs used in round l
        v, vk = nu[j], nu[min(l, k)]
        x = g[-1]
        den = 1 - 4 * x - 12 * vk
        if den <= 0:
            break
        g.append((6 * x ** 2 + 24 * x * v + G_SAT * v ** 2) / den)
        if l <= k:
            C.append(6 * C[-1] ** 2 * e0 ** 2 + 24 * e0 * C[-1] + G_SAT)
    b = G_SAT * nu[k - 1] ** 2
    hz, hxy = _h_start(level1_logical_bounds(eps, sigma6).kappa1, eps)
    mus = [mu[min(l - 1, k - 1)] for l in range(1, rounds + 1)]
    h = _h_iterate(hz, hxy, mus)
    h_sat = (H_Z + H_XY) * mu[k - 1] ** 2
    return LogicalEppPlan("B", k, m, sigma6, eps, _saturation_round(g, b), _saturation_round(h, h_sat),
                          g, h, {"g": b, "h": h_sat, "C": C},
                          {"C_converges": C[0] < unstable, "C_unstable_root": unstable})


def infidelity_threshold(scheme: str, k: int = 3, eps: float = EPS0_PRIME) -> float:
    """Largest raw-ebit infidelity eps6 for which the scheme still converges."""
    from scipy.optimize import brentq

    if scheme == "A":
        if k < 3:
            raise ValueError("the Scheme-A threshold is stated for k >= 3")
        fn = lambda s: math.sqrt(6 * kappa2_A(k, s, eps)) - 1 / eps
    elif scheme == "B":
        _, unstable = C_fixed_points()
        fn = lambda s: kappa2_B(s, eps) - unstable
    else:
        raise ValueError("scheme must be 'A' or 'B'")
    # largest sigma6 keeping the rejection bound f2 below 1
    hi = (1 - 12 * eps - 8 * interface_error_bound(eps)) / (4 * eps) * (1 - 1e-6)
    if fn(0) > 0 or fn(hi) < 0:
        raise ValueError("no threshold root in range")
    return brentq(fn, 0, hi, xtol=1e-9) * eps


def lprime_table(ks=range(2, 7), ms=range(3), eps: float = EPS0_PRIME) -> dict:
    """{(scheme, k, m): (l', l'')} for the tabulated cells."""
    out = {}
    for k in ks:
        for m in ms:
            s6 = sigma6_after_rounds(m, eps)
            a = scheme_a_recursions(k, s6, eps, m)
            bb = scheme_b_recursions(k, s6, eps, m)
            out[("A", k, m)] = (a.l_prime, a.l_doubleprime)
            out[("B", k, m)] = (bb.l_prime, bb.l_doubleprime)
    return out
