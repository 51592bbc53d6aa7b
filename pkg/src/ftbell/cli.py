"""ftbell command line.

Every command writes CSV (RFC-4180) or JSON (sorted keys) to stdout or --output.
Defaults may come from --config FILE (key=value lines or a JSON object);
flags given on the command line always win.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2, 3

# gadget name -> key of the bundled reference matrices
APPENDIX_KEYS = {
    "cnot-exrec": "cnot", "ec": "ec", "prep-zero-exrec": "prep_zero", "meas-z-exrec": "meas_z",
    "identity-exrec": "identity", "direct-ebit": "ebit_direct", "interface": "interface",
    "logical-epp": "logical_epp", "shor-xx": "shor_x",
}


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    def __init__(self, payload):
        super().__init__("validation failed")
        self.payload = payload


# ---------------------------------------------------------------- output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def render(rows: list[dict] | dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(rows), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if isinstance(rows, dict):
        rows = [rows]
    buf = io.StringIO()
    if not rows:
        return ""
    cols = list(rows[0])
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(str(_cell(x)) for x in v)
    return v


def emit(args, payload, fmt: str | None = None):
    text = render(payload, fmt or args.format)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_validate_css(args):
    from .pauli import CssCode, shor_code, steane_code, validate_css_bell
    rows = []
    for name in args.code_file:
        if name in ("steane", "shor9"):
            code = steane_code() if name == "steane" else shor_code()
        else:
            try:
                text = Path(name).read_text()
            except OSError as exc:
                raise UsageError(f"{name}: {exc.strerror}") from None
            try:
                code = CssCode.from_text(text, name=Path(name).stem)
            except ValueError as exc:
                msg = str(exc)
                if msg.startswith("line") or msg.startswith("empty"):
                    raise UsageError(f"{name}: {msg}") from None
                # well-formed file describing an invalid code
                rows.append({"code": name, "n": None, "valid": False, "reason": msg})
                continue
        rng = np.random.default_rng(args.seed)
        ok = validate_css_bell(code, forced=args.seed is None, rng=rng)
        rows.append({"code": name, "n": code.n, "valid": ok, "reason": "" if ok else "Bell check failed"})
    if not all(r["valid"] for r in rows):
        raise ValidationFailure(rows)
    return rows


def cmd_mpm(args):
    from .framesim import enumerate_mpm, sample_mpm
    from .gadgets import get_gadget
    from .bounds import load_reference
    try:
        g = get_gadget(args.gadget)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if args.samples is None:
        m = enumerate_mpm(g, args.ebit_model, threads=args.threads)
    else:
        if args.samples < 1:
            raise ValueError("samples must be >= 1")
        m = sample_mpm(g, args.samples, args.seed, args.ebit_model)
    if args.compare != "appendix":
        if args.format == "csv":
            return m.to_csv()
        return {"alpha": m.alpha, "census": m.n, "exact": m.exact,
                "samples_per_pair": m.samples_per_pair}
    key = APPENDIX_KEYS.get(args.gadget)
    ref = load_reference().get(key) if key else None
    if ref is None:
        raise UsageError(f"no bundled reference matrix for {args.gadget}")
    rows = []
    for i in range(7):
        for j in range(i + 1):
            ours, theirs = float(m.alpha[i, j]), float(ref["alpha"][i, j])
            # per-pair hits are Bernoulli, so var(entry) <= entry / samples
            sd = math.sqrt(max(ours, theirs, 1.0) / args.samples) if args.samples else 0.0
            z = (ours - theirs) / sd if sd else (0.0 if ours == theirs else math.inf)
            rows.append({"i": i + 1, "j": j + 1, "ours": ours, "reference": theirs, "z": z})
    return rows


def cmd_bounds(args):
    from . import bounds as B
    sys_ = B.iterate_system()
    if args.format == "csv":
        return B.report_csv(sys_)
    doc = json.loads(B.report_json(sys_, args.eps))
    doc["spectral_radius"] = float(B.jacobian_stability())
    return doc


def cmd_epp(args):
    from . import epp as E
    eps = args.eps
    if args.action == "table":
        tab = E.lprime_table(eps=eps)
        return [{"scheme": s, "k": k, "m": m, "l_prime": lp, "l_doubleprime": ld}
                for (s, k, m), (lp, ld) in sorted(tab.items())]
    s6 = E.sigma6_after_rounds(args.m, eps)
    fn = E.scheme_a_recursions if args.scheme == "A" else E.scheme_b_recursions
    plan = fn(args.k, s6, eps, args.m)
    d = plan.as_dict()
    if args.format == "csv":
        return [{"scheme": d["scheme"], "k": d["k"], "m": d["m"], "sigma6": d["sigma6"],
                 "eps": d["eps"], "l_prime": d["l_prime"], "l_doubleprime": d["l_doubleprime"]}]
    return d


def cmd_flow(args):
    from . import flow as F
    types = ["X", "Z"] if args.error_type == "both" else [args.error_type]
    nets = {t: F.build_network(t) for t in types}
    sols = {t: F.enumerate_feasible(nets[t], args.max_order) for t in types}
    rows = []
    for t in types:
        for order, lst in sols[t].items():
            for s in lst:
                rows.append({"error_type": t, "order": order, "components": " ".join(s.components),
                             "saturated": " ".join(s.saturated)})
    if args.format == "json":
        out = {"solutions": rows}
        if len(types) == 2:
            out["cases"] = F.classify_cases(sols["X"], sols["Z"], nets)
        return out
    return rows


def _parse_grid(spec: str) -> np.ndarray:
    parts = spec.split(":")
    try:
        hi, lo = float(parts[0]), float(parts[1])
        per_decade = int(parts[2]) if len(parts) > 2 else 10
    except (IndexError, ValueError):
        raise UsageError(f"bad --delta-grid {spec!r}; expected HI:LO[:POINTS_PER_DECADE]") from None
    if not (0 < lo < 1 and 0 < hi < 1) or per_decade < 1:
        raise ValueError("delta grid endpoints must lie in (0, 1)")
    n = int(round(abs(math.log10(hi) - math.log10(lo)) * per_decade)) + 1
    return np.logspace(math.log10(hi), math.log10(lo), n)


def cmd_resources(args):
    from . import game as G
    eps = args.eps
    if args.action == "msg-curve":
        return G.msg_curve(_parse_grid(args.delta_grid), eps)
    if args.action == "theorem":
        rows = []
        for d in _parse_grid(args.delta_grid):
            up, lo = G.theorem_main(d, eps)
            rows.append({"delta": float(d), "chi_upper": up, "chi_lower": lo})
        return rows
    if args.action == "failure":
        rows = []
        for method in G.METHODS:
            for k in range(2, args.k + 1):
                lo, up = G.game_failure_bounds(method, k, eps)
                rows.append({"method": method, "k": k, "eps": eps, "lower": lo, "upper": up})
        return rows
    if args.action == "chi":
        rows = []
        for method in G.METHODS:
            m = 2 if method == "DirectEncoding" else args.m
            lo, up = G.chi_bounds(method, args.k, m, eps, game=True)
            rows.append({"method": method, "k": args.k, "m": m, "chi_lower": lo, "chi_upper": up})
        return rows
    raise UsageError(f"unknown resources action {args.action}")


def cmd_simulate(args):
    from . import epp as E
    from .bounds import direct_encoding_ebit_bounds
    from .framesim import logical_error_rate
    from .gadgets import NoiseModel, get_gadget
    if args.shots < 1:
        raise ValueError("shots must be >= 1")
    if args.seed is None:
        raise UsageError("simulate needs --seed")
    methods = ["direct", "interface"] if args.method == "both" else [args.method]
    rows = []
    for method in methods:
        s6 = E.sigma6_after_rounds(args.m, args.eps)
        noise = NoiseModel(args.eps, eps6=s6 * args.eps)
        name = "direct-ebit" if method == "direct" else "interface-epp"
        rate, ci = logical_error_rate(get_gadget(name), noise, args.shots, args.seed,
                                      threads=args.threads)
        try:
            if method == "direct":
                b = direct_encoding_ebit_bounds(1, args.eps, s6)
            else:
                b = E.level1_logical_bounds(args.eps, s6)
            band = (b.lower, b.upper)
        except ValueError:
            band = (math.nan, math.nan)     # eps outside the analytic domain
        rows.append({"method": method, "eps": args.eps, "m": args.m, "sigma6": s6,
                     "shots": args.shots, "seed": args.seed, "rate": rate,
                     "ci_low": ci[0], "ci_high": ci[1], "band_low": band[0], "band_high": band[1]})
    return rows


def cmd_game(args):
    from . import game as G
    rows = []
    wins = G.verify_quantum_strategy(args.shots, args.seed or 0)
    for (a, b), w in sorted(wins.items()):
        rows.append({"a": a, "b": b, "win_rate": w})
    opt = G.classical_optimum()["value"]
    if args.format == "json":
        return {"quantum": rows, "classical_optimum": str(opt), "square": G.check_square()}
    if any(r["win_rate"] != 1.0 for r in rows):
        raise ValidationFailure(rows)
    return rows


# ---------------------------------------------------------------- parser

def _common(p, mc=False):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None, help="write here instead of stdout")
    p.add_argument("--config", default=None, help="key=value or JSON file with defaults")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker processes for Monte Carlo shards (results do not depend on it)")
    if mc:
        p.add_argument("--seed", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    from .bounds import EPS0_DIRECT
    top = argparse.ArgumentParser(prog="ftbell", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-css", help="check the CSS Bell-pair encoding claim for code files")
    p.add_argument("code_file", nargs="+", help="code file, or 'steane' / 'shor9' for bundled codes")
    _common(p, mc=True)
    p.set_defaults(func=cmd_validate_css)

    p = sub.add_parser("mpm", help="malignant-pair matrix of a gadget")
    p.add_argument("gadget")
    p.add_argument("--samples", type=int, default=None,
                   help="random Pauli combinations per pair (default: exact enumeration)")
    p.add_argument("--compare", choices=("appendix",), default=None)
    p.add_argument("--ebit-model", choices=("werner", "depolarizing"), default="werner")
    _common(p, mc=True)
    p.set_defaults(func=cmd_mpm)

    p = sub.add_parser("bounds", help="level recursion and fixed point")
    p.add_argument("action", choices=("fixed-point",))
    p.add_argument("--eps", type=float, default=None, help="also report mu/nu at this eps")
    _common(p)
    p.set_defaults(func=cmd_bounds, format="json")

    p = sub.add_parser("epp", help="logical EPP planning")
    p.add_argument("action", choices=("plan", "table"))
    p.add_argument("--scheme", choices=("A", "B"), default="B")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--eps", type=float, default=EPS0_DIRECT)
    _common(p)
    p.set_defaults(func=cmd_epp)

    p = sub.add_parser("flow", help="flow-network fault enumeration")
    p.add_argument("action", choices=("enumerate",))
    p.add_argument("--error-type", choices=("X", "Z", "both"), default="both")
    p.add_argument("--max-order", type=int, default=4)
    _common(p)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("resources", help="game failure bounds and ebit counts")
    p.add_argument("action", choices=("msg-curve", "theorem", "failure", "chi"))
    p.add_argument("--delta-grid", default="1e-3:1e-33")
    p.add_argument("--eps", type=float, default=EPS0_DIRECT)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("simulate", help="level-1 Monte Carlo")
    p.add_argument("action", choices=("ebit-level1",))
    p.add_argument("--method", choices=("direct", "interface", "both"), default="both")
    p.add_argument("--eps", type=float, default=2.42e-4)
    p.add_argument("--m", type=int, default=2, help="physical EPP rounds before encoding")
    p.add_argument("--shots", type=int, default=100_000)
    _common(p, mc=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("game", help="magic square strategy checks")
    p.add_argument("action", choices=("verify",))
    p.add_argument("--shots", type=int, default=10_000)
    _common(p, mc=True)
    p.set_defaults(func=cmd_game)
    return top


def read_config(path: str) -> dict:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
    return {k.replace("-", "_"): v for k, v in raw.items()}


def parse(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in sub._actions}
        for k in cfg:
            if k not in known:
                raise UsageError(f"unknown config key {k!r}")
        # config supplies defaults; explicit flags are parsed again on top
        sub.set_defaults(**{k: (known[k].type(v) if known[k].type and isinstance(v, str) else v)
                            for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"ftbell: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("ftbell: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        out = args.func(args)
    except UsageError as exc:
        print(f"ftbell: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailure as exc:
        emit(args, exc.payload)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"ftbell: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if isinstance(out, str):
        if args.output:
            Path(args.output).write_text(out, encoding="utf-8")
        else:
            sys.stdout.write(out)
    else:
        emit(args, out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
