"""``qbs`` command-line experiment runner.

Every subcommand builds its whole output in memory and writes it only after
the computation succeeds, so failures never leave partial files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from qbs.circuit.compiler import compile_plan, gate_budget
from qbs.cn import DEFAULT_FIXED_STEPS, convergence_sweep
from qbs.grid import grid_from_smax
from qbs.hamiltonian import embedded_eigenvalues, hermitian_eigenvalues, walsh_coefficients
from qbs.payoff import ContractParams
from qbs.pricer import (
    gamma_factor,
    l1_relative_error,
    price_circuit,
    price_exact,
    success_probability,
    truncation_error_surface,
)
from qbs.truncation import build_truncation_plan, ranked_words

ENTANGLING_TARGET = 94

BASE_DEFAULTS: dict[str, Any] = {
    "nq": 8,
    "smax": 135.0,
    "strike": 50.0,
    "rate": 0.3,
    "sigma": 0.2,
    "maturity": 1.0,
    "mherm": 14,
    "memb": 6,
    "shots": 0,
    "seed": 0,
    "exact": False,
    "out": None,
    "format": "csv",
    "check": False,
}

COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "price": {},
    "converge": {"nq_list": "5,6,7,8"},
    "truncation-sweep": {"mherm_list": "0:33", "memb_list": "0:33"},
    "success-map": {
        "smax": 150.0,
        "t_range": "0.05:1.0:20",
        "r_range": "0.0:0.3:13",
        "gamma_k": "10,50,100",
        "gamma_nq": "2:15",
    },
    "compare-cn": {"points": "5:11", "steps": DEFAULT_FIXED_STEPS},
    "gate-count": {},
}


class CheckFailed(RuntimeError):
    pass


# -- parsing -------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    """``"a,b,c"``, a half-open range ``"lo:hi"``, or a JSON list."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text)
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        return list(range(lo, hi))
    return [int(v) for v in text.split(",") if v.strip()]


def _linspace(text: str) -> np.ndarray:
    """``"lo:hi:count"`` (inclusive) or a single value."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValueError("mesh needs at least one point")
    return np.linspace(lo, hi, count)


def _threads() -> int:
    raw = os.environ.get("QBS_THREADS", "")
    if raw.strip():
        n = int(raw)
        if n < 1:
            raise ValueError("QBS_THREADS must be a positive integer")
        return n
    return min(8, os.cpu_count() or 1)


def _pmap(fn: Callable, items: Sequence) -> list:
    workers = _threads()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--nq", type=int, help="register qubits (grid has 2**nq points)")
    common.add_argument("--smax", type=float, help="largest stock price of the window")
    common.add_argument("--strike", type=float)
    common.add_argument("--rate", type=float)
    common.add_argument("--sigma", type=float)
    common.add_argument("--maturity", type=float)
    common.add_argument("--mherm", type=int, help="retained drift terms")
    common.add_argument("--memb", type=int, help="retained embedded terms")
    common.add_argument("--shots", type=int, help="0 reads exact amplitudes")
    common.add_argument("--seed", type=int)
    common.add_argument("--exact", action="store_true", help="skip the circuit path")
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--config", help="JSON file of defaults; flags override it")
    common.add_argument("--check", action="store_true", help="assert the expected qualitative result")

    parser = argparse.ArgumentParser(prog="qbs", description="Quantum Black-Scholes simulator experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("price", parents=[common], argument_default=argparse.SUPPRESS, help="price curve against the closed form")
    p = sub.add_parser("converge", parents=[common], argument_default=argparse.SUPPRESS, help="error vs register size")
    p.add_argument("--nq-list", dest="nq_list")
    p = sub.add_parser("truncation-sweep", parents=[common], argument_default=argparse.SUPPRESS, help="error over retained term counts")
    p.add_argument("--mherm-list", dest="mherm_list", help="'a,b,c' or 'lo:hi'")
    p.add_argument("--memb-list", dest="memb_list")
    p = sub.add_parser("success-map", parents=[common], argument_default=argparse.SUPPRESS, help="post-selection probability map")
    p.add_argument("--t-range", dest="t_range", help="lo:hi:count")
    p.add_argument("--r-range", dest="r_range", help="lo:hi:count")
    p.add_argument("--gamma-k", dest="gamma_k")
    p.add_argument("--gamma-nq", dest="gamma_nq")
    p = sub.add_parser("compare-cn", parents=[common], argument_default=argparse.SUPPRESS, help="Crank-Nicolson vs propagation accuracy")
    p.add_argument("--points", help="log2 point counts, 'lo:hi' or list")
    p.add_argument("--steps", type=int, help="fixed CN time steps")
    sub.add_parser("gate-count", parents=[common], argument_default=argparse.SUPPRESS, help="entangling-gate budget of the compiled circuit")
    return parser


def resolve_config(args: argparse.Namespace) -> dict[str, Any]:
    """Flags > config file > defaults."""
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS[args.command])
    given = vars(args)
    if "config" in given:
        with open(given["config"], encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    cfg.update({k: v for k, v in given.items() if k not in ("config", "command")})
    cfg["command"] = args.command
    return cfg


def _contract(cfg: dict) -> ContractParams:
    return ContractParams(
        strike=float(cfg["strike"]),
        rate=float(cfg["rate"]),
        sigma=float(cfg["sigma"]),
        maturity=float(cfg["maturity"]),
    )


# -- rendering -------------------------------------------------------------------


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return "" if v is None else str(v)


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _records(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[dict]:
    return [dict(zip(header, row)) for row in rows]


def _render(cfg: dict, sections: dict[str, tuple[Sequence[str], list]], meta: dict) -> str:
    """CSV: sections separated by a blank line and a ``# name`` line.  JSON: one object."""
    if cfg["format"] == "json":
        doc = {"metadata": meta}
        doc.update({name: _records(h, rows) for name, (h, rows) in sections.items()})
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"
    if len(sections) == 1:
        (h, rows), = sections.values()
        return _table(h, rows)
    parts = [f"# {name}\n" + _table(h, rows) for name, (h, rows) in sections.items()]
    return "\n".join(parts)


def _meta(cfg: dict) -> dict:
    keys = ("command", "nq", "smax", "strike", "rate", "sigma", "maturity")
    return {k: cfg[k] for k in keys}


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qbs-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- subcommands -------------------------------------------------------------------


def cmd_price(cfg: dict) -> str:
    grid = grid_from_smax(int(cfg["nq"]), float(cfg["smax"]))
    contract = _contract(cfg)
    meta = _meta(cfg)
    if cfg["exact"]:
        curve = price_exact(grid, contract)
        meta["method"] = "exact"
    else:
        plan = build_truncation_plan(grid, contract, int(cfg["mherm"]), int(cfg["memb"]))
        shots = int(cfg["shots"]) or None
        curve, post = price_circuit(grid, contract, plan, shots=shots, seed=int(cfg["seed"]))
        meta.update(
            method="circuit",
            mherm=plan.m_herm,
            memb=plan.m_emb,
            shots=shots or "exact",
            seed=int(cfg["seed"]),
            success_probability=post.success_probability,
            truncation_error_bound=plan.error_bound,
        )
    meta["l1_relative_error"] = l1_relative_error(curve)
    if cfg["format"] == "json":
        doc = json.loads(curve.to_json())
        doc["metadata"] = _jsonable(meta)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return curve.to_csv()


def cmd_converge(cfg: dict) -> str:
    contract = _contract(cfg)
    nqs = _int_list(cfg["nq_list"])
    if not nqs:
        raise ValueError("empty register-size list")

    def one(nq: int) -> tuple:
        curve = price_exact(grid_from_smax(nq, float(cfg["smax"])), contract)
        err = np.abs(curve.values - curve.analytic())
        return (nq, 1 << nq, l1_relative_error(curve), float(err.max()), float(err.mean()))

    rows = _pmap(one, nqs)
    if cfg["check"]:
        errs = [r[2] for r in rows]
        if any(b >= a for a, b in zip(errs, errs[1:])):
            raise CheckFailed(f"L1 errors are not strictly decreasing: {errs}")
    header = ("n_qubits", "points", "l1_relative_error", "max_abs_error", "mean_abs_error")
    return _render(cfg, {"convergence": (header, rows)}, _meta(cfg))


def cmd_truncation_sweep(cfg: dict) -> str:
    grid = grid_from_smax(int(cfg["nq"]), float(cfg["smax"]))
    contract = _contract(cfg)
    n = grid.n_points
    mh, me = _int_list(cfg["mherm_list"]), _int_list(cfg["memb_list"])
    if not mh or not me:
        raise ValueError("empty plan-size list")
    if min(mh + me) < 0 or max(mh) > n or max(me) > n:
        raise ValueError(f"plan sizes must lie in [0, {n}]")
    herm = walsh_coefficients(hermitian_eigenvalues(grid, contract)).coeffs
    emb = walsh_coefficients(embedded_eigenvalues(grid, contract)).coeffs
    h_rank, e_rank = ranked_words(herm), ranked_words(emb)
    coef_rows = [
        (i + 1, h_rank[i], float(herm[h_rank[i]]), e_rank[i], float(emb[e_rank[i]])) for i in range(n)
    ]
    surface = truncation_error_surface(grid, contract, mh, me)
    lossless = l1_relative_error(price_exact(grid, contract))
    err_rows = [
        (a, b, float(surface[i, j]), float(surface[i, j] - lossless))
        for i, a in enumerate(mh)
        for j, b in enumerate(me)
    ]
    sections = {
        "coefficients": (
            ("rank", "hermitian_word", "hermitian_coefficient", "embedded_word", "embedded_coefficient"),
            coef_rows,
        ),
        "errors": (("m_herm", "m_emb", "l1_relative_error", "excess_over_lossless"), err_rows),
    }
    return _render(cfg, sections, _meta(cfg))


def cmd_success_map(cfg: dict) -> str:
    nq = int(cfg["nq"])
    strike = float(cfg["strike"])
    grid = grid_from_smax(nq, float(cfg["smax"]))
    base = _contract(cfg)
    ts, rs = _linspace(cfg["t_range"]), _linspace(cfg["r_range"])
    constrained = math.isclose(float(cfg["smax"]), 3.0 * strike, rel_tol=1e-12)
    gamma_here = gamma_factor(grid.n_points, strike) if constrained else None

    cells = [(float(t), float(r)) for t in ts for r in rs]

    def one(cell: tuple[float, float]) -> tuple:
        t, r = cell
        ps = success_probability(grid, base.with_(maturity=t, rate=r))
        bound = None if gamma_here is None else math.exp(-2.0 * t * r) * gamma_here
        return (t, r, ps, bound)

    ps_rows = _pmap(one, cells)
    ks = [float(k) for k in str(cfg["gamma_k"]).split(",")]
    g_nqs = _int_list(cfg["gamma_nq"])
    gamma_rows = [(1 << q, k, gamma_factor(1 << q, k)) for k in ks for q in g_nqs]

    if cfg["check"]:
        worst = min(row[2] for row in ps_rows)
        if worst <= 0.6:
            raise CheckFailed(f"minimum success probability {worst:.6f} is not above 0.6")
        bad = [row for row in ps_rows if row[3] is not None and row[2] < row[3]]
        if bad:
            raise CheckFailed(f"lower bound violated at {len(bad)} cells, first {bad[0]}")
    sections = {
        "success_probability": (("maturity", "rate", "success_probability", "lower_bound"), ps_rows),
        "gamma": (("n_points", "strike", "gamma"), gamma_rows),
    }
    return _render(cfg, sections, _meta(cfg))


def cmd_compare_cn(cfg: dict) -> str:
    contract = _contract(cfg)
    pts = [1 << k for k in _int_list(cfg["points"])]
    rows = convergence_sweep(contract, pts, int(cfg["steps"]), s_max=float(cfg["smax"]))
    out = []
    for i, row in enumerate(rows):
        cn_ratio = q_ratio = None
        if i:
            cn_ratio = row.cn_error / rows[i - 1].cn_error
            q_ratio = row.quantum_error / rows[i - 1].quantum_error
        plateau = cn_ratio is not None and cn_ratio > 0.8
        out.append((row.points, row.time_steps, row.cn_error, row.quantum_error, cn_ratio, q_ratio, plateau))
    if cfg["check"] and len(out) >= 2:
        last = out[-1]
        if not (last[4] > 0.8 and last[5] < 0.8):
            raise CheckFailed(f"expected CN plateau and continued decrease, got ratios {last[4]}, {last[5]}")
    header = ("points", "cn_time_steps", "cn_error", "quantum_error", "cn_ratio", "quantum_ratio", "cn_plateau")
    return _render(cfg, {"comparison": (header, out)}, _meta(cfg))


def cmd_gate_count(cfg: dict) -> str:
    grid = grid_from_smax(int(cfg["nq"]), float(cfg["smax"]))
    contract = _contract(cfg)
    plan = build_truncation_plan(grid, contract, int(cfg["mherm"]), int(cfg["memb"]))
    opt = gate_budget(compile_plan(plan, grid, contract, optimize=True))
    raw = gate_budget(compile_plan(plan, grid, contract, optimize=False))
    rows = [
        ("width", opt["width"], raw["width"]),
        ("entangling_inclusive", opt["inclusive"], raw["inclusive"]),
        ("entangling_inclusive_no_swaps", opt["inclusive_no_swaps"], raw["inclusive_no_swaps"]),
        ("entangling_exclusive", opt["exclusive"], raw["exclusive"]),
        ("total_gates", opt["total_gates"], raw["total_gates"]),
    ]
    meets = opt["exclusive"] <= ENTANGLING_TARGET or (
        opt["exclusive"] <= ENTANGLING_TARGET <= opt["inclusive"]
    )
    rows.append(("target", ENTANGLING_TARGET, ENTANGLING_TARGET))
    rows.append(("meets_target", meets, None))
    if cfg["check"] and (not meets or opt["inclusive"] > raw["inclusive"]):
        raise CheckFailed(f"gate budget check failed: {opt}")
    meta = _meta(cfg)
    meta.update(mherm=plan.m_herm, memb=plan.m_emb)
    return _render(cfg, {"gate_count": (("quantity", "optimized", "unoptimized"), rows)}, meta)


COMMANDS: dict[str, Callable[[dict], str]] = {
    "price": cmd_price,
    "converge": cmd_converge,
    "truncation-sweep": cmd_truncation_sweep,
    "success-map": cmd_success_map,
    "compare-cn": cmd_compare_cn,
    "gate-count": cmd_gate_count,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        text = COMMANDS[args.command](cfg)
        _write(text, cfg["out"])
    except CheckFailed as exc:
        print(f"qbs {args.command}: check failed: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"qbs {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
