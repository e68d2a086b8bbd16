"""Command-line entry point: ``cqsum <command> --config cfg.json --out DIR``.

Exit codes: 0 success, 2 malformed JSON or bad arguments, 3 precondition
failure, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import statistics
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import CqMac, CqPtp
from .coding import STREAM_H, build_mac_sum_code, build_ptp_code, random_ncc, random_parity
from .config import (
    REPORT_SCHEMA,
    ConfigFormatError,
    check_schema,
    decode_state,
    dumps,
    load_json,
    parse_channel,
    parse_pmf,
    parse_source,
    require,
    resolve,
)
from .errors import Budget, DomainError, ResourceError, UsageError, ValidationError
from .example1 import example1_analysis, example1_family, find_example1_witness, grid_values, pure_pair
from .field import RNG_NAME
from .rates import (
    EmbeddingSpec,
    function_reconstructibility_check,
    message_sum_rate,
    optimize_message_sum_rate,
    shannon_entropy,
    unstructured_condition,
)
from .simulation import (
    coset_coverage_probability,
    end_to_end_function_error,
    exact_mac_sum_error,
    exact_ptp_error,
    km_error_monte_carlo,
    pinching_check,
)

COMMANDS = (
    "rates",
    "optimize",
    "example1",
    "simulate-ptp",
    "simulate-mac-sum",
    "simulate-end-to-end",
    "verify-pinching",
    "verify-coverage",
    "km",
)


class Context:
    def __init__(self, doc: dict, args, base: Path | None):
        self.doc = doc
        self.args = args
        self.base = base
        self.seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be an unsigned 64-bit integer")
        b = doc.get("budget", {})
        self.budget = Budget(
            dim=args.budget_dim or int(b.get("dim", Budget.dim)),
            terms=int(b.get("terms", Budget.terms)),
            enum=args.budget_enum or int(b.get("enum", Budget.enum)),
            grid=int(b.get("grid", Budget.grid)),
        )
        self.tol = args.tol
        self.timestamps = not args.no_timestamp
        self.rows: list[dict] = []

    def get(self, key, default=None):
        return self.doc.get(key, default)

    def need(self, key):
        return require(self.doc, key)

    def channel(self):
        return parse_channel(self.need("channel"), self.tol, self.base)

    def mac(self) -> CqMac:
        ch = self.channel()
        if not isinstance(ch, CqMac):
            raise UsageError("this command needs a two-sender channel")
        return ch

    def source(self):
        return parse_source(self.need("source"), self.base)

    def sim(self, res) -> dict:
        return res.to_dict(self.timestamps)


def _ints(x) -> list[int]:
    return [int(v) for v in (x if isinstance(x, list) else [x])]


# -- commands ----------------------------------------------------------------


def cmd_rates(ctx: Context) -> dict:
    mac = ctx.mac()
    q = int(ctx.need("q"))
    rep = message_sum_rate(mac, q, parse_pmf(ctx.need("p_V1X1")), parse_pmf(ctx.need("p_V2X2")))
    out = {"rate_report": rep.to_dict()}
    if "source" in ctx.doc:
        src = ctx.source()
        emb = ctx.get("embedding")
        h1 = emb["h1"] if emb else None
        h2 = emb["h2"] if emb else None
        h = shannon_entropy(src.sum_pmf(q, h1, h2))
        structured = {"lhs": h, "rhs": rep.rate, "margin": rep.rate - h, "holds": rep.rate - h > 1e-9}
        uns = unstructured_condition(src, mac, int(ctx.get("grid_resolution", 20)), budget=ctx.budget)
        out["verdicts"] = {"structured": structured, "unstructured": uns.to_dict()}
        ctx.rows.append({"q": q, "H_V1": rep.h_v1, "H_V2": rep.h_v2, "H_U": rep.h_u, "chi_U": rep.chi_u, "R": rep.rate, "structured": structured["holds"], "unstructured": uns.holds})
    else:
        ctx.rows.append({"q": q, "H_V1": rep.h_v1, "H_V2": rep.h_v2, "H_U": rep.h_u, "chi_U": rep.chi_u, "R": rep.rate})
    return out


def cmd_optimize(ctx: Context) -> dict:
    mac = ctx.mac()
    q = int(ctx.need("q"))
    res = int(ctx.get("grid_resolution", 6))
    refine = bool(ctx.get("refine", True))
    family = ctx.get("family")
    if family is None:
        rep = optimize_message_sum_rate(mac, q, res, refine, budget=ctx.budget)
    elif family == "example1_theta":
        if q != 3 or mac.input_sizes != (2, 2):
            raise UsageError("the example1_theta family needs q = 3 and binary inputs")
        rep = optimize_message_sum_rate(mac, q, res, refine, family=example1_family, family_dim=1, budget=ctx.budget)
    else:
        raise UsageError(f"unknown family {family!r}")
    out = {"rate_report": rep.to_dict()}
    ctx.rows.append({"q": q, "grid_resolution": res, "H_V1": rep.h_v1, "H_V2": rep.h_v2, "H_U": rep.h_u, "chi_U": rep.chi_u, "R": rep.rate})
    if "function" in ctx.doc:
        src = ctx.source()
        embs = ctx.get("embeddings", "search")
        if embs != "search":
            embs = [EmbeddingSpec(int(e["q"]), tuple(e["h1"]), tuple(e["h2"]), tuple(e["g"])) for e in embs]
        out["reconstructibility"] = function_reconstructibility_check(
            src, np.array(ctx.doc["function"]), mac, embs, res, int(ctx.get("max_q", 3)), refine, ctx.budget
        )
    return out


def _example1_row(r: dict) -> dict:
    return {
        "p": r["p"],
        "q_noise": r["q_noise"],
        "overlap": r["overlap"],
        "theta_star": r["structured"]["theta_star"],
        "structured_lhs": r["structured"]["lhs"],
        "structured_rhs": r["structured"]["rhs"],
        "structured_margin": r["structured"]["margin"],
        "structured_holds": r["structured"]["holds"],
        "unstructured_lhs": r["unstructured"]["lhs"],
        "unstructured_rhs": r["unstructured"]["rhs"],
        "unstructured_margin": r["unstructured"]["margin"],
        "unstructured_holds": r["unstructured"]["holds"],
    }


def cmd_example1(ctx: Context) -> dict:
    theta = np.linspace(0.0, 1.0, int(ctx.get("theta_points", 1001)))
    ures = int(ctx.get("grid_resolution", 20))
    if ctx.args.search or ctx.get("search", False):
        g = ctx.get("grid", {})

        def axis(name, lo, hi):
            a = g.get(name, [lo, hi, 0.05])
            return grid_values(float(a[0]), float(a[1]), float(a[2]))

        found = find_example1_witness(axis("p", 0.05, 0.45), axis("q_noise", 0.0, 0.4), axis("overlap", 0.0, 0.9), theta, unstructured_resolution=ures)
        ctx.rows.extend(_example1_row(w) for w in found["witnesses"])
        return {"witness_count": len(found["witnesses"]), "witness": found["witness"], "search_log": found["log"]}
    p = float(ctx.need("p"))
    ch = resolve(ctx.need("channel"), ctx.base)
    if ch.get("type") != "example1":
        raise UsageError("example1 needs a channel of type 'example1'")
    qn = float(require(ch, "q_noise"))
    if "overlap" in ch:
        s0, s1 = pure_pair(float(ch["overlap"]))
    else:
        s0, s1 = decode_state(require(ch, "sigma0"), ctx.tol), decode_state(require(ch, "sigma1"), ctx.tol)
    rep = example1_analysis(p, qn, s0, s1, theta, ctx.get("mode", "closed_form"), ures)
    ctx.rows.append(_example1_row(rep))
    return rep


def _code_params(ctx: Context):
    n = int(ctx.need("n"))
    k = int(ctx.get("k", 0))
    ls = _ints(ctx.need("l"))
    delta = float(ctx.need("delta"))
    draws = int(ctx.get("draws", 1))
    if draws < 1:
        raise UsageError("draws must be positive")
    return n, k, ls, delta, draws


def _median_summary(rows: list[dict], key: str = "l") -> list[dict]:
    out = []
    for v in sorted({r[key] for r in rows}):
        errs = [r["error"] for r in rows if r[key] == v]
        out.append({key: v, "median_error": statistics.median(errs), "draws": len(errs)})
    return out


def cmd_simulate_ptp(ctx: Context) -> dict:
    ptp = ctx.channel()
    if not isinstance(ptp, CqPtp):
        raise UsageError("simulate-ptp needs a channel of type 'ptp'")
    q = ptp.num_inputs
    n, k, ls, delta, draws = _code_params(ctx)
    p_v = parse_pmf(ctx.get("p_V", [1.0 / q] * q))
    for l in ls:
        for d in range(draws):
            ncc = random_ncc(n, k, l, q, ctx.seed, (l, d))
            book, povm = build_ptp_code(ncc, ptp, p_v, delta, ctx.budget)
            res = exact_ptp_error(book, povm, ptp)
            ctx.rows.append({"n": n, "k": k, "l": l, "rate": res.rates["rate"], "error": res.error, "stderr": res.stderr, "seed": ctx.seed, "draw": d})
    return {"draws": ctx.rows, "summary": _median_summary(ctx.rows)}


def _mac_code(ctx: Context, mac: CqMac, l: int, d: int):
    n, k = int(ctx.need("n")), int(ctx.get("k", 0))
    q = int(ctx.need("q"))
    return build_mac_sum_code(
        mac, q, parse_pmf(ctx.need("p_V1X1")), parse_pmf(ctx.need("p_V2X2")), n, k, l, float(ctx.need("delta")), _draw_seed(ctx.seed, l, d), ctx.budget
    )


def _draw_seed(seed: int, l: int, d: int) -> int:
    # distinct, reproducible code seeds per (l, draw)
    return int(np.random.SeedSequence(entropy=seed, spawn_key=(l, d)).generate_state(1, np.uint64)[0])


def cmd_simulate_mac_sum(ctx: Context) -> dict:
    mac = ctx.mac()
    n, k, ls, _, draws = _code_params(ctx)
    p1, p2 = ctx.get("p_M1"), ctx.get("p_M2")
    for l in ls:
        for d in range(draws):
            code = _mac_code(ctx, mac, l, d)
            res = exact_mac_sum_error(code, p1, p2, mac, ctx.budget)
            ctx.rows.append({"n": n, "k": k, "l": l, "rate": res.rates["rate"], "error": res.error, "stderr": res.stderr, "seed": code.seed, "draw": d})
    return {"draws": ctx.rows, "summary": _median_summary(ctx.rows)}


def cmd_simulate_end_to_end(ctx: Context) -> dict:
    mac = ctx.mac()
    src = ctx.source()
    n, k, ls, _, draws = _code_params(ctx)
    q = int(ctx.need("q"))
    mode = ctx.get("mode", "exact")
    trials = int(ctx.get("trials", 10000))
    results = []
    for l in ls:
        for d in range(draws):
            code = _mac_code(ctx, mac, l, d)
            h = random_parity(q, l, n, code.seed, (STREAM_H,))
            res = end_to_end_function_error(h, h, code, src, mac, mode, trials, ctx.seed, ctx.budget)
            row = {"n": n, "k": k, "l": l, "rate": res.rates["rate"], "error": res.error, "stderr": res.stderr, "seed": code.seed, "draw": d}
            ctx.rows.append(row)
            results.append({**row, "h": h.tolist()})
    return {"draws": results, "summary": _median_summary(ctx.rows), "mode": mode}


def cmd_verify_pinching(ctx: Context) -> dict:
    p_ab = parse_pmf(ctx.need("p_AB"))
    states = [decode_state(s, ctx.tol) for s in ctx.need("states")]
    delta = float(ctx.need("delta"))
    out = []
    for n in _ints(ctx.need("n")):
        r = pinching_check(p_ab, states, n, delta, ctx.budget)
        out.append(r)
        ctx.rows.append({"n": n, "delta": delta, "min_trace": r["min_trace"], "joint_types": r["joint_types_evaluated"]})
    mins = [r["min_trace"] for r in out]
    return {"results": out, "nondecreasing": all(a <= b + 1e-12 for a, b in zip(mins, mins[1:]))}


def cmd_verify_coverage(ctx: Context) -> dict:
    q = int(ctx.need("q"))
    n, delta = int(ctx.need("n")), float(ctx.need("delta"))
    p_v = parse_pmf(ctx.need("p_V"))
    trials = int(ctx.get("trials", 1000))
    out = []
    for k in _ints(ctx.need("k")):
        res = coset_coverage_probability(n, k, q, p_v, delta, trials, ctx.seed, ctx.budget)
        out.append({"k": k, **ctx.sim(res)})
        ctx.rows.append({"n": n, "k": k, "rate": k / n, "error": res.error, "stderr": res.stderr, "seed": ctx.seed})
    return {"results": out}


def cmd_km(ctx: Context) -> dict:
    src = ctx.source()
    n = int(ctx.need("n"))
    trials = int(ctx.get("trials", 5000))
    policy = ctx.get("policy", "fixed")
    out = []
    for l in _ints(ctx.need("l")):
        res = km_error_monte_carlo(src, n, l, trials, ctx.seed, policy, ctx.budget)
        out.append({"l": l, **ctx.sim(res)})
        ctx.rows.append({"n": n, "l": l, "rate": res.rates["rate"], "error": res.error, "stderr": res.stderr, "seed": ctx.seed})
    return {"results": out, "H_sum": shannon_entropy(src.sum_pmf(src.sizes[0]))}


HANDLERS = {
    "rates": cmd_rates,
    "optimize": cmd_optimize,
    "example1": cmd_example1,
    "simulate-ptp": cmd_simulate_ptp,
    "simulate-mac-sum": cmd_simulate_mac_sum,
    "simulate-end-to-end": cmd_simulate_end_to_end,
    "verify-pinching": cmd_verify_pinching,
    "verify-coverage": cmd_verify_coverage,
    "km": cmd_km,
}


# -- plumbing ----------------------------------------------------------------


def _csv_text(rows: list[dict]) -> str:
    cols: list[str] = []
    for r in rows:
        cols.extend(c for c in r if c not in cols)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: _cell(r.get(c, "")) for c in cols})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer, np.bool_)):
        return v.item()
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--out", default=".", help="output directory for report.json / sweep.csv")
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--budget-dim", type=int, default=None, help="max Hilbert-space dimension d**n")
    common.add_argument("--budget-enum", type=int, default=None, help="max enumerated sequences per call")
    common.add_argument("--tol", type=float, default=1e-9, help="validation tolerance for input states")
    common.add_argument("--no-timestamp", action="store_true", help="omit timestamps and timings from outputs")
    parser = argparse.ArgumentParser(prog="cqsum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cqsum {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "example1":
            sp.add_argument("--search", action="store_true", help="scan the default grid for witnesses")
    return parser


def run(args) -> int:
    doc = load_json(args.config)
    check_schema(doc)
    cmd = doc.get("command", args.command)
    if cmd != args.command:
        raise UsageError(f"config is for {cmd!r}, not {args.command!r}")
    ctx = Context(doc, args, Path(args.config).parent)
    result = HANDLERS[args.command](ctx)
    report = {
        "schema": REPORT_SCHEMA,
        "command": args.command,
        "version": __version__,
        "rng": RNG_NAME,
        "seed": ctx.seed,
        "budget": {"dim": ctx.budget.dim, "terms": ctx.budget.terms, "enum": ctx.budget.enum, "grid": ctx.budget.grid},
        "config": doc,
        "result": result,
    }
    if ctx.timestamps:
        report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps(report))
    if ctx.rows:
        (out / "sweep.csv").write_text(_csv_text(ctx.rows))
    return 0


def _fail(code: int, kind: str, msg: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": msg}) + "\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigFormatError as exc:
        return _fail(2, "malformed_json", str(exc))
    except ResourceError as exc:
        return _fail(4, "resource", str(exc))
    except (UsageError, ValidationError, DomainError) as exc:
        return _fail(3, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
