"""Command-line pipeline: ingest, test, robustness, predict, simulate, report.

Every artifact is JSON or CSV; each JSON report embeds the resolved run
configuration, the tolerance set and a hash of both, so identical configs
and seeds reproduce byte-identical files.  Failures exit nonzero and print a
machine-readable error object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations
from pathlib import Path

import numpy as np

from . import dataset as ds
from . import report as rpt
from .forward import AgentSpec, sample_dataset, solve_agent
from .infocost import beta_sweep, test_renyi_kkt, test_shannon_kkt
from .niasniac import recover_costs, test_nias_niac
from .predict import prediction_report
from .robustness import r1, r2, r3
from .solvers import SolverConfig

SCHEMA = "bayesrp-report-v1"


class CliError(ValueError):
    pass


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        feas_tol=float(os.environ.get("BAYESRP_FEAS_TOL", args.feas_tol)),
        opt_tol=float(os.environ.get("BAYESRP_OPT_TOL", args.opt_tol)),
        qp_stationarity_tol=float(os.environ.get("BAYESRP_QP_TOL", args.qp_tol)),
    )


def _config_payload(args, solver: SolverConfig) -> dict:
    skip = {"func", "out"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip and not callable(v)}
    cfg["tolerances"] = {
        "feas_tol": solver.feas_tol,
        "opt_tol": solver.opt_tol,
        "qp_stationarity_tol": solver.qp_stationarity_tol,
    }
    return cfg


def write_json(path: Path, payload: dict, config: dict) -> None:
    payload = dict(payload)
    payload["schema"] = SCHEMA
    payload["config"] = config
    payload["config_hash"] = hashlib.sha256(
        json.dumps(config, sort_keys=True).encode()
    ).hexdigest()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _load_records(path) -> list[ds.ChoiceRecord]:
    records = ds.load_dataset_json(path)
    if not records:
        raise CliError(f"dataset {path} contains no records")
    return records


def _problems_by_segment(records, smoothing):
    problems = {}
    for segment in ds.segments_of(records):
        problems[segment] = ds.estimate_problem(records, segment, smoothing=smoothing)
    return problems


def _max_clique(nodes, good_pairs) -> list:
    """Exact maximum clique (Bron-Kerbosch); 18 segments at most in practice."""
    adj = {n: set() for n in nodes}
    for (a, b) in good_pairs:
        adj[a].add(b)
        adj[b].add(a)
    best: list = []

    def expand(clique, candidates):
        nonlocal best
        if not candidates:
            if len(clique) > len(best):
                best = list(clique)
            return
        if len(clique) + len(candidates) <= len(best):
            return
        for v in sorted(candidates):
            expand(clique + [v], candidates & adj[v])
            candidates = candidates - {v}

    expand([], set(nodes))
    return sorted(best)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    raws = ds.read_raw_csv(args.input)
    feat = ds.FeaturizeConfig(
        view_threshold=args.view_threshold,
        sentiment_band=args.sentiment_band,
        comment_threshold=args.comment_threshold,
    )
    frames = None
    problem_one = None
    if args.mode == "frame-file":
        if not args.frames_file:
            raise CliError("--mode frame-file requires --frames-file")
        frames = ds.read_frame_assignments(args.frames_file)
        problem_one = set(args.problem_one_categories or [])
    records = ds.featurize_all(raws, feat, frames=frames, problem_one_categories=problem_one)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds.dump_dataset_json(records, out / "dataset.json", feat)
    summary = {
        "n_records": len(records),
        "n_segments": len(ds.segments_of(records)),
        "output": str(out / "dataset.json"),
    }
    write_json(out / "ingest.json", summary, config)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _pair_test(pair, problems, args, solver):
    pa, pb = problems[pair[0]], problems[pair[1]]
    if args.cost == "general":
        sol = test_nias_niac([pa, pb], margin=args.margin, config=solver)
        rec = sol.to_dict()
        if sol.is_feasible:
            rec["costs"] = recover_costs([pa, pb], sol.utilities, solver).to_dict()
    elif args.cost == "shannon":
        rec = test_shannon_kkt([pa, pb], smoothing=args.smoothing, config=solver).to_dict()
    else:
        rec = test_renyi_kkt([pa, pb], args.beta, smoothing=args.smoothing, config=solver).to_dict()
    rec["segment"] = [list(pair[0]), list(pair[1])]
    return rec


def cmd_test(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    records = _load_records(args.input)
    problems = _problems_by_segment(records, args.smoothing)
    segments = list(problems)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload: dict = {}
    if args.pairs:
        pairs = list(combinations(segments, 2))
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(lambda pr: _pair_test(pr, problems, args, solver), pairs))
        passing = [
            tuple(map(tuple, r["segment"])) for r in results if r["status"] in ("feasible", "pass")
        ]
        payload["results"] = results
        payload["passing_pairs"] = len(passing)
        payload["category_set"] = [list(s) for s in _max_clique(segments, set(passing))]
    else:
        probs = [problems[s] for s in segments]
        if args.cost == "general":
            sol = test_nias_niac(probs, margin=args.margin, max_cycle_len=args.max_cycle_len, config=solver)
            rec = sol.to_dict()
            if sol.is_feasible:
                rec["costs"] = recover_costs(probs, sol.utilities, solver).to_dict()
        elif args.cost == "shannon":
            rec = test_shannon_kkt(probs, smoothing=args.smoothing, config=solver).to_dict()
        else:
            rec = test_renyi_kkt(probs, args.beta, smoothing=args.smoothing, config=solver).to_dict()
        rec["segment"] = [list(s) for s in segments]
        payload["results"] = [rec]
    if args.beta_grid:
        grid = [float(b) for b in args.beta_grid.split(",") if b]
        sweep = []
        if args.pairs:
            for pair in combinations(segments, 2):
                rows = beta_sweep([problems[pair[0]], problems[pair[1]]], grid, args.smoothing, solver)
                for row in rows:
                    row["segment"] = [list(pair[0]), list(pair[1])]
                sweep.extend(rows)
        else:
            sweep = beta_sweep([problems[s] for s in segments], grid, args.smoothing, solver)
        payload["beta_table"] = sweep
        rpt.write_csv(
            out / "beta_table.csv",
            ["segment", "beta", "cost_family", "status"],
            [(json.dumps(r.get("segment")), r["beta"], r["cost_family"], r["status"]) for r in sweep],
        )
    write_json(out / "rationality.json", payload, config)
    n_pass = sum(1 for r in payload["results"] if r["status"] in ("feasible", "pass"))
    print(json.dumps({"results": len(payload["results"]), "passing": n_pass}, sort_keys=True))
    return 0


def cmd_robustness(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    records = _load_records(args.input)
    problems = _problems_by_segment(records, args.smoothing)
    segments = list(problems)
    metrics = [m.strip().upper() for m in args.metrics.split(",") if m.strip()]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    pass_status: dict = {}

    def passing(pair) -> bool:
        if pair not in pass_status:
            pa, pb = problems[pair[0]], problems[pair[1]]
            pass_status[pair] = test_nias_niac([pa, pb], config=solver).is_feasible
        return pass_status[pair]

    pairs = list(combinations(segments, 2))
    for pair in pairs:
        pa, pb = problems[pair[0]], problems[pair[1]]
        if "R1" in metrics:
            results.append(r1([pa, pb], config=solver).to_dict())
        if "R2" in metrics and passing(pair):
            results.append(r2([pa, pb], config=solver).to_dict())
        if "R3" in metrics and passing(pair):
            results.append(
                r3([pa, pb], beta=args.beta, smoothing=args.smoothing, config=solver,
                   grid_points=args.grid_points, refine_depth=args.refine_depth).to_dict()
            )
    payload: dict = {"results": results}
    if args.beta_grid and "R3" in metrics:
        curve = []
        for beta in [float(b) for b in args.beta_grid.split(",") if b]:
            vals = [
                r3([problems[p[0]], problems[p[1]]], beta=beta, smoothing=args.smoothing,
                   config=solver, grid_points=args.grid_points,
                   refine_depth=args.refine_depth).normalized
                for p in pairs if passing(p)
            ]
            curve.append({"beta": beta, "mean_r3": float(np.mean(vals)) if vals else float("nan")})
        payload["beta_curve"] = curve
    summary = {}
    for metric in metrics:
        vals = np.array([r["normalized"] for r in results if r["metric"] == metric])
        if vals.size:
            summary[metric] = {
                "n": int(vals.size),
                "mean": float(vals.mean()),
                "max": float(vals.max()),
                "p90": float(np.percentile(vals, 90)),
            }
    payload["summary"] = summary
    write_json(out / "robustness.json", payload, config)
    rpt.write_csv(
        out / "robustness.csv",
        ["pair", "metric", "beta", "raw", "normalized"],
        [
            (json.dumps(r["pair"]), r["metric"], r.get("details", {}).get("beta"),
             r["raw"], r["normalized"])
            for r in results
        ],
    )
    print(json.dumps({"metrics": summary}, sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    records = _load_records(args.input)
    train, test = ds.split_dataset(records, args.ratio, args.seed)
    train_p, test_p = {}, {}
    for segment in ds.segments_of(records):
        try:
            train_p[segment] = ds.estimate_problem(train, segment, smoothing=args.smoothing)
            test_p[segment] = ds.estimate_problem(test, segment, smoothing=args.smoothing)
        except ValueError:
            continue  # segment missing from one split; reported as skipped
    report = prediction_report(train_p, test_p, smoothing=args.smoothing, config=solver)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = report.to_dict()
    write_json(out / "prediction.json", payload, config)
    rpt.write_csv(
        out / "prediction.csv",
        ["segment", "state", "map_estimate", "max_utility_estimate", "error", "comment_level_match"],
        [
            (json.dumps(r["segment"]), r["state"], r["map_estimate"],
             r["max_utility_estimate"], r["error"], r["comment_level_match"])
            for r in payload["rows"]
        ],
    )
    print(json.dumps({"rows": len(payload["rows"]), "mse": payload["mse"]}, sort_keys=True))
    return 0


_STATE_VIEWS = {1: 20_000, 2: 5_000}
_ACTION_COMMENTS = {0: 50, 1: 150}  # low / high
_SENTIMENT_DIFF = {0: -50, 1: 0, 2: 50}


def _record_to_raw_row(rec: ds.ChoiceRecord) -> tuple:
    """Representative raw counters that featurize back to exactly (x, a)."""
    level, sentiment = divmod(rec.a - 1, 3)
    diff = _SENTIMENT_DIFF[sentiment]
    likes, dislikes = (diff, 0) if diff >= 0 else (0, -diff)
    return (
        rec.item_id,
        _STATE_VIEWS[rec.x],
        _ACTION_COMMENTS[level],
        likes,
        dislikes,
        rec.problem,
        rec.frame,
    )


def cmd_simulate(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    spec = AgentSpec.from_dict(json.loads(Path(args.agent).read_text()))
    behavior = solve_agent(spec)
    records = sample_dataset(behavior, args.samples, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds.dump_dataset_json(records, out / "dataset.json")
    rpt.write_csv(
        out / "simulated.csv",
        list(ds.RAW_COLUMNS) + ["frame"],
        [_record_to_raw_row(r) for r in records],
    )
    payload = {
        "behavior": {
            "achieved_mi": behavior.achieved_mi.tolist(),
            "objective": behavior.objective,
            "multipliers": behavior.multipliers.tolist(),
            "policies": [p.policy.tolist() for p in behavior.problems],
        },
        "n_records": len(records),
    }
    write_json(out / "behavior.json", payload, config)
    print(json.dumps({"n_records": len(records)}, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    solver = _solver_config(args)
    config = _config_payload(args, solver)
    test_payload = json.loads(Path(args.test).read_text()) if args.test else None
    robustness_payload = json.loads(Path(args.robustness).read_text()) if args.robustness else None
    prediction_payload = json.loads(Path(args.prediction).read_text()) if args.prediction else None
    raws = ds.read_raw_csv(args.raw) if args.raw else None
    dataset_summary = None
    if args.input:
        records = _load_records(args.input)
        dataset_summary = {
            "n_records": len(records),
            "n_segments": len(ds.segments_of(records)),
        }
    path = rpt.render_report(
        args.out,
        dataset_summary=dataset_summary,
        test_payload=test_payload,
        robustness_payload=robustness_payload,
        prediction_payload=prediction_payload,
        raws=raws,
    )
    write_json(Path(args.out) / "report.json", {"summary": str(path)}, config)
    print(json.dumps({"summary": str(path)}, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesrp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--smoothing", type=float, default=0.5,
                       help="pseudo-count for policy cells needed by log/ratio terms")
        p.add_argument("--feas-tol", type=float, default=1e-8)
        p.add_argument("--opt-tol", type=float, default=1e-8)
        p.add_argument("--qp-tol", type=float, default=1e-6)

    p = sub.add_parser("ingest", help="featurize raw engagement CSV into a canonical dataset")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["category-pairs", "frame-file"], default="category-pairs")
    p.add_argument("--frames-file", help="item_id,frame CSV from the clustering pipeline")
    p.add_argument("--problem-one-categories", type=int, nargs="*", default=None,
                   help="categories forming decision problem 1 inside each frame")
    p.add_argument("--view-threshold", type=int, default=10_000)
    p.add_argument("--sentiment-band", type=int, default=25)
    p.add_argument("--comment-threshold", type=int, default=100)
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("test", help="rationality feasibility tests per segment pair")
    p.add_argument("--input", required=True, help="canonical dataset JSON")
    p.add_argument("--pairs", action="store_true", help="test every segment pair (K=2 each)")
    p.add_argument("--cost", choices=["general", "shannon", "renyi"], default="general")
    p.add_argument("--beta", type=float, default=0.9, help="order for --cost renyi")
    p.add_argument("--beta-grid", default=None, help="comma list of orders for a verdict table")
    p.add_argument("--margin", type=float, default=0.0,
                   help="strictness margin on all inequalities (0 = non-strict)")
    p.add_argument("--max-cycle-len", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("robustness", help="R1/R2/R3 margins per segment pair")
    p.add_argument("--input", required=True)
    p.add_argument("--metrics", default="R1,R2,R3")
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--beta-grid", default=None)
    p.add_argument("--grid-points", type=int, default=9)
    p.add_argument("--refine-depth", type=int, default=4)
    common(p)
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("predict", help="train/test behavior prediction")
    p.add_argument("--input", required=True)
    p.add_argument("--ratio", type=float, default=0.8)
    common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="sample a synthetic dataset from an agent spec")
    p.add_argument("--agent", required=True, help="agent spec JSON")
    p.add_argument("--samples", type=int, default=10_000, help="draws per decision problem")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="render summary, plot CSVs and figures")
    p.add_argument("--input", default=None, help="canonical dataset JSON")
    p.add_argument("--raw", default=None, help="raw engagement CSV for the scatter figure")
    p.add_argument("--test", default=None, help="rationality.json")
    p.add_argument("--robustness", default=None, help="robustness.json")
    p.add_argument("--prediction", default=None, help="prediction.json")
    common(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single reporting funnel
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
