"""Command-line entry points.

Subcommands:
  simulate  replay a trace under one offloading algorithm into a run directory
  report    compare the algorithms in a run directory (CSV tables + figures)
  predict   per-period WiFi forecasts vs. realizations, with accuracy summary
  solve     solve a knapsack problem JSON (heuristic or exact)
  ratectl   simulate the receiver-side rate controller on a preset link
  synth     generate a seeded synthetic cohort trace directory
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .optimizer import problem_from_json, schedule_to_json, solve_bruteforce, solve_lagrange
from .ratectl import DEFAULT_ALPHA, LINK_PRESETS, simulate_flow
from .report import emit_comparison, plot_flow, write_flow_csv, write_run
from .sim import ALGORITHMS, run_trial
from .synth import generate_cohort
from .trace import load_trace, load_trace_set, serialize_trace
from .wifi import fit_profile, initial_forecast, prediction_accuracy, update_forecast


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None,
                        help="INI config file (defaults applied otherwise)")


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.deadline is not None:
        cfg.deadline = args.deadline
    seed = args.seed if args.seed is not None else 0
    traces = load_trace_set(args.trace, n=cfg.n, wifi_speed=cfg.wifi_speed,
                            apps=cfg.apps())
    reports = run_trial(traces, cfg, algorithms=[args.algorithm], seed=seed,
                        extension=args.extension)
    write_run(args.out, reports)
    rep = reports[args.algorithm]
    print(f"{args.algorithm}: {len(rep.users)} users, "
          f"mean utility {rep.mean('utility'):.6g}, mean spend {rep.mean('spend'):.6g}, "
          f"mean offloaded {rep.mean('offloaded'):.6g}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cmp = emit_comparison(args.in_dir, reference=args.reference,
                          figures=not args.no_figures)
    print(f"comparison written to {args.in_dir} (reference: {cmp.reference})")
    for name in sorted(cmp.ratios):
        means = {m: sum(v.values()) / len(v) for m, v in cmp.ratios[name].items()}
        pretty = ", ".join(f"{m} {x:.3f}" for m, x in means.items())
        print(f"  {name} / {cmp.reference}: {pretty}")
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    days = load_trace(args.trace, n=cfg.n, wifi_speed=cfg.wifi_speed, apps=cfg.apps())
    train = args.train_days if args.train_days is not None else cfg.window
    if not 1 <= train < len(days):
        raise SystemExit(f"need 1 <= train days < {len(days)}")
    profile, history = fit_profile(days[:train])
    out = open(args.out, "w") if args.out else sys.stdout
    print("day,period,w,realized,accurate", file=out)
    ws: list[float] = []
    realized: list[bool] = []
    for day in days[train:]:
        locs = day.locations()
        base = initial_forecast(profile, history)
        for k in range(1, cfg.n + 1):
            if k == 1:
                w = base.prob(1)
            else:
                prev2 = locs[k - 3] if k >= 3 else None
                w = update_forecast(profile, history, k, prev2, locs[k - 2]).prob(k)
            obs = day.period(k).wifi_available
            hit = (w > 0.5) == obs
            ws.append(w)
            realized.append(obs)
            print(f"{day.day_index},{k},{w:.6g},{int(obs)},{int(hit)}", file=out)
        profile.add_day(day)
        history.add_day(locs)
    if args.out:
        out.close()
    acc = prediction_accuracy(ws, realized)
    print(f"accuracy: {acc:.4f} over {len(ws)} periods "
          f"({len(days) - train} evaluation days)")
    return 0


def cmd_solve(args: argparse.Namespace) -> int:
    with open(args.problem) as fh:
        problem = problem_from_json(json.load(fh))
    solver = solve_bruteforce if args.solver == "bruteforce" else solve_lagrange
    schedule = solver(problem)
    payload = schedule_to_json(problem, schedule)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0 if schedule.feasible else 1


def cmd_ratectl(args: argparse.Namespace) -> int:
    link = LINK_PRESETS[args.link]
    target = args.target_kbps * 1000.0 / 8.0
    samples = simulate_flow(target, link, args.duration, alpha=args.alpha,
                            seed=args.seed)
    out = args.out or f"flow_{args.link}_{int(args.target_kbps)}kbps.csv"
    write_flow_csv(out, samples)
    if args.plot:
        plot_flow(args.plot, samples, args.target_kbps)
    tail = [s.throughput for s in samples if s.time >= args.duration - 10.0]
    mean_kbps = sum(tail) / len(tail) * 8 / 1000 if tail else float("nan")
    print(f"{args.link} target {args.target_kbps:.0f} Kbps: steady-state mean "
          f"{mean_kbps:.1f} Kbps over the last 10 s -> {out}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    cohort = generate_cohort(args.users, args.days, args.seed, n=cfg.n, apps=cfg.apps())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for user, days in cohort.items():
        serialize_trace(days, out / f"{user}.csv", wifi_speed=cfg.wifi_speed)
    print(f"wrote {len(cohort)} users x {args.days} days to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="offloadsim",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="replay a trace under one algorithm")
    p.add_argument("--trace", required=True, type=Path,
                   help="trace CSV (one user) or directory of <user>.csv")
    p.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    p.add_argument("--extension", action="store_true",
                   help="use the per-period network-selection variant")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--deadline", type=int, default=None,
                   help="delayed-offloading wait limit in periods (overrides config)")
    _add_config_arg(p)
    p.add_argument("--out", required=True, type=Path, help="run directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="compare algorithms in a run directory")
    p.add_argument("--in", dest="in_dir", required=True, type=Path)
    p.add_argument("--reference", default="amuse")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("predict", help="WiFi forecast accuracy on a trace")
    p.add_argument("--trace", required=True, type=Path)
    p.add_argument("--train-days", type=int, default=None)
    p.add_argument("--out", type=Path, default=None,
                   help="CSV output (stdout when omitted)")
    _add_config_arg(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("solve", help="solve a problem JSON")
    p.add_argument("--problem", required=True, type=Path)
    p.add_argument("--solver", choices=("lagrange", "bruteforce"), default="lagrange")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ratectl", help="simulate receiver-side rate control")
    p.add_argument("--target-kbps", type=float, required=True)
    p.add_argument("--link", choices=sorted(LINK_PRESETS), default="ethernet")
    p.add_argument("--duration", type=float, default=30.0)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--plot", type=Path, default=None, help="also render a PNG")
    p.set_defaults(func=cmd_ratectl)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--users", type=int, default=16)
    p.add_argument("--days", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    _add_config_arg(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
