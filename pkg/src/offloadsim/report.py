"""Run-directory persistence and report emission (CSV tables + figures)."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sim import Comparison, METRICS, SimReport, UserTotals, compare  # noqa: E402


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def write_run(out_dir: str | Path, reports: Mapping[str, SimReport]) -> None:
    """Persist one or more algorithm runs under `<out>/<algorithm>/`."""
    out = Path(out_dir)
    for name, report in reports.items():
        algo_dir = out / name
        algo_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "algorithm": report.algorithm,
            "seed": report.seed,
            "config_hash": report.config_hash,
            "users": {u: asdict(t) for u, t in sorted(report.users.items())},
        }
        with (algo_dir / "report.json").open("w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        _write_csv(
            algo_dir / "days.csv",
            ["user", "day", "utility", "spend", "offloaded", "total_volume", "overshoot"],
            [[d["user"], d["day"], d["utility"], d["spend"], d["offloaded"],
              d["total_volume"], d["overshoot"]] for d in report.days],
        )


def load_run(run_dir: str | Path) -> dict[str, SimReport]:
    """Read back every `<algorithm>/report.json` under a run directory."""
    run = Path(run_dir)
    reports = {}
    for child in sorted(run.iterdir()):
        meta = child / "report.json"
        if not child.is_dir() or not meta.exists():
            continue
        with meta.open() as fh:
            payload = json.load(fh)
        users = {u: UserTotals(**t) for u, t in payload["users"].items()}
        reports[payload["algorithm"]] = SimReport(
            algorithm=payload["algorithm"],
            seed=payload["seed"],
            config_hash=payload["config_hash"],
            users=users,
        )
    if not reports:
        raise FileNotFoundError(f"no <algorithm>/report.json found under {run}")
    return reports


def emit_comparison(run_dir: str | Path, reference: str = "amuse",
                    figures: bool = True) -> Comparison:
    """Build the cross-algorithm report: per-user table, ratio CDFs,
    heavy/light group means, a JSON summary, and matching figures."""
    run = Path(run_dir)
    reports = load_run(run)
    cmp = compare(reports, reference=reference)

    rows = []
    for name in sorted(reports):
        rep = reports[name]
        for user in sorted(rep.users):
            t = rep.users[user]
            rows.append([user, name, t.utility, t.spend, t.offloaded, t.total_volume,
                         t.overshoot_days, cmp.groups.classification[user]])
    _write_csv(run / "per_user.csv",
               ["user", "algorithm", "utility", "spend", "offloaded", "total_volume",
                "overshoot_days", "group"], rows)

    for metric in METRICS:
        rows = []
        for name in sorted(cmp.cdfs):
            for value, f in cmp.cdfs[name][metric]:
                rows.append([name, value, f])
        _write_csv(run / f"cdf_{_metric_slug(metric)}.csv",
                   ["algorithm", "ratio_vs_" + cmp.reference, "cdf"], rows)

    rows = []
    for name in sorted(cmp.group_means):
        for metric in METRICS:
            for group in ("heavy", "light"):
                base = cmp.group_means[name][metric][group]
                ref_rep = reports[cmp.reference]
                members = cmp.groups.members(group)
                ref_mean = (sum(getattr(ref_rep.users[u], metric) for u in members)
                            / len(members)) if members else float("nan")
                rel = base / ref_mean if ref_mean else float("nan")
                rows.append([name, group, metric, base, ref_mean, rel])
    _write_csv(run / "groups.csv",
               ["algorithm", "group", "metric", "mean", f"{cmp.reference}_mean",
                "relative"], rows)

    summary = {
        "reference": cmp.reference,
        "algorithms": sorted(reports),
        "seed": reports[cmp.reference].seed,
        "config_hash": reports[cmp.reference].config_hash,
        "means": {
            name: {metric: rep.mean(metric) for metric in METRICS}
            for name, rep in sorted(reports.items())
        },
        "mean_ratios": {
            name: {
                metric: sum(vals.values()) / len(vals)
                for metric, vals in cmp.ratios[name].items()
            }
            for name in sorted(cmp.ratios)
        },
    }
    with (run / "summary.json").open("w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if figures:
        _plot_cdfs(run, cmp)
        _plot_groups(run, cmp, reports)
    return cmp


def _metric_slug(metric: str) -> str:
    return {"utility": "utility", "spend": "spend", "offloaded": "offload"}[metric]


def _plot_cdfs(run: Path, cmp: Comparison) -> None:
    for metric in METRICS:
        fig, ax = plt.subplots(figsize=(5, 3.2))
        for name in sorted(cmp.cdfs):
            pts = [(v, f) for v, f in cmp.cdfs[name][metric] if v != float("inf")]
            if not pts:
                continue
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            ax.step([xs[0]] + xs, [0.0] + ys, where="post", label=name)
        ax.axvline(1.0, color="grey", lw=0.8, ls="--")
        ax.set_xlabel(f"{metric} relative to {cmp.reference}")
        ax.set_ylabel("CDF")
        ax.set_ylim(0, 1.02)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(run / f"cdf_{_metric_slug(metric)}.png", dpi=120)
        plt.close(fig)


def _plot_groups(run: Path, cmp: Comparison, reports: Mapping[str, SimReport]) -> None:
    names = sorted(cmp.group_means)
    if not names:
        return
    ref_rep = reports[cmp.reference]
    fig, axes = plt.subplots(1, len(METRICS), figsize=(3.2 * len(METRICS), 3.0))
    width = 0.35
    for ax, metric in zip(axes, METRICS):
        ticks = []
        for gi, group in enumerate(("heavy", "light")):
            members = cmp.groups.members(group)
            ref_mean = (sum(getattr(ref_rep.users[u], metric) for u in members)
                        / len(members)) if members else float("nan")
            for ni, name in enumerate(names):
                base = cmp.group_means[name][metric][group]
                rel = base / ref_mean if ref_mean else float("nan")
                ax.bar(gi + (ni - (len(names) - 1) / 2) * width, rel, width=width * 0.9,
                       label=name if gi == 0 else None)
            ticks.append(group)
        ax.axhline(1.0, color="grey", lw=0.8, ls="--")
        ax.set_xticks(range(len(ticks)))
        ax.set_xticklabels(ticks)
        ax.set_title(f"{metric} vs {cmp.reference}", fontsize=9)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(run / "groups.png", dpi=120)
    plt.close(fig)


def write_flow_csv(path: str | Path, samples) -> None:
    """`time,throughput_kbps,adv_win_bytes` series for one controlled flow."""
    _write_csv(Path(path), ["time", "throughput_kbps", "adv_win_bytes"],
               [[s.time, s.throughput * 8.0 / 1000.0, s.adv_win] for s in samples])


def plot_flow(path: str | Path, samples, target_kbps: float) -> None:
    fig, ax1 = plt.subplots(figsize=(6, 3.2))
    times = [s.time for s in samples]
    ax1.plot(times, [s.throughput * 8 / 1000 for s in samples], lw=0.9,
             label="throughput")
    ax1.axhline(target_kbps, color="green", lw=1.0, label="target")
    ax1.set_xlabel("time (s)")
    ax1.set_ylabel("throughput (Kbps)")
    ax2 = ax1.twinx()
    ax2.plot(times, [s.adv_win for s in samples], color="tab:orange", lw=0.9,
             label="adv window")
    ax2.set_ylabel("advertised window (bytes)")
    lines, labels = ax1.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax1.legend(lines + lines2, labels + labels2, fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
