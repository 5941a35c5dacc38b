"""``capinn`` command-line tool."""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DivergenceError
from ..network import load_params, save_params
from ..pde import pinn_loss, sample_domain, write_points_csv
from ..autodiff import value_of
from ..trainer import MetricsWriter, landscape_project, time_march, write_grid
from .config import Experiment, load_config, parse_config_text, resolved_text

EXIT_OK = 0
EXIT_CRASH = 1
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def reduction(a: float, b: float) -> float:
    """Percentage decrease from ``a`` to ``b``: (1 - b/a) * 100."""
    if a == 0.0:
        raise ZeroDivisionError("reduction relative to a zero mean")
    return (1.0 - b / a) * 100.0


def _seed_dir(root: Path, seed: int) -> Path:
    return root / str(seed)


def run_seed(cfg_text: str, source: str, seed: int, root: str) -> dict:
    """Train one seed and write its artifacts; returns the per-seed summary."""
    exp = parse_config_text(cfg_text, source)
    problem = exp.make_problem()
    d = _seed_dir(Path(root), seed)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.resolved.cfg").write_text(resolved_text(exp, seeds=exp.train.seeds))
    summary = {"seed": seed, "diverged": False}
    with MetricsWriter(d / "metrics.csv", problem.outputs) as w:
        try:
            res = time_march(exp.spec, problem, exp.plan, exp.train, seed, writer=w, checkpoint_dir=d)
        except DivergenceError as e:
            summary.update(diverged=True, error=str(e), iteration=e.iteration, window=e.window)
            (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
            return summary
    save_params(d / "final.ckpt", exp.spec, res.thetas[-1], meta={"seed": seed, "experiment": exp.name})
    last = res.history[-1]
    summary.update(
        iterations=len(res.history),
        final_loss=last.loss,
        monitor_violations=res.monitor_violations,
        r_over_one=res.r_over_one,
        r_count=res.r_count,
    )
    if res.final_rel_l2 is not None:
        for c in problem.outputs:
            summary[f"rel_l2_{c}"] = res.final_rel_l2[c]
            summary[f"linf_{c}"] = res.final_linf[c]
    (d / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


def schedule_key(exp: Experiment) -> dict:
    """Settings that must agree between the two sides of an A/B comparison."""
    t = exp.train
    return {
        "iterations": t.iterations,
        "windows": t.windows,
        "lr": t.lr,
        "warmup_frac": t.warmup_frac,
        "floor_frac": t.floor_frac,
        "weight_decay": t.weight_decay,
    }


def aggregate(exp: Experiment, per_seed: list[dict]) -> dict:
    keys = sorted({k for s in per_seed for k in s if k.startswith(("rel_l2_", "linf_"))})
    ok = [s for s in per_seed if not s["diverged"]]
    out = {
        "experiment": exp.name,
        "optimizer": exp.train.optimizer,
        "seeds": [s["seed"] for s in per_seed],
        "diverged_seeds": [s["seed"] for s in per_seed if s["diverged"]],
        "monitor_violations": sum(s.get("monitor_violations", 0) for s in ok),
        "schedule": schedule_key(exp),
        "r_over_one": sum(s.get("r_over_one", 0) for s in ok),
        "r_count": sum(s.get("r_count", 0) for s in ok),
        "mean": {},
        "best": {},
    }
    for k in keys:
        vals = [s[k] for s in ok if k in s]
        if vals:
            out["mean"][k] = math.fsum(vals) / len(vals)
            out["best"][k] = min(vals)
    return out


def cmd_run(args) -> int:
    exp = load_config(args.config)
    seeds = tuple(int(s) for s in args.seeds.split(",")) if args.seeds else exp.train.seeds
    text = Path(args.config).read_text()
    if args.seeds:
        exp.train.seeds = seeds
        exp.values["train"]["seeds"] = seeds
        text = resolved_text(exp, seeds)
    root = Path(args.out or exp.output_dir) / exp.name
    root.mkdir(parents=True, exist_ok=True)
    (root / "config.resolved.cfg").write_text(resolved_text(exp, seeds))
    if args.threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            per_seed = list(pool.map(run_seed, [text] * len(seeds), [str(args.config)] * len(seeds), seeds, [str(root)] * len(seeds)))
    else:
        per_seed = [run_seed(text, str(args.config), s, str(root)) for s in seeds]
    summary = aggregate(exp, per_seed)
    (root / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    for s in per_seed:
        status = "DIVERGED " + s.get("error", "") if s["diverged"] else "ok"
        print(f"seed {s['seed']}: {status}")
    for k, v in summary["mean"].items():
        print(f"{k}: mean {v:.6e}  best {summary['best'][k]:.6e}")
    return EXIT_DIVERGED if summary["diverged_seeds"] else EXIT_OK


def compare_summaries(a: dict, b: dict) -> list[tuple[str, float, float, float]]:
    if sorted(a["seeds"]) != sorted(b["seeds"]):
        raise ValueError(f"seed lists differ ({a['seeds']} vs {b['seeds']}); refusing an unfair comparison")
    if a.get("schedule") != b.get("schedule"):
        raise ValueError(f"schedules differ ({a.get('schedule')} vs {b.get('schedule')}); refusing an unfair comparison")
    rows = []
    for k in sorted(set(a["mean"]) & set(b["mean"])):
        rows.append((k, a["mean"][k], b["mean"][k], reduction(a["mean"][k], b["mean"][k])))
    return rows


def cmd_compare(args) -> int:
    sa = json.loads((Path(args.dir_a) / "summary.json").read_text())
    sb = json.loads((Path(args.dir_b) / "summary.json").read_text())
    try:
        rows = compare_summaries(sa, sb)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    name_a, name_b = sa.get("optimizer", "A"), sb.get("optimizer", "B")
    lines = ["metric,mean_a,mean_b,reduction_pct"] + [f"{k},{x!r},{y!r},{r:.2f}" for k, x, y, r in rows]
    if args.csv:
        Path(args.csv).write_text("\n".join(lines) + "\n")
    print(f"{'metric':<14}{name_a:>14}{name_b:>14}{'reduction':>12}")
    for k, x, y, r in rows:
        print(f"{k:<14}{x:>14.3e}{y:>14.3e}{r:>11.2f}%")
    return EXIT_OK


def cmd_landscape(args) -> int:
    exp = load_config(args.config)
    problem = exp.make_problem()
    if args.data_only:
        problem.weights = {**problem.weights, "f": 0.0}
    seed = args.seed if args.seed is not None else exp.train.seeds[0]
    if args.checkpoint:
        _, theta, _, _ = load_params(args.checkpoint)
    else:
        res = time_march(exp.spec, problem if not args.data_only else exp.make_problem(), exp.plan, exp.train, seed)
        theta = res.thetas[-1]
    samples = sample_domain(problem, exp.plan, stream=(seed, 0))
    ls = exp.landscape

    def loss(th):
        return float(value_of(pinn_loss(exp.spec, th, problem, samples)[0]))

    grid = landscape_project(theta, loss, ls["n"], ls["extent"], ls["seed"], ls["normalize"])
    out = Path(args.out or (Path(exp.output_dir) / exp.name / ("landscape_data.txt" if args.data_only else "landscape.txt")))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_grid(out, grid, ls["extent"])
    finite = grid[np.isfinite(grid)]
    print(f"wrote {out}: log10 loss range [{finite.min():.4f}, {finite.max():.4f}]" if finite.size else f"wrote {out}")
    return EXIT_OK


def cmd_dump_samples(args) -> int:
    exp = load_config(args.config)
    problem = exp.make_problem()
    seed = args.seed if args.seed is not None else exp.train.seeds[0]
    s = sample_domain(problem, exp.plan, stream=(seed, 0))
    out = Path(args.out or (Path(exp.output_dir) / exp.name / "samples"))
    out.mkdir(parents=True, exist_ok=True)
    for name in ("interior", "boundary", "initial", "test"):
        write_points_csv(out / f"{name}.csv", problem, getattr(s, name))
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="capinn", description="Curvature-aware optimizers for PINN benchmarks.")
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="train every seed of an experiment")
    r.add_argument("config")
    r.add_argument("--seeds", help="comma-separated seed list overriding the config")
    r.add_argument("--out", help="output root (default: the config's output_dir)")
    r.add_argument("--threads", type=int, default=1, help="seeds run in parallel processes")
    r.set_defaults(func=cmd_run)
    c = sub.add_parser("compare", help="mean metrics and reduction %% between two experiment directories")
    c.add_argument("dir_a")
    c.add_argument("dir_b")
    c.add_argument("--csv", help="also write the table as CSV")
    c.set_defaults(func=cmd_compare)
    ls = sub.add_parser("landscape", help="2-D loss landscape grid around a trained model")
    ls.add_argument("config")
    ls.add_argument("--checkpoint", help="parameter container to center on (default: train first)")
    ls.add_argument("--seed", type=int)
    ls.add_argument("--data-only", action="store_true", help="drop the residual term (weight_f = 0)")
    ls.add_argument("--out")
    ls.set_defaults(func=cmd_landscape)
    d = sub.add_parser("dump-samples", help="write the point sets of a config as CSV")
    d.add_argument("config")
    d.add_argument("--seed", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dump_samples)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        where = getattr(e, "path", None) or getattr(args, "config", "")
        print(f"{where}: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as e:
        print(f"diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
