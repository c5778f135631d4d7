"""Command-line driver: ``generate``, ``predict``, ``schedule`` and ``report``.

Every subcommand accepts ``--config FILE`` with flat ``key=value`` lines whose
keys are the long flag names (``alpha``, ``machines``, ...); explicit flags win.
``NURD_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics
from ._rng import job_rng
from .models import GbtHyperparams
from .online import LOG_HEADER, MODES, NurdConfig, WarmupError, run_online, straggler_truth
from .scheduler import (
    SWEEP_MACHINE_COUNTS,
    schedule_limited,
    scaled_machine_counts,
    schedule_unlimited,
    write_outcomes_csv,
)
from .suites import synthetic_jobs
from .trace import (
    ALIBABA_FEATURES,
    GOOGLE_FEATURES,
    JobTrace,
    adapt_alibaba,
    adapt_google,
    filter_jobs,
    load_canonical,
    parse_kv_config,
    read_csv_rows,
    save_canonical,
    synthetic_config_from_kv,
)

log = logging.getLogger("nurd")


def _csv_list(cast):
    def parse(text):
        if isinstance(text, list):
            return text
        return [cast(v.strip()) for v in str(text).split(",") if v.strip()]

    return parse


def _machine(v: str):
    return None if v.lower() in ("unlimited", "inf") else int(v)


def _machines(text):
    if isinstance(text, list):
        return text
    if str(text).strip().lower() == "sweep":
        return [None, *SWEEP_MACHINE_COUNTS]
    return _csv_list(_machine)(text)


# --- inputs ---------------------------------------------------------------------


def _load_jobs(args) -> list[JobTrace]:
    if args.synthetic:
        kv = parse_kv_config(Path(args.synthetic).read_text())
        n_jobs = int(kv.pop("jobs", 1))
        seed = int(kv.pop("seed", 0))
        jobs = synthetic_jobs(synthetic_config_from_kv(kv), n_jobs, seed)
    elif args.google or args.alibaba:
        adapt = adapt_google if args.google else adapt_alibaba
        jobs = adapt(read_csv_rows(args.google or args.alibaba)).to_jobs()
    else:
        base = Path(args.trace_dir) if args.trace_dir else None
        tasks = args.tasks or (base / "tasks.csv" if base else None)
        snaps = args.snapshots or (base / "snapshots.csv" if base else None)
        if not tasks or not snaps:
            raise SystemExit("need --trace-dir, --tasks/--snapshots, --synthetic, --google or --alibaba")
        jobs = load_canonical(tasks, snaps)
    kept = filter_jobs(jobs, args.min_tasks)
    if len(kept) < len(jobs):
        log.warning("dropped %d job(s) with fewer than %d tasks", len(jobs) - len(kept), args.min_tasks)
    if not kept:
        raise SystemExit("no job left after filtering")
    return kept


def _nurd_config(args, mode: str, seed: int) -> NurdConfig:
    return NurdConfig(
        mode=mode,
        alpha=args.alpha,
        epsilon=args.epsilon,
        threshold_percentile=args.percentile,
        warmup_fraction=args.warmup,
        retrain_every=args.retrain_every,
        seed=seed,
        threshold=args.threshold,
    )


def _hyperparams(args) -> GbtHyperparams:
    return GbtHyperparams(args.rounds, args.depth, args.learning_rate, args.min_leaf)


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=1))


# --- workers (module level so they pickle) --------------------------------------


def _predict_one(item):
    job, cfg, hp, keep_log = item
    try:
        _, plog = run_online(job, cfg, hp)
    except WarmupError as exc:
        log.warning("skipping %s: %s", job.job_id, exc)
        return None
    truth = straggler_truth(job, cfg.threshold_percentile, cfg.threshold)
    c = metrics.final_confusion(plog, truth, job)
    r = metrics.rates(c)
    curve = metrics.f1_curve(plog, truth, job)
    text = None
    if keep_log:
        buf = io.StringIO()
        plog.write_csv(buf, header=False)
        text = buf.getvalue()
    return job.job_id, cfg.mode, cfg.seed, c, r, curve, text


def _schedule_one(item):
    job, cfg, hp, machine_counts, scale = item
    try:
        _, plog = run_online(job, cfg, hp)
    except WarmupError as exc:
        log.warning("skipping %s: %s", job.job_id, exc)
        return None
    flags = plog.flags()
    rows = []
    for m in machine_counts:
        rng = job_rng(cfg.seed, job.job_id)
        if m is None:
            out = schedule_unlimited(job, flags, rng)
        else:
            used = scaled_machine_counts(job.n_tasks, [m])[0] if scale else m
            out = schedule_limited(job, flags, used, rng)
        rows.append((m, out))
    return job.job_id, cfg.mode, cfg.seed, rows


# --- subcommands ----------------------------------------------------------------


def cmd_generate(args) -> int:
    if args.tasks_per_job < 100:
        log.warning("jobs with %d tasks would be dropped by filter_jobs (min 100)", args.tasks_per_job)
        print(f"warning: --tasks {args.tasks_per_job} < 100; filter_jobs would drop these jobs", file=sys.stderr)
        return 2
    kv = parse_kv_config(Path(args.synthetic).read_text()) if args.synthetic else {}
    kv.pop("jobs", None)
    kv.pop("seed", None)
    base = synthetic_config_from_kv(
        kv,
        n_tasks=args.tasks_per_job,
        feature_dim=args.features,
        straggler_fraction=args.fraction,
        feature_drift=args.drift,
        latency_shape=args.shape,
        n_checkpoints=args.checkpoints,
    )
    jobs = synthetic_jobs(base, args.jobs, args.seed[0])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_canonical(jobs, out / "tasks.csv", out / "snapshots.csv")
    print(f"wrote {len(jobs)} job(s) x {args.tasks_per_job} tasks to {out}")
    return 0


def cmd_predict(args) -> int:
    jobs = _load_jobs(args)
    hp = _hyperparams(args)
    items = [(job, _nurd_config(args, mode, seed), hp, args.write_logs)
             for job in jobs for mode in args.mode for seed in args.seed]
    results = [r for r in _map(_predict_one, items, args.workers) if r is not None]
    if not results:
        log.error("every job failed")
        return 1
    results.sort(key=lambda r: (r[1], r[2], r[0]))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    by_mode: dict[str, list] = {}
    curves: dict[str, list] = {}
    with open(out / "jobs.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["job_id", "mode", "seed", "tp", "fp", "fn", "tn", *metrics.RATE_FIELDS])
        for job_id, mode, seed, c, r, curve, _ in results:
            w.writerow([job_id, mode, seed, c.tp, c.fp, c.fn, c.tn, *(f"{v:.6f}" for v in r.as_dict().values())])
            by_mode.setdefault(mode, []).append(r)
            curves.setdefault(mode, []).append(curve)
    with open(out / "summary.csv", "w", newline="") as f:
        metrics.write_summary_csv(f, {m: metrics.aggregate(rs) for m, rs in by_mode.items()})
    with open(out / "curves.csv", "w", newline="") as f:
        metrics.write_curve_csv(f, {m: metrics.mean_curve(cs) for m, cs in curves.items()})
    if args.write_logs:
        logs = out / "logs"
        logs.mkdir(exist_ok=True)
        grouped: dict[tuple, list[str]] = {}
        for job_id, mode, seed, *_, text in results:
            grouped.setdefault((mode, seed), []).append(text)
        for (mode, seed), texts in grouped.items():
            with open(logs / f"{mode}_seed{seed}.csv", "w", newline="") as f:
                f.write(",".join(LOG_HEADER) + "\n")
                f.writelines(texts)
    print(f"{len(results)} run(s); summary in {out / 'summary.csv'}")
    return 0


def cmd_schedule(args) -> int:
    jobs = _load_jobs(args)
    hp = _hyperparams(args)
    items = [(job, _nurd_config(args, mode, seed), hp, args.machines, args.scale_machines)
             for job in jobs for mode in args.mode for seed in args.seed]
    results = [r for r in _map(_schedule_one, items, args.workers) if r is not None]
    if not results:
        log.error("every job failed")
        return 1

    rows = []
    for job_id, mode, seed, outs in results:
        rows.extend(out.row(mode, seed)[:2] + [_label(m)] + out.row(mode, seed)[3:] for m, out in outs)
    rows.sort(key=lambda r: (r[1], _sort_key(r[2]), r[0], r[7]))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "outcomes.csv", "w", newline="") as f:
        write_outcomes_csv(f, rows)

    means: dict[tuple[str, str], list[float]] = {}
    for r in rows:
        means.setdefault((r[1], r[2]), []).append(float(r[5]))
    with open(out / "schedule_summary.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["mode", "machines", "mean_reduction", "runs"])
        for mode in sorted({k[0] for k in means}):
            finite = []
            for (m, label), vals in sorted(means.items(), key=lambda kv: _sort_key(kv[0][1])):
                if m != mode:
                    continue
                w.writerow([mode, label, f"{np.mean(vals):.6f}", len(vals)])
                if label != "unlimited":
                    finite.extend(vals)
            if finite:
                w.writerow([mode, "all", f"{np.mean(finite):.6f}", len(finite)])
    print(f"{len(rows)} outcome row(s); summary in {out / 'schedule_summary.csv'}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    lines = []
    summary = out / "summary.csv"
    if summary.exists():
        rows = list(csv.DictReader(open(summary)))
        lines += ["Prediction (mean over jobs)", "", "| mode | TPR | FPR | FNR | F1 |", "|---|---|---|---|---|"]
        lines += [f"| {r['mode']} | {float(r['tpr']):.2f} | {float(r['fpr']):.2f} | "
                  f"{float(r['fnr']):.2f} | {float(r['f1']):.2f} |" for r in rows]
        lines.append("")
    curves = out / "curves.csv"
    if curves.exists():
        table: dict[str, list[str]] = {}
        for r in csv.DictReader(open(curves)):
            table.setdefault(r["mode"], []).append(f"{float(r['f1']):.2f}")
        lines += ["F1 at normalized time 0.1 .. 1.0", ""]
        lines += [f"{mode:>8}: " + " ".join(v) for mode, v in table.items()]
        lines.append("")
    sched = out / "schedule_summary.csv"
    if sched.exists():
        lines += ["Mean JCT reduction", "", "| mode | machines | reduction |", "|---|---|---|"]
        lines += [f"| {r['mode']} | {r['machines']} | {100 * float(r['mean_reduction']):.1f}% |"
                  for r in csv.DictReader(open(sched))]
    if not lines:
        print(f"nothing to report in {out}", file=sys.stderr)
        return 1
    text = "\n".join(lines) + "\n"
    (out / "report.md").write_text(text)
    print(text, end="")
    return 0


def _label(m) -> str:
    return "unlimited" if m is None else str(m)


def _sort_key(label: str):
    return (1, 0) if label == "unlimited" else (0, int(label)) if label.isdigit() else (2, 0)


# --- parser ---------------------------------------------------------------------


def _add_inputs(p):
    g = p.add_argument_group("input (one of)")
    g.add_argument("--trace-dir", help="directory with tasks.csv and snapshots.csv")
    g.add_argument("--tasks", help="canonical tasks CSV")
    g.add_argument("--snapshots", help="canonical snapshots CSV")
    g.add_argument("--synthetic", help="key=value synthetic config (plus jobs=N, seed=S)")
    g.add_argument("--google", help="Google task_usage CSV with the %d feature columns" % len(GOOGLE_FEATURES))
    g.add_argument("--alibaba", help="Alibaba batch_instance CSV with columns %s" % ",".join(ALIBABA_FEATURES))
    p.add_argument("--min-tasks", type=int, default=100)


def _add_model(p):
    p.add_argument("--mode", type=_csv_list(str), default=["nurd"],
                   help="comma list of %s" % ",".join(MODES))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--percentile", type=float, default=90.0)
    p.add_argument("--threshold", type=float, default=None, help="absolute straggler threshold (s)")
    p.add_argument("--warmup", type=float, default=0.04)
    p.add_argument("--retrain-every", type=int, default=1)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--min-leaf", type=int, default=5)


def _add_common(p):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--seed", type=_csv_list(int), default=[0], help="comma list of seeds")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", default="out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nurd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write synthetic canonical traces")
    _add_common(g)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--tasks", dest="tasks_per_job", type=int, default=200)
    g.add_argument("--features", type=int, default=8)
    g.add_argument("--fraction", type=float, default=0.1)
    g.add_argument("--drift", type=float, default=3.0)
    g.add_argument("--shape", choices=["bimodal", "long_tail"], default="bimodal")
    g.add_argument("--checkpoints", type=int, default=20)
    g.add_argument("--synthetic", help="key=value synthetic config for the remaining knobs")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("predict", help="run straggler prediction and score it")
    _add_common(p)
    _add_inputs(p)
    _add_model(p)
    p.add_argument("--write-logs", action="store_true", help="also write per-task prediction logs")
    p.set_defaults(func=cmd_predict)

    s = sub.add_parser("schedule", help="simulate relaunch scheduling")
    _add_common(s)
    _add_inputs(s)
    _add_model(s)
    s.add_argument("--machines", type=_machines, default=[None],
                   help="comma list of spare machine counts or 'unlimited'; 'sweep' = unlimited,100..900")
    s.add_argument("--scale-machines", action="store_true",
                   help="scale each count by n_tasks/10000 for small jobs")
    s.set_defaults(func=cmd_schedule)

    r = sub.add_parser("report", help="print tables from an output directory")
    r.add_argument("--out", default="out")
    r.add_argument("--config", help=argparse.SUPPRESS)
    r.set_defaults(func=cmd_report)
    return parser


def _apply_config(parser, argv):
    """Feed ``--config`` values in as subparser defaults so flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config or not known.command:
        return
    kv = parse_kv_config(Path(known.config).read_text())
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sp = sub.choices[known.command]
    dests = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, value in kv.items():
        dest = key.replace("-", "_")
        if dest == "tasks" and known.command == "generate":
            dest = "tasks_per_job"
        if dest not in dests:
            raise SystemExit(f"unknown config key {key!r} for {known.command}")
        action = dests[dest]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = value.lower() in ("1", "true", "yes")
        else:
            defaults[dest] = action.type(value) if action.type else value
    sp.set_defaults(**defaults)


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("NURD_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    _apply_config(parser, argv)
    args = parser.parse_args(argv)
    if hasattr(args, "mode"):
        bad = [m for m in args.mode if m not in MODES]
        if bad:
            parser.error(f"unknown mode(s) {bad}")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
