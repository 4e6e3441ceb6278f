"""Command line entry point: ``distortion-outage <command> --config cfg.json``.

Commands: solve, sweep, exponents, gains, simulate. Every command writes a
CSV with a header row (to ``--out`` or stdout). Exit status is 0 on
success, 2 for configuration errors and 3 for numerical failures, with a
single ``error kind=... message=...`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

from .asymptotics import (
    exponent,
    gain_copa_vs_coracp,
    gain_coracp_vs_crcp,
    gain_scopa_vs_copa,
)
from .config import ConfigError, ExperimentConfig
from .models import SystemParams, db_to_linear
from .numerics import NumericsError
from .schemes import solve
from .simulate import run_sim

log = logging.getLogger("distortion_outage")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(rows: list, columns: list, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])


def _system(cfg: ExperimentConfig, p_avg_db: float) -> SystemParams:
    return SystemParams.from_db(cfg.b, cfg.d_max_db, p_avg_db)


def _require_power(cfg):
    if cfg.p_avg_db is None:
        raise ConfigError("p_avg_db is required for this command", "p_avg_db")
    return cfg.p_avg_db


# ---------------------------------------------------------------------------
# Commands (return rows and column order)
# ---------------------------------------------------------------------------

SOLVE_COLUMNS = ["scheme", "p_avg_db", "r_star", "q_star", "ln_q_star", "p_dout", "ln_p_dout"]


def cmd_solve(cfg: ExperimentConfig):
    p_db = _require_power(cfg)
    source, channel = cfg.source_model(), cfg.channel_model()
    sysp = _system(cfg, p_db)
    rows = []
    for scheme in cfg.schemes:
        sol = solve(scheme, source, channel, sysp)
        rows.append({
            "scheme": sol.scheme,
            "p_avg_db": float(p_db),
            "r_star": sol.r_star,
            "q_star": sol.threshold,
            "ln_q_star": sol.log_threshold,
            "p_dout": sol.p_dout,
            "ln_p_dout": sol.log_p_dout,
        })
    return rows, SOLVE_COLUMNS


def sweep_columns(cfg: ExperimentConfig) -> list:
    keys = _sweep_keys(cfg)
    return ["p_bar_db"] + [f"p_dout_{k}" for k in keys] + [f"ln_p_dout_{k}" for k in keys]


def _sweep_keys(cfg):
    if cfg.sources:
        return [f"{src.label}_{s}" for src in cfg.source_models() for s in cfg.schemes]
    return list(cfg.schemes)


def cmd_sweep(cfg: ExperimentConfig, workers: int = 1):
    points = cfg.sweep_points()
    sources = cfg.source_models()
    channel = cfg.channel_model()
    keyed = bool(cfg.sources)

    def one(p_db):
        sysp = _system(cfg, p_db)
        row = {"p_bar_db": float(p_db)}
        for src in sources:
            for scheme in cfg.schemes:
                sol = solve(scheme, src, channel, sysp)
                key = f"{src.label}_{sol.scheme}" if keyed else sol.scheme
                row[f"p_dout_{key}"] = sol.p_dout
                row[f"ln_p_dout_{key}"] = sol.log_p_dout
        return row

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, points))
    else:
        rows = [one(p) for p in points]
    rows.sort(key=lambda r: r["p_bar_db"])
    if keyed:
        _soft_check_source_order(cfg, rows)
    return rows, sweep_columns(cfg)


def _soft_check_source_order(cfg, rows):
    """Outage should grow with source non-stationarity; log, never fail."""
    order = ["S", "G1", "G2", "G3", "U"]
    labels = [s.label for s in cfg.source_models()]
    present = [lab for lab in order if lab in labels]
    last = rows[-1]
    for scheme in cfg.schemes:
        vals = [last[f"ln_p_dout_{lab}_{scheme}"] for lab in present]
        if any(a > b + 1e-12 for a, b in zip(vals, vals[1:])):
            log.warning("%s: outage not ordered %s at %.3g dB", scheme, "<=".join(present), last["p_bar_db"])


PLOT_TEMPLATE = '''"""Plot distortion outage versus average power from {csv_name}."""
import csv

import matplotlib.pyplot as plt

with open({csv_path!r}, newline="") as fh:
    rows = list(csv.DictReader(fh))
x = [float(r["p_bar_db"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4.5))
for key in {keys!r}:
    y = [float(r["p_dout_" + key]) for r in rows]
    pts = [(a, b) for a, b in zip(x, y) if b > 0]
    ax.semilogy([a for a, _ in pts], [b for _, b in pts], marker="o", ms=3, label=key)
ax.set_ylim(1e-8, 1.5)
ax.set_xlabel("average power limit (dB)")
ax.set_ylabel("distortion outage probability")
ax.set_title("b = {b}, D_m = {d_max_db} dB")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig({png_path!r}, dpi=150)
'''


def plot_script(cfg: ExperimentConfig, csv_path: str) -> str:
    stem = os.path.splitext(csv_path)[0]
    return PLOT_TEMPLATE.format(
        csv_name=os.path.basename(csv_path),
        csv_path=os.path.abspath(csv_path),
        keys=_sweep_keys(cfg),
        b=cfg.b,
        d_max_db=cfg.d_max_db,
        png_path=os.path.abspath(stem + ".png"),
    )


EXPONENT_COLUMNS = ["b", "d_max_db", "p_avg_db", "scheme", "exponent", "order"]


def cmd_exponents(cfg: ExperimentConfig):
    source = cfg.source_model()
    rows = []
    for row in cfg.exponent_settings:
        for b in cfg.exponent_b:
            sysp = SystemParams.from_db(b, row["d_max_db"], row["p_avg_db"])
            for scheme in cfg.schemes:
                est = exponent(scheme, source, sysp)
                rows.append({
                    "b": b,
                    "d_max_db": float(row["d_max_db"]),
                    "p_avg_db": float(row["p_avg_db"]),
                    "scheme": est.scheme,
                    "exponent": est.value,
                    "order": est.order,
                })
    return rows, EXPONENT_COLUMNS


GAIN_COLUMNS = ["scheme1", "scheme2", "p_bar2_db", "gain_db"]


def cmd_gains(cfg: ExperimentConfig):
    source = cfg.source_model()
    sysp = SystemParams(cfg.b, db_to_linear(cfg.d_max_db), 1.0)
    rows = []
    for p2_db in cfg.p_bar2_db:
        for g in (
            gain_scopa_vs_copa(source, sysp),
            gain_copa_vs_coracp(source, sysp, db_to_linear(p2_db)),
            gain_coracp_vs_crcp(source, sysp),
        ):
            rows.append({"scheme1": g.scheme1, "scheme2": g.scheme2, "p_bar2_db": float(p2_db), "gain_db": g.value_db})
    rows.sort(key=lambda r: (_PAIR_ORDER[(r["scheme1"], r["scheme2"])], -r["p_bar2_db"]))
    return rows, GAIN_COLUMNS


_PAIR_ORDER = {("SCOPA-MDO", "COPA-MDO"): 0, ("COPA-MDO", "CORACP"): 1, ("CORACP", "CRCP"): 2}


SIM_COLUMNS = [
    "scheme", "p_avg_db", "trials", "outages", "p_dout_hat", "p_dout_analytic",
    "ln_p_dout_analytic", "p_ci_halfwidth", "power_mean", "power_ci_halfwidth",
    "p_avg", "seed", "workers",
]


def cmd_simulate(cfg: ExperimentConfig, workers: Optional[int] = None):
    p_db = _require_power(cfg)
    source, channel = cfg.source_model(), cfg.channel_model()
    sysp = _system(cfg, p_db)
    workers = workers or cfg.workers
    rows = []
    for scheme in cfg.schemes:
        sol = solve(scheme, source, channel, sysp)
        rep = run_sim(sol.policy, source, channel, sysp, cfg.trials, cfg.seed, workers)
        rows.append({
            "scheme": sol.scheme,
            "p_avg_db": float(p_db),
            "trials": rep.trials,
            "outages": rep.outages,
            "p_dout_hat": rep.p_dout_hat,
            "p_dout_analytic": sol.p_dout,
            "ln_p_dout_analytic": sol.log_p_dout,
            "p_ci_halfwidth": rep.p_ci_halfwidth,
            "power_mean": rep.power_mean,
            "power_ci_halfwidth": rep.power_ci_halfwidth,
            "p_avg": sysp.p_avg,
            "seed": rep.seed,
            "workers": rep.workers,
        })
    return rows, SIM_COLUMNS


# ---------------------------------------------------------------------------
# argparse plumbing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distortion-outage",
        description="Distortion outage of power/rate adaptation schemes over block fading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("solve", "solve every scheme at one power limit"),
        ("sweep", "outage curves over a power range (CSV + plot script)"),
        ("exponents", "outage distortion exponent table"),
        ("gains", "asymptotic outage distortion gain table"),
        ("simulate", "Monte Carlo check against the analytic outage"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--trials", type=int, help="override config trials")
        p.add_argument("--workers", type=int, help="override config workers")
    return parser


def _emit_error(kind: str, exc: Exception, field: Optional[str] = None, line: Optional[int] = None):
    parts = [f"error kind={kind}"]
    if field:
        parts.append(f"field={field}")
    if line:
        parts.append(f"line={line}")
    msg = getattr(exc, "message", None) or str(exc)
    parts.append("message=" + '"' + msg.replace('"', "'").replace("\n", " ") + '"')
    print(" ".join(parts), file=sys.stderr)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        overrides = {k: getattr(args, k) for k in ("seed", "trials", "workers") if getattr(args, k) is not None}
        if overrides:
            data = cfg.to_dict()
            data.update(overrides)
            cfg = ExperimentConfig.from_dict(data, cfg.base_dir)
        out_path = args.out or cfg.output
        if out_path and not os.path.isabs(out_path) and not args.out:
            out_path = os.path.join(cfg.base_dir, out_path)
        if args.command == "solve":
            rows, cols = cmd_solve(cfg)
        elif args.command == "sweep":
            if cfg.sweep is None:
                raise ConfigError("sweep range is required for this command", "sweep")
            rows, cols = cmd_sweep(cfg, cfg.workers)
        elif args.command == "exponents":
            rows, cols = cmd_exponents(cfg)
        elif args.command == "gains":
            rows, cols = cmd_gains(cfg)
        else:
            rows, cols = cmd_simulate(cfg)
    except ConfigError as exc:
        _emit_error("config", exc, exc.field, exc.line)
        return EXIT_CONFIG
    except (NumericsError, ValueError, OverflowError, ZeroDivisionError) as exc:
        _emit_error("numeric", exc)
        return EXIT_NUMERIC

    buf = io.StringIO()
    write_csv(rows, cols, buf)
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
        if args.command == "sweep":
            script = os.path.splitext(out_path)[0] + ".plot.py"
            with open(script, "w", encoding="utf-8", newline="") as fh:
                fh.write(plot_script(cfg, out_path))
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
