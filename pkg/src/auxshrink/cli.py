"""Command-line surface: estimate from CSV, reproduce simulations, sweep the
breakpoint grid, select K, and evaluate the closed-form theory quantities.

Input CSV format: header ``id,y,sigma,s[,xi,theta]``; the sigma column is
optional and defaults to 1.0. All commands are deterministic given their
flags; stochastic commands require an explicit --seed. Output files are
written atomically: on failure nothing is left behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from .core import DataBatch, partition, sure, universal_threshold
from .estimators import fit_auxscr, fit_ejs
from .sim import FAMILIES, ScenarioSpec, run_risk_experiment
from .theory import (
    RegimeParams,
    efficiency_diagnostics,
    opt_threshold_f,
    risk_factor_h,
    risk_gap_first_order,
)
from .tuner import SearchConfig, fit_asus, fit_sureshrink, select_k, sweep_tau

METHODS = ("asus", "sureshrink", "auxscr", "ejs")
DEFAULT_ESTIMATORS = ("oracle", "asus", "aux-scr", "sureshrink")


def _round12(x):
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round12(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(f"{float(x):.12g}")
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


class _OutputSet:
    """Collects finished file contents and writes them all-or-nothing."""

    def __init__(self):
        self._pending = []

    def add(self, path: str, text: str) -> None:
        self._pending.append((path, text))

    def commit(self) -> None:
        written = []
        try:
            for path, text in self._pending:
                tmp = path + ".tmp"
                with open(tmp, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                written.append((tmp, path))
            for tmp, path in written:
                os.replace(tmp, path)
        except BaseException:
            for tmp, _ in written:
                try:
                    os.remove(tmp)
                except OSError:
                    pass
            raise


def read_batch_csv(path: str) -> tuple[DataBatch, list]:
    """Parse the input CSV into a batch; returns (batch, ids)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file")
        cols = [c.strip() for c in reader.fieldnames]
        for required in ("id", "y", "s"):
            if required not in cols:
                raise ValueError(f"{path}: missing required column {required!r}")
        ids, ys, sigmas, ss, xis, thetas = [], [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                ids.append(row["id"])
                ys.append(float(row["y"]))
                sigmas.append(float(row["sigma"]) if row.get("sigma") not in (None, "") else 1.0)
                ss.append(float(row["s"]))
                if "xi" in cols and row.get("xi") not in (None, ""):
                    xis.append(float(row["xi"]))
                if "theta" in cols and row.get("theta") not in (None, ""):
                    thetas.append(float(row["theta"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad row ({exc})") from exc
    if not ids:
        raise ValueError(f"{path}: no data rows")
    n = len(ids)
    xi = np.array(xis) if len(xis) == n else None
    theta = np.array(thetas) if len(thetas) == n else None
    batch = DataBatch(
        y=np.array(ys), sigma=np.array(sigmas), s=np.array(ss), theta=theta, xi=xi
    )
    return batch, ids


def _estimates_csv(ids, batch, theta_hat, groups) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "y", "sigma", "s", "theta_hat", "group"])
    for i, ident in enumerate(ids):
        w.writerow(
            [
                ident,
                f"{batch.y[i]:.17g}",
                f"{batch.sigma[i]:.17g}",
                f"{batch.s[i]:.17g}",
                f"{theta_hat[i]:.17g}",
                int(groups[i]),
            ]
        )
    return buf.getvalue()


def _fit_for_method(method, batch, k, mn_factor, hybrid):
    if method == "sureshrink":
        return fit_sureshrink(batch, hybrid=hybrid)
    if method == "asus":
        return fit_asus(batch, SearchConfig(k=k, mn_factor=mn_factor, hybrid=hybrid))
    if method == "auxscr":
        return fit_auxscr(batch, mn_factor=mn_factor)
    if method == "ejs":
        return fit_ejs(batch)
    raise ValueError(f"unknown method {method!r}")


def _groups_for_method(method, batch, fr):
    if method == "auxscr":
        return (np.abs(batch.s) > fr.hp.tau[0]).astype(int) + 1
    if method == "ejs":
        return np.ones(batch.n, dtype=int)
    return partition(batch.s, fr.hp.tau).assignment + 1


def cmd_estimate(args) -> int:
    batch, ids = read_batch_csv(args.input)
    fr = _fit_for_method(args.method, batch, args.k, args.mn_factor, args.hybrid)
    groups = _groups_for_method(args.method, batch, fr)
    report = {
        "method": args.method,
        "n": batch.n,
        "k": int(fr.group_sizes.size) if args.method != "ejs" else 1,
        "t_n": universal_threshold(batch.n),
        "tau": [] if fr.hp is None else list(fr.hp.tau),
        "t": [] if fr.hp is None else list(fr.hp.t),
        "group_sizes": [int(v) for v in fr.group_sizes],
        "sure": fr.sure_value,
        "mn_factor": args.mn_factor,
        "hybrid": bool(args.hybrid),
    }
    out = _OutputSet()
    out.add(args.output, _estimates_csv(ids, batch, fr.theta_hat, groups))
    out.add(args.report, json.dumps(_round12(report), indent=2) + "\n")
    out.commit()
    return 0


def cmd_sweep(args) -> int:
    batch, _ = read_batch_csv(args.input)
    cfg = SearchConfig(k=2, mn_factor=args.mn_factor, hybrid=args.hybrid)
    curve = sweep_tau(batch, cfg)
    ref = fit_sureshrink(batch, hybrid=args.hybrid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "tau", "sure", "t1", "t2"])
    w.writerow(["reference", "", f"{ref.sure_value:.17g}", f"{ref.hp.t[0]:.17g}", ""])
    for tau, sv, t1, t2 in zip(
        curve.tau_values, curve.sure_values, curve.t1_values, curve.t2_values
    ):
        w.writerow(["sweep", f"{tau:.17g}", f"{sv:.17g}", f"{t1:.17g}", f"{t2:.17g}"])
    out = _OutputSet()
    out.add(args.output, buf.getvalue())
    out.commit()
    return 0


def cmd_choose_k(args) -> int:
    batch, _ = read_batch_csv(args.input)
    sel = select_k(batch, args.kmax, mn_factor=args.mn_factor, hybrid=args.hybrid)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "sure", "selected", "elbow"])
    for i, sv in enumerate(sel.sure_values, start=1):
        w.writerow(
            [i, f"{sv:.17g}", int(i == sel.k_selected), int(i == sel.k_elbow)]
        )
    out = _OutputSet()
    out.add(args.output, buf.getvalue())
    out.commit()
    return 0


def cmd_simulate(args) -> int:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        scenario = cfg["scenario"]
        n = int(cfg["n"])
        m = cfg.get("m")
        aux_variant = cfg.get("aux_variant")
        reps = int(cfg["reps"])
        seed = int(cfg["seed"])
        estimators = cfg.get("estimators", list(DEFAULT_ESTIMATORS))
    else:
        if args.scenario is None or args.reps is None or args.seed is None:
            raise ValueError("simulate needs --scenario, --reps and --seed (or --config)")
        scenario = args.scenario
        n = args.n
        m = args.m
        aux_variant = args.aux_variant
        reps = args.reps
        seed = args.seed
        estimators = (
            [e.strip() for e in args.estimators.split(",") if e.strip()]
            if args.estimators
            else list(DEFAULT_ESTIMATORS)
        )
    if scenario not in FAMILIES:
        raise ValueError(f"unknown scenario {scenario!r}; choose from {', '.join(FAMILIES)}")
    if n is None:
        n = 10000 if scenario == "toy" else 5000
    spec = ScenarioSpec(
        family=scenario,
        n=n,
        m=None if m is None else int(m),
        aux_variant=None if aux_variant is None else int(aux_variant),
        seed=int(seed),
    )
    report = run_risk_experiment(
        spec,
        estimators,
        n_reps=reps,
        k=args.k,
        mn_factor=args.mn_factor,
        hybrid=args.hybrid,
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replication", "estimator", "loss"])
    for nm, res in report.results.items():
        for r, lv in enumerate(res.losses):
            w.writerow([r, nm, f"{lv:.17g}"])
    losses_path = os.path.splitext(args.output)[0] + "_losses.csv"
    out = _OutputSet()
    out.add(args.output, json.dumps(_round12(report.to_dict()), indent=2) + "\n")
    out.add(losses_path, buf.getvalue())
    out.commit()
    return 0


def cmd_theory(args) -> int:
    sub = args.quantity
    vals = args.args
    def need(k):
        if len(vals) != k:
            raise ValueError(f"theory {sub} takes exactly {k} numeric argument(s)")
    if sub == "f":
        need(1)
        print(f"{opt_threshold_f(vals[0]):.12g}")
    elif sub == "h":
        need(1)
        print(f"{risk_factor_h(vals[0]):.12g}")
    elif sub == "gap":
        need(5)
        rp = RegimeParams(
            alpha=vals[0], beta=vals[1], pi1=vals[2], sigma_bar_sq=vals[3], n=int(vals[4])
        )
        print(f"{risk_gap_first_order(rp):.12g}")
    elif sub == "diagnostics":
        need(3)
        d = efficiency_diagnostics(vals[0], vals[1], vals[2])
        if d.degenerate:
            raise ValueError(
                "r_ns equals r_os: no improvement headroom, RI is undefined"
            )
        print(f"RI={d.ri:.12g} E={d.e:.12g}")
    else:
        raise ValueError(f"unknown theory quantity {sub!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="auxshrink",
        description="Adaptive sparse estimation with auxiliary side information",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--mn-factor", type=float, default=50.0)
        sp.add_argument(
            "--hybrid", action=argparse.BooleanOptionalAction, default=True
        )

    e = sub.add_parser("estimate", help="fit an estimator to a CSV batch")
    e.add_argument("--input", required=True)
    e.add_argument("--output", required=True, help="estimates CSV path")
    e.add_argument("--report", required=True, help="fit report JSON path")
    e.add_argument("--method", choices=METHODS, default="asus")
    e.add_argument("--k", type=int, default=2)
    add_common(e)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="minimized SURE across the breakpoint grid")
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    add_common(s)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("choose-k", help="SURE per group count K")
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--kmax", type=int, required=True)
    add_common(c)
    c.set_defaults(func=cmd_choose_k)

    m = sub.add_parser("simulate", help="run a Monte Carlo risk experiment")
    m.add_argument("--scenario", choices=FAMILIES)
    m.add_argument("--n", type=int)
    m.add_argument("--m", type=int)
    m.add_argument("--aux-variant", type=int)
    m.add_argument("--reps", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--estimators", help="comma-separated estimator names")
    m.add_argument("--k", type=int, default=2)
    m.add_argument("--config", help="JSON config file (overrides other flags)")
    m.add_argument("--output", required=True, help="risk report JSON path")
    add_common(m)
    m.set_defaults(func=cmd_simulate)

    t = sub.add_parser("theory", help="evaluate closed-form quantities")
    t.add_argument("quantity", choices=("f", "h", "gap", "diagnostics"))
    t.add_argument("args", type=float, nargs="*")
    t.set_defaults(func=cmd_theory)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
