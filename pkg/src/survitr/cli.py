"""Command-line entry points: simulate, fit, decide, plot.

`simulate` drives the Monte Carlo replication loop and writes report.csv
plus summary.txt; `fit` estimates a model from a data CSV and serializes
it; `decide` applies a saved model to covariates; `plot` renders decision
boundaries as SVG. Exit codes: 0 success, 1 runtime/statistical failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import plotting, policy
from .copula import CopulaFamily
from .data import DataError, Dataset, WeightConfig, load_dataset
from .marginal import EstimationError
from .model_io import ModelFormatError, load_model, save_model
from .pipeline import FitConfig, fit_itr
from .forest import ForestHyperparams
from .plotting import PlotError
from .simulation import (
    CalibrationError,
    ScenarioSpec,
    compute_otia,
    oracle_decisions,
    run_replications,
    with_calibrated_tau,
)

__all__ = ["RunConfig", "ConfigError", "main", "cmd_simulate", "cmd_fit", "cmd_decide", "cmd_plot"]

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Parameters mirrored from the config file; unknown keys are rejected."""

    scenario: str = "main"
    n: int = 200
    R: int = 100
    n_test: int = 1000
    weight_configs: str = "0,0;1,1;-1,1"
    seed: int = 0
    g_kind: str = "km"
    copula_candidates: str = "clayton,gumbel,frank"
    cv_folds: int = 5
    net_width: int = 32
    net_depth: int = 2
    epochs: int = 500
    batch_size: int = 64
    learning_rate: float = 1e-3
    tau1: float = float("nan")  # nan = calibrate / scenario default
    tau2: float = float("nan")
    t1: float = 1.0
    t2: float = 1.0

    def parsed_weight_configs(self) -> list[WeightConfig]:
        out = []
        for chunk in self.weight_configs.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            parts = chunk.split(",")
            if len(parts) != 2:
                raise ConfigError(f"weight config {chunk!r} is not 'c1,c2'")
            try:
                out.append(WeightConfig(float(parts[0]), float(parts[1])))
            except (ValueError, DataError) as exc:
                raise ConfigError(f"weight config {chunk!r}: {exc}") from None
        if not out:
            raise ConfigError("weight_configs is empty")
        return out

    def parsed_copulas(self) -> tuple:
        fams = []
        for name in self.copula_candidates.split(","):
            name = name.strip().lower()
            try:
                fams.append(CopulaFamily(name))
            except ValueError:
                raise ConfigError(f"unknown copula family {name!r}") from None
        if not fams:
            raise ConfigError("copula_candidates is empty")
        return tuple(fams)

    def scenario_spec(self) -> ScenarioSpec:
        tau = None
        if np.isfinite(self.tau1) or np.isfinite(self.tau2):
            if not (np.isfinite(self.tau1) and np.isfinite(self.tau2)):
                raise ConfigError("set both tau1 and tau2 or neither")
            tau = (self.tau1, self.tau2)
        try:
            return ScenarioSpec(
                tag=self.scenario,
                n=self.n,
                tau=tau,
                seed=self.seed,
                target_times=(self.t1, self.t2),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def fit_config(self, c=WeightConfig(0.0, 0.0), seed=None) -> FitConfig:
        try:
            return FitConfig(
                c=c,
                target_times=(self.t1, self.t2),
                g_kind=self.g_kind,
                copula_candidates=self.parsed_copulas(),
                cv_folds=self.cv_folds,
                net_width=self.net_width,
                net_depth=self.net_depth,
                train=policy.TrainConfig(
                    epochs=self.epochs,
                    batch_size=self.batch_size,
                    learning_rate=self.learning_rate,
                ),
                seed=self.seed if seed is None else seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return value
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r} as {kind}") from None


def parse_config_file(path) -> dict:
    """Read `key = value` lines; '#' starts a comment; unknown keys rejected."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                key, value = (s.strip() for s in line.split("=", 1))
                out[key] = _coerce(key, value)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return out


def build_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        values[key] = _coerce(key, value)
    return replace(RunConfig(), **values)


def _combined_report_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "c1", "c2", "rep", "arm", "outcome", "coef", "value"])
        for rep_obj in reports:
            c1, c2 = repr(float(rep_obj.c.c1)), repr(float(rep_obj.c.c2))
            for r, otia in enumerate(rep_obj.otia):
                writer.writerow(["otia", c1, c2, r, "", "", "", repr(float(otia))])
            items = sorted(rep_obj.beta_estimates.items(), key=lambda kv: (kv[0][1], kv[0][0]))
            for (j, a), est in items:
                for r in range(est.shape[0]):
                    for k in range(est.shape[1]):
                        writer.writerow(
                            ["beta", c1, c2, r, a, j, k + 1, repr(float(est[r, k]))]
                        )
            writer.writerow(["summary_otia", c1, c2, "", "", "", "", repr(rep_obj.mean_otia)])
            for a in range(rep_obj.spec.K + 1):
                for j in (1, 2):
                    b, s = rep_obj.bias(j, a), rep_obj.ssd(j, a)
                    for k in range(rep_obj.spec.p):
                        writer.writerow(
                            ["summary_bias", c1, c2, "", a, j, k + 1, repr(float(b[k]))]
                        )
                        writer.writerow(
                            ["summary_ssd", c1, c2, "", a, j, k + 1, repr(float(s[k]))]
                        )


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    spec = with_calibrated_tau(cfg.scenario_spec())
    out_dir = args.out
    import os

    os.makedirs(out_dir, exist_ok=True)
    reports = []
    summary_lines = []
    for c in cfg.parsed_weight_configs():
        print(f"simulate: scenario={spec.tag} n={spec.n} R={cfg.R} c=({c.c1:g},{c.c2:g})")
        report = run_replications(
            spec, c, cfg.R, n_test=cfg.n_test, fit_config=cfg.fit_config(c=c), jobs=args.jobs
        )
        print(f"  OTIA mean={report.mean_otia:.4f} ({len(report.failures)} failures)")
        reports.append(report)
        summary_lines.append(report.summary_text())
    _combined_report_csv(os.path.join(out_dir, "report.csv"), reports)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write("\n".join(summary_lines))
    print(f"simulate: wrote {os.path.join(out_dir, 'report.csv')} and summary.txt")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = build_config(args)
    d = load_dataset(args.data)
    if d.K < 1:
        raise DataError("decision problem needs at least two arms in the data")
    model = fit_itr(d, cfg.fit_config(c=WeightConfig(args.c1, args.c2)))
    save_model(model, args.out)
    for a in sorted(model.joint.arms):
        m1, m2, cf = model.joint.arms[a]
        for m in (m1, m2):
            beta = ", ".join(f"{b:.6f}" for b in m.beta)
            print(f"arm {a} outcome {m.j}: beta=[{beta}] gamma={m.gamma:.6f}")
        print(f"arm {a} copula: family={cf.family.value} theta={cf.theta:.6f}")
    print(f"fit: wrote model to {args.out}")
    return EXIT_OK


def _load_covariates(path, p: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty covariate file") from None
        expected = [f"x{k}" for k in range(1, len(header) + 1)]
        if header != expected:
            raise DataError(f"{path}: header must be x1..xp, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        raise DataError(f"{path}: no covariate rows")
    X = np.array(rows)
    if X.shape[1] != p:
        raise DataError(f"covariate dimension {X.shape[1]} does not match model p={p}")
    return X


def cmd_decide(args) -> int:
    model = load_model(args.model)
    X = _load_covariates(args.covariates, model.p)
    arms = model.decide(X)
    probs = model.policy_probs(X)
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x{k}" for k in range(1, model.p + 1)]
        header += ["arm"] + [f"p{a}" for a in range(model.K + 1)]
        writer.writerow(header)
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            row.append(int(arms[i]))
            row += [repr(float(v)) for v in probs[i]]
            writer.writerow(row)
    print(f"decide: wrote {X.shape[0]} decisions to {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    if args.grid_n < 1:
        raise PlotError("grid must have at least one cell per axis")
    truth = None
    predicted = None
    p = 2
    if args.scenario:
        cfg = build_config(args)
        cfg = replace(cfg, scenario=args.scenario)
        spec = with_calibrated_tau(cfg.scenario_spec())
        truth = lambda X: oracle_decisions(spec, X)  # noqa: E731
    if args.model:
        model = load_model(args.model)
        p = model.p
        predicted = model.decide
    if truth is None and predicted is None:
        raise ConfigError("plot needs --model and/or --scenario")
    plotting.emit_boundary_plot(
        args.out, predicted=predicted, truth=truth, grid_n=args.grid_n, p=p
    )
    print(f"plot: wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="survitr",
        description="Optimal individualized treatment rules for bivariate survival outcomes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_cfg(p_):
        p_.add_argument("--config", help="key = value config file")
        p_.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    sp = sub.add_parser("simulate", help="run Monte Carlo replications and write reports")
    add_cfg(sp)
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--jobs", type=int, default=1, help="parallel workers")
    sp.set_defaults(func=cmd_simulate)

    fp = sub.add_parser("fit", help="fit a model on a data CSV")
    add_cfg(fp)
    fp.add_argument("--data", required=True, help="input CSV (y1,y2,d1,d2,a,x1..xp)")
    fp.add_argument("--out", required=True, help="output model file")
    fp.add_argument("--c1", type=float, default=0.0)
    fp.add_argument("--c2", type=float, default=0.0)
    fp.set_defaults(func=cmd_fit)

    dp = sub.add_parser("decide", help="apply a saved model to covariates")
    dp.add_argument("--model", required=True)
    dp.add_argument("--covariates", required=True, help="CSV with header x1..xp")
    dp.add_argument("--out", required=True, help="output decisions CSV")
    dp.set_defaults(func=cmd_decide)

    pp = sub.add_parser("plot", help="render decision boundaries to SVG")
    add_cfg(pp)
    pp.add_argument("--model", help="model file for the fitted panel")
    pp.add_argument("--scenario", help="scenario tag for the ground-truth panel")
    pp.add_argument("--grid-n", type=int, default=100)
    pp.add_argument("--out", required=True, help="output SVG path")
    pp.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, DataError, ModelFormatError, PlotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimationError, CalibrationError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
