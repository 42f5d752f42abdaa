"""Command-line entry point: ``garchcp simulate|detect|backtest|report``.

Options come from three layers: built-in defaults, a flat JSON file given
with ``--config`` (keys are the long flag names, with either dashes or
underscores), and explicit flags, later layers winning.

Exit codes: 0 success, 2 parse error, 3 numeric failure, 4 invalid config.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import risk
from .detect import detect
from .io import ParseError, ReturnsPanel, ingest_csv, write_panel_csv
from .simlab import MODELS, ScenarioSpec, generate

log = logging.getLogger("garchcp")

EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3, 4
COMMANDS = ("simulate", "detect", "backtest", "report")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "detect"
    input: str | None = None
    output: str | None = None
    csv_output: str | None = None
    log_diff: bool = False
    alpha: float = 0.05
    boot_reps: int = 200
    seed: int = 0
    p: int = 1
    q: int = 1
    epsilon: float = 1e-3
    min_seg: int = 30
    standardize: bool = False
    window: int = 250
    var_levels: tuple[float, ...] = (0.95, 0.99)
    threads: int = 1
    model: str | None = None
    n: int = 50
    t: int | None = None
    sparsity: float = 1.0
    innovations: str = "gaussian"
    detection: str | None = None
    history: str | None = None
    allow_overlap: bool = False
    covariance: str = "returns"
    include_current: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["var_levels"] = list(self.var_levels)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw_key, value in data.items():
            key = raw_key.replace("-", "_")
            if key not in known:
                raise ConfigError(f"unknown configuration key {raw_key!r}")
            kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.var_levels = _levels(cfg.var_levels)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        checks = [
            (self.command in COMMANDS, f"command must be one of {COMMANDS}"),
            (isinstance(self.alpha, (int, float)) and 0 < self.alpha < 1, "alpha must lie in (0, 1)"),
            (_is_int(self.boot_reps) and self.boot_reps >= 20, "boot_reps must be an integer >= 20"),
            (_is_int(self.seed) and self.seed >= 0, "seed must be a non-negative integer"),
            (_is_int(self.p) and _is_int(self.q) and self.p >= 1 and self.q >= 1, "p and q must be integers >= 1"),
            (isinstance(self.epsilon, (int, float)) and self.epsilon > 0, "epsilon must be positive"),
            (_is_int(self.min_seg) and self.min_seg >= 2, "min_seg must be an integer >= 2"),
            (_is_int(self.window) and self.window >= risk.MIN_WINDOW,
             f"window must be an integer >= {risk.MIN_WINDOW}"),
            (all(0 < lv < 1 for lv in self.var_levels) and len(self.var_levels) > 0,
             "var_levels must lie in (0, 1)"),
            (_is_int(self.threads) and self.threads >= 1, "threads must be a positive integer"),
            (_is_int(self.n) and self.n >= 1, "n must be a positive integer"),
            (self.t is None or (_is_int(self.t) and self.t >= 2), "t must be an integer >= 2"),
            (isinstance(self.sparsity, (int, float)) and 0 < self.sparsity <= 1, "sparsity must lie in (0, 1]"),
            (self.innovations in ("gaussian", "t10"), "innovations must be 'gaussian' or 't10'"),
            (self.covariance in ("returns", "standardized"), "covariance must be 'returns' or 'standardized'"),
            (self.model is None or self.model in MODELS, f"model must be one of {', '.join(MODELS)}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _levels(value) -> tuple[float, ...]:
    if isinstance(value, str):
        try:
            return tuple(float(v) for v in value.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"var_levels must be comma-separated numbers, got {value!r}") from None
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid var_levels {value!r}") from None


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    """Argument parser; with ``suppress`` unset options are left out of the namespace."""
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}
    parser = argparse.ArgumentParser(prog="garchcp", description=__doc__.splitlines()[0], **kw)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat JSON file of option values")
    parser.add_argument("--input", help="input CSV (detect, backtest) or JSON (report)")
    parser.add_argument("--output", help="output path")
    parser.add_argument("--csv-output", help="extra CSV output (transformed panel or per-day sVaR)")
    parser.add_argument("--log-diff", action="store_true", help="input columns are prices")
    parser.add_argument("--alpha", type=float, help="test level (default 0.05)")
    parser.add_argument("--boot-reps", type=int, help="bootstrap replicates (default 200)")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--p", type=int, help="ARCH order (default 1)")
    parser.add_argument("--q", type=int, help="GARCH order (default 1)")
    parser.add_argument("--epsilon", type=float, help="bounding constant of the transform (default 0.001)")
    parser.add_argument("--min-seg", type=int, help="shortest segment examined (default 30)")
    parser.add_argument("--standardize", action="store_true", help="MAD-scale rows before the scan")
    parser.add_argument("--window", type=int, help="rolling VaR window (default 250)")
    parser.add_argument("--var-levels", help="comma-separated VaR levels (default 0.95,0.99)")
    parser.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    parser.add_argument("--model", help="simulation model id, e.g. M1.6")
    parser.add_argument("--n", type=int, help="number of series to simulate (default 50)")
    parser.add_argument("--t", type=int, help="number of observations to simulate")
    parser.add_argument("--sparsity", type=float, help="fraction of affected series (default 1)")
    parser.add_argument("--innovations", choices=("gaussian", "t10"), help="simulation innovation law")
    parser.add_argument("--detection", help="detect JSON used by backtest")
    parser.add_argument("--history", help="detection-sample CSV (defaults to the one named in --detection)")
    parser.add_argument("--allow-overlap", action="store_true",
                        help="permit evaluation data overlapping the detection sample")
    parser.add_argument("--covariance", choices=("returns", "standardized"),
                        help="what the period covariances are computed from")
    parser.add_argument("--include-current", action="store_true", help="also backtest the unstressed VaR")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(argv) -> RunConfig:
    """Merge defaults, an optional ``--config`` file and explicit flags."""
    full = build_parser().parse_args(argv)
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    merged = RunConfig().to_dict()
    if full.config:
        try:
            with open(full.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {full.config}: {exc}") from None
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        from_file = {k.replace("-", "_"): v for k, v in from_file.items()}
        from_file.pop("command", None)
        merged.update(from_file)
    explicit.pop("config", None)
    explicit.pop("verbose", None)
    merged.update(explicit)
    return RunConfig.from_dict(merged)


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _echo(cfg: RunConfig, keys) -> dict:
    d = cfg.to_dict()
    return {k: d[k] for k in keys}


DETECT_KEYS = ("input", "log_diff", "alpha", "boot_reps", "seed", "p", "q", "epsilon",
               "min_seg", "standardize")


def cmd_simulate(cfg: RunConfig) -> dict:
    if cfg.model is None:
        raise ConfigError("simulate needs --model")
    if cfg.output is None:
        raise ConfigError("simulate needs --output (panel CSV path)")
    spec = ScenarioSpec(cfg.model, N=cfg.n, T=cfg.t, sparsity=cfg.sparsity,
                        innovation=cfg.innovations, seed=cfg.seed)
    lp = generate(spec)
    write_panel_csv(cfg.output, lp.returns)
    truth = {
        "model": spec.model, "N": spec.N, "T": spec.T, "sparsity": spec.sparsity,
        "innovations": spec.innovation, "seed": spec.seed,
        "change_points": list(lp.truth),
        "affected": {"S1": [i + 1 for i in lp.affected[0]], "S2": [i + 1 for i in lp.affected[1]]},
    }
    stem, _ = os.path.splitext(cfg.output)
    _write_json(stem + ".truth.json", truth)
    return truth


def _date(dates, k):
    return None if dates is None else dates[k - 1]


def cmd_detect(cfg: RunConfig) -> dict:
    if cfg.input is None:
        raise ConfigError("detect needs --input")
    start = time.perf_counter()
    panel = ingest_csv(cfg.input, log_diff=cfg.log_diff)
    det = detect(panel.values, order=(cfg.p, cfg.q), epsilon=cfg.epsilon, alpha=cfg.alpha,
                 n_reps=cfg.boot_reps, seed=cfg.seed, min_seg=cfg.min_seg,
                 standardize=cfg.standardize, threads=cfg.threads)
    if cfg.csv_output:
        det.panel.to_csv(cfg.csv_output)
    points = []
    for cp in det.change_points:
        entry = {"index": cp.location, "stat": cp.stat, "threshold": cp.threshold,
                 "n_hat": cp.n_hat, "level": cp.level}
        if panel.dates is not None:
            entry["date"] = _date(panel.dates, cp.location)
        points.append(entry)
    segments = []
    for s, e in det.segments():
        seg = {"from": s + 1, "to": e}
        if panel.dates is not None:
            seg["from_date"], seg["to_date"] = panel.dates[s], panel.dates[e - 1]
        segments.append(seg)
    result = {
        "T": panel.T, "N": panel.N, "columns": panel.columns,
        "change_points": points, "segments": segments,
        "fits": [{"series": name, "omega": f.params.omega, "alpha": list(f.params.alpha),
                  "beta": list(f.params.beta), "converged": bool(f.converged)}
                 for name, f in zip(panel.columns, det.fits)],
        "config": _echo(cfg, DETECT_KEYS),
        "wall_time": time.perf_counter() - start,
    }
    _write_json(cfg.output, result)
    return result


def _overlaps(history: ReturnsPanel, evaluation: ReturnsPanel, same_file: bool) -> bool:
    if history.dates is not None and evaluation.dates is not None:
        return bool(set(history.dates) & set(evaluation.dates))
    return same_file


def cmd_backtest(cfg: RunConfig) -> dict:
    if cfg.input is None or cfg.detection is None:
        raise ConfigError("backtest needs --detection (detect JSON) and --input (evaluation CSV)")
    start = time.perf_counter()
    with open(cfg.detection) as fh:
        try:
            detection = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{cfg.detection}: {exc}") from None
    history_path = cfg.history or detection.get("config", {}).get("input")
    if history_path is None:
        raise ConfigError("no detection-sample data: pass --history")
    history_log_diff = detection.get("config", {}).get("log_diff", cfg.log_diff) if cfg.history is None \
        else cfg.log_diff
    history = ingest_csv(history_path, log_diff=history_log_diff)
    evaluation = ingest_csv(cfg.input, log_diff=cfg.log_diff)
    if history.N != evaluation.N:
        raise ConfigError(f"detection sample has {history.N} series, evaluation sample {evaluation.N}")
    same = os.path.realpath(history_path) == os.path.realpath(cfg.input)
    if _overlaps(history, evaluation, same) and not cfg.allow_overlap:
        raise ConfigError("evaluation sample overlaps the detection sample; pass --allow-overlap to proceed")
    if evaluation.T <= cfg.window:
        raise ConfigError(f"evaluation sample of {evaluation.T} days is not longer than the {cfg.window}-day window")

    locations = [cp["index"] for cp in detection.get("change_points", [])]
    periods = risk.segment_covariances(history.values, locations, kind=cfg.covariance,
                                       order=(cfg.p, cfg.q), short="skip")
    bounds = [0, *locations, history.T]
    kept = {p.index for p in periods}
    skipped = [{"period": f"period_{b}", "from": s + 1, "to": e}
               for b, (s, e) in enumerate(zip(bounds[:-1], bounds[1:]), start=1) if b not in kept]
    for entry in skipped:
        log.warning("%s (observations %d-%d) is too short for a %d x %d covariance; left out",
                    entry["period"], entry["from"], entry["to"], history.N, history.N)
    if not periods:
        raise ValueError("no detected period is long enough to estimate a covariance")
    results, daily = risk.rolling_svar_backtest(evaluation.values, periods, window=cfg.window,
                                                levels=cfg.var_levels,
                                                include_current=cfg.include_current)
    day_dates = None if evaluation.dates is None else evaluation.dates[cfg.window:]
    if cfg.csv_output:
        risk.write_daily_csv(cfg.csv_output, daily, day_dates)

    period_info = []
    for p in periods:
        info = {"period": f"period_{p.index}", "from": p.start + 1, "to": p.end}
        if history.dates is not None:
            info["from_date"], info["to_date"] = history.dates[p.start], history.dates[p.end - 1]
        period_info.append(info)
    most_stressed = {}
    for lv in cfg.var_levels:
        means = {name: float(np.mean(line)) for (name, level), line in daily["svar"].items()
                 if level == lv and name != "current"}
        most_stressed[f"{lv:g}"] = min(means, key=means.get)
    result = {
        "results": risk.backtest_records(results),
        "periods": period_info,
        "skipped_periods": skipped,
        "most_stressed": most_stressed,
        "mean_svar": {f"{name}@{lv:g}": float(np.mean(line)) for (name, lv), line in sorted(daily["svar"].items())},
        "config": _echo(cfg, ("input", "detection", "history", "log_diff", "window", "var_levels",
                              "covariance", "include_current", "p", "q")),
        "wall_time": time.perf_counter() - start,
    }
    _write_json(cfg.output, result)
    return result


def render_report(payload: dict) -> str:
    """Plain-text summary of a detect or backtest JSON document."""
    lines = []
    if "change_points" in payload:
        lines.append(f"{len(payload['change_points'])} change-point(s) in T={payload['T']}, N={payload['N']}")
        lines.append(f"{'index':>7} {'date':>12} {'stat':>12} {'threshold':>12} {'n_hat':>6} {'level':>6}")
        for cp in payload["change_points"]:
            lines.append(f"{cp['index']:>7} {cp.get('date') or '-':>12} {cp['stat']:>12.4f} "
                         f"{cp['threshold']:>12.4f} {cp['n_hat']:>6} {cp['level']:>6}")
    elif "results" in payload:
        lines.append(f"{'period':>10} {'level':>6} {'viol':>5} {'t_first':>7} {'p_pof':>8} {'p_tff':>8} {'zone':>7}")
        for r in payload["results"]:
            p_tff = "-" if r["p_tff"] is None else f"{r['p_tff']:.4f}"
            t_first = "-" if r["t_first"] is None else r["t_first"]
            lines.append(f"{r['period']:>10} {r['level']:>6g} {r['violations']:>5} {t_first:>7} "
                         f"{r['p_pof']:>8.4f} {p_tff:>8} {r['zone']:>7}")
        for lv, name in sorted(payload.get("most_stressed", {}).items()):
            lines.append(f"most stressed at {lv}: {name}")
    else:
        raise ConfigError("report input is neither a detect nor a backtest result")
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig) -> str:
    if cfg.input is None:
        raise ConfigError("report needs --input (detect or backtest JSON)")
    with open(cfg.input) as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{cfg.input}: {exc}") from None
    text = render_report(payload)
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    return text


HANDLERS = {"simulate": cmd_simulate, "detect": cmd_detect, "backtest": cmd_backtest, "report": cmd_report}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_PARSE if exc.code else EXIT_OK
    except (ConfigError, TypeError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    try:
        HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except (ParseError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
