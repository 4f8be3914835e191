"""Command-line front end.

    rcrmimo predict   --config run.toml
    rcrmimo simulate  --snr-db=-5,0,5 --trials 50 --out sim.csv
    rcrmimo sweep     --axis zeta --zeta=0,0.5,1
    rcrmimo opt-zeta  --metric sep --zeta-max 1
    rcrmimo compare   --config run.toml --threads 4

Exit codes: 0 success, 1 configuration error, 2 numerical non-convergence,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .constellation import Constellation, ConfigurationError
from .detector import SolverSettings
from .predictor import PredictorParams, SaddleError, optimal_zeta, predict
from .relaxation import RelaxationSet
from .simulate import ScenarioParams, run_scenario, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

COMMANDS = ("predict", "simulate", "sweep", "opt-zeta", "compare")

# key -> (type, default); list-valued keys accept a scalar or an array
KEYS = {
    "constellation": (str, "psk16"),
    "relaxation": (str, "auto"),
    "kappa": (list, [2.0]),
    "snr_db": (list, [10.0]),
    "zeta": (list, [0.0]),
    "n": (int, 128),
    "trials": (int, 50),
    "seed": (int, 0),
    "threads": (int, None),
    "disk_radius": (float, None),
    "box_halfwidth": (float, None),
    "quadrature_nodes": (int, 64),
    "max_iters": (int, 10000),
    "rel_tol": (float, 1e-9),
    "metric": (str, "mse"),
    "zeta_max": (float, 2.0),
    "sep_method": (str, "auto"),
    "axis": (str, "snr_db"),
}

PREDICT_COLUMNS = ["kappa", "snr_db", "zeta", "alpha_star", "beta_star", "mse_pred", "sep_pred",
                   "sep_method", "converged"]
SIM_COLUMNS = ["constellation", "relaxation", "n", "m", "kappa", "kappa_realized", "snr_db", "zeta", "seed",
               "mse_mean", "mse_stderr", "ser_mean", "ser_stderr", "trials", "nonconverged_trials"]
JOINED = ["kappa", "snr_db", "zeta", "n", "m", "alpha_star", "beta_star", "mse_pred", "sep_pred", "sep_method",
          "converged", "mse_mean", "mse_stderr", "ser_mean", "ser_stderr", "trials", "nonconverged_trials"]
COMPARE_COLUMNS = JOINED + ["mse_rel_dev", "sep_sigma_dev"]
SWEEP_COLUMNS = ["axis", "value"] + JOINED + ["error"]
OPT_COLUMNS = ["kappa", "snr_db", "zeta_star", "metric", "metric_value", "interior"]

COLUMNS = {"predict": PREDICT_COLUMNS, "simulate": SIM_COLUMNS, "sweep": SWEEP_COLUMNS,
           "opt-zeta": OPT_COLUMNS, "compare": COMPARE_COLUMNS}


class ConfigErrors(Exception):
    def __init__(self, lines):
        super().__init__("\n".join(lines))
        self.lines = list(lines)


@dataclass
class RunConfig:
    command: str
    values: dict
    constellation: Constellation
    relaxation: RelaxationSet
    out: str | None = None
    format: str = "csv"
    check: bool = False
    predictions: str | None = None
    simulations: str | None = None

    def __getattr__(self, key):
        values = self.__dict__.get("values", {})
        if key in values:
            return values[key]
        raise AttributeError(key)

    def points(self):
        return list(itertools.product(self.kappa, self.snr_db, self.zeta))

    def settings(self) -> SolverSettings:
        return SolverSettings(max_iters=self.max_iters, rel_tol=self.rel_tol)

    def scenario(self, kappa, snr_db, zeta) -> ScenarioParams:
        return ScenarioParams(self.constellation, self.relaxation, kappa, snr_db, zeta, self.n, self.trials,
                              self.seed, self.settings())

    def predictor(self, kappa, snr_db, zeta) -> PredictorParams:
        return PredictorParams.from_snr_db(kappa, snr_db, zeta, self.constellation, self.relaxation,
                                           quadrature_nodes=self.quadrature_nodes)


def _coerce(key, kind, raw):
    if kind is list:
        items = raw if isinstance(raw, list) else [raw]
        if isinstance(raw, str):
            items = [x for x in raw.split(",") if x.strip()]
        out = []
        for x in items:
            if isinstance(x, bool):
                raise ValueError(f"{x!r} is not a number")
            out.append(float(x))
        return out
    if kind is int:
        if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
            raise ValueError(f"{raw!r} is not an integer")
        return int(raw)
    if kind is float:
        if isinstance(raw, bool):
            raise ValueError(f"{raw!r} is not a number")
        return float(raw)
    if not isinstance(raw, str):
        raise ValueError(f"{raw!r} is not a string")
    return raw


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rcrmimo", description="RCR detector simulation and asymptotic prediction")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat TOML file of key = value pairs")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--check", action="store_true", help="re-read the emitted table and validate it")
    ap.add_argument("--predictions", help="compare: predict output to join")
    ap.add_argument("--simulations", help="compare: simulate output to join")
    for key in KEYS:
        ap.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    return ap


def parse_config(argv) -> RunConfig:
    """Merge defaults, the optional config file and command-line flags.

    Raises ``ConfigErrors`` with one line per invalid field.
    """
    ns = build_parser().parse_args(argv)
    raw: dict = {}
    errors = []
    if ns.config:
        try:
            with open(ns.config, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise ConfigErrors([f"config: {ns.config}: {e}"]) from e
        for k, v in data.items():
            if k not in KEYS:
                errors.append(f"{k}: unknown key (allowed: {', '.join(KEYS)})")
            else:
                raw[k] = v
    for k in KEYS:
        v = getattr(ns, k)
        if v is not None:
            raw[k] = v
    if "threads" not in raw and os.environ.get("RCR_THREADS"):
        raw["threads"] = os.environ["RCR_THREADS"]

    values = {}
    for k, (kind, default) in KEYS.items():
        if k in raw:
            try:
                values[k] = _coerce(k, kind, raw[k])
            except (TypeError, ValueError) as e:
                errors.append(f"{k}: {e}")
                values[k] = default
        else:
            values[k] = default
    if values["threads"] is None:
        values["threads"] = 1

    checks = [
        ("n", values["n"] >= 1, "must be >= 1"),
        ("trials", values["trials"] >= 1, "must be >= 1"),
        ("threads", values["threads"] >= 1, "must be >= 1"),
        ("seed", 0 <= values["seed"] < 2 ** 64, "must be an unsigned 64-bit integer"),
        ("kappa", all(x > 0 for x in values["kappa"]), "must be positive"),
        ("zeta", all(x >= 0 for x in values["zeta"]), "must be nonnegative"),
        ("snr_db", all(math.isfinite(x) for x in values["snr_db"]), "must be finite"),
        ("quadrature_nodes", values["quadrature_nodes"] >= 8, "must be >= 8"),
        ("max_iters", values["max_iters"] >= 1, "must be >= 1"),
        ("rel_tol", values["rel_tol"] > 0, "must be positive"),
        ("metric", values["metric"] in ("mse", "sep"), "must be mse or sep"),
        ("zeta_max", values["zeta_max"] >= 0, "must be nonnegative"),
        ("sep_method", values["sep_method"] in ("auto", "quadrature", "monte_carlo", "closed_form_psk"),
         "must be auto, quadrature, monte_carlo or closed_form_psk"),
        ("axis", values["axis"] in ("snr_db", "zeta"), "must be snr_db or zeta"),
    ]
    for key, ok, msg in checks:
        if not ok:
            errors.append(f"{key}: {msg}")

    constellation = relaxation = None
    try:
        constellation = Constellation.from_name(values["constellation"])
    except ConfigurationError as e:
        errors.append(f"constellation: {e} (legal: psk4, psk8, psk16, ..., qam16, qam64, ...)")
    if constellation is not None:
        try:
            relaxation = RelaxationSet.from_name(values["relaxation"], constellation,
                                                 values["disk_radius"], values["box_halfwidth"])
            relaxation.check_covers(constellation)
        except ConfigurationError as e:
            errors.append(f"relaxation: {e}")
    if values["sep_method"] == "closed_form_psk" and constellation is not None and constellation.kind != "psk":
        errors.append("sep_method: closed_form_psk needs a PSK constellation")
    if errors:
        raise ConfigErrors(errors)
    return RunConfig(ns.command, values, constellation, relaxation, ns.out, ns.format, ns.check,
                     ns.predictions, ns.simulations)


# --------------------------------------------------------------------------
# commands


def _prediction_row(kappa, snr_db, zeta, pred):
    s = pred.solution
    return {"kappa": kappa, "snr_db": snr_db, "zeta": zeta, "alpha_star": s.alpha_star, "beta_star": s.beta_star,
            "mse_pred": pred.mse, "sep_pred": pred.sep, "sep_method": pred.sep_method, "converged": s.converged}


def _sim_row(cfg, p, agg):
    return {"constellation": cfg.constellation.name, "relaxation": cfg.relaxation.name, "n": p.n, "m": p.m,
            "kappa": p.kappa, "kappa_realized": p.kappa_realized, "snr_db": p.snr_db, "zeta": p.zeta,
            "seed": p.master_seed, "mse_mean": agg.mse_mean, "mse_stderr": agg.mse_stderr,
            "ser_mean": agg.ser_mean, "ser_stderr": agg.ser_stderr, "trials": agg.trials_used,
            "nonconverged_trials": agg.nonconverged_trials}


def deviations(mse_mean, mse_pred, ser_mean, sep_pred, ser_stderr):
    mse_dev = abs(mse_mean - mse_pred) / mse_pred if mse_pred > 0 else (0.0 if mse_mean == 0 else math.inf)
    diff = abs(ser_mean - sep_pred)
    if ser_stderr > 0:
        sep_dev = diff / ser_stderr
    else:
        sep_dev = 0.0 if diff == 0 else math.inf
    return mse_dev, sep_dev


def cmd_predict(cfg: RunConfig):
    rows = []
    for kappa, snr, zeta in cfg.points():
        pred = predict(cfg.predictor(kappa, snr, zeta), cfg.sep_method)
        rows.append(_prediction_row(kappa, snr, zeta, pred))
    return rows


def cmd_simulate(cfg: RunConfig):
    rows = []
    for kappa, snr, zeta in cfg.points():
        p = cfg.scenario(kappa, snr, zeta)
        rows.append(_sim_row(cfg, p, run_scenario(p, cfg.threads)))
    return rows


def _joined(pred_row, sim_row):
    row = {k: pred_row[k] for k in PREDICT_COLUMNS}
    for k in ("n", "m", "mse_mean", "mse_stderr", "ser_mean", "ser_stderr", "trials", "nonconverged_trials"):
        row[k] = sim_row[k]
    return row


def cmd_compare(cfg: RunConfig):
    if cfg.predictions or cfg.simulations:
        if not (cfg.predictions and cfg.simulations):
            raise ConfigErrors(["compare: --predictions and --simulations must be given together"])
        preds = read_table(cfg.predictions)
        sims = read_table(cfg.simulations)
        pairs = join_tables(preds, sims)
    else:
        pairs = []
        for kappa, snr, zeta in cfg.points():
            p = cfg.scenario(kappa, snr, zeta)
            agg = run_scenario(p, cfg.threads)
            pred = predict(cfg.predictor(kappa, snr, zeta), cfg.sep_method)
            pairs.append((_prediction_row(kappa, snr, zeta, pred), _sim_row(cfg, p, agg)))
    rows = []
    for pr, sr in pairs:
        row = _joined(pr, sr)
        row["mse_rel_dev"], row["sep_sigma_dev"] = deviations(
            row["mse_mean"], row["mse_pred"], row["ser_mean"], row["sep_pred"], row["ser_stderr"])
        rows.append(row)
    return rows


def join_tables(preds, sims):
    """Pair prediction and simulation rows on (kappa, snr_db, zeta); no partial joins."""
    def key(r):
        return (float(r["kappa"]), float(r["snr_db"]), float(r["zeta"]))

    pk = [key(r) for r in preds]
    sk = {key(r): r for r in sims}
    if sorted(pk) != sorted(sk) or len(sk) != len(sims):
        only_p = sorted(set(pk) - set(sk))
        only_s = sorted(set(sk) - set(pk))
        raise ConfigErrors([f"compare: join keys (kappa, snr_db, zeta) differ; "
                            f"only in predictions: {only_p}, only in simulations: {only_s}"])
    return [(r, sk[key(r)]) for r in preds]


def cmd_sweep(cfg: RunConfig):
    axis = cfg.axis
    values = cfg.snr_db if axis == "snr_db" else cfg.zeta
    others = cfg.zeta if axis == "snr_db" else cfg.snr_db
    rows = []
    if not values:
        return rows
    for kappa, other in itertools.product(cfg.kappa, others):
        base = cfg.scenario(kappa, other if axis == "zeta" else values[0], other if axis == "snr_db" else values[0])
        pts = sweep(base, axis, values, cfg.threads, {"quadrature_nodes": cfg.quadrature_nodes}, cfg.sep_method)
        for pt in pts:
            p = pt.params
            row = {c: None for c in SWEEP_COLUMNS}
            row.update(axis=axis, value=pt.value, kappa=p.kappa, snr_db=p.snr_db, zeta=p.zeta, n=p.n, m=p.m,
                       error=pt.error)
            if pt.prediction is not None:
                row.update({k: v for k, v in _prediction_row(p.kappa, p.snr_db, p.zeta, pt.prediction).items()})
            if pt.aggregate is not None:
                a = pt.aggregate
                row.update(mse_mean=a.mse_mean, mse_stderr=a.mse_stderr, ser_mean=a.ser_mean,
                           ser_stderr=a.ser_stderr, trials=a.trials_used, nonconverged_trials=a.nonconverged_trials)
            rows.append(row)
    return rows


def cmd_opt_zeta(cfg: RunConfig):
    rows = []
    for kappa, snr in itertools.product(cfg.kappa, cfg.snr_db):
        p = cfg.predictor(kappa, snr, 0.0)
        res = optimal_zeta(p, cfg.metric, (0.0, cfg.zeta_max))
        rows.append({"kappa": kappa, "snr_db": snr, "zeta_star": res.zeta, "metric": cfg.metric,
                     "metric_value": res.value, "interior": res.interior})
    return rows


HANDLERS = {"predict": cmd_predict, "simulate": cmd_simulate, "sweep": cmd_sweep, "opt-zeta": cmd_opt_zeta,
            "compare": cmd_compare}


# --------------------------------------------------------------------------
# table I/O


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _parse_cell(s: str):
    if s == "":
        return None
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def render(rows, columns, fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r.get(c) for c in columns} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def parse_table(text: str, fmt: str = "csv"):
    if fmt == "json":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("expected a JSON array of rows")
        return data
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty table") from None
    rows = []
    for line in reader:
        if len(line) != len(header):
            raise ValueError(f"row has {len(line)} cells, header has {len(header)}")
        rows.append({h: _parse_cell(c) for h, c in zip(header, line)})
    return rows


def read_table(path: str):
    with open(path) as fh:
        text = fh.read()
    fmt = "json" if text.lstrip().startswith("[") else "csv"
    return parse_table(text, fmt)


def check_output(text: str, fmt: str, columns, nrows: int) -> None:
    rows = parse_table(text, fmt)
    if len(rows) != nrows:
        raise ValueError(f"re-read {len(rows)} rows, wrote {nrows}")
    if fmt == "csv":
        header = next(csv.reader(io.StringIO(text)))
        if header != list(columns):
            raise ValueError("header mismatch on re-read")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except ConfigErrors as e:
        for line in e.lines:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        rows = HANDLERS[cfg.command](cfg)
    except ConfigErrors as e:
        for line in e.lines:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SaddleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    columns = COLUMNS[cfg.command]
    text = render(rows, columns, cfg.format)
    try:
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if cfg.check:
            if cfg.out:
                with open(cfg.out) as fh:
                    text = fh.read()
            check_output(text, cfg.format, columns, len(rows))
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
