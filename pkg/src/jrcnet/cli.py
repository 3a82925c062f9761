"""Command-line experiment harness.

    jrcnet fig2 --out runs/fig2
    jrcnet fig5 --dmin 10 --dmin 20 --out runs/fig5
    jrcnet sweep --axis eps --min 0.1 --max 0.9 --points 9 --spacing linear
    jrcnet analytic --lambda 0 --quantity throughput
    jrcnet fig2 --config runs/fig2/manifest.txt --out runs/fig2-again

Every run writes its CSVs, a ``manifest.txt`` holding the fully resolved
configuration (itself a valid ``--config`` file), and a plot script that reads
only the CSVs.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import experiments as ex
from .analytic import UnsupportedAlpha
from .model import ParamError, ParamErrors, SystemParams, dbm_to_watts, validate

log = logging.getLogger("jrcnet")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4
COMMANDS = ("fig2", "fig3", "fig4", "fig5", "sweep", "simulate", "analytic")


def _version() -> str:
    try:
        return version("jrcnet")
    except PackageNotFoundError:  # pragma: no cover - running from a source tree
        return "0+unknown"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _u64(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _positive_int(s: str) -> int:
    v = int(float(s)) if "e" in s.lower() else int(s)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _choice(*options):
    def parse(s: str) -> str:
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return parse


AXES = ("lambda", "eps", "qc", "phi_deg", "sigma", "pf", "gamma", "dc", "mr", "pt_dbm", "freq_ghz")

# key -> (parser, is_list)
KEYS = {
    "pt_dbm": (float, False), "freq_ghz": (float, False), "phi_deg": (float, True),
    "alpha": (float, False), "sigma": (float, False), "mr": (_positive_int, False),
    "m": (_positive_int, False), "eps": (float, True), "qc": (float, True),
    "gamma": (float, False), "dc": (float, False), "pf": (float, False),
    "lambda": (float, True), "lambda_min": (float, False), "lambda_max": (float, False),
    "points": (_positive_int, False), "trials": (_positive_int, False),
    "comm_trials": (_positive_int, False), "window_radius": (float, False),
    "seed": (_u64, False), "workers": (_positive_int, False), "dmin": (float, True),
    "simulate": (_bool, False), "axis": (_choice(*AXES), False), "min": (float, False),
    "max": (float, False), "spacing": (_choice("log", "linear"), False),
    "quantity": (_choice("radar", "throughput", "tradeoff", "all"), False),
    "out": (str, False),
}
MANIFEST_ONLY = ("command", "version")

COMMON = {
    "pt_dbm": 10.0, "freq_ghz": 60.0, "phi_deg": [30.0], "alpha": 4.0, "sigma": 10.0,
    "mr": 100, "m": None, "eps": [0.5], "qc": [0.5], "gamma": 5.0, "dc": 5.0, "pf": 0.1,
    "lambda": None, "lambda_min": None, "lambda_max": None, "points": None,
    "trials": 10_000, "comm_trials": 100_000, "window_radius": None, "seed": 0, "workers": 1,
    "dmin": [], "simulate": True, "axis": None, "min": None, "max": None, "spacing": "log",
    "quantity": "all", "out": "out",
}
DEFAULTS = {
    "fig2": {"lambda_min": 1e-5, "lambda_max": 1e-2, "points": 7},
    "fig3": {"eps": [0.2, 0.5, 0.8], "lambda_min": 1e-4, "lambda_max": 1.0, "points": 9},
    "fig4": {"lambda": [1e-4], "eps": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
             "qc": [0.001, 0.005, 0.2, 1.0]},
    "fig5": {"lambda_min": 1e-6, "lambda_max": 1.0, "points": 31, "simulate": False},
    "sweep": {"axis": "lambda", "min": 1e-5, "max": 1e-2, "points": 7, "simulate": False},
    "simulate": {"lambda": [1e-4]},
    "analytic": {"lambda": [1e-4], "simulate": False},
}


def load_config(path: str | Path) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS and key not in MANIFEST_ONLY:
            raise ConfigError(key, "unknown configuration key")
        raw[key] = value
    return raw


def _parse_value(key: str, value):
    parse, is_list = KEYS[key]
    try:
        if is_list:
            items = value if isinstance(value, list) else [v for v in value.split(",") if v.strip()]
            return [parse(v.strip()) for v in items]
        if value == "":
            return None
        return parse(value.strip())
    except ValueError as exc:
        raise ConfigError(key, f"bad value {value!r} ({exc})") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jrcnet", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value file; flags override it")
        s.add_argument("--out", help="output directory")
        s.add_argument("--seed")
        s.add_argument("--trials", help="Monte Carlo trials for threshold calibration")
        s.add_argument("--comm-trials", help="Monte Carlo trials for throughput estimation")
        s.add_argument("--window-radius", help="simulation window radius in metres")
        s.add_argument("--workers", help="threads for Monte Carlo trials")
        s.add_argument("--lambda", dest="lambda_", action="append", help="node density (repeatable)")
        s.add_argument("--lambda-min")
        s.add_argument("--lambda-max")
        s.add_argument("--points")
        s.add_argument("--eps", action="append", help="radar fraction (repeatable)")
        s.add_argument("--qc", action="append", help="ALOHA persistency (repeatable)")
        s.add_argument("--mr")
        s.add_argument("--m")
        s.add_argument("--phi-deg", action="append", help="beamwidth in degrees (repeatable)")
        s.add_argument("--alpha")
        s.add_argument("--sigma")
        s.add_argument("--gamma")
        s.add_argument("--dc")
        s.add_argument("--pf")
        s.add_argument("--pt-dbm")
        s.add_argument("--freq-ghz")
        s.add_argument("--dmin", action="append", help="minimum radar range in metres (repeatable)")
        s.add_argument("--simulate", dest="simulate", action="store_const", const="true")
        s.add_argument("--no-simulate", dest="simulate", action="store_const", const="false")
        if name == "sweep":
            s.add_argument("--axis")
            s.add_argument("--min")
            s.add_argument("--max")
            s.add_argument("--spacing")
        if name in ("sweep", "simulate", "analytic"):
            s.add_argument("--quantity")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (in that order of precedence)."""
    settings = dict(COMMON)
    settings.update(DEFAULTS[args.command])
    if args.config:
        raw = load_config(args.config)
        if raw.get("command", args.command) != args.command:
            raise ConfigError("command", f"config is for {raw['command']!r}, not {args.command!r}")
        for key, value in raw.items():
            if key not in MANIFEST_ONLY:
                settings[key] = _parse_value(key, value)
    flags = {k: v for k, v in vars(args).items() if v is not None}
    flags.pop("command")
    flags.pop("config", None)
    flags.pop("verbose", None)
    for attr, value in flags.items():
        key = "lambda" if attr == "lambda_" else attr
        settings[key] = _parse_value(key, value)
    if settings["m"] is not None and args.command in ("fig3", "fig4"):
        raise ConfigError("m", f"{args.command} sets the cycle length from --eps; drop --m")
    return settings


FIELD_TO_KEY = {"P_t": "pt_dbm", "f": "freq_ghz", "phi": "phi_deg", "alpha": "alpha",
                "sigma": "sigma", "M_r": "mr", "M": "m", "q_c": "qc", "gamma": "gamma",
                "d_c": "dc", "pf_target": "pf"}


def scenario(settings: dict, *, eps: float | None = None, qc: float | None = None,
             phi_deg: float | None = None) -> SystemParams:
    """Validated parameters for one curve; ``M`` comes from ``m`` when given,
    else from ``eps`` via ``M = round(M_r / eps)``."""
    mr = settings["mr"]
    eps = settings["eps"][0] if eps is None else eps
    raw = {
        "P_t": dbm_to_watts(settings["pt_dbm"]), "f": settings["freq_ghz"] * 1e9,
        "phi": math.radians(settings["phi_deg"][0] if phi_deg is None else phi_deg),
        "alpha": settings["alpha"], "sigma": settings["sigma"], "M_r": mr,
        "q_c": settings["qc"][0] if qc is None else qc, "gamma": settings["gamma"],
        "d_c": settings["dc"], "pf_target": settings["pf"],
    }
    if settings["m"] is not None:
        raw["M"] = settings["m"]
    else:
        if not 0 < eps <= 1:
            raise ConfigError("eps", f"must lie in (0, 1], got {eps!r}")
        raw["M"] = max(mr, round(mr / eps))
    try:
        return validate(raw)
    except ParamErrors as exc:
        keys = ",".join(FIELD_TO_KEY.get(e.field, e.field) for e in exc.errors)
        raise ConfigError(keys, str(exc)) from exc
    except ParamError as exc:
        raise ConfigError(FIELD_TO_KEY.get(exc.field, exc.field), str(exc)) from exc


def lambdas(settings: dict) -> list[float]:
    if settings["lambda"]:
        values = settings["lambda"]
    else:
        for key in ("lambda_min", "lambda_max", "points"):
            if settings[key] is None:
                raise ConfigError(key, "required when --lambda is not given")
        values = ex.grid(settings["lambda_min"], settings["lambda_max"], settings["points"], "log")
    for v in values:
        if not (math.isfinite(v) and v >= 0):
            raise ConfigError("lambda", f"densities must be finite and non-negative, got {v!r}")
    return values


def sim_controls(settings: dict) -> ex.SimControls:
    return ex.SimControls(
        radar_trials=settings["trials"], comm_trials=settings["comm_trials"],
        window_radius=settings["window_radius"], seed=settings["seed"],
        workers=settings["workers"], simulate=settings["simulate"],
    )


# -- output -------------------------------------------------------------------

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if hasattr(v, "item"):  # numpy scalar
        return format_value(v.item())
    return str(v)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([format_value(row.get(c)) for c in columns])


def write_manifest(path: Path, command: str, settings: dict) -> None:
    lines = [f"command = {command}", f"version = {_version()}"]
    for key in KEYS:
        value = settings.get(key)
        if isinstance(value, list):
            text = ",".join(format_value(v) for v in value)
        else:
            text = format_value(value)
        lines.append(f"{key} = {text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


PLOT_SPECS = {
    "fig2": [("fig2.csv", "lambda", "d_rm_analytic", "d_rm_sim", "node density [1/m^2]", "radar range [m]", True, True)],
    "fig3": [("fig3.csv", "lambda", "T_analytic", "T_sim", "node density [1/m^2]", "throughput density", True, True)],
    "fig4": [("fig4.csv", "eps", "d_rm_analytic", "d_rm_sim", "radar fraction eps", "radar range [m]", False, False)],
    "fig5": [("fig5.csv", "lambda", "T_star", None, "node density [1/m^2]", "max throughput density", True, True)],
    "sweep": [("sweep_radar.csv", "x", "d_rm_analytic", "d_rm_sim", "x", "radar range [m]", False, False),
              ("sweep_comm.csv", "x", "T_analytic", "T_sim", "x", "throughput density", False, False),
              ("sweep_tradeoff.csv", "x", "T_star", None, "x", "max throughput density", False, False)],
}
PLOT_SPECS["simulate"] = PLOT_SPECS["analytic"] = PLOT_SPECS["sweep"]

PLOT_TEMPLATE = '''"""Plot the CSVs of this run. Needs matplotlib; reads nothing else."""
import csv
import os
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SPECS = {specs!r}


def num(s):
    return float(s) if s not in ("", "inf", "nan") else None


for name, x, y, y_sim, xlabel, ylabel, logx, logy in SPECS:
    path = os.path.join(HERE, name)
    if not os.path.exists(path):
        continue
    curves = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if x in row:
                curves[row.get("curve", "")].append(row)
    if not curves:
        continue
    fig, ax = plt.subplots()
    for label, rows in curves.items():
        pts = [(num(r[x]), num(r[y])) for r in rows if num(r[x]) is not None and num(r[y]) is not None]
        if pts:
            line, = ax.plot(*zip(*pts), "-", label=label or y)
            if y_sim and y_sim in rows[0]:
                sim = [(num(r[x]), num(r[y_sim])) for r in rows if num(r[y_sim]) is not None]
                if sim:
                    ax.plot(*zip(*sim), "o", color=line.get_color(), fillstyle="none")
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.savefig(os.path.join(HERE, name.replace(".csv", ".png")), dpi=150, bbox_inches="tight")
'''


def write_plot_script(out: Path, command: str) -> None:
    (out / f"plot_{command}.py").write_text(
        PLOT_TEMPLATE.format(specs=PLOT_SPECS[command]), encoding="utf-8")


# -- commands -----------------------------------------------------------------

def _cmd_fig2(s: dict) -> dict[str, tuple[list[str], list[dict]]]:
    rows = ex.fig2_rows(scenario(s), lambdas(s), s["phi_deg"], sim_controls(s))
    return {"fig2.csv": (ex.COLUMNS["radar"], rows)}


def _cmd_fig3(s: dict):
    base = scenario(s, eps=s["eps"][0])
    for e in s["eps"]:
        scenario(s, eps=e)
    rows = ex.fig3_rows(base, lambdas(s), s["eps"], sim_controls(s))
    return {"fig3.csv": (ex.COLUMNS["comm"], rows)}


def _cmd_fig4(s: dict):
    for e in s["eps"]:
        for q in s["qc"]:
            scenario(s, eps=e, qc=q)
    lam = lambdas(s)
    if len(lam) != 1:
        raise ConfigError("lambda", "fig4 takes a single density")
    rows = ex.fig4_rows(scenario(s), lam[0], s["eps"], s["qc"], sim_controls(s))
    return {"fig4.csv": (ex.COLUMNS["radar"], rows)}


def _cmd_fig5(s: dict):
    for d in s["dmin"]:
        if not d > 0:
            raise ConfigError("dmin", f"must be positive, got {d!r}")
    rows = ex.fig5_rows(scenario(s), lambdas(s), s["dmin"])
    return {"fig5.csv": (ex.COLUMNS["tradeoff"], rows)}


def _axis_points(command: str, s: dict) -> tuple[str, list[float]]:
    if command == "sweep":
        for key in ("min", "max", "points"):
            if s[key] is None:
                raise ConfigError(key, "required for sweep")
        return s["axis"], ex.grid(s["min"], s["max"], s["points"], s["spacing"])
    return "lambda", lambdas(s)


def _cmd_generic(command: str, s: dict):
    axis, xs = _axis_points(command, s)
    sim = sim_controls(s)
    quantity = s["quantity"]
    radar, comm, trade = [], [], []
    base_lams = lambdas(s) if axis != "lambda" else [None]
    for eps in s["eps"]:
        for qc in s["qc"]:
            for lam0 in base_lams:
                for x in xs:
                    local = dict(s)
                    lam = x if axis == "lambda" else lam0
                    if axis not in ("lambda", "eps", "qc"):
                        local[axis] = [x] if KEYS[axis][1] else (int(round(x)) if axis == "mr" else x)
                    e = x if axis == "eps" else eps
                    q = x if axis == "qc" else qc
                    p = scenario(local, eps=e, qc=q)
                    curve = f"eps={eps:g},q_c={qc:g}" + ("" if lam0 is None else f",lambda={lam0:g}")
                    extra = {"axis": axis, "x": x}
                    if quantity in ("radar", "all"):
                        radar.append({**extra, **ex.radar_row(p, lam, sim, curve=curve, eps_requested=e)})
                    if quantity in ("throughput", "all"):
                        try:
                            comm.append({**extra, **ex.comm_row(p, lam, sim, curve=curve, eps_requested=e)})
                        except UnsupportedAlpha:
                            if quantity == "throughput":
                                raise
                    if quantity in ("tradeoff", "all") and p.alpha == 4:
                        trade.append({**extra, **ex.tradeoff_row(p, lam, None, curve=curve + ",unconstrained")})
                        for d in s["dmin"]:
                            trade.append({**extra, **ex.tradeoff_row(p, lam, d, curve=curve + f",d_min={d:g}m")})
    out = {}
    head = ["axis", "x"]
    if radar:
        out[f"{command}_radar.csv"] = (head + ex.COLUMNS["radar"], radar)
    if comm:
        out[f"{command}_comm.csv"] = (head + ex.COLUMNS["comm"], comm)
    if trade:
        out[f"{command}_tradeoff.csv"] = (head + ex.COLUMNS["tradeoff"], trade)
    return out


def execute(command: str, settings: dict) -> int:
    """Run a resolved configuration and write all outputs; returns the exit code."""
    if command == "fig2":
        files = _cmd_fig2(settings)
    elif command == "fig3":
        files = _cmd_fig3(settings)
    elif command == "fig4":
        files = _cmd_fig4(settings)
    elif command == "fig5":
        files = _cmd_fig5(settings)
    else:
        files = _cmd_generic(command, settings)
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    for name, (columns, rows) in files.items():
        write_csv(out / name, columns, rows)
        log.info("wrote %s (%d rows)", out / name, len(rows))
    write_manifest(out / "manifest.txt", command, settings)
    if command in PLOT_SPECS:
        write_plot_script(out, command)
    constrained = [r for _, rows in files.values() for r in rows if r.get("d_min") is not None]
    if constrained and not any(r["feasible"] for r in constrained):
        log.error("range constraint infeasible at every sweep point")
        return EXIT_INFEASIBLE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = resolve(args)
        return execute(args.command, settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, UnsupportedAlpha) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ex.NumericalFailure, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
