"""Command-line front end: config parsing, scenario execution, data export.

Configuration files are flat ``key = value`` text with dotted sections
(``params.c = 1.0``, ``signal.F.points = 0:0.5, 7:0.5, ...``).  Every run
writes a manifest holding the fully resolved configuration (all defaults
materialized), the tool version, input digests and output paths; feeding a
manifest back as the configuration reproduces the outputs byte for byte.

Exit codes: 0 success, 2 configuration/parse error, 3 infeasible parameters,
4 integration failure, 5 analysis failure (root finding, averaging
conditions, shooting), 6 unexpected internal error.

The directory named by the environment variable ``LACTODYN_SEED_DIR`` may
hold ``<scenario>.cfg`` files overriding the built-in scenario defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import report_to_json, report_to_kv
from .dynamics import Params2D, Params4D
from .equilibria import equilibrium_2d, equilibrium_4d
from .equilibria import report_to_csv as eq_report_to_csv
from .equilibria import report_to_kv as eq_report_to_kv
from .errors import (AnalysisError, ConfigError, InfeasibleEquilibrium,
                     IntegrationFailure, LactodynError, PoleError)
from .integrate import IntegratorConfig
from .manifold import phi_2d, slice_csv_2d, slice_csv_4d
from .scenarios import (ScenarioConfig, default_scenario, run_buffering,
                        run_dip, run_sensitivity_4d)
from .signals import Control, Signal

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INTEGRATION = 4
EXIT_ANALYSIS = 5
EXIT_INTERNAL = 6

_G = ".17g"


def _fmt(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return "inf" if np.isinf(x) else format(x, _G)
    return str(x)


# -- config text ---------------------------------------------------------

def parse_config_text(text: str) -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines into {key: (value, line_number)}."""
    out: dict[str, tuple[str, int]] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=ln)
        key, val = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError("empty key", line=ln)
        out[key] = (val.strip(), ln)
    return out


def format_config(resolved: dict[str, str]) -> str:
    return "\n".join(f"{k} = {v}" for k, v in sorted(resolved.items())) + "\n"


def _signal_to_keys(prefix: str, sig: Signal, out: dict[str, str]) -> None:
    pts = ", ".join(f"{t:{_G[1:]}}:{v:{_G[1:]}}"
                    for t, v in zip(sig.times, sig.values))
    out[f"{prefix}.points"] = pts
    out[f"{prefix}.period"] = "none" if sig.period is None else _fmt(sig.period)


def _control_to_keys(prefix: str, ctl: Control, out: dict[str, str]) -> None:
    _signal_to_keys(prefix, ctl.signal, out)
    out[f"{prefix}.coupling"] = _fmt(ctl.coupling)
    out[f"{prefix}.x_ref"] = _fmt(ctl.x_ref)


def resolve_to_keys(cfg: ScenarioConfig) -> dict[str, str]:
    """Flatten a scenario into the canonical key set (the resolved config)."""
    out: dict[str, str] = {
        "scenario": cfg.name,
        "model": cfg.model,
        "horizon": _fmt(cfg.horizon),
        "period": "none" if cfg.period is None else _fmt(cfg.period),
        "n_periods": str(cfg.n_periods),
        "dip_threshold": _fmt(cfg.dip_threshold),
        "lock_threshold": _fmt(cfg.lock_threshold),
        "baseline_tol": _fmt(cfg.baseline_tol),
        "root_search_lo": _fmt(cfg.root_search[0]),
        "root_search_hi": _fmt(cfg.root_search[1]),
        "integrator.rel_tol": _fmt(cfg.integrator.rel_tol),
        "integrator.abs_tol": _fmt(cfg.integrator.abs_tol),
        "integrator.max_step": _fmt(cfg.integrator.max_step),
        "integrator.mode": cfg.integrator.stiffness_mode,
    }
    p = cfg.params
    for name in ("c", "k", "kp", "ell", "eps", "epsp"):
        out[f"params.{name}"] = _fmt(getattr(p, name))
    if cfg.model == "4d":
        for name in ("c1", "c2", "ca", "kn", "ka"):
            out[f"params.{name}"] = _fmt(getattr(p, name))
    _signal_to_keys("signal.F", cfg.stimulus, out)
    names = ("signal.J",) if cfg.model == "2d" else ("signal.J0", "signal.J1", "signal.J2")
    for name, ctl in zip(names, cfg.controls):
        _control_to_keys(name, ctl, out)
    return out


def _parse_points(val: str, line: int) -> tuple[np.ndarray, np.ndarray]:
    ts, vs = [], []
    for pair in val.split(","):
        pair = pair.strip()
        if not pair:
            continue
        if ":" not in pair:
            raise ConfigError(f"bad breakpoint {pair!r} (expected t:value)", line=line)
        t_s, v_s = pair.split(":", 1)
        try:
            ts.append(float(t_s))
            vs.append(float(v_s))
        except ValueError as exc:
            raise ConfigError(f"bad breakpoint number in {pair!r}: {exc}", line=line)
    if not ts:
        raise ConfigError("empty breakpoint list", line=line)
    return np.array(ts), np.array(vs)


def _signal_from_keys(prefix: str, kv: dict[str, tuple[str, int]]) -> Signal:
    kind_key = f"{prefix}.kind"
    kind = kv.get(kind_key, ("piecewise", 0))[0]
    period_s, period_ln = kv.get(f"{prefix}.period", ("none", 0))
    period = None if period_s == "none" else _to_float(period_s, period_ln)
    if kind == "constant":
        val, ln = _require(kv, f"{prefix}.value")
        return Signal.constant(_to_float(val, ln), period)
    if kind == "trapezoid":
        from .signals import TrapezoidSpec, make_trapezoid
        vals = {}
        for name in ("base", "boost", "t_start", "t_rise_end", "t_fall_start", "t_end"):
            raw, ln = _require(kv, f"{prefix}.{name}")
            vals[name] = _to_float(raw, ln)
        return make_trapezoid(TrapezoidSpec(
            base=vals["base"], boost_fraction=vals["boost"],
            t_start=vals["t_start"], t_rise_end=vals["t_rise_end"],
            t_fall_start=vals["t_fall_start"], t_end=vals["t_end"],
            period=period))
    if kind == "piecewise":
        raw, ln = _require(kv, f"{prefix}.points")
        ts, vs = _parse_points(raw, ln)
        return Signal(ts, vs, period)
    raise ConfigError(f"unknown signal kind {kind!r} for {prefix}",
                      line=kv.get(kind_key, ("", 0))[1] or None)


def _control_from_keys(prefix: str, kv: dict[str, tuple[str, int]]) -> Control:
    sig = _signal_from_keys(prefix, kv)
    coup_s, coup_ln = kv.get(f"{prefix}.coupling", ("0", 0))
    xref_s, xref_ln = kv.get(f"{prefix}.x_ref", ("0", 0))
    return Control(sig, coupling=_to_float(coup_s, coup_ln),
                   x_ref=_to_float(xref_s, xref_ln))


def _require(kv, key) -> tuple[str, int]:
    if key not in kv:
        raise ConfigError(f"missing required key {key!r}")
    return kv[key]


def _to_float(s: str, line: int = 0) -> float:
    if s == "inf":
        return float("inf")
    try:
        return float(s)
    except ValueError as exc:
        raise ConfigError(f"bad number {s!r}: {exc}", line=line or None)


def _to_int(s: str, line: int = 0) -> int:
    try:
        return int(s)
    except ValueError as exc:
        raise ConfigError(f"bad integer {s!r}: {exc}", line=line or None)


_SIGNAL_SUBKEYS = ("kind", "value", "points", "period", "coupling", "x_ref",
                   "base", "boost", "t_start", "t_rise_end", "t_fall_start", "t_end")
_TOP_KEYS = ("scenario", "model", "horizon", "period", "n_periods",
             "dip_threshold", "lock_threshold", "baseline_tol",
             "root_search_lo", "root_search_hi")


def _validate_keys(kv: dict[str, tuple[str, int]]) -> None:
    valid_prefixes = ["params.", "integrator.", "manifest."]
    signals = ["signal.F", "signal.J", "signal.J0", "signal.J1", "signal.J2"]
    for key, (_, ln) in kv.items():
        if key in _TOP_KEYS:
            continue
        if any(key.startswith(p) for p in valid_prefixes):
            continue
        if any(key == f"{s}.{sub}" for s in signals for sub in _SIGNAL_SUBKEYS):
            continue
        raise ConfigError(f"unknown key {key!r}", line=ln)


def scenario_from_keys(kv: dict[str, tuple[str, int]],
                       model_override: str | None = None) -> ScenarioConfig:
    """Build a fully resolved scenario from config keys (defaults filled in)."""
    _validate_keys(kv)
    name = kv.get("scenario", ("dip", 0))[0]
    base = default_scenario(name)
    base_keys = resolve_to_keys(base)

    def get(key, default=None):
        if key in kv:
            return kv[key][0], kv[key][1]
        if key in base_keys:
            return base_keys[key], 0
        return default, 0

    model = model_override or get("model")[0]
    pkeys = {}
    names2 = ("c", "k", "kp", "ell", "eps", "epsp")
    names4 = names2 + ("c1", "c2", "ca", "kn", "ka")
    for nm in (names4 if model == "4d" else names2):
        raw, ln = get(f"params.{nm}", (None, 0))
        if raw is not None:
            pkeys[nm] = _to_float(raw, ln)
    try:
        params = Params4D(**pkeys) if model == "4d" else Params2D(**pkeys)
    except ValueError as exc:
        raise ConfigError(str(exc))

    integ = IntegratorConfig(
        rel_tol=_to_float(*get("integrator.rel_tol")),
        abs_tol=_to_float(*get("integrator.abs_tol")),
        max_step=_to_float(*get("integrator.max_step")),
        stiffness_mode=get("integrator.mode")[0],
    )

    merged = dict(kv)
    for key, val in base_keys.items():
        merged.setdefault(key, (val, 0))
    stimulus = _signal_from_keys("signal.F", merged)
    if model == "2d":
        controls = (_control_from_keys("signal.J", merged),)
    else:
        if "signal.J0.points" not in merged and "signal.J0.value" not in merged \
                and "signal.J0.kind" not in merged:
            controls = default_scenario("sensitivity").controls
        else:
            controls = tuple(_control_from_keys(f"signal.J{i}", merged)
                             for i in range(3))

    period_s = get("period")[0]
    try:
        return ScenarioConfig(
            name=name, model=model, params=params, stimulus=stimulus,
            controls=controls, integrator=integ,
            horizon=_to_float(*get("horizon")),
            period=None if period_s == "none" else _to_float(period_s),
            n_periods=_to_int(*get("n_periods")),
            dip_threshold=_to_float(*get("dip_threshold")),
            lock_threshold=_to_float(*get("lock_threshold")),
            baseline_tol=_to_float(*get("baseline_tol")),
            root_search=(_to_float(*get("root_search_lo")),
                         _to_float(*get("root_search_hi"))),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def load_scenario(path: str | None, model_override: str | None = None,
                  scenario_flag: str | None = None) -> tuple[ScenarioConfig, dict]:
    """Load scenario from a config file (or pure defaults), honoring the
    LACTODYN_SEED_DIR override directory."""
    kv: dict[str, tuple[str, int]] = {}
    if scenario_flag:
        kv["scenario"] = (scenario_flag, 0)
    if path is not None:
        text = Path(path).read_text()
        file_kv = parse_config_text(text)
        file_kv = {k: v for k, v in file_kv.items() if not k.startswith("manifest.")}
        kv.update(file_kv)
    name = kv.get("scenario", ("dip", 0))[0]
    seed_dir = os.environ.get("LACTODYN_SEED_DIR")
    if seed_dir:
        seed_path = Path(seed_dir) / f"{name}.cfg"
        if seed_path.exists():
            seed_kv = parse_config_text(seed_path.read_text())
            for key, val in seed_kv.items():
                kv.setdefault(key, val)
    cfg = scenario_from_keys(kv, model_override)
    return cfg, kv


def write_manifest(path: Path, cfg: ScenarioConfig, inputs: list[str],
                   outputs: list[str]) -> None:
    resolved = resolve_to_keys(cfg)
    resolved["manifest.version"] = __version__
    for name in sorted(inputs):
        digest = hashlib.sha256(Path(name).read_bytes()).hexdigest()
        resolved[f"manifest.input_digest.{Path(name).name}"] = digest
    for i, out in enumerate(sorted(outputs)):
        resolved[f"manifest.output.{i}"] = out
    path.write_text(format_config(resolved))


# -- commands ------------------------------------------------------------

def _simulate_one(args_tuple):
    cfg_path, model, out_prefix, scenario_flag = args_tuple
    cfg, _ = load_scenario(cfg_path, model, scenario_flag)
    from .scenarios import _rhs_jac_2d, _rhs_jac_4d, equilibrium_at_mean_inputs
    from .integrate import collect_corners, integrate
    p = cfg.params
    if cfg.model == "2d":
        rhs, jac = _rhs_jac_2d(p, cfg.stimulus, cfg.controls[0])
        J = cfg.controls[0]
        s0 = equilibrium_at_mean_inputs(
            p, Signal.constant(cfg.stimulus.eval(0.0)),
            Control(Signal.constant(J.signal.eval(0.0)), J.coupling, J.x_ref), 1.0)
    else:
        rhs, jac = _rhs_jac_4d(p, cfg.stimulus, cfg.controls)
        rep = equilibrium_4d(*[c.signal.eval(0.0) for c in cfg.controls],
                             cfg.stimulus.eval(0.0), p)
        s0 = rep.point
    corners = collect_corners([cfg.stimulus, *cfg.controls], 0.0, cfg.horizon)
    traj = integrate(rhs, 0.0, cfg.horizon, s0, cfg.integrator, jac=jac,
                     corners=corners)
    out_csv = out_prefix + ".csv"
    traj.write_csv(out_csv)
    write_manifest(Path(out_prefix + ".manifest"), cfg,
                   [cfg_path] if cfg_path else [], [out_csv])
    return out_csv


def cmd_simulate(args) -> int:
    jobs = []
    if len(args.config) == 1:
        prefix = args.out or str(Path(args.config[0]).with_suffix(""))
        jobs.append((args.config[0], args.model, prefix, args.scenario))
    else:
        out_dir = Path(args.out_dir or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        for cpath in args.config:
            jobs.append((cpath, args.model, str(out_dir / Path(cpath).stem),
                         args.scenario))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for out in pool.map(_simulate_one, jobs):
                print(out)
    else:
        for job in jobs:
            print(_simulate_one(job))
    return EXIT_OK


def cmd_equilibrium(args) -> int:
    cfg, _ = load_scenario(args.config, args.model, args.scenario)
    F0 = cfg.stimulus.eval(0.0)
    if cfg.model == "2d":
        J = cfg.controls[0]
        rep = equilibrium_2d(J.signal.eval(0.0), F0, cfg.params, j_x=J.coupling)
    else:
        rep = equilibrium_4d(*[c.signal.eval(0.0) for c in cfg.controls],
                             F0, cfg.params)
    sys.stdout.write(eq_report_to_kv(rep))
    if args.csv:
        Path(args.csv).write_text(eq_report_to_csv(rep))
    return EXIT_OK


def cmd_manifold(args) -> int:
    cfg, _ = load_scenario(args.config, args.model, args.scenario)
    xs = np.linspace(args.x_lo, args.x_hi, args.n)
    if cfg.model == "2d":
        text = slice_csv_2d(cfg.params, cfg.stimulus, args.t, xs)
    else:
        vs = np.linspace(args.x_lo, args.x_hi, max(2, args.n // 8))
        text = slice_csv_4d(cfg.params, cfg.stimulus, args.t, xs, vs)
    if args.csv:
        Path(args.csv).write_text(text)
        print(f"wrote {args.csv}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_average(args) -> int:
    from .averaging import predict_periodic_orbit
    cfg, _ = load_scenario(args.config, None, args.scenario or "buffer")
    if cfg.period is None:
        raise AnalysisError("averaging requires a periodic scenario")
    rep = predict_periodic_orbit(cfg.period, cfg.params, cfg.stimulus,
                                 cfg.controls[0], search=cfg.root_search)
    sys.stdout.write(report_to_json(rep) if args.json else report_to_kv(rep))
    return EXIT_OK


def cmd_dip(args) -> int:
    cfg, _ = load_scenario(args.config, None, args.scenario or "dip")
    rep, traj = run_dip(cfg)
    kv = {
        "baseline_x": rep.baseline_x, "min_x": rep.min_x, "t_min": rep.t_min,
        "dip_depth": rep.dip_depth, "overshoot_max": rep.overshoot_max,
        "t_overshoot": rep.t_overshoot,
        "returned_to_baseline": rep.returned_to_baseline,
        "detected": rep.detected, "chase_fraction": rep.chase_fraction,
    }
    for key, val in kv.items():
        print(f"{key} = {_fmt(val)}")
    if args.csv:
        traj.write_csv(args.csv)
    return EXIT_OK


def cmd_buffer(args) -> int:
    cfg, _ = load_scenario(args.config, None, args.scenario or "buffer")
    buf, orbit, avg = run_buffering(cfg)
    print(f"locked = {_fmt(buf.locked)}")
    print(f"contraction_ratio = {_fmt(buf.contraction_ratio)}")
    print(f"final_displacement = {_fmt(float(buf.displacements[-1]))}")
    print(f"strobo_x = {_fmt(float(buf.strobo_limit[0]))}")
    print(f"strobo_y = {_fmt(float(buf.strobo_limit[1]))}")
    print(f"fixed_point_gap = {_fmt(buf.fixed_point_gap)}")
    sys.stdout.write(report_to_kv(avg))
    sys.stdout.write(report_to_kv(orbit))
    if args.csv:
        np.savetxt(args.csv, np.column_stack(
            [np.arange(buf.displacements.size), buf.displacements]),
            delimiter=",", header="period,displacement", comments="", fmt="%.17g")
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    cfg, _ = load_scenario(args.config, "4d", args.scenario or "sensitivity")
    rows = run_sensitivity_4d(cfg)
    for r in rows:
        print(f"{r.quantity}.derivative = {_fmt(r.derivative)}")
        print(f"{r.quantity}.measured_sign = {r.measured_sign:+d}")
        print(f"{r.quantity}.expected_sign = {r.expected_sign:+d}")
        print(f"{r.quantity}.match = {_fmt(r.match)}")
    print(f"all_match = {_fmt(all(r.match for r in rows))}")
    return EXIT_OK


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ConfigError(f"CSV schema mismatch in {path}: "
                          f"{len(header)} header fields, {data.shape[1]} columns")
    return header, data


def cmd_plotdata(args) -> int:
    header, data = _read_csv(args.trajectory)
    if header[0] != "t":
        raise ConfigError(f"expected first column 't', got {header[0]!r}")
    if args.kind == "timeseries":
        cols = ["t", args.var]
    elif args.kind == "phase":
        cols = [args.plane_x, args.plane_y]
    elif args.kind == "manifold-overlay":
        cols = header[:]
    idx = [header.index(c) for c in cols if c in header]
    if len(idx) != len(cols):
        missing = [c for c in cols if c not in header]
        raise ConfigError(f"columns {missing} not in trajectory {header}")
    out = data[:, idx]
    names = list(cols)
    if args.kind == "manifold-overlay":
        cfg, _ = load_scenario(args.config, None, args.scenario)
        phi_col = np.array([phi_2d(x, t, cfg.params, cfg.stimulus)
                            for t, x in zip(data[:, 0], data[:, 1])])
        out = np.column_stack([out, phi_col])
        names.append("phi")
    sys.stdout.write(",".join(names) + "\n")
    for row in out:
        sys.stdout.write(",".join(format(v, _G) for v in row) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lactodyn",
        description="Fast-slow lactate kinetics: simulation and analysis")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p, scenario_default=None):
        p.add_argument("--config", default=None, help="configuration file")
        p.add_argument("--scenario", default=scenario_default,
                       choices=["dip", "buffer", "sensitivity"],
                       help="named default scenario")

    p = sub.add_parser("simulate", help="integrate a scenario and write CSV")
    p.add_argument("config", nargs="*", default=[None],
                   help="configuration file(s)")
    p.add_argument("--model", choices=["2d", "4d"], default=None)
    p.add_argument("--out", default="run", help="output prefix (single config)")
    p.add_argument("--out-dir", default=None, help="output directory (sweep)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--scenario", default=None,
                   choices=["dip", "buffer", "sensitivity"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("equilibrium", help="closed-form stationary point report")
    add_common(p)
    p.add_argument("--model", choices=["2d", "4d"], default=None)
    p.add_argument("--csv", default=None, help="CSV sidecar path")
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("manifold", help="critical-manifold slice")
    add_common(p)
    p.add_argument("--model", choices=["2d", "4d"], default=None)
    p.add_argument("--slice", action="store_true", help="emit the manifold grid")
    p.add_argument("--x-lo", type=float, default=0.0)
    p.add_argument("--x-hi", type=float, default=10.0)
    p.add_argument("--n", type=int, default=101)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_manifold)

    p = sub.add_parser("average", help="averaging pipeline report")
    add_common(p)
    p.add_argument("--json", action="store_true", help="structured block output")
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("dip", help="run the dip protocol")
    add_common(p)
    p.add_argument("--csv", default=None, help="trajectory CSV sidecar")
    p.set_defaults(func=cmd_dip)

    p = sub.add_parser("buffer", help="run the periodic buffering scenario")
    add_common(p)
    p.add_argument("--csv", default=None, help="displacement CSV sidecar")
    p.set_defaults(func=cmd_buffer)

    p = sub.add_parser("sensitivity", help="4-d quasi-stationary sign table")
    add_common(p)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("plotdata", help="plot-ready columns from a trajectory CSV")
    p.add_argument("trajectory", help="trajectory CSV file")
    p.add_argument("--kind", choices=["timeseries", "phase", "manifold-overlay"],
                   default="timeseries")
    p.add_argument("--var", default="x", help="variable for timeseries")
    p.add_argument("--plane-x", default="x")
    p.add_argument("--plane-y", default="y")
    p.add_argument("--config", default=None)
    p.add_argument("--scenario", default=None,
                   choices=["dip", "buffer", "sensitivity"])
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleEquilibrium, PoleError) as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IntegrationFailure as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except AnalysisError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LactodynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
