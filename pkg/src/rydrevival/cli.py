"""Command-line interface: ``rydrevival <subcommand> [options]``.

Every subcommand writes its artifact(s) into ``--output-dir`` together with a
JSON run manifest (resolved configuration, library versions, SHA-256 of each
artifact).  Options may also come from a JSON ``--config`` file whose keys are
the option names with dashes replaced by underscores; flags given on the
command line win.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 insufficient resolution or data.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import traceback
from fractions import Fraction

import numpy as np
import scipy

from . import __version__
from .analysis import classify_spectrum, detect_structure, predict_revivals
from .exceptions import ConfigError, NumericalError, ResolutionError, RevivalError
from .packet import PhaseModel, autocorrelation, build_packet, time_grid
from .spectrum import (
    HydrogenSpectrum,
    QuantumDefectSpectrum,
    StarkSpectrum,
    TabulatedSpectrum,
    tune_field,
)
from .squeezed import FitTarget, evolve_uncertainty, expectations, fit, project
from .stark import (
    FractionalTime,
    direct_amplitudes,
    expansion_coefficients,
    minimal_periods,
    node_structure,
    reconstruct,
    split_parity,
)
from .units import AU_FIELD_V_PER_CM, time_from_si, time_to_si

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_RESOLUTION = 0, 2, 3, 4

_SI_TIME_UNITS = [(1e-9, "ns"), (1e-12, "ps"), (1e-15, "fs")]


def format_time(t_au, units):
    if t_au is None:
        return "undefined"
    if units == "atomic":
        return f"{t_au:.10g} a.u."
    sec = time_to_si(t_au)
    for scale, name in _SI_TIME_UNITS:
        if abs(sec) >= scale:
            return f"{sec / scale:.6g} {name}"
    return f"{sec:.6g} s"


# ---------------------------------------------------------------- argument parsing


def _common(p):
    p.add_argument("--config", help="JSON file with option defaults (flags override)")
    p.add_argument("--units", choices=["atomic", "si"], default="atomic",
                   help="unit system for printed values (default: atomic)")
    p.add_argument("--output-dir", default=".", help="directory for artifacts and the manifest")


def _spectrum_opts(p, default_model="hydrogen", nbar=45.0):
    p.add_argument("--model", choices=["hydrogen", "quantum_defect", "stark", "tabulated"],
                   default=default_model, help="energy-level model")
    p.add_argument("--nbar", type=float, default=nbar, help="expansion center / packet center")
    p.add_argument("--defect", type=float, default=0.0, help="l = 1 quantum defect (quantum_defect model)")
    p.add_argument("--detuning", type=float, default=0.0, help="center detuning (quantum_defect model)")
    p.add_argument("--field", type=float, default=None, help="Stark field in atomic units")
    p.add_argument("--ratio", default=None,
                   help="Stark: choose the field so t_rev^(n)/t_rev^(nk) = r/s (e.g. 1/12)")
    p.add_argument("--table", default=None, help="two-column CSV (n, E_n) for the tabulated model")


def _packet_opts(p, sigma=2.5):
    p.add_argument("--sigma", type=float, default=sigma, help="Gaussian width of |c_n|^2")
    p.add_argument("--window", type=int, default=None, help="half-width of the n window (default ceil(5 sigma))")
    p.add_argument("--sigma-k", type=float, default=None, help="Stark: width in k (default sigma)")
    p.add_argument("--window-k", type=int, default=None, help="Stark: half-width of the k window")


def _phase_opts(p):
    p.add_argument("--phase", choices=["exact", "truncated"], default="exact")
    p.add_argument("--order", type=int, choices=[1, 2, 3], default=3, help="Taylor order for truncated phases")


def _time_opts(p, start=0.0, stop=1.0):
    p.add_argument("--t-start", type=float, default=start)
    p.add_argument("--t-stop", type=float, default=stop)
    p.add_argument("--t-unit", choices=["atomic", "si", "t_cl", "t_rev", "t_sr"], default="t_cl",
                   help="unit of --t-start/--t-stop (default: classical periods)")
    p.add_argument("--samples-per-period", type=int, default=2048,
                   help="samples per classical period")


def build_parser():
    parser = argparse.ArgumentParser(prog="rydrevival",
                                     description="Revival and superrevival analysis of Rydberg wave packets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("timescales", help="classical period, revival and superrevival times")
    _common(p), _spectrum_opts(p)

    p = sub.add_parser("evolve", help="autocorrelation trace as CSV")
    _common(p), _spectrum_opts(p), _packet_opts(p), _phase_opts(p), _time_opts(p)
    p.add_argument("--out", default="trace.csv", help="trace file name inside --output-dir")

    p = sub.add_parser("predict", help="predicted revival and superrevival times")
    _common(p), _spectrum_opts(p)
    p.add_argument("--max-q", type=int, default=8, help="largest fractional-revival denominator")
    p.add_argument("--max-q-sr", type=int, default=12, help="largest superrevival denominator")

    p = sub.add_parser("detect", help="evolve, then detect and match revival peaks")
    _common(p), _spectrum_opts(p), _packet_opts(p), _phase_opts(p), _time_opts(p, 0.0, 1.05)
    p.set_defaults(t_unit="t_rev", samples_per_period=128)

    p = sub.add_parser("tune-field", help="Stark field giving a rational revival-time ratio")
    _common(p)
    p.add_argument("--nbar", type=int, default=24)
    p.add_argument("--ratio", default="1/12", help="target t_rev^(n)/t_rev^(nk) as r/s (< 1/8)")

    p = sub.add_parser("stark-decompose", help="subsidiary-wave expansion at a fraction of t_rev")
    _common(p)
    p.add_argument("--nbar", type=int, default=24)
    p.add_argument("--ratio", default="1/12")
    p.add_argument("--fraction", default="1/2", help="t_frac / t_rev as p/q")
    _packet_opts(p, sigma=2.0)

    p = sub.add_parser("stark-nodes", help="nodes of |A|^2 near half the Stark revival time")
    _common(p)
    p.add_argument("--nbar", type=int, default=24)
    p.add_argument("--ratio", default="1/12")
    p.add_argument("--sector", choices=["odd", "even", "full"], default="odd")
    p.add_argument("--span", type=float, default=1.0, help="half-width of the window in T_cl^(n)")
    p.add_argument("--samples", type=int, default=4097)
    _packet_opts(p, sigma=1.0)
    p.set_defaults(sigma_k=2.0, window=6)

    p = sub.add_parser("squeezed-fit", help="fit a radial squeezed state to a Rydberg orbit")
    _common(p)
    p.add_argument("--nbar", type=float, default=45.0)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--r-out", type=float, default=None, help="outer apsis (default 2 nbar^2)")
    p.add_argument("--orbit", choices=["radial", "kepler"], default="radial")

    p = sub.add_parser("squeezed-evolve", help="uncertainty product of the projected squeezed state")
    _common(p)
    p.add_argument("--nbar", type=float, default=45.0)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--r-out", type=float, default=None)
    p.add_argument("--orbit", choices=["radial", "kepler"], default="radial")
    p.add_argument("--half-width", type=int, default=15, help="projection window half-width in n")
    p.add_argument("--t-stop", type=float, default=3.0, help="end time in classical periods")
    p.add_argument("--samples", type=int, default=193)
    p.add_argument("--out", default="uncertainty.csv")

    p = sub.add_parser("classify", help="revival class of a spectrum")
    _common(p), _spectrum_opts(p)
    return parser


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.pop("command", None)
        unknown = sorted(set(cfg) - set(vars(args)))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        subparser.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- helpers


def _spectrum(args):
    if args.model == "hydrogen":
        return HydrogenSpectrum()
    if args.model == "quantum_defect":
        return QuantumDefectSpectrum({1: args.defect}, detuning=args.detuning)
    if args.model == "stark":
        if args.ratio is not None:
            if args.nbar != int(args.nbar):
                raise ConfigError("--ratio needs an integer --nbar")
            return StarkSpectrum(tune_field(int(args.nbar), args.ratio).field_exact)
        if args.field is None:
            raise ConfigError("the stark model needs --field or --ratio")
        return StarkSpectrum(args.field)
    if args.model == "tabulated":
        if not args.table:
            raise ConfigError("the tabulated model needs --table")
        return TabulatedSpectrum.from_csv(args.table)
    raise ConfigError(f"unknown model {args.model!r}")


def _center(args, spectrum):
    if isinstance(spectrum, TabulatedSpectrum):
        if args.nbar != int(args.nbar):
            raise ConfigError("tabulated spectra need an integer --nbar")
        return int(args.nbar)
    return int(args.nbar) if float(args.nbar).is_integer() else args.nbar


def _to_atomic(value, unit, scales):
    if unit == "atomic":
        return value
    if unit == "si":
        return time_from_si(value)
    scale = {"t_cl": scales.t_cl_n, "t_rev": scales.t_rev_n, "t_sr": scales.t_sr}[unit]
    if scale is None:
        raise ConfigError(f"time unit {unit} is undefined for this spectrum")
    return value * scale


def _phase_model(args, scales):
    return PhaseModel.exact() if args.phase == "exact" else PhaseModel.truncated(scales, args.order)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path, data):
    with open(path, "w", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_manifest(args, artifacts):
    config = {k: v for k, v in vars(args).items() if k != "config"}
    manifest = {
        "command": args.command,
        "config": config,
        "config_file": args.config,
        "versions": {"rydrevival": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "artifacts": {os.path.basename(p): _sha256(p) for p in artifacts},
    }
    path = os.path.join(args.output_dir, f"{args.command}_manifest.json")
    _write_json(path, manifest)
    return path


def _out(args, name):
    os.makedirs(args.output_dir, exist_ok=True)
    return os.path.join(args.output_dir, name)


# ---------------------------------------------------------------- subcommands


def cmd_timescales(args):
    spec = _spectrum(args)
    sc = spec.time_scales(_center(args, spec))
    labels = [("t_cl_n", "T_cl"), ("t_rev_n", "t_rev"), ("t_sr", "t_sr")]
    if isinstance(spec, StarkSpectrum):
        labels += [("t_cl_k", "T_cl^(k)"), ("t_rev_nk", "t_rev^(nk)")]
    for key, label in labels:
        print(f"{label:<11} {format_time(getattr(sc, key), args.units)}")
    path = _out(args, "timescales.json")
    data = sc.to_dict()
    data["si_seconds"] = {k: (None if getattr(sc, k) is None else time_to_si(getattr(sc, k)))
                          for k in sc.NAMES}
    _write_json(path, data)
    return [path]


def cmd_evolve(args):
    spec = _spectrum(args)
    center = _center(args, spec)
    sc = spec.time_scales(center)
    packet = build_packet(spec, args.nbar, args.sigma, args.window, sigma_k=args.sigma_k,
                          window_k=args.window_k)
    t0, t1 = _to_atomic(args.t_start, args.t_unit, sc), _to_atomic(args.t_stop, args.t_unit, sc)
    t = time_grid(t0, t1, sc.t_cl_n, args.samples_per_period)
    trace = autocorrelation(spec, packet, _phase_model(args, sc), t)
    path = _out(args, args.out)
    trace.to_csv(path)
    print(f"wrote {t.size} samples to {path}; max |A|^2 after t=0: "
          f"{float(trace.intensity[1:].max()) if t.size > 1 else float('nan'):.6f}")
    return [path]


def cmd_predict(args):
    spec = _spectrum(args)
    sc = spec.time_scales(_center(args, spec))
    report = predict_revivals(sc, args.max_q, args.max_q_sr)
    print(report.to_table(args.units))
    path = _out(args, "predictions.json")
    _write_json(path, report.to_dict())
    return [path]


def cmd_detect(args):
    spec = _spectrum(args)
    center = _center(args, spec)
    sc = spec.time_scales(center)
    packet = build_packet(spec, args.nbar, args.sigma, args.window, sigma_k=args.sigma_k,
                          window_k=args.window_k)
    t0, t1 = _to_atomic(args.t_start, args.t_unit, sc), _to_atomic(args.t_stop, args.t_unit, sc)
    t = time_grid(t0, t1, sc.t_cl_n, args.samples_per_period)
    trace = autocorrelation(spec, packet, _phase_model(args, sc), t)
    report = detect_structure(trace, sc)
    matched = [(report.predictions[pi], report.detections[di]) for pi, di in report.matches]
    print(f"{len(report.detections)} peaks detected, {len(matched)} predictions matched")
    for p, d in matched:
        lp = "n/a" if d.local_period is None else format_time(d.local_period, args.units)
        print(f"  {p.kind:<24} {str(p.fraction or ''):>6}  t={format_time(d.time, args.units)}  "
              f"|A|^2={d.height:.4f}  local period={lp}")
    path = _out(args, "detection.json")
    _write_json(path, report.to_dict())
    return [path]


def cmd_tune_field(args):
    tuning = tune_field(args.nbar, args.ratio)
    if args.units == "si":
        print(f"F = {tuning.field_v_per_cm:.6g} V/cm  (F_c = {tuning.critical_field * AU_FIELD_V_PER_CM:.6g} V/cm)")
    else:
        print(f"F = {tuning.field:.10g} a.u. = {tuning.field_exact}  (F_c = {tuning.critical_field:.10g} a.u.)")
    path = _out(args, "field.json")
    _write_json(path, tuning.to_dict())
    return [path]


def _stark_setup(args):
    tuning = tune_field(args.nbar, args.ratio)
    spec = StarkSpectrum(tuning.field_exact)
    return tuning, spec, spec.time_scales(args.nbar)


def cmd_stark_decompose(args):
    tuning, spec, sc = _stark_setup(args)
    tf = FractionalTime.from_revival_fraction(args.fraction, tuning.ratio, sc)
    periods = minimal_periods(tf, tuning.ratio)
    expansion = expansion_coefficients(tf, tuning.ratio, periods)
    packet = build_packet(spec, args.nbar, args.sigma, args.window, sigma_k=args.sigma_k,
                          window_k=args.window_k)
    err = float(np.max(np.abs(reconstruct(packet, expansion, tf.time)
                              - direct_amplitudes(spec, packet, sc, tf.time))))
    print(f"t_frac = {args.fraction} t_rev = {format_time(tf.time, args.units)}; "
          f"periods (l1, l2, l1', l2') = {periods.as_tuple()}")
    for name, sec in expansion.sectors.items():
        print(f"  {name:<4} sector: significant terms {sec.significant()}")
    print(f"max reconstruction error {err:.3e}")
    data = expansion.to_dict()
    data["max_reconstruction_error"] = err
    path = _out(args, "expansion.json")
    _write_json(path, data)
    return [path]


def cmd_stark_nodes(args):
    tuning, spec, sc = _stark_setup(args)
    packet = build_packet(spec, args.nbar, args.sigma, args.window, sigma_k=args.sigma_k,
                          window_k=args.window_k)
    if args.sector != "full":
        packet = dict(zip(("odd", "even"), split_parity(packet)))[args.sector].as_packet()
    center = sc.t_rev_nk * float(tuning.ratio.numerator) / 2  # half of t_rev = r t_rev^(nk)
    t = np.linspace(center - args.span * sc.t_cl_n, center + args.span * sc.t_cl_n, args.samples)
    trace = autocorrelation(spec, packet, PhaseModel.truncated(sc, 2), t)
    nodes = node_structure(trace, sc.t_cl_n)
    rel = nodes.relative_spacing_error
    print(f"{args.sector} sector: {nodes.times.size} nodes; spacing / (T_cl^(n)/2) = "
          f"{'n/a' if nodes.spacing is None else f'{nodes.spacing / nodes.half_period:.6f}'}")
    data = nodes.to_dict()
    data["times_relative_to_half_revival"] = (nodes.times - center).tolist()
    data["sector"] = args.sector
    data["relative_spacing_error"] = rel
    path = _out(args, "nodes.json")
    _write_json(path, data)
    return [path]


def _target(args):
    return FitTarget(args.nbar, args.l, args.r_out, args.orbit)


def cmd_squeezed_fit(args):
    target = _target(args)
    params = fit(target)
    ex = expectations(params, target.l)
    print(f"alpha = {params.alpha:.12g}, gamma0 = {params.gamma0:.12g}, gamma1 = {params.gamma1:g}")
    print(f"<r> = {ex.r:.10g} (r_out = {target.outer_radius:.10g}), <H> = {ex.energy:.10g} "
          f"(target {target.energy:.10g}), Dr*Dp_r = {ex.product:.8f}")
    path = _out(args, "squeezed.json")
    _write_json(path, {"target": target.to_dict(), "params": params.to_dict(),
                       "expectations": {"r": ex.r, "delta_r": ex.delta_r, "p_r": ex.p_r,
                                        "delta_p_r": ex.delta_p, "product": ex.product,
                                        "energy": ex.energy}})
    return [path]


def cmd_squeezed_evolve(args):
    target = _target(args)
    params = fit(target)
    packet = project(params, l=target.l, nbar=target.nbar, half_width=args.half_width)
    t_cl = HydrogenSpectrum().time_scales(target.nbar).t_cl_n
    t = np.linspace(0.0, args.t_stop * t_cl, args.samples)
    series = evolve_uncertainty(packet, t, l=target.l)
    path = _out(args, args.out)
    series.to_csv(path)
    try:
        period = f"{series.oscillation_period() / t_cl:.4f} T_cl"
    except ResolutionError:
        period = "n/a"
    print(f"captured norm {packet.metadata['captured_norm']:.12f}; min Dr*Dp_r = {series.product.min():.8f}; "
          f"oscillation period {period}")
    return [path]


def cmd_classify(args):
    spec = _spectrum(args)
    cls = classify_spectrum(spec, _center(args, spec))
    print(cls.verdict)
    path = _out(args, "classification.json")
    _write_json(path, cls.to_dict())
    return [path]


COMMANDS = {
    "timescales": cmd_timescales,
    "evolve": cmd_evolve,
    "predict": cmd_predict,
    "detect": cmd_detect,
    "tune-field": cmd_tune_field,
    "stark-decompose": cmd_stark_decompose,
    "stark-nodes": cmd_stark_nodes,
    "squeezed-fit": cmd_squeezed_fit,
    "squeezed-evolve": cmd_squeezed_evolve,
    "classify": cmd_classify,
}


def _origin(exc):
    tb = exc.__traceback__
    module = "rydrevival"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("rydrevival"):
            module = name
        tb = tb.tb_next
    return module


def exit_code_for(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ResolutionError):
        return EXIT_RESOLUTION
    if isinstance(exc, NumericalError):
        return EXIT_NUMERIC
    return EXIT_NUMERIC


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        artifacts = COMMANDS[args.command](args)
        write_manifest(args, artifacts)
    except RevivalError as exc:
        print(f"error [{_origin(exc)}]: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"error [{_origin(exc)}]: numerical failure: {exc}", file=sys.stderr)
        if os.environ.get("RYDREVIVAL_DEBUG"):
            traceback.print_exc()
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
