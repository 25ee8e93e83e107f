"""Command-line front end.

Every subcommand writes its dataset plus a ``*.meta.json`` record with the
parameters, seed and conventions needed to regenerate it.  Rabi frequencies
are given as ordinary frequencies in kHz (``Omega/2pi``); the dephasing rate
``Gamma`` is given in kHz as a rate (1 kHz = 1000 1/s).

Exit status: 0 success, 1 runtime or numerical failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import NumericalFailure, gate_equivalence, ket, projector, stokes
from .experiments import (SCHEMES, dephasing_curve_and_fit, khz, metadata, run_sweep,
                          scheme_comparison, table1, write_csv, write_json, SweepSpec,
                          threshold_ratio)
from .dynamics import NoiseParams, evolve_state
from .schemes import (NNGQCParams, auxiliary_path, dynamical_phase, gate_sequence,
                      geometric_phase)
from .tomography import (ShotConfig, SpamModel, chi_ideal, process_fidelity, qpt, qst, spam_apply,
                         stokes_errors)
from .twoqubit import TwoIonParams, compare_full_effective, zeno_trapping

DEFAULTS = {
    "out": "results",
    "format": "csv",
    "seed": 0,
    "shots": None,
    "exact": False,
    "omega0_khz": 67.9,
    "gamma_khz": 0.0,
    "spam_p": 1.0,
    "scheme": "nngqc",
    "gate": "u1",
    "input": "g",
    "kind": "detuning",
    "min": None,
    "max": None,
    "points": 41,
    "max_ratio": 0.05,
    "fit": False,
    "order": 21,
    "g": 50.0,
    "delta": 10.0,
    "omega_eff": 1.0,
    "n_max": 3,
    "phi1_bar": 0.0,
    "phi2_bar": 0.0,
}

# per-subcommand overrides of the global defaults
COMMAND_DEFAULTS = {
    "dephasing": {"omega0_khz": 100.0},
    "compare": {"gamma_khz": 0.81, "spam_p": 0.9628},
    "tomo": {"gamma_khz": 0.81, "spam_p": 0.9628},
}

# options each subcommand depends on; only these go into its metadata record
RELEVANT = {
    "gate": ("omega0_khz", "scheme", "gate"),
    "sweep": ("omega0_khz", "gamma_khz", "gate", "kind", "min", "max", "points", "input", "format"),
    "dephasing": ("omega0_khz", "scheme", "gate", "max_ratio", "points", "fit", "input", "format"),
    "table1": ("omega0_khz", "gate", "order", "format"),
    "compare": ("omega0_khz", "gamma_khz", "spam_p", "gate", "shots", "seed", "exact", "format"),
    "tomo": ("omega0_khz", "gamma_khz", "spam_p", "scheme", "gate", "shots", "seed", "exact",
             "format"),
    "twoqubit": ("omega_eff", "g", "delta", "n_max", "phi1_bar", "phi2_bar", "format"),
}

SWEEP_RANGES = {"rabi": (-0.2, 0.2), "detuning": (-20.0, 20.0)}


class UsageError(ValueError):
    pass


def _common(p: argparse.ArgumentParser, *flags: str) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file of option values (flags override)")
    p.add_argument("--out", default=S, help="output directory (default: results)")
    p.add_argument("--format", choices=("csv", "json"), default=S, help="dataset format")
    if "seed" in flags:
        p.add_argument("--seed", type=int, default=S, help="random seed (default 0)")
        p.add_argument("--shots", type=int, default=S, help="shots per measurement setting")
        p.add_argument("--exact", action="store_true", default=S,
                       help="ignore --shots and use exact probabilities")
    if "omega0" in flags:
        p.add_argument("--omega0-khz", type=float, default=S,
                       help="peak Rabi frequency Omega0/2pi in kHz (default 67.9)")
    if "gamma" in flags:
        p.add_argument("--gamma-khz", type=float, default=S, help="dephasing rate in kHz")
    if "spam" in flags:
        p.add_argument("--spam-p", type=float, default=S, help="ground-state preparation fidelity")
    if "scheme" in flags:
        p.add_argument("--scheme", type=str.lower, choices=[s.lower() for s in SCHEMES], default=S)
    if "gate" in flags:
        p.add_argument("--gate", type=str.lower, choices=("u1", "h", "hadamard"), default=S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nngqc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("gate", help="pulse table, duration and phase diagnostics of one gate")
    _common(p, "omega0", "scheme", "gate")

    p = sub.add_parser("sweep", help="output-state fidelity versus a systematic error")
    _common(p, "omega0", "gate", "gamma")
    p.add_argument("--kind", choices=("rabi", "detuning"), default=S)
    p.add_argument("--min", type=float, default=S, help="grid start (fraction, or kHz)")
    p.add_argument("--max", type=float, default=S, help="grid end (fraction, or kHz)")
    p.add_argument("--points", type=int, default=S)
    p.add_argument("--input", choices=("g", "e", "+", "-"), default=S)

    p = sub.add_parser("dephasing", help="infidelity versus Gamma/Omega0, optional exponential fit")
    _common(p, "omega0", "scheme", "gate")
    p.add_argument("--max-ratio", type=float, default=S)
    p.add_argument("--points", type=int, default=S)
    p.add_argument("--fit", action="store_true", default=S)
    p.add_argument("--input", choices=("g", "e", "+", "-"), default=S)

    p = sub.add_parser("table1", help="Gaussian-averaged infidelities for random systematic errors")
    _common(p, "omega0", "gate")
    p.add_argument("--order", type=int, default=S, help="quadrature order")

    p = sub.add_parser("compare", help="process fidelities of all schemes with dephasing and SPAM")
    _common(p, "seed", "omega0", "gamma", "spam", "gate")

    p = sub.add_parser("tomo", help="state and process tomography of one gate")
    _common(p, "seed", "omega0", "gamma", "spam", "scheme", "gate")

    p = sub.add_parser("twoqubit", help="full versus effective two-ion dynamics")
    _common(p)
    p.add_argument("--g", type=float, default=S, help="sideband coupling, units of omega_eff")
    p.add_argument("--delta", type=float, default=S, help="detuning, units of omega_eff")
    p.add_argument("--omega-eff", type=float, default=S)
    p.add_argument("--n-max", type=int, default=S)
    p.add_argument("--phi1-bar", type=float, default=S)
    p.add_argument("--phi2-bar", type=float, default=S)
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Defaults < subcommand defaults < config file < explicit flags."""
    opts = dict(DEFAULTS)
    opts.update(COMMAND_DEFAULTS.get(args.command, {}))
    given = vars(args).copy()
    config = given.pop("config", None)
    if config is not None:
        try:
            data = json.loads(Path(config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid config file {config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(k.replace("-", "_") for k in data) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        opts.update({k.replace("-", "_"): v for k, v in data.items()})
    opts.update(given)
    opts["_out_given"] = "out" in given or (config is not None and "out" in data)
    if opts["shots"] is not None and opts["shots"] < 1:
        raise UsageError("--shots must be positive")
    if opts["omega0_khz"] is None or not opts["omega0_khz"] > 0:
        raise UsageError("--omega0-khz must be positive")
    if opts["gamma_khz"] < 0:
        raise UsageError("--gamma-khz must be non-negative")
    if opts["points"] < 2:
        raise UsageError("--points must be at least 2")
    return opts


def _dataset(out: Path, name: str, header, rows, opts: dict) -> Path:
    if opts["format"] == "csv":
        return write_csv(out / f"{name}.csv", header, rows)
    records = [dict(zip(header, (float(v) if isinstance(v, (float, np.floating)) else v
                                 for v in row))) for row in rows]
    return write_json(out / f"{name}.json", records)


def _meta(out: Path, name: str, command: str, opts: dict, extra: dict | None = None) -> Path:
    params = {k: opts[k] for k in RELEVANT[command]}
    seed = opts["seed"] if "seed" in RELEVANT[command] else None
    record = metadata(command, params, seed)
    if extra:
        record.update(extra)
    return write_json(out / f"{name}.meta.json", record)


def _shots(opts: dict) -> ShotConfig | None:
    if opts["exact"] or opts["shots"] is None:
        return None
    return ShotConfig(int(opts["shots"]), int(opts["seed"]))


def _gate_name(g: str) -> str:
    return "U1" if g.lower() == "u1" else "H"


def cmd_gate(opts: dict) -> int:
    omega0 = khz(opts["omega0_khz"])
    scheme, gate = opts["scheme"].upper(), _gate_name(opts["gate"])
    seq = gate_sequence(scheme, gate, omega0)
    u = seq.nominal_unitary()
    report = {
        "scheme": scheme,
        "gate": gate,
        "omega0_rad_s": omega0,
        "segments": [{"duration_us": s.duration * 1e6, "area_over_pi": s.area / np.pi,
                      "phase_over_pi": s.phase / np.pi} for s in seq.segments],
        "total_area_over_pi": sum(s.area for s in seq.segments) / np.pi,
        "duration_us": seq.duration * 1e6,
        "propagator_re": np.real(u).tolist(),
        "propagator_im": np.imag(u).tolist(),
        "gate_equivalence": gate_equivalence(u, seq.target),
    }
    if scheme == "NNGQC":
        params = NNGQCParams.u1(omega0) if gate == "U1" else NNGQCParams.hadamard(omega0)
        path = auxiliary_path(params)
        report["geometric_phase_gamma"] = geometric_phase(path)
        report["dynamical_phase"] = dynamical_phase(seq, path)

    print(f"{scheme} {gate} gate, Omega0/2pi = {opts['omega0_khz']:g} kHz")
    print(f"{'segment':>8} {'duration (us)':>14} {'area/pi':>9} {'phase/pi':>9}")
    for i, s in enumerate(report["segments"], 1):
        print(f"{i:>8} {s['duration_us']:>14.4f} {s['area_over_pi']:>9.4f} {s['phase_over_pi']:>9.4f}")
    print(f"segments: {len(seq.segments)}   total area: {report['total_area_over_pi']:.4f} pi")
    print(f"duration: {report['duration_us']:.3f} us")
    print("propagator:")
    for row in u:
        print("  " + "  ".join(f"{z.real:+.6f}{z.imag:+.6f}j" for z in row))
    print(f"gate equivalence: {report['gate_equivalence']:.15f}")
    if "geometric_phase_gamma" in report:
        print(f"geometric phase gamma: {report['geometric_phase_gamma']:.12f} "
              f"(pi/4 = {np.pi / 4:.12f})")
        print(f"dynamical phase: {report['dynamical_phase']:.3e}")
    if opts.get("_out_given"):
        out = _outdir(opts)
        name = f"gate_{scheme.lower()}_{gate.lower()}"
        write_json(out / f"{name}.json", report)
        _meta(out, name, "gate", opts)
    return 0


def cmd_sweep(opts: dict) -> int:
    kind, gate = opts["kind"], _gate_name(opts["gate"])
    lo, hi = SWEEP_RANGES[kind]
    lo = lo if opts["min"] is None else opts["min"]
    hi = hi if opts["max"] is None else opts["max"]
    grid = np.linspace(lo, hi, int(opts["points"]))
    native = grid if kind == "rabi" else khz(1) * grid
    omega0, gamma = khz(opts["omega0_khz"]), 1e3 * opts["gamma_khz"]
    fids = {s: run_sweep(SweepSpec(s, gate, kind, tuple(native), opts["input"], omega0, gamma))
            for s in SCHEMES}
    out = _outdir(opts)
    name = f"sweep_{kind}_{gate.lower()}"
    rows = [[float(x)] + [float(fids[s][i]) for s in SCHEMES] for i, x in enumerate(grid)]
    path = _dataset(out, name, ["error_value", "fidelity_nngqc", "fidelity_ngqc", "fidelity_dqc"],
                    rows, opts)
    _meta(out, name, "sweep", opts,
          {"error_unit": "fraction of Omega0" if kind == "rabi" else "kHz (Delta/2pi)"})
    print(f"wrote {path}")
    return 0


def cmd_dephasing(opts: dict) -> int:
    if not 0 < opts["max_ratio"] <= 0.1:
        raise UsageError("--max-ratio must lie in (0, 0.1]")
    ratios = np.linspace(0.0, opts["max_ratio"], int(opts["points"]))
    omega0 = khz(opts["omega0_khz"])
    curve, fit = dephasing_curve_and_fit(ratios, opts["scheme"].upper(), _gate_name(opts["gate"]),
                                         opts["input"], omega0)
    out = _outdir(opts)
    name = "dephasing"
    path = _dataset(out, name, ["gamma_over_omega0", "infidelity"],
                    [[float(r), float(e)] for r, e in zip(curve.ratios, curve.infidelity)], opts)
    _meta(out, name, "dephasing", opts)
    print(f"wrote {path}")
    if opts["fit"]:
        report = {"a": fit.a, "b": fit.b, "residual": fit.residual,
                  "crossing_1e-2_fit": fit.crossing(1e-2),
                  "crossing_1e-2_simulated": threshold_ratio(
                      1e-2, scheme=opts["scheme"].upper(), gate=_gate_name(opts["gate"]),
                      input_state=opts["input"], omega0=omega0),
                  "grid": [float(r) for r in ratios]}
        write_json(out / "dephasing_fit.json", report)
        _meta(out, "dephasing_fit", "dephasing", opts)
        print(f"fit: a = {fit.a:.4f}, b = {fit.b:.4f}, residual = {fit.residual:.2e}")
        print(f"infidelity 1e-2 at Gamma/Omega0 = {report['crossing_1e-2_simulated']:.4e}")
    return 0


def cmd_table1(opts: dict) -> int:
    rows = table1(_gate_name(opts["gate"]), khz(opts["omega0_khz"]), order=int(opts["order"]))
    out = _outdir(opts)
    header = ["error_kind", "sigma", "nngqc_pct", "ngqc_pct", "dqc_pct"]
    data = [[r.error_kind, r.label] + [float(r.infidelity_pct[s]) for s in SCHEMES] for r in rows]
    path = _dataset(out, "table1", header, data, opts)
    _meta(out, "table1", "table1", opts)
    print(f"{'error':<10} {'sigma':<24} {'NNGQC %':>8} {'NGQC %':>8} {'DQC %':>8}")
    for r in rows:
        print(f"{r.error_kind:<10} {r.label:<24} "
              + " ".join(f"{r.infidelity_pct[s]:>8.3f}" for s in SCHEMES))
    print(f"wrote {path}")
    return 0


def cmd_compare(opts: dict) -> int:
    spam = SpamModel(float(opts["spam_p"]))
    shots = _shots(opts)
    res = scheme_comparison(spam, 1e3 * opts["gamma_khz"], shots, _gate_name(opts["gate"]),
                            khz(opts["omega0_khz"]))
    out = _outdir(opts)
    path = _dataset(out, "compare", ["scheme", "fidelity_raw", "fidelity_calibrated"],
                    [[r.scheme, r.raw, r.calibrated] for r in res], opts)
    _meta(out, "compare", "compare", opts,
          {"shot_allocation": "n_shots per population measurement, each setting separately"})
    for r in res:
        print(f"{r.scheme:<6} raw {r.raw:.4f}  calibrated {r.calibrated:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_tomo(opts: dict) -> int:
    scheme, gate = opts["scheme"].upper(), _gate_name(opts["gate"])
    seq = gate_sequence(scheme, gate, khz(opts["omega0_khz"]))
    noise = NoiseParams(gamma=1e3 * opts["gamma_khz"])
    spam = SpamModel(float(opts["spam_p"]))
    shots = _shots(opts)

    def channel(rho):
        return evolve_state(rho, seq, noise)

    out = _outdir(opts)
    name = f"tomo_{scheme.lower()}_{gate.lower()}"
    ideal = chi_ideal(seq.target)
    raw = qpt(channel, shots, spam, calibrate=False)
    cal = qpt(channel, shots, spam, calibrate=True)
    raw.to_json(out / f"{name}_chi_raw.json")
    cal.to_json(out / f"{name}_chi_calibrated.json")

    rows = []
    for i, label in enumerate(("g", "e", "+", "-")):
        rho_out = channel(spam_apply(projector(ket(label)), spam))
        s = qst(rho_out, shots, key=(100, i))
        ds = stokes_errors(rho_out, shots.n_shots) if shots else np.zeros(4)
        s_id = stokes(projector(seq.target @ ket(label)))
        rows.append([label, s.s1, s.s2, s.s3, float(ds[1]), float(ds[2]), float(ds[3]),
                     s_id.s1, s_id.s2, s_id.s3])
    path = _dataset(out, f"{name}_stokes",
                    ["input", "S1", "S2", "S3", "dS1", "dS2", "dS3", "S1_ideal", "S2_ideal", "S3_ideal"],
                    rows, opts)
    summary = {"fidelity_raw": process_fidelity(raw, ideal),
               "fidelity_calibrated": process_fidelity(cal, ideal),
               "physicality_raw": raw.physicality()}
    write_json(out / f"{name}_summary.json", summary)
    _meta(out, name, "tomo", opts)
    print(f"{scheme} {gate}: process fidelity raw {summary['fidelity_raw']:.4f}, "
          f"calibrated {summary['fidelity_calibrated']:.4f}")
    print(f"wrote {path}")
    return 0


def cmd_twoqubit(opts: dict) -> int:
    p = TwoIonParams(float(opts["omega_eff"]), float(opts["g"]) * opts["omega_eff"],
                     float(opts["delta"]) * opts["omega_eff"], float(opts["phi1_bar"]),
                     float(opts["phi2_bar"]), int(opts["n_max"]))
    cmp = compare_full_effective(p)
    trap = zeno_trapping(p)
    out = _outdir(opts)
    name = "twoqubit"
    rows = [list(map(float, r)) for r in zip(cmp.times, cmp.p_full_eg0, cmp.p_full_ge0,
                                             cmp.p_eff_psi2, cmp.p_eff_psi3, cmp.leakage)]
    path = _dataset(out, name, ["t_s", "P_full_eg0", "P_full_ge0", "P_eff_psi2", "P_eff_psi3",
                                "leakage"], rows, opts)
    summary = {"max_deviation": cmp.max_deviation, "max_leakage": float(cmp.leakage.max()),
               "norm_error": cmp.norm_error, "ee0_survival_min": trap.minimum,
               "ee0_survival_final": trap.final, "hierarchy": p.hierarchy()}
    write_json(out / f"{name}_summary.json", summary)
    _meta(out, name, "twoqubit", opts)
    print(f"max |P_full(ge0) - P_eff(psi3)| = {cmp.max_deviation:.4e}")
    print(f"min |ee0> survival = {trap.minimum:.6f}")
    print(f"wrote {path}")
    return 0


COMMANDS = {"gate": cmd_gate, "sweep": cmd_sweep, "dephasing": cmd_dephasing,
            "table1": cmd_table1, "compare": cmd_compare, "tomo": cmd_tomo,
            "twoqubit": cmd_twoqubit}


def _outdir(opts: dict) -> Path:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except (UsageError, ValueError) as exc:
        print(f"nngqc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, OSError, RuntimeError) as exc:
        print(f"nngqc {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
