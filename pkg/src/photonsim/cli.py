"""Command-line front end: one subcommand per experiment, CSV or JSON out.

Exit status is 0 on success, 2 for bad arguments, 1 for anything else.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import math
import os
import sys
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import chsh, correlation_sweep, degree_of_correlation, impact_chisquare, run_length_statistics
from .experiments import (
    MZConfig,
    RTOConfig,
    SlitGeometry,
    build_measurement_state,
    double_slit_intensity,
    edc_sweep,
    run_delayed_choice,
    run_mach_zehnder,
    run_rto,
    run_single_photon_collapse,
    sample_impacts,
    subsystem_interference_probe,
)
from .optics import PhaseSetting
from .qcore import QuantumError, born_probabilities, partial_trace, purity
from .trials import U64_MAX

SWEEP_POINTS = 16


class UsageError(Exception):
    pass


def _manifest(args: argparse.Namespace) -> dict[str, Any]:
    params = {k: v for k, v in vars(args).items() if k not in ("command", "seed", "format", "out", "handler")}
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        stamp = dt.datetime.fromtimestamp(int(epoch), tz=dt.timezone.utc)
    else:
        stamp = dt.datetime.now(tz=dt.timezone.utc).replace(microsecond=0)
    return {
        "subcommand": args.command,
        "parameters": params,
        "seed": args.seed,
        "outputs": [args.out or "-"],
        "version": __version__,
        "timestamp": stamp.isoformat(),
    }


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_table(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        writer.writerow(list(rows[0]))
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def render_csv(manifest: dict[str, Any], tables: dict[str, list[dict[str, Any]]]) -> str:
    """Manifest as a leading '#' comment line, then one CSV table per section."""
    parts = [f"# manifest: {json.dumps(manifest)}\n"]
    if len(tables) == 1:
        parts.append(_csv_table(next(iter(tables.values()))))
    else:
        blocks = [f"# section: {name}\n" + _csv_table(rows) for name, rows in tables.items()]
        parts.append("\n".join(blocks))
    return "".join(parts)


def render_json(manifest: dict[str, Any], doc: dict[str, Any]) -> str:
    ordered = {k: doc[k] for k in ("config", "analytic", "trials", "seed", "n_trials") if k in doc}
    ordered.update({k: v for k, v in doc.items() if k not in ordered})
    ordered["manifest"] = manifest
    return json.dumps(ordered, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _sweep_deg(points: int = SWEEP_POINTS) -> np.ndarray:
    return np.linspace(0.0, 360.0, points)


def _doc(config, analytic, seed, n_trials, trials=None, **extra) -> dict[str, Any]:
    d = {"config": config, "analytic": analytic}
    if trials is not None:
        d["trials"] = trials
    d["seed"] = seed
    d["n_trials"] = n_trials
    d.update(extra)
    return d


# --- subcommands ------------------------------------------------------------
# Each returns (tables for CSV, document for JSON).

def cmd_mz(args):
    if args.sweep:
        settings = [(float(d), 0.0) for d in _sweep_deg()]
    else:
        settings = [(args.phi1_deg, args.phi2_deg)]
    rows, analytic, trial_docs = [], [], []
    for i, (p1, p2) in enumerate(settings):
        config = MZConfig(PhaseSetting.degrees(p1), PhaseSetting.degrees(p2), args.bs2)
        result = run_mach_zehnder(config, trials=args.trials, seed=args.seed, stream=f"mz/{i}")
        row = {"phase_deg": p1 - p2, "P_D1": result.analytic["D1"], "P_D2": result.analytic["D2"]}
        if args.trials:
            counts = result.trials.counts()
            row["P_D1_sampled"] = counts["D1"] / args.trials
            row["P_D2_sampled"] = counts["D2"] / args.trials
            trial_docs.append(result.trials.to_records())
        rows.append(row)
        analytic.append({"config": config.to_dict(), **result.analytic})
    config = {"phi1_deg": args.phi1_deg, "phi2_deg": args.phi2_deg, "bs2_present": args.bs2, "sweep": args.sweep}
    doc = _doc(config, analytic if args.sweep else analytic[0], args.seed, args.trials,
               (trial_docs if args.sweep else trial_docs[0]) if args.trials else None)
    return {"mz": rows}, doc


def cmd_delayed_choice(args):
    result = run_delayed_choice(PhaseSetting.degrees(args.phi_deg), args.trials, args.seed)
    inserted = result.trials.settings.astype(bool)
    rows = []
    for flag, key in ((True, "bs2_inserted"), (False, "bs2_absent")):
        sub = result.trials.subset(inserted == flag)
        n = len(sub)
        counts = sub.counts()
        rows.append({
            "phase_deg": args.phi_deg, "bs2_inserted": flag, "n": n,
            "P_D1": result.analytic[key]["D1"], "P_D2": result.analytic[key]["D2"],
            "P_D1_sampled": counts["D1"] / n if n else float("nan"),
            "P_D2_sampled": counts["D2"] / n if n else float("nan"),
        })
    doc = result.to_dict()
    return {"delayed_choice": rows}, doc


def cmd_edc(args):
    results = edc_sweep(PhaseSetting.degrees(args.phi_deg), args.delays)
    rows = [{"delay_fraction": r.metadata["config"]["delay_fraction"],
             "P_D1": r.analytic["D1"], "P_D2": r.analytic["D2"]} for r in results]
    analytic = [{"delay_fraction": r.metadata["config"]["delay_fraction"], **r.analytic,
                 "subwave_weights": r.derived["subwave_weights"]} for r in results]
    doc = _doc({"phase_deg": args.phi_deg, "delays": args.delays}, analytic, args.seed, 0)
    return {"edc": rows}, doc


def cmd_rto(args):
    if args.sweep:
        degs = _sweep_deg()
        rows = correlation_sweep(np.radians(degs), trials=args.trials, seed=args.seed,
                                 phiA=math.radians(args.phia_deg))
        for row, deg in zip(rows, degs):
            row["phase_diff_deg"] = float(deg)
        doc = _doc({"phiA_deg": args.phia_deg, "sweep": True}, rows, args.seed, args.trials)
        return {"rto": rows}, doc
    result = run_rto(RTOConfig(PhaseSetting.degrees(args.phia_deg), PhaseSetting.degrees(args.phib_deg)),
                     trials=args.trials, seed=args.seed)
    row = {"phase_diff_deg": args.phib_deg - args.phia_deg}
    row.update({f"P_{k.replace(',', '')}": v for k, v in result.analytic.items()})
    row["C_analytic"] = degree_of_correlation(result).correlation
    if args.trials:
        sampled = degree_of_correlation(result.trials)
        row["C_sampled"] = sampled.correlation
        row["stderr"] = sampled.standard_error
    doc = result.to_dict()
    return {"rto": [row]}, doc


def cmd_chsh(args):
    res = chsh(*(math.radians(v) for v in (args.a, args.a2, args.b, args.b2)), trials=args.trials, seed=args.seed)
    rows = [{"term": k, "value": v} for k, v in res.correlations.items()]
    rows.append({"term": "S", "value": res.S})
    rows.append({"term": "lhv_bound", "value": res.lhv_bound})
    if res.standard_error is not None:
        rows.append({"term": "S_stderr", "value": res.standard_error})
    config = {"a_deg": args.a, "a2_deg": args.a2, "b_deg": args.b, "b2_deg": args.b2}
    return {"chsh": rows}, _doc(config, res.to_dict(), args.seed, args.trials)


def cmd_measure(args):
    state = build_measurement_state()
    joint = born_probabilities(state)
    joint_rows = [{"photon": p, "detector": d, "probability": v} for (p, d), v in joint.items()]
    reduced = {"photon": partial_trace(state, ["photon"]), "detector": partial_trace(state, ["detector"])}
    op_rows = []
    for name, rho in reduced.items():
        for i in range(2):
            for j in range(2):
                z = complex(rho.matrix[i, j])
                op_rows.append({"subsystem": name, "row": i, "col": j, "re": z.real, "im": z.imag})
    purity_rows = [{"subsystem": name, "purity": purity(rho)} for name, rho in reduced.items()]
    probe_rows = []
    for deg in _sweep_deg():
        ph = subsystem_interference_probe(state, "photon", PhaseSetting.degrees(deg))
        de = subsystem_interference_probe(state, "detector", PhaseSetting.degrees(deg))
        probe_rows.append({"phase_deg": float(deg), "photon_P_D1": ph[0], "photon_P_D2": ph[1],
                           "detector_P_D1": de[0], "detector_P_D2": de[1]})
    tables = {"joint": joint_rows, "reduced_operators": op_rows, "purity": purity_rows, "probe": probe_rows}
    analytic = {"/".join(k): v for k, v in joint.items()}
    doc = _doc({}, analytic, args.seed, 0, reduced_operators=op_rows, purity=purity_rows, probe=probe_rows)
    return tables, doc


def cmd_collapse(args):
    result = run_single_photon_collapse(args.trials, args.seed)
    clicks = (result.trials.outcomes == 0)  # column per detector, index 0 = click
    per_trial = clicks.sum(axis=1)
    row = {
        "n_trials": args.trials,
        "n_D1": int(clicks[:, 0].sum()), "n_D2": int(clicks[:, 1].sum()),
        "n_both": int(np.count_nonzero(per_trial == 2)), "n_neither": int(np.count_nonzero(per_trial == 0)),
        "P_D1": result.analytic["D1"], "P_D2": result.analytic["D2"],
        "P_vacuum_unclicked": min(result.derived["unclicked_vacuum_probability"].values()),
    }
    return {"collapse": [row]}, result.to_dict()


def cmd_double_slit(args):
    geometry = SlitGeometry(args.slits, args.slit_sep_wl, args.slit_width_wl, 1.0, args.screen_dist_wl)
    x = geometry.screen(args.points, args.half_width_wl)
    intensity = double_slit_intensity(x, geometry)
    rows = [{"x_wl": float(xi), "intensity": float(v)} for xi, v in zip(x, intensity)]
    extra = {}
    if args.impacts:
        pos = sample_impacts(x, intensity, args.impacts, args.seed)
        counts = np.bincount(np.searchsorted(x, pos), minlength=x.size)
        for row, c in zip(rows, counts):
            row["impacts"] = int(c)
        extra["impacts"] = pos.tolist()
        if args.impacts >= 100:
            chi2, p, dof = impact_chisquare(pos, x, intensity)
            extra["chisquare"] = {"chi2": chi2, "p_value": p, "dof": dof}
    doc = _doc({**geometry.to_dict(), "points": args.points}, {"x": x.tolist(), "intensity": intensity.tolist()},
               args.seed, args.impacts, **extra)
    return {"double_slit": rows}, doc


def cmd_runs(args):
    result = run_mach_zehnder(MZConfig(bs2_present=False), trials=args.trials, seed=args.seed)
    labels = result.trials.side_labels("detector")
    stats = run_length_statistics(labels, args.k, "D1")
    row = {"trials": args.trials, **stats.to_dict()}
    return {"runs": [row]}, _doc({"k": args.k, "bs2_present": False}, stats.to_dict(), args.seed, args.trials)


# --- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64 - 1], got {v}")
    return v


def _finite(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return v


def _positive(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="unsigned 64-bit seed (default 0)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    parser = _Parser(prog="photonsim", description="Simulated single-photon and photon-pair experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mz", parents=[common], help="Mach-Zehnder interferometer")
    p.add_argument("--phi1-deg", type=_finite, default=0.0)
    p.add_argument("--phi2-deg", type=_finite, default=0.0)
    p.add_argument("--bs2", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--trials", type=_nonneg_int, default=0)
    p.add_argument("--sweep", action="store_true", help="sweep phi1 - phi2 over 0..360 degrees")
    p.set_defaults(handler=cmd_mz)

    p = sub.add_parser("delayed-choice", parents=[common], help="random BS2 insertion after BS1")
    p.add_argument("--phi-deg", type=_finite, default=0.0)
    p.add_argument("--trials", type=_pos_int, default=1000)
    p.set_defaults(handler=cmd_delayed_choice)

    p = sub.add_parser("edc", parents=[common], help="BS2 inserted during the photon's passage")
    p.add_argument("--phi-deg", type=_finite, default=0.0)
    p.add_argument("--delays", type=_pos_int, default=16)
    p.set_defaults(handler=cmd_edc)

    p = sub.add_parser("rto", parents=[common], help="entangled photon pair")
    p.add_argument("--phia-deg", type=_finite, default=0.0)
    p.add_argument("--phib-deg", type=_finite, default=0.0)
    p.add_argument("--trials", type=_nonneg_int, default=0)
    p.add_argument("--sweep", action="store_true", help="sweep phiB - phiA over 0..360 degrees")
    p.set_defaults(handler=cmd_rto)

    p = sub.add_parser("chsh", parents=[common], help="CHSH value for the entangled pair")
    p.add_argument("--a", type=_finite, default=0.0)
    p.add_argument("--a2", type=_finite, default=90.0)
    p.add_argument("--b", type=_finite, default=45.0)
    p.add_argument("--b2", type=_finite, default=135.0)
    p.add_argument("--trials", type=_nonneg_int, default=0)
    p.set_defaults(handler=cmd_chsh)

    p = sub.add_parser("measure", parents=[common], help="photon-detector measurement state")
    p.set_defaults(handler=cmd_measure)

    p = sub.add_parser("collapse", parents=[common], help="one photon shared by two detectors")
    p.add_argument("--trials", type=_pos_int, default=1000)
    p.set_defaults(handler=cmd_collapse)

    p = sub.add_parser("double-slit", parents=[common], help="slit intensity and sampled impacts")
    p.add_argument("--slits", type=int, choices=(1, 2), default=2)
    p.add_argument("--impacts", type=_nonneg_int, default=0)
    p.add_argument("--slit-sep-wl", type=_positive, default=4.0, help="slit separation in wavelengths")
    p.add_argument("--slit-width-wl", type=_positive, default=0.8, help="slit width in wavelengths")
    p.add_argument("--screen-dist-wl", type=_positive, default=1.0e4, help="screen distance in wavelengths")
    p.add_argument("--half-width-wl", type=_positive, default=None, help="screen half-width (default L/2)")
    p.add_argument("--points", type=_pos_int, default=401)
    p.set_defaults(handler=cmd_double_slit)

    p = sub.add_parser("runs", parents=[common], help="k-in-a-row statistics with BS2 removed")
    p.add_argument("--trials", type=_pos_int, default=2**20)
    p.add_argument("--k", type=_pos_int, default=10)
    p.set_defaults(handler=cmd_runs)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        tables, doc = args.handler(args)
    except QuantumError as exc:
        print(f"photonsim {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"photonsim {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    manifest = _manifest(args)
    text = render_csv(manifest, tables) if args.format == "csv" else render_json(manifest, doc)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
