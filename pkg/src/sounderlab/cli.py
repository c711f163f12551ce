"""``sounderlab <experiment> --config <file> [--out <dir>] [--dilated] [--seed <n>]``

Exit codes: 0 success, 2 config error, 3 numerical or feasibility error,
4 I/O error.
"""

import argparse
from importlib import resources
import os
import sys

import numpy as np

from . import analysis, io, pipeline
from .config import EXPERIMENTS, PRESETS, ConfigError, load, load_preset
from .pnseq import generate, lfsr_period, run_length_stats, validate_maximal
from .sounder import detect_sync, transmit


def _sequence(sc):
    pn = sc.pn
    seq = generate(pn)
    ones = int(seq.chips.sum())
    runs = run_length_stats(seq)
    results = [{
        "n_stages": pn.n_stages,
        "taps": list(pn.taps),
        "length": seq.length,
        "ones": ones,
        "zeros": seq.length - ones,
        "runs": sum(sum(c.values()) for c in runs.values()),
    }]
    derived = {
        "max_length": pn.max_length,
        "period": lfsr_period(pn.taps, pn.n_stages, pn.seed_value),
        "maximal": validate_maximal(pn.taps, pn.n_stages),
    }
    files = {"sequence_chips.txt": lambda p: io.emit_chips(seq.chips, p)}
    return results, derived, files


def _spectrum(sc):
    cfg = sc.sounder
    res = sc.get("spectrum.resolution_hz")
    psd = analysis.power_spectrum(transmit(cfg, sc.get("spectrum.periods")), res)
    null, side = analysis.find_null_and_sidelobe(psd)
    results = [{"first_null_hz": null, "sidelobe_db": side}]
    derived = {
        "chip_rate_hz": cfg.alpha_hz,
        "sample_rate_hz": cfg.sample_rate_hz,
        "resolution_hz": res,
        "null_to_null_bandwidth_hz": 2 * null,
    }
    files = {"spectrum.csv": lambda p: io.emit_series_csv(
        ("freq_hz", "power_db"), (psd.freqs_hz, psd.power_db), p)}
    return results, derived, files


def _sync(sc):
    cfg = sc.sounder
    out = pipeline.sync_signal(cfg, n_periods=sc.get("sounder.periods"),
                               method=sc.get("sounder.method"))
    sync = detect_sync(out, sc.get("sync.threshold_fraction"))
    times = np.asarray(sync.pulse_times_s)
    results = [{"pulse": i, "time_s": t} for i, t in enumerate(times)]
    derived = {
        "gamma": cfg.gamma,
        "sync_period_s": cfg.sync_period_s,
        "measured_spacing_s": float(np.diff(times).mean()),
        "output_step_s": out.time_step_s,
    }
    files = {"sync.csv": lambda p: io.emit_pdp_csv(out, p, dilated=True)}
    return results, derived, files


def _pdp(sc, dilated):
    cfg = sc.sounder
    pdp, sync = pipeline.measure_pdp(cfg, sc.channel, method=sc.get("sounder.method"),
                                     n_periods=sc.get("sounder.periods"))
    peaks = analysis.detect_peaks(pdp, sc.get("analysis.threshold_db"),
                                  sc.get("analysis.min_separation_ns"))
    first = peaks[0].delay_ns
    results = [{"delay_ns": e.delay_ns, "relative_delay_ns": e.delay_ns - first,
                "relative_power_db": e.relative_power_db} for e in peaks]
    derived = {
        "gamma": cfg.gamma,
        "sync_period_s": cfg.sync_period_s,
        "delay_step_s": pdp.time_step_s,
        "peak_to_median_db": pipeline.peak_to_median_db(pdp),
    }
    files = {"pdp.csv": lambda p: io.emit_pdp_csv(pdp, p, dilated=dilated)}
    return results, derived, files


def _xpd(sc):
    src = sc.get("xpd.dataset")
    if src == "bundled":
        with resources.as_file(resources.files("sounderlab.data") / "xpd_142ghz.csv") as p:
            rows = io.read_xpd_csv(p)
    else:
        rows = io.read_xpd_csv(src)
    recs = [analysis.XpdRecord(*r) for r in rows]
    mean, std = analysis.xpd_stats(recs)
    ple, rmse = analysis.fit_ple([(r.distance_m, r.pl_vv_db) for r in recs],
                                 sc.get("xpd.d0_m"), sc.get("xpd.fc_hz"))
    results = [{"distance_m": r.distance_m, "pl_vv_db": r.pl_vv_db, "pl_vh_db": r.pl_vh_db,
                "xpd_db": analysis.xpd(r)} for r in recs]
    derived = {"xpd_mean_db": mean, "xpd_std_db": std, "ple_vv": ple, "ple_rmse_db": rmse}
    return results, derived, {}


def _linearity(sc):
    sweep = list(zip(sc.get("linearity.attenuation_db"), sc.get("linearity.power_dbm")))
    lin = analysis.linearity_check(sweep)
    results = [{"attenuation_db": a, "power_dbm": p} for a, p in sweep]
    derived = {"slope": lin.slope, "max_deviation_db": lin.max_deviation_db,
               "linear": lin.linear}
    return results, derived, {}


def run(scenario, out_dir=".", dilated=False):
    """Execute one experiment and write its artifacts; returns written paths."""
    dilated = dilated or scenario.get("output.dilated")
    exp = scenario.experiment
    if exp == "pdp":
        results, derived, files = _pdp(scenario, dilated)
    else:
        results, derived, files = {
            "sequence": _sequence, "spectrum": _spectrum, "sync": _sync,
            "xpd": _xpd, "linearity": _linearity,
        }[exp](scenario)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, write in files.items():
        path = os.path.join(out_dir, name)
        write(path)
        written.append(path)
    path = os.path.join(out_dir, f"{exp}_report.json")
    io.emit_report_json(results, path, experiment=exp, config_echo=scenario.echo(),
                        derived=derived)
    written.append(path)
    return written


def _parser():
    ap = argparse.ArgumentParser(prog="sounderlab",
                                 description="Sliding-correlator channel sounder simulator")
    ap.add_argument("experiment", choices=EXPERIMENTS)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario file (key = value lines)")
    src.add_argument("--preset", choices=PRESETS, help="bundled figure preset")
    ap.add_argument("--out", default=".", help="output directory (default: .)")
    ap.add_argument("--dilated", action="store_true",
                    help="write PDP times on the observed (dilated) axis")
    ap.add_argument("--seed", type=int, help="override the scenario seed")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.config:
            sc = load(args.config, experiment=args.experiment, seed=args.seed)
        else:
            sc = load_preset(args.preset, experiment=args.experiment, seed=args.seed)
        written = run(sc, args.out, args.dilated)
    except ConfigError as exc:
        print(f"sounderlab: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"sounderlab: I/O error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"sounderlab: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
