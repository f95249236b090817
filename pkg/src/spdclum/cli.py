"""Command line front end.

Subcommands: synth, analyze, fit, herald, scenario.  Global flags work
before or after the subcommand: --config PATH, --seed N, --out DIR,
--format {csv,pretty}, --set key=value (repeatable).  Flags override
environment variables (prefix SPDCLUM_), which override the config file.

Every run that writes files also writes resolved.cfg next to them; rerunning
with --config resolved.cfg reproduces the outputs byte for byte.  Exit
codes: 0 success, 2 configuration or usage error, 3 input parse error,
4 numerical failure, 5 degenerate (flagged) result.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

from . import analysis, herald
from .config import ConfigError, RunConfig, resolve_config
from .emission import WavelengthGrid
from .filters import repetition_rate_alert, run_scenarios
from .fitting import DecayFit, fit_multiexp
from .streak import (RegionOfInterest, StreakParseError, read_streak_csv,
                     read_trace_csv, write_streak_csv, write_trace_csv)
from .synth import synthesize, time_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4
EXIT_FLAGGED = 5


def _fmt(x) -> str:
    """Full-precision CSV cell."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def _fmt_g(x) -> str:
    """Human-readable cell."""
    if x is None:
        return "-"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.6g}"
    return str(x)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _csv_to_stdout(header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    sys.stdout.write(buf.getvalue())


def _prepare_out(cfg: RunConfig) -> str | None:
    out_dir = cfg.get("out.dir")
    if out_dir is None:
        return None
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved.cfg"), "w",
              encoding="utf-8") as fh:
        fh.write(cfg.serialize())
    return out_dir


# ----------------------------------------------------------------------
# subcommands

def cmd_synth(cfg: RunConfig) -> int:
    out_dir = _prepare_out(cfg)
    if out_dir is None:
        raise ConfigError("synth writes an image file: set --out DIR "
                          "(or the out.dir key)")
    model = cfg.build_model()
    t_grid = time_grid(cfg.get("synth.time_min_ns"),
                       cfg.get("synth.time_max_ns"),
                       cfg.get("synth.time_step_ns"))
    wl_keys = ("synth.wavelength_min_nm", "synth.wavelength_max_nm",
               "synth.wavelength_step_nm")
    wl_values = [cfg.get(k) for k in wl_keys]
    if all(v is None for v in wl_values):
        wl_grid = None
    elif any(v is None for v in wl_values):
        raise ConfigError("set all three synth.wavelength_* keys or none")
    else:
        wl_grid = WavelengthGrid(*wl_values)
    image = synthesize(model, wl_grid, t_grid,
                       exposure=cfg.get("synth.exposure"),
                       seed=cfg.get("seed"), t0=cfg.get("synth.t0_ns"))
    path = os.path.join(out_dir, "streak.csv")
    write_streak_csv(image, path)
    alert = repetition_rate_alert(model.pump.repetition_rate_hz,
                                  model.lum_decay)
    print(f"wrote {path}: {image.counts.shape[0]} time x "
          f"{image.counts.shape[1]} wavelength bins, "
          f"{image.total_counts} counts, seed {cfg.get('seed')}")
    if not alert.ok:
        print(f"note: {alert.message}")
    if "warning" in image.metadata:
        print(f"note: {image.metadata['warning']}")
    return EXIT_OK


def _roi_from_key(cfg: RunConfig, key: str, label: str):
    bounds = cfg.get(key)
    if bounds is None:
        return None
    if len(bounds) != 4:
        raise ConfigError(f"{key}: expected 4 numbers "
                          "(wavelength lo, hi, time lo, hi)")
    return RegionOfInterest((bounds[0], bounds[1]), (bounds[2], bounds[3]),
                            label=label)


def cmd_analyze(cfg: RunConfig, image_path: str) -> int:
    image = read_streak_csv(image_path)
    spdc_roi = _roi_from_key(cfg, "analyze.spdc_roi", "spdc")
    lum_roi = _roi_from_key(cfg, "analyze.lum_roi", "luminescence")
    if spdc_roi is None or lum_roi is None:
        model = cfg.build_model()
        d_spdc, d_lum = analysis.default_rois(model, image,
                                              t0=cfg.get("analyze.t0_ns"))
        spdc_roi = spdc_roi or d_spdc
        lum_roi = lum_roi or d_lum
    summary = analysis.separate_counts(
        image, spdc_roi, lum_roi, overlap_mode=cfg.get("analyze.overlap_mode"))

    header = ["c_spdc", "c_lum", "snr", "spdc_wl_lo", "spdc_wl_hi",
              "spdc_t_lo", "spdc_t_hi", "lum_wl_lo", "lum_wl_hi",
              "lum_t_lo", "lum_t_hi", "overlap_mode", "lum_under_spdc",
              "flags"]
    row = [summary.c_spdc, summary.c_lum, summary.snr,
           *summary.spdc_roi.wavelength_nm, *summary.spdc_roi.time_ns,
           *summary.lum_roi.wavelength_nm, *summary.lum_roi.time_ns,
           summary.overlap_mode, summary.lum_under_spdc,
           ";".join(summary.flags)]
    out_dir = _prepare_out(cfg)
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "counts.csv"), header,
                   [[_fmt(v) for v in row]])
    if cfg.get("out.format") == "csv":
        _csv_to_stdout(header, [[_fmt(v) for v in row]])
    else:
        print(f"SPDC ROI   {summary.spdc_roi.wavelength_nm[0]:.6g}-"
              f"{summary.spdc_roi.wavelength_nm[1]:.6g} nm, "
              f"{summary.spdc_roi.time_ns[0]:.6g}-"
              f"{summary.spdc_roi.time_ns[1]:.6g} ns")
        print(f"lum ROI    {summary.lum_roi.wavelength_nm[0]:.6g}-"
              f"{summary.lum_roi.wavelength_nm[1]:.6g} nm, "
              f"{summary.lum_roi.time_ns[0]:.6g}-"
              f"{summary.lum_roi.time_ns[1]:.6g} ns")
        print(f"C_S        {_fmt_g(summary.c_spdc)}")
        print(f"C_L        {_fmt_g(summary.c_lum)}")
        print(f"SNR        {_fmt_g(summary.snr)}")
        if summary.overlap_mode != "none":
            print(f"subtracted {_fmt_g(summary.lum_under_spdc)} estimated "
                  "luminescence counts under the SPDC ROI")
        for flag in summary.flags:
            print(f"flag: {flag}")
    return EXIT_FLAGGED if summary.flagged else EXIT_OK


def _load_fit_input(cfg: RunConfig, path: str):
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first == "# streak-image/v1":
        image = read_streak_csv(path)
        band = cfg.get("fit.band_nm")
        if band is None:
            axis = image.wavelength_axis_nm
            band = (float(axis[0]), float(axis[-1]))
        elif len(band) != 2:
            raise ConfigError("fit.band_nm: expected 2 numbers (lo, hi)")
        return analysis.extract_time_trace(image, tuple(band))
    times, values, _ = read_trace_csv(path)
    return times, values


def _fit_report_rows(fit: DecayFit):
    rows = []
    for i, comp in enumerate(fit.components, start=1):
        rows.append([f"component_{i}", comp.amplitude,
                     comp.amplitude_rel_sigma, comp.lifetime_ns,
                     comp.lifetime_rel_sigma])
    return rows


def cmd_fit(cfg: RunConfig, input_path: str) -> int:
    times, counts = _load_fit_input(cfg, input_path)
    try:
        fit = fit_multiexp(
            times, counts, cfg.get("fit.n_components"),
            irf_fwhm_ns=cfg.get("fit.irf_fwhm_ns"),
            baseline_mode=cfg.get("fit.baseline_mode"),
            t0_ns=cfg.get("fit.t0_ns"), fit_t0=cfg.get("fit.fit_t0"))
    except RuntimeError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    header = ["term", "value", "value_rel_sigma", "lifetime_ns",
              "lifetime_rel_sigma"]
    rows = _fit_report_rows(fit)
    rows.append(["baseline", fit.baseline, fit.baseline_rel_sigma,
                 None, None])
    rows.append(["t0_ns", fit.t0_ns, None, None, None])
    rows.append(["reduced_chi_square", fit.reduced_chi_square,
                 None, None, None])
    out_dir = _prepare_out(cfg)
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "fit.csv"), header,
                   [[_fmt(v) for v in row] for row in rows])
        write_trace_csv(os.path.join(out_dir, "residuals.csv"), times,
                        fit.residual_trace, value_column="residual")
    if cfg.get("out.format") == "csv":
        _csv_to_stdout(header, [[_fmt(v) for v in row] for row in rows])
    else:
        for i, comp in enumerate(fit.components, start=1):
            print(f"component {i}: lifetime {_fmt_g(comp.lifetime_ns)} ns "
                  f"(rel sigma {_fmt_g(comp.lifetime_rel_sigma)}), "
                  f"amplitude {_fmt_g(comp.amplitude)} "
                  f"(rel sigma {_fmt_g(comp.amplitude_rel_sigma)})")
        print(f"baseline {_fmt_g(fit.baseline)} per bin, "
              f"t0 {_fmt_g(fit.t0_ns)} ns")
        print(f"reduced chi-square {_fmt_g(fit.reduced_chi_square)} "
              f"({fit.n_starts} starts)")
        for flag in fit.flags:
            print(f"flag: {flag}")
    if not fit.converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_FLAGGED if fit.flags else EXIT_OK


def cmd_herald(cfg: RunConfig) -> int:
    params = cfg.build_herald()
    outcome = herald.outcome_probabilities(params.p_s, params.p_l,
                                           params.p_l_signal)
    snr = params.p_s / params.p_l if params.p_l > 0.0 else math.inf
    f_approx = 1.0 if math.isinf(snr) else snr / (1.0 + snr)

    exit_code = EXIT_OK
    mc = None
    n_windows = cfg.get("herald.n_windows")
    if n_windows > 0:
        mc = herald.monte_carlo_herald(params, n_windows, cfg.get("seed"))
        if mc.flags:
            exit_code = EXIT_FLAGGED

    header = ["p_s", "p_l", "p0", "p1", "p2", "n_herald", "f_exact",
              "f_approx", "f_mc", "f_mc_se"]
    row = [params.p_s, params.p_l, outcome.p0, outcome.p1, outcome.p2,
           outcome.n_herald, outcome.fidelity, f_approx,
           mc.fidelity_hat if mc else None, mc.fidelity_se if mc else None]
    out_dir = _prepare_out(cfg)
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "herald.csv"), header,
                   [[_fmt(v) for v in row]])
    if cfg.get("out.format") == "csv":
        _csv_to_stdout(header, [[_fmt(v) for v in row]])
    else:
        print(f"P_S        {_fmt_g(params.p_s)}")
        print(f"P_L        {_fmt_g(params.p_l)}")
        if params.lum_rate_signal_hz is not None:
            print(f"P_L signal {_fmt_g(params.p_l_signal)}")
        print(f"p0         {_fmt_g(outcome.p0)}   (false herald, vacuum)")
        print(f"p1         {_fmt_g(outcome.p1)}   (heralded single photon)")
        print(f"p2         {_fmt_g(outcome.p2)}   (photon + luminescence)")
        print(f"N          {_fmt_g(outcome.n_herald)}")
        print(f"F          {_fmt_g(outcome.fidelity)}")
        print(f"F ~ SNR/(1+SNR) = {_fmt_g(f_approx)} at rate SNR "
              f"{_fmt_g(snr)}")
        if mc is not None:
            print(f"monte carlo: {mc.n_windows} windows, "
                  f"{mc.n_heralded} heralds, F = {_fmt_g(mc.fidelity_hat)} "
                  f"+- {_fmt_g(mc.fidelity_se)}")
            if mc.fidelity_se and not math.isnan(mc.fidelity_hat):
                z = abs(mc.fidelity_hat - outcome.fidelity) / mc.fidelity_se
                print(f"analytic vs monte carlo: {z:.2f} standard errors")
            for flag in mc.flags:
                print(f"flag: {flag}")

    ref_snr = cfg.get("herald.snr")
    if ref_snr is not None:
        est = herald.fidelity_from_snr(ref_snr, params.window_ns,
                                       params.spdc_rate_hz)
        if cfg.get("out.format") != "csv":
            print(f"from measured SNR {_fmt_g(ref_snr)}: F_exact "
                  f"{_fmt_g(est.f_exact)}, F_approx {_fmt_g(est.f_approx)}")
        if est.flagged:
            print("flag: nonpositive fidelity at this SNR",
                  file=sys.stderr)
            exit_code = EXIT_FLAGGED
    return exit_code


def cmd_scenario(cfg: RunConfig) -> int:
    model = cfg.build_model()
    chain = cfg.build_chain()
    specs = cfg.build_scenarios()
    results = run_scenarios(model, chain, specs,
                            window_ns=cfg.get("scenario.window_ns"),
                            spdc_rate_hz=cfg.get("scenario.spdc_rate_hz"))
    header = ["label", "c_spdc", "c_lum", "snr", "f_exact", "f_approx",
              "reference_snr", "flags", "notes"]
    rows = [[r.label, r.c_spdc, r.c_lum, r.snr, r.f_exact, r.f_approx,
             r.reference_snr, ";".join(r.flags), ";".join(r.notes)]
            for r in results]
    out_dir = _prepare_out(cfg)
    if out_dir is not None:
        _write_csv(os.path.join(out_dir, "scenarios.csv"), header,
                   [[_fmt(v) for v in row] for row in rows])
    if cfg.get("out.format") == "csv":
        _csv_to_stdout(header, [[_fmt(v) for v in row] for row in rows])
    else:
        width = max([len(r.label) for r in results] + [5])
        print(f"{'label':<{width}} {'C_S':>12} {'C_L':>12} {'SNR':>10} "
              f"{'F':>8} {'F~':>8}")
        for r in results:
            print(f"{r.label:<{width}} {_fmt_g(r.c_spdc):>12} "
                  f"{_fmt_g(r.c_lum):>12} {_fmt_g(r.snr):>10} "
                  f"{r.f_exact:>8.4f} {r.f_approx:>8.4f}")
        for r in results:
            for note in r.notes:
                print(f"note [{r.label}]: {note}")
            for flag in r.flags:
                print(f"flag [{r.label}]: {flag}")
    if any(r.flagged for r in results):
        return EXIT_FLAGGED
    return EXIT_OK


# ----------------------------------------------------------------------
# argument plumbing

def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps unset flags out of the namespace so a flag before the
    # subcommand is not clobbered by the subparser's default
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="configuration file (key = value lines)")
    common.add_argument("--seed", default=argparse.SUPPRESS,
                        help="random seed (config key: seed)")
    common.add_argument("--out", default=argparse.SUPPRESS,
                        help="output directory (config key: out.dir)")
    common.add_argument("--format", choices=("csv", "pretty"),
                        default=argparse.SUPPRESS,
                        help="stdout format (config key: out.format)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        default=argparse.SUPPRESS, dest="set_overrides",
                        help="override any config key (repeatable)")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="spdclum",
        description="Heralded-photon-source luminescence noise toolkit",
        parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common],
                       help="synthesize a streak image")
    p.add_argument("--exposure", default=argparse.SUPPRESS,
                   help="pump pulses to accumulate (synth.exposure)")
    p.add_argument("--spdc-rate", default=argparse.SUPPRESS,
                   help="SPDC pair rate, Hz (spdc_rate_hz)")
    p.add_argument("--lum-rate", default=argparse.SUPPRESS,
                   help="luminescence rate, Hz (lum_rate_hz)")

    p = sub.add_parser("analyze", parents=[common],
                       help="separate SPDC and luminescence counts")
    p.add_argument("image", help="streak CSV file")
    p.add_argument("--overlap-mode", choices=("none", "model-subtract"),
                   default=argparse.SUPPRESS,
                   help="luminescence-under-SPDC handling "
                        "(analyze.overlap_mode)")

    p = sub.add_parser("fit", parents=[common],
                       help="fit a multi-exponential decay")
    p.add_argument("input", help="trace CSV or streak CSV file")
    p.add_argument("--components", default=argparse.SUPPRESS,
                   help="number of decay components (fit.n_components)")
    p.add_argument("--irf", default=argparse.SUPPRESS,
                   help="IRF FWHM in ns (fit.irf_fwhm_ns)")
    p.add_argument("--baseline", choices=("free", "zero"),
                   default=argparse.SUPPRESS,
                   help="baseline handling (fit.baseline_mode)")
    p.add_argument("--band", default=argparse.SUPPRESS,
                   help="wavelength band lo,hi for image input (fit.band_nm)")

    p = sub.add_parser("herald", parents=[common],
                       help="heralded-state probabilities and fidelity")
    p.add_argument("--rs", default=argparse.SUPPRESS,
                   help="SPDC rate, Hz (herald.spdc_rate_hz)")
    p.add_argument("--rl", default=argparse.SUPPRESS,
                   help="luminescence rate, Hz (herald.lum_rate_hz)")
    p.add_argument("--tw", default=argparse.SUPPRESS,
                   help="detection window, ns (herald.window_ns)")
    p.add_argument("--ps", default=argparse.SUPPRESS,
                   help="pair probability per window (sets the rate "
                        "from the window)")
    p.add_argument("--pl", default=argparse.SUPPRESS,
                   help="luminescence probability per window")
    p.add_argument("--snr", default=argparse.SUPPRESS,
                   help="measured SNR to convert to fidelity (herald.snr)")
    p.add_argument("--monte-carlo", default=argparse.SUPPRESS,
                   metavar="N", help="validate with N simulated windows "
                                     "(herald.n_windows)")

    sub.add_parser("scenario", parents=[common],
                   help="filter scenarios: counts, SNR, fidelity table")
    return parser


_FLAG_KEYS = (
    ("seed", "seed"),
    ("out", "out.dir"),
    ("format", "out.format"),
    ("exposure", "synth.exposure"),
    ("spdc_rate", "spdc_rate_hz"),
    ("lum_rate", "lum_rate_hz"),
    ("overlap_mode", "analyze.overlap_mode"),
    ("components", "fit.n_components"),
    ("irf", "fit.irf_fwhm_ns"),
    ("baseline", "fit.baseline_mode"),
    ("band", "fit.band_nm"),
    ("rs", "herald.spdc_rate_hz"),
    ("rl", "herald.lum_rate_hz"),
    ("tw", "herald.window_ns"),
    ("snr", "herald.snr"),
    ("monte_carlo", "herald.n_windows"),
)


def _collect_overrides(args: argparse.Namespace) -> dict[str, str]:
    overrides: dict[str, str] = {}
    for entry in getattr(args, "set_overrides", []):
        key, sep, value = entry.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {entry!r}")
        overrides[key.strip()] = value.strip()
    for attr, key in _FLAG_KEYS:
        if hasattr(args, attr):
            overrides[key] = str(getattr(args, attr))
    return overrides


def _resolve(args: argparse.Namespace) -> RunConfig:
    overrides = _collect_overrides(args)
    config_path = getattr(args, "config", None)
    cfg = resolve_config(config_path, overrides=overrides)
    # probability shorthands need the resolved window to become rates
    if hasattr(args, "ps") or hasattr(args, "pl"):
        window_s = cfg.get("herald.window_ns") * 1e-9
        for attr, key in (("ps", "herald.spdc_rate_hz"),
                          ("pl", "herald.lum_rate_hz")):
            if hasattr(args, attr):
                try:
                    prob = float(getattr(args, attr))
                except ValueError:
                    raise ConfigError(
                        f"--{attr} expects a probability") from None
                overrides[key] = repr(prob / window_s)
        cfg = resolve_config(config_path, overrides=overrides)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "analyze":
            return cmd_analyze(cfg, args.image)
        if args.command == "fit":
            return cmd_fit(cfg, args.input)
        if args.command == "herald":
            return cmd_herald(cfg)
        return cmd_scenario(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StreakParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
