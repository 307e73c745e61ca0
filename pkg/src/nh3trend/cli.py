"""Command-line entry point.

Stages compose through files::

    nh3trend simulate --out data --seed 7
    nh3trend calibrate --reference data/reference.csv --triplets data/triplets.csv \
        --raw data/raw.csv --out data
    nh3trend trend --series data/calibrated.csv --adjusted --out data
    nh3trend census --trends data/trends_calibrated.csv --format text
    nh3trend report --trends data/trends_raw.csv data/trends_calibrated.csv --out data

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path
from typing import Optional, Sequence

from . import io as nio
from .calibration import calibrate_dataset, error_pairs, fit_error_model, fit_months
from .config import RunConfig
from .errors import DataError, InsufficientPairs, InvalidSpec, Nh3TrendError
from .report import build_report, render_delta_csv, write_report
from .series import Provenance
from .synth import SpikeSpec, SynthSpec, generate_network, impute_gaps_stub
from .trend import aggregate_yearly, fit_trend, start_date_sweep

log = logging.getLogger("nh3trend")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("run configuration")
    g.add_argument("--alpha", type=float, default=0.05, help="significance threshold (default 0.05)")
    g.add_argument("--level", type=float, default=0.90, help="prediction-interval level (default 0.90)")
    g.add_argument("--sigma-nu", type=float, default=1.635, dest="sigma_nu",
                   help="calibration-error variance added to trend residuals (default 1.635)")
    g.add_argument("--sigma-tau", type=float, default=0.0, dest="sigma_tau",
                   help="imputation variance, added for calibrated_imputed data (default 0)")
    g.add_argument("--min-stations", type=int, default=3, dest="min_stations")
    g.add_argument("--min-months-yearly", type=int, default=6, dest="min_months_yearly")
    g.add_argument("--seed", type=int, default=0)
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--adjusted", dest="adjusted", action="store_true", default=False,
                      help="classify with variance-inflated p-values")
    mode.add_argument("--naive", dest="adjusted", action="store_false")
    g.add_argument("--out", type=Path, default=None, help="output directory (default: standard output where possible)")
    g.add_argument("--format", choices=("json", "text", "csv"), default=None)
    return p


def _config(args) -> RunConfig:
    try:
        return RunConfig(alpha=args.alpha, level=args.level, sigma_nu_squared=args.sigma_nu,
                         sigma_tau_squared=args.sigma_tau, min_stations=args.min_stations,
                         min_months_yearly=args.min_months_yearly, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out_dir(args, required: bool = False) -> Optional[Path]:
    if args.out is None:
        if required:
            raise UsageError("--out is required for this subcommand")
        return None
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _parse_spike(text: str) -> SpikeSpec:
    try:
        station, month, magnitude = text.split(":")
        return SpikeSpec(station, int(month), float(magnitude))
    except ValueError:
        raise argparse.ArgumentTypeError(f"spike must be STATION:MONTH:MAGNITUDE, got {text!r}") from None


# -- subcommands -----------------------------------------------------------

def cmd_simulate(args, cfg: RunConfig) -> int:
    out = _out_dir(args, required=True)
    spec = SynthSpec(
        n_reference_stations=args.reference_stations,
        n_area_stations=args.stations,
        n_months=args.months,
        trend_sd=args.trend_sd,
        observation_sd=args.observation_sd,
        sampler_sd=args.sampler_sd,
        seasonal_amplitude=args.seasonal_amplitude,
        missing_rate=args.missing_rate,
        spikes=tuple(args.spike or ()),
        seed=cfg.seed,
    )
    net = generate_network(spec)
    nio.write_reference_csv(net.reference, out / "reference.csv")
    nio.write_triplets_csv(net.months, out / "triplets.csv")
    nio.write_series_csv(net.raw, out / "raw.csv")
    (out / "ground_truth.json").write_text(
        json.dumps(net.truth.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d reference and %d area stations over %d months to %s",
             len(net.reference), len(net.raw), spec.n_months, out)
    return EXIT_OK


def cmd_calibrate(args, cfg: RunConfig) -> int:
    out = _out_dir(args, required=True)
    bundle = nio.load_dataset(reference=args.reference, triplets=args.triplets, raw=args.raw)
    fits = fit_months(bundle.months, cfg.min_stations, cfg.level)
    log.info("calibrated %d of %d months", len(fits), len(bundle.months))
    calibrated = calibrate_dataset(bundle.raw, fits)
    nio.write_fits_csv(fits.values(), out / "calibration_fits.csv")
    nio.write_calibration_intervals_csv(fits.values(), out / "calibration_intervals.csv")
    nio.write_series_csv(calibrated, out / "calibrated.csv")
    try:
        model = fit_error_model(error_pairs(fits.values()))
        payload = {
            "c_hat": model.c_hat,
            "c_residual_variance": model.c_residual_variance,
            "pooled_nu_variance": model.pooled_nu_variance,
            "n_pairs": model.n_pairs,
            "error_band": {str(x): model.error_band(x, cfg.level) for x in (10.0, 30.0)},
        }
    except InsufficientPairs as exc:
        log.warning("no error model: %s", exc)
        payload = None
    (out / "error_model.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    if args.impute_stub:
        imputed = [impute_gaps_stub(s) for s in calibrated if s.n_present]
        nio.write_series_csv(imputed, out / "calibrated_imputed.csv")
    return EXIT_OK


def _extra_variance(args, cfg: RunConfig, provenance) -> float:
    if args.error_model is not None:
        model = json.loads(Path(args.error_model).read_text(encoding="utf-8"))
        if not model:
            raise DataError(f"{args.error_model} holds no error model")
        cfg = RunConfig(**{**cfg.to_dict(), "sigma_nu_squared": model["pooled_nu_variance"]})
    return cfg.extra_variance(provenance)


def _load_station_series(args, cfg):
    series = nio.load_series(args.series)
    if getattr(args, "yearly", False):
        series = [aggregate_yearly(s, cfg.min_months_yearly) for s in series]
    return series


def cmd_trend(args, cfg: RunConfig) -> int:
    series = _load_station_series(args, cfg)
    fits = []
    for s in series:
        try:
            fits.append(fit_trend(s, _extra_variance(args, cfg, s.provenance)))
        except DataError as exc:
            log.warning("skipping station %s: %s", s.station_id, exc)
    if not fits:
        raise DataError("no station had enough data for a trend")
    out = _out_dir(args)
    if out is None:
        nio.write_trends_csv(fits, sys.stdout, cfg.alpha, args.adjusted)
    else:
        label = Provenance(fits[0].provenance).value
        nio.write_trends_csv(fits, out / f"trends_{label}.csv", cfg.alpha, args.adjusted)
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    series = _load_station_series(args, cfg)
    if args.station:
        series = [s for s in series if s.station_id in set(args.station)]
        if not series:
            raise DataError(f"station(s) {', '.join(args.station)} not found in {args.series}")
    rows = []
    for s in series:
        extra = _extra_variance(args, cfg, s.provenance)
        rows += [(s.station_id, e) for e in start_date_sweep(s, extra, cfg.alpha, args.adjusted)]
    out = _out_dir(args)
    nio.write_sweep_csv(rows, sys.stdout if out is None else out / "sweep.csv")
    return EXIT_OK


def _trend_sets(paths) -> dict:
    sets: dict[str, list] = {}
    for path in paths:
        rows = nio.load_trends(path)
        if not rows:
            raise DataError(f"{path} has no trend rows")
        labels = {r.provenance for r in rows}
        if len(labels) != 1:
            raise DataError(f"{path} mixes datasets: {', '.join(sorted(labels))}")
        label = labels.pop()
        if label in sets:
            raise DataError(f"dataset {label!r} given twice")
        sets[label] = rows
    return sets


def _emit(report: dict, args, stem: str) -> None:
    fmt = args.format or "json"
    out = _out_dir(args)
    ext = {"json": "json", "text": "txt", "csv": "csv"}[fmt]
    write_report(report, fmt, None if out is None else out / f"{stem}.{ext}")
    if out is not None and report.get("deltas"):
        (out / "deltas.csv").write_text(render_delta_csv(report["deltas"]), encoding="utf-8")


def cmd_census(args, cfg: RunConfig) -> int:
    sets = _trend_sets(args.trends)
    report = build_report(sets, cfg.alpha, args.adjusted)
    report.pop("deltas", None)
    _emit(report, args, "census")
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig) -> int:
    sets = _trend_sets([args.a, args.b])
    report = build_report(sets, cfg.alpha, args.adjusted)
    _emit(report, args, "compare")
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    sets = _trend_sets(args.trends)
    report = build_report(sets, cfg.alpha, args.adjusted, config=cfg.to_dict())
    _emit(report, args, "report")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="nh3trend", description="Calibration-aware trend analysis for two-tier monitoring networks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="{simulate,calibrate,trend,sweep,census,compare,report}",
                                parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="generate a synthetic network with ground truth")
    p.add_argument("--stations", type=int, default=294, help="area stations")
    p.add_argument("--reference-stations", type=int, default=6, dest="reference_stations")
    p.add_argument("--months", type=int, default=156)
    p.add_argument("--trend-sd", type=float, default=0.004, dest="trend_sd")
    p.add_argument("--observation-sd", type=float, default=1.0, dest="observation_sd")
    p.add_argument("--sampler-sd", type=float, default=2.0, dest="sampler_sd")
    p.add_argument("--seasonal-amplitude", type=float, default=1.5, dest="seasonal_amplitude")
    p.add_argument("--missing-rate", type=float, default=0.02, dest="missing_rate")
    p.add_argument("--spike", type=_parse_spike, action="append", help="STATION:MONTH:MAGNITUDE (repeatable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", parents=[common], help="fit monthly calibrations and calibrate area data")
    p.add_argument("--reference", required=True, type=Path)
    p.add_argument("--triplets", required=True, type=Path)
    p.add_argument("--raw", required=True, type=Path)
    p.add_argument("--impute-stub", action="store_true", dest="impute_stub",
                   help="also write a seasonal-mean gap-filled copy (test stand-in, not a real imputation)")
    p.set_defaults(func=cmd_calibrate)

    for name, func, help_ in (("trend", cmd_trend, "per-station OLS trends"),
                              ("sweep", cmd_sweep, "start-date sensitivity sweep")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--series", required=True, type=Path)
        p.add_argument("--error-model", type=Path, default=None, dest="error_model",
                       help="take sigma_nu^2 from a calibrate error_model.json")
        p.add_argument("--yearly", action="store_true", help="aggregate to calendar-year means first")
        if name == "sweep":
            p.add_argument("--station", action="append", help="restrict to station id (repeatable)")
        p.set_defaults(func=func)

    p = sub.add_parser("census", parents=[common], help="count positive/negative and significant trends")
    p.add_argument("--trends", required=True, nargs="+", type=Path)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("compare", parents=[common], help="agreement tables between two trend sets")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="full trend-accounting report")
    p.add_argument("--trends", required=True, nargs="+", type=Path)
    p.set_defaults(func=cmd_report)
    return parser


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        cfg = _config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help exits 0 through argparse.
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    warnings.simplefilter("default")
    try:
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"nh3trend: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (Nh3TrendError, InvalidSpec, OSError, ValueError) as exc:
        print(f"nh3trend: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
