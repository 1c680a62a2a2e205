"""
Command-line entry point: simulate, estimate, fit-recovery, report and ingest.

Exit codes: 0 success, 2 configuration or usage error, 3 estimation or fit
failure, 4 file format or I/O error. Summaries go to stdout, diagnostics to
stderr.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import io
from .config import FitConfig, Settings, get_settings, load_fit_config, load_run_config
from .contact import IndenterProfile
from .errors import (
    ConfigError,
    DatasetFormatError,
    FitFailedError,
    InsufficientDataError,
    ModelDomainError,
    NoSurfaceFoundError,
)
from .estimator import EstimationResult, FitModel, estimate, force_error_profile, model_forces
from .kinematics import end_effector_heights
from .logging_config import setup_logging
from .presets import SPECIMENS, TIPS
from .recovery import MIN_SAMPLES, fit_recovery_detailed, recovery_band
from .simulator import Dataset, simulate_indentation, simulate_repeated_palpation, true_trajectory

LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4

MANIFEST_SUFFIX = ".manifest"
RESULT_SUFFIX = ".result"
PROVENANCE_KEYS = ("specimen", "tip", "palpation", "rest_time_s", "e_f_true", "sigma_e_true", "z_surf_true", "seed")


def _out_dir(args: argparse.Namespace) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _summary(name: str, dataset: Dataset, max_depth: float, max_force: float) -> str:
    return f"{name}: samples={len(dataset)} max_depth={max_depth:.6g} m max_force={max_force:.6g} N"


def cmd_simulate(args: argparse.Namespace, settings: Settings) -> int:
    config = load_run_config(args.config, args.set or (), settings)
    out_dir = _out_dir(args)
    experiment = config.to_experiment_config()
    base_fields = config.manifest_fields(settings)

    recovery = config.recovery_params()
    if recovery is None:
        dataset = simulate_indentation(experiment)
        truth = true_trajectory(experiment)
        io.write_dataset(dataset, out_dir / f"{config.name}.csv")
        io.write_manifest(base_fields, out_dir / f"{config.name}{MANIFEST_SUFFIX}", header=f"run {config.name}")
        print(_summary(config.name, dataset, float(truth.depth.max()), float(truth.force.max())))
        return EXIT_OK

    runs = simulate_repeated_palpation(experiment, config.rest_intervals, recovery)
    for run in runs:
        name = f"{config.name}_p{run.index:02d}"
        run_experiment = experiment.with_material(run.material, seed=run.seed)
        fields = dict(base_fields)
        fields.pop("sigma_e_true", None)
        fields.update(run_experiment.manifest_fields())
        fields.update(
            {
                "name": name,
                "palpation": str(run.index),
                "rest_time_s": repr(run.rest_time),
                "e_f_true": repr(run.material.e_f),
            }
        )
        truth = true_trajectory(run_experiment)
        io.write_dataset(run.dataset, out_dir / f"{name}.csv")
        io.write_manifest(fields, out_dir / f"{name}{MANIFEST_SUFFIX}", header=f"run {name}")
        print(_summary(name, run.dataset, float(truth.depth.max()), float(truth.force.max())))
    return EXIT_OK


@dataclass(frozen=True)
class EstimationJob:
    path: Path
    model: FitModel
    f_unc: float
    provenance: Dict[str, str]


def _job_for(path: Path, args: argparse.Namespace, settings: Settings, fit_config: Optional[FitConfig]) -> EstimationJob:
    """Fit model for one dataset: from --config/--set when given, else from its manifest."""
    manifest_path = path.with_suffix(MANIFEST_SUFFIX)
    manifest = io.read_manifest(manifest_path) if manifest_path.exists() else {}
    provenance = {k: manifest[k] for k in PROVENANCE_KEYS if k in manifest}

    if fit_config is not None:
        model = fit_config.to_fit_model()
        f_unc = fit_config.f_unc
    elif manifest:
        try:
            profile = IndenterProfile.from_fields(manifest)
            discard = manifest.get("discard_fraction")
            area = manifest.get("reference_area")
            model = FitModel(
                profile=profile,
                nu=float(manifest.get("nu", "0.0")),
                discard_fraction=float(discard) if discard is not None else None,
                reference_area=float(area) if area is not None else None,
            )
        except (ModelDomainError, ValueError) as exc:
            raise ConfigError([f"{manifest_path}: {exc}"]) from None
        f_unc = float(manifest.get("f_unc", settings.f_unc))
    else:
        raise ConfigError(
            [f"{path}: no fit model; pass --config/--set or provide {manifest_path.name}"]
        )

    if args.discard_fraction is not None or args.nu is not None:
        model = FitModel(
            profile=model.profile,
            nu=args.nu if args.nu is not None else model.nu,
            discard_fraction=args.discard_fraction if args.discard_fraction is not None else model.discard_fraction,
            reference_area=model.reference_area,
        )
    if args.f_unc is not None:
        f_unc = args.f_unc
    return EstimationJob(path=path, model=model, f_unc=f_unc, provenance=provenance)


def _run_job(job: EstimationJob, settings: Settings) -> Tuple[Dataset, EstimationResult]:
    dataset = io.read_dataset(job.path)
    result = estimate(
        dataset,
        job.model,
        job.f_unc,
        grid_points=settings.grid_points,
        tolerance=settings.surface_tolerance,
        merge_gap=settings.feasible_merge_gap,
    )
    return dataset, result


def _result_row(job: EstimationJob, result: EstimationResult) -> Dict[str, str]:
    row: Dict[str, str] = {"dataset": job.path.name}
    row.update(job.provenance)
    row.update(result.to_fields())
    if "z_surf_true" in job.provenance:
        row["z_surf_error"] = repr(result.z_surf - float(job.provenance["z_surf_true"]))
    return row


def cmd_estimate(args: argparse.Namespace, settings: Settings) -> int:
    fit_config = load_fit_config(args.config, args.set or (), settings) if (args.config or args.set) else None
    out_dir = _out_dir(args)
    jobs = [_job_for(Path(p), args, settings, fit_config) for p in args.datasets]
    workers = max(1, args.jobs or settings.default_jobs)

    def attempt(job: EstimationJob) -> Tuple[EstimationJob, object]:
        try:
            return job, _run_job(job, settings)
        except (InsufficientDataError, NoSurfaceFoundError, ModelDomainError, DatasetFormatError, OSError) as exc:
            return job, exc

    # map() yields in submission order
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(attempt, jobs))

    rows: List[Dict[str, str]] = []
    exit_code = EXIT_OK
    for job, outcome in outcomes:
        if isinstance(outcome, Exception):
            code = EXIT_IO if isinstance(outcome, (DatasetFormatError, OSError)) else EXIT_ESTIMATION
            print(f"{job.path.name}: {outcome}", file=sys.stderr)
            exit_code = max(exit_code, code)
            continue
        dataset, result = outcome
        stem = job.path.stem
        row = _result_row(job, result)
        rows.append(row)
        io.write_result(row, out_dir / f"{stem}{RESULT_SUFFIX}", header=f"estimate of {job.path.name}")
        if not args.no_curves:
            d, f_model = model_forces(dataset, result)
            io.write_columns(
                out_dir / f"{stem}_fit.csv",
                io.FIT_CURVE_HEADER,
                [dataset.t, dataset.z_ee, d, dataset.f_z, f_model],
            )
            profile = force_error_profile(dataset, result, bins=args.bins)
            io.write_columns(
                out_dir / f"{stem}_force_error.csv",
                io.FORCE_ERROR_HEADER,
                [profile.depth, profile.mean_error, profile.count],
            )
        line = (
            f"{job.path.name}: E={result.e_f / 1e3:.3f} kPa sigma={result.sigma_e / 1e3:.3f} kPa "
            f"z_surf={result.z_surf:.6f} m residual={result.residual:.4g} N^2 "
            f"({result.residual_kpa2:.4g} kPa^2) n={result.n_used}"
        )
        if result.discard_fraction > 0.0:
            line += f" discard_fraction={result.discard_fraction:g} applied"
        print(line)
    if rows:
        io.write_results_csv(rows, out_dir / args.results_name)
    return exit_code


def cmd_fit_recovery(args: argparse.Namespace, settings: Settings) -> int:
    rows = io.read_results_csv(args.results)
    samples = io.recovery_samples_from_results(
        rows,
        path=args.results,
        time_column=args.time_column,
        value_column=args.value_column,
        sigma_column=args.sigma_column,
    )
    try:
        fit = fit_recovery_detailed(samples)
    except InsufficientDataError as exc:
        print(f"fit-recovery: need ≥ {MIN_SAMPLES} samples, got {exc.n_available}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _out_dir(args)

    t_max = max(s.t for s in samples)
    t = np.linspace(0.0, t_max * 1.05 if t_max > 0 else 1.0, args.points)
    lo, hi = recovery_band(fit, t, level=args.level)
    io.write_columns(out_dir / "recovery_curve.csv", io.RECOVERY_CURVE_HEADER, [t, fit.params.evaluate(t), lo, hi])

    sigma = np.sqrt(np.clip(np.diag(fit.covariance), 0.0, None))
    fields = {
        "c1": repr(fit.params.c1),
        "c2": repr(fit.params.c2),
        "c3": repr(fit.params.c3),
        "c4": repr(fit.params.c4),
        "sigma_c1": repr(float(sigma[0])),
        "sigma_c2": repr(float(sigma[1])),
        "sigma_c3": repr(float(sigma[2])),
        "sigma_c4": repr(float(sigma[3])),
        "loss": repr(fit.loss),
        "n_samples": str(fit.n_samples),
        "start": str(fit.start),
    }
    io.write_result(fields, out_dir / "recovery_params.result", header=f"recovery fit of {Path(args.results).name}")
    print(
        f"E(t) = {fit.params.c1:.6g}*exp({fit.params.c2:.6g}*t) + {fit.params.c3:.6g}*exp({fit.params.c4:.6g}*t) "
        f"[{fit.n_samples} samples, loss {fit.loss:.4g}]"
    )
    return EXIT_OK


def _order(value: str, names: Sequence[str]) -> Tuple[int, str]:
    return (names.index(value), value) if value in names else (len(names), value)


def report_table(rows: Sequence[Dict[str, str]]) -> List[str]:
    """Per specimen × tip: ground truth, mean estimate, spread, relative error and surface error."""
    groups: Dict[Tuple[str, str], List[Dict[str, str]]] = {}
    for row in rows:
        groups.setdefault((row.get("specimen", "-"), row.get("tip", "-")), []).append(row)

    header = (
        f"{'Specimen':<10}{'Tip':<12}{'E_gt[kPa]':>10}{'s_gt':>7}{'E[kPa]':>10}"
        f"{'s[kPa]':>9}{'err[%]':>9}{'|dz|[mm]':>10}{'n':>4}"
    )
    lines = [header, "-" * len(header)]
    specimen_names, tip_names = list(SPECIMENS), list(TIPS)
    for specimen, tip in sorted(groups, key=lambda k: (_order(k[0], specimen_names), _order(k[1], tip_names))):
        group = groups[(specimen, tip)]
        e = np.array([float(r["e_f"]) for r in group])
        if e.size > 1:
            spread = float(np.std(e, ddof=1))
        else:
            spread = float(group[0].get("sigma_e") or math.nan)
        e_mean = float(e.mean())
        e_gt = float(group[0]["e_f_true"]) if group[0].get("e_f_true") else math.nan
        s_gt = float(group[0]["sigma_e_true"]) if group[0].get("sigma_e_true") else math.nan
        err = (e_gt - e_mean) / e_gt * 100.0
        dz = [abs(float(r["z_surf_error"])) for r in group if r.get("z_surf_error")]
        dz_mm = float(np.mean(dz)) * 1e3 if dz else math.nan
        lines.append(
            f"{specimen:<10}{tip:<12}{e_gt / 1e3:>10.1f}{s_gt / 1e3:>7.1f}{e_mean / 1e3:>10.1f}"
            f"{spread / 1e3:>9.1f}{err:>9.2f}{dz_mm:>10.3f}{len(group):>4d}"
        )
    return lines


def cmd_report(args: argparse.Namespace, settings: Settings) -> int:
    rows: List[Dict[str, str]] = []
    for path in args.results:
        rows.extend(io.read_results_csv(path))
    for row_number, row in enumerate(rows, start=1):
        if not row.get("e_f"):
            raise DatasetFormatError(f"results row {row_number}: missing column 'e_f'", row=row_number, column="e_f")
    lines = report_table(rows)
    text = "\n".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_ingest(args: argparse.Namespace, settings: Settings) -> int:
    chain = io.read_dh_table(args.dh) if args.dh else io.bundled_chain(args.robot)
    t, q, f = io.read_joint_log(args.joint_log)
    if q.shape[1] != len(chain):
        raise DatasetFormatError(
            f"{args.joint_log}: log has {q.shape[1]} joints, DH table has {len(chain)}",
            path=str(args.joint_log),
        )
    z = end_effector_heights(chain, q) + args.z_offset if t.size else np.empty(0)
    dataset = Dataset(t, z, f)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.write_dataset(dataset, out)
    z_span = (float(z.min()), float(z.max())) if t.size else (math.nan, math.nan)
    print(f"{out.name}: samples={len(dataset)} z_ee=[{z_span[0]:.6g}, {z_span[1]:.6g}] m")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdr-indent",
        description="Simulate robotic indentation and estimate elasticity with unknown surface height.",
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default from settings)")
    parser.add_argument("--log-format", choices=("text", "json"), default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="YAML run configuration")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="Override a configuration key")

    sim = sub.add_parser("simulate", help="Generate a synthetic dataset and manifest")
    add_config(sim)
    sim.add_argument("--out-dir", default=".")
    sim.set_defaults(handler=cmd_simulate)

    est = sub.add_parser("estimate", help="Estimate E_f and the surface height from datasets")
    est.add_argument("datasets", nargs="+")
    add_config(est)
    est.add_argument("--out-dir", default=".")
    est.add_argument("--jobs", type=int, default=None, help="Datasets estimated concurrently")
    est.add_argument("--f-unc", type=float, default=None, help="Force-sensor uncertainty (N)")
    est.add_argument("--nu", type=float, default=None, help="Poisson ratio")
    est.add_argument("--discard-fraction", type=float, default=None)
    est.add_argument("--bins", type=int, default=20, help="Bins of the force-error profile")
    est.add_argument("--no-curves", action="store_true", help="Skip fit-curve and force-error CSVs")
    est.add_argument("--results-name", default="results.csv")
    est.set_defaults(handler=cmd_estimate)

    rec = sub.add_parser("fit-recovery", help="Fit E(t) = c1 exp(c2 t) + c3 exp(c4 t) to estimates")
    rec.add_argument("results", help="Results CSV from estimate")
    rec.add_argument("--out-dir", default=".")
    rec.add_argument("--time-column", default="rest_time_s")
    rec.add_argument("--value-column", default="e_f")
    rec.add_argument("--sigma-column", default="sigma_e")
    rec.add_argument("--points", type=int, default=201)
    rec.add_argument("--level", type=float, default=0.95)
    rec.set_defaults(handler=cmd_fit_recovery)

    rep = sub.add_parser("report", help="Summary table per specimen and tip")
    rep.add_argument("results", nargs="+")
    rep.add_argument("--out", default=None)
    rep.set_defaults(handler=cmd_report)

    ing = sub.add_parser("ingest", help="Convert a joint-angle log into a dataset")
    ing.add_argument("joint_log", type=Path)
    ing.add_argument("--out", required=True)
    ing.add_argument("--dh", type=Path, default=None, help="DH table (default: bundled robot)")
    ing.add_argument("--robot", default="ur3e")
    ing.add_argument("--z-offset", type=float, default=0.0, help="Added to z_EE (m), e.g. tool length")
    ing.set_defaults(handler=cmd_ingest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    log_dir = Path(args.out_dir) if getattr(args, "out_dir", None) else None
    setup_logging(
        level=args.log_level or settings.log_level,
        log_dir=log_dir,
        fmt=args.log_format or settings.log_format,
        file_name=settings.log_file_name,
    )
    handler: Callable[[argparse.Namespace, Settings], int] = args.handler
    try:
        return handler(args, settings)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except (InsufficientDataError, NoSurfaceFoundError, FitFailedError, ModelDomainError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (DatasetFormatError, OSError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
