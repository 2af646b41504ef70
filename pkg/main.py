"""Command-line front end for the geodesic calculus toolkit.

Subcommands: sample, train, project-eval, geodesic, exp, study, convergence.
Exit codes: 0 success, 1 solver did not converge, 2 usage / IO / config errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import config
from config.schemas import (
    ExperimentConfig,
    ManifoldConfig,
    build_experiment_config,
    parse_vector,
    read_experiment_file,
)
from denoise.evaluation import default_buckets, projection_errors
from denoise.learned import LearnedRep, denoise_cloud
from denoise.trainer import train_projection, training_report
from geometry.energy import make_energy
from manifolds.analytic import AnalyticManifold, make_manifold, sample_cloud
from manifolds.implicit import AnalyticRep, ImplicitRep, KernelRep
from manifolds.point_cloud import PointCloud
from solvers.auglag import geodesic_auglag, geodesic_cascadic
from solvers.exponential import discrete_exp
from solvers.path import path_energy
from solvers.penalty import ManifoldDistance, geodesic_penalty
from studies.convergence import run_convergence_study
from studies.pool import SweepRunner
from studies.projection import SWEEP_KEYS, near_surface_medians, run_projection_study
from utils.errors import ConfigError, GeoCalcError, NotConverged
from utils.manifest import write_manifest
from utils.report_generator import ReportGenerator, count_inversions
from utils.serialization import (
    load_checkpoint,
    load_cloud,
    save_checkpoint,
    save_cloud,
    save_path,
    save_study_table,
)

logger = logging.getLogger("geocalc")

MANIFOLD_KINDS = ["torus", "sphere", "circle", "plane"]
SOURCE_KEYS = ("manifold", "cloud_path", "checkpoint_path")


def _banner(title: str):
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", type=Path, help="INI experiment file")
    sub.add_argument("--output-dir", type=Path, help="Directory for artifacts and manifest")
    sub.add_argument("--seed", type=int, help="Global seed")


def _add_source(sub: argparse.ArgumentParser):
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--manifold", choices=MANIFOLD_KINDS, help="Exact analytic manifold")
    group.add_argument("--cloud", type=Path, help="Point cloud CSV (kernel barycenter representation)")
    group.add_argument("--checkpoint", type=Path, help="Trained projection checkpoint JSON")
    sub.add_argument("--sigma", type=float, help="Kernel / training noise scale")
    sub.add_argument("--samples", type=Path, help="Encoded samples CSV for the eta* rule of thumb")


def _add_energy(sub: argparse.ArgumentParser):
    sub.add_argument("--energy", choices=["euclid", "pullback", "product-sphere", "kl-gauss"])
    sub.add_argument("--decoder", type=str, help="identity | linear:<rows> | sphere-lift[:k] | quadratic-graph")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geocalc",
        description="Discrete geodesic calculus on implicitly represented latent manifolds",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("sample", help="Sample a point cloud from an analytic manifold")
    _add_common(p)
    p.add_argument("--manifold", choices=MANIFOLD_KINDS, default=None)
    p.add_argument("--n", type=int, default=50000, help="Number of samples")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise std")
    p.add_argument("--out", type=Path)

    p = subs.add_parser("train", help="Train a learned projection on a point cloud")
    _add_common(p)
    p.add_argument("--cloud", type=Path)
    p.add_argument("--sigma", type=float)
    p.add_argument("--dims", type=str, help="Layer dimensions, e.g. 3,128,128,3")
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--truth", choices=MANIFOLD_KINDS, help="Ground truth for the evaluation table")
    p.add_argument("--eval-points", type=int, default=1000)
    p.add_argument("--out", type=Path)

    p = subs.add_parser("project-eval", help="Projection error against an analytic manifold")
    _add_common(p)
    _add_source(p)
    p.add_argument("--truth", choices=MANIFOLD_KINDS, default="torus")
    p.add_argument("--n", type=int, default=2000, help="Evaluation points per bucket")
    p.add_argument("--buckets", type=str, help="Comma-separated distances to the surface")
    p.add_argument("--denoised", type=Path, help="Cloud CSV to push through the projection")

    p = subs.add_parser("geodesic", help="Discrete geodesic between two points")
    _add_common(p)
    _add_source(p)
    _add_energy(p)
    p.add_argument("--k", type=int, help="Number of path segments")
    p.add_argument("--from", dest="start", type=str, required=True)
    p.add_argument("--to", dest="end", type=str, required=True)
    p.add_argument("--solver", choices=["auglag", "penalty"], default="auglag")
    p.add_argument("--eta-star", type=str, help="Final constraint tolerance or 'auto'")
    p.add_argument("--cascadic", action="store_true", help="Solve coarse to fine")
    p.add_argument("--out", type=Path)

    p = subs.add_parser("exp", help="Discrete exponential map")
    _add_common(p)
    _add_source(p)
    _add_energy(p)
    p.add_argument("--k", type=int, help="Number of steps")
    p.add_argument("--from", dest="start", type=str, required=True)
    p.add_argument("--velocity", type=str, required=True, help="Initial velocity K(z1 - z0)")
    p.add_argument("--out", type=Path)

    p = subs.add_parser("study", help="Projection accuracy parameter study")
    _add_common(p)
    p.add_argument("--axes", type=str, help="Comma-separated subset of cloud_size,architecture,noise")
    p.add_argument("--steps", type=int, help="Training steps per sweep point")
    p.add_argument("--threads", type=int)

    p = subs.add_parser("convergence", help="Geodesic resolution and exponential divergence study")
    _add_common(p)
    _add_source(p)
    _add_energy(p)
    p.add_argument("--truth", choices=MANIFOLD_KINDS, default="torus")
    p.add_argument("--ks", type=str, help="Comma-separated K values")
    p.add_argument("--reference-k", type=int)
    p.add_argument("--threads", type=int)
    return parser


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _section(data: Dict, name: str) -> Dict:
    current = data.get(name) or {}
    data[name] = dict(current)
    return data[name]


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the optional INI file with command-line overrides."""
    data: Dict = {}
    if args.config is not None:
        data = read_experiment_file(args.config)

    def flag(name):
        return getattr(args, name, None)

    sources = {"manifold": flag("manifold"), "cloud_path": flag("cloud"), "checkpoint_path": flag("checkpoint")}
    if any(v is not None for v in sources.values()):
        for key in SOURCE_KEYS:
            data[key] = None
        if sources["manifold"] is not None:
            data["manifold"] = {"kind": sources["manifold"]}
        data["cloud_path"] = sources["cloud_path"]
        data["checkpoint_path"] = sources["checkpoint_path"]
    if all(data.get(key) is None for key in SOURCE_KEYS):
        data["manifold"] = {"kind": "torus"}

    if flag("output_dir") is not None:
        data["output_dir"] = args.output_dir
    if flag("seed") is not None:
        data["seed"] = args.seed
        _section(data, "training")["seed"] = args.seed
        _section(data, "projection_study")["seed"] = args.seed
        _section(data, "convergence_study")["seed"] = args.seed

    if flag("energy") is not None:
        _section(data, "energy")["name"] = args.energy
    if flag("decoder") is not None:
        _section(data, "energy")["decoder"] = args.decoder
    if flag("k") is not None:
        _section(data, "solver")["K"] = args.k
    if flag("eta_star") is not None:
        _section(data, "solver")["eta_star"] = args.eta_star
    if flag("sigma") is not None:
        _section(data, "training")["sigma"] = args.sigma
    if flag("dims") is not None:
        _section(data, "training")["layer_dims"] = args.dims
    if flag("batch_size") is not None:
        _section(data, "training")["batch_size"] = args.batch_size
    if flag("steps") is not None:
        key = "projection_study" if args.command == "study" else "training"
        _section(data, key)["steps"] = args.steps
    if flag("axes") is not None:
        _section(data, "projection_study")["axes"] = args.axes
    if flag("ks") is not None:
        _section(data, "convergence_study")["ks"] = args.ks
    if flag("reference_k") is not None:
        _section(data, "convergence_study")["reference_k"] = args.reference_k

    cfg = build_experiment_config(data)
    cfg.check_files()
    return cfg


def load_representation(cfg: ExperimentConfig) -> Tuple[ImplicitRep, Optional[AnalyticManifold]]:
    """Implicit representation selected by the config's manifold source."""
    if cfg.manifold is not None:
        manifold = make_manifold(cfg.manifold)
        return AnalyticRep(manifold), manifold
    if cfg.checkpoint_path is not None:
        return load_checkpoint(cfg.checkpoint_path), None
    return KernelRep(load_cloud(cfg.cloud_path), cfg.training.sigma), None


def _eta_cloud(args, rep: ImplicitRep) -> Optional[PointCloud]:
    samples = getattr(args, "samples", None)
    if samples is not None:
        if not Path(samples).exists():
            raise ConfigError(f"field 'samples': file not found: {samples}")
        return load_cloud(samples)
    if isinstance(rep, KernelRep):
        return rep.cloud
    return None


def _vector(text: str, name: str, dim: int) -> np.ndarray:
    vec = np.array(parse_vector(text, name))
    if vec.shape[0] != dim:
        raise ConfigError(f"field '{name}': expected {dim} components, got {vec.shape[0]}")
    return vec


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_sample(args, cfg: ExperimentConfig) -> int:
    if cfg.manifold is None:
        raise ConfigError("field 'manifold': sample needs an analytic manifold")
    manifold = make_manifold(cfg.manifold)
    _banner(f"SAMPLING {args.n} POINTS FROM {manifold.kind.upper()}")
    cloud = sample_cloud(manifold, args.n, args.noise, cfg.seed)
    out = save_cloud(cloud, args.out or cfg.output_dir / "cloud.csv")
    print(f"Noise std: {args.noise}")
    print(f"Saved point cloud to {out}")
    return 0


def cmd_train(args, cfg: ExperimentConfig) -> int:
    if cfg.cloud_path is None:
        raise ConfigError("field 'cloud_path': train needs --cloud")
    cloud = load_cloud(cfg.cloud_path)
    _banner("TRAINING LEARNED PROJECTION")
    print(f"Cloud: {cfg.cloud_path} ({len(cloud)} points)")
    print(f"Sigma: {cfg.training.sigma}")
    print(f"Layers: {cfg.training.layer_dims}")
    print(f"Steps: {cfg.training.steps}")

    rep = train_projection(cloud, cfg.training)
    out = save_checkpoint(rep, args.out or cfg.output_dir / "checkpoint.json")
    truth = make_manifold(ManifoldConfig(kind=args.truth)) if args.truth else None
    report = training_report(rep, truth, eval_points=args.eval_points, seed=cfg.seed)
    report_file = cfg.output_dir / "training_report.json"
    with open(report_file, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
        f.write("\n")

    print(f"\nFinal loss: {report['final_loss']:.6e}")
    for row in report["eval_table"]:
        print(f"  d={row['distance_bucket']:.4f}  median={row['median_error']:.3e}  p90={row['p90_error']:.3e}")
    print(f"Saved checkpoint to {out}")
    print(f"Saved training report to {report_file}")
    return 0


def cmd_project_eval(args, cfg: ExperimentConfig) -> int:
    rep, _ = load_representation(cfg)
    truth = make_manifold(ManifoldConfig(kind=args.truth))
    sigma = rep.sigma if isinstance(rep, (LearnedRep, KernelRep)) else cfg.training.sigma
    buckets = list(parse_vector(args.buckets, "buckets")) if args.buckets else default_buckets(sigma)

    _banner("PROJECTION ERROR EVALUATION")
    rows = projection_errors(rep.project_batch, truth, buckets, args.n, cfg.seed)
    for row in rows:
        row["status"] = "ok"
    reporter = ReportGenerator({"seed": cfg.seed, "sigma": sigma, "truth": truth.describe()})
    table = reporter.build_table("project_eval", rows, sort_by=["distance_bucket"])
    reporter.print_text_report(table)
    out = save_study_table(table, cfg.output_dir / "project_eval.csv")
    print(f"Saved evaluation table to {out}")

    if args.denoised is not None:
        noisy = load_cloud(args.denoised)
        points = denoise_cloud(rep, noisy.points)
        den = save_cloud(PointCloud(points, noisy.seed, noisy.noise_sd), cfg.output_dir / "denoised.csv")
        print(f"Saved denoised cloud to {den}")
    return 0


def cmd_geodesic(args, cfg: ExperimentConfig) -> int:
    rep, manifold = load_representation(cfg)
    W = make_energy(cfg.energy)
    z0 = _vector(args.start, "from", rep.ambient_dim)
    zK = _vector(args.end, "to", rep.ambient_dim)
    K = cfg.solver.K

    _banner(f"GEODESIC ({args.solver}, K={K}, energy={W.name})")
    target = args.out or cfg.output_dir / "geodesic.json"
    try:
        if args.solver == "penalty":
            if manifold is None:
                raise ConfigError("field 'solver': the penalty method needs an analytic manifold distance")
            eta = cfg.solver.eta_star if cfg.solver.eta_star != "auto" else config.PENALTY_ETA_STAR
            path, report = geodesic_penalty(W, ManifoldDistance(manifold), z0, zK, K, cfg.solver, eta_star=eta)
        elif args.cascadic:
            path, report = geodesic_cascadic(W, rep, z0, zK, K, cfg.solver, cloud=_eta_cloud(args, rep))
        else:
            path, report = geodesic_auglag(W, rep, z0, zK, K, cfg.solver, cloud=_eta_cloud(args, rep))
    except NotConverged as e:
        if e.path is not None:
            out = save_path(e.path, target, energy=e.report.energy, report=e.report.to_dict())
            print(f"Saved last iterate to {out}")
        raise

    out = save_path(path, target, energy=report.energy, report=report.to_dict())
    mid = path.points[K // 2]
    print(f"Energy: {report.energy:.10e}")
    print(f"Outer iterations: {report.outer_iterations} ({report.stop_reason})")
    print(f"|zeta|: {report.constraint_norm:.3e} (eta* = {report.eta_star:.3e})")
    print(f"Middle point z_{K // 2}: {np.array2string(mid, precision=6)}")
    print(f"Saved path to {out}")
    return 0


def cmd_exp(args, cfg: ExperimentConfig) -> int:
    rep, _ = load_representation(cfg)
    W = make_energy(cfg.energy)
    z0 = _vector(args.start, "from", rep.ambient_dim)
    v0 = _vector(args.velocity, "velocity", rep.ambient_dim)
    K = cfg.solver.K

    _banner(f"DISCRETE EXPONENTIAL (K={K}, energy={W.name})")
    path = discrete_exp(W, rep, z0, v0, K, cfg.exp)
    energy, _ = path_energy(W, path)
    out = save_path(path, args.out or cfg.output_dir / "exp.json", energy=energy)
    print(f"End point z_{K}: {np.array2string(path.points[-1], precision=6)}")
    print(f"Path energy: {energy:.10e}")
    print(f"Saved path to {out}")
    return 0


def cmd_study(args, cfg: ExperimentConfig) -> int:
    study = cfg.projection_study
    out_dir = cfg.output_dir / "projection_study"
    _banner("PROJECTION PARAMETER STUDY")
    print(f"Axes: {', '.join(study.axes)}")
    print(f"Steps per point: {study.steps}")

    tables = run_projection_study(study, output_dir=out_dir, runner=SweepRunner(args.threads))
    reporter = ReportGenerator()
    for axis, table in tables.items():
        reporter.print_text_report(table, columns=SWEEP_KEYS[axis] + ["distance_bucket", "median_error", "p90_error", "status"])
        if axis == "cloud_size":
            trend = {k: count_inversions(v, "decreasing") for k, v in near_surface_medians(table, "sigma").items()}
        elif axis == "architecture":
            trend = {k: count_inversions(v, "decreasing") for k, v in near_surface_medians(table, "width").items()}
        else:
            trend = {"noise": count_inversions(near_surface_medians(table), "increasing")}
        print(f"Trend inversions ({axis}): {trend}")
    print(f"\nTables saved to {out_dir}")
    return 0


def cmd_convergence(args, cfg: ExperimentConfig) -> int:
    rep, _ = load_representation(cfg)
    truth = make_manifold(ManifoldConfig(kind=args.truth))
    W = make_energy(cfg.energy)
    out_dir = cfg.output_dir / "convergence_study"
    _banner("GEODESIC CONVERGENCE STUDY")
    print(f"K values: {cfg.convergence_study.ks}")
    print(f"Reference resolution: {cfg.convergence_study.reference_k}")

    tables = run_convergence_study(
        cfg.convergence_study, rep, truth, W, cfg.solver, cfg.exp,
        cloud=_eta_cloud(args, rep), output_dir=out_dir, runner=SweepRunner(args.threads),
    )
    reporter = ReportGenerator()
    for table in tables.values():
        reporter.print_text_report(table)
    interp = tables["interpolation"].ok_rows()
    print(f"Inversions in reference distance over K: {count_inversions(interp['reference_distance'], 'decreasing')}")
    print(f"\nTables saved to {out_dir}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "train": cmd_train,
    "project-eval": cmd_project_eval,
    "geodesic": cmd_geodesic,
    "exp": cmd_exp,
    "study": cmd_study,
    "convergence": cmd_convergence,
}


def _serializable_args(args: argparse.Namespace) -> Dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code."""
    logging.basicConfig(
        level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        cfg = resolve_config(args)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        resolved = {"experiment": cfg.model_dump(mode="json"), "args": _serializable_args(args)}
        write_manifest(cfg.output_dir, args.command, resolved, {"global": cfg.seed, "training": cfg.training.seed})
        return COMMANDS[args.command](args, cfg)
    except NotConverged as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (GeoCalcError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    """Console entry point."""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
