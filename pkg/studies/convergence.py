"""Resolution study of learned-ζ geodesics and exponential divergence on the torus.

Interpolation rows compare the geodesic computed with the representation
under test against (a) the exact-ζ geodesic with the same K and (b) the
exact-ζ reference at high resolution, after arclength reparametrization.
Exponential rows track |z_k − z_k^exact| along a shot started from the
first segment of an exact geodesic.
"""

import logging
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from config.schemas import ConvergenceStudyConfig, ExpConfig, SolverConfig
from geometry.energy import EuclideanEnergy, LocalEnergy
from manifolds.analytic import AnalyticManifold, Torus
from manifolds.implicit import AnalyticRep, ImplicitRep
from manifolds.point_cloud import PointCloud
from solvers.auglag import geodesic_auglag, geodesic_cascadic
from solvers.exponential import discrete_exp
from solvers.path import reparametrized_distances
from studies.pool import SweepRunner, SweepTask
from utils.errors import GeoCalcError
from utils.manifest import config_hash
from utils.report_generator import ReportGenerator, StudyTable
from utils.serialization import append_rows, save_study_table

logger = logging.getLogger(__name__)


def run_convergence_study(
    cfg: ConvergenceStudyConfig,
    rep: ImplicitRep,
    manifold: Optional[AnalyticManifold] = None,
    energy: Optional[LocalEnergy] = None,
    solver_cfg: Optional[SolverConfig] = None,
    exp_cfg: Optional[ExpConfig] = None,
    cloud: Optional[PointCloud] = None,
    output_dir: Optional[Path] = None,
    runner: Optional[SweepRunner] = None,
) -> Dict[str, StudyTable]:
    """Interpolation error over K and exponential divergence over k.

    Args:
        cfg: Study settings (K values, reference resolution, endpoints)
        rep: Representation under test (typically a LearnedRep)
        manifold: Ground-truth manifold; the default torus if omitted
        energy: Local energy; Euclidean if omitted
        solver_cfg: Augmented Lagrangian settings
        exp_cfg: Exponential map settings
        cloud: Samples for the η* rule of thumb of the runs under test
        output_dir: Where rows.jsonl and the CSV tables go
        runner: Worker pool for the per-K rows

    Returns:
        Dict with 'interpolation' and 'exponential' tables
    """
    manifold = manifold or Torus()
    W = energy or EuclideanEnergy()
    solver_cfg = solver_cfg or SolverConfig()
    exp_cfg = exp_cfg or ExpConfig()
    runner = runner or SweepRunner()
    exact = AnalyticRep(manifold)
    z0 = manifold.project(np.asarray(cfg.start, dtype=float))
    zK = manifold.project(np.asarray(cfg.end, dtype=float))

    digest = config_hash({
        "study": cfg.model_dump(mode="json"),
        "solver": solver_cfg.model_dump(mode="json"),
        "exp": exp_cfg.model_dump(mode="json"),
    })
    reporter = ReportGenerator({"config_hash": digest, "seed": cfg.seed, "manifold": manifold.describe()})

    logger.info("computing exact reference geodesic with K=%d", cfg.reference_k)
    reference, _ = geodesic_cascadic(W, exact, z0, zK, cfg.reference_k, solver_cfg)
    lenient = solver_cfg.model_copy(update={"raise_on_failure": False})

    def interpolate(params: Dict, seed: int) -> Dict:
        K = params["K"]
        path, report = geodesic_auglag(W, rep, z0, zK, K, lenient, cloud=cloud)
        exact_path, _ = geodesic_auglag(W, exact, z0, zK, K, solver_cfg)
        return {
            "reference_distance": float(np.max(reparametrized_distances(path, reference))),
            "same_k_distance": float(np.max(np.linalg.norm(path.points - exact_path.points, axis=1))),
            "energy": report.energy,
            "constraint_norm": report.constraint_norm,
            "outer_iterations": report.outer_iterations,
            "stop_reason": report.stop_reason,
        }

    rows = runner.run([SweepTask({"K": K}, interpolate) for K in cfg.ks], cfg.seed, desc="convergence")
    tables = {"interpolation": reporter.build_table("interpolation", rows, sort_by=["K"])}

    # exponential: shoot along the first segment of the exact geodesic
    exact_path, _ = geodesic_auglag(W, exact, z0, zK, cfg.exp_k, solver_cfg)
    v0 = cfg.exp_k * (exact_path.points[1] - exact_path.points[0])
    shot_exact = discrete_exp(W, exact, z0, v0, cfg.exp_k, exp_cfg)
    exp_rows = []
    try:
        shot = discrete_exp(W, rep, z0, v0, cfg.exp_k, exp_cfg)
        divergence = np.linalg.norm(shot.points - shot_exact.points, axis=1)
        for k in range(1, cfg.exp_k + 1):
            exp_rows.append({"step": k, "divergence": float(divergence[k]), "status": "ok"})
    except GeoCalcError as e:
        logger.warning("exponential shot failed: %s", e)
        exp_rows.append({"step": 0, "divergence": np.nan, "status": f"error: {type(e).__name__}: {e}"})
    tables["exponential"] = reporter.build_table("exponential", exp_rows, sort_by=["step"])

    if output_dir is not None:
        for name, table in tables.items():
            append_rows(Path(output_dir) / "rows.jsonl", [dict(r, table=name) for r in table.frame.to_dict(orient="records")])
            save_study_table(table, Path(output_dir) / f"{name}.csv")
    return tables
