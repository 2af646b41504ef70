"""Accuracy study of learned torus projections.

Three sweeps, each producing one StudyTable: cloud size × σ, network depth ×
width, and noise level of the training cloud. Every sweep point trains a
network and reports per-distance-bucket errors against the analytic
projection.

Training clouds are drawn from the study seed, so rows with the same cloud
size and noise level train on the same points. Network initialisation and
batches come from the row seed.
"""

import logging
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from config.schemas import ProjectionStudyConfig, TrainConfig
from denoise.evaluation import projection_errors
from denoise.trainer import train_projection
from manifolds.analytic import AnalyticManifold, Torus, sample_cloud
from studies.pool import SweepRunner, SweepTask
from utils.manifest import config_hash
from utils.report_generator import ReportGenerator, StudyTable
from utils.serialization import append_rows, save_study_table

logger = logging.getLogger(__name__)

SWEEP_KEYS = {
    "cloud_size": ["cloud_size", "sigma"],
    "architecture": ["depth", "width"],
    "noise": ["noise"],
}


def layer_dims(dim: int, depth: int, width: int) -> List[int]:
    """Dimensions of a net with `depth` weight layers of the given width."""
    return [dim] + [width] * (depth - 1) + [dim]


def _sweep_points(cfg: ProjectionStudyConfig, axis: str) -> List[Dict]:
    base = {
        "cloud_size": cfg.base_cloud_size,
        "sigma": cfg.base_sigma,
        "depth": cfg.base_depth,
        "width": cfg.base_width,
        "noise": 0.0,
    }
    if axis == "cloud_size":
        return [dict(base, cloud_size=n, sigma=s) for n, s in product(cfg.cloud_sizes, cfg.sigmas)]
    if axis == "architecture":
        return [dict(base, depth=d, width=w) for d, w in product(cfg.depths, cfg.widths)]
    if axis == "noise":
        return [dict(base, noise=e) for e in cfg.noise_levels]
    raise ValueError(f"unknown sweep axis {axis!r}")


def _evaluate_point(manifold: AnalyticManifold, cfg: ProjectionStudyConfig):
    """Row function: sample, train and evaluate one sweep point."""

    def run(params: Dict, seed: int) -> Dict:
        # one cloud per (size, noise): rows that differ only in sigma or architecture share it
        cloud = sample_cloud(manifold, params["cloud_size"], params["noise"], cfg.seed)
        train_cfg = TrainConfig(
            sigma=params["sigma"],
            batch_size=cfg.batch_size,
            steps=cfg.steps,
            seed=seed,
            layer_dims=layer_dims(manifold.ambient_dim, params["depth"], params["width"]),
            show_progress=False,
        )
        rep = train_projection(cloud, train_cfg)
        # same evaluation points for every row
        buckets = projection_errors(rep.project_batch, manifold, cfg.buckets, cfg.eval_points, cfg.seed)
        return {"final_loss": rep.loss_trace[-1][1], "cloud_seed": cfg.seed, "buckets": buckets}

    return run


def _expand(rows: List[Dict], buckets: List[float]) -> List[Dict]:
    """One output row per (sweep point, distance bucket)."""
    out = []
    for row in rows:
        base = {k: v for k, v in row.items() if k != "buckets"}
        per_bucket = row.get("buckets") or [
            {"distance_bucket": float(b), "median_error": np.nan, "p90_error": np.nan} for b in buckets
        ]
        base.setdefault("final_loss", np.nan)
        for bucket in per_bucket:
            out.append({**base, **bucket})
    return out


def run_projection_study(
    cfg: ProjectionStudyConfig,
    manifold: Optional[AnalyticManifold] = None,
    output_dir: Optional[Path] = None,
    runner: Optional[SweepRunner] = None,
) -> Dict[str, StudyTable]:
    """Run the configured sweep axes.

    Args:
        cfg: Sweep settings
        manifold: Ground truth; the default torus if omitted
        output_dir: Where rows.jsonl and <axis>.csv go; nothing written if None
        runner: Worker pool

    Returns:
        Dict of axis name -> StudyTable
    """
    manifold = manifold or Torus()
    runner = runner or SweepRunner()
    digest = config_hash(cfg.model_dump(mode="json"))
    reporter = ReportGenerator({
        "config_hash": digest, "seed": cfg.seed, "manifold": manifold.describe(), "cloud_seed": cfg.seed,
    })
    tables = {}
    fn = _evaluate_point(manifold, cfg)

    for axis in cfg.axes:
        points = _sweep_points(cfg, axis)
        # separate seed stream per axis
        axis_seed = cfg.seed * 1000 + list(SWEEP_KEYS).index(axis)
        rows = runner.run([SweepTask(p, fn) for p in points], axis_seed, desc=f"projection:{axis}")
        rows = _expand(rows, cfg.buckets)
        for row in rows:
            row["axis"] = axis
        table = reporter.build_table(axis, rows, sort_by=SWEEP_KEYS[axis] + ["distance_bucket"])
        tables[axis] = table
        if output_dir is not None:
            append_rows(Path(output_dir) / "rows.jsonl", table.frame.to_dict(orient="records"))
            save_study_table(table, Path(output_dir) / f"{axis}.csv")
        logger.info("projection sweep %s: %d rows", axis, len(table.frame))
    return tables


def near_surface_medians(table: StudyTable, group_by: Optional[str] = None) -> Union[List[float], Dict]:
    """Median error in the smallest distance bucket, per sweep point in sweep order."""
    ok = table.ok_rows()
    near = ok[ok["distance_bucket"] == ok["distance_bucket"].min()]
    if group_by is None:
        return near["median_error"].tolist()
    return {k: g["median_error"].tolist() for k, g in near.groupby(group_by, sort=True)}
