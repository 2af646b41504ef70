"""Reading and writing artifacts: point clouds, checkpoints, paths and study tables.

All formats are text (CSV / JSON). Floats are written with 17 significant
digits so that write-then-read is bit-exact.
"""

import json
import re
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import jsonlines
import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from denoise.learned import LearnedRep
from manifolds.point_cloud import PointCloud
from nn.mlp import MlpModel
from solvers.path import DiscretePath
from utils.errors import ArtifactFormatError, DimensionMismatch
from utils.report_generator import StudyTable

FLOAT_FORMAT = "%.17g"


def _fmt(value: float) -> str:
    return FLOAT_FORMAT % value


def _read_json(path: Path) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ArtifactFormatError(f"invalid JSON: {e.msg}", line=e.lineno) from e


def _write_json(path: Path, data: Any):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, allow_nan=False)
        f.write("\n")


def _validation_to_artifact_error(error: ValidationError) -> ArtifactFormatError:
    item = error.errors()[0]
    loc = ".".join(str(p) for p in item.get("loc", ())) or None
    return ArtifactFormatError(item.get("msg", "invalid value"), field=loc)


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------

def save_cloud(cloud: PointCloud, path: Path) -> Path:
    """Write a cloud as CSV with a '# dim=<l> seed=<seed> noise=<sd>' header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# dim={cloud.ambient_dim} seed={cloud.seed} noise={_fmt(cloud.noise_sd)}\n")
        pd.DataFrame(cloud.points).to_csv(f, header=False, index=False, float_format=FLOAT_FORMAT)
    return path


def _parse_cloud_header(line: str) -> Dict[str, str]:
    if not line.startswith("#"):
        raise ArtifactFormatError("missing '# dim=... seed=... noise=...' header", line=1)
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if not sep:
            raise ArtifactFormatError(f"malformed header token {token!r}", line=1)
        fields[key] = value
    for key in ("dim", "seed", "noise"):
        if key not in fields:
            raise ArtifactFormatError("header entry missing", line=1, field=key)
    return fields


def _read_cloud_frame(f, dim: int) -> pd.DataFrame:
    """Coordinates below the header; the frame index maps to file line index + 2."""
    try:
        frame = pd.read_csv(f, header=None, skip_blank_lines=False, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise ArtifactFormatError("point cloud has no rows", line=2)
    except pd.errors.ParserError as e:
        # "Expected 2 fields in line 2, saw 3", counted from the first line after the header
        match = re.search(r"line (\d+), saw (\d+)", str(e))
        line = int(match.group(1)) + 1 if match else None
        found = f", found {match.group(2)}" if match else ""
        raise ArtifactFormatError(f"expected {dim} values{found}", line=line, field="dim") from e
    # blank lines come back as all-NaN rows
    frame = frame.dropna(how="all")
    if frame.empty:
        raise ArtifactFormatError("point cloud has no rows", line=2)
    if frame.shape[1] > dim:
        wide = frame.iloc[:, dim:].notna().any(axis=1)
        bad = int(frame.index[wide.to_numpy()][0])
        raise ArtifactFormatError(f"expected {dim} values, found {frame.shape[1]}", line=bad + 2, field="dim")
    if frame.shape[1] < dim:
        bad = int(frame.index[0])
        raise ArtifactFormatError(f"expected {dim} values, found {frame.shape[1]}", line=bad + 2, field="dim")
    return frame


def load_cloud(path: Path) -> PointCloud:
    """Read a cloud written by save_cloud.

    Raises:
        ArtifactFormatError: With the offending line (and header field) on malformed input
    """
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first:
            raise ArtifactFormatError("empty point cloud file", line=1)
        header = _parse_cloud_header(first.rstrip("\r\n"))
        try:
            dim = int(header["dim"])
        except ValueError:
            raise ArtifactFormatError(f"not an integer: {header['dim']!r}", line=1, field="dim")
        try:
            seed = None if header["seed"] == "None" else int(header["seed"])
        except ValueError:
            raise ArtifactFormatError(f"not an integer: {header['seed']!r}", line=1, field="seed")
        try:
            noise = float(header["noise"])
        except ValueError:
            raise ArtifactFormatError(f"not a number: {header['noise']!r}", line=1, field="noise")
        frame = _read_cloud_frame(f, dim)

    numeric = frame.apply(pd.to_numeric, errors="coerce")
    # non-numeric text and short rows both end up as NaN here
    missing = numeric.isna().any(axis=1).to_numpy()
    if missing.any():
        bad = int(frame.index[missing][0])
        raise ArtifactFormatError(f"missing or non-numeric value in row {bad + 1}", line=bad + 2)
    points = numeric.to_numpy(dtype=float)
    finite = np.all(np.isfinite(points), axis=1)
    if not finite.all():
        bad = int(frame.index[~finite][0])
        raise ArtifactFormatError("non-finite coordinate", line=bad + 2)
    return PointCloud(points, seed=seed, noise_sd=noise)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

class CheckpointDocument(BaseModel):
    """JSON layout of a trained projection network."""

    layer_dims: List[int]
    weights: List[List[float]]
    biases: List[List[float]]
    activation: Literal["elu"] = "elu"
    sigma: float
    seed: int = 0
    loss_trace: List[Tuple[int, float]] = []


def save_checkpoint(rep: LearnedRep, path: Path) -> Path:
    """Write the network weights (row-major, flattened per layer) and σ."""
    model = rep.model
    doc = CheckpointDocument(
        layer_dims=list(model.layer_dims),
        weights=[w.ravel().tolist() for w in model.weights],
        biases=[b.tolist() for b in model.biases],
        sigma=rep.sigma,
        seed=model.seed,
        loss_trace=[(int(s), float(l)) for s, l in rep.loss_trace],
    )
    _write_json(Path(path), doc.model_dump())
    return Path(path)


def load_checkpoint(path: Path) -> LearnedRep:
    """Rebuild a LearnedRep from a checkpoint written by save_checkpoint."""
    try:
        doc = CheckpointDocument.model_validate(_read_json(path))
    except ValidationError as e:
        raise _validation_to_artifact_error(e) from e
    dims = doc.layer_dims
    if len(doc.weights) != len(dims) - 1 or len(doc.biases) != len(dims) - 1:
        raise ArtifactFormatError(f"{len(dims) - 1} layers expected", field="layer_dims")
    weights, biases = [], []
    for i, (w, b) in enumerate(zip(doc.weights, doc.biases)):
        if len(w) != dims[i + 1] * dims[i]:
            raise ArtifactFormatError(f"layer {i} has {len(w)} weights, expected {dims[i + 1] * dims[i]}", field="weights")
        if len(b) != dims[i + 1]:
            raise ArtifactFormatError(f"layer {i} has {len(b)} biases, expected {dims[i + 1]}", field="biases")
        weights.append(np.array(w, dtype=float).reshape(dims[i + 1], dims[i]))
        biases.append(np.array(b, dtype=float))
    try:
        model = MlpModel(list(dims), weights, biases, doc.seed)
        return LearnedRep(model, doc.sigma, [tuple(t) for t in doc.loss_trace])
    except DimensionMismatch as e:
        raise ArtifactFormatError(str(e), field="layer_dims") from e


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

class PathDocument(BaseModel):
    K: int
    dim: int
    points: List[List[float]]
    energy: Optional[float] = None
    report: Optional[Dict[str, Any]] = None


def save_path(path: DiscretePath, target: Path, energy: Optional[float] = None, report: Optional[dict] = None) -> Path:
    """Write {K, dim, points, energy, report} JSON."""
    doc = PathDocument(K=path.K, dim=path.dim, points=path.points.tolist(), energy=energy, report=report)
    _write_json(Path(target), doc.model_dump())
    return Path(target)


def load_path(target: Path) -> Tuple[DiscretePath, Optional[float], Optional[dict]]:
    """Read a path JSON, checking K and dim against the point array.

    Returns:
        Tuple of (path, energy, report)
    """
    try:
        doc = PathDocument.model_validate(_read_json(target))
    except ValidationError as e:
        raise _validation_to_artifact_error(e) from e
    for i, row in enumerate(doc.points):
        if len(row) != doc.dim:
            raise ArtifactFormatError(f"point {i} has {len(row)} coordinates but dim is {doc.dim}", field="dim")
    if len(doc.points) != doc.K + 1:
        raise ArtifactFormatError(f"{len(doc.points)} points given but K is {doc.K}", field="K")
    if doc.K < 1:
        raise ArtifactFormatError("K must be >= 1", field="K")
    return DiscretePath(np.array(doc.points, dtype=float)), doc.energy, doc.report


# ---------------------------------------------------------------------------
# Study tables
# ---------------------------------------------------------------------------

def save_study_table(table: StudyTable, path: Path) -> Path:
    """CSV with a leading '# {metadata json}' line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# " + json.dumps({"name": table.name, "metadata": table.metadata}, sort_keys=True) + "\n")
        table.frame.to_csv(f, index=False, float_format=FLOAT_FORMAT)
    return path


def load_study_table(path: Path) -> StudyTable:
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first.startswith("# "):
            raise ArtifactFormatError("missing metadata line", line=1)
        try:
            meta = json.loads(first[2:])
        except json.JSONDecodeError as e:
            raise ArtifactFormatError(f"invalid metadata JSON: {e.msg}", line=1) from e
        try:
            frame = pd.read_csv(f, float_precision="round_trip")
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ArtifactFormatError(f"malformed table: {e}", line=2) from e
    if "name" not in meta:
        raise ArtifactFormatError("metadata has no name", line=1, field="name")
    return StudyTable(meta["name"], frame, meta.get("metadata", {}))


def append_rows(path: Path, rows: List[dict]):
    """Append study rows to a jsonlines log."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with jsonlines.open(path, mode="a") as writer:
        writer.write_all(rows)


def read_rows(path: Path) -> List[dict]:
    with jsonlines.open(path, mode="r") as reader:
        return list(reader)


# ---------------------------------------------------------------------------

Artifact = Union[PointCloud, LearnedRep, DiscretePath, StudyTable]


def io_roundtrip(artifact: Artifact, workdir: Optional[Path] = None) -> Artifact:
    """Write an artifact to disk in its text format and read it back."""

    def run(folder: Path):
        if isinstance(artifact, PointCloud):
            return load_cloud(save_cloud(artifact, folder / "cloud.csv"))
        if isinstance(artifact, LearnedRep):
            return load_checkpoint(save_checkpoint(artifact, folder / "checkpoint.json"))
        if isinstance(artifact, DiscretePath):
            return load_path(save_path(artifact, folder / "path.json"))[0]
        if isinstance(artifact, StudyTable):
            return load_study_table(save_study_table(artifact, folder / f"{artifact.name}.csv"))
        raise TypeError(f"unsupported artifact type {type(artifact).__name__}")

    if workdir is not None:
        return run(Path(workdir))
    with tempfile.TemporaryDirectory() as tmp:
        return run(Path(tmp))
