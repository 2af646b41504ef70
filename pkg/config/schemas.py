"""Validated configuration models and the INI experiment-file loader."""

import configparser
import logging
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import config
from utils.errors import ConfigError

logger = logging.getLogger(__name__)


def _split_numbers(value, cast):
    """Accept '3,128,3' style strings as well as sequences."""
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return [cast(p) for p in parts]
    return value


class ManifoldConfig(BaseModel):
    """Analytic ground-truth manifold selection."""

    kind: Literal["torus", "sphere", "circle", "plane"] = "torus"
    major_radius: float = Field(default=config.TORUS_MAJOR_RADIUS, gt=0)
    minor_radius: float = Field(default=config.TORUS_MINOR_RADIUS, gt=0)
    radius: float = Field(default=1.0, gt=0)
    dim: int = Field(default=3, ge=2)
    # plane only: basis rows spanning the subspace, basepoint in R^dim
    basis: Optional[List[List[float]]] = None
    basepoint: Optional[List[float]] = None

    @model_validator(mode="after")
    def _check_torus(self):
        if self.kind == "torus" and not self.minor_radius < self.major_radius:
            raise ValueError("minor_radius must be smaller than major_radius")
        return self


class EnergyConfig(BaseModel):
    """Local energy variant plus decoder spec string."""

    name: Literal["euclid", "pullback", "product-sphere", "kl-gauss"] = "euclid"
    decoder: str = "identity"


class AdamConfig(BaseModel):
    learning_rate: float = Field(default=config.LEARNING_RATE, gt=0)
    beta1: float = Field(default=config.ADAM_BETA1, ge=0, lt=1)
    beta2: float = Field(default=config.ADAM_BETA2, ge=0, lt=1)
    epsilon: float = Field(default=config.ADAM_EPSILON, gt=0)
    weight_decay: float = Field(default=config.WEIGHT_DECAY, ge=0)


class TrainConfig(BaseModel):
    """Denoising training run settings."""

    sigma: float = Field(default=config.TRAIN_SIGMA, gt=0)
    batch_size: int = Field(default=config.TRAIN_BATCH_SIZE, ge=1)
    steps: int = Field(default=config.TRAIN_STEPS, ge=1)
    seed: int = config.GLOBAL_SEED
    layer_dims: List[int] = Field(default_factory=lambda: list(config.DEFAULT_LAYER_DIMS))
    optimizer: AdamConfig = Field(default_factory=AdamConfig)
    trace_every: int = Field(default=config.LOSS_TRACE_EVERY, ge=1)
    show_progress: bool = config.SHOW_PROGRESS

    @field_validator("layer_dims", mode="before")
    @classmethod
    def _parse_dims(cls, value):
        return _split_numbers(value, int)

    @field_validator("layer_dims")
    @classmethod
    def _check_dims(cls, value):
        if len(value) < 2 or any(d < 1 for d in value):
            raise ValueError("layer_dims needs at least two entries, all >= 1")
        return value


class SolverConfig(BaseModel):
    """Augmented Lagrangian / penalty solver settings."""

    K: int = Field(default=8, ge=1)
    mu0: float = Field(default=config.MU0, gt=0)
    alpha: float = Field(default=config.ALPHA, gt=1)
    mu_max: float = Field(default=config.MU_MAX, gt=0)
    omega_star: float = Field(default=config.OMEGA_STAR, gt=0)
    eta_star: Union[float, Literal["auto"]] = "auto"
    max_outer: int = Field(default=config.MAX_OUTER, ge=1)
    inner_tol_floor: float = Field(default=config.INNER_TOL_FLOOR, gt=0)
    bfgs_max_iter: int = Field(default=config.BFGS_MAX_ITER, ge=1)
    bfgs_restarts: int = Field(default=config.BFGS_RESTARTS, ge=0)
    raise_on_failure: bool = True

    @field_validator("eta_star", mode="before")
    @classmethod
    def _parse_eta(cls, value):
        if isinstance(value, str) and value.strip().lower() == "auto":
            return "auto"
        if isinstance(value, str):
            return float(value)
        return value

    @field_validator("eta_star")
    @classmethod
    def _check_eta(cls, value):
        if value != "auto" and value <= 0:
            raise ValueError("eta_star must be positive or 'auto'")
        return value


class ExpConfig(BaseModel):
    """Discrete exponential map settings."""

    penalty: float = Field(default=config.EXP_PENALTY, gt=0)
    grad_tol: float = Field(default=config.EXP_GRAD_TOL, gt=0)
    max_iter: int = Field(default=config.BFGS_MAX_ITER, ge=1)
    bfgs_restarts: int = Field(default=config.BFGS_RESTARTS, ge=0)
    gauss_newton_rcond: float = Field(default=config.GAUSS_NEWTON_RCOND, gt=0)
    raise_on_failure: bool = True


class ProjectionStudyConfig(BaseModel):
    """Sweep axes for the learned-projection accuracy study on the torus."""

    cloud_sizes: List[int] = Field(default_factory=lambda: [1000, 10000, 100000])
    sigmas: List[float] = Field(default_factory=lambda: [0.01, 0.02, 0.04])
    depths: List[int] = Field(default_factory=lambda: [3, 6])
    widths: List[int] = Field(default_factory=lambda: [64, 128])
    noise_levels: List[float] = Field(default_factory=lambda: [0.0, 0.01, 0.05])
    base_cloud_size: int = Field(default=10000, ge=1)
    base_sigma: float = Field(default=0.02, gt=0)
    base_depth: int = Field(default=6, ge=1)
    base_width: int = Field(default=128, ge=1)
    steps: int = Field(default=config.TRAIN_STEPS, ge=1)
    batch_size: int = Field(default=config.TRAIN_BATCH_SIZE, ge=1)
    eval_points: int = Field(default=2000, ge=1)
    buckets: List[float] = Field(default_factory=lambda: list(config.PROJECTION_DISTANCE_BUCKETS))
    axes: List[Literal["cloud_size", "architecture", "noise"]] = Field(
        default_factory=lambda: ["cloud_size", "architecture", "noise"]
    )
    seed: int = config.GLOBAL_SEED

    @field_validator("cloud_sizes", "depths", "widths", mode="before")
    @classmethod
    def _parse_ints(cls, value):
        return _split_numbers(value, int)

    @field_validator("sigmas", "noise_levels", "buckets", mode="before")
    @classmethod
    def _parse_floats(cls, value):
        return _split_numbers(value, float)

    @field_validator("axes", mode="before")
    @classmethod
    def _parse_axes(cls, value):
        return _split_numbers(value, str)


class ConvergenceStudyConfig(BaseModel):
    """Geodesic resolution and exponential divergence study on the torus."""

    ks: List[int] = Field(default_factory=lambda: list(config.CONVERGENCE_KS))
    reference_k: int = Field(default=config.REFERENCE_K, ge=2)
    exp_k: int = Field(default=16, ge=2)
    start: List[float] = Field(default_factory=lambda: [1.0, 0.0, 0.0])
    end: List[float] = Field(default_factory=lambda: [-0.5, 0.5, 1.0 / 3.0])
    seed: int = config.GLOBAL_SEED

    @field_validator("ks", mode="before")
    @classmethod
    def _parse_ks(cls, value):
        return _split_numbers(value, int)

    @field_validator("start", "end", mode="before")
    @classmethod
    def _parse_points(cls, value):
        return _split_numbers(value, float)


class ExperimentConfig(BaseModel):
    """A full experiment: one manifold source plus solver/training sections."""

    manifold: Optional[ManifoldConfig] = None
    cloud_path: Optional[Path] = None
    checkpoint_path: Optional[Path] = None
    energy: EnergyConfig = Field(default_factory=EnergyConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    training: TrainConfig = Field(default_factory=TrainConfig)
    exp: ExpConfig = Field(default_factory=ExpConfig)
    projection_study: ProjectionStudyConfig = Field(default_factory=ProjectionStudyConfig)
    convergence_study: ConvergenceStudyConfig = Field(default_factory=ConvergenceStudyConfig)
    output_dir: Path = config.OUTPUT_DIR
    seed: int = config.GLOBAL_SEED

    @model_validator(mode="after")
    def _one_source(self):
        sources = [s for s in (self.manifold, self.cloud_path, self.checkpoint_path) if s is not None]
        if len(sources) != 1:
            raise ValueError("exactly one of manifold, cloud_path, checkpoint_path must be given")
        return self

    def check_files(self):
        """Raise ConfigError if a referenced file does not exist."""
        for name in ("cloud_path", "checkpoint_path"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ConfigError(f"field '{name}': file not found: {path}")


# INI section name -> ExperimentConfig attribute
_SECTIONS = {
    "manifold": "manifold",
    "energy": "energy",
    "solver": "solver",
    "training": "training",
    "exp": "exp",
    "projection_study": "projection_study",
    "convergence_study": "convergence_study",
}


def read_experiment_file(path: Path) -> dict:
    """Raw nested dict of an INI experiment file, not yet validated.

    Sections: [general], [manifold], [energy], [solver], [training], [exp],
    [projection_study], [convergence_study].

    Raises:
        ConfigError: If the file cannot be read or parsed
    """
    parser = configparser.ConfigParser()
    # keep key case: solver section uses "K"
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as f:
            parser.read_file(f)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e

    data = {}
    if parser.has_section("general"):
        data.update(dict(parser.items("general")))
    for section in parser.sections():
        if section != "general" and section not in _SECTIONS:
            logger.warning("ignoring unknown section [%s] in %s", section, path)
    for section, attr in _SECTIONS.items():
        if parser.has_section(section):
            data[attr] = dict(parser.items(section))
    for key in ("learning_rate", "weight_decay", "beta1", "beta2", "epsilon"):
        if "training" in data and key in data["training"]:
            data["training"].setdefault("optimizer", {})[key] = data["training"].pop(key)
    return data


def load_experiment_config(path: Path, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Load an INI experiment file and validate it.

    Args:
        path: INI experiment file
        overrides: Top-level keys applied on top of the file contents

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: On unreadable files or invalid values (message names the field)
    """
    data = read_experiment_file(path)
    data.update(overrides or {})
    return build_experiment_config(data)


def build_experiment_config(data: dict) -> ExperimentConfig:
    """Validate a plain dict into an ExperimentConfig, mapping errors to ConfigError."""
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(format_validation_error(e)) from e


def format_validation_error(error: ValidationError) -> str:
    """Render pydantic errors as 'field.path: message' lines."""
    lines = []
    for item in error.errors():
        loc = ".".join(str(p) for p in item.get("loc", ())) or "config"
        lines.append(f"field '{loc}': {item.get('msg')}")
    return "; ".join(lines)


def parse_vector(text: str, name: str) -> Tuple[float, ...]:
    """Parse a '1,0,0' command-line vector, naming the flag on error."""
    try:
        values = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError as e:
        raise ConfigError(f"field '{name}': not a comma-separated vector: {text!r}") from e
    if not values:
        raise ConfigError(f"field '{name}': empty vector")
    return values
