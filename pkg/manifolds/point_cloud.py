"""Point cloud container for (encoded) manifold samples."""

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass
class PointCloud:
    """Samples z_i in R^l together with how they were generated."""

    points: np.ndarray
    seed: Optional[int] = None
    noise_sd: float = 0.0

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise ValueError("point cloud must be a non-empty (n, l) array")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud contains non-finite entries")

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]
