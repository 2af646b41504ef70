"""Configuration management for the geodesic calculus toolkit.

Defaults live here as module constants; every value can be overridden from the
environment or a `.env` file.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Project Paths
BASE_DIR = Path(__file__).parent.parent
OUTPUT_DIR = Path(os.getenv("GEOCALC_OUTPUT_DIR", str(BASE_DIR / "output")))

# Runtime
THREADS = int(os.getenv("GEOCALC_THREADS", str(os.cpu_count() or 1)))
LOG_LEVEL = os.getenv("GEOCALC_LOG_LEVEL", "INFO")
GLOBAL_SEED = int(os.getenv("GEOCALC_SEED", "0"))
SHOW_PROGRESS = os.getenv("GEOCALC_SHOW_PROGRESS", "1") not in ("0", "false", "False", "")

# Manifolds
TORUS_MAJOR_RADIUS = 2.0 / 3.0
TORUS_MINOR_RADIUS = 1.0 / 3.0
SINGULAR_GUARD = 1e-9

# Training (learning rate / weight decay / batch size as used for the torus experiments)
TRAIN_SIGMA = float(os.getenv("GEOCALC_SIGMA", "0.05"))
TRAIN_BATCH_SIZE = 128
TRAIN_STEPS = int(os.getenv("GEOCALC_TRAIN_STEPS", "20000"))
LEARNING_RATE = 1e-3
WEIGHT_DECAY = 1e-5
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
LOSS_TRACE_EVERY = 100
DEFAULT_LAYER_DIMS = (3, 128, 128, 128, 128, 128, 3)

# Augmented Lagrangian
MU0 = 10.0
ALPHA = 2.0
MU_MAX = 1e8
OMEGA_STAR = 1e-6
ETA_STAR = 1e-8  # used when no point cloud is available for the rule of thumb
ETA_STAR_FLOOR = 1e-8
PENALTY_ETA_STAR = 1e-6
MAX_OUTER = 100
INNER_TOL_FLOOR = 1e-10

# BFGS
BFGS_MAX_ITER = 5000
BFGS_RESTARTS = 3
WOLFE_C1 = 1e-4
WOLFE_C2 = 0.9

# Discrete exponential
EXP_PENALTY = 1e4
EXP_GRAD_TOL = 1e-10
GAUSS_NEWTON_RCOND = 1e-2

# Studies
REFERENCE_K = 256
CONVERGENCE_KS = (4, 8, 16, 32)
PROJECTION_DISTANCE_BUCKETS = (0.0, 0.02, 0.04, 0.08)
