"""
Configuration module for the PAC-Bayes bound-minimisation project.

Contains all project-wide configuration including paths, the benchmark
dataset registry, experiment protocol constants and optimiser defaults.
"""

import os
from pathlib import Path

# Project paths
PROJECT_ROOT: Path = Path(__file__).parent.parent
SRC_DIR: Path = PROJECT_ROOT / "src"
DATA_DIR: Path = Path(os.environ.get("DATA_DIR", PROJECT_ROOT / "data"))
RESULTS_DIR: Path = PROJECT_ROOT / "results"
REPORTS_DIR: Path = RESULTS_DIR / "reports"

# Shipped reference material
REFERENCE_RESULTS_FILE: Path = SRC_DIR / "reference_results.csv"
REPORT_SCHEMA_FILE: Path = SRC_DIR / "schemas" / "bound_report.schema.json"
REPORT_SCHEMA_VERSION: int = 1

# Benchmark datasets (files are expected under DATA_DIR, never downloaded)
DATASETS: dict[str, dict] = {
    "mushrooms": {"format": "sparse", "file": "mushrooms", "n_features": 112, "minmax": True},
    "phishing": {"format": "sparse", "file": "phishing", "n_features": 68, "minmax": True},
    "yeast": {"format": "sparse", "file": "yeast", "n_features": 8, "minmax": True},
    "mnist": {
        "format": "idx",
        "train": ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
        "test": ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
        "subdir": "mnist",
    },
    "fashionmnist": {
        "format": "idx",
        "train": ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
        "test": ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
        "subdir": "fashionmnist",
    },
    "blobs": {"format": "synthetic", "m": 1000, "n_features": 10, "class_count": 2},
}

# Confidence and loss
DEFAULT_DELTA: float = 0.05
ALPHA_LINEAR: float = 25.0
ALPHA_MLP: float = 250.0
LEAKY_SLOPE: float = 0.01

# MLP architecture and initialisation
HIDDEN_WIDTH: int = 600
DEPTH: int = 1
INIT_STD: float = 0.04
INIT_CLIP: float = 0.08
FIRST_BIAS: float = 0.1

# Optimisation protocol
BATCH_SIZE: int = 256
MIN_ITERATIONS: int = 10_000
COCOB_ALPHA: float = 10.0  # wealth/denominator parameter of COCOB-Backprop
COCOB_EPS: float = 1e-8

# Posterior / prior initial scales
POSTERIOR_STD_INIT: float = 0.01
PRIOR_STD_INIT: float = 0.01
LAMBDA_INIT: float = 0.5

# Certification
MC_RISK_SAMPLES: int = 1000
PRIOR_VARIANCE_C: float = 1.1
PRIOR_VARIANCE_B: float = 100.0
PRIOR_SPLIT_FRACTION: float = 0.25
ERM_PRIOR_MAX_EPOCHS: int = 20
LAMBDA_GRID_MULTIPLIERS: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
FAST_RATE_LAMBDA_GRID: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
ETA_GRID_SIZE: int = 101
STUDENT_SAMPLES: int = 100_000

# Lipschitz surrogate search
LIPSCHITZ_RESTARTS: int = 5
LIPSCHITZ_ITERATIONS: int = 2000
LIPSCHITZ_CHECKPOINT_EVERY: int = 100
LIPSCHITZ_INIT_PERTURBATION: float = 0.04
LIPSCHITZ_MIN_DISTANCE: float = 1e-8

# Seeds and splitting
RANDOM_SEED: int = 0
UNIT_BALL_TOL: float = 1e-9

# Output configuration
TRAJECTORY_EVERY: int = 100  # iterations between trajectory records


def ensure_results_dir() -> None:
    """Create the results and reports directories if they don't exist."""
    RESULTS_DIR.mkdir(exist_ok=True)
    REPORTS_DIR.mkdir(exist_ok=True)


if __name__ == "__main__":
    print("PAC-Bayes Bound Minimisation - Configuration")
    print("=" * 50)
    print(f"Project Root: {PROJECT_ROOT}")
    print(f"Data Directory: {DATA_DIR}")
    print(f"Results Directory: {RESULTS_DIR}")
    print(f"\nDatasets: {list(DATASETS)}")
    print(f"Delta: {DEFAULT_DELTA}")
    print(f"Alpha (linear / MLP): {ALPHA_LINEAR} / {ALPHA_MLP}")
    print(f"Batch size: {BATCH_SIZE}, min iterations: {MIN_ITERATIONS:,}")
