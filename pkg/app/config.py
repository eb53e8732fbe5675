from __future__ import annotations

from pathlib import Path
from typing import Final
import os

try:
    from dotenv import load_dotenv  # type: ignore
    load_dotenv()
except Exception:
    pass

# Base directories
BASE_DIR: Final[Path] = Path(__file__).resolve().parent.parent
OUTPUT_DIR: Final[Path] = Path(os.getenv("JOINTREG_OUTPUT_DIR", str(BASE_DIR / "output")))
MODELS_DIR: Final[Path] = BASE_DIR / "models"

# Calibration tables live here unless overridden
CACHE_DIR: Final[Path] = Path(os.getenv("JOINTREG_CACHE_DIR", str(MODELS_DIR / "calibration")))
CACHE_FILE_NAME: Final[str] = "calibration_cache.json"
CACHE_FORMAT_VERSION: Final[int] = 1

# App constants
APP_NAME: Final[str] = "jointreg"
FORMAT_VERSION: Final[str] = "1.0"

# Statistical defaults
DEFAULT_ALPHA: Final[float] = float(os.getenv("JOINTREG_ALPHA", "0.95"))
DEFAULT_SCHEME: Final[str] = os.getenv("JOINTREG_SCHEME", "multi:2")
DEFAULT_REPLICATIONS: Final[int] = int(os.getenv("JOINTREG_REPLICATIONS", "10000"))
DEFAULT_SEED: Final[int] = int(os.getenv("JOINTREG_SEED", "7"))

# Taut string squeezing
DEFAULT_SQUEEZE: Final[float] = float(os.getenv("JOINTREG_SQUEEZE", "0.5"))
DEFAULT_MAX_ROUNDS: Final[int] = int(os.getenv("JOINTREG_MAX_ROUNDS", "200"))

# Monte Carlo tunables
DEFAULT_THREADS: Final[int] = int(os.getenv("JOINTREG_THREADS", str(os.cpu_count() or 1)))
MC_CHUNK_SIZE: Final[int] = int(os.getenv("JOINTREG_CHUNK_SIZE", "250"))
DELGADO_WALK_STEPS: Final[int] = int(os.getenv("JOINTREG_DELGADO_STEPS", "10000"))
DELGADO_ASYMPTOTIC_095: Final[float] = 2.24

# Prefix sums switch to compensated summation above this length
COMPENSATED_SUM_THRESHOLD: Final[int] = 100_000

# Power study defaults
DEFAULT_POWER_REPLICATIONS: Final[int] = int(os.getenv("JOINTREG_POWER_REPS", "1000"))

LOG_LEVEL: Final[str] = os.getenv("JOINTREG_LOG_LEVEL", "WARNING").strip().upper()
