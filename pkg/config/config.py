import os
import math
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _get_float(name: str, default: float) -> float:
    value = os.getenv(name)
    return float(value) if value not in (None, "") else default


def _get_int(name: str, default: int) -> int:
    value = os.getenv(name)
    return int(value) if value not in (None, "") else default


def _get_bool(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value in (None, ""):
        return default
    return value.strip().lower() in ("1", "true", "yes", "on")


# Tool identity written into every sidecar
TOOL_NAME = "radialens"
TOOL_VERSION = "0.3.0"

# Imaging geometry (prototype-like stack: mask 4 mm in front of the sensor)
MASK_SENSOR_DIST_MM = _get_float("RADIALENS_MASK_SENSOR_DIST_MM", 4.0)
FAR_DEPTH_CM = _get_float("RADIALENS_FAR_DEPTH_CM", 30.0)
NEAR_DEPTH_CM = _get_float("RADIALENS_NEAR_DEPTH_CM", 5.0)

# Grids (rows, cols)
FULL_SHAPE = (512, 612)
DESK_SHAPE = (128, 156)
OPTIM_SHAPE = (140, 140)

# 3.45 um sensor pixels binned 4x for the full-scale grid; desk scale bins 4x again
FULL_SENSOR_PITCH_UM = 13.8
DESK_SENSOR_PITCH_UM = FULL_SENSOR_PITCH_UM * FULL_SHAPE[0] / DESK_SHAPE[0]
SENSOR_PITCH_UM = _get_float("RADIALENS_SENSOR_PITCH_UM", DESK_SENSOR_PITCH_UM)
# Masks are realized directly on the PSF grid
MASK_PITCH_UM = _get_float("RADIALENS_MASK_PITCH_UM", SENSOR_PITCH_UM)

# Central unshielded disk covering ~50 % of the grid area
APERTURE_FRACTION = _get_float("RADIALENS_APERTURE_FRACTION", math.sqrt(2.0 / math.pi))

# Mask generators
N_SECTIONS = _get_int("RADIALENS_N_SECTIONS", 70)
STAR_CHART_SECTIONS = (20, 40, 60)
FZA_ZONES = _get_int("RADIALENS_FZA_ZONES", 8)
RANDOM_DENSITY = _get_float("RADIALENS_RANDOM_DENSITY", 0.5)

# Mask optimization
LEARNING_RATE = _get_float("RADIALENS_LEARNING_RATE", 0.01)
EPOCHS = _get_int("RADIALENS_EPOCHS", 2000)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
INIT_LOW = -0.5
INIT_HIGH = 0.5
EPS_MAG = 1e-12
STALL_WINDOW = 500

# ADMM reconstruction
ADMM_RHO = _get_float("RADIALENS_ADMM_RHO", 1.0)
ADMM_TAU_SCALE = _get_float("RADIALENS_ADMM_TAU_SCALE", 1e-4)
ADMM_ITERATIONS = _get_int("RADIALENS_ADMM_ITERATIONS", 100)
OPERATOR_CHECK_TOL = 1e-8

# Metrics
SSIM_SIGMA = 1.5
SSIM_WIN_SIZE = 11
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# Runtime
SEED = _get_int("RADIALENS_SEED", 0)
OUTPUT_DIR = os.getenv("RADIALENS_OUTPUT_DIR", "./runs")
EXPERIMENTS_DIR = "./experiments"
LOG_LEVEL = os.getenv("RADIALENS_LOG_LEVEL", "INFO")
SHOW_PROGRESS = _get_bool("RADIALENS_SHOW_PROGRESS", True)
THREADS = max(1, _get_int("RADIALENS_THREADS", os.cpu_count() or 1))
