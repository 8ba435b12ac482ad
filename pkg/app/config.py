import os
from pathlib import Path
try:
    from dotenv import load_dotenv  # type: ignore
    load_dotenv()
except Exception:
    env_path = Path(__file__).resolve().parent.parent / ".env"
    if env_path.exists():
        try:
            with env_path.open() as f:
                for line in f:
                    line = line.strip()
                    if not line or line.startswith("#") or "=" not in line:
                        continue
                    key, val = line.split("=", 1)
                    key = key.strip()
                    val = val.strip()
                    if key and key not in os.environ:
                        os.environ[key] = val
        except Exception:
            pass

APP_ENV = os.getenv("APP_ENV", "dev")
APP_VERSION = os.getenv("APP_VERSION", "1.0.0")
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

# Sweep / Monte Carlo execution
OUTAGE_WORKERS = int(os.getenv("OUTAGE_WORKERS", "1"))
MC_BLOCK_SIZE = int(os.getenv("MC_BLOCK_SIZE", "65536"))
MC_DEFAULT_TRIALS = int(float(os.getenv("MC_DEFAULT_TRIALS", "1e6")))
MC_DEFAULT_SEED = int(os.getenv("MC_DEFAULT_SEED", "20120301"))

# Numerical kernels
BESSEL_MAX_ORDER = int(os.getenv("BESSEL_MAX_ORDER", "64"))
SERIES_MAX_TERMS = int(os.getenv("SERIES_MAX_TERMS", "50"))
SERIES_TOLERANCE = float(os.getenv("SERIES_TOLERANCE", "1e-12"))
# Relative rounding bound above which a closed form is re-summed in mpmath
PRECISION_GUARD = float(os.getenv("PRECISION_GUARD", "1e-12"))
PRECISION_MAX_DPS = int(os.getenv("PRECISION_MAX_DPS", "200"))

# Observability
METRICS_PORT = int(os.getenv("METRICS_PORT", "0"))
SENTRY_DSN = os.getenv("SENTRY_DSN", "")
