import logging
import os
from dataclasses import dataclass
from functools import lru_cache

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


@dataclass(frozen=True, slots=True)
class EngineConfig:
    """Engine-wide tuning loaded from ``MINISTRA_*`` environment variables."""

    log: str
    threads: int
    arnoldi_order: int
    tag_cap: int

    # --- Slew measurement conventions ---
    slew_lower: float
    slew_upper: float
    ramp_scale: float

    # --- Clock relationship expansion ---
    clock_expansion_cap: int

    # --- Derived Properties ---
    @property
    def log_level(self) -> int:
        return _LOG_LEVELS[self.log]

    @property
    def slew_thresholds(self) -> tuple[float, float]:
        return self.slew_lower, self.slew_upper

    @classmethod
    def load_from_env(cls) -> "EngineConfig":
        """
        Loads configuration from environment variables, performing validation and type casting.
        Fails fast with a ConfigurationError if anything is invalid.
        """
        try:
            log = os.getenv("MINISTRA_LOG", "info").strip().lower()
            if log not in _LOG_LEVELS:
                raise ValueError(
                    f"MINISTRA_LOG must be one of {sorted(_LOG_LEVELS)}, not '{log}'"
                )

            threads = int(os.getenv("MINISTRA_THREADS", "1"))
            if threads <= 0:
                raise ValueError("MINISTRA_THREADS must be a positive integer.")

            arnoldi_order = int(os.getenv("MINISTRA_ARNOLDI_ORDER", "4"))
            if arnoldi_order <= 0:
                raise ValueError("MINISTRA_ARNOLDI_ORDER must be a positive integer.")

            tag_cap = int(os.getenv("MINISTRA_TAG_CAP", "32"))
            if tag_cap < 2:
                raise ValueError("MINISTRA_TAG_CAP must be at least 2.")

            slew_lower = float(os.getenv("MINISTRA_SLEW_LOWER", "0.2"))
            slew_upper = float(os.getenv("MINISTRA_SLEW_UPPER", "0.8"))
            if not 0.0 < slew_lower < 0.5 < slew_upper < 1.0:
                raise ValueError(
                    "MINISTRA_SLEW_LOWER/UPPER must satisfy 0 < lower < 0.5 < upper < 1."
                )

            ramp_scale = float(os.getenv("MINISTRA_RAMP_SCALE", "0.8"))
            if not 0.0 < ramp_scale <= 1.0:
                raise ValueError("MINISTRA_RAMP_SCALE must be in (0, 1].")

            clock_expansion_cap = int(os.getenv("MINISTRA_CLOCK_EXPANSION_CAP", "64"))
            if clock_expansion_cap <= 0:
                raise ValueError(
                    "MINISTRA_CLOCK_EXPANSION_CAP must be a positive integer."
                )

        except (ValueError, TypeError) as e:
            raise ConfigurationError(
                f"Invalid value for an environment variable: {e}"
            ) from e

        return cls(
            log=log,
            threads=threads,
            arnoldi_order=arnoldi_order,
            tag_cap=tag_cap,
            slew_lower=slew_lower,
            slew_upper=slew_upper,
            ramp_scale=ramp_scale,
            clock_expansion_cap=clock_expansion_cap,
        )


# --- Singleton Factory Function (Lazy-loaded and Cached) ---
@lru_cache(maxsize=1)
def get_config() -> EngineConfig:
    """
    Loads the engine configuration from environment variables.
    The result is cached using lru_cache, so the environment is only read once
    on the first call. This avoids import-time side effects.
    """
    logger.debug("Loading engine configuration from environment...")
    return EngineConfig.load_from_env()
