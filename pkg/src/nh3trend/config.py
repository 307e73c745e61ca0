"""Run-wide settings shared by the CLI stages."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .calibration import DEFAULT_LEVEL, DEFAULT_MIN_STATIONS, DEFAULT_SIGMA_NU_SQUARED
from .trend import DEFAULT_ALPHA, DEFAULT_MIN_MONTHS_YEARLY


@dataclass(frozen=True)
class RunConfig:
    alpha: float = DEFAULT_ALPHA
    level: float = DEFAULT_LEVEL
    sigma_nu_squared: float = DEFAULT_SIGMA_NU_SQUARED
    sigma_tau_squared: float = 0.0
    min_stations: int = DEFAULT_MIN_STATIONS
    min_months_yearly: int = DEFAULT_MIN_MONTHS_YEARLY
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "level"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v!r}")
        for name in ("sigma_nu_squared", "sigma_tau_squared"):
            if not getattr(self, name) >= 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.min_stations < 2:
            raise ValueError("min_stations must be >= 2")
        if self.min_months_yearly < 1:
            raise ValueError("min_months_yearly must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def extra_variance(self, provenance) -> float:
        """Variance added to trend residuals.

        Reference data carries no calibration error; imputation variance
        applies to imputed data only.
        """
        label = str(getattr(provenance, "value", provenance))
        if label == "reference":
            return 0.0
        extra = self.sigma_nu_squared
        if label == "calibrated_imputed":
            extra += self.sigma_tau_squared
        return extra

    def to_dict(self) -> dict:
        return asdict(self)
