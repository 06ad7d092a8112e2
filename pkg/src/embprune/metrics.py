"""Data-effectiveness scoring and compute/storage budget arithmetic.

The core score is del_value = miou * exp(-alpha * ratio), squashed to
norm_del = sigmoid(del_value). Inputs are fractions in [0, 1]; reports
multiply by 100 for percentage display.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from scipy.optimize import minimize_scalar

from .errors import DomainError, FitError

INT64_MAX = 2**63 - 1

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class DelScore:
    miou: float
    ratio: float
    alpha: float
    del_value: float
    norm_del: float

    def report(self) -> dict:
        return {
            "miou_percent": self.miou * 100.0,
            "ratio": self.ratio,
            "alpha": self.alpha,
            "del": self.del_value,
            "normdel_percent": self.norm_del * 100.0,
        }


def del_score(miou: float, ratio: float, alpha: float = 1.0) -> DelScore:
    """Score a (quality, retention) pair; all inputs are fractions."""
    if not 0.0 <= miou <= 1.0:
        raise DomainError(f"miou must be in [0, 1], got {miou}")
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"ratio must be in [0, 1], got {ratio}")
    if alpha <= 0.0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    dv = miou * math.exp(-alpha * ratio)
    return DelScore(miou, ratio, alpha, dv, 1.0 / (1.0 + math.exp(-dv)))


def fit_alpha(observations: list[tuple[float, float, float]]) -> float:
    """Recover alpha from (miou, ratio, norm_del_percent) observations.

    Least squares over the reported percentages, minimized by a bounded
    scalar search on alpha in (0, 100].
    """
    obs = [(float(m), float(r), float(p)) for m, r, p in observations]
    if not any(m > 0.0 and r > 0.0 for m, r, _ in obs):
        raise FitError("need at least one observation with miou > 0 and ratio > 0")

    def sse(alpha: float) -> float:
        return sum(
            (del_score(m, r, alpha).norm_del * 100.0 - p) ** 2 for m, r, p in obs
        )

    result = minimize_scalar(sse, bounds=(1e-9, 100.0), method="bounded", options={"xatol": 1e-10})
    return float(result.x)


def _as_fraction(ratio) -> Fraction:
    if isinstance(ratio, Rational):
        return Fraction(ratio)
    if isinstance(ratio, (float, str)):
        return Fraction(ratio)
    raise DomainError(f"cannot interpret {ratio!r} as an exact ratio")


@dataclass(frozen=True)
class ComputeBudget:
    base_epochs: int
    ratio: Fraction
    epochs: int

    def report(self) -> dict:
        return {"base_epochs": self.base_epochs, "ratio": str(self.ratio), "epochs": self.epochs}


def epochs_for_ratio(base_epochs: int, ratio) -> int:
    """Equal-compute epoch count: round(base_epochs / ratio).

    ratio is treated as an exact rational; pass Fraction(1, 3) or "1/3",
    not 0.33, for thirds.
    """
    if base_epochs < 1:
        raise DomainError("base_epochs must be >= 1")
    frac = _as_fraction(ratio)
    if frac <= 0:
        raise DomainError(f"ratio must be > 0, got {ratio}")
    if frac > 1:
        raise DomainError(f"ratio must be <= 1, got {ratio}")
    return round(Fraction(base_epochs) / frac)


def compute_budget(base_epochs: int, ratio) -> ComputeBudget:
    frac = _as_fraction(ratio)
    return ComputeBudget(base_epochs, frac, epochs_for_ratio(base_epochs, frac))


def gpu_hours(frames: int, throughput_fps: float) -> float:
    """Hours to push `frames` items through a model at a given rate."""
    if throughput_fps <= 0.0:
        raise DomainError(f"throughput_fps must be > 0, got {throughput_fps}")
    if frames < 0:
        raise DomainError("frames must be >= 0")
    return frames / throughput_fps / SECONDS_PER_HOUR


def storage_bytes(frames: int, width: int, height: int, bytes_per_pixel: int) -> int:
    """Raw storage for uncompressed frames; errors past the 64-bit range."""
    for name, value in (
        ("frames", frames), ("width", width), ("height", height),
        ("bytes_per_pixel", bytes_per_pixel),
    ):
        if value <= 0:
            raise DomainError(f"{name} must be > 0, got {value}")
    total = frames * width * height * bytes_per_pixel
    if total > INT64_MAX:
        raise OverflowError(f"storage size {total} bytes exceeds the 64-bit limit ({INT64_MAX})")
    return total


@dataclass(frozen=True)
class SavingsReport:
    frames: int
    throughput_fps: float
    raw_bytes_per_frame: int
    total_gpu_hours: float
    retained_ratio: float
    gpu_hours_saved: float
    bytes_total: int
    bytes_saved: int

    def report(self) -> dict:
        return {
            "frames": self.frames,
            "throughput_fps": self.throughput_fps,
            "raw_bytes_per_frame": self.raw_bytes_per_frame,
            "total_gpu_hours": self.total_gpu_hours,
            "retained_ratio": self.retained_ratio,
            "gpu_hours_saved": self.gpu_hours_saved,
            "bytes_total": self.bytes_total,
            "bytes_saved": self.bytes_saved,
        }


def savings_report(
    frames: int,
    throughput_fps: float,
    *,
    width: int = 1920,
    height: int = 1080,
    bytes_per_pixel: int = 3,
    retained_ratio: float = 1.0,
    total_gpu_hours: float | None = None,
) -> SavingsReport:
    """Hours and bytes saved by keeping only retained_ratio of the frames.

    total_gpu_hours overrides the computed base, e.g. to budget against a
    previously rounded figure.
    """
    if not 0.0 <= retained_ratio <= 1.0:
        raise DomainError(f"retained_ratio must be in [0, 1], got {retained_ratio}")
    hours = gpu_hours(frames, throughput_fps) if total_gpu_hours is None else float(total_gpu_hours)
    bytes_total = storage_bytes(frames, width, height, bytes_per_pixel)
    # exact rational product, floored, so giant byte counts stay precise
    bytes_saved = int(Fraction(bytes_total) * (1 - Fraction(retained_ratio)))
    return SavingsReport(
        frames=frames,
        throughput_fps=throughput_fps,
        raw_bytes_per_frame=width * height * bytes_per_pixel,
        total_gpu_hours=hours,
        retained_ratio=retained_ratio,
        gpu_hours_saved=hours * (1.0 - retained_ratio),
        bytes_total=bytes_total,
        bytes_saved=bytes_saved,
    )
