"""Pipeline configuration: one flat record of every tunable, loadable from a
key = value file with CLI overrides, echoed into reports."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from . import enhance
from .evaluate import DEFAULT_TOLERANCE
from .image import DEFAULT_TARGET_MEAN, DEFAULT_TARGET_VARIANCE
from .minutiae import PostprocessParams


@dataclass(frozen=True)
class PipelineConfig:
    block_size: int = enhance.DEFAULT_BLOCK_SIZE
    smooth_sigma: float = enhance.DEFAULT_SMOOTH_SIGMA
    freq_window: int = enhance.DEFAULT_FREQ_WINDOW
    sigma_x: float = enhance.DEFAULT_SIGMA_X
    sigma_y: float = enhance.DEFAULT_SIGMA_Y
    reject_threshold: float = enhance.DEFAULT_REJECT_THRESHOLD
    coherence_floor: float = enhance.DEFAULT_COHERENCE_FLOOR
    variance_floor: float = enhance.DEFAULT_VARIANCE_FLOOR
    target_mean: float = DEFAULT_TARGET_MEAN
    target_variance: float = DEFAULT_TARGET_VARIANCE
    threshold: str = "auto"  # "auto" or an integer 0..255 as text
    adjacency_window: int = 6
    border_distance: int = 10
    reconnect_gap: int = 6
    spur_length: int = 6
    tolerance: float = DEFAULT_TOLERANCE
    dump_intermediates: bool = False

    def __post_init__(self):
        if self.block_size < 4:
            raise ValueError("block_size must be >= 4")
        if not 0.0 <= self.reject_threshold <= 1.0:
            raise ValueError("reject_threshold must lie in [0, 1]")
        if self.target_variance <= 0:
            raise ValueError("target_variance must be positive")
        if self.sigma_x <= 0 or self.sigma_y <= 0:
            raise ValueError("gabor sigmas must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.threshold != "auto":
            value = int(self.threshold)  # raises on junk
            if not 0 <= value <= 255:
                raise ValueError("fixed threshold must lie in [0, 255]")

    def postprocess_params(self) -> PostprocessParams:
        return PostprocessParams(
            adjacency_window=self.adjacency_window,
            border_distance=self.border_distance,
            reconnect_gap=self.reconnect_gap,
            spur_length=self.spur_length,
        )

    def echo_lines(self) -> list[str]:
        """Stable key=value listing for report embedding."""
        return [
            f"{f.name} = {getattr(self, f.name)}"
            for f in sorted(fields(self), key=lambda f: f.name)
        ]


_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def load_config(path: str | Path | None = None, **overrides) -> PipelineConfig:
    """Build a config from defaults, an optional key = value file, and
    keyword overrides (CLI flags), in that precedence order."""
    values: dict[str, object] = {}
    if path is not None:
        known = {f.name: f.type for f in fields(PipelineConfig)}
        for raw in Path(path).read_text(encoding="utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: expected 'key = value', got {raw!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ValueError(f"{path}: unknown config key {key!r}")
            values[key] = _coerce(key, text)
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return PipelineConfig(**values)


def _coerce(key: str, text: str):
    default = getattr(PipelineConfig, key)
    if isinstance(default, bool):
        try:
            return _BOOL[text.lower()]
        except KeyError:
            raise ValueError(f"config key {key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text
