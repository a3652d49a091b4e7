import math

import numpy as np
import pytest

from ridgekit.synth import ConcentricPattern, ParallelPattern, SynthSpec, generate


def make_blob_image(rng: np.random.Generator, size: int = 96) -> np.ndarray:
    """Random union of filled discs and rectangles, as a {0,1} array."""
    img = np.zeros((size, size), np.uint8)
    yy, xx = np.mgrid[0:size, 0:size]
    for _ in range(int(rng.integers(2, 7))):
        cy, cx = rng.integers(8, size - 8, 2)
        r = int(rng.integers(3, size // 6))
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = 1
    for _ in range(int(rng.integers(0, 3))):
        y0, x0 = rng.integers(0, size - 12, 2)
        h, w = rng.integers(4, 14, 2)
        img[y0 : y0 + h, x0 : x0 + w] = 1
    return img


GRID_10 = (
    (48, 48, "ending"), (48, 120, "bifurcation"), (48, 192, "ending"),
    (120, 48, "bifurcation"), (120, 120, "ending"), (120, 192, "bifurcation"),
    (192, 48, "ending"), (192, 120, "bifurcation"), (192, 192, "ending"),
    (120, 225, "ending"),
)

_CORNERS = ((-60.0, -60.0), (316.0, -60.0), (-60.0, 316.0), (316.0, 316.0))


def corpus_spec(k: int, n_total: int = 20, max_noise: float = 40.0) -> SynthSpec:
    """Deterministic mixed-pattern corpus member: 10 injected minutiae,
    noise amplitude ramped over the corpus."""
    noise = max_noise * k / max(n_total - 1, 1)
    if k % 2 == 0:
        pattern = ParallelPattern(math.radians(k * 17.0))
    else:
        pattern = ConcentricPattern(*_CORNERS[(k // 2) % 4])
    return SynthSpec(
        256, 256, pattern, 8.0,
        injected=GRID_10, noise_amplitude=noise, seed=100 + k,
    )


@pytest.fixture
def clean_stripes():
    """Noise-free parallel ridges at 30 deg, period 8."""
    img, truth = generate(SynthSpec(256, 256, ParallelPattern(math.radians(30)), 8.0))
    return img, truth
