"""Ridge orientation/frequency estimation, region quality mask and Gabor
band-pass enhancement.

All estimates are block-wise on a grid of ``block_size`` pixel blocks;
partial blocks at the right/bottom edges are allowed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .image import GrayImage, NormalizedImage

DEFAULT_BLOCK_SIZE = 16
DEFAULT_SMOOTH_SIGMA = 1.0  # in blocks
DEFAULT_FREQ_WINDOW = 32
DEFAULT_SIGMA_X = 4.0
DEFAULT_SIGMA_Y = 4.0
DEFAULT_COHERENCE_FLOOR = 0.3
DEFAULT_VARIANCE_FLOOR = 10.0  # on the normalized intensity scale
DEFAULT_REJECT_THRESHOLD = 0.25
MIN_RIDGE_PERIOD = 3.0  # px, at 500 dpi
MAX_RIDGE_PERIOD = 25.0
FREQ_FILL_PASSES = 3
BACKGROUND_INTENSITY = 255  # masked-out pixels in the enhanced image


@dataclass(frozen=True)
class OrientationField:
    """Per-block ridge direction in [0, pi) plus gradient coherence.

    Coherence is the normalized magnitude of the doubled-angle gradient sum;
    it is ~1 for clean parallel ridges and ~0 for isotropic noise or flat
    blocks, and feeds the recoverable-region decision.
    """

    block_size: int
    theta: np.ndarray  # (rows, cols) float64
    coherence: np.ndarray  # (rows, cols) float64

    @property
    def rows(self) -> int:
        return self.theta.shape[0]

    @property
    def cols(self) -> int:
        return self.theta.shape[1]


@dataclass(frozen=True)
class FrequencyMap:
    """Per-block ridge frequency in cycles/pixel; NaN marks blocks where no
    valid periodicity was found."""

    block_size: int
    freq: np.ndarray  # (rows, cols) float64, NaN = absent

    @property
    def rows(self) -> int:
        return self.freq.shape[0]

    @property
    def cols(self) -> int:
        return self.freq.shape[1]


@dataclass(frozen=True)
class RegionMask:
    """Per-block recoverable / unrecoverable labels."""

    block_size: int
    labels: np.ndarray  # (rows, cols) bool, True = recoverable

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @property
    def recoverable_fraction(self) -> float:
        return int(self.labels.sum()) / self.labels.size

    def pixel_mask(self, height: int, width: int) -> np.ndarray:
        """Expand block labels to a (height, width) boolean pixel mask."""
        bs = self.block_size
        expanded = np.repeat(np.repeat(self.labels, bs, axis=0), bs, axis=1)
        return expanded[:height, :width]


@dataclass(frozen=True)
class Rejection:
    """Image rejected: too few recoverable blocks."""

    recoverable_fraction: float
    threshold: float


def _block_grid(height: int, width: int, block_size: int) -> tuple[int, int]:
    return math.ceil(height / block_size), math.ceil(width / block_size)


def _block_sum(arr: np.ndarray, block_size: int) -> np.ndarray:
    rows = np.arange(0, arr.shape[0], block_size)
    cols = np.arange(0, arr.shape[1], block_size)
    return np.add.reduceat(np.add.reduceat(arr, rows, axis=0), cols, axis=1)


def estimate_orientation(
    img: NormalizedImage,
    block_size: int = DEFAULT_BLOCK_SIZE,
    smooth_sigma: float = DEFAULT_SMOOTH_SIGMA,
) -> OrientationField:
    """Block-wise dominant ridge direction from gradient covariance.

    Uses 3x3 Sobel gradients; per block,
    theta = atan2(sum 2*Gx*Gy, sum Gx^2 - Gy^2) / 2 + pi/2, i.e. the
    direction orthogonal to the dominant gradient, folded into [0, pi).
    The field is then smoothed with a Gaussian (sigma in block units) on the
    doubled-angle unit vectors so antipodal angles average correctly.
    """
    if block_size < 4:
        raise ValueError("block_size must be >= 4")
    data = img.pixels
    if data.shape[0] < block_size or data.shape[1] < block_size:
        raise ValueError(
            f"image {data.shape[1]}x{data.shape[0]} smaller than one "
            f"{block_size}px block"
        )
    gx = ndimage.sobel(data, axis=1, mode="nearest")
    gy = ndimage.sobel(data, axis=0, mode="nearest")

    sum_cross = _block_sum(2.0 * gx * gy, block_size)
    sum_diff = _block_sum(gx * gx - gy * gy, block_size)
    sum_total = _block_sum(gx * gx + gy * gy, block_size)

    theta = 0.5 * np.arctan2(sum_cross, sum_diff) + np.pi / 2.0
    coherence = np.hypot(sum_diff, sum_cross) / np.maximum(sum_total, 1e-12)

    if smooth_sigma > 0:
        doubled = 2.0 * theta
        cos2 = ndimage.gaussian_filter(np.cos(doubled), smooth_sigma, mode="nearest")
        sin2 = ndimage.gaussian_filter(np.sin(doubled), smooth_sigma, mode="nearest")
        theta = 0.5 * np.arctan2(sin2, cos2)
    theta = np.mod(theta, np.pi)
    return OrientationField(block_size, theta, coherence)


def _oriented_signature(
    data: np.ndarray, cx: float, cy: float, theta: float, window: int, depth: int
) -> np.ndarray | None:
    """Project an oriented window onto the across-ridge axis.

    Samples (bilinear) a window x depth patch centered at (cx, cy) with the
    window axis orthogonal to the ridge direction, averaging along the
    ridge. Returns None when too much of the window falls outside the image.
    """
    ux, uy = math.cos(theta + np.pi / 2), math.sin(theta + np.pi / 2)
    vx, vy = math.cos(theta), math.sin(theta)
    k = (np.arange(window) - (window - 1) / 2.0)[:, None]
    d = (np.arange(depth) - (depth - 1) / 2.0)[None, :]
    xs = cx + k * ux + d * vx
    ys = cy + k * uy + d * vy
    vals = ndimage.map_coordinates(
        data, np.stack([ys, xs]), order=1, mode="constant", cval=np.nan
    )
    counts = np.isfinite(vals).sum(axis=1)
    if (counts < depth // 2).any():
        return None
    with np.errstate(invalid="ignore"):
        return np.nanmean(vals, axis=1)


def _period_from_signature(sig: np.ndarray) -> float | None:
    # light smoothing, peak detection with sub-pixel parabolic refinement,
    # then mean peak spacing
    smooth = np.convolve(np.pad(sig, 1, mode="edge"), np.ones(3) / 3.0, mode="valid")
    interior = smooth[1:-1]
    idx = (
        np.nonzero(
            (interior > smooth[:-2])
            & (interior >= smooth[2:])
            & (interior > smooth.mean())
        )[0]
        + 1
    )
    if len(idx) < 2:
        return None
    positions = []
    for i in idx:
        y0, y1, y2 = smooth[i - 1], smooth[i], smooth[i + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if abs(denom) > 1e-12 else 0.0
        positions.append(i + np.clip(shift, -0.5, 0.5))
    spacings = np.diff(positions)
    period = float(spacings.mean())
    if period < MIN_RIDGE_PERIOD or period > MAX_RIDGE_PERIOD:
        return None
    return period


def estimate_frequency(
    img: NormalizedImage,
    orient: OrientationField,
    window: int = DEFAULT_FREQ_WINDOW,
) -> FrequencyMap:
    """Block-wise ridge frequency from oriented projection peak spacing.

    Each block projects an oriented window onto the axis orthogonal to the
    local ridge direction; the mean spacing of the projection's peaks is the
    ridge period. Blocks with no period in [3, 25] px are marked absent,
    then filled with the mean of their present 3x3 neighbors (up to 3
    passes).
    """
    data = img.pixels
    h, w = data.shape
    bs = orient.block_size
    rows, cols = _block_grid(h, w, bs)
    if (rows, cols) != (orient.rows, orient.cols):
        raise ValueError("orientation field does not cover the image")

    freq = np.full((rows, cols), np.nan)
    for r in range(rows):
        y0, y1 = r * bs, min((r + 1) * bs, h)
        for c in range(cols):
            x0, x1 = c * bs, min((c + 1) * bs, w)
            sig = _oriented_signature(
                data, (x0 + x1 - 1) / 2.0, (y0 + y1 - 1) / 2.0,
                float(orient.theta[r, c]), window, bs,
            )
            if sig is None:
                continue
            period = _period_from_signature(sig)
            if period is not None:
                freq[r, c] = 1.0 / period

    for _ in range(FREQ_FILL_PASSES):
        missing = np.isnan(freq)
        if not missing.any():
            break
        padded = np.pad(freq, 1, constant_values=np.nan)
        stack = np.stack(
            [
                padded[dr : dr + rows, dc : dc + cols]
                for dr in (0, 1, 2)
                for dc in (0, 1, 2)
                if not (dr == 1 and dc == 1)
            ]
        )
        present = np.isfinite(stack)
        counts = present.sum(axis=0)
        sums = np.where(present, stack, 0.0).sum(axis=0)
        fill = missing & (counts > 0)
        freq[fill] = sums[fill] / counts[fill]
        if not fill.any():
            break
    return FrequencyMap(bs, freq)


def compute_region_mask(
    img: NormalizedImage,
    orient: OrientationField,
    freq: FrequencyMap,
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD,
    coherence_floor: float = DEFAULT_COHERENCE_FLOOR,
    variance_floor: float = DEFAULT_VARIANCE_FLOOR,
) -> RegionMask | Rejection:
    """Label blocks recoverable/unrecoverable; reject low-quality images.

    A block is recoverable iff its intensity variance and orientation
    coherence clear their floors and a ridge frequency is present. When the
    recoverable fraction falls below ``reject_threshold`` a Rejection is
    returned instead of a mask.
    """
    if not 0.0 <= reject_threshold <= 1.0:
        raise ValueError("reject_threshold must lie in [0, 1]")
    data = img.pixels
    h, w = data.shape
    bs = orient.block_size
    rows, cols = _block_grid(h, w, bs)

    counts = _block_sum(np.ones_like(data), bs)
    sums = _block_sum(data, bs)
    sqsums = _block_sum(data * data, bs)
    variance = sqsums / counts - (sums / counts) ** 2

    labels = (
        (variance >= variance_floor)
        & (orient.coherence >= coherence_floor)
        & np.isfinite(freq.freq)
    )
    mask = RegionMask(bs, labels)
    if mask.recoverable_fraction < reject_threshold:
        return Rejection(mask.recoverable_fraction, reject_threshold)
    return mask


def _gabor_kernel(
    theta: float, freq: float, sigma_x: float, sigma_y: float, half: int
) -> np.ndarray:
    """Even-symmetric Gabor kernel tuned to (theta, freq), mean-subtracted."""
    dy, dx = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    ux, uy = math.cos(theta + np.pi / 2), math.sin(theta + np.pi / 2)
    across = dx * ux + dy * uy  # orthogonal to ridge direction
    along = -dx * uy + dy * ux
    kernel = np.exp(
        -0.5 * (across**2 / sigma_x**2 + along**2 / sigma_y**2)
    ) * np.cos(2.0 * np.pi * freq * across)
    return kernel - kernel.mean()


def gabor_response(
    img: NormalizedImage,
    orient: OrientationField,
    freq: FrequencyMap,
    mask: RegionMask,
    sigma_x: float = DEFAULT_SIGMA_X,
    sigma_y: float = DEFAULT_SIGMA_Y,
) -> np.ndarray:
    """Raw Gabor filter response; zero outside the recoverable region.

    Each recoverable block is convolved with one kernel tuned to its
    (theta, freq); theta is quantized to 1 degree steps so at most a few
    hundred kernels are ever built per image (kernel cache).
    """
    data = img.pixels
    h, w = data.shape
    bs = orient.block_size
    if not (
        orient.block_size == freq.block_size == mask.block_size
        and orient.theta.shape == freq.freq.shape == mask.labels.shape
    ):
        raise ValueError("orientation, frequency and mask block geometry differ")

    half = math.ceil(3.0 * max(sigma_x, sigma_y))
    padded = np.pad(data, half, mode="reflect")
    response = np.zeros((h, w))
    cache: dict[tuple[int, float], np.ndarray] = {}

    for r in range(mask.rows):
        y0, y1 = r * bs, min((r + 1) * bs, h)
        for c in range(mask.cols):
            if not mask.labels[r, c]:
                continue
            f = freq.freq[r, c]
            if not np.isfinite(f):
                raise ValueError(
                    f"recoverable block ({r}, {c}) has no frequency estimate"
                )
            x0, x1 = c * bs, min((c + 1) * bs, w)
            qdeg = int(round(math.degrees(orient.theta[r, c]))) % 180
            key = (qdeg, round(float(f), 6))
            kernel = cache.get(key)
            if kernel is None:
                kernel = _gabor_kernel(
                    math.radians(qdeg), key[1], sigma_x, sigma_y, half
                )
                cache[key] = kernel
            patch = padded[y0 : y1 + 2 * half, x0 : x1 + 2 * half]
            windows = sliding_window_view(patch, kernel.shape)
            bh, bw = y1 - y0, x1 - x0
            flat = windows.reshape(bh * bw, kernel.size)
            response[y0:y1, x0:x1] = (flat @ kernel.ravel()).reshape(bh, bw)
    return response


def gabor_enhance(
    img: NormalizedImage,
    orient: OrientationField,
    freq: FrequencyMap,
    mask: RegionMask,
    sigma_x: float = DEFAULT_SIGMA_X,
    sigma_y: float = DEFAULT_SIGMA_Y,
) -> GrayImage:
    """Gabor band-pass enhancement, rescaled to an 8-bit image.

    Recoverable pixels carry the rescaled filter response (ridges stay
    dark); unrecoverable pixels are set to the background intensity. A
    constant response maps to mid-gray (the kernels are DC-free).
    """
    response = gabor_response(img, orient, freq, mask, sigma_x, sigma_y)
    h, w = response.shape
    sel = mask.pixel_mask(h, w)
    out = np.full((h, w), BACKGROUND_INTENSITY, dtype=np.uint8)
    if sel.any():
        vals = response[sel]
        lo, hi = vals.min(), vals.max()
        if hi - lo < 1e-12:
            out[sel] = 128
        else:
            out[sel] = np.rint((vals - lo) * 255.0 / (hi - lo)).astype(np.uint8)
    return GrayImage(out)


def orientation_to_text(orient: OrientationField) -> str:
    """Debug dump: block grid of ridge angles in degrees."""
    lines = [
        " ".join(f"{math.degrees(t):6.1f}" for t in row) for row in orient.theta
    ]
    return "\n".join(lines) + "\n"


def frequency_to_text(freq: FrequencyMap) -> str:
    """Debug dump: block grid of frequencies; '-' marks absent blocks."""
    lines = [
        " ".join("     -" if not np.isfinite(f) else f"{f:6.4f}" for f in row)
        for row in freq.freq
    ]
    return "\n".join(lines) + "\n"
