"""Binarization of enhanced images and thinning to a 1-pixel skeleton."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import GrayImage


@dataclass(frozen=True)
class BinarizeParams:
    """Threshold separating background from ridge intensities."""

    threshold: int

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold {self.threshold} outside [0, 255]")


@dataclass(frozen=True)
class BinaryImage:
    """Per-pixel ridge (1) / background (0) bitmap."""

    bits: np.ndarray  # (height, width), uint8 in {0, 1}

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ValueError(f"expected 2-D bit array, got shape {bits.shape}")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be 0 or 1")
        object.__setattr__(self, "bits", bits.astype(np.uint8))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]


@dataclass(frozen=True)
class Skeleton(BinaryImage):
    """Ridge bitmap thinned to 1-pixel-wide curves."""


def binarize(img: GrayImage, params: BinarizeParams) -> BinaryImage:
    """Threshold: ridge (1) where intensity >= threshold, else background."""
    return BinaryImage((img.pixels >= params.threshold).astype(np.uint8))


def auto_threshold(img: GrayImage, mask) -> BinarizeParams:
    """Mean intensity over recoverable pixels, rounded to nearest integer.

    ``mask`` is a RegionMask covering the image.
    """
    sel = mask.pixel_mask(img.height, img.width)
    if not sel.any():
        raise ValueError("cannot choose threshold: no recoverable pixels")
    mean = img.pixels[sel].astype(np.float64).mean()
    return BinarizeParams(int(np.rint(mean)))


def _shifted_neighbors(padded: np.ndarray):
    """The 8 neighbor planes of the unpadded core, as views into `padded`."""
    n = padded[:-2, 1:-1]
    ne = padded[:-2, 2:]
    e = padded[1:-1, 2:]
    se = padded[2:, 2:]
    s = padded[2:, 1:-1]
    sw = padded[2:, :-2]
    w = padded[1:-1, :-2]
    nw = padded[:-2, :-2]
    return n, ne, e, se, s, sw, w, nw


def _simple_and_degree(padded: np.ndarray):
    """Connectivity (Hilditch) number and neighbor count for every core pixel.

    A ridge pixel whose connectivity number is 1 can be deleted without
    changing 8-connected ridge topology or 4-connected background topology.
    """
    n, ne, e, se, s, sw, w, nw = _shifted_neighbors(padded)
    b1 = (1 - e) * np.maximum(ne, n)
    b2 = (1 - n) * np.maximum(nw, w)
    b3 = (1 - w) * np.maximum(sw, s)
    b4 = (1 - s) * np.maximum(se, e)
    conn = b1 + b2 + b3 + b4
    degree = n + ne + e + se + s + sw + w + nw
    return conn, degree


def thin(bin_img: BinaryImage) -> Skeleton:
    """Peel ridge borders until nothing changes, preserving topology.

    Each full pass visits the four border directions (N, S, E, W); within a
    direction, deletions run over the four 2x2 checkerboard subfields so that
    simultaneously deleted pixels are never 8-adjacent. Every deleted pixel is
    simple (connectivity number 1) with at least 2 ridge neighbors at deletion
    time, so component counts are preserved and endpoints of open curves
    survive. The result is a fixpoint: thinning a skeleton returns it
    unchanged.
    """
    h, w = bin_img.bits.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = bin_img.bits
    core = padded[1:-1, 1:-1]

    # border-direction test: that 4-neighbor is background
    directions = ((0, 1), (2, 1), (1, 2), (1, 0))  # N, S, E, W offsets in padded
    subfields = [
        np.zeros((h, w), dtype=bool) for _ in range(4)
    ]
    for k, (ro, co) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        subfields[k][ro::2, co::2] = True

    changed = True
    while changed:
        changed = False
        for ro, co in directions:
            # candidates fixed at pass start: one border layer per direction
            dir_bg = padded[ro : ro + h, co : co + w] == 0
            for sub in subfields:
                conn, degree = _simple_and_degree(padded)
                kill = (
                    (core == 1)
                    & dir_bg
                    & sub
                    & (conn == 1)
                    & (degree >= 2)
                )
                if kill.any():
                    core[kill] = 0
                    changed = True
    return Skeleton(core.copy())
