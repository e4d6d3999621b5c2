"""Bayer color-filter-array geometry: mosaicking and sub-image decomposition.

A Bayer sensor samples one color per photosite on a 2x2 tile that repeats
across the sensor: two green sites on one diagonal, one red and one blue on
the other. Green therefore covers 50% of the sites and red and blue 25% each.

Splitting the mosaic by tile position yields four half-resolution planes
(R, G1, G2, B), each a uniformly sampled image of a single color class. G1 is
the green site in the top tile row, G2 the one in the bottom tile row. This
decomposition is exactly invertible, which lets single-channel algorithms run
on CFA data before any interpolation happens.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from cfaisp.imageio import DimensionError, Plane, RgbImage


class CfaPattern(enum.Enum):
    """The four Bayer phases, named by their 2x2 tile read row-major."""

    RGGB = "rggb"
    GRBG = "grbg"
    GBRG = "gbrg"
    BGGR = "bggr"

    @classmethod
    def parse(cls, name: str) -> "CfaPattern":
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(p.value for p in cls)
            raise ValueError(f"unknown CFA pattern {name!r}; expected one of {choices}") from None

    @property
    def tile(self) -> tuple[tuple[str, str], tuple[str, str]]:
        letters = self.name
        return ((letters[0], letters[1]), (letters[2], letters[3]))

    def offset_of(self, color: str) -> tuple[int, int]:
        """(row, col) of a color within the 2x2 tile; for G, the top-row site."""
        for dy in (0, 1):
            for dx in (0, 1):
                if self.tile[dy][dx] == color:
                    return (dy, dx)
        raise ValueError(f"color {color!r} not in tile")

    @property
    def r_offset(self) -> tuple[int, int]:
        return self.offset_of("R")

    @property
    def b_offset(self) -> tuple[int, int]:
        return self.offset_of("B")

    @property
    def g1_offset(self) -> tuple[int, int]:
        dx = 0 if self.tile[0][0] == "G" else 1
        return (0, dx)

    @property
    def g2_offset(self) -> tuple[int, int]:
        dx = 0 if self.tile[1][0] == "G" else 1
        return (1, dx)


DEFAULT_PATTERN = CfaPattern.GBRG


def color_at(pattern: CfaPattern, row: int, col: int) -> str:
    """Color class ('R', 'G', or 'B') sampled at a photosite."""
    return pattern.tile[row % 2][col % 2]


@dataclass(frozen=True)
class MosaicImage:
    """Single-plane CFA frame tagged with its Bayer phase.

    Dimensions must be even so the frame holds whole 2x2 tiles.
    """

    pattern: CfaPattern
    plane: Plane

    def __post_init__(self) -> None:
        h, w = self.plane.data.shape
        if h % 2 or w % 2:
            raise DimensionError(f"mosaic requires even dimensions, got {w}x{h}")

    @property
    def height(self) -> int:
        return self.plane.height

    @property
    def width(self) -> int:
        return self.plane.width


@dataclass(frozen=True)
class SubImages:
    """The four half-resolution color planes of a mosaic plus its geometry."""

    r: Plane
    g1: Plane
    g2: Plane
    b: Plane
    pattern: CfaPattern
    full_width: int
    full_height: int

    def __post_init__(self) -> None:
        if self.full_width % 2 or self.full_height % 2:
            raise DimensionError(f"full dimensions must be even, got {self.full_width}x{self.full_height}")
        want = (self.full_height // 2, self.full_width // 2)
        for name in ("r", "g1", "g2", "b"):
            got = getattr(self, name).data.shape
            if got != want:
                raise DimensionError(f"sub-image {name} has shape {got}, expected {want}")

    @property
    def planes(self) -> tuple[Plane, Plane, Plane, Plane]:
        return (self.r, self.g1, self.g2, self.b)


def mosaic_from_rgb(image: RgbImage, pattern: CfaPattern) -> MosaicImage:
    """Sample an RGB image through a Bayer CFA (keep one channel per site)."""
    h, w = image.r.data.shape
    if h % 2 or w % 2:
        raise DimensionError(f"mosaicking requires even dimensions, got {w}x{h}")
    channel = {"R": image.r.data, "G": image.g.data, "B": image.b.data}
    out = np.empty((h, w), dtype=np.float64)
    for dy in (0, 1):
        for dx in (0, 1):
            color = pattern.tile[dy][dx]
            out[dy::2, dx::2] = channel[color][dy::2, dx::2]
    return MosaicImage(pattern, Plane(out))


def decompose(mosaic: MosaicImage) -> SubImages:
    """Split a mosaic into its four half-resolution color planes."""
    data = mosaic.plane.data
    pattern = mosaic.pattern
    parts = {}
    for name, (dy, dx) in (
        ("r", pattern.r_offset),
        ("g1", pattern.g1_offset),
        ("g2", pattern.g2_offset),
        ("b", pattern.b_offset),
    ):
        parts[name] = Plane(data[dy::2, dx::2])
    return SubImages(
        r=parts["r"],
        g1=parts["g1"],
        g2=parts["g2"],
        b=parts["b"],
        pattern=pattern,
        full_width=mosaic.width,
        full_height=mosaic.height,
    )


def recompose(subs: SubImages) -> MosaicImage:
    """Scatter four sub-images back into a full-resolution mosaic.

    Exact inverse of decompose: every sample lands on its original site
    bit-for-bit.
    """
    out = np.empty((subs.full_height, subs.full_width), dtype=np.float64)
    pattern = subs.pattern
    for plane, (dy, dx) in (
        (subs.r, pattern.r_offset),
        (subs.g1, pattern.g1_offset),
        (subs.g2, pattern.g2_offset),
        (subs.b, pattern.b_offset),
    ):
        out[dy::2, dx::2] = plane.data
    return MosaicImage(pattern, Plane(out))
