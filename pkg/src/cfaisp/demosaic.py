"""Demosaicking: reconstruct full RGB from a single-plane Bayer mosaic.

Three reconstructions with one shared border policy (mirror reflection,
edge sample not duplicated):

- bilinear: each missing sample is the mean of the same-color neighbors in
  its 3x3 window; measured samples pass through.
- gradient: bilinear plus a gain-weighted Laplacian correction taken from
  the channel actually measured at the site, expressed as fixed 5x5 kernels.
  Sharper than bilinear on detailed content; may overshoot [0, 1], which is
  left intact until encode-time clamping.
- joint bilateral: every sample (missing and measured) is a bilateral
  average over the same-color sites in a radius ceil(3 sigma_s) window,
  range-weighted on a bilinear green estimate, so interpolation and light
  denoising happen in one pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve

from cfaisp.cfa import CfaPattern, MosaicImage
from cfaisp.imageio import Plane, RgbImage

DEMOSAICKER_KINDS = ("bilinear", "gradient", "joint-bilateral")

# Gradient-correction gains: G estimated at an R/B site, R/B estimated at a
# G site, and R/B estimated at the opposite chroma site.
GAIN_G_AT_RB = 1 / 2
GAIN_RB_AT_G = 5 / 8
GAIN_RB_AT_OPPOSITE = 3 / 4


@dataclass(frozen=True)
class DemosaickerConfig:
    """Demosaicker selection; sigma_s/sigma_r apply to joint-bilateral only."""

    kind: str = "bilinear"
    sigma_s: float = 1.5
    sigma_r: float = 0.1

    def __post_init__(self) -> None:
        if self.kind not in DEMOSAICKER_KINDS:
            raise ValueError(f"unknown demosaicker kind {self.kind!r}; expected one of {DEMOSAICKER_KINDS}")
        if self.kind == "joint-bilateral":
            if not self.sigma_s > 0:
                raise ValueError(f"sigma_s must be > 0, got {self.sigma_s}")
            if not self.sigma_r > 0:
                raise ValueError(f"sigma_r must be > 0, got {self.sigma_r}")

    @property
    def is_joint(self) -> bool:
        return self.kind == "joint-bilateral"

    def describe(self) -> str:
        """Compact comma-free descriptor used in CSV output."""
        if self.kind == "joint-bilateral":
            return f"joint-bilateral(sigma_s={self.sigma_s:g} sigma_r={self.sigma_r:g})"
        return self.kind


def _site_masks(pattern: CfaPattern, shape: tuple[int, int]) -> dict[str, np.ndarray]:
    """Boolean site masks per color, with G split by the row it shares.

    'G_r_row' marks green sites whose row also holds red samples (so their
    horizontal neighbors are red), 'G_b_row' the greens in blue rows.
    """
    masks = {name: np.zeros(shape, dtype=bool) for name in ("R", "G", "B", "G_r_row", "G_b_row")}
    r_row = pattern.r_offset[0]
    for dy in (0, 1):
        for dx in (0, 1):
            color = pattern.tile[dy][dx]
            masks[color][dy::2, dx::2] = True
            if color == "G":
                split = "G_r_row" if dy == r_row else "G_b_row"
                masks[split][dy::2, dx::2] = True
    return masks


_ONES3 = np.ones((3, 3), dtype=np.float64)

# 5x5 gradient-corrected kernels in eighths. Each is the bilinear stencil for
# the target color plus the gain-weighted Laplacian of the measured channel;
# all are symmetric, so convolution and correlation coincide.
_K_G_AT_RB = (
    np.array(
        [
            [0, 0, -1, 0, 0],
            [0, 0, 2, 0, 0],
            [-1, 2, 4, 2, -1],
            [0, 0, 2, 0, 0],
            [0, 0, -1, 0, 0],
        ],
        dtype=np.float64,
    )
    / 8.0
)

_K_RB_AT_G_HROW = (
    np.array(
        [
            [0, 0, 0.5, 0, 0],
            [0, -1, 0, -1, 0],
            [-1, 4, 5, 4, -1],
            [0, -1, 0, -1, 0],
            [0, 0, 0.5, 0, 0],
        ],
        dtype=np.float64,
    )
    / 8.0
)

_K_RB_AT_G_VROW = _K_RB_AT_G_HROW.T

_K_RB_AT_OPPOSITE = (
    np.array(
        [
            [0, 0, -1.5, 0, 0],
            [0, 2, 0, 2, 0],
            [-1.5, 0, 6, 0, -1.5],
            [0, 2, 0, 2, 0],
            [0, 0, -1.5, 0, 0],
        ],
        dtype=np.float64,
    )
    / 8.0
)


def demosaic_bilinear(mosaic: MosaicImage) -> RgbImage:
    """Mean of the available same-color neighbors in each 3x3 window.

    Measured samples pass through unchanged. For inputs in [0, 1] the output
    stays in [0, 1] because every sample is a convex combination.
    """
    data = mosaic.plane.data
    masks = _site_masks(mosaic.pattern, data.shape)
    channels = {}
    for color in ("R", "G", "B"):
        mask = masks[color].astype(np.float64)
        num = convolve(data * mask, _ONES3, mode="mirror")
        den = convolve(mask, _ONES3, mode="mirror")
        channels[color] = np.where(masks[color], data, num / den)
    return RgbImage(Plane(channels["R"]), Plane(channels["G"]), Plane(channels["B"]))


def demosaic_gradient(mosaic: MosaicImage) -> RgbImage:
    """Bilinear plus gain-weighted Laplacian correction, fixed 5x5 kernels.

    The correction at each site comes from the channel measured there, with
    gains 1/2 (G at R/B), 5/8 (R/B at G), and 3/4 (R/B at the opposite
    chroma site). Linear ramps are reproduced exactly in the interior.
    """
    data = mosaic.plane.data
    masks = _site_masks(mosaic.pattern, data.shape)
    est_g = convolve(data, _K_G_AT_RB, mode="mirror")
    est_h = convolve(data, _K_RB_AT_G_HROW, mode="mirror")
    est_v = convolve(data, _K_RB_AT_G_VROW, mode="mirror")
    est_x = convolve(data, _K_RB_AT_OPPOSITE, mode="mirror")

    green = np.where(masks["G"], data, est_g)

    red = data.copy()
    red[masks["G_r_row"]] = est_h[masks["G_r_row"]]
    red[masks["G_b_row"]] = est_v[masks["G_b_row"]]
    red[masks["B"]] = est_x[masks["B"]]

    blue = data.copy()
    blue[masks["G_b_row"]] = est_h[masks["G_b_row"]]
    blue[masks["G_r_row"]] = est_v[masks["G_r_row"]]
    blue[masks["R"]] = est_x[masks["R"]]

    return RgbImage(Plane(red), Plane(green), Plane(blue))


def demosaic_joint_bilateral(mosaic: MosaicImage, sigma_s: float, sigma_r: float) -> RgbImage:
    """Bilateral interpolation over same-color sites, guided by bilinear G.

    Every output sample, measured sites included, is the weight-normalized
    average of the same-color mosaic samples within radius ceil(3 sigma_s),
    with weight exp(-d^2 / 2 sigma_s^2) exp(-(g_p - g_q)^2 / 2 sigma_r^2)
    where g is the bilinear green estimate. Filtering the measured sites is
    what makes this a joint demosaick-denoise rather than interpolation.
    """
    if not sigma_s > 0:
        raise ValueError(f"sigma_s must be > 0, got {sigma_s}")
    if not sigma_r > 0:
        raise ValueError(f"sigma_r must be > 0, got {sigma_r}")
    data = mosaic.plane.data
    h, w = data.shape
    masks = _site_masks(mosaic.pattern, data.shape)
    guide = demosaic_bilinear(mosaic).g.data

    radius = math.ceil(3.0 * sigma_s)
    data_pad = np.pad(data, radius, mode="reflect")
    guide_pad = np.pad(guide, radius, mode="reflect")
    inv_2ss = 1.0 / (2.0 * sigma_s**2)
    inv_2sr = 1.0 / (2.0 * sigma_r**2)

    channels = {}
    for color in ("R", "G", "B"):
        mask_pad = np.pad(masks[color].astype(np.float64), radius, mode="reflect")
        num = np.zeros((h, w), dtype=np.float64)
        den = np.zeros((h, w), dtype=np.float64)
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                rows = slice(radius + dy, radius + dy + h)
                cols = slice(radius + dx, radius + dx + w)
                spatial = math.exp(-(dy * dy + dx * dx) * inv_2ss)
                weight = mask_pad[rows, cols] * (spatial * np.exp(-((guide_pad[rows, cols] - guide) ** 2) * inv_2sr))
                num += weight * data_pad[rows, cols]
                den += weight
        # den > 0 whenever any same-color range weight survives underflow;
        # the floor only guards pathological all-underflow windows.
        channels[color] = num / np.maximum(den, 1e-300)
    return RgbImage(Plane(channels["R"]), Plane(channels["G"]), Plane(channels["B"]))


def demosaic(mosaic: MosaicImage, config: DemosaickerConfig) -> RgbImage:
    """Apply the configured demosaicker."""
    if config.kind == "bilinear":
        return demosaic_bilinear(mosaic)
    if config.kind == "gradient":
        return demosaic_gradient(mosaic)
    return demosaic_joint_bilateral(mosaic, config.sigma_s, config.sigma_r)
