"""Single-plane denoisers and their application to CFA sub-images.

Four filters with one shared contract (Plane in, same-sized Plane out):

- gaussian: separable blur, truncated at three sigmas per side.
- median: square-window rank filter.
- bilateral: edge-preserving blur weighting neighbors by spatial distance
  and intensity difference.
- wavelet: soft thresholding of orthonormal Haar detail coefficients with a
  per-subband data-driven threshold; the coarse approximation is kept as is.

Borders are handled by mirror reflection without duplicating the edge sample.
The wavelet threshold for a subband with noise level sigma_n and signal
spread sigma_x = sqrt(max(var - sigma_n^2, 0)) is sigma_n^2 / sigma_x; a
subband with no estimated signal is zeroed outright.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import convolve1d, median_filter

from cfaisp.cfa import SubImages
from cfaisp.imageio import DimensionError, Plane
from cfaisp.noise import estimate_sigma

_SQRT2 = math.sqrt(2.0)

DENOISER_KINDS = ("none", "gaussian", "median", "bilateral", "wavelet")


@dataclass(frozen=True)
class DenoiserConfig:
    """Denoiser selection plus the parameters the chosen kind reads.

    kind "none" is the identity filter, kept so pipelines can be configured
    with denoising disabled without special-casing call sites. sigma_n=None
    asks the wavelet filter to estimate the noise level from each plane it
    processes.
    """

    kind: str = "wavelet"
    sigma_s: float = 1.0
    radius: int = 1
    sigma_r: float = 0.1
    levels: int = 3
    sigma_n: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in DENOISER_KINDS:
            raise ValueError(f"unknown denoiser kind {self.kind!r}; expected one of {DENOISER_KINDS}")
        if self.kind in ("gaussian", "bilateral") and not self.sigma_s > 0:
            raise ValueError(f"sigma_s must be > 0, got {self.sigma_s}")
        if self.kind == "bilateral" and not self.sigma_r > 0:
            raise ValueError(f"sigma_r must be > 0, got {self.sigma_r}")
        if self.kind == "median" and self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.kind == "wavelet":
            if self.levels < 1:
                raise ValueError(f"levels must be >= 1, got {self.levels}")
            if self.sigma_n is not None and (not math.isfinite(self.sigma_n) or self.sigma_n < 0):
                raise ValueError(f"sigma_n must be finite and >= 0, got {self.sigma_n}")

    def describe(self) -> str:
        """Compact comma-free descriptor used in CSV output."""
        if self.kind == "none":
            return "none"
        if self.kind == "gaussian":
            return f"gaussian(sigma_s={self.sigma_s:g})"
        if self.kind == "median":
            return f"median(radius={self.radius})"
        if self.kind == "bilateral":
            return f"bilateral(sigma_s={self.sigma_s:g} sigma_r={self.sigma_r:g})"
        sigma_n = "auto" if self.sigma_n is None else f"{self.sigma_n:g}"
        return f"wavelet(levels={self.levels} sigma_n={sigma_n})"


@dataclass(frozen=True)
class WaveletPyramid:
    """Orthonormal Haar decomposition: coarse LL plus per-level detail triples.

    details[0] is the finest level; each entry is (LH, HL, HH) where the
    first letter is the vertical filter and the second the horizontal one.
    """

    ll: np.ndarray
    details: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]

    @property
    def levels(self) -> int:
        return len(self.details)


def dwt_haar(plane: Plane, levels: int) -> WaveletPyramid:
    """Multi-level orthonormal 2-D Haar transform.

    Both dimensions must be divisible by 2**levels. The (a +/- b) / sqrt(2)
    filter pair preserves energy exactly, so the inverse below reconstructs
    to floating-point roundoff.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    h, w = plane.data.shape
    factor = 2**levels
    if h % factor or w % factor:
        raise DimensionError(f"dimensions {w}x{h} not divisible by 2^{levels}")
    current = plane.data
    details = []
    for _ in range(levels):
        lo = (current[:, 0::2] + current[:, 1::2]) / _SQRT2
        hi = (current[:, 0::2] - current[:, 1::2]) / _SQRT2
        ll = (lo[0::2, :] + lo[1::2, :]) / _SQRT2
        hl = (lo[0::2, :] - lo[1::2, :]) / _SQRT2
        lh = (hi[0::2, :] + hi[1::2, :]) / _SQRT2
        hh = (hi[0::2, :] - hi[1::2, :]) / _SQRT2
        details.append((lh, hl, hh))
        current = ll
    return WaveletPyramid(ll=current, details=tuple(details))


def idwt_haar(pyramid: WaveletPyramid) -> Plane:
    """Invert dwt_haar, coarsest level first."""
    current = pyramid.ll
    for lh, hl, hh in reversed(pyramid.details):
        lo = np.empty((current.shape[0] * 2, current.shape[1]), dtype=np.float64)
        lo[0::2, :] = (current + hl) / _SQRT2
        lo[1::2, :] = (current - hl) / _SQRT2
        hi = np.empty_like(lo)
        hi[0::2, :] = (lh + hh) / _SQRT2
        hi[1::2, :] = (lh - hh) / _SQRT2
        out = np.empty((lo.shape[0], lo.shape[1] * 2), dtype=np.float64)
        out[:, 0::2] = (lo + hi) / _SQRT2
        out[:, 1::2] = (lo - hi) / _SQRT2
        current = out
    return Plane(current)


def _gaussian_kernel(sigma_s: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma_s)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma_s**2))
    return kernel / kernel.sum()


def denoise_gaussian(plane: Plane, sigma_s: float) -> Plane:
    """Separable Gaussian blur with a renormalized +/- 3 sigma kernel."""
    if not sigma_s > 0:
        raise ValueError(f"sigma_s must be > 0, got {sigma_s}")
    kernel = _gaussian_kernel(sigma_s)
    blurred = convolve1d(plane.data, kernel, axis=0, mode="mirror")
    blurred = convolve1d(blurred, kernel, axis=1, mode="mirror")
    return Plane(blurred)


def denoise_median(plane: Plane, radius: int) -> Plane:
    """Median over a (2 radius + 1) square window."""
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    return Plane(median_filter(plane.data, size=2 * radius + 1, mode="mirror"))


def denoise_bilateral(plane: Plane, sigma_s: float, sigma_r: float) -> Plane:
    """Bilateral filter: Gaussian in space, Gaussian in intensity difference.

    Each output sample is the weighted mean over a +/- ceil(3 sigma_s) window
    with weight exp(-d^2 / 2 sigma_s^2) exp(-(I_p - I_q)^2 / 2 sigma_r^2),
    normalized per pixel. The center sample participates with weight 1.
    """
    if not sigma_s > 0:
        raise ValueError(f"sigma_s must be > 0, got {sigma_s}")
    if not sigma_r > 0:
        raise ValueError(f"sigma_r must be > 0, got {sigma_r}")
    radius = math.ceil(3.0 * sigma_s)
    data = plane.data
    h, w = data.shape
    padded = np.pad(data, radius, mode="reflect")
    accum = np.zeros((h, w), dtype=np.float64)
    weight_sum = np.zeros((h, w), dtype=np.float64)
    inv_2ss = 1.0 / (2.0 * sigma_s**2)
    inv_2sr = 1.0 / (2.0 * sigma_r**2)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            shifted = padded[radius + dy : radius + dy + h, radius + dx : radius + dx + w]
            spatial = math.exp(-(dy * dy + dx * dx) * inv_2ss)
            weight = spatial * np.exp(-((shifted - data) ** 2) * inv_2sr)
            accum += weight * shifted
            weight_sum += weight
    return Plane(accum / weight_sum)


def _soft_threshold(band: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(band) * np.maximum(np.abs(band) - threshold, 0.0)


def denoise_wavelet(plane: Plane, levels: int, sigma_n: Optional[float] = None) -> Plane:
    """Soft-threshold Haar detail coefficients, one threshold per subband.

    sigma_n=None estimates the noise level from the plane itself. sigma_n=0
    returns the input unchanged (every threshold would be zero).
    """
    if sigma_n is None:
        sigma_n = estimate_sigma(plane)
    if sigma_n < 0 or not math.isfinite(sigma_n):
        raise ValueError(f"sigma_n must be finite and >= 0, got {sigma_n}")
    if sigma_n == 0.0:
        return plane
    pyramid = dwt_haar(plane, levels)
    noise_var = sigma_n**2
    new_details = []
    for triple in pyramid.details:
        new_triple = []
        for band in triple:
            signal_var = max(float(band.var()) - noise_var, 0.0)
            if signal_var == 0.0:
                new_triple.append(np.zeros_like(band))
            else:
                threshold = noise_var / math.sqrt(signal_var)
                new_triple.append(_soft_threshold(band, threshold))
        new_details.append(tuple(new_triple))
    return idwt_haar(WaveletPyramid(ll=pyramid.ll, details=tuple(new_details)))


def denoise_plane(plane: Plane, config: DenoiserConfig) -> Plane:
    """Apply the configured denoiser to one plane."""
    if config.kind == "none":
        return plane
    if config.kind == "gaussian":
        return denoise_gaussian(plane, config.sigma_s)
    if config.kind == "median":
        return denoise_median(plane, config.radius)
    if config.kind == "bilateral":
        return denoise_bilateral(plane, config.sigma_s, config.sigma_r)
    return denoise_wavelet(plane, config.levels, config.sigma_n)


def denoise_subimages(subs: SubImages, config: DenoiserConfig) -> SubImages:
    """Denoise the four CFA sub-images independently with one configuration.

    Each half-resolution plane (R, G1, G2, B) is a uniformly sampled image of
    one color class, so the single-plane filters apply without modification.
    """
    return SubImages(
        r=denoise_plane(subs.r, config),
        g1=denoise_plane(subs.g1, config),
        g2=denoise_plane(subs.g2, config),
        b=denoise_plane(subs.b, config),
        pattern=subs.pattern,
        full_width=subs.full_width,
        full_height=subs.full_height,
    )
