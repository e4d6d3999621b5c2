"""Bayer CFA pipeline simulator.

Simulates a minimal camera processing chain on color-filter-array data:
mosaicking a reference RGB image, injecting deterministic Gaussian sensor
noise, denoising at different points of the chain, demosaicking, and scoring
the result against the reference.
"""

from cfaisp.cfa import CfaPattern, MosaicImage, SubImages, decompose, mosaic_from_rgb, recompose
from cfaisp.demosaic import DemosaickerConfig, demosaic
from cfaisp.denoise import DenoiserConfig, denoise_plane, denoise_subimages
from cfaisp.imageio import DimensionError, Plane, PnmError, RgbImage, decode_pnm, encode_pnm
from cfaisp.noise import NoiseSpec, add_awgn, estimate_sigma
from cfaisp.pipeline import ExperimentGrid, ExperimentRecord, Strategy, cpsnr, mse, psnr, run_experiment, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "CfaPattern",
    "DemosaickerConfig",
    "DenoiserConfig",
    "DimensionError",
    "ExperimentGrid",
    "ExperimentRecord",
    "MosaicImage",
    "NoiseSpec",
    "Plane",
    "PnmError",
    "RgbImage",
    "Strategy",
    "SubImages",
    "add_awgn",
    "cpsnr",
    "decode_pnm",
    "decompose",
    "demosaic",
    "denoise_plane",
    "denoise_subimages",
    "encode_pnm",
    "estimate_sigma",
    "mosaic_from_rgb",
    "mse",
    "psnr",
    "recompose",
    "run_experiment",
    "run_pipeline",
]
