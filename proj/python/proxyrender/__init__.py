# Copyright (c) 2026 the proxyrender authors
# SPDX-License-Identifier: Apache-2.0
"""Object-centric coordinate-map rendering and video diffusion toolkit.

Everything lives in the compiled extension; this package re-exports it and
pins the public surface.
"""

from ._core import (
    Camera,
    CoordinateMap,
    DatasetCorrupt,
    Divergence,
    InvalidInput,
    IoError,
    Model,
    Sample,
    coordmap_to_image,
    evaluate_psnr,
    g_ablation,
    generate_dataset,
    generate_frames,
    generate_sample,
    orbit_camera,
    patchify,
    perturb_coordmap,
    psnr,
    psnr_masked,
    rasterize_mesh,
    raycast_oracle,
    read_dataset,
    read_png,
    robustness_sweep,
    sample_frames,
    splat_points,
    ssim,
    ssim_masked,
    temporal_indices,
    train,
    unpatchify,
    write_dataset,
    write_png,
)

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "CoordinateMap",
    "DatasetCorrupt",
    "Divergence",
    "InvalidInput",
    "IoError",
    "Model",
    "Sample",
    "coordmap_to_image",
    "evaluate_psnr",
    "g_ablation",
    "generate_dataset",
    "generate_frames",
    "generate_sample",
    "orbit_camera",
    "patchify",
    "perturb_coordmap",
    "psnr",
    "psnr_masked",
    "rasterize_mesh",
    "raycast_oracle",
    "read_dataset",
    "read_png",
    "robustness_sweep",
    "sample_frames",
    "splat_points",
    "ssim",
    "ssim_masked",
    "temporal_indices",
    "train",
    "unpatchify",
    "write_dataset",
    "write_png",
]
