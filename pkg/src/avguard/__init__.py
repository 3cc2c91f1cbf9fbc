"""avguard: sensor data validation and driving-safety evaluation workbench.

Three pipelines over a deterministic synthetic sensor world:

- ``avguard.single``  — optical-attack detection from stereo/LiDAR disparity
  consistency, plus decoding of which sensors are compromised.
- ``avguard.fleet``   — cross-vehicle LiDAR validation through height grids.
- ``avguard.safety``  — lattice motion planning and driving-safety metrics
  under perturbed detections.

``avguard.simworld`` renders the synthetic frames; ``avguard.bench`` runs
seeded experiments and handles persistence and reporting.
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    CameraModel,
    DisparityMap,
    OrientedBox,
    RigidTransform,
    apply_transform,
    depth_to_disparity,
    disparity_to_depth,
    rotated_iou,
)
