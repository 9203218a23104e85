"""Hybrid walk-on-spheres / boundary-integral Dirichlet-to-Neumann solver."""

from .errors import BiewosError
from .geometry import Scene, SceneKind
from .greens import HemisphereFrame, SphereFrame
from .wos import Estimate, WosConfig, estimate_u, estimate_u_batch

__version__ = "0.1.0"

__all__ = [
    "BiewosError",
    "Estimate",
    "HemisphereFrame",
    "Scene",
    "SceneKind",
    "SphereFrame",
    "WosConfig",
    "estimate_u",
    "estimate_u_batch",
    "__version__",
]
