"""Propagators for Schrodinger operators with time-dependent point interactions."""

__version__ = "0.1.0"

from .hamiltonians import (  # noqa: E402
    MovingDeltaSpec,
    SpatialGrid,
    StaticDeltaFamilySpec,
    StaticFamily,
    MovingFamily,
    CoMovingFamily,
)
from .numkit import HermitianBanded, Tolerances  # noqa: E402
from .propagator import (  # noqa: E402
    GaussianPacket,
    ProductSchedule,
    WaveFunction,
    evolve_backward,
    evolve_bidirectional,
    evolve_forward,
)

__all__ = [
    "MovingDeltaSpec",
    "SpatialGrid",
    "StaticDeltaFamilySpec",
    "StaticFamily",
    "MovingFamily",
    "CoMovingFamily",
    "HermitianBanded",
    "Tolerances",
    "GaussianPacket",
    "ProductSchedule",
    "WaveFunction",
    "evolve_backward",
    "evolve_bidirectional",
    "evolve_forward",
]
