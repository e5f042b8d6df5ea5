from .catalog import (
    DynamicalSystem,
    TorusSystem,
    ToralAutomorphism,
    StandardMap,
    Rotation,
    ShiftSystem,
    AffineHorseshoeSystem,
    build_system,
    cantor_horseshoe_cloud,
)
from .orbits import iterate, orbit_differential, periodic_orbit_cocycle, locate_periodic_orbit

__all__ = [
    "DynamicalSystem",
    "TorusSystem",
    "ToralAutomorphism",
    "StandardMap",
    "Rotation",
    "ShiftSystem",
    "AffineHorseshoeSystem",
    "build_system",
    "cantor_horseshoe_cloud",
    "iterate",
    "orbit_differential",
    "periodic_orbit_cocycle",
    "locate_periodic_orbit",
]
