"""Tail analysis of random difference equations R_n = M_n R_{n-1} + Q_n
with invertible matrices: tail index, spherical eigenfunction, shifted
stationary law, drift, and the tail constant, all cross-checked against
direct simulation of the stationary solution."""

from .model import (
    ModelSpec,
    QLaw,
    RotationLaw,
    ScaleLaw,
    audit_assumptions,
    sample_pair,
    sample_pairs,
    sample_stopped_pair,
)
from .geometry import (
    GridFunction,
    ProductAccumulator,
    SphereGrid,
    advance,
    interpolate,
    lyapunov,
    make_grid,
    project,
)

__version__ = "0.1.0"
