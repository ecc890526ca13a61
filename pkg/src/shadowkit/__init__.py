"""Classical-shadow tomography with kernel ML pipelines at desk scale."""

__version__ = "0.1.0"

from . import (  # noqa: F401
    accel,
    classifier,
    experiments,
    kernels,
    observables,
    predictor,
    shadows,
    simulator,
)
