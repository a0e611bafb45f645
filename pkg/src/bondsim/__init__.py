"""Bond-qubit MPS circuits for the transverse-field Ising chain.

A uniform matrix-product state of the half-infinite chain is carried by a
small bond register; each physical site is one mid-circuit measure-and-reset
cycle of a single system qubit.  The package covers variational parameter
optimization, compilation to a native ZZ-interaction gate set, exact and
shot-sampled noisy simulation, bond-state tomography, and zero-noise
extrapolation, validated against exact thermodynamic-limit references.
"""

from .ansatz import AnsatzParams, OptimizerConfig, variational_optimize
from .mps import (BondsimError, DegenerateChannelError, MPSTensor,
                  NotIsometricError)
from .noise import NoiseModel
from .sweeps import SweepConfig, run_energy_sweep, run_entropy_sweep, \
    run_validation
from .tfim import exact_energy_density, exact_half_chain_entropy

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "BondsimError",
    "DegenerateChannelError",
    "MPSTensor",
    "NoiseModel",
    "NotIsometricError",
    "OptimizerConfig",
    "SweepConfig",
    "exact_energy_density",
    "exact_half_chain_entropy",
    "run_energy_sweep",
    "run_entropy_sweep",
    "run_validation",
    "variational_optimize",
    "__version__",
]
