"""echolab: resonant echo chains in a linearised shear-flow mode system.

Modules: core_model (types, coefficients, norms), integrator (adaptive RK),
duhamel_oracle (path-sum reference solver), scattering_models (reduced
resonance models and transfer matrices), special_functions (Gamma, 2F1),
experiments (chain runs, fits, scans) and cli.
"""

__version__ = "0.1.0"

from .core_model import (  # noqa: E402
    C_MAX,
    ModelParams,
    ModeVector,
    NormKind,
    NormWeight,
    ResonanceTrace,
    TransferMatrix,
    VariableKind,
    norm,
)
from .integrator import IntegrationError, IntegratorConfig, evolve  # noqa: E402

__all__ = [
    "__version__",
    "C_MAX",
    "ModelParams",
    "ModeVector",
    "NormKind",
    "NormWeight",
    "ResonanceTrace",
    "TransferMatrix",
    "VariableKind",
    "norm",
    "IntegrationError",
    "IntegratorConfig",
    "evolve",
]
