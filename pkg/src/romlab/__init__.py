"""Random-order streaming laboratory.

Frequency moments, a serializable one-pass estimator, the cyclic-interval
machinery, promise set-disjointness instances, the player-to-stream
reduction, and statistical diagnostics of the resulting stream order.
"""

__version__ = "0.1.0"

from romlab.errors import (
    AssemblyIncomplete,
    DecompositionGap,
    InfeasiblePromise,
    InvalidScale,
    NotMember,
    ProtocolAbort,
)
from romlab.params import Params, derive_params

__all__ = [
    "__version__",
    "AssemblyIncomplete",
    "DecompositionGap",
    "InfeasiblePromise",
    "InvalidScale",
    "NotMember",
    "Params",
    "ProtocolAbort",
    "derive_params",
]
