"""mpsrg: compile matrix product states into shallow local quantum circuits.

The package splits into core tensor machinery (`tensors`), reference states
(`fixtures`), polar/isometry decompositions (`polar`, `compiler`), circuit
assembly and depth accounting (`circuits`, `depth`), fixed-point state
construction (`fixed_point`), variational pair optimization (`variational`),
ground-truth verification (`verifier`), JSON/CSV formats (`serialize`) and a
command-line front end (`cli`).
"""

from .tensors import (
    Boundary,
    MpsChain,
    OverlapResult,
    SiteTensor,
    SpectralReport,
    TransferMatrix,
    analyze_tensor,
    block,
    canonical_gauge,
    dense_state,
    error_metric,
    mps_overlap,
    spectral_analyze,
    transfer_matrix,
    uniform_chain,
)

__all__ = [
    "Boundary",
    "MpsChain",
    "OverlapResult",
    "SiteTensor",
    "SpectralReport",
    "TransferMatrix",
    "analyze_tensor",
    "block",
    "canonical_gauge",
    "dense_state",
    "error_metric",
    "mps_overlap",
    "spectral_analyze",
    "transfer_matrix",
    "uniform_chain",
]

__version__ = "0.1.0"
