"""Numerical semiclassical calculus on Euclidean phase space.

Wave packets and the Bargmann transform, Weyl-Heisenberg and metaplectic
operators, Taylor projectors, anisotropic Sobolev weights and the spectra
of linear transfer operators, with a command-line driver for reproducible
checks.
"""

__version__ = "0.1.0"

from .errors import SemiclassicalError
from .geometry import LinearMap, MetricSpace
from .grid import GridSpec, SampledFunction
from .wavepacket import PhaseGrid, bargmann_adjoint_matrix, bargmann_matrix, bergman_kernel
from .quantize import QuantizedOperator, SymplecticLinearMap, apply_op_phi, metaplectic_correction, op_phi, op_tilde
from .polytaylor import PolySpace, pol_rank, taylor_project, weyl_commutator
from .sobolev import WeightParams, weight
from .spectra import SpectrumReport, TransferModel, band_report, ruelle_eigenvalues, toy_transfer_matrix

__all__ = [
    "__version__",
    "SemiclassicalError",
    "LinearMap",
    "MetricSpace",
    "GridSpec",
    "SampledFunction",
    "PhaseGrid",
    "bargmann_matrix",
    "bargmann_adjoint_matrix",
    "bergman_kernel",
    "QuantizedOperator",
    "SymplecticLinearMap",
    "apply_op_phi",
    "metaplectic_correction",
    "op_phi",
    "op_tilde",
    "PolySpace",
    "pol_rank",
    "taylor_project",
    "weyl_commutator",
    "WeightParams",
    "weight",
    "SpectrumReport",
    "TransferModel",
    "band_report",
    "ruelle_eigenvalues",
    "toy_transfer_matrix",
]
