"""Direct and inverse spectral problems on quantum star graphs.

The solutions of ``-y'' + q y = rho^2 y`` on every edge are written as
Neumann series of Bessel functions; the forward problem reduces to a small
characteristic system per spectral parameter, the inverse problem to a
sequence of linear least-squares systems.
"""

__version__ = "0.1.0"

from .direct import compute_spectrum, generate_spectral_data
from .graph import Edge, SpectralDataSet, StarGraph, TwoSpectra, make_demo_graph
from .inverse import InverseConfig, run_inverse_pipeline
from .numerics import Grid, SampledFunction

__all__ = [
    "Edge",
    "Grid",
    "InverseConfig",
    "SampledFunction",
    "SpectralDataSet",
    "StarGraph",
    "TwoSpectra",
    "compute_spectrum",
    "generate_spectral_data",
    "make_demo_graph",
    "run_inverse_pipeline",
]
