"""Pseudospectral Maxwell-Klein-Gordon (Lorenz gauge) on the torus, with
an estimate laboratory for wave-Sobolev bilinear bounds."""

from .grid import SpectralScalar, TorusGrid
from .fields import Faraday, MKGState, SobolevExponents
from .initdata import InitialData, build_data
from .dynamics import Scheme, SchemeSpec, evolve
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Faraday",
    "InitialData",
    "MKGState",
    "Scheme",
    "SchemeSpec",
    "SobolevExponents",
    "SpectralScalar",
    "TorusGrid",
    "build_data",
    "evolve",
    "__version__",
]
