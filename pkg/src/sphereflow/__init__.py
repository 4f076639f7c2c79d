"""Discrete mean curvature flow, stability spectra, rigidity diagnostics and
sweep-out widths for 2-spheres in model ambient geometries."""

__version__ = "0.1.0"

from . import ambient, analysis, flow, holder, jacobi, kernels, mesh, surface, width  # noqa: F401
from ._backend import backend_name  # noqa: F401
