"""2-D immersed elastic string in Stokes / Navier-Stokes flow.

Spectral contour dynamics for the string, boundary-integral Stokes
velocities, and exponential-integrator time stepping for the coupled
string-fluid system on a periodic box.
"""

from .torus_curve import PeriodicCurve, circle, ellipse, perturbed_circle
from .grid_field import GridField, GridSpec

__all__ = [
    "PeriodicCurve",
    "GridField",
    "GridSpec",
    "circle",
    "ellipse",
    "perturbed_circle",
]

__version__ = "0.1.0"
