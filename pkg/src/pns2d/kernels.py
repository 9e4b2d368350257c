"""Closed-form flow kernels: the 2-D Stokeslet, its derivatives, and the
time-dependent kernel of the heat-relaxed point force.

All functions broadcast over a leading batch of points: ``x`` may be any
array of shape (..., 2).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "stokeslet",
    "stokeslet_grad",
    "stokeslet_grad2",
    "ns_kernel",
    "phi_kernel",
    "psi_kernel",
]

_FOUR_PI = 4.0 * np.pi


def _check_nonzero(x: np.ndarray) -> np.ndarray:
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise ValueError("kernel argument must be nonzero")
    return r2


def stokeslet(x) -> np.ndarray:
    """G_ij(x) = (1/4pi) * (-ln|x| delta_ij + x_i x_j / |x|^2), shape (..., 2, 2)."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)
    lnr = 0.5 * np.log(r2)
    eye = np.eye(2)
    out = -lnr[..., None, None] * eye
    out += x[..., :, None] * x[..., None, :] / r2[..., None, None]
    return out / _FOUR_PI


def stokeslet_grad(x) -> np.ndarray:
    """d_k G_ij(x), indexed [..., i, j, k]; homogeneous of degree -1."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)[..., None, None, None]
    eye = np.eye(2)
    xi = x[..., :, None, None]
    xj = x[..., None, :, None]
    xk = x[..., None, None, :]
    dij = eye[:, :, None]
    dik = eye[:, None, :]
    djk = eye[None, :, :]
    out = (-dij * xk + dik * xj + djk * xi) / r2 - 2.0 * xi * xj * xk / r2**2
    return out / _FOUR_PI


def stokeslet_grad2(x) -> np.ndarray:
    """d_l d_k G_ij(x), indexed [..., i, j, k, l]; homogeneous of degree -2."""
    x = np.asarray(x, dtype=float)
    r2 = _check_nonzero(x)[..., None, None, None, None]
    eye = np.eye(2)
    xi = x[..., :, None, None, None]
    xj = x[..., None, :, None, None]
    xk = x[..., None, None, :, None]
    xl = x[..., None, None, None, :]
    dij = eye[:, :, None, None]
    dik = eye[:, None, :, None]
    dil = eye[:, None, None, :]
    djk = eye[None, :, :, None]
    djl = eye[None, :, None, :]
    dkl = eye[None, None, :, :]
    first = (-dij * dkl + dik * djl + djk * dil) / r2
    first -= 2.0 * xl * (-dij * xk + dik * xj + djk * xi) / r2**2
    second = (dil * xj * xk + djl * xi * xk + dkl * xi * xj) / r2**2
    second -= 4.0 * xi * xj * xk * xl / r2**3
    return (first - 2.0 * second) / _FOUR_PI


# Taylor coefficients of phi(z) = e^-z - (1 - e^-z)/(2z):  sum (-z)^n (2n+1)/(2(n+1)!)
_PHI_COEF = np.array([(2 * n + 1) / (2.0 * math.factorial(n + 1)) for n in range(8)])
# Taylor coefficients of psi(z) = -(1 - e^-z (1+z))/z^2:  -sum (-z)^n (n+1)/(n+2)!
_PSI_COEF = np.array([(n + 1) / float(math.factorial(n + 2)) for n in range(8)])
_SMALL_Z = 1e-3


def phi_kernel(z) -> np.ndarray:
    """phi(z) = e^-z - (1 - e^-z)/(2z), with phi(0) = 1/2."""
    z = np.asarray(z, dtype=float)
    small = z < _SMALL_Z
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(z)
    for n in range(_PHI_COEF.size - 1, -1, -1):
        series = series * (-zs) + _PHI_COEF[n]
    zb = np.where(small, 1.0, z)
    closed = np.exp(-zb) + np.expm1(-zb) / (2.0 * zb)
    return np.where(small, series, closed)


def psi_kernel(z) -> np.ndarray:
    """psi(z) = -(1 - e^-z (1+z))/z^2, with psi(0) = -1/2."""
    z = np.asarray(z, dtype=float)
    small = z < _SMALL_Z
    zs = np.where(small, z, 0.0)
    series = np.zeros_like(z)
    for n in range(_PSI_COEF.size - 1, -1, -1):
        series = series * (-zs) + _PSI_COEF[n]
    zb = np.where(small, 1.0, z)
    closed = (np.expm1(-zb) + zb * np.exp(-zb)) / zb**2
    return np.where(small, -series, closed)


def ns_kernel(x, t: float) -> np.ndarray:
    """Heat-relaxed point-force kernel, finite for all x including 0.

    K(x,t) = phi(|x|^2/4t)/(4 pi t) Id - psi(|x|^2/4t)/(pi (4t)^2) x (x) x.
    """
    if t <= 0:
        raise ValueError(f"time must be > 0, got {t}")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    z = r2 / (4.0 * t)
    eye = np.eye(2)
    out = (phi_kernel(z) / (_FOUR_PI * t))[..., None, None] * eye
    out -= (psi_kernel(z) / (np.pi * (4.0 * t) ** 2))[..., None, None] * (
        x[..., :, None] * x[..., None, :]
    )
    return out
