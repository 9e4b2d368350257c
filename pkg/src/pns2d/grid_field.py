"""Pseudo-spectral calculus on the periodic box [-L, L)^2.

Fields are stored as real (N, N, 2) arrays indexed [iy, ix, component];
all linear operators act as Fourier multipliers through fft2 over the
two grid axes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .torus_curve import PeriodicCurve

__all__ = [
    "GridSpec",
    "GridField",
    "leray_project",
    "heat_propagate",
    "etd_phi_weights",
    "nonlinear_term",
    "sample_on_curve",
    "lp_norm",
    "divergence_field",
    "gradient_norm_sq",
    "zero_field",
    "vortex_pair",
    "random_bandlimited",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class GridSpec:
    """N grid points per side on the box [-L, L)^2."""

    N: int
    L: float

    def __post_init__(self):
        if self.N < 32 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"grid size must be a power of two >= 32, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"box half-width must be > 0, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def coords(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)


@lru_cache(maxsize=16)
def _wavenumbers(n: int, L: float):
    k1 = np.fft.fftfreq(n, d=1.0 / n) * (np.pi / L)
    ky = k1[:, None]
    kx = k1[None, :]
    k2 = kx**2 + ky**2
    inv_k2 = np.where(k2 == 0.0, 0.0, 1.0 / np.where(k2 == 0.0, 1.0, k2))
    # odd-derivative multipliers drop the asymmetric half mode
    kd = k1.copy()
    kd[n // 2] = 0.0
    kmax = np.abs(k1).max()
    dealias = (np.abs(k1)[:, None] <= (2.0 / 3.0) * kmax) & (
        np.abs(k1)[None, :] <= (2.0 / 3.0) * kmax
    )
    return kx, ky, k2, inv_k2, kd, dealias


@dataclass(frozen=True)
class GridField:
    """Two-component field on a GridSpec; values indexed [iy, ix, comp]."""

    spec: GridSpec
    values: np.ndarray
    divergence_free: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.spec.N
        if v.shape != (n, n, 2):
            raise ValueError(f"values must have shape ({n}, {n}, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_fft_cache", None)

    def fft(self) -> np.ndarray:
        # values are immutable by convention, so the transform is cached
        if self._fft_cache is None:
            object.__setattr__(
                self, "_fft_cache", np.fft.fft2(self.values, axes=(0, 1))
            )
        return self._fft_cache

    def with_values(self, values: np.ndarray, divergence_free: bool | None = None):
        if divergence_free is None:
            divergence_free = self.divergence_free
        return GridField(self.spec, values, divergence_free)

    def __add__(self, other: "GridField") -> "GridField":
        if other.spec != self.spec:
            raise ValueError("grid mismatch")
        out = GridField(
            self.spec,
            self.values + other.values,
            self.divergence_free and other.divergence_free,
        )
        if self._fft_cache is not None and other._fft_cache is not None:
            object.__setattr__(out, "_fft_cache", self._fft_cache + other._fft_cache)
        return out

    def __sub__(self, other: "GridField") -> "GridField":
        if other.spec != self.spec:
            raise ValueError("grid mismatch")
        out = GridField(
            self.spec,
            self.values - other.values,
            self.divergence_free and other.divergence_free,
        )
        if self._fft_cache is not None and other._fft_cache is not None:
            object.__setattr__(out, "_fft_cache", self._fft_cache - other._fft_cache)
        return out


def zero_field(spec: GridSpec) -> GridField:
    return GridField(spec, np.zeros((spec.N, spec.N, 2)), divergence_free=True)


def _from_fft(spec: GridSpec, vh: np.ndarray, divergence_free: bool) -> GridField:
    v = np.fft.ifft2(vh, axes=(0, 1)).real
    field = GridField(spec, v, divergence_free)
    # all our multipliers preserve Hermitian symmetry, so vh is the
    # transform of v up to roundoff; seed the cache with it
    object.__setattr__(field, "_fft_cache", vh)
    return field


def leray_project(f: GridField) -> GridField:
    """Remove the gradient part; the mean mode passes through unchanged."""
    kx, ky, _, inv_k2, _, _ = _wavenumbers(f.spec.N, f.spec.L)
    vh = f.fft()
    kdotv = kx * vh[..., 0] + ky * vh[..., 1]
    out = np.empty_like(vh)
    out[..., 0] = vh[..., 0] - kx * kdotv * inv_k2
    out[..., 1] = vh[..., 1] - ky * kdotv * inv_k2
    return _from_fft(f.spec, out, divergence_free=True)


def heat_propagate(u: GridField, tau: float) -> GridField:
    """Heat semigroup: mode k multiplied by exp(-tau |k|^2)."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if tau == 0:
        return u
    _, _, k2, _, _, _ = _wavenumbers(u.spec.N, u.spec.L)
    vh = u.fft() * np.exp(-tau * k2)[..., None]
    return _from_fft(u.spec, vh, u.divergence_free)


_ETD_SERIES_TERMS = 18
_ETD_CONTOUR_POINTS = 32


def etd_phi_weights(z):
    """Duhamel weights phi1(z) = (1-e^-z)/z and phi2(z) = (e^-z-1+z)/z^2.

    Series branch below z = 0.5, closed form above; stable for all z >= 0
    with phi1(0) = 1, phi2(0) = 1/2.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("phi weights require z >= 0")
    small = z < 0.5
    p1s, p2s = _phi_weights_series(np.where(small, z, 0.0))
    zb = np.where(small, 1.0, z)
    p1c = -np.expm1(-zb) / zb
    p2c = (np.expm1(-zb) + zb) / zb**2
    return np.where(small, p1s, p1c), np.where(small, p2s, p2c)


def _phi_weights_series(z):
    """Taylor branch: phi1 = sum (-z)^n/(n+1)!, phi2 = sum (-z)^n/(n+2)!."""
    z = np.asarray(z, dtype=float)
    p1 = np.zeros_like(z)
    p2 = np.zeros_like(z)
    for n in range(_ETD_SERIES_TERMS, -1, -1):
        p1 = p1 * (-z) + 1.0 / math.factorial(n + 1)
        p2 = p2 * (-z) + 1.0 / math.factorial(n + 2)
    return p1, p2


def _phi_weights_contour(z):
    """Closed forms averaged over a unit contour around z (cancellation-free)."""
    z = np.asarray(z, dtype=float)
    theta = np.pi * (np.arange(_ETD_CONTOUR_POINTS) + 0.5) / _ETD_CONTOUR_POINTS
    ring = np.exp(1j * theta)  # upper half; conjugate symmetry gives the rest
    zz = z[..., None] + ring
    p1 = ((1.0 - np.exp(-zz)) / zz).mean(axis=-1).real
    p2 = ((np.exp(-zz) - 1.0 + zz) / zz**2).mean(axis=-1).real
    return p1, p2


def _spectral_gradients(spec: GridSpec, vh: np.ndarray):
    _, _, _, _, kd, _ = _wavenumbers(spec.N, spec.L)
    gx = np.fft.ifft2(1j * kd[None, :, None] * vh, axes=(0, 1)).real
    gy = np.fft.ifft2(1j * kd[:, None, None] * vh, axes=(0, 1)).real
    return gx, gy


def nonlinear_term(u: GridField) -> GridField:
    """Leray-projected advection P(u . grad u) with 2/3-rule dealiasing."""
    if not u.divergence_free:
        raise ValueError("nonlinear term requires a divergence-free input")
    spec = u.spec
    kx, ky, _, inv_k2, kd, dealias = _wavenumbers(spec.N, spec.L)
    vh = u.fft() * dealias[..., None]
    v = np.fft.ifft2(vh, axes=(0, 1)).real
    gx, gy = _spectral_gradients(spec, vh)
    adv = v[..., 0:1] * gx + v[..., 1:2] * gy
    ah = np.fft.fft2(adv, axes=(0, 1)) * dealias[..., None]
    kdota = kx * ah[..., 0] + ky * ah[..., 1]
    out = np.empty_like(ah)
    out[..., 0] = ah[..., 0] - kx * kdota * inv_k2
    out[..., 1] = ah[..., 1] - ky * kdota * inv_k2
    return _from_fft(spec, out, divergence_free=True)


def divergence_field(f: GridField) -> np.ndarray:
    """Spectral divergence of the field, shape (N, N)."""
    _, _, _, _, kd, _ = _wavenumbers(f.spec.N, f.spec.L)
    vh = f.fft()
    dh = 1j * kd[None, :] * vh[..., 0] + 1j * kd[:, None] * vh[..., 1]
    return np.fft.ifft2(dh).real


def gradient_norm_sq(f: GridField) -> float:
    """Box integral of |grad f|^2 by Parseval."""
    _, _, k2, _, _, _ = _wavenumbers(f.spec.N, f.spec.L)
    vh = f.fft() / f.spec.N**2
    weight = (2.0 * f.spec.L) ** 2
    return float(weight * np.sum(k2[..., None] * np.abs(vh) ** 2))


def sample_on_curve(f: GridField, curve: PeriodicCurve) -> np.ndarray:
    """Fourier interpolation of the field at the curve nodes, shape (N_s, 2)."""
    spec = f.spec
    pts = curve.nodes
    if np.any(np.abs(pts) >= spec.L):
        raise ValueError("curve node outside the box")
    k1 = np.fft.fftfreq(spec.N, d=1.0 / spec.N) * (np.pi / spec.L)
    ex = np.exp(1j * np.outer(k1, pts[:, 0] + spec.L))  # (N, M)
    ey = np.exp(1j * np.outer(k1, pts[:, 1] + spec.L))
    fh = f.fft() / spec.N**2
    out = np.empty((pts.shape[0], 2))
    for c in range(2):
        t = fh[..., c] @ ex  # (ky, M)
        out[:, c] = np.einsum("km,km->m", ey, t).real
    return out


def lp_norm(f: GridField, p: float) -> float:
    """Discrete L^p norm of the pointwise magnitude, cell-area weighted."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    mag = np.sqrt(np.sum(f.values**2, axis=-1))
    if np.isinf(p):
        return float(mag.max())
    h2 = f.spec.h**2
    return float((h2 * np.sum(mag**p)) ** (1.0 / p))


def vortex_pair(spec: GridSpec, gamma: float, sep: float, core: float | None = None) -> GridField:
    """Counter-rotating Gaussian vortex pair centered on the box."""
    if core is None:
        core = sep / 4.0
    x = spec.coords
    xx = x[None, :]
    yy = x[:, None]
    amp = gamma / (2.0 * np.pi * core**2)
    w = amp * np.exp(-((xx - sep / 2) ** 2 + yy**2) / (2 * core**2))
    w -= amp * np.exp(-((xx + sep / 2) ** 2 + yy**2) / (2 * core**2))
    _, _, _, inv_k2, _, _ = _wavenumbers(spec.N, spec.L)
    wh = np.fft.fft2(w)
    k1 = np.fft.fftfreq(spec.N, d=1.0 / spec.N) * (np.pi / spec.L)
    vh = np.empty((spec.N, spec.N, 2), dtype=complex)
    # u = curl^-1 w:  u_hat = i k^perp w_hat / |k|^2
    vh[..., 0] = 1j * (-k1[:, None]) * wh * inv_k2
    vh[..., 1] = 1j * k1[None, :] * wh * inv_k2
    return _from_fft(spec, vh, divergence_free=True)


def random_bandlimited(
    spec: GridSpec, seed: int, kmax: int, amplitude: float, p_report: float = 4.0
) -> tuple[GridField, float]:
    """Random divergence-free field with modes |n| <= kmax, scaled so the
    L^p_report norm equals `amplitude`; returns (field, norm_before_scaling)."""
    rng = np.random.default_rng(seed)
    n_modes = np.fft.fftfreq(spec.N, d=1.0 / spec.N).astype(int)
    mask = (np.abs(n_modes)[:, None] <= kmax) & (np.abs(n_modes)[None, :] <= kmax)
    vh = np.zeros((spec.N, spec.N, 2), dtype=complex)
    raw = rng.standard_normal((spec.N, spec.N, 2)) + 1j * rng.standard_normal(
        (spec.N, spec.N, 2)
    )
    vh[mask] = raw[mask]
    vh[0, 0] = 0.0
    field = leray_project(_from_fft(spec, vh, divergence_free=False))
    base = lp_norm(field, p_report)
    if base == 0.0:
        raise ValueError("degenerate random field")
    scaled = GridField(spec, field.values * (amplitude / base), divergence_free=True)
    return scaled, base


_MAGIC = b"PNS1"


def write_field(path, field: GridField, t: float) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", field.spec.N))
        fh.write(struct.pack("<d", field.spec.L))
        fh.write(struct.pack("<d", t))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> tuple[GridField, float]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        n = struct.unpack("<I", fh.read(4))[0]
        L = struct.unpack("<d", fh.read(8))[0]
        t = struct.unpack("<d", fh.read(8))[0]
        data = np.frombuffer(fh.read(8 * n * n * 2), dtype="<f8").reshape(n, n, 2)
    return GridField(GridSpec(n, L), data.copy()), t
