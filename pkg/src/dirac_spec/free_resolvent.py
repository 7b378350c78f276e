"""Uniformisation k(z), zeta(z) and the free resolvent kernel of -i d/dx sigma_1 + m sigma_3."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

SPECTRUM_PROXIMITY = 1e-14


class BranchError(ValueError):
    """Spectral parameter on (or numerically at) the essential spectrum."""


def distance_to_spectrum(z, m: float):
    """Distance from ``z`` to ``(-inf, -m] U [m, inf)`` (the real axis when m = 0)."""
    z = np.asarray(z, dtype=complex)
    x, y = np.abs(z.real), np.abs(z.imag)
    gap = np.hypot(np.maximum(m - x, 0.0), y)
    return gap if np.ndim(gap) else float(gap)


def k_of(z, m: float):
    """``k = i sqrt(m^2 - z^2)`` with the principal root, vectorised."""
    z = np.asarray(z, dtype=complex)
    return 1j * np.sqrt(m * m - z * z)


@dataclass(frozen=True)
class UniformizedPoint:
    z: complex
    m: float
    k: complex
    zeta: complex
    in_resolvent_set: bool = True

    @property
    def upsilon(self) -> np.ndarray:
        """``(i/2) diag(zeta, 1/zeta)``."""
        return 0.5j * np.diag([self.zeta, 1.0 / self.zeta])

    @property
    def zeta_spread(self) -> float:
        """``max(|zeta|, 1/|zeta|)``."""
        a = abs(self.zeta)
        return max(a, 1.0 / a)


def uniformize(z: complex, m: float, signed_mass: bool = False) -> UniformizedPoint:
    """Branch data at ``z``; ``signed_mass`` admits m < 0 (the kernel formulas hold
    verbatim, the spectrum then being ``(-inf, -|m|] U [|m|, inf)``)."""
    if m < 0 and not signed_mass:
        raise ValueError("mass must be non-negative")
    z = complex(z)
    if distance_to_spectrum(z, abs(m)) < SPECTRUM_PROXIMITY:
        raise BranchError(f"z = {z} is on essential spectrum (-inf,-{m}] U [{m},inf)")
    k = complex(k_of(z, m))
    return UniformizedPoint(z=z, m=float(m), k=k, zeta=(z + m) / k)


def uniformize_many(z: complex, masses) -> tuple[np.ndarray, np.ndarray]:
    """``(k, zeta)`` arrays for one ``z`` and several signed masses."""
    masses = np.asarray(masses, dtype=float)
    z = complex(z)
    if np.min(distance_to_spectrum(np.full(masses.shape, z), np.abs(masses))) < SPECTRUM_PROXIMITY:
        raise BranchError(f"z = {z} is on the essential spectrum")
    k = 1j * np.sqrt(masses**2 - z * z)
    return k, (z + masses) / k


def zeta_to_z(zeta, m: float):
    """Inverse of the uniformisation: ``z = m (zeta^2 + 1) / (zeta^2 - 1)``.

    The lower half-plane in zeta covers the resolvent set once.
    """
    zeta = np.asarray(zeta, dtype=complex)
    return m * (zeta**2 + 1) / (zeta**2 - 1)


def kernel_N(x, y, up: UniformizedPoint) -> np.ndarray:
    """``(i/2) [[zeta, sgn(x-y)], [sgn(x-y), 1/zeta]]``, broadcasting over x, y."""
    s = np.sign(np.subtract.outer(np.asarray(x, float), np.asarray(y, float)))
    out = np.empty(s.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = 0.5j * up.zeta
    out[..., 1, 1] = 0.5j / up.zeta
    out[..., 0, 1] = 0.5j * s
    out[..., 1, 0] = 0.5j * s
    return out


def kernel_R(x, y, up: UniformizedPoint) -> np.ndarray:
    """Resolvent kernel ``N(x, y) exp(i k |x - y|)``."""
    d = np.abs(np.subtract.outer(np.asarray(x, float), np.asarray(y, float)))
    return kernel_N(x, y, up) * np.exp(1j * up.k * d)[..., None, None]


def free_hamiltonian_symbol(xi, m: float) -> np.ndarray:
    """Fourier symbol ``xi sigma_1 + m sigma_3`` (for ``-i d/dx -> xi``)."""
    xi = np.asarray(xi, dtype=float)
    out = np.zeros(xi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = m
    out[..., 1, 1] = -m
    out[..., 0, 1] = xi
    out[..., 1, 0] = xi
    return out
