"""Damped wave equation ``u_tt + 2 a(x) u_t = u_xx - q0 u`` via its Dirac reduction.

With ``a = a0 + a1(x)`` and ``mu = sqrt(q0 - a0^2)``, the first-order generator
``G = [[-2a, -d/dx - sqrt(q0)], [-d/dx + sqrt(q0), 0]]`` satisfies

    T (iG) T^{-1} = H_mu + V - i a0 I,
    V(x) = (a1(x)/mu) [[-a0 - i mu, sqrt(q0)], [-sqrt(q0), a0 - i mu]],

so eigenvalues ``z`` of ``H_mu + V`` correspond to ``lambda = -i z - a0``.
The ``-i a1(x) I`` part of ``V`` is easy to lose; ``drop_shift=True`` drops it
to reproduce the reduced potential without that term (see ``symbol_residual``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import ConfigError, PotentialSpec, norm_lp
from .quadrature import integrate


@dataclass(frozen=True)
class DWEParams:
    a0: float
    q0: float
    a1: PotentialSpec

    def __post_init__(self):
        if self.a1.dimension != 1:
            raise ConfigError("the damping profile a1 must be a scalar (dimension 1) potential")
        if not self.a0 > 0:
            raise ConfigError("a0 must be positive")
        if not self.q0 > self.a0**2:
            raise ConfigError(f"need q0 > a0^2 (got q0={self.q0}, a0^2={self.a0**2})")

    @property
    def mu(self) -> float:
        return float(np.sqrt(self.q0 - self.a0**2))

    @classmethod
    def from_dict(cls, data: dict) -> "DWEParams":
        try:
            return cls(float(data["a0"]), float(data["q0"]), PotentialSpec.from_dict(data["a1"]))
        except KeyError as exc:
            raise ConfigError(f"DWE config missing field {exc}") from None

    def to_dict(self) -> dict:
        return {"a0": self.a0, "q0": self.q0, "a1": self.a1.to_dict()}


def reduction_matrix(a0: float, q0: float, drop_shift: bool = False) -> np.ndarray:
    """``V(x) / a1(x)`` for the Dirac reduction."""
    mu = np.sqrt(q0 - a0 * a0)
    sq = np.sqrt(q0)
    p = np.array([[-a0, sq], [-sq, a0]], dtype=complex) / mu
    return p if drop_shift else p - 1j * np.eye(2)


def to_dirac(p: DWEParams, drop_shift: bool = False) -> tuple[float, PotentialSpec]:
    """Mass ``mu`` and potential ``V`` of the reduced Dirac operator."""
    return p.mu, PotentialSpec.product(reduction_matrix(p.a0, p.q0, drop_shift), p.a1)


def map_spectrum(z_dirac, a0: float):
    """``lambda = -i z - a0``."""
    return -1j * np.asarray(z_dirac, dtype=complex) - a0 if np.ndim(z_dirac) else -1j * complex(z_dirac) - a0


def inverse_map(lam, a0: float):
    return 1j * (np.asarray(lam, dtype=complex) + a0) if np.ndim(lam) else 1j * (complex(lam) + a0)


def transform_T(a0: float, q0: float) -> np.ndarray:
    mu = np.sqrt(q0 - a0 * a0)
    c = -1.0 / (2 * np.sqrt(mu * mu + 1j * a0 * mu))
    return c * np.array([[np.sqrt(q0), a0 - 1j * mu], [a0 - 1j * mu, np.sqrt(q0)]], dtype=complex)


def symbol_residual(a0: float, q0: float, a1_value: float, xi: float, drop_shift: bool = False) -> float:
    """``|| T iG T^{-1} - (H + V - i a0 I) ||`` at frequency ``xi`` (d/dx -> i xi).

    Zero (to rounding) for the reduction used by :func:`to_dirac`; equals
    ``|a1_value|`` for ``drop_shift=True``.
    """
    mu = np.sqrt(q0 - a0 * a0)
    sq = np.sqrt(q0)
    a = a0 + a1_value
    g = np.array([[-2 * a, -1j * xi - sq], [-1j * xi + sq, 0]], dtype=complex)
    t = transform_T(a0, q0)
    lhs = t @ (1j * g) @ np.linalg.inv(t)
    h = np.array([[mu, xi], [xi, -mu]], dtype=complex)
    rhs = h + a1_value * reduction_matrix(a0, q0, drop_shift) - 1j * a0 * np.eye(2)
    return float(np.linalg.norm(lhs - rhs, 2))


def norm_factor(a0: float, q0: float) -> float:
    """``sqrt((sqrt(q0) + a0)/(sqrt(q0) - a0))``, the pointwise norm of V/a1 without the -iI term."""
    sq = np.sqrt(q0)
    return float(np.sqrt((sq + a0) / (sq - a0)))


def dwe_norms(p: DWEParams, exact: bool = False) -> tuple[float, float]:
    """``(||V||_1, ||V||_2)`` of the reduced potential.

    By default the closed form ``sqrt((sqrt(q0)+a0)/(sqrt(q0)-a0)) ||a1||_p``;
    ``exact=True`` measures the potential returned by :func:`to_dirac`, whose
    pointwise norm is ``||P - iI|| |a1|`` (larger than the closed form).
    """
    if exact:
        _, spec = to_dirac(p)
        return norm_lp(spec, 1), norm_lp(spec, 2)
    f = norm_factor(p.a0, p.q0)
    return f * norm_lp(p.a1, 1), f * norm_lp(p.a1, 2)


def integral_a1(p: DWEParams) -> complex:
    if p.a1.kind == "zero":
        return 0j
    val = integrate(lambda x: _eval_scalar(p.a1, x), p.a1.breakpoints(), rtol=1e-13, atol=1e-15)
    return complex(val)


def _eval_scalar(spec, x):
    from .potential import evaluate
    return evaluate(spec, x)[..., 0, 0]


def dwe_weak_prediction(eps: float, p: DWEParams, int_a1: float | None = None) -> tuple[complex, complex]:
    """Leading-order pair ``z_+ = -a0 + i mu - i (a0^2 / 2 mu) (int a1)^2 eps^2`` and its conjugate."""
    s = float(np.real(integral_a1(p))) if int_a1 is None else float(int_a1)
    if not s > 0:
        raise ValueError(f"the prediction needs int a1 > 0 (got {s:.3g})")
    mu = p.mu
    zp = complex(-p.a0, mu) - 1j * p.a0**2 / (2 * mu) * s * s * eps * eps
    return zp, zp.conjugate()


def dwe_weak_prediction_exact_reduction(eps: float, p: DWEParams, int_a1: float | None = None) -> tuple[complex, complex]:
    """Same pair computed from the full reduced potential.

    Its coupling entry is ``U22 = (a0/mu - i) int a1``; composing the threshold
    expansion at ``-mu`` with ``lambda = -i z - a0`` gives
    ``-a0 + i mu - i (a0 - i mu)^2 (int a1)^2 eps^2 / (2 mu)``.
    """
    s = float(np.real(integral_a1(p))) if int_a1 is None else float(int_a1)
    if not s > 0:
        raise ValueError(f"the prediction needs int a1 > 0 (got {s:.3g})")
    mu, a0 = p.mu, p.a0
    u22 = (a0 / mu - 1j) * s
    z_minus = -mu + 0.5 * mu * u22 * u22 * eps * eps
    zp = map_spectrum(z_minus, a0)
    return zp, zp.conjugate()


def compose_prediction(eps: float, a0: float, mu: float, u22: complex) -> complex:
    """Threshold expansion at ``-mu`` with coupling ``u22``, mapped to the wave-equation plane."""
    return map_spectrum(-mu + 0.5 * mu * u22 * u22 * eps * eps, a0)
