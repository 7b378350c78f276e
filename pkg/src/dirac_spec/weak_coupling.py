"""Weak-coupling eigenvalues emerging from the thresholds +-m.

For ``H + eps V`` with ``U = int V``, an eigenvalue leaves ``+m`` as
``m - (m/2) U11^2 eps^2`` when ``Re U11 < 0`` and one leaves ``-m`` as
``-m + (m/2) U22^2 eps^2`` when ``Re U22 > 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bs_core import DEFAULT_TOL, BirmanSchwinger, EigenvalueRecord
from .contour import Rect
from .potential import PotentialSpec, integral, norm_lp

DEFAULT_SWEEP = (0.4, 0.2, 0.1, 0.05)
BOX_FACTOR = 5.0


class HypothesisError(ValueError):
    """A sign condition required for the asymptotic prediction fails."""


class FitQualityWarning(UserWarning):
    pass


def coupling_matrix(spec: PotentialSpec) -> np.ndarray:
    """``U = int V(x) dx`` (entrywise)."""
    if spec.dimension != 2:
        raise ValueError("coupling_matrix expects a 2x2 potential")
    return np.asarray(integral(spec), dtype=complex)


def predict_plus(eps: float, U, m: float) -> complex:
    u11 = complex(np.asarray(U)[0, 0])
    if not u11.real < 0:
        raise HypothesisError(f"Re U11 = {u11.real:.3g} is not negative; no eigenvalue is predicted near +m")
    return m - 0.5 * m * u11 * u11 * eps * eps


def predict_minus(eps: float, U, m: float) -> complex:
    u22 = complex(np.asarray(U)[1, 1])
    if not u22.real > 0:
        raise HypothesisError(f"Re U22 = {u22.real:.3g} is not positive; no eigenvalue is predicted near -m")
    return -m + 0.5 * m * u22 * u22 * eps * eps


def predict(eps: float, U, m: float, side: str) -> complex:
    return predict_plus(eps, U, m) if side == "+" else predict_minus(eps, U, m)


def _neville_at_zero(x: np.ndarray, y: np.ndarray) -> complex:
    """Polynomial extrapolation of the data (x, y) to x = 0."""
    p = np.array(y, dtype=complex)
    n = len(x)
    for k in range(1, n):
        for i in range(n - k):
            p[i] = (x[i + k] * p[i] - x[i] * p[i + 1]) / (x[i + k] - x[i])
    return complex(p[0])


def quadratic_coefficients(eps_list, z_list, m: float, side: str) -> np.ndarray:
    eps = np.asarray(eps_list, dtype=float)
    z = np.asarray(z_list, dtype=complex)
    threshold = m if side == "+" else -m
    return (z - threshold) / eps**2


def fit_quadratic(eps_list, z_list, m: float, side: str = "+", order: int = 2) -> complex:
    """Extrapolated eps^2 coefficient of ``z(eps) - (+-m)``.

    The ratios ``c(eps) = (z - threshold)/eps^2`` behave like
    ``c0 + c1 eps + ...``; a least-squares polynomial of degree ``order`` in eps
    (Richardson extrapolation when the data are exactly determined) removes the
    leading corrections and is evaluated at eps = 0.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 3:
        raise ValueError("need at least three eps values")
    c = quadratic_coefficients(eps, z_list, m, side)
    srt = np.argsort(-eps)
    eps, c = eps[srt], c[srt]
    dc = np.abs(np.diff(c))
    if eps.size >= 3 and np.any(dc[1:] > dc[:-1] * 1.0000001):
        warnings.warn("eps^2 coefficients do not settle monotonically; fit may be unreliable",
                      FitQualityWarning, stacklevel=2)
    if order + 1 == eps.size:
        return _neville_at_zero(eps, c)
    vand = np.vander(eps, order + 1, increasing=True)
    sol, *_ = np.linalg.lstsq(vand, c, rcond=None)
    return complex(sol[0])


def search_box(prediction: complex, eps: float, v1: float, m: float, side: str,
               factor: float = BOX_FACTOR) -> Rect:
    """Rectangle centred at the prediction, half-width ``factor (m/2) eps^2 ||V||_1^2``.

    The part that would touch the essential spectrum is cut away: either the
    box is confined to the half-plane of the prediction or, for predictions
    near the real axis, it stops short of the threshold.
    """
    h = factor * 0.5 * m * (eps * v1) ** 2
    threshold = m if side == "+" else -m
    gap = max(abs(prediction - threshold), 1e-300)
    margin = 0.1 * gap
    x0, x1 = prediction.real - h, prediction.real + h
    y0, y1 = prediction.imag - h, prediction.imag + h
    if side == "+":
        reaches = x1 > m - margin
    else:
        reaches = x0 < -m + margin
    if reaches and y0 < margin and y1 > -margin:
        if abs(prediction.imag) > 2 * margin:
            if prediction.imag > 0:
                y0 = margin
            else:
                y1 = -margin
        elif side == "+":
            x1 = m - margin
        else:
            x0 = -m + margin
    return Rect(x0, x1, y0, y1)


@dataclass(frozen=True)
class SweepRow:
    eps: float
    z: complex
    predicted: complex
    residual: float
    multiplicity: int = 1

    def as_row(self) -> dict:
        return {"eps": self.eps, "re_z": self.z.real, "im_z": self.z.imag,
                "predicted_re": self.predicted.real, "predicted_im": self.predicted.imag,
                "residual": self.residual}


def locate_weak(solver: BirmanSchwinger, eps: float, side: str = "+", U=None,
                tol: float = DEFAULT_TOL) -> EigenvalueRecord | None:
    """Eigenvalue of ``H + eps V`` closest to the weak-coupling prediction."""
    U = coupling_matrix(solver.spec) if U is None else U
    pred = predict(eps, U, solver.m, side)
    v1 = norm_lp(solver.spec, 1)
    box = search_box(pred, eps, v1, solver.m, side)
    spec = solver.find_eigenvalues(box, eps, tol=tol)
    if not spec.records:
        return None
    return min(spec.records, key=lambda r: abs(r.z - pred))


def weak_sweep(solver: BirmanSchwinger, eps_list=DEFAULT_SWEEP, side: str = "+",
               tol: float = DEFAULT_TOL) -> list[SweepRow]:
    U = coupling_matrix(solver.spec)
    rows = []
    for eps in eps_list:
        rec = locate_weak(solver, eps, side, U, tol)
        pred = predict(eps, U, solver.m, side)
        if rec is None:
            rows.append(SweepRow(float(eps), complex(np.nan, np.nan), pred, float("nan"), 0))
        else:
            rows.append(SweepRow(float(eps), rec.z, pred, rec.residual, rec.multiplicity))
    return rows
