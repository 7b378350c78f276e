"""Spectral enclosure disks, Lieb-Thirring sums and eigenvalue-count bounds.

The constants in the Lieb-Thirring and counting bounds are not known
explicitly; they are inputs here. :data:`CALIBRATED` holds the values obtained
from the seeded calibration run in :mod:`dirac_spec.ensembles`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .contour import Rect
from .free_resolvent import distance_to_spectrum

# From ensembles.calibrate(seed=0, size=20): twice the largest observed ratio
# (massless: 1.2818e-3 over 15 eigenvalues; massive: 8.4057e-4 over 25), tau = 1.
CALIBRATED = {"C": 2.5636e-3, "C_tau": 1.6812e-3, "tau": 1.0, "safety": 2.0, "seed": 0}
DEFAULT_TAU = 1.0


@dataclass(frozen=True)
class EnclosureDisks:
    m: float
    v1: float
    x0: float
    r0: float
    valid: bool

    @property
    def center_plus(self) -> complex:
        return complex(self.m * self.x0)

    @property
    def center_minus(self) -> complex:
        return complex(-self.m * self.x0)

    @property
    def radius(self) -> float:
        return self.m * self.r0

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        """Membership in the closed disk union (always True when not valid)."""
        if not self.valid:
            return True
        r = self.radius + slack
        return abs(z - self.center_plus) <= r or abs(z - self.center_minus) <= r

    def bounding_box(self, pad: float = 0.0) -> Rect:
        r = self.radius + pad
        return Rect(-self.m * self.x0 - r, self.m * self.x0 + r, -r, r)

    def as_dict(self) -> dict:
        return {"m": self.m, "v1": self.v1, "x0": self.x0, "r0": self.r0, "valid": self.valid,
                "center_plus": self.center_plus.real, "center_minus": self.center_minus.real,
                "radius": self.radius}


def enclosure(m: float, v1: float) -> EnclosureDisks:
    if v1 < 0 or m <= 0:
        raise ValueError("need m > 0 and v1 >= 0")
    if v1 >= 1:
        return EnclosureDisks(m, v1, float("nan"), float("inf"), False)
    s = v1 * v1
    t = (s * s - 2 * s + 2) / (4 * (1 - s))
    return EnclosureDisks(m, v1, float(np.sqrt(t + 0.5)), float(np.sqrt(t - 0.5)), True)


def rho0() -> float:
    """Root of ``rho exp((rho + 1)^2 / 2) = 1`` on [0, 1]."""
    return float(bisect(lambda r: r * np.exp(0.5 * (r + 1) ** 2) - 1.0, 0.0, 1.0, xtol=1e-14))


RHO0 = rho0()


def a_m(m: float, v1: float, v2: float, tau: float = DEFAULT_TAU) -> tuple[float, str]:
    """``A_m(V)`` and the branch used (``"min"`` below rho0, ``"l2"`` otherwise)."""
    second = (1 + v2**4 / m**2) ** (2 + tau) / RHO0**2
    if v1 < RHO0:
        denom = 1 - v1 * np.exp(0.5 * (v1 + 1) ** 2)
        first = 1 / denom if denom > 0 else np.inf
        return float(min(first, second)), "min"
    return float(second), "l2"


def _values(eigs):
    out = []
    for e in eigs:
        z = getattr(e, "z", e)
        mult = getattr(e, "multiplicity", 1)
        out.extend([complex(z)] * int(mult))
    return np.array(out, dtype=complex)


@dataclass(frozen=True)
class LTReport:
    lhs: float
    rhs: float
    tau: float | None
    holds: bool
    weights: tuple = field(default_factory=tuple)
    constant: float = 0.0
    m: float = 0.0

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "tau": self.tau, "holds": self.holds,
                "constant": self.constant, "m": self.m, "weights": list(self.weights)}


def massless_weights(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.abs(z.imag) / (np.abs(z) + 1) ** 2


def massive_weights(z, m: float, tau: float) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return (np.asarray(distance_to_spectrum(z, m)) * np.abs(m * m - z * z) ** (tau / 2)
            / (m + np.abs(z)) ** (2 + tau))


def lt_massless(eigs, v1: float, v2: float, C: float | None = None) -> LTReport:
    C = CALIBRATED["C"] if C is None else C
    w = massless_weights(_values(eigs))
    lhs = float(np.sum(w))
    rhs = float(C * (1 + v2**4) * v1**2)
    return LTReport(lhs, rhs, None, lhs <= rhs, tuple(float(x) for x in w), C, 0.0)


def lt_massive(eigs, m: float, tau: float, v1: float, v2: float, C_tau: float | None = None) -> LTReport:
    if m <= 0 or tau <= 0:
        raise ValueError("need m > 0 and tau > 0")
    C_tau = CALIBRATED["C_tau"] if C_tau is None else C_tau
    w = massive_weights(_values(eigs), m, tau)
    lhs = float(np.sum(w))
    am, _ = a_m(m, v1, v2, tau)
    rhs = float(C_tau * am / m * max(v1, v1 * v1))
    return LTReport(lhs, rhs, tau, lhs <= rhs, tuple(float(x) for x in w), C_tau, m)


@dataclass(frozen=True)
class CountBound:
    delta: float
    epsilon: float
    R: float
    bound: float
    observed_count: int

    @property
    def holds(self) -> bool:
        return self.observed_count <= np.ceil(self.bound)

    def as_dict(self) -> dict:
        return {"delta": self.delta, "epsilon": self.epsilon, "R": self.R, "bound": self.bound,
                "observed_count": self.observed_count, "holds": bool(self.holds)}


def in_K(z, m: float, delta: float, epsilon: float, R: float) -> bool:
    """Membership of ``z`` in ``{dist(z, sigma(H)) >= delta, dist(z, {+-m}) >= epsilon, |z| <= R}``."""
    z = complex(z)
    return (distance_to_spectrum(z, m) >= delta and min(abs(z - m), abs(z + m)) >= epsilon
            and abs(z) <= R)


def count_bound(m: float, delta: float, epsilon: float, R: float, v1: float, v2: float,
                tau: float = DEFAULT_TAU, A_m: float | None = None, C: float | None = None,
                C_tau: float | None = None, eigs=()) -> CountBound:
    if delta <= 0 or R <= 0 or epsilon < 0:
        raise ValueError("need delta, R > 0 and epsilon >= 0")
    if m > 0:
        if epsilon <= 0:
            raise ValueError("the massive count bound needs epsilon > 0")
        C_tau = CALIBRATED["C_tau"] if C_tau is None else C_tau
        am = a_m(m, v1, v2, tau)[0] if A_m is None else A_m
        bound = C_tau / delta * max(m ** (1 + tau / 2) * epsilon ** (-tau / 2), R * R) * am / m * max(v1, v1 * v1)
    else:
        C = CALIBRATED["C"] if C is None else C
        bound = C / delta * (1 + R * R) * (1 + v2**4) * v1**2
    observed = int(sum(1 for z in _values(eigs) if in_K(z, m, delta, epsilon, R)))
    return CountBound(delta, epsilon, R, float(bound), observed)


# -- search regions ----------------------------------------------------------------

def resolvent_cover(m: float, delta: float, R: float, Y: float) -> list[Rect]:
    """Rectangles covering ``{|Re z| <= R, |Im z| <= Y, dist(z, sigma(H)) >= delta}``.

    Upper and lower strips ``|Im z| in [delta, Y]`` plus, for ``m > delta``, the
    part of the gap with ``|Im z| < delta``.
    """
    rects = [Rect(-R, R, delta, Y), Rect(-R, R, -Y, -delta)]
    if m > delta:
        rects.append(Rect(-m + delta, m - delta, -delta, delta))
    return rects


def hs_factor_sup(m: float, y: float) -> float:
    """Sup over Re z of ``(2 + |zeta|^2 + |zeta|^-2)/4`` on the line ``|Im z| = y``.

    ``|zeta|^2 = |z + m| / |z - m|`` whose maximum on the line is
    ``(m + sqrt(m^2 + y^2)) / y``.
    """
    if m == 0:
        return 1.0
    r = (m + np.hypot(m, y)) / y
    return 0.25 * (2 + r + 1 / r)


def eigenvalue_free_height(m: float, v2_eps: float) -> float:
    """Height Y above which ``H + V`` has no eigenvalues, with ``v2_eps = ||eps V||_2``.

    Uses ``||Q||_HS^2 <= (2 + |zeta|^2 + |zeta|^-2)/4 * ||V||_2^2 / Im k`` and
    ``Im k >= |Im z|``: eigenvalues need the right side to be at least 1.
    """
    if v2_eps == 0:
        return 1.0
    f = lambda y: hs_factor_sup(m, y) * v2_eps**2 / y - 1.0
    hi = max(1.0, v2_eps**2)
    while f(hi) > 0:
        hi *= 2
    lo = hi / 2
    while f(lo) < 0 and lo > 1e-12:
        lo /= 2
    return float(bisect(f, lo, hi, xtol=1e-10)) * 1.0001
