"""Direct Fourier-Galerkin eigenvalue solvers used as ground truth.

The operator is discretised on a periodic box of length ``2L`` in the plane
wave basis ``exp(i xi_k x) / sqrt(2L)``, ``xi_k = pi k / L``. Free parts are
diagonal per wave number, so the free discrete spectrum is exactly the sampled
dispersion relation and has no doubler states. Multiplication operators become
Toeplitz blocks built from accurately integrated Fourier coefficients.

Discretised continuous spectrum moves with the box; genuine eigenvalues do not.
Candidates are therefore certified only if they reappear (reciprocal nearest
match) after enlarging the box.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigvals, eigvalsh, toeplitz

from .bs_core import EigenvalueRecord, Spectrum
from .contour import Rect
from .free_resolvent import distance_to_spectrum
from .potential import PotentialSpec, evaluate, norm_lp
from .quadrature import composite_gauss

DEFAULT_K = 1024
DEFAULT_STABILITY = 1e-6


@dataclass(frozen=True)
class OracleConfig:
    """Box half-length ``L``, plane-wave count ``K`` and acceptance settings.

    ``target`` restricts the reported eigenvalues (None: everything at distance
    > ``exclusion`` from the free essential spectrum).
    """

    L: float
    K: int = DEFAULT_K
    target: Rect | None = None
    stability_tol: float = DEFAULT_STABILITY
    exclusion: float = 1e-3
    growth: float = 1.5

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("box half-length must be positive")
        if self.K < 2 or self.K % 2:
            raise ValueError("K must be an even integer >= 2")

    def enlarged(self) -> "OracleConfig":
        k = int(np.ceil(self.growth * self.K / 2)) * 2
        return replace(self, L=self.growth * self.L, K=k)

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.pi * np.arange(-self.K // 2, self.K // 2) / self.L


def suggest_box(spec: PotentialSpec, m: float, eps: float = 1.0, K: int = DEFAULT_K, **kw) -> OracleConfig:
    """Box large enough for the support and for eigenfunctions decaying like exp(-m eps ||V||_1 |x|)."""
    lo, hi = spec.support
    radius = 0.5 * (hi - lo)
    L = 4 * radius + (8.0 / m if m > 0 else 8.0)
    if m > 0:
        L = max(L, 40.0 / m)
        v1 = eps * norm_lp(spec, 1)
        if v1 > 0:
            L = max(L, 12.0 / (m * v1))
    return OracleConfig(L=L, K=K, **kw)


def fourier_coefficients(spec: PotentialSpec, q: np.ndarray, points_per_rad: float = 0.35) -> np.ndarray:
    """``int V(x) exp(-i q x) dx`` for each frequency in ``q``; shape ``q.shape + (d, d)``."""
    q = np.asarray(q, dtype=float)
    if spec.kind == "zero":
        return np.zeros(q.shape + (spec.dimension,) * 2, dtype=complex)
    br = spec.breakpoints()
    qmax = float(np.max(np.abs(q))) if q.size else 0.0
    panels = np.maximum(1, np.ceil(np.diff(br) * qmax * points_per_rad / 2).astype(int) + 2)
    x, w = composite_gauss(br, panels, order=20)
    vals = evaluate(spec, x) * w[:, None, None]
    phase = np.exp(-1j * np.multiply.outer(q, x))
    return np.tensordot(phase, vals, axes=(-1, 0))


def multiplication_blocks(spec: PotentialSpec, cfg: OracleConfig) -> np.ndarray:
    """Galerkin matrix of multiplication by V, ordered (component, wave number)."""
    K, d = cfg.K, spec.dimension
    ell = np.arange(-(K - 1), K)
    q = np.pi * ell / cfg.L
    coef = fourier_coefficients(spec, q) / (2 * cfg.L)
    out = np.zeros((d * K, d * K), dtype=complex)
    mid = K - 1
    for a in range(d):
        for b in range(d):
            c = coef[:, a, b]
            col = c[mid:]  # q_j - q_0 for j = 0..K-1
            row = c[mid::-1]  # q_0 - q_k
            out[a * K:(a + 1) * K, b * K:(b + 1) * K] = toeplitz(col, row)
    return out


def dirac_free_matrix(m: float, cfg: OracleConfig) -> np.ndarray:
    xi = cfg.wavenumbers
    K = cfg.K
    h = np.zeros((2 * K, 2 * K), dtype=complex)
    idx = np.arange(K)
    h[idx, idx] = m
    h[K + idx, K + idx] = -m
    h[idx, K + idx] = xi
    h[K + idx, idx] = xi
    return h


def _certify(run1: np.ndarray, run2: np.ndarray, keep, tol: float, eps: float, K: int) -> Spectrum:
    cand = run1[keep(run1)]
    other = run2[keep(run2)] if run2.size else run2
    out = Spectrum()
    for z in cand:
        if other.size == 0:
            continue
        j = int(np.argmin(np.abs(other - z)))
        back = int(np.argmin(np.abs(cand - other[j])))
        shift = float(abs(other[j] - z))
        if cand[back] == z and shift < tol:
            out.records.append(EigenvalueRecord(complex(z), 1, shift, float(eps), "oracle", K))
        else:
            out.messages.append(f"unstable candidate {z:.8g} (shift {shift:.2e}) excluded")
    out.records.sort(key=lambda r: (r.z.real, r.z.imag))
    return out


def _target_filter(cfg: OracleConfig, dist):
    def keep(vals):
        mask = dist(vals) > cfg.exclusion
        if cfg.target is not None:
            mask &= np.array([cfg.target.contains(complex(v)) for v in vals], dtype=bool)
        return mask
    return keep


def _eigenvalues(mat: np.ndarray) -> np.ndarray:
    """All eigenvalues; Hermitian matrices (Hermitian potentials) take the faster symmetric path."""
    if np.array_equal(mat, mat.conj().T):
        return eigvalsh(mat, overwrite_a=True, check_finite=False).astype(complex)
    return eigvals(mat, overwrite_a=True, check_finite=False)


def dirac_eigvals(m: float, spec: PotentialSpec, eps: float, cfg: OracleConfig) -> np.ndarray:
    mat = dirac_free_matrix(m, cfg)
    if eps != 0:
        mat = mat + eps * multiplication_blocks(spec, cfg)
    return _eigenvalues(mat)


def direct_spectrum_1d(m: float, spec: PotentialSpec, eps: float, cfg: OracleConfig) -> Spectrum:
    """Certified eigenvalues of ``H + eps V`` away from the essential spectrum."""
    if spec.dimension != 2:
        raise ValueError("the line oracle needs a 2x2 potential")
    keep = _target_filter(cfg, lambda v: distance_to_spectrum(v, m))
    big = cfg.enlarged()
    return _certify(dirac_eigvals(m, spec, eps, cfg), dirac_eigvals(m, spec, eps, big),
                    keep, cfg.stability_tol, eps, cfg.K)


# -- damped wave equation ------------------------------------------------------------

def dwe_matrix(a0: float, q0: float, a1: PotentialSpec, eps: float, cfg: OracleConfig) -> np.ndarray:
    """Galerkin matrix of ``G = [[-2a, -d/dx - sqrt(q0)], [-d/dx + sqrt(q0), 0]]``, a = a0 + eps a1."""
    K = cfg.K
    xi = cfg.wavenumbers
    sq = np.sqrt(q0)
    g = np.zeros((2 * K, 2 * K), dtype=complex)
    idx = np.arange(K)
    g[idx, idx] = -2 * a0
    g[idx, K + idx] = -1j * xi - sq
    g[K + idx, idx] = -1j * xi + sq
    if eps != 0:
        damp = multiplication_blocks(a1, cfg)  # K x K for the scalar profile
        g[:K, :K] += -2 * eps * damp
    return g


def dwe_distance(lam, a0: float, mu: float):
    """Distance in the wave-equation plane to ``-a0 + i((-inf, -mu] U [mu, inf))``."""
    lam = np.asarray(lam, dtype=complex)
    return distance_to_spectrum(1j * (lam + a0), mu)


def direct_spectrum_dwe(params, eps: float, cfg: OracleConfig) -> Spectrum:
    """Certified eigenvalues of the damped-wave generator ``G`` (wave-equation plane)."""
    a0, q0 = params.a0, params.q0
    mu = np.sqrt(q0 - a0 * a0)
    keep = _target_filter(cfg, lambda v: dwe_distance(v, a0, mu))
    e1 = eigvals(dwe_matrix(a0, q0, params.a1, eps, cfg), overwrite_a=True, check_finite=False)
    big = cfg.enlarged()
    e2 = eigvals(dwe_matrix(a0, q0, params.a1, eps, big), overwrite_a=True, check_finite=False)
    return _certify(e1, e2, keep, cfg.stability_tol, eps, cfg.K)


# -- armchair waveguide ---------------------------------------------------------------------

DENSE_LIMIT = 3000


def waveguide_free_matrix(geom, cfg: OracleConfig) -> np.ndarray:
    """Free operator in the basis ``Psi_n^sigma(x1) exp(i p x2)``, ordered (n, sigma, p).

    On each mode pair the symbol is ``[[0, -i p - xi_n], [i p - xi_n, 0]]``.
    """
    K = cfg.K
    p = cfg.wavenumbers
    dim = 2 * geom.n_modes * K
    h = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(K)
    for j, xi in enumerate(geom.xis):
        plus, minus = (2 * j) * K + idx, (2 * j + 1) * K + idx
        h[plus, minus] = -1j * p - xi
        h[minus, plus] = 1j * p - xi
    return h


def waveguide_potential_matrix(spec: PotentialSpec, geom, cfg: OracleConfig) -> np.ndarray:
    """Galerkin matrix of ``V`` in the (n, sigma, p) basis."""
    from .waveguide import ProjectedPotential

    proj = ProjectedPotential.build(spec, geom)
    K = cfg.K
    ell = np.arange(-(K - 1), K)
    q = np.pi * ell / cfg.L
    coef = proj.from_matrices([fourier_coefficients(lon, q) for _, _, lon in proj.terms]) / (2 * cfg.L)
    dim = coef.shape[-1]
    out = np.zeros((dim * K, dim * K), dtype=complex)
    mid = K - 1
    for a in range(dim):
        for b in range(dim):
            c = coef[:, a, b]
            if not np.any(c):
                continue
            out[a * K:(a + 1) * K, b * K:(b + 1) * K] = toeplitz(c[mid:], c[mid::-1])
    return out


def waveguide_eigvals(spec: PotentialSpec, geom, eps: float, cfg: OracleConfig, n_eigs: int = 24) -> np.ndarray:
    mat = waveguide_free_matrix(geom, cfg)
    if eps != 0:
        mat = mat + eps * waveguide_potential_matrix(spec, geom, cfg)
    if mat.shape[0] <= DENSE_LIMIT or cfg.target is None:
        return _eigenvalues(mat)
    from scipy.sparse.linalg import eigs
    return eigs(mat, k=min(n_eigs, mat.shape[0] - 2), sigma=cfg.target.center, return_eigenvectors=False)


def suggest_waveguide_box(spec: PotentialSpec, geom, eps: float = 1.0, K: int = 256, **kw) -> OracleConfig:
    """Box sized by the threshold ``E0`` and the mode-0 coupling strength."""
    from .waveguide import mode_coupling

    lo, hi = spec.support
    u = float(np.abs(mode_coupling(spec, geom)).max())
    L = 2 * (hi - lo) + 8.0 / geom.E0
    if u > 0:
        L = max(L, 12.0 / (geom.E0 * eps * u))
    return OracleConfig(L=L, K=K, **kw)


def direct_spectrum_waveguide(spec: PotentialSpec, geom, eps: float, cfg: OracleConfig) -> Spectrum:
    """Certified eigenvalues of ``D + eps V`` in the gap, at the mode truncation of ``geom``."""
    E0 = geom.E0
    keep = _target_filter(cfg, lambda v: distance_to_spectrum(v, E0))
    big = cfg.enlarged()
    return _certify(waveguide_eigvals(spec, geom, eps, cfg), waveguide_eigvals(spec, geom, eps, big),
                    keep, cfg.stability_tol, eps, cfg.K)
