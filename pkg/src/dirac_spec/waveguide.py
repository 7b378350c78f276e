"""Armchair graphene waveguide ``Omega = (-a, a) x R`` with the four-component operator D.

Transverse modes. With ``xi_n = pi n / (2a) - Theta / (4a)`` the functions

    Psi_n^+ = eps_n(x1) (x) e_1,   Psi_n^- = eps_n(x1) (x) e_2,
    eps_n(x1) = (2 sqrt(a))^{-1} (exp(-i xi_n x1), (-1)^n exp(-i Theta/2) exp(i xi_n x1)),

(valley (x) sublattice ordering, so ``Psi_n^+`` lives on components 1, 3 and
``Psi_n^-`` on 2, 4) form an orthonormal basis satisfying the boundary
conditions. On ``g(x2) Psi_n^sigma`` the operator acts as
``[[0, -d/dx2 - xi_n], [d/dx2 - xi_n, 0]]`` in the (+, -) pair, and the constant
rotation ``s = (1/2)[[1+i, 1+i], [-1+i, 1-i]]`` turns this into the line operator
with mass ``-xi_n``. Hence, in the rotated frame ``Sigma = I_2 (x) s``,

    Sigma (D - z)^{-1} Sigma^{-1} = sum_n (eps_n eps_n^*) (x) (h_n - z)^{-1}.

Birman-Schwinger reduction. Projecting ``W = Sigma V Sigma^{-1}`` onto the
modes gives the ``2(2N+1)``-square matrix function

    cW_{nm}(x2) = int (eps_n^* (x) I_2) W(x1, x2) (eps_m (x) I_2) dx1,

and ``det(I + eps Q(z))`` over the strip equals ``det(I + eps R(z) cW)`` on the
line with ``R = diag_n R_n`` (Sylvester). The mode truncation ``|n| <= N`` is
the only approximation beyond the longitudinal quadrature.

Two couplings are provided: :func:`coupling` evaluates the 4x4 matrix ``U``
built from the mean vectors ``psi_0^sigma`` exactly as in the closed-form weak
coupling statement, and :func:`mode_coupling` evaluates ``int cW_00 dx2``,
which is what the reduced determinant actually contains at leading order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bs_core import DEFAULT_TOL, EigenvalueRecord, Spectrum, _as_rects, default_grid, log_det
from .contour import CachedFunction, Rect, find_zeros, winding_number
from .free_resolvent import uniformize_many
from .nystrom import PanelCorrection
from .potential import ConfigError, PotentialSpec, evaluate, integral
from .quadrature import QuadratureGrid, composite_gauss
from .weak_coupling import HypothesisError
from .weak_coupling import predict as predict_line

DEFAULT_N_MAX = 8
TRANSVERSE_ORDER = 16
ROOT_TOL = 1e-12

S2 = 0.5 * np.array([[1 + 1j, 1 + 1j], [-1 + 1j, 1 - 1j]], dtype=complex)
SIGMA = np.kron(np.eye(2), S2)


class UnsupportedCase(ConfigError):
    """Geometry outside the supported range (Theta must lie in (0, pi))."""


# -- geometry ------------------------------------------------------------------------

@dataclass(frozen=True)
class WaveguideGeometry:
    a: float
    theta: float
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"half-width a must be positive, got {self.a}")
        if not 0 < self.theta < np.pi:
            raise UnsupportedCase(f"Theta must lie in (0, pi), got {self.theta}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ConfigError(f"n_max must be a non-negative integer, got {self.n_max}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "n_max", int(self.n_max))

    def xi(self, n):
        return np.pi * np.asarray(n) / (2 * self.a) - self.theta / (4 * self.a)

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    @property
    def n_modes(self) -> int:
        return 2 * self.n_max + 1

    @property
    def xis(self) -> np.ndarray:
        return self.xi(self.indices)

    @property
    def masses(self) -> np.ndarray:
        """Masses ``-xi_n`` of the line operators, ordered like :attr:`indices`."""
        return -self.xis

    @property
    def xi0(self) -> float:
        return float(self.xi(0))

    @property
    def E0(self) -> float:
        return self.theta / (4 * self.a)

    @property
    def zero_index(self) -> int:
        return self.n_max

    def with_modes(self, n_max: int) -> "WaveguideGeometry":
        return WaveguideGeometry(self.a, self.theta, n_max)

    def to_dict(self) -> dict:
        return {"a": self.a, "theta": self.theta, "n_max": self.n_max, "E0": self.E0,
                "xi": self.xis.tolist()}


def thresholds(a: float, theta: float, n_max: int = DEFAULT_N_MAX) -> WaveguideGeometry:
    return WaveguideGeometry(a, theta, n_max)


def example_half_width(theta: float) -> float:
    """Half-width ``Theta^2 / (8 sin^2(Theta/4))`` at which the diagonal example simplifies."""
    return theta**2 / (8 * np.sin(theta / 4) ** 2)


# -- transverse basis ------------------------------------------------------------------

def mode_vector(geom: WaveguideGeometry, n: int, x1) -> np.ndarray:
    """Valley vector ``eps_n(x1)``, shape ``x1.shape + (2,)``."""
    x1 = np.asarray(x1, dtype=float)
    xi = geom.xi(n)
    c = 1.0 / (2 * np.sqrt(geom.a))
    out = np.empty(x1.shape + (2,), dtype=complex)
    out[..., 0] = c * np.exp(-1j * xi * x1)
    out[..., 1] = c * (-1) ** int(n) * np.exp(-0.5j * geom.theta) * np.exp(1j * xi * x1)
    return out


def modes(geom: WaveguideGeometry, n: int, sigma: str, x1) -> np.ndarray:
    """Samples of ``Psi_n^sigma`` (``sigma`` in ``"+", "-"``), shape ``x1.shape + (4,)``."""
    if abs(n) > geom.n_max:
        raise ValueError(f"|n| = {abs(n)} exceeds n_max = {geom.n_max}")
    if sigma not in ("+", "-"):
        raise ValueError("sigma must be '+' or '-'")
    e = mode_vector(geom, n, x1)
    out = np.zeros(e.shape[:-1] + (4,), dtype=complex)
    off = 0 if sigma == "+" else 1
    out[..., off] = e[..., 0]
    out[..., 2 + off] = e[..., 1]
    return out


def basis_matrix(geom: WaveguideGeometry, x1) -> np.ndarray:
    """``Phi[q, k, A] = (Psi_A)_k(x1_q)`` with ``A = 2 (n + N) + (0 for +, 1 for -)``."""
    x1 = np.asarray(x1, dtype=float)
    cols = []
    for n in geom.indices:
        cols.append(modes(geom, int(n), "+", x1))
        cols.append(modes(geom, int(n), "-", x1))
    return np.stack(cols, axis=-1)


def transverse_rule(geom: WaveguideGeometry, breaks=None, order: int = TRANSVERSE_ORDER):
    """Composite Gauss rule on ``(-a, a)`` resolving products of two truncated modes."""
    br = np.array([-geom.a, geom.a]) if breaks is None else np.asarray(breaks, dtype=float)
    panels = np.maximum(1, np.ceil(np.diff(br) / (2 * geom.a) * (geom.n_max + 2)).astype(int))
    return composite_gauss(br, panels, order=order)


def gram_matrix(geom: WaveguideGeometry) -> np.ndarray:
    x, w = transverse_rule(geom)
    phi = basis_matrix(geom, x)
    return np.einsum("q,qkA,qkB->AB", w, phi.conj(), phi)


def boundary_residual(geom: WaveguideGeometry, n: int, sigma: str) -> float:
    """Largest violation of ``psi_i(-a) = psi_{i+2}(-a)``, ``psi_i(a) = e^{i Theta} psi_{i+2}(a)``."""
    left = modes(geom, n, sigma, -geom.a)
    right = modes(geom, n, sigma, geom.a)
    r1 = np.abs(left[:2] - left[2:]).max()
    r2 = np.abs(right[:2] - np.exp(1j * geom.theta) * right[2:]).max()
    return float(max(r1, r2))


def psi0_prefactor(geom: WaveguideGeometry) -> float:
    return 4 * np.sqrt(geom.a) * np.sin(geom.theta / 4) / geom.theta


def psi0(geom: WaveguideGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Constant vectors ``psi_0^+`` and ``psi_0^-`` of the closed-form coupling."""
    c = psi0_prefactor(geom)
    ph = np.exp(-0.5j * geom.theta)
    return (c * np.array([1, 0, ph, 0], dtype=complex), c * np.array([0, 1, 0, ph], dtype=complex))


def mode_mean(geom: WaveguideGeometry, sigma: str) -> np.ndarray:
    """``int_{-a}^{a} Psi_0^sigma(x1) dx1`` by quadrature (equals ``psi_0^sigma``)."""
    x, w = transverse_rule(geom)
    return np.einsum("q,qk->k", w, modes(geom, 0, sigma, x))


# -- strip potentials ---------------------------------------------------------------------

def _separable_terms(spec: PotentialSpec, weight: complex = 1.0) -> list:
    """Flatten ``spec`` into ``[(weight, transverse or None, longitudinal spec)]``."""
    p = spec._parsed
    if spec.kind == "sum":
        out = []
        for t, w in zip(p["terms"], p["weights"]):
            out += _separable_terms(t, weight * w)
        return out
    if spec.kind == "product" and p["transverse"] is not None:
        return [(weight, p["transverse"], PotentialSpec.product(p["matrix"], p["profile"]))]
    return [(weight, None, spec)]


def _check_strip(spec: PotentialSpec) -> None:
    if spec.dimension != 4:
        raise ConfigError("waveguide potentials must be 4x4 (dimension 4)")


def transverse_tensor(geom: WaveguideGeometry, transverse=None) -> np.ndarray:
    """``G[k, l, A, B] = int t(x1) conj(Psi_A)_k (Psi_B)_l dx1``; ``t = 1`` when None."""
    breaks = None
    if transverse is not None:
        tb = np.clip(np.asarray(transverse[0], dtype=float), -geom.a, geom.a)
        breaks = np.unique(np.concatenate([[-geom.a, geom.a], tb]))
    x, w = transverse_rule(geom, breaks)
    if transverse is not None:
        from .potential import _transverse_value
        w = w * _transverse_value(transverse, x)
    phi = basis_matrix(geom, x)
    return np.einsum("q,qkA,qlB->klAB", w, phi.conj(), phi, optimize=True)


@dataclass
class ProjectedPotential:
    """Separable data ``V(x1, x2) = sum_t w_t t(x1) F_t(x2)`` projected on the modes."""

    geom: WaveguideGeometry
    terms: list  # (weight, G tensor, longitudinal spec)

    @classmethod
    def build(cls, spec: PotentialSpec, geom: WaveguideGeometry) -> "ProjectedPotential":
        _check_strip(spec)
        cache = {}
        terms = []
        for w, tr, lon in _separable_terms(spec):
            key = None if tr is None else (tuple(tr[0]), tuple(tr[1]))
            if key not in cache:
                cache[key] = transverse_tensor(geom, tr)
            terms.append((w, cache[key], lon))
        return cls(geom, terms)

    def original(self, x2) -> np.ndarray:
        """``V_{AB}(x2) = int Psi_A^* V Psi_B dx1``, shape ``x2.shape + (2M, 2M)``."""
        x2 = np.asarray(x2, dtype=float)
        dim = 2 * self.geom.n_modes
        out = np.zeros(x2.shape + (dim, dim), dtype=complex)
        for w, G, lon in self.terms:
            if lon.kind == "zero":
                continue
            out += w * np.einsum("...kl,klAB->...AB", evaluate(lon, x2), G, optimize=True)
        return out

    def from_matrices(self, mats) -> np.ndarray:
        """Project per-term 4x4 data (e.g. integrals or Fourier coefficients) on the modes."""
        dim = 2 * self.geom.n_modes
        out = None
        for (w, G, _), m in zip(self.terms, mats):
            val = w * np.einsum("...kl,klAB->...AB", m, G, optimize=True)
            out = val if out is None else out + val
        return out if out is not None else np.zeros((dim, dim), complex)


def rotation(geom: WaveguideGeometry) -> np.ndarray:
    """Block-diagonal ``s`` acting on every (+, -) pair."""
    return np.kron(np.eye(geom.n_modes), S2)


def frame_potential(spec: PotentialSpec, geom: WaveguideGeometry, x2) -> np.ndarray:
    """Mode-projected ``Sigma V Sigma^{-1}``: ``cW(x2)``, shape ``x2.shape + (2M, 2M)``."""
    S = rotation(geom)
    return S @ ProjectedPotential.build(spec, geom).original(x2) @ S.conj().T


# -- couplings and predictions -----------------------------------------------------------

@dataclass(frozen=True)
class WaveguideCoupling:
    U: np.ndarray
    roots_plus: tuple
    roots_minus: tuple

    @property
    def U_plus(self) -> np.ndarray:
        return self.U[np.ix_([0, 2], [0, 2])]

    @property
    def U_minus(self) -> np.ndarray:
        return self.U[np.ix_([1, 3], [1, 3])]

    def as_dict(self) -> dict:
        c = lambda z: [float(np.real(z)), float(np.imag(z))]
        return {"U": [[c(v) for v in row] for row in self.U],
                "u_plus": [c(u) for u in self.roots_plus], "u_minus": [c(u) for u in self.roots_minus]}


def block_roots(Ub: np.ndarray, tol: float = ROOT_TOL) -> tuple:
    """Roots of ``det(u Ub + I_2) = det(Ub) u^2 + tr(Ub) u + 1`` with degree detection."""
    scale = float(np.linalg.norm(Ub))
    if scale == 0.0:
        return ()
    d = complex(np.linalg.det(Ub))
    t = complex(np.trace(Ub))
    if abs(d) <= tol * scale * scale:
        return (-1.0 / t,) if abs(t) > tol * scale else ()
    # u = 2 / (-t -+ sqrt(t^2 - 4d)): the reciprocal form avoids cancellation
    disc = np.sqrt(t * t - 4 * d)
    roots = [2.0 / den for den in (-t - disc, -t + disc) if den != 0]
    return tuple(sorted(roots, key=lambda u: (-u.real, u.imag)))


def coupling(spec: PotentialSpec, geom: WaveguideGeometry) -> WaveguideCoupling:
    """``U_ij = sum_sigma (psi_0^sigma)_i int sum_k conj(Psi_0^sigma)_k W_kj dx`` and its block roots."""
    _check_strip(spec)
    U = np.zeros((4, 4), dtype=complex)
    psis = dict(zip("+-", psi0(geom)))
    for wt, tr, lon in _separable_terms(spec):
        if lon.kind == "zero":
            continue
        F = integral(lon)  # int F(x2) dx2, 4x4
        Wint = SIGMA @ F @ SIGMA.conj().T
        breaks = None
        if tr is not None:
            tb = np.clip(np.asarray(tr[0], dtype=float), -geom.a, geom.a)
            breaks = np.unique(np.concatenate([[-geom.a, geom.a], tb]))
        x, w = transverse_rule(geom, breaks)
        if tr is not None:
            from .potential import _transverse_value
            w = w * _transverse_value(tr, x)
        for sig in "+-":
            row = np.einsum("q,qk->k", w, modes(geom, 0, sig, x).conj())  # int t conj(Psi_0)
            U += wt * np.outer(psis[sig], row @ Wint)
    cp = U[np.ix_([0, 2], [0, 2])]
    cm = U[np.ix_([1, 3], [1, 3])]
    return WaveguideCoupling(U, block_roots(cp), block_roots(cm))


def mode_coupling(spec: PotentialSpec, geom: WaveguideGeometry) -> np.ndarray:
    """``int cW_00(x2) dx2``, the 2x2 matrix entering the reduced determinant at leading order."""
    proj = ProjectedPotential.build(spec, geom)
    k = 2 * geom.zero_index
    mats = [integral(lon) if lon.kind != "zero" else np.zeros((4, 4), complex) for _, _, lon in proj.terms]
    full = proj.from_matrices(mats)
    S = rotation(geom)
    return (S @ full @ S.conj().T)[k:k + 2, k:k + 2]


def predict_waveguide(eps: float, cp: WaveguideCoupling, geom: WaveguideGeometry, side: str = "+") -> complex:
    """Closed-form threshold expansion from the roots ``u^+`` (``Re u > 0``) or ``u^-`` (``Re u < 0``).

    ``z_+ = -xi_0 + xi_0 eps^2 / (2 u^2)``, ``z_- = xi_0 - (xi_0/2) u^2 eps^2``.
    Among admissible roots the one giving the largest displacement is used.
    """
    xi0 = geom.xi0
    if side == "+":
        ok = [u for u in cp.roots_plus if u.real > 0]
        if not ok:
            raise HypothesisError("no root u+ with Re u+ > 0")
        u = min(ok, key=abs)
        return complex(-xi0 + xi0 / (2 * u * u) * eps * eps)
    if side == "-":
        ok = [u for u in cp.roots_minus if u.real < 0]
        if not ok:
            raise HypothesisError("no root u- with Re u- < 0")
        u = max(ok, key=abs)
        return complex(xi0 - 0.5 * xi0 * u * u * eps * eps)
    raise ValueError("side must be '+' or '-'")


def predict_waveguide_modal(eps: float, U0: np.ndarray, geom: WaveguideGeometry, side: str = "+") -> complex:
    """Line expansion at the thresholds ``+-E0`` with the mode coupling ``U0``."""
    return predict_line(eps, U0, geom.E0, side)


# -- Birman-Schwinger solver -----------------------------------------------------------------

@dataclass(frozen=True)
class WaveguideDiscretizedBS:
    """``Q = L + M1 + M2`` in the reduced (mode x longitudinal node) representation."""

    z: complex
    Q: np.ndarray
    L: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    zeta0: complex
    grid: QuadratureGrid

    @property
    def upsilon2(self) -> np.ndarray:
        """``I_2 (x) Upsilon(zeta_0)``."""
        return np.kron(np.eye(2), 0.5j * np.diag([self.zeta0, 1 / self.zeta0]))


def mode_kernels(z: complex, masses):
    """Resolvent kernels of all modes as a function of ``s = x2 - y2``; values ``(..., M, 2, 2)``."""
    k, zeta = uniformize_many(z, masses)

    def f(s):
        s = np.asarray(s, dtype=float)
        e = np.exp(1j * np.multiply.outer(np.abs(s), k))
        sg = np.sign(s)[..., None]
        out = np.empty(s.shape + (k.size, 2, 2), dtype=complex)
        out[..., 0, 0] = 0.5j * zeta * e
        out[..., 1, 1] = 0.5j / zeta * e
        out[..., 0, 1] = 0.5j * sg * e
        out[..., 1, 0] = out[..., 0, 1]
        return out
    return f, k, zeta


class WaveguideBS:
    """Truncated Birman-Schwinger problem ``det(I + eps R(z) cW)`` for ``D + eps V``."""

    method = "waveguide-bs"

    def __init__(self, spec: PotentialSpec, geom: WaveguideGeometry, n_nodes: int | None = None,
                 grid: QuadratureGrid | None = None, corrected: bool = True):
        _check_strip(spec)
        self.spec = spec
        self.geom = geom
        self.corrected = corrected
        self.grid = grid if grid is not None else default_grid(spec, n_nodes)
        M = geom.n_modes
        W = frame_potential(spec, geom, self.grid.nodes)
        self.wW = (W * self.grid.weights[:, None, None]).reshape(-1, M, 2, 2 * M)
        self.diff = np.subtract.outer(self.grid.nodes, self.grid.nodes)
        self.correction = PanelCorrection(self.grid) if corrected else None

    @property
    def size(self) -> int:
        return self.grid.size * 2 * self.geom.n_modes

    def with_modes(self, n_max: int) -> "WaveguideBS":
        return WaveguideBS(self.spec, self.geom.with_modes(n_max), grid=self.grid, corrected=self.corrected)

    def refined(self, factor: int = 2) -> "WaveguideBS":
        return WaveguideBS(self.spec, self.geom, grid=self.grid.refined(factor), corrected=self.corrected)

    def _kernel(self, fn) -> np.ndarray:
        N, M = self.grid.size, self.geom.n_modes
        ker = fn(self.diff)  # (N, N, M, 2, 2)
        if self.correction is not None:
            c = self.correction
            flat = lambda s: fn(s).reshape(np.shape(s) + (2 * M, 2))
            blocks = c.blocks(flat).reshape(c.n_panels, c.order, c.order, M, 2, 2)
            k6 = ker.reshape(c.n_panels, c.order, c.n_panels, c.order, M, 2, 2)
            idx = np.arange(c.n_panels)
            k6[idx, :, idx, :] = blocks
        return ker

    def _apply(self, ker: np.ndarray) -> np.ndarray:
        N, M = self.grid.size, self.geom.n_modes
        out = np.einsum("ijnac,jncB->inajB", ker, self.wW, optimize=True)
        return out.reshape(N * 2 * M, N * 2 * M)

    def matrix(self, z: complex) -> np.ndarray:
        fn, _, _ = mode_kernels(z, self.geom.masses)
        return self._apply(self._kernel(fn))

    def assemble(self, z: complex) -> WaveguideDiscretizedBS:
        fn, k, zeta = mode_kernels(z, self.geom.masses)
        ker = self._kernel(fn)
        j = self.geom.zero_index
        only0 = np.zeros_like(ker)
        only0[:, :, j] = ker[:, :, j]
        sep = np.zeros_like(ker)
        sep[:, :, j] = 0.5j * np.diag([zeta[j], 1 / zeta[j]])
        Q = self._apply(ker)
        Q0 = self._apply(only0)
        L = self._apply(sep)
        return WaveguideDiscretizedBS(z=complex(z), Q=Q, L=L, M1=Q0 - L, M2=Q - Q0,
                                      zeta0=complex(zeta[j]), grid=self.grid)

    def det(self, z: complex, eps: float) -> complex:
        q = self.matrix(z)
        return complex(np.exp(log_det(np.eye(q.shape[0]) + eps * q)))

    def characteristic(self, eps: float):
        return lambda z: self.det(z, eps)

    @property
    def hazards(self) -> tuple:
        """Branch points of the determinant: the thresholds of every mode."""
        t = np.unique(np.abs(self.geom.xis))
        return tuple(np.concatenate([-t, t]))

    def count_zeros(self, region, eps: float, **wkw) -> int:
        f = CachedFunction(self.characteristic(eps))
        wkw.setdefault("hazards", self.hazards)
        return sum(winding_number(f, r, **wkw) for r in _as_rects(region))

    def find_eigenvalues(self, region, eps: float, tol: float = DEFAULT_TOL, **kw) -> Spectrum:
        f = CachedFunction(self.characteristic(eps))
        kw.setdefault("hazards", self.hazards)
        out = Spectrum()
        for r in _as_rects(region):
            res = find_zeros(f, r, tol=tol, **kw)
            out.complete &= res.complete
            out.messages.extend(res.messages)
            for zr in res.zeros:
                out.records.append(EigenvalueRecord(
                    z=complex(zr.z), multiplicity=zr.multiplicity, residual=float(zr.residual),
                    epsilon=float(eps), method=self.method, grid_size=self.size))
        return out


def assemble_waveguide_Q(z: complex, spec: PotentialSpec, geom: WaveguideGeometry,
                         n_nodes: int | None = None) -> WaveguideDiscretizedBS:
    return WaveguideBS(spec, geom, n_nodes).assemble(z)


def threshold_box(geom: WaveguideGeometry, near: float, far: float, side: str = "+") -> Rect:
    """Box in the gap between distances ``near`` and ``far`` from ``+E0`` (or ``-E0``)."""
    E0 = geom.E0
    far = min(far, 2 * E0 * 0.95)
    near = min(near, 0.5 * far)
    h = 0.5 * far
    if side == "+":
        return Rect(E0 - far, E0 - near, -h, h)
    return Rect(-E0 + near, -E0 + far, -h, h)


def weak_search_box(geom: WaveguideGeometry, eps: float, U0: np.ndarray, cp: WaveguideCoupling | None = None,
                    side: str = "+", factor: float = 3.0) -> Rect:
    """Search box for the weakly coupled eigenvalue, wide enough for both expansions.

    The distance scale is ``(E0/2) |U0|^2 eps^2`` from the mode coupling; when the
    closed-form roots give a larger displacement, the box is stretched to it.
    """
    j = 0 if side == "+" else 1
    dists = [0.5 * geom.E0 * abs(U0[j, j]) ** 2 * eps * eps]
    if cp is not None:
        try:
            dists.append(abs(predict_waveguide(eps, cp, geom, side) - (geom.E0 if side == "+" else -geom.E0)))
        except HypothesisError:
            pass
    dists = [d for d in dists if d > 0]
    if not dists:
        raise HypothesisError("no weakly coupled eigenvalue is expected on this side")
    return threshold_box(geom, 0.05 * min(dists), factor * max(dists), side)


@dataclass(frozen=True)
class WaveguideSweepRow:
    eps: float
    z: complex
    predicted: complex
    predicted_modal: complex
    residual: float

    def as_row(self) -> dict:
        return {"eps": self.eps, "re_z": self.z.real, "im_z": self.z.imag,
                "predicted_re": self.predicted.real, "predicted_im": self.predicted.imag,
                "modal_re": self.predicted_modal.real, "modal_im": self.predicted_modal.imag,
                "residual": self.residual}


def _safe(fn, *args) -> complex:
    try:
        return complex(fn(*args))
    except HypothesisError:
        return complex(np.nan, np.nan)


def waveguide_sweep(solver: WaveguideBS, eps_list, side: str = "+", tol: float = DEFAULT_TOL) -> list:
    """Weakly coupled eigenvalue for each ``eps`` with both predictions alongside."""
    geom = solver.geom
    cp = coupling(solver.spec, geom)
    U0 = mode_coupling(solver.spec, geom)
    rows = []
    for eps in eps_list:
        box = weak_search_box(geom, eps, U0, cp, side)
        sp = solver.find_eigenvalues(box, eps, tol=tol)
        p_closed = _safe(predict_waveguide, eps, cp, geom, side)
        p_modal = _safe(predict_waveguide_modal, eps, U0, geom, side)
        if sp.records:
            rec = min(sp.records, key=lambda r: abs(r.z - p_modal) if np.isfinite(p_modal.real) else 0)
            rows.append(WaveguideSweepRow(float(eps), rec.z, p_closed, p_modal, rec.residual))
        else:
            rows.append(WaveguideSweepRow(float(eps), complex(np.nan, np.nan), p_closed, p_modal, float("nan")))
    return rows


@dataclass
class TruncationStudy:
    """Eigenvalue located at successive mode truncations."""

    n_max: list = field(default_factory=list)
    values: list = field(default_factory=list)
    complete: bool = True

    @property
    def shifts(self) -> list:
        return [abs(b - a) for a, b in zip(self.values, self.values[1:])]

    def as_dict(self) -> dict:
        return {"n_max": self.n_max, "values": [[v.real, v.imag] for v in self.values],
                "shifts": self.shifts, "complete": self.complete}


def locate_near(solver: WaveguideBS, eps: float, region: Rect, tol: float = DEFAULT_TOL) -> complex | None:
    """Single eigenvalue in ``region`` closest to its centre, or None."""
    sp = solver.find_eigenvalues(region, eps, tol=tol)
    if not sp.records:
        return None
    return min(sp.values, key=lambda z: abs(z - region.center))


def truncation_study(spec: PotentialSpec, geom: WaveguideGeometry, eps: float, region: Rect,
                     levels: int = 3, tol: float = DEFAULT_TOL, n_nodes: int | None = None,
                     shift_tol: float | None = None) -> TruncationStudy:
    """Locate the eigenvalue in ``region`` at ``n_max, 2 n_max, 4 n_max, ...``.

    Stops early once the shift between consecutive levels falls below ``shift_tol``.
    """
    out = TruncationStudy()
    n = max(geom.n_max, 1)
    grid = default_grid(spec, n_nodes)
    for _ in range(levels):
        solver = WaveguideBS(spec, geom.with_modes(n), grid=grid)
        z = locate_near(solver, eps, region, tol)
        if z is None:
            out.complete = False
            break
        out.n_max.append(n)
        out.values.append(complex(z))
        if shift_tol is not None and len(out.values) > 1 and out.shifts[-1] < shift_tol:
            break
        n *= 2
    return out
