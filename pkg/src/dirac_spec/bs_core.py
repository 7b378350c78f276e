"""Nyström discretisation of the Birman-Schwinger operator and eigenvalue search.

For ``V = B A`` (pointwise polar split) the operator ``Q(z) = A (H - z)^{-1} B``
has the kernel ``A(x) N(x, y) e^{ik|x-y|} B(y)``. It is split as ``Q = L + M``
with the separated, rank <= 2 part ``L = A(x) Upsilon B(y)`` that carries the
threshold singularity, and the remainder

    M(x, y) = A(x) [ (i/2) sgn(x-y) sigma_1 e^{ik|x-y|} + Upsilon (e^{ik|x-y|} - 1) ] B(y).

Eigenvalues of ``H + eps V`` are the zeros of ``z -> det(I + eps Q(z))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .contour import CachedFunction, Rect, find_zeros, winding_number
from .free_resolvent import UniformizedPoint, uniformize
from .nystrom import PanelCorrection
from .potential import PotentialSpec, polar_split, evaluate
from .quadrature import QuadratureGrid, make_grid

NODES_PER_UNIT = 24
MIN_NODES = 64
DEFAULT_TOL = 1e-8


@dataclass(frozen=True)
class DiscretizedBS:
    z: complex
    point: UniformizedPoint
    Q: np.ndarray
    L: np.ndarray
    M: np.ndarray
    grid: QuadratureGrid

    @property
    def upsilon(self) -> np.ndarray:
        return self.point.upsilon


@dataclass(frozen=True)
class EigenvalueRecord:
    z: complex
    multiplicity: int
    residual: float
    epsilon: float
    method: str
    grid_size: int

    def as_row(self) -> dict:
        return {"re_z": self.z.real, "im_z": self.z.imag, "multiplicity": self.multiplicity,
                "residual": self.residual, "epsilon": self.epsilon, "method": self.method,
                "grid_size": self.grid_size}


@dataclass
class Spectrum:
    """Eigenvalues found in a region; ``complete`` is False if any cell was left unresolved."""

    records: list = field(default_factory=list)
    complete: bool = True
    messages: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.z for r in self.records], dtype=complex)

    @property
    def count(self) -> int:
        return sum(r.multiplicity for r in self.records)

    def extend(self, other: "Spectrum") -> None:
        self.records.extend(other.records)
        self.complete &= other.complete
        self.messages.extend(other.messages)


def default_grid(spec: PotentialSpec, n_nodes: int | None = None) -> QuadratureGrid:
    lo, hi = spec.support
    if n_nodes is None:
        n_nodes = max(MIN_NODES, int(np.ceil(NODES_PER_UNIT * (hi - lo))))
    return make_grid(spec.breakpoints(), n_nodes)


def log_det(matrix: np.ndarray) -> complex:
    """Complex logarithm (principal branch per factor) of det via LU."""
    sign, logabs = np.linalg.slogdet(matrix)
    return logabs + 1j * np.angle(sign)


def det_from_log(logdet: complex) -> complex:
    return complex(np.exp(logdet))


def m_kernel(up: UniformizedPoint):
    """Kernel of M as a function of the signed offset ``s = x - y``."""
    ups = up.upsilon

    def f(s):
        s = np.asarray(s, dtype=float)
        iks = 1j * up.k * np.abs(s)
        e = np.exp(iks)
        em1 = np.expm1(iks)
        out = np.zeros(s.shape + (2, 2), dtype=complex)
        out[..., 0, 1] = 0.5j * np.sign(s) * e
        out[..., 1, 0] = out[..., 0, 1]
        out[..., 0, 0] = ups[0, 0] * em1
        out[..., 1, 1] = ups[1, 1] * em1
        return out
    return f


def resolvent_kernel(up: UniformizedPoint):
    """Full kernel ``N(s) exp(ik|s|)`` as a function of ``s = x - y``."""
    def f(s):
        s = np.asarray(s, dtype=float)
        e = np.exp(1j * up.k * np.abs(s))
        out = np.zeros(s.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = 0.5j * up.zeta * e
        out[..., 1, 1] = 0.5j / up.zeta * e
        out[..., 0, 1] = 0.5j * np.sign(s) * e
        out[..., 1, 0] = out[..., 0, 1]
        return out
    return f


class FactoredKernel:
    """Sampled polar factors on a grid, weighted by sqrt(w), reused across z.

    ``a`` and ``b`` have shape ``(N, d, d)`` and hold ``sqrt(w_i) A(x_i)`` and
    ``sqrt(w_j) B(x_j)``. A kernel ``K(x_i - x_j)`` is sandwiched as
    ``a_i K_ij b_j``; with ``correction`` the same-panel blocks are replaced by
    the locally corrected rule (a similarity of the plain symmetric Nyström
    matrix up to the changed entries, so determinants keep their meaning).
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, pos: np.ndarray,
                 correction: PanelCorrection | None = None):
        self.a = a
        self.b = b
        self.pos = pos
        self.diff = np.subtract.outer(pos, pos)
        self.correction = correction

    @property
    def size(self) -> int:
        return self.a.shape[0] * self.a.shape[1]

    def sandwich(self, kernel: np.ndarray) -> np.ndarray:
        """``a_i K_ij b_j`` flattened to a dense (Nd x Nd) matrix; kernel (N, N, d, d)."""
        n, d = self.a.shape[:2]
        k = kernel.transpose(0, 2, 1, 3).reshape(n, d, n * d)
        t = np.matmul(self.a, k)  # block-diagonal left factor
        t = t.reshape(n * d, n, d).transpose(1, 0, 2)
        out = np.matmul(t, self.b)  # block-diagonal right factor
        return out.transpose(1, 0, 2).reshape(n * d, n * d)

    def matrix(self, kernel_fn) -> np.ndarray:
        ker = kernel_fn(self.diff)
        if self.correction is not None:
            self.correction.apply(ker, kernel_fn)
        return self.sandwich(ker)


class BirmanSchwinger:
    """Birman-Schwinger problem for ``H + eps V`` on the line.

    Parameters
    ----------
    spec : PotentialSpec of dimension 2.
    m : mass (>= 0).
    n_nodes : total quadrature nodes (default 24 per unit length, at least 64).
    corrected : use the locally corrected Nyström rule for same-panel pairs
        (default); the plain rule samples the kernel with ``sgn(0) = 0``.
    """

    method = "birman-schwinger"

    def __init__(self, spec: PotentialSpec, m: float, n_nodes: int | None = None,
                 grid: QuadratureGrid | None = None, corrected: bool = True):
        if spec.dimension != 2:
            raise ValueError("the line problem needs a 2x2 potential")
        if m < 0:
            raise ValueError("mass must be non-negative")
        self.spec = spec
        self.m = float(m)
        self.corrected = corrected
        self.grid = grid if grid is not None else default_grid(spec, n_nodes)
        a, b = polar_split(evaluate(spec, self.grid.nodes))
        sw = np.sqrt(self.grid.weights)[:, None, None]
        corr = PanelCorrection(self.grid) if corrected else None
        self.kernel = FactoredKernel(a * sw, b * sw, self.grid.nodes, corr)

    @property
    def size(self) -> int:
        return self.grid.size

    def refined(self, factor: int = 2) -> "BirmanSchwinger":
        return BirmanSchwinger(self.spec, self.m, grid=self.grid.refined(factor), corrected=self.corrected)

    # -- assembly ---------------------------------------------------------------

    def assemble(self, z: complex) -> DiscretizedBS:
        up = uniformize(z, self.m)
        kern = self.kernel
        n = kern.pos.size
        ups = up.upsilon
        M = kern.matrix(m_kernel(up))
        # separated kernel L_ij = a_i Ups b_j
        left = (kern.a @ ups).reshape(2 * n, 2)  # rows (i, a), cols d
        right = np.swapaxes(kern.b, 0, 1).reshape(2, 2 * n)  # rows d, cols (j, b)
        L = left @ right
        return DiscretizedBS(z=up.z, point=up, Q=L + M, L=L, M=M, grid=self.grid)

    def q_matrix(self, z: complex) -> np.ndarray:
        """``Q(z)`` directly from the full kernel (without the L/M split)."""
        return self.kernel.matrix(resolvent_kernel(uniformize(z, self.m)))

    # -- determinants -------------------------------------------------------------

    def det(self, z: complex, eps: float) -> complex:
        return det_eps(self.q_matrix(z), eps)

    def characteristic(self, eps: float):
        """``z -> det(I + eps Q(z))`` as a plain callable."""
        return lambda z: self.det(z, eps)

    # -- eigenvalue search -----------------------------------------------------------

    @property
    def hazards(self) -> tuple:
        """Branch points of the determinant: the thresholds."""
        return (-self.m, self.m) if self.m > 0 else (0.0,)

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


def _as_rects(region) -> list:
    if isinstance(region, Rect):
        return [region]
    return list(region)


def assemble(z: complex, spec: PotentialSpec, m: float, n_nodes: int | None = None) -> DiscretizedBS:
    return BirmanSchwinger(spec, m, n_nodes).assemble(z)


def _as_matrix(bs) -> np.ndarray:
    return bs.Q if isinstance(bs, DiscretizedBS) else np.asarray(bs)


def det_eps(bs, eps: float) -> complex:
    """``det(I + eps Q)`` via LU with log-magnitude accumulation."""
    q = _as_matrix(bs)
    if eps == 0:
        return 1.0 + 0j
    return det_from_log(log_det(np.eye(q.shape[0]) + eps * q))


def det2(bs, eps: float) -> complex:
    """Regularised determinant ``prod (1 + eps lam) exp(-eps lam)`` over eigenvalues of Q."""
    q = _as_matrix(bs)
    if eps == 0:
        return 1.0 + 0j
    try:
        lam = np.linalg.eigvals(q)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed on a {q.shape} matrix: {exc}") from exc
    t = 1 + eps * lam
    if np.any(t == 0):
        return 0j
    return complex(np.exp(np.sum(np.log(t) - eps * lam)))


def hs_norm(q: np.ndarray) -> float:
    return float(np.linalg.norm(q, "fro"))


def l_norm_bound(point: UniformizedPoint, v1: float) -> float:
    """``(1/2) max(|zeta|, 1/|zeta|) ||V||_1``."""
    return 0.5 * point.zeta_spread * v1


def hs_norm_bound(point: UniformizedPoint, v1: float) -> float:
    """Square root of ``(1/4)(2 + |zeta|^2 + |zeta|^-2) ||V||_1^2``."""
    a2 = abs(point.zeta) ** 2
    return 0.5 * np.sqrt(2 + a2 + 1 / a2) * v1


def discrete_l1(bs_solver: BirmanSchwinger) -> float:
    """Quadrature value of ``||V||_1`` on the solver grid (the discrete bounds use this)."""
    ka = bs_solver.kernel.a
    # ||a_i||^2 = w_i ||V(x_i)||
    return float(np.sum(np.linalg.norm(ka, 2, axis=(1, 2)) ** 2))
