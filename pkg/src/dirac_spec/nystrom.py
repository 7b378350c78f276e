"""Locally corrected Nyström rule for translation-invariant kernels with a jump at x = y.

On a composite Gauss-Legendre grid the plain rule ``sum_j K(x_i - x_j) w_j f(x_j)``
loses accuracy when ``K`` jumps (or kinks) at the origin, because the target
node splits its own panel into two smooth pieces. For pairs inside the same
panel the integral is instead computed by Gauss rules on ``[lo, x_i]`` and
``[x_i, hi]`` applied to the Lagrange interpolant of ``f`` through the panel
nodes. All other pairs keep the plain weights.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .quadrature import QuadratureGrid, _legendre


@lru_cache(maxsize=16)
def split_rules(order: int, sub_order: int):
    """Reference sub-rules on [-1, 1] for every target node.

    Returns ``t`` and ``w`` of shape ``(order, 2*sub_order)`` (left then right
    sub-interval) and ``ell`` of shape ``(order, 2*sub_order, order)`` holding
    the Lagrange basis of the panel nodes evaluated at ``t``.
    """
    tau, _ = _legendre(order)
    g, gw = _legendre(sub_order)
    t = np.empty((order, 2 * sub_order))
    w = np.empty_like(t)
    for a, ta in enumerate(tau):
        for k, (lo, hi) in enumerate(((-1.0, ta), (ta, 1.0))):
            sl = slice(k * sub_order, (k + 1) * sub_order)
            t[a, sl] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g
            w[a, sl] = 0.5 * (hi - lo) * gw
    vand = np.polynomial.legendre.legvander(tau, order - 1)
    coef = np.linalg.inv(vand)
    ell = np.polynomial.legendre.legvander(t, order - 1) @ coef
    for arr in (t, w, ell):
        arr.setflags(write=False)
    return t, w, ell


class PanelCorrection:
    """Precomputed same-panel geometry of a grid."""

    def __init__(self, grid: QuadratureGrid, sub_order: int | None = None):
        q = grid.order
        self.order = q
        self.n_panels = grid.n_panels
        sub = q + 4 if sub_order is None else sub_order
        t, w, ell = split_rules(q, sub)
        tau, _ = _legendre(q)
        half = 0.5 * (grid.edges[:, 1] - grid.edges[:, 0])  # (P,)
        # signed offsets x_a - t_s and physical weights, shape (P, q, 2*sub)
        self.offsets = half[:, None, None] * (tau[None, :, None] - t[None])
        self.weights = half[:, None, None] * w[None]
        self.ell = ell
        self.node_weights = grid.weights.reshape(self.n_panels, q)

    def blocks(self, kernel_fn) -> np.ndarray:
        """Corrected same-panel kernel blocks ``W_aj / w_j``, shape ``(P, q, q, d, d)``.

        ``kernel_fn`` maps an array of signed offsets ``x - y`` to kernel values
        of shape ``offsets.shape + (d, d)``.
        """
        f = kernel_fn(self.offsets)
        W = np.einsum("pas,pasxy,asj->pajxy", self.weights, f, self.ell, optimize=True)
        return W / self.node_weights[:, None, :, None, None]

    def apply(self, kernel: np.ndarray, kernel_fn) -> np.ndarray:
        """Overwrite the same-panel blocks of a sampled ``(N, N, d, d)`` kernel in place."""
        P, q = self.n_panels, self.order
        d = kernel.shape[-1]
        k6 = kernel.reshape(P, q, P, q, d, d)
        idx = np.arange(P)
        k6[idx, :, idx, :] = self.blocks(kernel_fn)
        return kernel
