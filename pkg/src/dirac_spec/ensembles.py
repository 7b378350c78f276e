"""Seeded random potential ensembles and full-region spectra.

Used by the enclosure and Lieb-Thirring checks and to calibrate the
Lieb-Thirring constants shipped in :data:`enclosure_lt.CALIBRATED`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bs_core import BirmanSchwinger, Spectrum
from .enclosure_lt import (RHO0, a_m, eigenvalue_free_height, enclosure, massive_weights,
                           massless_weights, resolvent_cover)
from .potential import PotentialSpec, combine, norm_lp

CUTOFF = 4.0
# Search radius cap: beyond |z| ~ 8 the default longitudinal grid no longer
# resolves exp(ik|x - y|), and far eigenvalues carry little Lieb-Thirring weight.
R_CAP = 8.0
MASSLESS_RANGE = (1.0, 6.0)
MASSIVE_RANGE = (0.1, 4.0)


def random_potential(rng: np.random.Generator, n_bumps: int = 2, width=(0.3, 0.5),
                     spread: float = 0.5, cutoff: float = CUTOFF) -> PotentialSpec:
    """Sum of truncated Gaussian bumps with random complex 2x2 amplitudes."""
    terms = []
    for _ in range(n_bumps):
        amp = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        terms.append(PotentialSpec.gaussian(amp, float(rng.uniform(-spread, spread)),
                                            float(rng.uniform(*width)), cutoff=cutoff))
    return combine(terms, [1.0] * n_bumps)


def scaled_to_l1(spec: PotentialSpec, target: float) -> PotentialSpec:
    return spec.scaled(target / norm_lp(spec, 1))


@dataclass
class EnsembleMember:
    index: int
    spec: PotentialSpec
    v1: float
    v2: float


def ensemble(seed: int, size: int, v1_range, **kw) -> list[EnsembleMember]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        target = float(rng.uniform(*v1_range))
        spec = scaled_to_l1(random_potential(rng, **kw), target)
        out.append(EnsembleMember(i, spec, norm_lp(spec, 1), norm_lp(spec, 2)))
    return out


def search_region(m: float, v1: float, v2: float, delta: float, R: float | None = None):
    """Cover of the resolvent set used for full-spectrum searches.

    Heights come from the Hilbert-Schmidt bound; when the enclosure disks apply
    the box is made comfortably larger than the disks so that violations would
    be visible. Otherwise the region is truncated to ``|Re z|, |Im z| <= R_CAP``.
    """
    Y = eigenvalue_free_height(m, v2)
    if m > 0 and v1 < 1:
        d = enclosure(m, v1)
        Y = max(min(Y, 2 * d.radius + delta), 2 * delta)
        R = 2 * (d.m * d.x0 + d.radius) if R is None else R
    if R is None:
        R = min(4.0 * max(m, 1.0) + 2 * Y, R_CAP)
        Y = min(Y, R_CAP)
    return resolvent_cover(m, delta, R, Y)


def full_spectrum(spec: PotentialSpec, m: float, delta: float = 1e-3, R: float | None = None,
                  n_nodes: int | None = None, tol: float = 1e-8) -> Spectrum:
    v1, v2 = norm_lp(spec, 1), norm_lp(spec, 2)
    solver = BirmanSchwinger(spec, m, n_nodes)
    return solver.find_eigenvalues(search_region(m, v1, v2, delta, R), 1.0, tol=tol)


def lt_ratios(members, spectra, m: float, tau: float = 1.0) -> np.ndarray:
    """LHS divided by the constant-free RHS, per member."""
    out = []
    for mem, sp in zip(members, spectra):
        z = np.repeat(sp.values, [r.multiplicity for r in sp.records])
        if m == 0:
            lhs = float(np.sum(massless_weights(z)))
            base = (1 + mem.v2**4) * mem.v1**2
        else:
            lhs = float(np.sum(massive_weights(z, m, tau)))
            base = a_m(m, mem.v1, mem.v2, tau)[0] / m * max(mem.v1, mem.v1**2)
        out.append(lhs / base)
    return np.array(out)


def lt_ensembles(seed: int, size: int = 20):
    """Massless (``m = 0``) and massive (``m = 1``) ensembles used for the LT checks."""
    return ensemble(seed, size, MASSLESS_RANGE), ensemble(seed + 1000, size, MASSIVE_RANGE)


def calibrate(seed: int = 0, size: int = 20, safety: float = 2.0, tau: float = 1.0,
              delta: float = 1e-3) -> dict:
    """Smallest constants fitting a seeded ensemble, times ``safety``.

    Massless case: ``m = 0`` with ``||V||_1`` in MASSLESS_RANGE. Massive case:
    ``m = 1`` with ``||V||_1`` in MASSIVE_RANGE, straddling rho0.
    """
    massless, massive = lt_ensembles(seed, size)
    sp0 = [full_spectrum(mem.spec, 0.0, delta) for mem in massless]
    sp1 = [full_spectrum(mem.spec, 1.0, delta) for mem in massive]
    r0 = lt_ratios(massless, sp0, 0.0)
    r1 = lt_ratios(massive, sp1, 1.0, tau)
    return {"C": float(safety * r0.max()), "C_tau": float(safety * r1.max()), "tau": tau,
            "safety": safety, "seed": seed, "rho0": RHO0,
            "max_ratio_massless": float(r0.max()), "max_ratio_massive": float(r1.max()),
            "eigenvalues_massless": int(sum(sp.count for sp in sp0)),
            "eigenvalues_massive": int(sum(sp.count for sp in sp1)),
            "complete": bool(all(sp.complete for sp in sp0 + sp1))}


if __name__ == "__main__":
    print(json.dumps(calibrate(), indent=2))
