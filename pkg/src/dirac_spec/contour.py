"""Argument-principle root finding for analytic functions on rectangles.

The functions here know nothing about operators: they take a callable
``f(z) -> complex`` (holomorphic near the rectangle) and count or locate its
zeros by adaptive phase tracking along the boundary and quadrisection.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

PHASE_STEP = np.pi / 2
# accepted edge pieces are at most this fraction of their distance to a hazard
HAZARD_RATIO = 0.5
SPLIT_FRACTIONS = (0.5, 0.4637, 0.5371, 0.4219, 0.5813)


class ZeroOnBoundary(ArithmeticError):
    """The function (nearly) vanishes on the contour; the region must be perturbed."""


class PhaseTrackingError(ArithmeticError):
    """Boundary refinement hit the step limit without resolving the phase."""


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("DIRAC_SPEC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Rect:
    """Axis-parallel rectangle ``[x0, x1] x [y0, y1]`` in the complex plane."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle {self}")

    @classmethod
    def around(cls, center: complex, half_width: float, half_height: float | None = None) -> "Rect":
        hh = half_width if half_height is None else half_height
        return cls(center.real - half_width, center.real + half_width,
                   center.imag - hh, center.imag + hh)

    @property
    def corners(self) -> tuple:
        return (complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1))

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def size(self) -> float:
        return max(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (self.x0 - pad <= z.real <= self.x1 + pad) and (self.y0 - pad <= z.imag <= self.y1 + pad)

    def split(self, fx: float = 0.5, fy: float = 0.5) -> list["Rect"]:
        xm = self.x0 + fx * (self.x1 - self.x0)
        ym = self.y0 + fy * (self.y1 - self.y0)
        return [Rect(self.x0, xm, self.y0, ym), Rect(xm, self.x1, self.y0, ym),
                Rect(xm, self.x1, ym, self.y1), Rect(self.x0, xm, ym, self.y1)]

    def to_list(self) -> list:
        return [self.x0, self.x1, self.y0, self.y1]


class CachedFunction:
    """Memoising wrapper; evaluates batches of new points (optionally threaded)."""

    def __init__(self, f, threads: int | None = None):
        self.f = f
        self.cache: dict[complex, complex] = {}
        self.threads = thread_count() if threads is None else threads
        self.evaluations = 0

    def __call__(self, z: complex) -> complex:
        return self.many([z])[0]

    def many(self, zs) -> list:
        todo = [z for z in dict.fromkeys(zs) if z not in self.cache]
        if todo:
            if self.threads > 1 and len(todo) > 1:
                with ThreadPoolExecutor(self.threads) as ex:
                    vals = list(ex.map(self.f, todo))
            else:
                vals = [self.f(z) for z in todo]
            self.evaluations += len(todo)
            self.cache.update(zip(todo, (complex(v) for v in vals)))
        return [self.cache[z] for z in zs]


def _segment_distance(lo: complex, hi: complex, pts: np.ndarray) -> float:
    d = hi - lo
    t = np.clip(((pts - lo) * np.conj(d)).real / (abs(d) ** 2), 0.0, 1.0)
    return float(np.min(np.abs(pts - (lo + t * d))))


def _edge_phase(f: CachedFunction, a: complex, b: complex, min_depth: int, max_depth: int,
                zero_tol: float, hazards=None) -> float:
    """Continuous change of arg f along the segment a -> b.

    Samples are generated by recursive bisection from the endpoints, so the
    same segment traversed backwards reuses cached values. ``hazards`` are
    points (branch points of f) near which f may turn by a full period between
    samples without any visible sign; pieces are kept shorter than
    ``HAZARD_RATIO`` times their distance to the nearest one.
    """
    hz = None if hazards is None or len(hazards) == 0 else np.asarray(hazards, dtype=complex)
    flip = (b.real, b.imag) < (a.real, a.imag)
    if flip:
        a, b = b, a
    segs = [(a, b, 0)]
    total = 0.0
    while segs:
        # each segment is judged through its midpoint: accepted only when both
        # halves turn by less than PHASE_STEP and |f| changes moderately
        mids = [0.5 * (s[0] + s[1]) for s in segs]
        vals = f.many([p for s, mid in zip(segs, mids) for p in (s[0], mid, s[1])])
        nxt = []
        for i, (lo, hi, depth) in enumerate(segs):
            fa, fm, fb = vals[3 * i: 3 * i + 3]
            for v, zz in ((fa, lo), (fm, mids[i]), (fb, hi)):
                if not np.isfinite(v) or abs(v) <= zero_tol:
                    raise ZeroOnBoundary(f"|f| = {abs(v):.3e} at boundary point {zz}")
            d1, d2 = np.angle(fm / fa), np.angle(fb / fm)
            r1, r2 = abs(fm) / abs(fa), abs(fb) / abs(fm)
            resolved = (depth >= min_depth and max(abs(d1), abs(d2)) < PHASE_STEP
                        and 0.5 < r1 < 2.0 and 0.5 < r2 < 2.0)
            if resolved and hz is not None:
                resolved = abs(hi - lo) <= HAZARD_RATIO * _segment_distance(lo, hi, hz)
            if resolved:
                total += d1 + d2
                continue
            if depth >= max_depth:
                raise PhaseTrackingError(
                    f"phase not resolved on [{lo}, {hi}] after {max_depth} bisections; "
                    "a zero may sit on the contour")
            nxt.append((lo, mids[i], depth + 1))
            nxt.append((mids[i], hi, depth + 1))
        segs = nxt
    return -total if flip else total


def winding_number(f, rect: Rect, min_depth: int = 3, max_depth: int = 40,
                   zero_tol: float = 1e-300, hazards=None) -> int:
    """Number of zeros of ``f`` inside ``rect`` (argument principle).

    ``f`` may be a plain callable or a :class:`CachedFunction`; see
    :func:`_edge_phase` for ``hazards``.
    """
    cf = f if isinstance(f, CachedFunction) else CachedFunction(f)
    c = rect.corners
    total = sum(_edge_phase(cf, c[i], c[(i + 1) % 4], min_depth, max_depth, zero_tol, hazards)
                for i in range(4))
    w = total / (2 * np.pi)
    n = int(round(w))
    if abs(w - n) > 0.25:
        raise PhaseTrackingError(f"non-integer winding {w:.4f} on {rect}")
    return n


@dataclass
class Zero:
    z: complex
    multiplicity: int
    residual: float
    cell: Rect


@dataclass
class ZeroSearch:
    zeros: list = field(default_factory=list)
    complete: bool = True
    evaluations: int = 0
    messages: list = field(default_factory=list)


def _newton(f: CachedFunction, z0: complex, cell: Rect, tol: float, mult: int = 1,
            max_iter: int = 50):
    """Newton iteration with a central-difference derivative; None if it leaves the cell."""
    h = 1e-6 * cell.size
    z = z0
    for _ in range(max_iter):
        fz = f.f(z)
        if fz == 0:
            return z
        df = (f.f(z + h) - f.f(z - h)) / (2 * h)
        if df == 0 or not np.isfinite(df):
            return None
        step = mult * fz / df
        z = z - step
        if not cell.contains(z):
            return None
        if abs(step) <= 0.1 * tol:
            return z
    return z if abs(step) <= tol else None


def find_zeros(f, region: Rect, tol: float = 1e-8, max_depth: int = 40, newton: bool = True,
               count: int | None = None, **wkw) -> ZeroSearch:
    """Locate all zeros of ``f`` inside ``region`` to ``|dz| <= tol``.

    Cells with winding number zero are discarded; cells with a single zero are
    polished by Newton as soon as the iteration converges inside the cell;
    otherwise cells are quadrisected down to size ``10 * tol``. Boundary
    trouble is handled by retrying the split at perturbed fractions.
    """
    cf = f if isinstance(f, CachedFunction) else CachedFunction(f)
    out = ZeroSearch()
    if count is None:
        count = winding_number(cf, region, **wkw)
    stack = [(region, count, 0)]
    while stack:
        cell, n, depth = stack.pop()
        if n <= 0:
            if n < 0:
                out.complete = False
                out.messages.append(f"negative winding {n} on {cell}")
            continue
        if newton and n == 1:
            z = _newton(cf, cell.center, cell, tol)
            if z is not None:
                out.zeros.append(Zero(z, 1, abs(cf.f(z)), cell))
                continue
        if cell.size <= 10 * tol:
            z = cell.center
            if newton:
                zn = _newton(cf, z, Rect.around(z, 5 * cell.size), tol, mult=n)
                z = z if zn is None else zn
            out.zeros.append(Zero(z, n, abs(cf.f(z)), cell))
            continue
        if depth >= max_depth:
            out.complete = False
            out.messages.append(f"subdivision limit reached on {cell} holding {n} zero(s)")
            out.zeros.append(Zero(cell.center, n, abs(cf.f(cell.center)), cell))
            continue
        children = None
        for fr in SPLIT_FRACTIONS:
            parts = cell.split(fr, 1.0 - fr if fr != 0.5 else 0.5)
            try:
                counts = [winding_number(cf, p, **wkw) for p in parts]
            except (ZeroOnBoundary, PhaseTrackingError):
                continue
            if sum(counts) == n:
                children = list(zip(parts, counts))
                break
        if children is None:
            out.complete = False
            out.messages.append(f"could not split {cell} consistently")
            out.zeros.append(Zero(cell.center, n, abs(cf.f(cell.center)), cell))
            continue
        for p, c in children:
            if c:
                stack.append((p, c, depth + 1))
    out.evaluations = cf.evaluations
    out.zeros.sort(key=lambda r: (r.z.real, r.z.imag))
    return out
