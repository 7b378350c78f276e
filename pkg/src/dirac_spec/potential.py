"""Matrix-valued potentials with compact support.

A :class:`PotentialSpec` is a declarative, JSON-serialisable description of
``V: R -> C^{d x d}`` (``d`` in {1, 2, 4}); ``d = 1`` is used for scalar
profiles such as a damping term, ``d = 4`` for waveguide (strip) potentials.

Supported kinds and their ``entries``::

    zero       {}
    piecewise  {"breaks": [x0, ..., xK], "values": [M1, ..., MK]}
    gaussian   {"amplitude": M, "center": c, "width": s}   # truncated to support
    sampled    {"x": [x0, ..., xn], "values": [M0, ..., Mn]}  # linear interpolation
    product    {"matrix": M, "profile": <d=1 spec>, "transverse": null | {"breaks", "values"}}
    sum        {"terms": [<spec>, ...], "weights": [w1, ...]}

Matrices are nested lists of complex numbers, each written as ``[re, im]``.
The ``transverse`` factor of a product is a piecewise-constant function of the
transverse coordinate of the strip; when absent the potential is transversely
constant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .quadrature import integrate

KINDS = ("zero", "piecewise", "gaussian", "sampled", "product", "sum")
DEFAULT_CUTOFF = 8.0


class ConfigError(ValueError):
    """Malformed potential or run configuration."""


def _freeze(obj):
    if isinstance(obj, (list, tuple)):
        return tuple(_freeze(o) for o in obj)
    if isinstance(obj, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in obj.items()))
    return obj


def _thaw_entries(obj):
    # entries dicts are stored as sorted (key, value) tuples
    if isinstance(obj, tuple) and obj and all(
        isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], str) for p in obj
    ):
        return {k: _thaw(v) for k, v in obj}
    return _thaw(obj)


def _thaw(obj):
    if isinstance(obj, tuple):
        if obj and all(isinstance(p, tuple) and len(p) == 2 and isinstance(p[0], str) for p in obj):
            return {k: _thaw(v) for k, v in obj}
        return [_thaw(o) for o in obj]
    return obj


def complex_to_json(z) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_to_json(m) -> list:
    m = np.asarray(m, dtype=complex)
    return [[complex_to_json(v) for v in row] for row in m]


def _matrix_from_json(data, d: int) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix entries must be [re, im] pairs: {exc}") from None
    if arr.shape != (d, d, 2):
        raise ConfigError(f"expected a {d}x{d} matrix of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _complex_list(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ConfigError("expected a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable description of a compactly supported matrix potential."""

    dimension: int
    kind: str
    support: tuple
    entries: tuple = ()

    def __post_init__(self):
        if self.dimension not in (1, 2, 4):
            raise ConfigError(f"dimension must be 1, 2 or 4, got {self.dimension!r}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        try:
            lo, hi = (float(s) for s in self.support)
        except (TypeError, ValueError):
            raise ConfigError("support must be a pair [x_lo, x_hi]") from None
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ConfigError(f"support must be a finite interval with x_lo < x_hi, got {self.support}")
        object.__setattr__(self, "support", (lo, hi))
        if isinstance(self.entries, dict):
            object.__setattr__(self, "entries", _freeze(self.entries))
        self._parsed  # validate eagerly

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "PotentialSpec":
        if not isinstance(data, dict):
            raise ConfigError("potential config must be a JSON object")
        missing = {"dimension", "kind", "support"} - data.keys()
        if missing:
            raise ConfigError(f"potential config missing fields: {sorted(missing)}")
        return cls(
            dimension=data["dimension"],
            kind=data["kind"],
            support=tuple(data["support"]),
            entries=data.get("entries", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "PotentialSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "kind": self.kind,
            "support": [self.support[0], self.support[1]],
            "entries": _thaw_entries(self.entries) if self.entries else {},
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @property
    def entry_dict(self) -> dict:
        return _thaw_entries(self.entries) if self.entries else {}

    # -- parsed numeric data -------------------------------------------------

    @cached_property
    def _parsed(self) -> dict:
        e = self.entry_dict
        d = self.dimension
        lo, hi = self.support
        try:
            if self.kind == "zero":
                return {}
            if self.kind == "piecewise":
                breaks = np.asarray(e["breaks"], dtype=float)
                values = np.stack([_matrix_from_json(v, d) for v in e["values"]])
                if breaks.ndim != 1 or len(breaks) != len(values) + 1 or np.any(np.diff(breaks) <= 0):
                    raise ConfigError("piecewise: need increasing breaks with one more entry than values")
                if breaks[0] < lo or breaks[-1] > hi:
                    raise ConfigError("piecewise: breaks must lie within the support")
                return {"breaks": breaks, "values": values}
            if self.kind == "gaussian":
                width = float(e["width"])
                if width <= 0:
                    raise ConfigError("gaussian: width must be positive")
                return {
                    "amplitude": _matrix_from_json(e["amplitude"], d),
                    "center": float(e["center"]),
                    "width": width,
                }
            if self.kind == "sampled":
                x = np.asarray(e["x"], dtype=float)
                values = np.stack([_matrix_from_json(v, d) for v in e["values"]])
                if x.ndim != 1 or len(x) != len(values) or len(x) < 2 or np.any(np.diff(x) <= 0):
                    raise ConfigError("sampled: need at least two increasing nodes matching the values")
                if not np.all(np.isfinite(values)):
                    raise ConfigError("sampled: non-finite sample values")
                if x[0] < lo or x[-1] > hi:
                    raise ConfigError("sampled: nodes must lie within the support")
                return {"x": x, "values": values}
            if self.kind == "product":
                profile = PotentialSpec.from_dict(e["profile"])
                if profile.dimension != 1:
                    raise ConfigError("product: profile must be a scalar (dimension 1) potential")
                transverse = e.get("transverse")
                if transverse is not None:
                    if d != 4:
                        raise ConfigError("product: a transverse profile requires a strip (dimension 4) potential")
                    tb = np.asarray(transverse["breaks"], dtype=float)
                    tv = _complex_list(transverse["values"])
                    if len(tb) != len(tv) + 1 or np.any(np.diff(tb) <= 0):
                        raise ConfigError("product: malformed transverse profile")
                    transverse = (tb, tv)
                return {
                    "matrix": _matrix_from_json(e["matrix"], d),
                    "profile": profile,
                    "transverse": transverse,
                }
            if self.kind == "sum":
                terms = [PotentialSpec.from_dict(t) for t in e["terms"]]
                weights = _complex_list(e["weights"]) if "weights" in e else np.ones(len(terms), complex)
                if len(terms) != len(weights) or not terms:
                    raise ConfigError("sum: need a non-empty list of terms with matching weights")
                if any(t.dimension != d for t in terms):
                    raise ConfigError("sum: all terms must share the dimension")
                return {"terms": terms, "weights": weights}
        except KeyError as exc:
            raise ConfigError(f"{self.kind}: missing entry {exc}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{self.kind}: {exc}") from None
        raise ConfigError(self.kind)  # unreachable

    # -- convenience constructors -------------------------------------------

    @classmethod
    def zero(cls, dimension: int = 2, support=(0.0, 1.0)) -> "PotentialSpec":
        return cls(dimension, "zero", tuple(support), {})

    @classmethod
    def piecewise(cls, breaks, values) -> "PotentialSpec":
        values = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in values]
        d = values[0].shape[0]
        breaks = [float(b) for b in breaks]
        return cls(d, "piecewise", (breaks[0], breaks[-1]),
                   {"breaks": breaks, "values": [matrix_to_json(v) for v in values]})

    @classmethod
    def constant(cls, matrix, lo: float = 0.0, hi: float = 1.0) -> "PotentialSpec":
        return cls.piecewise([lo, hi], [matrix])

    @classmethod
    def gaussian(cls, amplitude, center: float = 0.0, width: float = 1.0,
                 cutoff: float = DEFAULT_CUTOFF) -> "PotentialSpec":
        amplitude = np.atleast_2d(np.asarray(amplitude, dtype=complex))
        support = (center - cutoff * width, center + cutoff * width)
        return cls(amplitude.shape[0], "gaussian", support,
                   {"amplitude": matrix_to_json(amplitude), "center": float(center), "width": float(width)})

    @classmethod
    def sampled(cls, x, values) -> "PotentialSpec":
        values = [np.atleast_2d(np.asarray(v, dtype=complex)) for v in values]
        x = [float(t) for t in x]
        return cls(values[0].shape[0], "sampled", (x[0], x[-1]),
                   {"x": x, "values": [matrix_to_json(v) for v in values]})

    @classmethod
    def product(cls, matrix, profile: "PotentialSpec", transverse=None) -> "PotentialSpec":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        entries = {"matrix": matrix_to_json(matrix), "profile": profile.to_dict(), "transverse": None}
        if transverse is not None:
            tb, tv = transverse
            entries["transverse"] = {"breaks": [float(b) for b in tb],
                                     "values": [complex_to_json(v) for v in tv]}
        return cls(matrix.shape[0], "product", profile.support, entries)

    @classmethod
    def indicator(cls, lo: float = 0.0, hi: float = 1.0, value: complex = 1.0) -> "PotentialSpec":
        """Scalar profile ``value * 1_[lo, hi]``."""
        return cls.piecewise([lo, hi], [[[value]]])

    def scaled(self, c: complex) -> "PotentialSpec":
        return combine([self], [c])

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return combine([self, other], [1.0, 1.0])

    # -- geometry -------------------------------------------------------------

    @property
    def has_transverse_profile(self) -> bool:
        p = self._parsed
        if self.kind == "product":
            return p["transverse"] is not None
        if self.kind == "sum":
            return any(t.has_transverse_profile for t in p["terms"])
        return False

    def breakpoints(self) -> np.ndarray:
        """Support endpoints plus interior points where V may be non-smooth."""
        lo, hi = self.support
        p = self._parsed
        pts = [lo, hi]
        if self.kind == "piecewise":
            pts += list(p["breaks"])
        elif self.kind == "sampled":
            pts += list(p["x"])
        elif self.kind == "gaussian":
            if lo < p["center"] < hi:
                pts.append(p["center"])
        elif self.kind == "product":
            pts += list(p["profile"].breakpoints())
        elif self.kind == "sum":
            for t in p["terms"]:
                pts += list(t.breakpoints())
        pts = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
        return pts

    def transverse_breakpoints(self, a: float) -> np.ndarray:
        pts = [-a, a]
        p = self._parsed
        if self.kind == "product" and p["transverse"] is not None:
            pts += list(p["transverse"][0])
        elif self.kind == "sum":
            for t in p["terms"]:
                pts += list(t.transverse_breakpoints(a))
        return np.unique(np.clip(np.asarray(pts, dtype=float), -a, a))


def combine(specs, weights) -> PotentialSpec:
    """Linear combination ``sum_i weights[i] * specs[i]`` as a ``sum`` spec."""
    specs = list(specs)
    lo = min(s.support[0] for s in specs)
    hi = max(s.support[1] for s in specs)
    return PotentialSpec(specs[0].dimension, "sum", (lo, hi), {
        "terms": [s.to_dict() for s in specs],
        "weights": [complex_to_json(w) for w in weights],
    })


def evaluate(spec: PotentialSpec, x, x1=None) -> np.ndarray:
    """Sample ``V`` at positions ``x``; returns an array of shape ``x.shape + (d, d)``.

    For strip potentials ``x`` is the longitudinal coordinate and ``x1`` the
    transverse one (needed only when a transverse profile is present).
    """
    x = np.asarray(x, dtype=float)
    d = spec.dimension
    out = np.zeros(x.shape + (d, d), dtype=complex)
    lo, hi = spec.support
    inside = (x >= lo) & (x <= hi)
    p = spec._parsed
    if spec.kind == "zero":
        return out
    if spec.kind == "piecewise":
        br = p["breaks"]
        idx = np.clip(np.searchsorted(br, x, side="right") - 1, 0, len(p["values"]) - 1)
        mask = inside & (x >= br[0]) & (x <= br[-1])
        out[mask] = p["values"][idx[mask]]
        return out
    if spec.kind == "gaussian":
        env = np.exp(-(((x - p["center"]) / p["width"]) ** 2))
        out[inside] = env[inside][:, None, None] * p["amplitude"]
        return out
    if spec.kind == "sampled":
        xs, vals = p["x"], p["values"]
        mask = inside & (x >= xs[0]) & (x <= xs[-1])
        xm = x[mask]
        j = np.clip(np.searchsorted(xs, xm, side="right") - 1, 0, len(xs) - 2)
        t = ((xm - xs[j]) / (xs[j + 1] - xs[j]))[:, None, None]
        out[mask] = (1 - t) * vals[j] + t * vals[j + 1]
        return out
    if spec.kind == "product":
        prof = evaluate(p["profile"], x)[..., 0, 0]
        out = prof[..., None, None] * p["matrix"]
        if p["transverse"] is not None:
            if x1 is None:
                raise ValueError("this strip potential depends on the transverse coordinate; pass x1")
            out = out * _transverse_value(p["transverse"], np.broadcast_to(x1, x.shape))[..., None, None]
        out[~inside] = 0
        return out
    if spec.kind == "sum":
        for t, w in zip(p["terms"], p["weights"]):
            out = out + w * evaluate(t, x, x1)
        return out
    raise ConfigError(spec.kind)


def _transverse_value(transverse, x1) -> np.ndarray:
    tb, tv = transverse
    x1 = np.asarray(x1, dtype=float)
    idx = np.clip(np.searchsorted(tb, x1, side="right") - 1, 0, len(tv) - 1)
    vals = tv[idx]
    return np.where((x1 >= tb[0]) & (x1 <= tb[-1]), vals, 0.0)


def transverse_factor(spec: PotentialSpec):
    """``(breaks, values)`` of a product's transverse profile, or None."""
    if spec.kind != "product":
        raise ValueError("only product potentials carry a transverse factor")
    return spec._parsed["transverse"]


def pointwise_norm(values: np.ndarray) -> np.ndarray:
    """Operator (largest singular value) norm of each matrix in a stack."""
    return np.linalg.norm(values, ord=2, axis=(-2, -1))


def norm_lp(spec: PotentialSpec, p: float = 1.0, transverse_width: float | None = None,
            rtol: float = 1e-12) -> float:
    """``(int ||V(x)||^p dx)^(1/p)`` with ``||.||`` the pointwise operator norm.

    For strip potentials the integral runs over the strip: a transverse profile
    is integrated over its own breaks, otherwise ``transverse_width`` (= 2a) is
    required as the measure of the cross-section.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if spec.kind == "zero":
        return 0.0
    if spec.dimension == 4 and spec.has_transverse_profile:
        if spec.kind != "product":
            raise NotImplementedError("L^p norms of sums with transverse profiles are not separable")
        tb, tv = spec._parsed["transverse"]
        t_int = float(np.sum(np.diff(tb) * np.abs(tv) ** p))
        long_int = _line_integral_of_norm(spec, p, rtol, drop_transverse=True)
        return float((t_int * long_int) ** (1.0 / p))
    val = _line_integral_of_norm(spec, p, rtol)
    if spec.dimension == 4 and transverse_width is not None:
        val *= transverse_width
    if not np.isfinite(val):
        raise ArithmeticError("potential is not L^p integrable on its support")
    return float(val ** (1.0 / p))


def _line_integral_of_norm(spec, p, rtol, drop_transverse=False):
    if drop_transverse:
        pr = spec._parsed
        core = PotentialSpec.product(pr["matrix"], pr["profile"])
    else:
        core = spec
    return float(integrate(lambda x: pointwise_norm(evaluate(core, x)) ** p,
                           spec.breakpoints(), rtol=rtol))


def integral(spec: PotentialSpec, rtol: float = 1e-13) -> np.ndarray:
    """Entrywise integral ``int V(x) dx`` over the line (longitudinal axis)."""
    if spec.kind == "zero":
        return np.zeros((spec.dimension,) * 2, dtype=complex)
    if spec.has_transverse_profile:
        raise ValueError("use the waveguide coupling routines for transversely varying potentials")
    return integrate(lambda x: evaluate(spec, x), spec.breakpoints(), rtol=rtol, atol=1e-15)


# -- polar factorisation -----------------------------------------------------

def polar_split(values: np.ndarray):
    """Pointwise ``V = B A`` with ``A = |V|^(1/2)``, ``B = U_V |V|^(1/2)``.

    From the SVD ``V = W S X^*``: ``|V| = X S X^*`` and ``U_V = W X^*`` on the
    range, so ``A = X S^(1/2) X^*`` and ``B = W S^(1/2) X^*``. ``B`` does not
    depend on how ``U_V`` is extended to the kernel of ``V``; where ``V = 0`` both
    factors vanish, and for Hermitian positive semidefinite ``V`` one gets
    ``B = A``.
    """
    values = np.asarray(values, dtype=complex)
    w, s, xh = np.linalg.svd(values)
    rs = np.sqrt(s)[..., :, None]
    a = np.swapaxes(xh.conj(), -1, -2) @ (rs * xh)
    b = w @ (rs * xh)
    return a, b


@dataclass(frozen=True)
class PolarFactors:
    """``A(x) = |V(x)|^(1/2)`` and ``B(x) = U_V(x)|V(x)|^(1/2)`` as functions of x."""

    spec: PotentialSpec

    def at(self, x, x1=None):
        return polar_split(evaluate(self.spec, x, x1))

    def A(self, x, x1=None) -> np.ndarray:
        return self.at(x, x1)[0]

    def B(self, x, x1=None) -> np.ndarray:
        return self.at(x, x1)[1]


def polar_factorize(spec: PotentialSpec) -> PolarFactors:
    return PolarFactors(spec)
