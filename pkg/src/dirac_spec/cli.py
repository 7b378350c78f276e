"""Command-line interface: ``dirac-spec <command> --config CONFIG.json --out DIR``.

Every command writes ``<command>.json`` (structured report plus run manifest)
and, where a series exists, ``<command>.csv``. CSV files start with a comment
line carrying the package version and the SHA-256 of the config file.

Exit codes: 0 success, 1 config error, 2 incomplete numerical result, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bs_core import DEFAULT_TOL, BirmanSchwinger, Spectrum
from .contour import Rect
from .potential import ConfigError, PotentialSpec, evaluate, norm_lp

EXIT_OK, EXIT_CONFIG, EXIT_INCOMPLETE, EXIT_USAGE = 0, 1, 2, 64
COMMANDS = ("solve", "enclose", "weak", "lt", "dwe", "waveguide", "oracle")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# -- run plumbing --------------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    config_path: str
    config_sha256: str
    out_dir: str
    tol: float | None = None
    seed: int | None = None
    modes: int | None = None
    grid: int | None = None
    version: str = __version__

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class Result:
    report: dict
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)
    complete: bool = True


def load_config(path: str) -> tuple[dict, str]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: config is not UTF-8") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data, hashlib.sha256(raw).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns: list, rows: list, manifest: RunManifest) -> str:
    buf = io.StringIO()
    buf.write(f"# dirac-spec {manifest.version} config-sha256={manifest.config_sha256}\n")
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r.get(k)) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


# -- config helpers --------------------------------------------------------------------

def _get(cfg: dict, key: str, kind=float, default=...):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"config is missing '{key}'")
        return default
    try:
        return kind(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"config field '{key}' must be {kind.__name__}") from None


def _potential(cfg: dict, key: str = "potential", dimension: int | None = None) -> PotentialSpec:
    if key not in cfg:
        raise ConfigError(f"config is missing '{key}'")
    spec = PotentialSpec.from_dict(cfg[key])
    if dimension is not None and spec.dimension != dimension:
        raise ConfigError(f"'{key}' must have dimension {dimension}, got {spec.dimension}")
    return spec


def _region(cfg: dict):
    r = cfg.get("region")
    if r is None:
        return None
    try:
        rects = [Rect(*map(float, item)) for item in (r if isinstance(r[0], (list, tuple)) else [r])]
    except (TypeError, ValueError, IndexError):
        raise ConfigError("region must be [x0, x1, y0, y1] or a list of such boxes") from None
    return rects


def _spectrum_rows(sp: Spectrum, **extra) -> list:
    return [dict(r.as_row(), **extra) for r in sp.records]


SPECTRUM_COLUMNS = ["re_z", "im_z", "multiplicity", "residual", "epsilon", "method", "grid_size"]


def _tol(args, cfg) -> float:
    return args.tol if args.tol is not None else _get(cfg, "tol", float, DEFAULT_TOL)


def _nodes(args, cfg):
    return args.grid if args.grid is not None else _get(cfg, "n_nodes", int, None)


# -- commands ------------------------------------------------------------------------------

def cmd_solve(cfg: dict, args) -> Result:
    from .ensembles import search_region

    m = _get(cfg, "m")
    eps = _get(cfg, "epsilon", float, 1.0)
    spec = _potential(cfg, dimension=2)
    region = _region(cfg)
    if region is None:
        region = search_region(m, eps * norm_lp(spec, 1), eps * norm_lp(spec, 2), _get(cfg, "delta", float, 1e-3))
    solver = BirmanSchwinger(spec, m, _nodes(args, cfg))
    sp = solver.find_eigenvalues(region, eps, tol=_tol(args, cfg))
    report = {"m": m, "epsilon": eps, "eigenvalues": [r.as_row() for r in sp.records],
              "complete": sp.complete, "messages": sp.messages,
              "region": [r.to_list() for r in region]}
    return Result(report, _spectrum_rows(sp), SPECTRUM_COLUMNS, sp.complete)


def cmd_enclose(cfg: dict, args) -> Result:
    from .enclosure_lt import enclosure
    from .ensembles import ensemble, full_spectrum

    m = _get(cfg, "m")
    members = []
    if "ensemble" in cfg:
        e = cfg["ensemble"]
        seed = args.seed if args.seed is not None else int(e.get("seed", 0))
        for mem in ensemble(seed, int(e.get("size", 10)), tuple(e.get("v1_range", (0.1, 0.9)))):
            members.append((mem.index, mem.spec))
    elif "potential" in cfg:
        members.append((0, _potential(cfg, dimension=2)))
    else:
        v1 = _get(cfg, "v1")
        d = enclosure(m, v1)
        status = "ok" if d.valid else "not applicable (||V||_1 >= 1)"
        return Result({"disks": d.as_dict(), "status": status, "violations": 0})
    rows, complete, reports, violations = [], True, [], 0
    for idx, spec in members:
        v1 = norm_lp(spec, 1)
        d = enclosure(m, v1)
        sp = full_spectrum(spec, m, tol=_tol(args, cfg), n_nodes=_nodes(args, cfg))
        complete &= sp.complete
        for r in sp.records:
            inside = d.contains(r.z, slack=max(10 * _tol(args, cfg), 1e-10))
            violations += int(d.valid and not inside)
            rows.append(dict(r.as_row(), member=idx, v1=v1, inside=inside))
        reports.append({"member": idx, "disks": d.as_dict(), "count": sp.count, "complete": sp.complete})
    status = "ok" if violations == 0 else "violations"
    return Result({"m": m, "members": reports, "violations": violations, "status": status},
                  rows, ["member", "v1"] + SPECTRUM_COLUMNS + ["inside"], complete)


def cmd_weak(cfg: dict, args) -> Result:
    from .weak_coupling import DEFAULT_SWEEP, coupling_matrix, fit_quadratic, weak_sweep

    m = _get(cfg, "m")
    spec = _potential(cfg, dimension=2)
    side = str(cfg.get("side", "+"))
    eps_list = [float(e) for e in cfg.get("eps", DEFAULT_SWEEP)]
    solver = BirmanSchwinger(spec, m, _nodes(args, cfg))
    rows = weak_sweep(solver, eps_list, side, _tol(args, cfg))
    U = coupling_matrix(spec)
    j = 0 if side == "+" else 1
    found = [r for r in rows if np.isfinite(r.z.real)]
    report = {"m": m, "side": side, "U": U, "predicted_coefficient": (-1 if side == "+" else 1) * 0.5 * m * U[j, j] ** 2,
              "rows": [r.as_row() for r in rows]}
    if len(found) >= 3:
        report["fitted_coefficient"] = fit_quadratic([r.eps for r in found], [r.z for r in found], m, side)
    return Result(report, [r.as_row() for r in rows],
                  ["eps", "re_z", "im_z", "predicted_re", "predicted_im", "residual"], len(found) == len(rows))


def cmd_lt(cfg: dict, args) -> Result:
    from .enclosure_lt import CALIBRATED, count_bound, lt_massive, lt_massless
    from .ensembles import ensemble, full_spectrum

    m = _get(cfg, "m")
    tau = _get(cfg, "tau", float, CALIBRATED["tau"])
    members = []
    if "ensemble" in cfg:
        e = cfg["ensemble"]
        seed = args.seed if args.seed is not None else int(e.get("seed", 1))
        members = [(mem.index, mem.spec) for mem in
                   ensemble(seed, int(e.get("size", 5)), tuple(e.get("v1_range", (0.5, 2.0))))]
    else:
        members = [(0, _potential(cfg, dimension=2))]
    out, rows, complete = [], [], True
    for idx, spec in members:
        v1, v2 = norm_lp(spec, 1), norm_lp(spec, 2)
        sp = full_spectrum(spec, m, tol=_tol(args, cfg), n_nodes=_nodes(args, cfg))
        complete &= sp.complete
        rep = lt_massless(sp.records, v1, v2) if m == 0 else lt_massive(sp.records, m, tau, v1, v2)
        entry = {"member": idx, "v1": v1, "v2": v2, "report": rep.as_dict(), "complete": sp.complete}
        if "count" in cfg:
            c = cfg["count"]
            entry["count_bound"] = count_bound(m, float(c.get("delta", 0.1)), float(c.get("epsilon", 0.1)),
                                               float(c.get("R", 5.0)), v1, v2, tau, eigs=sp.records).as_dict()
        out.append(entry)
        rows.append({"member": idx, "v1": v1, "v2": v2, "lhs": rep.lhs, "rhs": rep.rhs, "holds": rep.holds,
                     "count": sp.count})
    return Result({"m": m, "tau": tau if m > 0 else None, "calibrated": CALIBRATED, "members": out},
                  rows, ["member", "v1", "v2", "lhs", "rhs", "holds", "count"], complete)


def cmd_dwe(cfg: dict, args) -> Result:
    from .dwe import (DWEParams, dwe_norms, dwe_weak_prediction, dwe_weak_prediction_exact_reduction,
                      integral_a1, map_spectrum, to_dirac)
    from .weak_coupling import search_box

    p = DWEParams.from_dict(cfg)
    mu, spec = to_dirac(p)
    s = float(np.real(integral_a1(p)))
    v1 = norm_lp(spec, 1)
    solver = BirmanSchwinger(spec, mu, _nodes(args, cfg))
    eps_list = [float(e) for e in cfg.get("eps", [cfg.get("epsilon", 0.5)])]
    real_a1 = not np.any(np.imag(evaluate(p.a1, solver.grid.nodes)))
    rows, complete = [], True
    for eps in eps_list:
        pred, _ = dwe_weak_prediction_exact_reduction(eps, p, s)
        z_guess = 1j * (pred + p.a0)  # Dirac plane, near -mu
        box = search_box(complex(z_guess), eps, v1, mu, "-")
        sp = solver.find_eigenvalues(box, eps, tol=_tol(args, cfg))
        complete &= sp.complete
        closed, _ = dwe_weak_prediction(eps, p, s) if s > 0 else (complex(np.nan, np.nan), None)
        seen = []
        for r in sp.records:
            lam = complex(map_spectrum(r.z, p.a0))
            # real a1: the spectrum is closed under conjugation; the box may hold both members
            for l in (lam, lam.conjugate()) if real_a1 else (lam,):
                if any(abs(l - q) <= 1e3 * _tol(args, cfg) for q in seen):
                    continue
                seen.append(l)
                rows.append({"eps": eps, "re_lambda": l.real, "im_lambda": l.imag,
                             "predicted_re": (closed if l.imag >= 0 else np.conj(closed)).real,
                             "predicted_im": (closed if l.imag >= 0 else np.conj(closed)).imag,
                             "exact_reduction_re": (pred if l.imag >= 0 else np.conj(pred)).real,
                             "exact_reduction_im": (pred if l.imag >= 0 else np.conj(pred)).imag,
                             "residual": r.residual})
    report = {"a0": p.a0, "q0": p.q0, "mu": mu, "int_a1": s,
              "norms_closed_form": dwe_norms(p), "norms_exact": dwe_norms(p, exact=True), "rows": rows}
    return Result(report, rows, ["eps", "re_lambda", "im_lambda", "predicted_re", "predicted_im",
                                 "exact_reduction_re", "exact_reduction_im", "residual"], complete)


def cmd_waveguide(cfg: dict, args) -> Result:
    from .waveguide import (WaveguideBS, coupling, mode_coupling, thresholds, waveguide_sweep)
    from .weak_coupling import FitQualityWarning, fit_quadratic
    import warnings

    n_max = args.modes if args.modes is not None else _get(cfg, "n_max", int, 8)
    geom = thresholds(_get(cfg, "a"), _get(cfg, "theta"), n_max)
    spec = _potential(cfg, dimension=4)
    side = str(cfg.get("side", "+"))
    eps_list = [float(e) for e in cfg.get("eps", [0.4, 0.2, 0.1, 0.05])]
    solver = WaveguideBS(spec, geom, _nodes(args, cfg))
    rows = waveguide_sweep(solver, eps_list, side, _tol(args, cfg))
    cp = coupling(spec, geom)
    U0 = mode_coupling(spec, geom)
    found = [r for r in rows if np.isfinite(r.z.real)]
    report = {"geometry": geom.to_dict(), "coupling": cp.as_dict(), "mode_coupling": U0,
              "rows": [r.as_row() for r in rows]}
    if len(found) >= 3:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FitQualityWarning)
            report["fitted_coefficient"] = fit_quadratic([r.eps for r in found], [r.z for r in found], geom.E0, side)
    return Result(report, [r.as_row() for r in rows],
                  ["eps", "re_z", "im_z", "predicted_re", "predicted_im", "modal_re", "modal_im", "residual"],
                  len(found) == len(rows))


def cmd_oracle(cfg: dict, args) -> Result:
    from . import oracle

    problem = str(cfg.get("problem", "line"))
    eps = _get(cfg, "epsilon", float, 1.0)
    K = _get(cfg, "K", int, None)
    region = _region(cfg)
    target = region[0] if region else None
    if problem == "line":
        m = _get(cfg, "m")
        spec = _potential(cfg, dimension=2)
        box = oracle.suggest_box(spec, m, eps, K or oracle.DEFAULT_K, target=target)
        if "L" in cfg:
            box = oracle.OracleConfig(L=_get(cfg, "L"), K=box.K, target=target)
        sp = oracle.direct_spectrum_1d(m, spec, eps, box)
        rows = _spectrum_rows(sp)
        cols = SPECTRUM_COLUMNS
    elif problem == "dwe":
        from .dwe import DWEParams
        p = DWEParams.from_dict(cfg)
        box = oracle.OracleConfig(L=_get(cfg, "L", float, 40.0 / p.mu), K=K or oracle.DEFAULT_K, target=target)
        sp = oracle.direct_spectrum_dwe(p, eps, box)
        rows = [{"re_lambda": r.z.real, "im_lambda": r.z.imag, "residual": r.residual, "epsilon": eps}
                for r in sp.records]
        cols = ["re_lambda", "im_lambda", "residual", "epsilon"]
    elif problem == "waveguide":
        from .waveguide import thresholds
        n_max = args.modes if args.modes is not None else _get(cfg, "n_max", int, 2)
        geom = thresholds(_get(cfg, "a"), _get(cfg, "theta"), n_max)
        spec = _potential(cfg, dimension=4)
        box = oracle.suggest_waveguide_box(spec, geom, eps, K or 128, target=target)
        if "L" in cfg:
            box = oracle.OracleConfig(L=_get(cfg, "L"), K=box.K, target=target)
        sp = oracle.direct_spectrum_waveguide(spec, geom, eps, box)
        rows = _spectrum_rows(sp)
        cols = SPECTRUM_COLUMNS
    else:
        raise ConfigError(f"unknown oracle problem {problem!r}; expected line, dwe or waveguide")
    report = {"problem": problem, "epsilon": eps, "L": box.L, "K": box.K, "rows": rows,
              "messages": sp.messages}
    return Result(report, rows, cols, True)


HANDLERS = {"solve": cmd_solve, "enclose": cmd_enclose, "weak": cmd_weak, "lt": cmd_lt,
            "dwe": cmd_dwe, "waveguide": cmd_waveguide, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dirac-spec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    p.add_argument("--tol", type=float, help="root-finder tolerance override")
    p.add_argument("--seed", type=int, help="seed for random ensembles")
    p.add_argument("--modes", type=int, help="waveguide mode truncation N_max")
    p.add_argument("--grid", type=int, help="longitudinal quadrature node count")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, digest = load_config(args.config)
        if args.tol is not None and not args.tol > 0:
            raise ConfigError("--tol must be positive")
        manifest = RunManifest(args.command, args.config, digest, args.out, args.tol, args.seed,
                               args.modes, args.grid)
        result = HANDLERS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"dirac-spec: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    report = {"manifest": manifest.as_dict(), "complete": result.complete, **result.report}
    _atomic_write(os.path.join(args.out, f"{args.command}.json"),
                  json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n")
    if result.columns:
        _atomic_write(os.path.join(args.out, f"{args.command}.csv"),
                      csv_text(result.columns, result.rows, manifest))
    if not result.complete:
        print("dirac-spec: numerical result incomplete (unresolved cells or missing eigenvalues)",
              file=sys.stderr)
        return EXIT_INCOMPLETE
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
