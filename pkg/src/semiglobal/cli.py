"""Batch front end: flat key=value run configurations in, CSV and JSON out.

Exit codes are 0 on success, 1 on configuration errors and 2 when the
computation ran but some samples (or the requested thresholds) failed.
Floats are written in their shortest round-trip form so that identical
configurations give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .action import make_context
from .contour import (build_path, default_scan_radius, descent_path, scan_sectors, singularities,
                      truncation_radius)
from .errors import ConfigError, SemiglobalError
from .potential import parse_potential
from .reference import (airy, compare, linear_airy_reference, local_residual, numerov_solve,
                        pearcey, wkb)
from .wavefunction import (SampleFailure, WaveSample, connected_solution, normalize, psi_grid,
                           wronskian_check)

NORMALIZATIONS = ("wkb_match", "max_abs_one", "l2_unit", "none")
SOLUTIONS = ("connected", "plus", "minus")
STRATEGIES = ("auto_per_q", "frozen_path")
NUMEROV_STEP = 1e-3


@dataclass(frozen=True)
class RunConfig:
    """One run; see :func:`parse_config` for the text format."""

    potential: str
    E: float
    hbar: float
    q_min: float
    q_max: float
    n: int
    anchor: float | None = None
    strategy: str = "auto_per_q"
    solution: str = "connected"
    pair: bool = False
    normalization: str = "wkb_match"
    tol_quad: float = 1e-8
    root_tol: float = 1e-9
    delta_avoid: float | None = None
    sheet: int = 1
    continuation: str = "circle"
    rel_l2_max: float = 0.02
    ratio_min: float = 2.5
    ratio_max: float = 6.0
    out: str = "."
    seed: int = 0

    def __post_init__(self):
        parse_potential(self.potential)
        if not self.q_min < self.q_max:
            raise ConfigError("q_min must be below q_max")
        if self.n < 2:
            raise ConfigError("grid must have at least 2 points")
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        for name in ("tol_quad", "root_tol", "rel_l2_max"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.delta_avoid is not None and not self.delta_avoid > 0:
            raise ConfigError("delta_avoid must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {', '.join(STRATEGIES)}")
        if self.solution not in SOLUTIONS:
            raise ConfigError(f"solution must be one of {', '.join(SOLUTIONS)}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {', '.join(NORMALIZATIONS)}")
        if self.continuation not in ("circle", "ray"):
            raise ConfigError("continuation must be circle or ray")
        if self.sheet not in (1, -1):
            raise ConfigError("sheet must be 1 or -1")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.q_min, self.q_max, self.n)

    def context(self):
        return make_context(parse_potential(self.potential), self.E, self.hbar, anchor=self.anchor,
                            domain=(self.q_min, self.q_max), root_tol=self.root_tol)


def _parse_value(name: str, kind, text: str):
    text = text.strip()
    optional = "None" in str(kind)
    if optional and text.lower() in ("", "none"):
        return None
    base = str(kind).replace(" | None", "")
    try:
        if base == "float":
            return float(text)
        if base == "int":
            return int(text)
        if base == "bool":
            if text.lower() not in ("true", "false"):
                raise ValueError(text)
            return text.lower() == "true"
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are ignored.

    Raises
    ------
    ConfigError
        On unknown or duplicate keys, missing required keys or invalid values.
    """
    kinds = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, kinds[key], val)
    missing = [f.name for f in fields(RunConfig) if f.name in ("potential", "E", "hbar", "q_min", "q_max", "n")
               and f.name not in values]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        return RunConfig(**values)
    except SemiglobalError as exc:
        raise ConfigError(str(exc)) from exc


def format_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(format_config(c)) == c``."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            s = "none"
        elif isinstance(v, bool):
            s = "true" if v else "false"
        else:
            s = repr(v) if isinstance(v, float) else str(v)
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {p} not found")
    return parse_config(p.read_text())


# ---------------------------------------------------------------- output


def _num(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _num(c) for c in row])


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


SAMPLE_HEADER = ("q", "re_psi", "im_psi", "abs_psi", "re_phi", "im_phi", "n_evals", "est_error",
                 "trunc_radius", "path_id")


def _sample_rows(samples):
    for s in samples:
        if isinstance(s, SampleFailure):
            yield (s.q, math.nan, math.nan, math.nan, math.nan, math.nan, 0, math.nan, math.nan,
                   "failed:" + s.kind)
        else:
            yield (s.q, s.psi.real, s.psi.imag, abs(s.psi), s.phi.real, s.phi.imag, s.n_evals,
                   s.est_error, s.trunc_radius, s.path_id)


def _normalized(cfg: RunConfig, ctx, samples, branch=None):
    good = [s for s in samples if isinstance(s, WaveSample)]
    if cfg.normalization == "none" or not good:
        return samples, 1.0
    scaled = normalize(good, cfg.normalization, ctx=ctx, branch=branch)
    c = scaled[0].c_norm / good[0].c_norm
    out = [replace(s, psi=s.psi * c, c_norm=s.c_norm * c) if isinstance(s, WaveSample) else s
           for s in samples]
    return out, complex(c)


def _failures(samples):
    return [{"q": s.q, "kind": s.kind, "error": s.error} for s in samples if isinstance(s, SampleFailure)]


def _frozen(cfg: RunConfig, ctx, sheet: int):
    q_ref = 0.5 * (cfg.q_min + cfg.q_max)
    return descent_path(ctx, q_ref, sheet, delta_avoid=cfg.delta_avoid)


def _sheet_samples(cfg: RunConfig, ctx, sheet: int):
    grid = cfg.grid
    if cfg.strategy == "frozen_path":
        return psi_grid(ctx, grid, "frozen_path", path=_frozen(cfg, ctx, sheet), sheet=sheet,
                        tol_quad=cfg.tol_quad)
    return psi_grid(ctx, grid, sheet=sheet, tol_quad=cfg.tol_quad)


def solve(cfg: RunConfig, ctx=None) -> dict:
    """Evaluate the configured solution; returns the sample lists and metadata."""
    ctx = ctx or cfg.context()
    need_plus = cfg.pair or cfg.solution in ("connected", "plus")
    need_minus = cfg.pair or cfg.solution in ("connected", "minus")
    plus = _sheet_samples(cfg, ctx, 1) if need_plus else None
    minus = _sheet_samples(cfg, ctx, -1) if need_minus else None
    if cfg.solution == "connected":
        main = connected_solution(ctx, list(cfg.grid), plus, minus)
    else:
        main = plus if cfg.solution == "plus" else minus
    main, c = _normalized(cfg, ctx, main)
    out = {"samples": main, "c_norm": complex(c), "plus": None, "minus": None, "wronskian": None}
    if cfg.pair:
        out["plus"], _ = _normalized(cfg, ctx, plus, branch=1)
        out["minus"], _ = _normalized(cfg, ctx, minus, branch=-1)
        if not _failures(out["plus"] + out["minus"]) and cfg.n >= 5:
            breaks = [t.location.real for t in ctx.real_turning_points]
            out["wronskian"] = wronskian_check((out["plus"], out["minus"]), breaks=breaks)
    return out


# ---------------------------------------------------------------- commands


def cmd_run(cfg: RunConfig, out_dir: Path) -> int:
    ctx = cfg.context()
    res = solve(cfg, ctx)
    _write_csv(out_dir / "samples.csv", SAMPLE_HEADER, _sample_rows(res["samples"]))
    failures = _failures(res["samples"])
    meta = {"config": _config_dict(cfg), "n_points": cfg.n, "n_failed": len(failures),
            "failures": failures, "c_norm": [res["c_norm"].real, res["c_norm"].imag],
            "turning_points": [[t.location.real, t.location.imag] for t in ctx.turning_points]}
    if cfg.pair:
        _write_csv(out_dir / "samples_plus.csv", SAMPLE_HEADER, _sample_rows(res["plus"]))
        _write_csv(out_dir / "samples_minus.csv", SAMPLE_HEADER, _sample_rows(res["minus"]))
        failures += _failures(res["plus"]) + _failures(res["minus"])
        w = res["wronskian"]
        if w is not None:
            _write_csv(out_dir / "wronskian.csv", ("q", "re_w", "im_w"),
                       ((q, v.real, v.imag) for q, v in w.wronskian_profile))
            meta["wronskian"] = {"re_median": w.w_median.real, "im_median": w.w_median.imag,
                                 "constancy": w.constancy, "independent": bool(w.independent)}
        meta["n_failed"] = len(failures)
        meta["failures"] = failures
    _write_json(out_dir / "metadata.json", meta)
    return 2 if failures else 0


def _config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)


def _bounds_rows(sm):
    return ((j, math.degrees(lo), math.degrees(hi), math.degrees(sm.mid(j)))
            for j, (lo, hi) in enumerate(sm.sectors))


BOUNDS_HEADER = ("idx", "lo_deg", "hi_deg", "mid_deg")


def cmd_sectors(cfg: RunConfig, q: float, out_dir: Path) -> int:
    ctx = cfg.context()
    R = default_scan_radius(ctx, q, cfg.sheet)
    sm = scan_sectors(ctx, q, R, sheet=cfg.sheet, continuation=cfg.continuation)
    _write_csv(out_dir / "sectors.csv", ("alpha_deg", "exponent_re"),
               ((math.degrees(a), e) for a, e in sm.samples))
    _write_csv(out_dir / "sector_bounds.csv", BOUNDS_HEADER, _bounds_rows(sm))
    return 0


def cmd_contour(cfg: RunConfig, q: float, out_dir: Path, sector_pair=None) -> int:
    """Descent path, or the path between two sectors of the ray scan (the
    scan that matches straight segments through the origin; its bounds are
    written next to the path)."""
    ctx = cfg.context()
    if sector_pair is None:
        path = descent_path(ctx, q, cfg.sheet, delta_avoid=cfg.delta_avoid)
    else:
        R = default_scan_radius(ctx, q, cfg.sheet)
        sm = scan_sectors(ctx, q, R, sheet=cfg.sheet, continuation="ray")
        _write_csv(out_dir / "contour_sectors.csv", BOUNDS_HEADER, _bounds_rows(sm))
        i, o = sector_pair
        if not (0 <= i < len(sm) and 0 <= o < len(sm)):
            raise ConfigError(f"sector index out of range 0..{len(sm) - 1}")
        path = build_path(sm, singularities(ctx, q), i, o, truncation_radius(ctx, q, sm), cfg.delta_avoid)
    _write_csv(out_dir / "contour.csv", ("idx", "re_s", "im_s"),
               ((k, complex(p).real, complex(p).imag) for k, p in enumerate(path.waypoints)))
    return 0


def _numerov_reference(ctx, grid):
    """Numerov columns on a grid refined to at most ``NUMEROV_STEP``."""
    h = grid[1] - grid[0]
    m = max(1, int(math.ceil(h / NUMEROV_STEP - 1e-9)))
    fine = np.linspace(grid[0], grid[-1], (len(grid) - 1) * m + 1)
    V = np.real(ctx.spec.value(fine))
    left, right = V[0] > ctx.E and V[1] > ctx.E, V[-1] > ctx.E and V[-2] > ctx.E
    if left and right:
        return numerov_solve(ctx, fine, "matched")[::m, 1], None
    if left or right:
        return numerov_solve(ctx, fine, "decay_left" if left else "decay_right")[::m, 1], None
    mid = (len(fine) - 1) // 2
    k = max(1, int(round(0.25 * 2 * math.pi * ctx.hbar / max(abs(2 * (ctx.E - V[mid])) ** 0.5, 1e-12)
                         / (fine[1] - fine[0]))))
    k = min(k, len(fine) - 2 - mid)
    return (numerov_solve(ctx, fine, ("node_at", fine[mid]))[::m, 1],
            numerov_solve(ctx, fine, ("node_at", fine[mid + k]))[::m, 1])


def _read_reference_file(path: Path, grid):
    if not path.is_file():
        raise ConfigError(f"reference grid file {path} not found")
    rows = list(csv.DictReader(path.open()))
    q = np.array([float(r["q"]) for r in rows])
    if q.shape != grid.shape or not np.allclose(q, grid, rtol=0, atol=1e-12):
        raise ConfigError("reference grid does not match the configured grid")
    return np.array([complex(float(r["re_psi"]), float(r.get("im_psi", 0.0) or 0.0)) for r in rows])


def cmd_compare(cfg: RunConfig, ref: str, out_dir: Path) -> int:
    ctx = cfg.context()
    grid = cfg.grid
    if ref == "numerov":
        pair = _numerov_reference(ctx, grid)
    elif ref == "wkb":
        pair = (np.array([wkb(ctx, q, 1) for q in grid]), np.array([wkb(ctx, q, -1) for q in grid]))
    elif ref == "airy_window":
        pair = (linear_airy_reference(ctx, grid), None)
    else:
        pair = (_read_reference_file(Path(ref), grid), None)
    samples = solve(cfg, ctx)["samples"]
    failures = _failures(samples)
    if failures:
        _write_json(out_dir / "compare.json", {"failures": failures})
        return 2
    rep = compare(samples, pair, metadata={"reference": ref})
    resid = np.array([r for _, r in rep.residual_profile])
    scale = max(abs(s.psi) for s in samples) or 1.0
    a, b = rep.fit_coefficients
    report = {"potential": cfg.potential, "E": cfg.E, "hbar": cfg.hbar,
              "fit": {"re_a": a.real, "im_a": a.imag, "re_b": b.real, "im_b": b.imag},
              "rel_l2_error": rep.rel_l2_error, "max_rel_error_region": rep.max_rel_error_region,
              "residual_summary": {"median": float(np.median(resid) / scale),
                                   "p95": float(np.percentile(resid, 95) / scale)},
              "settings": {"reference": ref, "solution": cfg.solution, "strategy": cfg.strategy,
                           "tol_quad": cfg.tol_quad, "rel_l2_max": cfg.rel_l2_max,
                           "grid": [cfg.q_min, cfg.q_max, cfg.n]}}
    _write_json(out_dir / "compare.json", report)
    return 0 if rep.rel_l2_error <= cfg.rel_l2_max else 2


def scaling_table(cfg: RunConfig, hbars) -> list[dict]:
    """Median local residual of the sheet solution over the middle third of
    the grid at each ``hbar``, with the ratio to the previous entry.

    The ratio is ``None`` when either residual does not clear twice its
    finite-difference error bound, that is when the solution is exact to
    the resolution of the stencil.
    """
    grid = cfg.grid
    third = (cfg.q_max - cfg.q_min) / 3
    mid = grid[(grid >= cfg.q_min + third - 1e-12) & (grid <= cfg.q_max - third + 1e-12)]
    if mid.size == 0:
        mid = grid
    rows, prev = [], None
    for hb in hbars:
        ctx = replace(cfg, hbar=float(hb)).context()
        rb = np.array([local_residual(ctx, q, cfg.sheet) for q in mid])
        r, bound = float(np.median(rb[:, 0])), float(np.median(rb[:, 1]))
        resolved = r > 2.0 * bound
        ratio = prev[0] / r if prev is not None and prev[1] and resolved else None
        rows.append({"hbar": float(hb), "median_residual": r, "grid_bound": bound, "ratio": ratio})
        prev = (r, resolved)
    return rows


def cmd_scaling(cfg: RunConfig, hbars, out_dir: Path) -> int:
    rows = scaling_table(cfg, hbars)
    _write_csv(out_dir / "scaling.csv", ("hbar", "median_residual", "grid_bound", "ratio"),
               ((r["hbar"], r["median_residual"], r["grid_bound"], "n/a" if r["ratio"] is None else r["ratio"])
                for r in rows))
    ok = all(r["ratio"] is None or cfg.ratio_min <= r["ratio"] <= cfg.ratio_max for r in rows)
    return 0 if ok else 2


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="semiglobal", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sectors", "contour", "compare", "scaling"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None, help="output directory (default: the config's out)")
        if name in ("sectors", "contour"):
            sp.add_argument("--q", type=float, required=True)
        if name == "contour":
            sp.add_argument("--sectors", default=None, help="IN,OUT sector indices; default: descent ray")
        if name == "compare":
            sp.add_argument("--ref", required=True,
                            help="numerov, wkb, airy_window, or a CSV file with q,re_psi,im_psi")
        if name == "scaling":
            sp.add_argument("--hbars", required=True)
    for name in ("airy", "pearcey"):
        sp = sub.add_parser(name)
        sp.add_argument("--q", required=True, help="x for airy; x,y for pearcey")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "airy":
            x = _floats(args.q)
            if len(x) != 1:
                raise ConfigError("airy takes one value")
            ai, aip = airy(x[0])
            print(f"x,ai,aip\n{_num(x[0])},{_num(ai)},{_num(aip)}")
            return 0
        if args.command == "pearcey":
            xy = _floats(args.q)
            if len(xy) != 2:
                raise ConfigError("pearcey takes x,y")
            v = pearcey(*xy)
            print(f"x,y,re,im\n{_num(xy[0])},{_num(xy[1])},{_num(v.real)},{_num(v.imag)}")
            return 0
        cfg = load_config(args.config)
        out_dir = Path(args.out if args.out is not None else cfg.out)
        if args.command == "run":
            return cmd_run(cfg, out_dir)
        if args.command == "sectors":
            return cmd_sectors(cfg, args.q, out_dir)
        if args.command == "contour":
            pair = None
            if args.sectors is not None:
                vals = _floats(args.sectors)
                if len(vals) != 2 or any(v != int(v) for v in vals):
                    raise ConfigError("--sectors takes two integer indices IN,OUT")
                pair = (int(vals[0]), int(vals[1]))
            return cmd_contour(cfg, args.q, out_dir, pair)
        if args.command == "compare":
            return cmd_compare(cfg, args.ref, out_dir)
        if args.command == "scaling":
            return cmd_scaling(cfg, _floats(args.hbars), out_dir)
    except (ConfigError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SemiglobalError as exc:
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 1


if __name__ == "__main__":
    sys.exit(main())
