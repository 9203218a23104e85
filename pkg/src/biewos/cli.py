"""Scenario runner: ``biewos solve <config>`` and ``biewos compare <run> <ref> <tol>``.

Configs are INI files. ``[run]`` names the method(s) and output, ``[scene]``
the geometry and data, one section per method holds its parameters, and
``[sweep]`` maps ``section.key`` to comma-separated values (Cartesian product,
in file order). The CSV body depends only on the config and seed; wall-clock
timings go to the JSON run record next to it.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import re
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import BiewosError, ConfigError
from .field_eval import BoundaryData, evaluate, icosphere
from .geometry import (Plate, Scene, SceneKind, four_plates, plate_set, point_charge_half_space,
                       point_charge_sphere, sine_data, thin_disk)
from .last_passage import estimate_lp
from .patch_solver import SystemKind, sample_gamma_grid, setup_sphere_patch, solve_patch
from .point_solver import point_frame, sigma2_prime, solve_point
from .reference_bem import solve_charge_density
from .wos import WosConfig, set_workers

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SCHEMA_VERSION = 1

METHODS = ("biewos_point", "last_passage", "sigma2", "biewos_patch", "reference_bem", "field_eval")
_PREFIX = {"biewos_point": "bw", "last_passage": "lp", "sigma2": "s2", "biewos_patch": "patch",
           "reference_bem": "bem", "field_eval": "field"}

DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"method": "biewos_point", "output": "out.csv", "seed": "0"},
    "scene": {"kind": "half_space_charge"},
    "wos": {"n_path": "1000", "eps": "1e-5", "trunc_radius": "1e5", "max_steps": "10000"},
    "point": {"x": "0.5, 0, 0", "a": "0.5", "n_g1": "20", "n_g2": "20", "delta_rel": "1e-4",
              "radial_scale": "interval", "sigma2": "auto", "reference": ""},
    "last_passage": {"n_path": "400000", "permissive": "false"},
    "patch": {"center": "0, 0, 3", "a": "1", "n_rings": "8", "n_theta": "64", "n_phi": "128",
              "kind": "second", "gamma_order": "30"},
    "bem": {"n": "33", "grading": "uniform", "query": ""},
    "field": {"subdivisions": "3", "targets": "0, 0, 4"},
    "sweep": {},
}


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


class Config:
    """INI config with typed getters that report section, key and line on error."""

    def __init__(self, text: str, path: str = "<string>"):
        self.path = path
        self.parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        self.parser.optionxform = str
        try:
            self.parser.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(str(exc).splitlines()[0]) from exc
        self.lines = self._index_lines(text)
        for sec in self.parser.sections():
            if sec not in DEFAULTS:
                raise ConfigError("unknown section", section=sec, line=self.lines.get((sec, None)))

    @staticmethod
    def _index_lines(text: str) -> dict:
        out: dict = {}
        section = None
        for no, raw in enumerate(text.splitlines(), start=1):
            s = raw.strip()
            m = re.match(r"^\[([^\]]+)\]", s)
            if m:
                section = m.group(1).strip()
                out[(section, None)] = no
            elif section and s and s[0] not in "#;":
                key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
                out[(section, key)] = no
        return out

    @classmethod
    def load(cls, path) -> "Config":
        p = Path(path)
        try:
            return cls(p.read_text(encoding="utf-8"), str(p))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc

    def set(self, dotted: str, value: str) -> None:
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must be section.key")
        sec, key = dotted.split(".", 1)
        if sec not in DEFAULTS:
            raise ConfigError("unknown section", section=sec)
        if not self.parser.has_section(sec):
            self.parser.add_section(sec)
        self.parser.set(sec, key, value)

    def raw(self, sec: str, key: str) -> str:
        if self.parser.has_option(sec, key):
            return self.parser.get(sec, key).strip()
        if key in DEFAULTS.get(sec, {}):
            return DEFAULTS[sec][key]
        raise ConfigError("missing required key", section=sec, key=key)

    def _err(self, sec, key, msg) -> ConfigError:
        return ConfigError(msg, section=sec, key=key, line=self.lines.get((sec, key)))

    def get(self, sec: str, key: str, conv: Callable[[str], Any], what: str) -> Any:
        text = self.raw(sec, key)
        try:
            return conv(text)
        except (ValueError, TypeError):
            raise self._err(sec, key, f"expected {what}, got {text!r}") from None

    def float(self, sec, key, positive=False) -> float:
        v = self.get(sec, key, float, "a number")
        if positive and not v > 0:
            raise self._err(sec, key, "must be positive")
        return v

    def int(self, sec, key, minimum=None) -> int:
        v = self.get(sec, key, lambda s: int(float(s)) if float(s).is_integer() else int(s), "an integer")
        if minimum is not None and v < minimum:
            raise self._err(sec, key, f"must be >= {minimum}")
        return v

    def vec(self, sec, key, n=3) -> np.ndarray:
        v = self.get(sec, key, lambda s: np.array([float(t) for t in s.split(",")]), "a vector")
        if len(v) != n:
            raise self._err(sec, key, f"expected {n} components")
        return v

    def bool(self, sec, key) -> bool:
        s = self.raw(sec, key).lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise self._err(sec, key, f"expected a boolean, got {s!r}")

    def choice(self, sec, key, options) -> str:
        s = self.raw(sec, key)
        if s not in options:
            raise self._err(sec, key, f"expected one of {', '.join(options)}, got {s!r}")
        return s

    def methods(self) -> list[str]:
        ms = [m.strip() for m in self.raw("run", "method").split(",") if m.strip()]
        for m in ms:
            if m not in METHODS:
                raise self._err("run", "method", f"unknown method {m!r}")
        if not ms:
            raise self._err("run", "method", "no method given")
        return ms

    def sweep(self) -> list[tuple[str, list[str]]]:
        if not self.parser.has_section("sweep"):
            return []
        out = []
        for dotted, text in self.parser.items("sweep"):
            if "." not in dotted or dotted.split(".", 1)[0] not in DEFAULTS:
                raise self._err("sweep", dotted, "sweep keys must be section.key")
            vals = [v.strip() for v in text.split(",") if v.strip()]
            out.append((dotted, vals))
        return out

    def as_dict(self) -> dict:
        d = {sec: dict(self.parser.items(sec)) for sec in self.parser.sections()}
        return {k: d[k] for k in sorted(d)}


# ---------------------------------------------------------------------------
# scenes
# ---------------------------------------------------------------------------


def build_scene(cfg: Config) -> Scene:
    kind = cfg.choice("scene", "kind", ("half_space_charge", "four_plates", "thin_disk",
                                        "sphere_charge", "plates"))
    if kind == "half_space_charge":
        return point_charge_half_space(_opt(cfg, "strength", 1.0), _opt(cfg, "depth", 1.0, True))
    if kind == "four_plates":
        pots = cfg.get("scene", "potentials", lambda s: [float(t) for t in s.split(",")], "4 numbers") \
            if _has(cfg, "scene", "potentials") else [0.0, 1.0, 0.0, 0.0]
        if len(pots) != 4:
            raise cfg._err("scene", "potentials", "need four potentials")
        return four_plates(pots)
    if kind == "thin_disk":
        return thin_disk(_opt(cfg, "radius", 1.0, True), _opt(cfg, "potential", 1.0))
    if kind == "sphere_charge":
        return point_charge_sphere(_opt(cfg, "radius", 3.0, True), _opt(cfg, "charge", 1.0))
    # generic plates: rects = x0 x1 y0 y1; ... with optional sine data
    rects = cfg.get("scene", "rects", lambda s: [[float(t) for t in r.split()] for r in s.split(";")],
                    "rectangles 'x0 x1 y0 y1; ...'")
    if any(len(r) != 4 for r in rects):
        raise cfg._err("scene", "rects", "each rectangle needs four numbers")
    data = cfg.choice("scene", "data", ("levels", "sine")) if _has(cfg, "scene", "data") else "levels"
    if data == "sine":
        m = cfg.float("scene", "m")
        n = cfg.float("scene", "n")
        return plate_set([Plate(*r) for r in rects], sine_data(m, n))
    pots = cfg.get("scene", "potentials", lambda s: [float(t) for t in s.split(",")], "numbers")
    if len(pots) != len(rects):
        raise cfg._err("scene", "potentials", "one potential per rectangle")
    return plate_set([Plate(*r, potential=p) for r, p in zip(rects, pots)])


def _has(cfg: Config, sec: str, key: str) -> bool:
    return cfg.parser.has_option(sec, key) and cfg.parser.get(sec, key).strip() != ""


def _opt(cfg: Config, key: str, default: float, positive: bool = False) -> float:
    return cfg.float("scene", key, positive) if _has(cfg, "scene", key) else default


def wos_config(cfg: Config, seed: int) -> WosConfig:
    try:
        return WosConfig(eps_shell=cfg.float("wos", "eps", True), trunc_radius=cfg.float("wos", "trunc_radius", True),
                         n_paths=cfg.int("wos", "n_path", 1), max_steps=cfg.int("wos", "max_steps", 1), seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc), section="wos") from exc


# ---------------------------------------------------------------------------
# methods: each returns (columns, rows) for one sweep point
# ---------------------------------------------------------------------------


@dataclass
class MethodOutput:
    params: dict[str, Any]
    results: list[dict[str, Any]]
    paths: int = 0


def _err_pct(value: float, ref: float | None):
    if ref is None or ref == 0 or not math.isfinite(ref):
        return ""
    return 100.0 * (value / ref - 1.0)


def _point_reference(cfg: Config, scene: Scene, cache: dict) -> float | None:
    text = cfg.raw("point", "reference")
    if not text:
        return None
    if text.startswith("bem:"):
        try:
            n = int(text[4:])
        except ValueError:
            raise cfg._err("point", "reference", "expected bem:<panels per side>") from None
        x = cfg.vec("point", "x")
        key = ("bem", n, tuple(x))
        if key not in cache:
            cache[key] = float(solve_charge_density(scene, n).face_density(x[None, :])[0])
        return cache[key]
    if text == "converged":
        return None
    return cfg.get("point", "reference", float, "a number, bem:<n> or converged")


def run_biewos_point(cfg, scene, seed, cache) -> MethodOutput:
    a = cfg.float("point", "a", True)
    frame = point_frame(cfg.vec("point", "x"), a)
    w = wos_config(cfg, seed)
    n_g1 = cfg.int("point", "n_g1", 2)
    n_g2 = cfg.int("point", "n_g2", 1)
    delta_rel = cfg.float("point", "delta_rel", True)
    res = solve_point(scene, frame, n_g1, n_g2, delta_rel * a, w,
                      radial_scale=cfg.choice("point", "radial_scale", ("interval", "radius")),
                      sigma2_method=cfg.choice("point", "sigma2", ("auto", "ring", "exact")))
    ref = _point_reference(cfg, scene, cache)
    params = dict(a=a, delta_rel=delta_rel, n_g1=n_g1, n_g2=n_g2, n_path=w.n_paths,
                  reference="" if ref is None else ref)
    out = dict(sigma1=res.sigma1, sigma2=res.sigma2, total=res.total, err_pct=_err_pct(res.total, ref),
               se=res.std_error, paths=res.n_paths)
    return MethodOutput(params, [out], res.n_paths)


def run_last_passage(cfg, scene, seed, cache) -> MethodOutput:
    a = cfg.float("point", "a", True)
    frame = point_frame(cfg.vec("point", "x"), a)
    w = wos_config(cfg, seed)
    n = cfg.int("last_passage", "n_path", 1)
    res = estimate_lp(scene, frame, n, w, permissive=cfg.bool("last_passage", "permissive"))
    ref = _point_reference(cfg, scene, cache)
    params = dict(a=a, reference="" if ref is None else ref)
    out = dict(sigma=res.sigma_lp, err_pct=_err_pct(res.sigma_lp, ref), se=res.std_error, paths=n,
               n_infinity=res.n_infinity)
    return MethodOutput(params, [out], n)


def run_sigma2(cfg, scene, seed, cache) -> MethodOutput:
    a = cfg.float("point", "a", True)
    frame = point_frame(cfg.vec("point", "x"), a)
    n_g2 = cfg.int("point", "n_g2", 1)
    delta_rel = cfg.float("point", "delta_rel", True)
    scale = cfg.choice("point", "radial_scale", ("interval", "radius"))
    method = cfg.choice("point", "sigma2", ("auto", "ring", "exact"))
    val = sigma2_prime(scene, frame, delta_rel * a, n_g2, scale, method)
    if cfg.raw("point", "reference") == "converged":
        key = ("s2", tuple(frame.center), a, scale, method)
        if key not in cache:
            cache[key] = sigma2_prime(scene, frame, 1e-6 * a, 20, scale, method)
        ref = cache[key]
    else:
        ref = _point_reference(cfg, scene, cache)
    params = dict(a=a, delta_rel=delta_rel, n_g2=n_g2, reference="" if ref is None else ref)
    return MethodOutput(params, [dict(value=val, err_pct=_err_pct(val, ref))])


def run_biewos_patch(cfg, scene, seed, cache) -> MethodOutput:
    if scene.kind is not SceneKind.SPHERE:
        raise ConfigError("biewos_patch needs a sphere scene", section="scene", key="kind")
    a = cfg.float("patch", "a", True)
    setup = setup_sphere_patch(scene, cfg.vec("patch", "center"), a, cfg.int("patch", "n_rings", 1),
                               n_theta=cfg.int("patch", "n_theta", 2), n_phi=cfg.int("patch", "n_phi", 3),
                               gamma_order=cfg.int("patch", "gamma_order", 2))
    kind = SystemKind(cfg.choice("patch", "kind", ("first", "second")))
    w = wos_config(cfg, seed)
    grid = sample_gamma_grid(scene, setup, w)
    field_ = solve_patch(scene, setup, kind, gamma=grid)
    R = float(scene.params[3])
    q = float(scene.levels[0]) * 4.0 * math.pi * R
    ref = -q / (4.0 * math.pi * R * R)
    params = dict(a=a, n_rings=cfg.int("patch", "n_rings"), n_theta=setup.n_theta,
                  n_phi=setup.n_phi, n_path=w.n_paths, kind=kind.value, reference=ref)
    rows = [dict(panel=i, r=float(field_.r[i]), dudn=float(field_.values[i]), se=float(field_.std_error[i]),
                 rel_err=float(field_.values[i] / ref - 1.0)) for i in range(len(field_.values))]
    return MethodOutput(params, rows, field_.n_paths)


def run_reference_bem(cfg, scene, seed, cache) -> MethodOutput:
    n = cfg.int("bem", "n", 1)
    sol = solve_charge_density(scene, n, cfg.choice("bem", "grading", ("uniform", "cosine")))
    text = cfg.raw("bem", "query")
    pts = cfg.get("bem", "query", lambda s: [[float(t) for t in p.split(",")] for p in s.split(";")],
                  "points 'x, y; x, y'") if text else []
    params = dict(n=n, n_panels=len(sol.sigma))
    rows = []
    for p in pts:
        rows.append(dict(x=p[0], y=p[1], face_density=float(sol.face_density([p])[0]),
                         total_charge=sol.total_charge, residual=sol.residual))
    if not rows:
        rows.append(dict(x="", y="", face_density="", total_charge=sol.total_charge, residual=sol.residual))
    return MethodOutput(params, rows)


def run_field_eval(cfg, scene, seed, cache) -> MethodOutput:
    if scene.kind is not SceneKind.SPHERE:
        raise ConfigError("field_eval runs on the sphere_charge scene", section="scene", key="kind")
    c = scene.params[:3]
    R = float(scene.params[3])
    u0 = float(scene.levels[0])
    q = u0 * 4.0 * math.pi * R
    k = cfg.int("field", "subdivisions", 0)
    mesh = icosphere(k, R, c)
    # exterior problem: outward of the domain is into the sphere
    data = BoundaryData.from_mesh(mesh, u0, q / (4.0 * math.pi * R * R), outward_sign=-1.0)
    targets = cfg.get("field", "targets", lambda s: [[float(t) for t in p.split(",")] for p in s.split(";")],
                      "points 'x, y, z; ...'")
    rows = []
    for t in targets:
        val = evaluate(data, np.array(t))
        dist = float(np.linalg.norm(np.array(t) - c))
        ref = q / (4.0 * math.pi * dist) if dist > R else 0.0
        rows.append(dict(x=t[0], y=t[1], z=t[2], u=val, reference=ref,
                         rel_err=(val / ref - 1.0) if ref else val))
    return MethodOutput(dict(subdivisions=k, n_panels=mesh.n_panels), rows)


RUNNERS = {"biewos_point": run_biewos_point, "last_passage": run_last_passage, "sigma2": run_sigma2,
           "biewos_patch": run_biewos_patch, "reference_bem": run_reference_bem,
           "field_eval": run_field_eval}


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    config: dict
    methods: list[str]
    columns: list[str]
    rows: list[list[Any]]
    timings: list[dict] = field(default_factory=list)
    total_paths: int = 0
    version: str = __version__
    git: str = "unknown"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _git_stamp() -> str:
    try:
        out = subprocess.run(["git", "rev-parse", "--short", "HEAD"], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def run(cfg: Config, seed: int | None = None) -> RunRecord:
    methods = cfg.methods()
    if seed is None:
        seed = cfg.int("run", "seed", 0)
    scene = build_scene(cfg)   # validate before any sweep work
    echo = cfg.as_dict()
    sweep = cfg.sweep()
    names = [k for k, _ in sweep]
    combos = list(itertools.product(*[v for _, v in sweep])) if sweep else [()]
    cache: dict = {}
    columns: list[str] | None = None
    rows: list[list[Any]] = []
    timings = []
    total_paths = 0
    for combo in combos:
        for k, v in zip(names, combo):
            cfg.set(k, v)
        if any(k.startswith("scene.") for k in names):
            scene = build_scene(cfg)
        params: dict[str, Any] = {}
        per_method = []
        t0 = time.perf_counter()
        for m in methods:
            t1 = time.perf_counter()
            out = RUNNERS[m](cfg, scene, seed, cache)
            timings.append(dict(sweep=dict(zip(names, combo)), method=m, seconds=time.perf_counter() - t1,
                                paths=out.paths))
            total_paths += out.paths
            for k, v in out.params.items():
                params.setdefault(k, v)
            per_method.append((m, out))
        n_rows = max(len(o.results) for _, o in per_method)
        cols = list(params)
        for m, o in per_method:
            cols += [f"{_PREFIX[m]}_{k}" for k in o.results[0]]
        if columns is None:
            columns = cols
        elif cols != columns:
            raise ConfigError("sweep changes the CSV columns")
        for r in range(n_rows):
            row = [params[k] for k in params]
            for m, o in per_method:
                res = o.results[r] if r < len(o.results) else {k: "" for k in o.results[0]}
                row += list(res.values())
            rows.append(row)
        timings[-1]["row_seconds"] = time.perf_counter() - t0
    if columns is None:
        columns = _empty_columns(methods)
    return RunRecord(echo, methods, columns, rows, timings, total_paths, __version__, _git_stamp())


_RESULT_COLUMNS = {
    "biewos_point": (["a", "delta_rel", "n_g1", "n_g2", "n_path", "reference"],
                     ["sigma1", "sigma2", "total", "err_pct", "se", "paths"]),
    "last_passage": (["a", "reference"], ["sigma", "err_pct", "se", "paths", "n_infinity"]),
    "sigma2": (["a", "delta_rel", "n_g2", "reference"], ["value", "err_pct"]),
    "biewos_patch": (["a", "n_rings", "n_theta", "n_phi", "n_path", "kind", "reference"],
                     ["panel", "r", "dudn", "se", "rel_err"]),
    "reference_bem": (["n", "n_panels"], ["x", "y", "face_density", "total_charge", "residual"]),
    "field_eval": (["subdivisions", "n_panels"], ["x", "y", "z", "u", "reference", "rel_err"]),
}


def _empty_columns(methods: list[str]) -> list[str]:
    params: list[str] = []
    res: list[str] = []
    for m in methods:
        p, r = _RESULT_COLUMNS[m]
        params += [c for c in p if c not in params]
        res += [f"{_PREFIX[m]}_{c}" for c in r]
    return params + res


def write_csv(record: RunRecord, path: Path, config_name: str) -> None:
    buf = io.StringIO()
    buf.write(f"# biewos {record.version} schema={'+'.join(record.methods)}/v{SCHEMA_VERSION}\n")
    buf.write(f"# config={config_name}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(record.columns)
    for row in record.rows:
        w.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_record(record: RunRecord, path: Path) -> None:
    d = dict(version=record.version, git=record.git, methods=record.methods, config=record.config,
             columns=record.columns, rows=[[_fmt(v) for v in r] for r in record.rows],
             timings=record.timings, total_paths=record.total_paths)
    path.write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ConfigError(f"{path}: no header row")
    return rows[0], rows[1:]


def parse_tolerance(spec: str) -> tuple[dict[str, tuple[str, float]], tuple[str, float] | None]:
    """``"1.5%"``, ``"0.01"``, ``"abs:1e-3"`` or ``"col=1%,col2=abs:1e-4"``."""

    def one(s: str) -> tuple[str, float]:
        s = s.strip()
        mode = "rel"
        if s.startswith("abs:"):
            mode, s = "abs", s[4:]
        scale = 1.0
        if s.endswith("%"):
            s, scale = s[:-1], 0.01
        try:
            v = float(s) * scale
        except ValueError:
            raise ConfigError(f"bad tolerance {spec!r}") from None
        if v < 0:
            raise ConfigError("tolerance must be non-negative")
        return mode, v

    if "=" not in spec:
        return {}, one(spec)
    per = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ConfigError(f"bad tolerance entry {part!r}")
        k, v = part.split("=", 1)
        per[k.strip()] = one(v)
    return per, None


def compare(run_csv, ref_csv, tolerance: str) -> tuple[bool, list[str]]:
    """Row-by-row check of the reference columns against the run; returns (ok, report lines)."""
    rh, rr = read_csv(run_csv)
    fh, fr = read_csv(ref_csv)
    per, default = parse_tolerance(tolerance)
    missing = [c for c in fh if c not in rh]
    if missing:
        raise ConfigError(f"schema mismatch: reference columns {missing} absent from run")
    if len(rr) != len(fr):
        raise ConfigError(f"schema mismatch: {len(rr)} run rows vs {len(fr)} reference rows")
    cols = list(per) if per else fh
    for c in cols:
        if c not in fh:
            raise ConfigError(f"tolerance names unknown column {c!r}")
    report, ok = [], True
    for i, (a, b) in enumerate(zip(rr, fr), start=1):
        for c in cols:
            va, vb = a[rh.index(c)], b[fh.index(c)]
            mode, tol = per.get(c, default) if per else default
            try:
                x, y = float(va), float(vb)
            except ValueError:
                if va != vb:
                    ok = False
                    report.append(f"row {i} {c}: {va!r} != {vb!r}")
                continue
            err = abs(x - y) if mode == "abs" else (abs(x - y) / abs(y) if y != 0 else abs(x - y))
            if not err <= tol:
                ok = False
                report.append(f"row {i} {c}: run {x!r} ref {y!r} {mode} err {err:.3g} > {tol:.3g}")
    report.append(f"{'PASS' if ok else 'FAIL'}: {len(rr)} rows, columns {', '.join(cols)}")
    return ok, report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biewos", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"biewos {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("solve", help="run a config and write CSV + JSON record")
    s.add_argument("config")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    s.add_argument("--output", default=None, help="CSV path (overrides [run] output)")
    c = sub.add_parser("compare", help="compare a run CSV against a reference CSV")
    c.add_argument("run_csv")
    c.add_argument("reference_csv")
    c.add_argument("tolerance")
    return p


def _solve(args) -> int:
    cfg = Config.load(args.config)
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg.set(k.strip(), v.strip())
    if args.workers is not None:
        set_workers(args.workers)
    out = Path(args.output) if args.output else Path(cfg.raw("run", "output"))
    if not out.is_absolute() and args.output is None:
        out = Path(args.config).parent / out
    t0 = time.perf_counter()
    record = run(cfg, args.seed)
    write_csv(record, out, Path(args.config).name)
    write_record(record, out.with_suffix(".json"))
    print(f"wrote {out} ({len(record.rows)} rows, {record.total_paths} paths, "
          f"{time.perf_counter() - t0:.1f} s)")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "solve":
            return _solve(args)
        ok, report = compare(args.run_csv, args.reference_csv, args.tolerance)
        print("\n".join(report))
        return EXIT_OK if ok else EXIT_FAIL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BiewosError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
