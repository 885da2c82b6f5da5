"""Experiment runner: JSON config in, CSV + JSON summaries out.

Subcommands: spec, xi, cover, equidist, orth, rd, conv, gvb, green.
Exit codes: 0 all verdicts PASS, 2 a verdict FAILED, 1 usage/config
error, 3 budget exceeded (partial outputs flagged in the manifest).

Rationals in configs are strings "p/q" and are parsed exactly; exact
values are rendered both as decimals and as "p+q*sqrt(w)" strings, so two
runs of the same config produce byte-identical CSV.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .asymptotics import (
    BudgetError,
    CoverError,
    TestFunction,
    build_partition_weights,
    check_shadow_cover,
    fiber_size_report,
    gvb_growth,
    max_rectangle_error,
    max_uniform_rectangle_error,
    orthogonality_target,
    phi_r_pairs,
    rd_convolution_check,
    rd_sweep,
    sphere_weights,
    _resolution_depth,
    fit_decay,
)
from .boundary import Cylinder
from .measures import (
    WalkSpec,
    critical_exponent,
    green_metric_of_walk,
    mc_cylinder_counts,
    mc_first_passage,
    ps_measure,
    solve_first_passage,
)
from .representation import StepFunction, harish_chandra_length
from .scalars import as_float, exact_str
from .words import (
    GroupContext,
    MetricSpec,
    ReducedWord,
    canonical_letters,
    enumerate_annulus,
    letter_to_str,
)

log = logging.getLogger("freeboundary")

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _parse_fraction(value, path: str) -> Fraction:
    try:
        if isinstance(value, bool):
            raise ValueError("booleans are not rationals")
        if isinstance(value, int):
            return Fraction(value)
        if isinstance(value, str):
            return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(path, f"invalid rational {value!r}: {exc}") from None
    raise ConfigError(path, f"expected a rational 'p/q' string or integer, got {type(value).__name__}")


def _parse_metric(cfg: dict, k: int) -> MetricSpec:
    spec = cfg.get("metric", {"kind": "word"})
    kind = spec.get("kind", "word")
    if kind == "word":
        return MetricSpec.word(k)
    if kind == "weighted":
        lengths_cfg = spec.get("lengths")
        if not isinstance(lengths_cfg, dict):
            raise ConfigError("metric.lengths", "weighted metric needs a lengths table")
        lengths = []
        for i in range(1, k + 1):
            key = letter_to_str(i)
            if key not in lengths_cfg:
                raise ConfigError(f"metric.lengths.{key}", "missing generator length")
            lengths.append(_parse_fraction(lengths_cfg[key], f"metric.lengths.{key}"))
        return MetricSpec.weighted(k, lengths)
    if kind == "green":
        walk = _parse_walk(spec.get("walk"), k, "metric.walk")
        return green_metric_of_walk(walk)
    raise ConfigError("metric.kind", f"unknown metric kind {kind!r}")


def _parse_walk(spec, k: int, path: str) -> WalkSpec:
    if not isinstance(spec, dict):
        raise ConfigError(path, "walk needs a generator probability table")
    probs = []
    for i in range(1, k + 1):
        key = letter_to_str(i)
        if key not in spec:
            raise ConfigError(f"{path}.{key}", "missing generator probability")
        probs.append(_parse_fraction(spec[key], f"{path}.{key}"))
    try:
        return WalkSpec.from_generator_probs(probs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_vector(spec, k: int, path: str) -> StepFunction:
    if not isinstance(spec, dict):
        raise ConfigError(path, "vector spec must be an object")
    constant = _parse_fraction(spec.get("constant", 0), f"{path}.constant")
    cells = []
    for i, cell in enumerate(spec.get("cells", [])):
        if not (isinstance(cell, (list, tuple)) and len(cell) == 2):
            raise ConfigError(f"{path}.cells[{i}]", "expected [stem, value]")
        stem, value = cell
        try:
            cyl = Cylinder.from_str(stem)
        except ValueError as exc:
            raise ConfigError(f"{path}.cells[{i}]", str(exc)) from None
        cells.append((cyl, _parse_fraction(value, f"{path}.cells[{i}]")))
    try:
        if cells:
            return StepFunction.from_pairs(cells, k, constant=constant)
        return StepFunction.constant(constant, k)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_function(spec, k: int, path: str) -> TestFunction:
    if spec is None:
        return TestFunction.one(k)
    boundary = _parse_vector(spec.get("boundary", {"constant": 1}), k, f"{path}.boundary")
    interior = {}
    for word, value in spec.get("interior", {}).items():
        interior[ReducedWord.from_str(word)] = _parse_fraction(value, f"{path}.interior.{word}")
    return TestFunction(boundary, interior)


class RunConfig:
    def __init__(self, raw: dict, path: Path):
        self.raw = raw
        self.path = path
        group = raw.get("group", {})
        self.k = int(group.get("rank", 2))
        if self.k < 2:
            raise ConfigError("group.rank", "rank must be >= 2")
        if self.k > 26:
            raise ConfigError("group.rank", "text encoding supports ranks up to 26")
        self.metric = _parse_metric(raw, self.k)
        self.epsilon = _parse_fraction(raw.get("epsilon", 1), "epsilon")
        self.rho = _parse_fraction(raw.get("rho", 1), "rho")
        self.h = None if raw.get("h") is None else _parse_fraction(raw["h"], "h")
        grid = raw.get("grid", [4, 6, 8, 10, 12])
        if not isinstance(grid, list) or not grid or any(
            grid[i] >= grid[i + 1] for i in range(len(grid) - 1)
        ):
            raise ConfigError("grid", "grid must be a nonempty strictly increasing list")
        self.grid = grid
        self.weights_kind = raw.get("weights", "sphere")
        if self.weights_kind not in ("sphere", "shadow"):
            raise ConfigError("weights", f"unknown weights kind {self.weights_kind!r}")
        self.depth = int(raw.get("depth", 2))
        self.tolerance = float(raw.get("tolerance", 0.05))
        self.seed = int(raw.get("seed", 0))
        self.samples = int(raw.get("samples", 100_000))
        self.budget = int(raw.get("budget", 10_000_000))
        self.backend = raw.get("backend", "exact" if self.metric.kind == "word" else "float")
        self.vectors = {
            name: _parse_vector(spec, self.k, f"vectors.{name}")
            for name, spec in raw.get("vectors", {}).items()
        }
        functions = raw.get("functions", {})
        self.f1 = _parse_function(functions.get("f1"), self.k, "functions.f1")
        self.f2 = _parse_function(functions.get("f2"), self.k, "functions.f2")
        self.cases = raw.get("cases", [])
        self.walk = _parse_walk(raw["walk"], self.k, "walk") if "walk" in raw else None
        self._one = StepFunction.constant(Fraction(1), self.k)

    def context(self) -> GroupContext:
        kwargs = dict(epsilon=self.epsilon, rho=self.rho)
        if self.h is not None:
            kwargs["h"] = self.h
        return GroupContext(self.metric, **kwargs)

    def vector(self, name: str) -> StepFunction:
        if name in ("1", "one"):
            return self._one
        if name not in self.vectors:
            raise ConfigError(f"vectors.{name}", "vector not defined")
        return self.vectors[name]


def load_config(path: Path) -> RunConfig:
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}", f"invalid JSON: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "config must be a JSON object")
    return RunConfig(raw, path)


# -- cache and manifest -------------------------------------------------------


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:24]


class Cache:
    def __init__(self, root: Path, enabled: bool = True):
        self.root = root
        self.enabled = enabled
        self.hits = 0
        self.misses = 0

    def _path(self, kind: str, key: dict) -> Path:
        return self.root / f"{kind}-{_digest(key)}.json"

    def get(self, kind: str, key: dict):
        if not self.enabled:
            self.misses += 1
            return None
        path = self._path(kind, key)
        try:
            entry = json.loads(path.read_text())
            if entry.get("key") != json.loads(json.dumps(key, default=str)):
                raise ValueError("key mismatch")
            self.hits += 1
            return entry["payload"]
        except FileNotFoundError:
            self.misses += 1
            return None
        except (ValueError, KeyError) as exc:
            log.warning("corrupt cache entry %s (%s); recomputing", path, exc)
            self.misses += 1
            return None

    def put(self, kind: str, key: dict, payload) -> None:
        if not self.enabled:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        path = self._path(kind, key)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"key": key, "payload": payload}, sort_keys=True, default=str))
        os.replace(tmp, path)


class Emitter:
    """Collects output files, timings and cache stats into a manifest."""

    def __init__(self, out: Path, config: RunConfig, subcommand: str, cache: Cache):
        self.out = out
        self.config = config
        self.subcommand = subcommand
        self.cache = cache
        self.files: List[dict] = []
        self.timings: Dict[str, float] = {}
        self.flags: Dict[str, bool] = {}
        self.t0 = time.monotonic()
        out.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, rows: Sequence[dict]) -> Path:
        path = self.out / name
        if rows:
            fields = list(rows[0].keys())
            with open(path, "w", newline="\n") as fh:
                writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
                writer.writeheader()
                writer.writerows(rows)
        else:
            path.write_text("")
        self._record(path)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out / name
        payload = {"schema_version": SCHEMA_VERSION, **payload}
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
        self._record(path)
        return path

    def write_plot_script(self, name: str, csv_name: str, param: str, ycol: str, logy: bool = True) -> Path:
        body = PLOT_TEMPLATE.format(name=name, csv=csv_name, param=param, ycol=ycol, plot="semilogy" if logy else "plot")
        path = self.out / f"plot_{name}.py"
        path.write_text(body)
        self._record(path)
        return path

    def _record(self, path: Path) -> None:
        data = path.read_bytes()
        self.files.append(
            {"path": path.name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        )

    def finish(self, exit_code: int) -> None:
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": self.subcommand,
            "config_hash": _digest(self.config.raw),
            "config_path": str(self.config.path),
            "package_version": __version__,
            "wall_clock_s": round(time.monotonic() - self.t0, 3),
            "stage_timings_s": {k: round(v, 3) for k, v in self.timings.items()},
            "cache": {"hits": self.cache.hits, "misses": self.cache.misses},
            "files": self.files,
            "flags": self.flags,
            "exit_code": exit_code,
        }
        (self.out / "run_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


PLOT_TEMPLATE = '''#!/usr/bin/env python3
"""Plot the {name} sweep from {csv} (generated script)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(Path(__file__).parent / "{csv}")))
xs = [float(r["{param}"]) for r in rows]
ys = [float(r["{ycol}"]) for r in rows]
plt.figure()
plt.{plot}(xs, [max(abs(y), 1e-18) for y in ys], "o-")
plt.xlabel("{param}")
plt.ylabel("{ycol}")
plt.title("{name}")
plt.tight_layout()
plt.savefig(Path(__file__).parent / "{name}.png", dpi=150)
print("wrote {name}.png")
'''


# -- subcommands --------------------------------------------------------------


def cmd_spec(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    alpha, pd = ctx.alpha, ctx.perron
    letters = canonical_letters(cfg.k)
    payload = {
        "rank": cfg.k,
        "metric_kind": cfg.metric.kind,
        "alpha": alpha,
        "omega": float(ctx.omega),
        "epsilon": str(cfg.epsilon),
        "dimension": ctx.dimension,
        "exp_minus_alpha": math.exp(-alpha),
        "rho": str(ctx.rho),
        "h": str(ctx.h),
        "perron_exact": pd.exact,
        "eigenvalue_residual": pd.eigenvalue_residual,
        "row_sum_residual": pd.row_sum_residual(),
        "perron_vector": {letter_to_str(s): str(pd.vector[s]) for s in letters},
    }
    rows = []
    for s in letters:
        row = {"state": letter_to_str(s), "initial": str(pd.pi0[s])}
        for t in letters:
            row[f"to_{letter_to_str(t)}"] = str(pd.trans.get((s, t), 0))
        rows.append(row)
    emit.write_csv("markov.csv", rows)
    emit.write_json("spec_summary.json", payload)
    print(f"omega = {float(ctx.omega):.12g}  alpha = {alpha:.12g}  D = {ctx.dimension:.12g}")
    print(f"e^-alpha = {math.exp(-alpha):.12g}  perron exact = {pd.exact}")
    return 0


def cmd_xi(cfg: RunConfig, emit: Emitter, cache: Cache) -> int:
    ctx = cfg.context()
    mu = ps_measure(ctx)
    n_max = int(cfg.grid[-1])
    key = {
        "kind": "xi",
        "k": cfg.k,
        "metric": cfg.metric.kind,
        "lengths": [str(l) for l in cfg.metric.lengths],
        "epsilon": str(cfg.epsilon),
        "n_max": n_max,
    }
    t0 = time.monotonic()
    payload = cache.get("xi", key)
    if payload is None:
        if cfg.metric.kind != "word":
            raise ConfigError("metric.kind", "the xi table is indexed by length only for the word metric")
        table = []
        for n in range(n_max + 1):
            xi = harish_chandra_length(n, mu)
            table.append({"n": n, "xi_exact": exact_str(xi), "xi": repr(as_float(xi))})
        payload = table
        cache.put("xi", key, payload)
    emit.timings["xi_table"] = time.monotonic() - t0
    rows = [
        {"n": entry["n"], "xi": entry["xi"], "xi_exact": entry["xi_exact"]}
        for entry in payload
    ]
    emit.write_csv("xi.csv", rows)
    bracket = [
        as_float(float(entry["xi"])) * (2 * cfg.k - 1) ** (int(entry["n"]) / 2) / (1 + int(entry["n"]))
        for entry in payload
    ]
    emit.write_json(
        "xi_summary.json",
        {"n_max": n_max, "bracket_c1": min(bracket), "bracket_c2": max(bracket)},
    )
    emit.write_plot_script("xi", "xi.csv", "n", "xi")
    print(f"xi table up to n = {n_max}; bracket of xi(n)*omega^(n/2)/(1+n): [{min(bracket):.6f}, {max(bracket):.6f}]")
    return 0


def cmd_cover(cfg: RunConfig, emit: Emitter, cache: Cache) -> int:
    rho_max = int(cfg.raw.get("rho_max", 3))
    rows = []
    ok = True
    for R in cfg.grid:
        minimal = None
        witness = ""
        for rho in range(rho_max + 1):
            key = {
                "kind": "cover",
                "k": cfg.k,
                "metric": cfg.metric.kind,
                "lengths": [str(l) for l in cfg.metric.lengths],
                "epsilon": str(cfg.epsilon),
                "rho": rho,
                "h": str(cfg.h) if cfg.h is not None else "default",
                "R": R,
            }
            payload = cache.get("cover", key)
            if payload is None:
                ctx = GroupContext(
                    cfg.metric,
                    epsilon=cfg.epsilon,
                    rho=Fraction(rho),
                    **({"h": cfg.h} if cfg.h is not None else {}),
                )
                rep = check_shadow_cover(R, ctx, budget=cfg.budget)
                payload = {
                    "covered": rep.covered,
                    "witness": str(rep.witness) if rep.witness else "",
                    "resolution": rep.resolution,
                    "annulus_size": rep.annulus_size,
                }
                cache.put("cover", key, payload)
            if payload["covered"]:
                minimal = rho
                break
            witness = payload["witness"]
        rows.append(
            {
                "R": R,
                "minimal_rho": "" if minimal is None else minimal,
                "covered_within_scan": minimal is not None,
                "last_witness": witness,
            }
        )
        ok = ok and minimal is not None
    emit.write_csv("cover.csv", rows)
    emit.write_json("cover_summary.json", {"rows": rows, "rho_max": rho_max, "passed": ok})
    for row in rows:
        print(f"R={row['R']}: minimal covering rho = {row['minimal_rho']}")
    return 0 if ok else 2


def cmd_equidist(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    mu = ps_measure(ctx)
    tol = float(cfg.raw.get("tolerance", 0.02))
    rows = []
    probe_errors = []
    t0 = time.monotonic()
    for R in cfg.grid:
        weights = build_partition_weights(R, ctx, budget=cfg.budget)
        err = max_rectangle_error(weights, mu, cfg.depth)
        probe_depth = _resolution_depth(R, ctx) - 1
        probe = max_uniform_rectangle_error(weights, mu, probe_depth)
        probe_errors.append(as_float(probe))
        rows.append(
            {
                "R": R,
                "max_error": repr(as_float(err)),
                "max_error_exact": exact_str(err),
                "probe_depth": probe_depth,
                "probe_error": repr(as_float(probe)),
                "probe_error_exact": exact_str(probe),
                "support": weights.support_size(),
                "annulus": weights.annulus_size,
                "max_mass_times_annulus": repr(as_float(weights.max_mass() * weights.annulus_size)),
            }
        )
    emit.timings["equidist"] = time.monotonic() - t0
    final_err = float(rows[-1]["max_error"])
    exponent, r2, window = fit_decay(cfg.grid, probe_errors)
    passed = final_err <= tol
    emit.write_csv("equidist.csv", rows)
    emit.write_json(
        "equidist_summary.json",
        {
            "depth": cfg.depth,
            "tolerance": tol,
            "final_max_error": final_err,
            "probe_fit_exponent": exponent,
            "probe_fit_r2": r2,
            "reference_rate": float(cfg.epsilon) / 2.0,
            "passed": passed,
        },
    )
    emit.write_plot_script("equidist", "equidist.csv", "R", "probe_error")
    print(f"max depth<={cfg.depth} rectangle error at R={cfg.grid[-1]}: {final_err:.6g} (tol {tol})")
    print(f"probe-depth errors fit: exponent {exponent} (reference {float(cfg.epsilon)/2}), r2 {r2}")
    return 0 if passed else 2


def cmd_orth(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    mu = ps_measure(ctx)
    cases = cfg.cases or [{"v1": "one", "w1": "one", "v2": "one", "w2": "one"}]
    resolved = []
    for i, case in enumerate(cases):
        try:
            resolved.append(
                (
                    case.get("name", f"case{i}"),
                    cfg.vector(case.get("v1", "one")),
                    cfg.vector(case.get("w1", "one")),
                    cfg.vector(case.get("v2", "one")),
                    cfg.vector(case.get("w2", "one")),
                )
            )
        except ConfigError:
            raise
    pairs = []
    pair_index: Dict[int, Tuple[int, int]] = {}
    seen: Dict[Tuple[int, int], int] = {}
    for i, (_, v1, w1, v2, w2) in enumerate(resolved):
        for slot, (v, w) in enumerate(((v1, w1), (v2, w2))):
            key = (id(v), id(w))
            if key not in seen:
                seen[key] = len(pairs)
                pairs.append((v, w))
            pair_index[2 * i + slot] = seen[key]
    rel_floor = Fraction(1, 16)
    rows = []
    finals: Dict[str, float] = {}
    partial = False
    t0 = time.monotonic()
    for R in cfg.grid:
        try:
            if cfg.weights_kind == "sphere":
                weights = sphere_weights(R, ctx)
            else:
                weights = build_partition_weights(R, ctx, budget=cfg.budget)
            grid_vals = phi_r_pairs(cfg.f1, cfg.f2, pairs, weights, mu)
        except BudgetError:
            partial = True
            break
        for i, (name, v1, w1, v2, w2) in enumerate(resolved):
            value = grid_vals[pair_index[2 * i]][pair_index[2 * i + 1]]
            target = orthogonality_target(cfg.f1, cfg.f2, v1, v2, w1, w2, mu)
            err = abs(value - target)
            floor = rel_floor if abs(target) < rel_floor else abs(target)
            rel = as_float(err / floor)
            rows.append(
                {
                    "case": name,
                    "R": R,
                    "value": repr(as_float(value)),
                    "value_exact": exact_str(value),
                    "target": repr(as_float(target)),
                    "target_exact": exact_str(target),
                    "abs_error": repr(as_float(err)),
                    "rel_error": repr(rel),
                }
            )
            finals[name] = rel
    emit.timings["orth"] = time.monotonic() - t0
    emit.write_csv("orth.csv", rows)
    passed = bool(finals) and all(v <= cfg.tolerance for v in finals.values()) and not partial
    emit.write_json(
        "orth_summary.json",
        {
            "weights": cfg.weights_kind,
            "tolerance": cfg.tolerance,
            "final_rel_errors": finals,
            "passed": passed,
            "partial": partial,
        },
    )
    emit.write_plot_script("orth", "orth.csv", "R", "abs_error")
    emit.flags["partial"] = partial
    for name, rel in finals.items():
        print(f"{name}: final rel error {rel:.6g} (tol {cfg.tolerance})")
    if partial:
        return 3
    return 0 if passed else 2


def cmd_rd(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    mu = ps_measure(ctx)
    v = cfg.vector(cfg.raw.get("v", "one"))
    w = cfg.vector(cfg.raw.get("w", "one"))
    grid = [int(n) for n in cfg.grid]
    t0 = time.monotonic()
    report = rd_sweep(v, w, grid, ctx, mu, lower_band=float(cfg.raw.get("lower_band", 0.3)))
    emit.timings["rd"] = time.monotonic() - t0
    rows = [
        {"n": n, "ratio": repr(report.values[i]), "sum_sq_exact": report.values_exact[i]}
        for i, n in enumerate(report.grid)
    ]
    emit.write_csv("rd.csv", rows)
    emit.write_json("rd_summary.json", report.summary())
    emit.write_plot_script("rd", "rd.csv", "n", "ratio", logy=False)
    print(
        f"r_n over n={grid[0]}..{grid[-1]}: sup {report.constants['sup_ratio']:.6f}, "
        f"inf(n>=2) {report.constants['inf_ratio_n_ge_2']:.6f} -> {report.verdict}"
    )
    return 0 if report.passed else 2


def cmd_conv(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    r_max = int(cfg.raw.get("fiber_r_max", 6))
    t0 = time.monotonic()
    fibers = fiber_size_report(r_max, cfg.k)
    emit.timings["fibers"] = time.monotonic() - t0
    triples = [tuple(t) for t in cfg.raw.get("triples", [[2, 2, 2], [2, 3, 3], [3, 3, 4]])]
    t0 = time.monotonic()
    check = rd_convolution_check(triples, ctx, trials=int(cfg.raw.get("trials", 3)), seed=cfg.seed, budget=cfg.budget)
    emit.timings["random_trials"] = time.monotonic() - t0
    cap = float(cfg.raw.get("ratio_cap", 4.0))
    rows = [
        {"defect_p": p, "max_fiber": fibers.max_by_defect[p], "bound": 1 if p == 0 else 2 * cfg.k * (2 * cfg.k - 1) ** (p - 1)}
        for p in sorted(fibers.max_by_defect)
    ]
    emit.write_csv("conv_fibers.csv", rows)
    passed = fibers.extremal_ok and fibers.bound_ok and check.max_restricted_ratio <= cap
    emit.write_json(
        "conv_summary.json",
        {
            "fiber_r_max": r_max,
            "extremal_fibers_all_one": fibers.extremal_ok,
            "fiber_bound_ok": fibers.bound_ok,
            "max_restricted_ratio": check.max_restricted_ratio,
            "max_full_ratio_over_1pR": check.max_full_ratio_over_1pR,
            "ratio_cap": cap,
            "triples": [list(t) for t in check.grid],
            "passed": passed,
        },
    )
    print(
        f"fibers exhaustive to R,R'<= {r_max}: extremal size-1 {fibers.extremal_ok}, bound {fibers.bound_ok}; "
        f"max restricted conv ratio {check.max_restricted_ratio:.4f} (cap {cap})"
    )
    return 0 if passed else 2


def cmd_gvb(cfg: RunConfig, emit: Emitter) -> int:
    ctx = cfg.context()
    mu = ps_measure(ctx)
    v = cfg.vector(cfg.raw.get("v", "one"))
    w = cfg.vector(cfg.raw.get("w", "one"))
    grid = [int(n) for n in cfg.grid]
    t0 = time.monotonic()
    report = gvb_growth(v, w, grid, ctx, mu)
    emit.timings["gvb"] = time.monotonic() - t0
    rows = [
        {
            "n": n,
            "q": repr(report.values[i]),
            "q_exact": report.values_exact[i],
            "ratio": repr(report.extras["ratio"][i]),
        }
        for i, n in enumerate(report.grid)
    ]
    emit.write_csv("gvb.csv", rows)
    emit.write_json("gvb_summary.json", report.summary())
    emit.write_plot_script("gvb", "gvb.csv", "n", "q")
    print(
        f"q_n growth exponent {report.fitted_exponent:.4f} (r2 {report.fit_r2:.4f}) "
        f"over top half of n={grid[0]}..{grid[-1]} -> verdict: {report.verdict}"
    )
    return 0 if report.passed else 2


def cmd_green(cfg: RunConfig, emit: Emitter) -> int:
    walk = cfg.walk or WalkSpec.simple(cfg.k)
    fp = solve_first_passage(walk)
    metric = green_metric_of_walk(walk)
    alpha, pd = critical_exponent(metric)
    ctx = GroupContext(metric, epsilon=cfg.epsilon, rho=cfg.rho)
    mu = ps_measure(ctx)
    depth = min(int(cfg.raw.get("depth", 2)), 4)
    t0 = time.monotonic()
    counts, decided, undecided = mc_cylinder_counts(walk, depth, cfg.samples, cfg.seed)
    emit.timings["mc_cylinders"] = time.monotonic() - t0

    def mc_mass(stem) -> Tuple[float, float]:
        hits = sum(c for w, c in counts.items() if w[: len(stem)] == stem)
        est = hits / decided
        return est, 1.96 * math.sqrt(max(est * (1 - est), 0.0) / decided)

    rows = []
    inside = 0
    total = 0
    stems = [()]
    for d in range(1, depth + 1):
        stems.extend(w.letters for w in enumerate_annulus(d, 0, MetricSpec.word(cfg.k)))
    for stem in stems:
        est, half = mc_mass(stem)
        exact = mu.mass_letters(stem)
        ok = abs(est - float(exact)) <= half or stem == ()
        inside += ok
        total += 1
        rows.append(
            {
                "cylinder": "".join(letter_to_str(s) for s in stem) or "e",
                "mc": repr(est),
                "ci_halfwidth": repr(half),
                "ps_of_green": repr(float(exact)),
                "inside_ci": ok,
            }
        )
    emit.write_csv("green_cylinders.csv", rows)

    rng_words, anc_rows, anc_inside = _ancona_words(cfg, walk, fp, emit)
    passed = inside == total and anc_inside == len(anc_rows) and undecided == 0
    emit.write_json(
        "green_summary.json",
        {
            "first_passage_exact": fp.exact,
            "first_passage": {letter_to_str(s): str(fp.values[s]) for s in canonical_letters(cfg.k) if s > 0},
            "green_alpha": alpha,
            "green_alpha_minus_one": alpha - 1.0,
            "mc_samples": cfg.samples,
            "mc_undecided": undecided,
            "cylinders_inside_ci": f"{inside}/{total}",
            "ancona_inside_ci": f"{anc_inside}/{len(anc_rows)}",
            "passed": passed,
        },
    )
    print(
        f"first passage exact={fp.exact}; green alpha-1 = {alpha-1:.2e}; "
        f"cylinders in CI {inside}/{total}; ancona in CI {anc_inside}/{len(anc_rows)}"
    )
    return 0 if passed else 2


def _ancona_words(cfg: RunConfig, walk: WalkSpec, fp, emit: Emitter):
    import numpy as np

    rng = np.random.default_rng(cfg.seed + 1)
    letters = canonical_letters(cfg.k)
    words = []
    count = int(cfg.raw.get("ancona_words", 20))
    max_len = int(cfg.raw.get("ancona_max_len", 6))
    while len(words) < count:
        length = int(rng.integers(1, max_len + 1))
        seq: List[int] = []
        for _ in range(length):
            options = [s for s in letters if not seq or s != -seq[-1]]
            seq.append(options[int(rng.integers(len(options)))])
        w = tuple(seq)
        if w not in words:
            words.append(w)
    rows = []
    inside = 0
    samples = int(cfg.raw.get("ancona_samples", max(cfg.samples // 5, 10_000)))
    t0 = time.monotonic()
    for i, wl in enumerate(words):
        g = ReducedWord(wl, _reduced=True)
        est = mc_first_passage(walk, g, samples, cfg.seed + 100 + i)
        product = 1.0
        for s in wl:
            product *= float(fp.values[s])
        ok = abs(est.estimate - product) <= est.halfwidth
        inside += ok
        rows.append(
            {
                "g": str(g),
                "mc_F": repr(est.estimate),
                "ci_halfwidth": repr(est.halfwidth),
                "product_f": repr(product),
                "inside_ci": ok,
            }
        )
    emit.timings["mc_ancona"] = time.monotonic() - t0
    emit.write_csv("green_ancona.csv", rows)
    return words, rows, inside


# -- entry point --------------------------------------------------------------


COMMANDS = {
    "spec": cmd_spec,
    "xi": cmd_xi,
    "cover": cmd_cover,
    "equidist": cmd_equidist,
    "orth": cmd_orth,
    "rd": cmd_rd,
    "conv": cmd_conv,
    "gvb": cmd_gvb,
    "green": cmd_green,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freeboundary",
        description="Exact boundary-representation experiments on free groups.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--no-cache", action="store_true")
        p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.budget is not None:
        cfg.budget = args.budget
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads > 1:
        log.info("running sequentially (--threads accepted for compatibility)")
    cache = Cache(args.out / "cache", enabled=not args.no_cache)
    emit = Emitter(args.out, cfg, args.subcommand, cache)
    try:
        handler = COMMANDS[args.subcommand]
        if handler in (cmd_xi, cmd_cover):
            code = handler(cfg, emit, cache)
        else:
            code = handler(cfg, emit)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except BudgetError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        emit.flags["budget_exceeded"] = True
        emit.finish(3)
        return 3
    except CoverError as exc:
        print(f"cover failure: {exc}", file=sys.stderr)
        emit.finish(2)
        return 2
    emit.finish(code)
    return code


if __name__ == "__main__":
    sys.exit(main())
