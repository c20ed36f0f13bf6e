"""Scenario files and the report pipelines behind the command line."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ParseError, PhaseIOError, SchemaError, ValidationError
from .interferometry import fit_phase_visibility, make_rng, sample_interferogram
from .phases import analyze, predicted_gauge_shift, report_from_frame
from .spectral import (
    GaugeProfile,
    apply_gauge_profile,
    build_commuting_gauge,
    canonical_frame,
    decompose_initial,
)
from .state import (
    DensityOperator,
    HamiltonianSchedule,
    UnitaryPath,
    compose_paths,
    make_density,
    path_from_hamiltonian,
    trajectory,
)

DEFAULT_STEPS = 1024
STEPS_ENV = "PHASE_DEFAULT_STEPS"


def default_steps() -> int:
    raw = os.environ.get(STEPS_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_STEPS
    try:
        n = int(raw)
    except ValueError:
        raise SchemaError(f"{STEPS_ENV} must be an integer, got {raw!r}") from None
    if n < 2:
        raise SchemaError(f"{STEPS_ENV} must be >= 2, got {n}")
    return n


@dataclass(frozen=True)
class Scenario:
    name: str
    rho0: DensityOperator
    steps: int
    schedule: Optional[HamiltonianSchedule] = None
    samples: Optional[UnitaryPath] = None
    windings: Optional[tuple] = None
    profile: str = "linear"
    interferogram: dict = field(default_factory=lambda: {"samples": 360, "noise_sigma": 0.0, "seed": 0})

    @property
    def dim(self) -> int:
        return self.rho0.dim

    def path(self, steps: Optional[int] = None) -> UnitaryPath:
        if self.samples is not None:
            return self.samples
        return path_from_hamiltonian(self.schedule, steps=steps or self.steps)


# ---------------------------------------------------------------------------
# parsing


def _matrix(value, where: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise SchemaError(f"{where}: expected a list of rows")
    rows = []
    for i, row in enumerate(value):
        out = []
        for j, x in enumerate(row):
            if isinstance(x, bool):
                raise SchemaError(f"{where}[{i}][{j}]: expected a number or [re, im]")
            if isinstance(x, (int, float)):
                z = complex(x, 0.0)
            elif isinstance(x, list) and len(x) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x):
                z = complex(x[0], x[1])
            else:
                raise SchemaError(f"{where}[{i}][{j}]: expected a number or [re, im], got {x!r}")
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                raise SchemaError(f"{where}[{i}][{j}]: entry is not finite")
            out.append(z)
        rows.append(out)
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise DimensionMismatch(f"{where}: matrix is not square")
    return np.array(rows, dtype=complex)


def _number(obj, key, where, kind=float, default=None, required=False):
    if key not in obj:
        if required:
            raise SchemaError(f"{where}: missing required field {key!r}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and not float(v).is_integer()):
        raise SchemaError(f"{where}.{key}: expected {'an integer' if kind is int else 'a number'}, got {v!r}")
    if not math.isfinite(v):
        raise SchemaError(f"{where}.{key}: value is not finite")
    return kind(v)


def _load(source):
    if isinstance(source, os.PathLike) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            return Path(source).read_text(), str(source)
        except OSError as exc:
            raise PhaseIOError(f"cannot read scenario {source}: {exc.strerror or exc}") from exc
    return source, "<text>"


def parse_scenario(source) -> Scenario:
    """Parse a scenario from a file path or JSON text.

    Raises
    ------
    ParseError
        Malformed JSON; the message carries line and column.
    SchemaError
        Missing or mistyped fields; the message names the field.
    DimensionMismatch
        Matrices of inconsistent size.
    """
    text, origin = _load(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{origin}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{origin}: top level must be an object")
    if "rho0" not in doc:
        raise SchemaError("missing required field 'rho0'")
    rho_m = _matrix(doc["rho0"], "rho0")
    dim = rho_m.shape[0]
    rho0 = make_density(rho_m)
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise SchemaError("name: expected a string")

    ev = doc.get("evolution")
    if not isinstance(ev, dict):
        raise SchemaError("missing required field 'evolution'" if ev is None else "evolution: expected an object")
    kind = ev.get("type")
    steps = _number(doc, "steps", "scenario", int, None)
    if steps is None:
        steps = default_steps()
    if steps < 2:
        raise SchemaError(f"steps: need at least 2, got {steps}")
    schedule = samples = None
    if kind == "hamiltonian":
        if "unitaries" in ev or "tau" in ev:
            raise SchemaError("evolution: hamiltonian evolution cannot also carry 'tau'/'unitaries'")
        segs = ev.get("segments")
        if not isinstance(segs, list) or not segs:
            raise SchemaError("evolution.segments: expected a non-empty list")
        parsed = []
        for j, seg in enumerate(segs):
            where = f"evolution.segments[{j}]"
            if not isinstance(seg, dict) or "H" not in seg:
                raise SchemaError(f"{where}: missing required field 'H'")
            h = _matrix(seg["H"], f"{where}.H")
            if h.shape[0] != dim:
                raise DimensionMismatch(f"{where}.H is {h.shape[0]}x{h.shape[0]} but rho0 is {dim}x{dim}")
            dt = _number(seg, "dt", where, float, required=True)
            parsed.append((h, dt))
        schedule = HamiltonianSchedule(tuple(parsed))
    elif kind == "samples":
        if "segments" in ev:
            raise SchemaError("evolution: sampled evolution cannot also carry 'segments'")
        tau = _number(ev, "tau", "evolution", float, required=True)
        us = ev.get("unitaries")
        if not isinstance(us, list) or len(us) < 3:
            raise SchemaError("evolution.unitaries: expected a list of at least 3 matrices")
        mats = [_matrix(u, f"evolution.unitaries[{i}]") for i, u in enumerate(us)]
        for i, u in enumerate(mats):
            if u.shape[0] != dim:
                raise DimensionMismatch(f"evolution.unitaries[{i}] is {u.shape[0]}x{u.shape[0]} but rho0 is {dim}x{dim}")
        samples = UnitaryPath(tau, np.array(mats))
        steps = samples.steps
    else:
        raise SchemaError(f"evolution.type: expected 'hamiltonian' or 'samples', got {kind!r}")

    windings = None
    profile = "linear"
    if "gauge" in doc and doc["gauge"] is not None:
        g = doc["gauge"]
        if not isinstance(g, dict):
            raise SchemaError("gauge: expected an object")
        wl = g.get("windings")
        if not isinstance(wl, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in wl):
            raise SchemaError("gauge.windings: expected a list of integers")
        windings = tuple(wl)
        profile = g.get("profile", "linear")
        if profile != "linear":
            raise SchemaError(f"gauge.profile: only 'linear' is supported, got {profile!r}")

    inter = {"samples": 360, "noise_sigma": 0.0, "seed": 0}
    if "interferogram" in doc and doc["interferogram"] is not None:
        ig = doc["interferogram"]
        if not isinstance(ig, dict):
            raise SchemaError("interferogram: expected an object")
        inter = {
            "samples": _number(ig, "samples", "interferogram", int, 360),
            "noise_sigma": _number(ig, "noise_sigma", "interferogram", float, 0.0),
            "seed": _number(ig, "seed", "interferogram", int, 0),
        }
        if inter["noise_sigma"] < 0:
            raise SchemaError("interferogram.noise_sigma: must be non-negative")
    return Scenario(name, rho0, steps, schedule, samples, windings, profile, inter)


# ---------------------------------------------------------------------------
# pipelines


def run_report(s: Scenario, steps: Optional[int] = None, frame: str = "canonical") -> dict:
    """Phase report for a scenario as a JSON-ready dict."""
    path = s.path(steps)
    rep = analyze(s.rho0, path, s.schedule, frame=frame)
    return {"name": s.name, "dim": s.dim, "duration": path.duration, **rep.to_dict()}


def _angle_distance(a, b) -> float:
    if a is None or b is None:
        return 0.0 if a is b else math.inf
    return abs(complex(math.cos(a) - math.cos(b), math.sin(a) - math.sin(b)))


def random_windings(levels: int, trials: int, seed: int, span: int = 3) -> list:
    rng = make_rng(seed)
    return [tuple(int(x) for x in rng.integers(-span, span + 1, size=levels)) for _ in range(trials)]


def gauge_demo(s: Scenario, windings_list, tol: float = 1e-6, steps: Optional[int] = None, invariance_tol: float = 1e-9) -> dict:
    """Compare phases before and after gauge profiles with the given windings."""
    path = s.path(steps)
    spec = decompose_initial(s.rho0)
    base = canonical_frame(spec, path)
    before = report_from_frame(base)
    traj = trajectory(s.rho0, path)
    trials = []
    for n in windings_list:
        n = tuple(int(x) for x in n)
        if len(n) != spec.retained:
            raise ValidationError(f"windings {list(n)} have {len(n)} entries, scenario has {spec.retained} retained levels")
        g = GaugeProfile.linear(n, path.steps)
        after = report_from_frame(apply_gauge_profile(base, g))
        measured = after.fu_chen - before.fu_chen
        predicted = predicted_gauge_shift(spec.retained_weights, n)
        v = build_commuting_gauge(spec, g, path.duration)
        path_res = float(np.max(np.linalg.norm(trajectory(s.rho0, compose_paths(path, v)) - traj, axis=(1, 2))))
        level_dist = [abs(np.exp(1j * a) - np.exp(1j * b)) for a, b in zip(after.phases, before.phases)]
        fc_dist = float(abs(np.exp(1j * after.fu_chen) - np.exp(1j * before.fu_chen)))
        expected_fc = float(abs(np.exp(1j * predicted) - 1.0))
        gamma_dist = _angle_distance(after.gamma, before.gamma)
        vis_dist = abs(after.visibility - before.visibility)
        ok = (
            abs(measured - predicted) <= tol
            and gamma_dist <= invariance_tol
            and vis_dist <= invariance_tol
            and max(level_dist) <= tol
            and (expected_fc <= 10 * tol or fc_dist > tol)
        )
        trials.append({
            "windings": list(n),
            "fu_chen_before": before.fu_chen,
            "fu_chen_after": after.fu_chen,
            "measured_shift": measured,
            "predicted_shift": predicted,
            "shift_error": abs(measured - predicted),
            "weighted_winding": predicted / (2 * math.pi),
            "level_factor_distance": [float(x) for x in level_dist],
            "fu_chen_factor_distance": fc_dist,
            "gamma_before": before.gamma,
            "gamma_after": after.gamma,
            "gamma_distance": gamma_dist,
            "visibility_before": before.visibility,
            "visibility_after": after.visibility,
            "visibility_distance": vis_dist,
            "path_invariance_residual": path_res,
            "verdict": "PASS" if ok else "FAIL",
        })
    passed = sum(t["verdict"] == "PASS" for t in trials)
    return {
        "name": s.name,
        "steps": path.steps,
        "tolerance": tol,
        "weights": [float(x) for x in spec.retained_weights],
        "phases_before": [float(x) for x in before.phases],
        "trials": trials,
        "summary": {
            "trials": len(trials),
            "passed": passed,
            "failed": len(trials) - passed,
            "max_shift_error": max((t["shift_error"] for t in trials), default=0.0),
            "max_gamma_distance": max((t["gamma_distance"] for t in trials), default=0.0),
            "max_fu_chen_factor_distance": max((t["fu_chen_factor_distance"] for t in trials), default=0.0),
        },
    }


def format_demo_table(demo: dict) -> str:
    lines = [f"{'windings':>16} {'measured':>12} {'predicted':>12} {'|e^iΔ-1|':>10} {'Δγ':>9} verdict"]
    for t in demo["trials"]:
        lines.append(
            f"{str(t['windings']):>16} {t['measured_shift']:>12.6f} {t['predicted_shift']:>12.6f} "
            f"{t['fu_chen_factor_distance']:>10.6f} {t['gamma_distance']:>9.1e} {t['verdict']}"
        )
    sm = demo["summary"]
    lines.append(f"{sm['passed']}/{sm['trials']} trials passed")
    return "\n".join(lines)


def emit_interferogram(s: Scenario, out, svg=None, steps: Optional[int] = None) -> dict:
    """Write the interferogram CSV (and optional figure); return the report with the fit appended."""
    report = run_report(s, steps)
    cfg = s.interferogram
    g = sample_interferogram(report["weights"], report["phases"], cfg["samples"], cfg["noise_sigma"], cfg["seed"])
    g.to_csv(out)
    fit = fit_phase_visibility(g)
    if svg is not None:
        from .plotting import plot_interferogram

        plot_interferogram(g, fit, svg, title=s.name)
    report["interferogram"] = {
        **cfg,
        "csv": str(out),
        "fit_gamma": fit.gamma,
        "fit_visibility": fit.visibility,
        "fit_residual": fit.residual,
        "fit_reliable": fit.reliable,
    }
    return report


def dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"
