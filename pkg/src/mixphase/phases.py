"""Phase functionals of a periodic eigenframe.

Per-level geometric phases are kept on the real line. Reducing them mod 2*pi
would hide exactly the winding term that separates the weighted phase sum
from the interferometric phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import GridMismatch, LengthMismatch, NonCyclicPath, NotPeriodicGauge
from .spectral import (
    PERIODIC,
    EigenframePath,
    GaugeProfile,
    SpectralDecomposition,
    _check_step_overlaps,
    apply_gauge_profile,
    chart_gauge,
    decompose_initial,
    eigenframe_along_path,
    periodize,
)
from .state import CYCLIC_TOL, DensityOperator, HamiltonianSchedule, UnitaryPath, cyclicity_check, propagators

NODE_TOL = 1e-12
TWO_PI = 2 * math.pi


def principal(x):
    """Reduce angles to ``(-pi, pi]``."""
    y = math.pi - np.mod(math.pi - np.asarray(x, dtype=float), TWO_PI)
    return float(y) if np.ndim(y) == 0 else y


def winding_distance(x) -> float:
    """Distance from ``x`` to the nearest integer multiple of 2*pi."""
    return float(abs(x - TWO_PI * round(x / TWO_PI)))


def _lengths(a, b, what="weights and phases"):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"{what} differ in length: {a.shape} vs {b.shape}")
    return a, b


def connection_phase(frame: EigenframePath, k: int) -> float:
    """Discrete connection phase ``-sum_i arg <psi_k(t_i)|psi_k(t_{i+1})>``, unwound."""
    if frame.gauge_state != PERIODIC:
        raise NotPeriodicGauge(f"connection phase needs a periodic frame, got {frame.gauge_state!r}")
    f = frame.frames[k]
    ov = np.einsum("ij,ij->i", f[:-1].conj(), f[1:])[None, :]
    _check_step_overlaps(ov)
    return -math.fsum(np.angle(ov[0]))


def connection_phases(frame: EigenframePath) -> np.ndarray:
    return np.array([connection_phase(frame, k) for k in range(frame.levels)])


def fu_chen_phase(weights, phases) -> float:
    """Weighted sum ``sum_k w_k phi_k``, not reduced mod 2*pi."""
    w, p = _lengths(weights, phases)
    return math.fsum(w * p)


def predicted_gauge_shift(weights, windings) -> float:
    """Shift of the weighted sum under windings ``n_k``: ``2 pi sum_k w_k n_k``."""
    w, n = _lengths(weights, windings, "weights and windings")
    return TWO_PI * math.fsum(w * n)


class Interference(NamedTuple):
    gamma: Optional[float]
    visibility: float
    node: bool


def interferometric_phase(weights, phases, node_tol: float = NODE_TOL) -> Interference:
    """``V exp(i gamma) = sum_k w_k exp(i phi_k)``.

    At a visibility node (``V < node_tol``) the phase is undefined and
    ``gamma`` is ``None``.
    """
    w, p = _lengths(weights, phases)
    re = math.fsum(w * np.cos(p))
    im = math.fsum(w * np.sin(p))
    vis = math.hypot(re, im)
    if vis < node_tol:
        return Interference(None, 0.0, True)
    return Interference(float(principal(math.atan2(im, re))), vis, False)


def dynamical_phase(schedule: HamiltonianSchedule, frame: EigenframePath, k: int) -> float:
    """``-int <psi_k|H|psi_k> dt`` by the trapezoid rule.

    Grid intervals that straddle segment boundaries are split there; the
    intermediate states come from exact propagation, so the rule stays exact
    for piecewise-constant generators.
    """
    if frame.steps + 1 != frame.frames.shape[1] or not math.isclose(frame.duration, schedule.duration, rel_tol=1e-12):
        raise GridMismatch(f"frame spans {frame.duration} but schedule spans {schedule.duration}")
    if frame.frames.shape[2] != schedule.dim:
        raise GridMismatch("frame and schedule dimensions differ")
    psi = frame.frames[k]
    t = frame.times
    bounds = schedule.boundaries
    h = t[1] - t[0]
    eps = 1e-9 * h
    gens = [s.generator for s in schedule.segments]

    def expect(j, v):
        return float(np.real(np.vdot(v, gens[j] @ v)))

    # <psi(t_i)|H_j|psi(t_i)> for every segment j and grid point i
    table = np.real(np.einsum("ni,jik,nk->jn", psi.conj(), np.array(gens), psi))
    mids = 0.5 * (t[:-1] + t[1:])
    seg = np.clip(np.searchsorted(bounds, mids, side="right") - 1, 0, len(gens) - 1)
    split = np.zeros(len(mids), dtype=bool)
    for b in bounds[1:-1]:
        i = int(np.searchsorted(t, b)) - 1
        if 0 <= i < len(mids) and t[i] + eps < b < t[i + 1] - eps:
            split[i] = True

    idx = np.arange(len(mids))
    plain = 0.5 * h * (table[seg, idx] + table[seg, idx + 1])
    terms = list(plain[~split])
    for i in np.flatnonzero(split):
        a = t[i]
        v = psi[i]
        j = schedule.segment_index(a + eps)
        while True:
            end = min(bounds[j + 1], t[i + 1])
            w = propagators(gens[j], [end - a])[0] @ v
            # <H_j> is conserved inside segment j
            terms.append(0.5 * (end - a) * (expect(j, v) + expect(j, w)))
            if end >= t[i + 1] - eps:
                break
            a, v, j = end, w, j + 1
    return -math.fsum(terms)


def total_phase(path: UnitaryPath, spec: SpectralDecomposition, k: int, tol: float = CYCLIC_TOL) -> float:
    """``arg <psi_k(0)|U(tau)|psi_k(0)>`` in ``(-pi, pi]``."""
    cyc = cyclicity_check(spec.rho, path, tol)
    if not cyc.cyclic:
        raise NonCyclicPath(f"evolution is not cyclic: residual {cyc.residual:.3e}", cyc.residual)
    v = spec.vectors[:, k]
    return float(principal(np.angle(np.vdot(v, path.final @ v))))


@dataclass(frozen=True)
class PhaseReport:
    weights: np.ndarray
    phases: np.ndarray
    fu_chen: float
    gamma: Optional[float]
    visibility: float
    node: bool
    steps: int
    gauge: dict = field(default_factory=dict)
    dynamical: Optional[np.ndarray] = None
    total: Optional[np.ndarray] = None
    closure_phases: Optional[np.ndarray] = None
    cyclicity_residual: Optional[float] = None

    @property
    def phases_mod(self) -> np.ndarray:
        return principal(self.phases)

    @property
    def fu_chen_mod(self) -> float:
        return float(principal(self.fu_chen))

    def decomposition_residuals(self) -> Optional[np.ndarray]:
        """Distance of ``total - geometric - dynamical`` from the nearest multiple of 2*pi."""
        if self.dynamical is None or self.total is None:
            return None
        return np.array([winding_distance(t - p - d) for t, p, d in zip(self.total, self.phases, self.dynamical)])

    def to_dict(self) -> dict:
        out = {
            "weights": [float(x) for x in self.weights],
            "phases": [float(x) for x in self.phases],
            "phases_mod_2pi": [float(x) for x in self.phases_mod],
            "fu_chen": float(self.fu_chen),
            "fu_chen_mod_2pi": self.fu_chen_mod,
            "gamma": self.gamma,
            "visibility": float(self.visibility),
            "visibility_node": bool(self.node),
            "steps": int(self.steps),
            "gauge": dict(self.gauge),
        }
        if self.closure_phases is not None:
            out["closure_phases"] = [float(x) for x in self.closure_phases]
        if self.cyclicity_residual is not None:
            out["cyclicity_residual"] = float(self.cyclicity_residual)
        if self.dynamical is not None:
            out["dynamical"] = [float(x) for x in self.dynamical]
            out["total"] = [float(x) for x in self.total]
            out["decomposition_residual"] = [float(x) for x in self.decomposition_residuals()]
        return out


def report_from_frame(frame: EigenframePath, **extra) -> PhaseReport:
    phases = connection_phases(frame)
    inter = interferometric_phase(frame.weights, phases)
    return PhaseReport(
        weights=np.array(frame.weights),
        phases=phases,
        fu_chen=fu_chen_phase(frame.weights, phases),
        gamma=inter.gamma,
        visibility=inter.visibility,
        node=inter.node,
        steps=frame.steps,
        gauge=dict(frame.gauge),
        **extra,
    )


def analyze(
    rho0: DensityOperator,
    path: UnitaryPath,
    schedule: Optional[HamiltonianSchedule] = None,
    *,
    frame: str = "canonical",
    reference=0,
    profile: Optional[GaugeProfile] = None,
    tol: float = CYCLIC_TOL,
) -> PhaseReport:
    """Full pipeline from an initial state and a path to a :class:`PhaseReport`.

    ``frame`` selects the periodic gauge: ``"canonical"`` (parallel transport
    with the closure phase spread linearly) or ``"chart"`` (phase fixed by a
    reference vector). An optional ``profile`` is applied on top.
    """
    spec = decompose_initial(rho0)
    cyc = cyclicity_check(rho0, path, tol)
    transported = eigenframe_along_path(spec, path, tol)
    periodic, beta = periodize(transported)
    if frame == "chart":
        periodic = chart_gauge(transported, reference)
    elif frame != "canonical":
        raise ValueError(f"unknown frame {frame!r}")
    if profile is not None:
        periodic = apply_gauge_profile(periodic, profile)
    extra = {"closure_phases": beta, "cyclicity_residual": cyc.residual}
    if schedule is not None:
        extra["dynamical"] = np.array([dynamical_phase(schedule, periodic, k) for k in range(spec.retained)])
        extra["total"] = np.array([total_phase(path, spec, k, tol) for k in range(spec.retained)])
    return report_from_frame(periodic, **extra)
