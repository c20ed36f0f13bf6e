"""Eigenframes of the evolving state and the phase conventions applied to them.

A frame is stored as an array of shape ``(K, N + 1, d)``: level ``k``,
grid index ``i``, vector component. Levels are those of the initial state
with weight above ``weight_floor``, in descending weight order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ChartSingular,
    ClosureUndefined,
    ClosureViolation,
    DegenerateSpectrum,
    LengthMismatch,
    NonCyclicPath,
    NotPeriodicGauge,
    ProfileGridMismatch,
    StepOverlapVanishes,
)
from .state import CYCLIC_TOL, DensityOperator, UnitaryPath, cyclicity_check

WEIGHT_FLOOR = 1e-12
GAP_TOL = 1e-8
MIN_STEP_OVERLAP = 0.1
MIN_CLOSURE_OVERLAP = 1e-6

RAW = "raw"
TRANSPORTED = "transported"
PERIODIC = "periodic"


def _readonly(a, dtype=complex):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real and positive."""
    idx = np.argmax(np.abs(vectors) > np.abs(vectors).max(axis=0) * (1 - 1e-9), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigen-decomposition of the initial state.

    ``weights`` and ``vectors`` (columns) cover the full space in descending
    weight order; the first ``retained`` levels take part in phase
    computations.
    """

    rho: DensityOperator
    weights: np.ndarray
    vectors: np.ndarray
    retained: int
    min_gap: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def retained_weights(self) -> np.ndarray:
        return self.weights[: self.retained]

    @property
    def retained_vectors(self) -> np.ndarray:
        return self.vectors[:, : self.retained]


def decompose_initial(rho0: DensityOperator, weight_floor: float = WEIGHT_FLOOR, gap_tol: float = GAP_TOL) -> SpectralDecomposition:
    """Sorted eigenpairs of ``rho0``, dropping levels with weight ``<= weight_floor``.

    Raises
    ------
    DegenerateSpectrum
        If two retained weights differ by less than ``gap_tol``.
    """
    w, v = np.linalg.eigh(rho0.matrix)
    order = np.argsort(-w, kind="stable")
    w, v = w[order], _fix_phase(v[:, order])
    keep = int(np.count_nonzero(w > weight_floor))
    gaps = -np.diff(w[:keep])
    min_gap = float(gaps.min()) if gaps.size else math.inf
    if min_gap < gap_tol:
        j = int(np.argmin(gaps))
        raise DegenerateSpectrum(
            f"weights {w[j]:.15g} and {w[j + 1]:.15g} are closer than {gap_tol:g}; "
            "the eigenbasis is not unique",
            gap=min_gap,
        )
    return SpectralDecomposition(rho0, _readonly(w, float), _readonly(v), keep, min_gap)


@dataclass(frozen=True)
class EigenframePath:
    duration: float
    weights: np.ndarray
    frames: np.ndarray
    gauge_state: str
    gauge: dict = field(default_factory=dict)

    @property
    def levels(self) -> int:
        return self.frames.shape[0]

    @property
    def steps(self) -> int:
        return self.frames.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.steps + 1)

    def step_overlaps(self) -> np.ndarray:
        """``<psi_k(t_i)|psi_k(t_{i+1})>``, shape ``(K, N)``."""
        f = self.frames
        return np.einsum("kij,kij->ki", f[:, :-1].conj(), f[:, 1:])

    def projectors(self) -> np.ndarray:
        f = self.frames
        return np.einsum("kni,knj->knij", f, f.conj())

    def closure_residual(self) -> np.ndarray:
        return np.linalg.norm(self.frames[:, -1] - self.frames[:, 0], axis=1)

    def _replace(self, frames, gauge_state, **gauge):
        return EigenframePath(self.duration, self.weights, _readonly(frames), gauge_state, {**gauge})


def _check_step_overlaps(ov: np.ndarray):
    mag = np.abs(ov)
    if mag.size and mag.min() < MIN_STEP_OVERLAP:
        k, i = np.unravel_index(np.argmin(mag), mag.shape)
        raise StepOverlapVanishes(
            f"|<psi_{k}(t_{i})|psi_{k}(t_{i + 1})>| = {mag[k, i]:.3e} < {MIN_STEP_OVERLAP}; refine the time grid"
        )


def raw_frame(spec: SpectralDecomposition, path: UnitaryPath) -> EigenframePath:
    """``U(t_i) psi_k(0)`` without any rephasing."""
    frames = np.einsum("nij,jk->kni", path.samples, spec.retained_vectors)
    return EigenframePath(path.duration, spec.retained_weights, _readonly(frames), RAW)


def eigenframe_along_path(spec: SpectralDecomposition, path: UnitaryPath, tol: float = CYCLIC_TOL) -> EigenframePath:
    """Parallel-transported frame: every step overlap real and positive.

    Raises
    ------
    NonCyclicPath
        If ``[rho0, U(tau)]`` exceeds ``tol``.
    StepOverlapVanishes
        If some step overlap has modulus below 0.1.
    """
    cyc = cyclicity_check(spec.rho, path, tol)
    if not cyc.cyclic:
        raise NonCyclicPath(f"evolution is not cyclic: ||[rho0, U(tau)]|| = {cyc.residual:.3e} > {tol:g}", cyc.residual)
    raw = raw_frame(spec, path)
    ov = raw.step_overlaps()
    _check_step_overlaps(ov)
    shift = np.concatenate([np.zeros((raw.levels, 1)), np.cumsum(np.angle(ov), axis=1)], axis=1)
    frames = raw.frames * np.exp(-1j * shift)[:, :, None]
    return raw._replace(frames, TRANSPORTED, kind="transported")


def periodize(frame: EigenframePath):
    """Spread each closure phase linearly over the period.

    Returns the periodic frame and the closure phases ``beta_k`` in
    ``(-pi, pi]``. With this gauge the discrete connection phase of level
    ``k`` equals ``beta_k``.
    """
    if frame.gauge_state != TRANSPORTED:
        raise NotPeriodicGauge(f"periodize needs a transported frame, got {frame.gauge_state!r}")
    f = frame.frames
    closing = np.einsum("kj,kj->k", f[:, 0].conj(), f[:, -1])
    mag = np.abs(closing)
    if mag.size and mag.min() < MIN_CLOSURE_OVERLAP:
        k = int(np.argmin(mag))
        raise ClosureUndefined(f"level {k} does not return to its initial ray: |overlap| = {mag[k]:.3e}")
    beta = np.angle(closing)
    # np.angle maps the negative real axis to +pi; keep (-pi, pi]
    beta = np.where(beta <= -math.pi, beta + 2 * math.pi, beta)
    x = np.linspace(0.0, 1.0, frame.steps + 1)
    frames = f * np.exp(-1j * np.multiply.outer(beta, x))[:, :, None]
    return frame._replace(frames, PERIODIC, kind="canonical"), _readonly(beta, float)


def canonical_frame(spec: SpectralDecomposition, path: UnitaryPath, tol: float = CYCLIC_TOL) -> EigenframePath:
    return periodize(eigenframe_along_path(spec, path, tol))[0]


def chart_gauge(frame: EigenframePath, reference=0, min_overlap: float = MIN_CLOSURE_OVERLAP) -> EigenframePath:
    """Fix phases so ``<r|psi_k(t)>`` is real and positive at every grid point.

    ``reference`` is a basis index or a vector. For a qubit with
    ``reference=0`` this is the usual Bloch-sphere parametrization
    ``cos(theta/2)|0> + exp(i phi) sin(theta/2)|1>``, regular away from the
    south pole. The result is periodic whenever the rays close.

    Raises
    ------
    ChartSingular
        If some frame vector is (nearly) orthogonal to the reference.
    """
    d = frame.frames.shape[2]
    if isinstance(reference, (int, np.integer)):
        r = np.zeros(d, dtype=complex)
        r[reference] = 1.0
    else:
        r = np.asarray(reference, dtype=complex)
        if r.shape != (d,):
            raise LengthMismatch(f"reference vector must have length {d}")
        r = r / np.linalg.norm(r)
    c = np.einsum("j,knj->kn", r.conj(), frame.frames)
    mag = np.abs(c)
    if mag.min() < min_overlap:
        k, i = np.unravel_index(np.argmin(mag), mag.shape)
        raise ChartSingular(f"level {k} is orthogonal to the chart reference at t_{i} (|<r|psi>| = {mag[k, i]:.3e})")
    frames = frame.frames * (mag / c)[:, :, None]
    ref = int(reference) if isinstance(reference, (int, np.integer)) else "vector"
    return frame._replace(frames, PERIODIC, kind="chart", reference=ref)


@dataclass(frozen=True)
class GaugeProfile:
    """Per-level phase functions ``alpha_k(t_i)`` closing on ``2 pi n_k``.

    ``alphas`` has shape ``(K, N + 1)``.
    """

    windings: tuple
    alphas: np.ndarray

    def __post_init__(self):
        n = tuple(int(x) for x in self.windings)
        a = np.array(self.alphas, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != len(n):
            raise ProfileGridMismatch(f"alphas must have shape ({len(n)}, N+1), got {a.shape}")
        gap = np.abs(a[:, -1] - a[:, 0] - 2 * math.pi * np.array(n))
        if gap.size and gap.max() > 1e-12:
            raise ClosureViolation(f"gauge profile closure off by {gap.max():.3e} rad")
        a.setflags(write=False)
        object.__setattr__(self, "windings", n)
        object.__setattr__(self, "alphas", a)

    @property
    def steps(self) -> int:
        return self.alphas.shape[1] - 1

    @classmethod
    def from_shape(cls, windings, steps: int, shape=None, offsets=None) -> "GaugeProfile":
        """``alpha_k(t) = offset_k + 2 pi n_k s(t / tau)`` with ``s(0) = 0`` and ``s(1) = 1``.

        ``shape`` is a vectorized callable on ``[0, 1]`` or a sequence of them,
        one per level; the default is linear.
        """
        n = np.array([int(x) for x in windings])
        x = np.linspace(0.0, 1.0, steps + 1)
        shapes = shape if isinstance(shape, (list, tuple)) else [shape] * len(n)
        rows = []
        for nk, s in zip(n, shapes):
            sx = x.copy() if s is None else np.asarray(s(x), dtype=float)
            sx[0], sx[-1] = 0.0, 1.0
            rows.append(2 * math.pi * nk * sx)
        alphas = np.array(rows).reshape(len(n), steps + 1)
        if offsets is not None:
            alphas = alphas + np.asarray(offsets, dtype=float)[:, None]
        return cls(tuple(n), alphas)

    @classmethod
    def linear(cls, windings, steps: int) -> "GaugeProfile":
        return cls.from_shape(windings, steps)

    @classmethod
    def trivial(cls, levels: int, steps: int) -> "GaugeProfile":
        return cls((0,) * levels, np.zeros((levels, steps + 1)))


def _check_profile(levels, steps, g: GaugeProfile):
    if len(g.windings) != levels or g.steps != steps:
        raise ProfileGridMismatch(
            f"profile covers {len(g.windings)} levels on N={g.steps}; expected {levels} levels on N={steps}"
        )


def apply_gauge_profile(frame: EigenframePath, g: GaugeProfile) -> EigenframePath:
    """``psi_k(t) -> exp(-i alpha_k(t)) psi_k(t)``; periodicity is preserved."""
    if frame.gauge_state != PERIODIC:
        raise NotPeriodicGauge(f"gauge profiles act on periodic frames, got {frame.gauge_state!r}")
    _check_profile(frame.levels, frame.steps, g)
    frames = frame.frames * np.exp(-1j * g.alphas)[:, :, None]
    return frame._replace(frames, PERIODIC, **frame.gauge, windings=list(g.windings))


def build_commuting_gauge(spec: SpectralDecomposition, g: GaugeProfile, duration: float) -> UnitaryPath:
    """``V(t) = sum_k exp(-i alpha_k(t)) |psi_k(0)><psi_k(0)|``, identity on dropped levels.

    Profiles are anchored at ``alpha_k(0) = 0`` so that ``V(0)`` is the
    identity; a constant offset only rephases ``psi_k(0)`` and leaves every
    connection phase unchanged.
    """
    _check_profile(spec.retained, g.steps, g)
    v = spec.vectors
    phases = np.ones((g.steps + 1, spec.dim), dtype=complex)
    phases[:, : spec.retained] = np.exp(-1j * (g.alphas - g.alphas[:, :1]).T)
    samples = np.einsum("ij,nj,kj->nik", v, phases, v.conj())
    return UnitaryPath(duration, samples)
