"""Density operators, sampled unitary paths and piecewise-constant Hamiltonians.

Units follow hbar = 1. All containers are frozen dataclasses holding
read-only numpy arrays, so instances can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    GridMismatch,
    IndexOutOfRange,
    NotHermitian,
    NotPositive,
    NotUnitary,
    TraceNotOne,
    ValidationError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-12
UNITARY_TOL = 1e-10
CYCLIC_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _square(matrix, what="matrix") -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionMismatch(f"{what} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} has non-finite entries")
    return m


def hermitian_residual(m: np.ndarray) -> float:
    """Relative Frobenius distance of ``m`` from its adjoint."""
    return float(np.linalg.norm(m - m.conj().T) / max(1.0, np.linalg.norm(m)))


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


# ---------------------------------------------------------------------------
# density operators


@dataclass(frozen=True)
class DensityOperator:
    """A validated density matrix. Build instances with :func:`make_density`."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.matrix)[::-1]

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def make_density(matrix, *, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=PSD_TOL) -> DensityOperator:
    """Validate ``matrix`` as a density operator.

    The input is checked for Hermiticity and then replaced by its Hermitian
    part, so text round trips that perturb entries at the 1e-16 level are
    accepted.

    Raises
    ------
    NotHermitian, TraceNotOne, NotPositive
        With the measured residual in the message.
    DimensionMismatch
        If ``matrix`` is not square.
    """
    m = _square(matrix, "density matrix")
    res = hermitian_residual(m)
    if res > herm_tol:
        raise NotHermitian(f"density matrix is not Hermitian: relative residual {res:.3e} > {herm_tol:g}")
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m)
    if abs(tr - 1.0) > trace_tol:
        raise TraceNotOne(f"density matrix trace is {tr.real:.15g}, |tr - 1| = {abs(tr - 1):.3e} > {trace_tol:g}")
    lo = float(np.linalg.eigvalsh(m)[0])
    if lo < -psd_tol:
        raise NotPositive(f"density matrix has eigenvalue {lo:.3e} < -{psd_tol:g}")
    return DensityOperator(_frozen(m))


def pure_density(psi) -> DensityOperator:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return make_density(np.outer(psi, psi.conj()))


# ---------------------------------------------------------------------------
# unitary paths


@dataclass(frozen=True)
class UnitaryPath:
    """Samples ``U(t_i)`` on the uniform grid ``t_i = i * duration / N``.

    ``samples`` has shape ``(N + 1, d, d)``. The first sample is replaced by
    the exact identity after checking it is close to one.
    """

    duration: float
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise DimensionMismatch(f"path samples must have shape (N+1, d, d), got {s.shape}")
        if s.shape[0] < 3:
            raise GridMismatch(f"a path needs N >= 2 steps, got N = {s.shape[0] - 1}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValidationError(f"path duration must be positive, got {self.duration}")
        d = s.shape[1]
        eye = np.eye(d)
        gram = np.einsum("nji,njk->nik", s.conj(), s)
        worst = float(np.max(np.linalg.norm(gram - eye, axis=(1, 2))))
        if worst > UNITARY_TOL:
            raise NotUnitary(f"path sample violates unitarity by {worst:.3e}")
        if np.linalg.norm(s[0] - eye) > UNITARY_TOL:
            raise ValidationError("path must start at the identity")
        s = s.copy()
        s[0] = eye
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "samples", _frozen(s))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def steps(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.steps + 1)

    @property
    def final(self) -> np.ndarray:
        return self.samples[-1]

    def same_grid(self, other: "UnitaryPath") -> bool:
        return self.steps == other.steps and math.isclose(self.duration, other.duration, rel_tol=1e-12)


def identity_path(dim: int, steps: int, duration: float = 1.0) -> UnitaryPath:
    return UnitaryPath(duration, np.broadcast_to(np.eye(dim, dtype=complex), (steps + 1, dim, dim)))


# ---------------------------------------------------------------------------
# Hamiltonian schedules


@dataclass(frozen=True)
class Segment:
    generator: np.ndarray
    dt: float


@dataclass(frozen=True)
class HamiltonianSchedule:
    """Ordered piecewise-constant generators, each applied for ``dt``."""

    segments: tuple

    def __post_init__(self):
        segs = []
        dim = None
        for j, seg in enumerate(self.segments):
            h, dt = (seg.generator, seg.dt) if isinstance(seg, Segment) else seg
            h = _square(h, f"segment {j} generator")
            if dim is None:
                dim = h.shape[0]
            elif h.shape[0] != dim:
                raise DimensionMismatch(f"segment {j} generator is {h.shape[0]}x{h.shape[0]}, expected {dim}x{dim}")
            res = hermitian_residual(h)
            if res > HERMITIAN_TOL:
                raise NotHermitian(f"segment {j} generator is not Hermitian: relative residual {res:.3e}")
            dt = float(dt)
            if not (dt > 0 and math.isfinite(dt)):
                raise ValidationError(f"segment {j} duration must be positive, got {dt}")
            segs.append(Segment(_frozen(0.5 * (h + h.conj().T)), dt))
        if not segs:
            raise ValidationError("schedule has no segments")
        object.__setattr__(self, "segments", tuple(segs))

    @property
    def dim(self) -> int:
        return self.segments[0].generator.shape[0]

    @property
    def duration(self) -> float:
        return math.fsum(s.dt for s in self.segments)

    @property
    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the total duration."""
        b = np.concatenate([[0.0], np.cumsum([s.dt for s in self.segments])])
        b[-1] = self.duration
        return b

    def segment_index(self, t: float) -> int:
        """Index of the segment active on the half-open interval containing ``t``."""
        j = int(np.searchsorted(self.boundaries, t, side="right")) - 1
        return min(max(j, 0), len(self.segments) - 1)


def propagators(h: np.ndarray, times) -> np.ndarray:
    """``exp(-i h s)`` for every ``s`` in ``times`` via eigendecomposition of ``h``."""
    e, v = np.linalg.eigh(h)
    s = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(s, e))
    return np.einsum("ij,nj,kj->nik", v, phases, v.conj())


def _aligned_steps(boundaries: np.ndarray, duration: float, base: int, max_refine: int = 64):
    for m in range(1, max_refine + 1):
        pos = boundaries * (base * m) / duration
        if np.all(np.abs(pos - np.round(pos)) <= 1e-9 * max(1.0, base * m)):
            return base * m
    return None


def path_from_hamiltonian(schedule: HamiltonianSchedule, steps_per_unit=None, *, steps=None) -> UnitaryPath:
    """Sample the evolution generated by ``schedule`` on a uniform grid.

    Give either ``steps_per_unit`` (grid density) or ``steps`` (total N). The
    grid is refined by the smallest integer factor up to 64 that puts every
    segment boundary on a grid point; if none exists the unrefined grid is
    kept and samples are still exact at each grid time.
    """
    if (steps_per_unit is None) == (steps is None):
        raise ValidationError("give exactly one of steps_per_unit or steps")
    tau = schedule.duration
    if steps is None:
        if steps_per_unit <= 0:
            raise ValidationError("steps_per_unit must be positive")
        base = max(2, math.ceil(tau * steps_per_unit - 1e-9))
    else:
        base = int(steps)
        if base < 2:
            raise ValidationError(f"need at least 2 steps, got {steps}")
    bounds = schedule.boundaries
    n = _aligned_steps(bounds, tau, base) or base
    times = np.linspace(0.0, tau, n + 1)
    d = schedule.dim
    out = np.empty((n + 1, d, d), dtype=complex)
    start = np.eye(d, dtype=complex)
    for j, seg in enumerate(schedule.segments):
        t0, t1 = bounds[j], bounds[j + 1]
        last = j == len(schedule.segments) - 1
        mask = (times >= t0) if last else (times >= t0) & (times < t1)
        if mask.any():
            out[mask] = propagators(seg.generator, times[mask] - t0) @ start
        start = propagators(seg.generator, [seg.dt])[0] @ start
    out[0] = np.eye(d)
    return UnitaryPath(tau, out)


def close_schedule(schedule: HamiltonianSchedule, basis, phases, dt: float = 1.0) -> HamiltonianSchedule:
    """Append a segment so the total evolution ends at ``basis diag(exp(i phases)) basis^dagger``.

    Useful for building cyclic evolutions: with ``basis`` the eigenvectors of
    the initial state the closed schedule commutes with it at the end.
    """
    basis = np.asarray(basis, dtype=complex)
    w = path_from_hamiltonian(schedule, steps=2).final
    target = basis @ np.diag(np.exp(1j * np.asarray(phases, dtype=float))) @ basis.conj().T
    t, z = scipy.linalg.schur(target @ w.conj().T, output="complex")
    angles = np.angle(np.diag(t))
    h = -(z * angles) @ z.conj().T / dt
    return HamiltonianSchedule(tuple(schedule.segments) + ((0.5 * (h + h.conj().T), dt),))


# ---------------------------------------------------------------------------
# operations on states along paths


def _check_dims(rho: DensityOperator, path: UnitaryPath):
    if rho.dim != path.dim:
        raise DimensionMismatch(f"state is {rho.dim}-dimensional but path is {path.dim}-dimensional")


def evolve(rho0: DensityOperator, path: UnitaryPath, i: int) -> DensityOperator:
    """Return ``U(t_i) rho0 U(t_i)^dagger``."""
    _check_dims(rho0, path)
    if not 0 <= i <= path.steps:
        raise IndexOutOfRange(f"grid index {i} outside [0, {path.steps}]")
    u = path.samples[i]
    return make_density(u @ rho0.matrix @ u.conj().T)


def trajectory(rho0: DensityOperator, path: UnitaryPath) -> np.ndarray:
    """All evolved matrices, shape ``(N + 1, d, d)``; unvalidated counterpart of :func:`evolve`."""
    _check_dims(rho0, path)
    u = path.samples
    return u @ rho0.matrix @ np.conj(np.swapaxes(u, 1, 2))


class Cyclicity(NamedTuple):
    cyclic: bool
    residual: float


def cyclicity_check(rho0: DensityOperator, path: UnitaryPath, tol: float = CYCLIC_TOL) -> Cyclicity:
    """Test ``||[rho0, U(tau)]||_F <= tol``; the residual is always reported."""
    _check_dims(rho0, path)
    u = path.final
    res = float(np.linalg.norm(rho0.matrix @ u - u @ rho0.matrix))
    return Cyclicity(res <= tol, res)


def compose_paths(a: UnitaryPath, b: UnitaryPath) -> UnitaryPath:
    """Pointwise product ``a(t_i) b(t_i)``."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cannot compose {a.dim}- and {b.dim}-dimensional paths")
    if not a.same_grid(b):
        raise GridMismatch(
            f"grids differ: (N={a.steps}, tau={a.duration}) vs (N={b.steps}, tau={b.duration})"
        )
    return UnitaryPath(a.duration, a.samples @ b.samples)


def as_schedule(segments: Sequence) -> HamiltonianSchedule:
    return HamiltonianSchedule(tuple(segments))
