"""Two-arm interference of an incoherent mixture and first-harmonic fitting.

Intensities are normalized so that their average over the phase shifter
setting ``chi`` is one: ``I(chi) = 1 + V cos(chi - gamma)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateDesign, LengthMismatch, PhaseIOError, TooFewSamples
from .phases import interferometric_phase

TWO_PI = 2 * math.pi


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; streams do not depend on call order elsewhere."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class Interferogram:
    chi: np.ndarray
    intensity: np.ndarray
    noise_sigma: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        chi = np.asarray(self.chi, dtype=float)
        inten = np.asarray(self.intensity, dtype=float)
        if chi.shape != inten.shape or chi.ndim != 1:
            raise LengthMismatch("chi and intensity must be 1-d arrays of equal length")
        if chi.size and (np.any(np.diff(chi) <= 0) or chi[0] < 0 or chi[-1] >= TWO_PI):
            raise DegenerateDesign("chi must be strictly increasing in [0, 2 pi)")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "intensity", inten)

    def __len__(self):
        return self.chi.size

    def to_csv(self, path) -> None:
        """Write ``chi,intensity`` rows with 17 significant digits."""
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["chi", "intensity"])
                for c, i in zip(self.chi, self.intensity):
                    w.writerow([f"{c:.17g}", f"{i:.17g}"])
        except OSError as exc:
            raise PhaseIOError(f"cannot write interferogram to {path}: {exc.strerror or exc}") from exc

    @classmethod
    def from_csv(cls, path) -> "Interferogram":
        try:
            with open(path, newline="") as fh:
                rows = list(csv.DictReader(fh))
        except OSError as exc:
            raise PhaseIOError(f"cannot read interferogram {path}: {exc.strerror or exc}") from exc
        return cls(np.array([float(r["chi"]) for r in rows]), np.array([float(r["intensity"]) for r in rows]))


def intensity_at(weights, phases, chi):
    """Mean of the per-level two-beam intensities ``|exp(i chi) + exp(i phi_k)|^2 / 2``."""
    w = np.asarray(weights, dtype=float)
    p = np.asarray(phases, dtype=float)
    if w.shape != p.shape:
        raise LengthMismatch(f"weights and phases differ in length: {w.shape} vs {p.shape}")
    chi = np.asarray(chi, dtype=float)
    beams = np.abs(np.exp(1j * chi)[..., None] + np.exp(1j * p)) ** 2
    out = 0.5 * beams @ w
    return float(out) if out.ndim == 0 else out


def sample_interferogram(weights, phases, samples: int, noise_sigma: float = 0.0, seed: int = 0) -> Interferogram:
    """Intensities at ``chi_j = 2 pi j / M`` plus seeded Gaussian noise."""
    if samples < 3:
        raise TooFewSamples(f"need at least 3 phase settings, got {samples}")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    chi = TWO_PI * np.arange(samples) / samples
    inten = intensity_at(weights, phases, chi)
    if noise_sigma > 0:
        inten = inten + make_rng(seed).normal(0.0, noise_sigma, samples)
    return Interferogram(chi, inten, float(noise_sigma), int(seed))


class FringeFit(NamedTuple):
    gamma: Optional[float]
    visibility: float
    residual: float
    reliable: bool


def _is_uniform(chi: np.ndarray) -> bool:
    m = chi.size
    return bool(np.allclose(chi, chi[0] + TWO_PI * np.arange(m) / m, rtol=0, atol=1e-12))


def fit_phase_visibility(g: Interferogram) -> FringeFit:
    """Recover ``(gamma, V)`` from an interferogram.

    Uniform full-period designs use the first-harmonic projection; other
    designs fall back to linear least squares on ``1, cos chi, sin chi``.
    ``gamma`` is ``None`` when the fitted visibility is below the noise floor
    ``3 sigma / sqrt(M)`` (or 1e-12 for noiseless data).
    """
    chi, y = g.chi, g.intensity
    m = chi.size
    if m < 3:
        raise TooFewSamples(f"need at least 3 samples, got {m}")
    if np.ptp(chi) == 0:
        raise DegenerateDesign("all chi values are identical")
    if _is_uniform(chi):
        a = 2.0 / m * math.fsum(y * np.cos(chi))
        b = 2.0 / m * math.fsum(y * np.sin(chi))
    else:
        design = np.column_stack([np.ones(m), np.cos(chi), np.sin(chi)])
        if np.linalg.matrix_rank(design) < 3:
            raise DegenerateDesign("phase settings do not determine a first harmonic")
        (_, a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    vis = math.hypot(a, b)
    floor = max(3.0 * g.noise_sigma / math.sqrt(m), 1e-12)
    gamma = math.atan2(b, a)
    if gamma <= -math.pi:
        gamma += TWO_PI
    model = 1.0 + vis * np.cos(chi - gamma)
    resid = float(np.sqrt(np.mean((y - model) ** 2)))
    reliable = vis >= floor
    return FringeFit(gamma if reliable else None, vis, resid, reliable)


def closed_form_intensity(weights, phases, chi):
    """``1 + V cos(chi - gamma)``; zero-visibility mixtures give a flat profile."""
    inter = interferometric_phase(weights, phases)
    if inter.node:
        return np.ones_like(np.asarray(chi, dtype=float))
    return 1.0 + inter.visibility * np.cos(np.asarray(chi, dtype=float) - inter.gamma)


def interferogram_with_dynamics(weights, totals, dynamical, samples: int, noise_sigma=0.0, seed=0, efficiency=1.0):
    """Interferogram when dynamical phases are only partly removed.

    The phase arm carries ``theta_k - efficiency * delta_k``; with
    ``efficiency=1`` this is the ideal protocol up to 2*pi.
    """
    p = np.asarray(totals, dtype=float) - efficiency * np.asarray(dynamical, dtype=float)
    return sample_interferogram(weights, p, samples, noise_sigma, seed)
