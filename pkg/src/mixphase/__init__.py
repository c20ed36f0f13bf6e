"""Cyclic mixed-state geometric phases and their gauge behaviour."""

__version__ = "0.1.0"

from .errors import DegenerateSpectrum, NonCyclicPath, PhaseError, ValidationError  # noqa: E402
from .interferometry import Interferogram, fit_phase_visibility, intensity_at, sample_interferogram  # noqa: E402
from .phases import (  # noqa: E402
    PhaseReport,
    analyze,
    connection_phase,
    dynamical_phase,
    fu_chen_phase,
    interferometric_phase,
    predicted_gauge_shift,
    total_phase,
)
from .spectral import (  # noqa: E402
    GaugeProfile,
    apply_gauge_profile,
    build_commuting_gauge,
    canonical_frame,
    chart_gauge,
    decompose_initial,
    eigenframe_along_path,
    periodize,
)
from .state import (  # noqa: E402
    HamiltonianSchedule,
    UnitaryPath,
    compose_paths,
    cyclicity_check,
    evolve,
    make_density,
    path_from_hamiltonian,
)
