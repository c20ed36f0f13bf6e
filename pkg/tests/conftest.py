import math

import numpy as np
import pytest

from mixphase.interferometry import make_rng
from mixphase.state import HamiltonianSchedule, close_schedule, make_density, path_from_hamiltonian

SZ = np.diag([1.0, -1.0]).astype(complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])


def bloch_vector(theta, phi=0.0):
    return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])


def tilted_qubit(theta, weights=(0.75, 0.25)):
    """Mixture of the spin state at polar angle ``theta`` and its antipode."""
    up = bloch_vector(theta)
    down = bloch_vector(math.pi - theta, math.pi)
    m = weights[0] * np.outer(up, up.conj()) + weights[1] * np.outer(down, down.conj())
    return make_density(m)


def precession(omega=1.0):
    return HamiltonianSchedule(((0.5 * omega * SZ, 2 * math.pi / omega),))


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / (2 * math.sqrt(d))


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_weights(rng, d, min_gap=0.05):
    while True:
        w = np.sort(rng.dirichlet(np.ones(d)))[::-1]
        if np.all(-np.diff(w) > min_gap):
            return w


def random_cyclic_case(seed, dim=None):
    """Random non-degenerate state under a random cyclic piecewise-constant schedule.

    Generators have unit operator norm; a final segment closes the evolution
    onto the state's eigenbasis with phases jittered by up to 1 rad around
    the diagonal of the open evolution, which keeps the closing rotation small.
    """
    rng = make_rng(seed)
    d = int(rng.integers(2, 5)) if dim is None else dim
    w = random_weights(rng, d)
    basis = random_unitary(rng, d)
    rho = make_density(basis @ np.diag(w) @ basis.conj().T)
    segs = []
    for _ in range(int(rng.integers(1, 4))):
        h = random_hermitian(rng, d)
        segs.append((h / np.linalg.norm(h, 2), float(rng.uniform(0.3, 1.0))))
    open_part = HamiltonianSchedule(tuple(segs))
    end = path_from_hamiltonian(open_part, steps=2).final
    target = np.angle(np.einsum("ik,ij,jk->k", basis.conj(), end, basis)) + rng.uniform(-1.0, 1.0, d)
    return rho, close_schedule(open_part, basis, target, dt=1.0)


@pytest.fixture
def qubit_pi3():
    return tilted_qubit(math.pi / 3)


@pytest.fixture
def precession_path():
    return path_from_hamiltonian(precession(), steps=4096)


def encode(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def qubit_scenario(theta=math.pi / 3, weights=(0.75, 0.25), steps=4096, duration=2 * math.pi, **extra):
    doc = {
        "name": f"qubit-theta-{theta:.4f}",
        "rho0": encode(tilted_qubit(theta, weights).matrix),
        "evolution": {"type": "hamiltonian", "segments": [{"H": encode(0.5 * SZ), "dt": duration}]},
        "steps": steps,
    }
    doc.update(extra)
    return doc
