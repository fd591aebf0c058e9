"""Exact statevector simulation of qubit dynamics and signal generation.

Everything here works on dense amplitude vectors; Hamiltonians enter
either as dense Hermitian matrices (for diagonalization) or as
:class:`~modmd.pauli.PauliSum` operators applied matrix-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum
from .errors import DegenerateInputError

NORM_ATOL = 1e-10
HERMITICITY_RTOL = 1e-10


@dataclass(frozen=True, slots=True)
class StateVector:
    """A normalized pure state on ``n_qubits`` qubits.

    Qubit 0 maps to the most significant bit of the basis index, matching
    the Pauli-label convention, so ``amplitudes[int(bits, 2)]`` is the
    amplitude of the basis state labeled by ``bits``.
    """

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for "
                f"{self.n_qubits} qubits, got shape {amps.shape}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm {norm!r} is not 1 within {NORM_ATOL}")

    @classmethod
    def normalized(cls, n_qubits: int, raw: np.ndarray) -> "StateVector":
        """Build from an unnormalized amplitude vector."""
        raw = np.asarray(raw, dtype=complex)
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            raise DegenerateInputError("cannot normalize the zero vector")
        return cls(n_qubits, raw / norm)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, slots=True)
class SpectralDecomposition:
    """Eigensystem of a Hermitian operator.

    ``energies`` ascend; ``eigenvectors[:, n]`` is the unit eigenvector
    for ``energies[n]``.
    """

    energies: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "energies", np.asarray(self.energies, dtype=float))
        object.__setattr__(
            self, "eigenvectors", np.asarray(self.eigenvectors, dtype=complex)
        )
        if self.energies.ndim != 1 or self.eigenvectors.shape != (
            len(self.energies),
            len(self.energies),
        ):
            raise ValueError("eigenvector matrix must be square and match energies")
        if np.any(np.diff(self.energies) < 0):
            raise ValueError("energies must ascend")

    @property
    def dimension(self) -> int:
        return len(self.energies)


@dataclass(frozen=True, slots=True)
class CompositeState:
    """System register extended by one ancilla qubit (the leading qubit)."""

    n_system_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (1 << (self.n_system_qubits + 1),):
            raise ValueError("amplitude length must be 2^(system qubits + 1)")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"composite norm {norm!r} is not 1 within {NORM_ATOL}")

    @property
    def n_qubits(self) -> int:
        return self.n_system_qubits + 1


@dataclass(frozen=True, slots=True)
class MultiObservableSignal:
    """Time series of expectation values for several observables.

    ``values[i, k]`` is observable ``i`` at time ``k * dt``. In ``"real"``
    mode the array is real (the measurable part of the overlap); in
    ``"complex"`` mode it keeps both quadratures.
    """

    n_observables: int
    dt: float
    values: np.ndarray
    mode: str = "real"

    def __post_init__(self):
        if self.mode not in ("real", "complex"):
            raise ValueError(f"mode must be 'real' or 'complex', got {self.mode!r}")
        dtype = float if self.mode == "real" else complex
        vals = np.asarray(self.values, dtype=dtype)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] != self.n_observables:
            raise ValueError(
                f"values must be (n_observables, n_steps), got {vals.shape}"
            )
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def n_steps(self) -> int:
        return self.values.shape[1]

    def prefix(self, n_steps: int) -> "MultiObservableSignal":
        """The first ``n_steps`` samples of every observable."""
        if not 1 <= n_steps <= self.n_steps:
            raise ValueError(f"n_steps must lie in [1, {self.n_steps}]")
        return MultiObservableSignal(
            self.n_observables, self.dt, self.values[:, :n_steps].copy(), self.mode
        )


def diagonalize(matrix: np.ndarray) -> SpectralDecomposition:
    """Full eigensystem of a dense Hermitian matrix.

    Rejects non-Hermitian input (relative Frobenius deviation above
    1e-10) rather than silently symmetrizing it.
    """
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    scale = max(float(np.linalg.norm(matrix)), 1.0)
    if np.linalg.norm(matrix - matrix.conj().T) > HERMITICITY_RTOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    energies, vectors = np.linalg.eigh(matrix)
    return SpectralDecomposition(energies, vectors)


def evolve(spec: SpectralDecomposition, state: StateVector, t: float) -> StateVector:
    """Apply ``exp(-i H t)`` through the eigenbasis of ``H``."""
    v = spec.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    coeffs *= np.exp(-1j * spec.energies * t)
    return StateVector(state.n_qubits, v @ coeffs)


def trotter_steps(
    num_terms: int, max_coefficient: float, dt: float, tolerance: float
) -> int:
    """Step count for a first-order product formula over one interval.

    Scales as ``ceil(M^2 * kmax^2 * dt^2 / tolerance)`` and never drops
    below one step.
    """
    if num_terms < 1:
        raise ValueError("num_terms must be >= 1")
    if max_coefficient < 0 or dt < 0:
        raise ValueError("max_coefficient and dt must be nonnegative")
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    r = math.ceil((num_terms * max_coefficient * dt) ** 2 / tolerance)
    return max(r, 1)


def trotter_evolve(
    psum: PauliSum, state: StateVector, t: float, r: int
) -> StateVector:
    """First-order Trotter approximation of ``exp(-i H t)``.

    One step multiplies the exponentials of the terms in the order they
    appear in the sum (first term leftmost in the operator product, so
    the last term acts on the state first); the step repeats ``r`` times
    with interval ``t / r``.
    """
    if r < 1:
        raise ValueError(f"step count must be >= 1, got {r}")
    if state.n_qubits != psum.n_qubits:
        raise ValueError("state and operator register widths differ")
    from .pauli import apply_pauli_string

    theta = [c * t / r for c in psum.coefficients]
    amps = state.amplitudes.copy()
    for _ in range(r):
        for ang, string in zip(reversed(theta), reversed(psum.strings)):
            amps = math.cos(ang) * amps - 1j * math.sin(ang) * apply_pauli_string(
                string, amps
            )
    return StateVector(state.n_qubits, amps)


def build_reference_superposition(
    n_qubits: int, bitstrings: "list[str]"
) -> StateVector:
    """Equal-amplitude superposition of distinct computational basis states."""
    if not bitstrings:
        raise ValueError("need at least one bitstring")
    if len(set(bitstrings)) != len(bitstrings):
        raise ValueError("duplicate bitstrings in reference state")
    amps = np.zeros(1 << n_qubits, dtype=complex)
    for b in bitstrings:
        if len(b) != n_qubits or set(b) - {"0", "1"}:
            raise ValueError(f"bad bitstring {b!r} for {n_qubits} qubits")
        amps[int(b, 2)] = 1.0
    return StateVector(n_qubits, amps / math.sqrt(len(bitstrings)))


def composite_state(
    phi_perp: StateVector,
    phi0: StateVector,
    spec: SpectralDecomposition,
    t: float,
) -> CompositeState:
    """Ancilla-entangled probe ``(|0>|phi_perp> + |1>|phi0(t)>)/sqrt(2)``.

    The ancilla is the leading qubit; ``phi0`` evolves for time ``t``
    under the Hamiltonian whose eigensystem is ``spec``.
    """
    if phi_perp.n_qubits != phi0.n_qubits:
        raise ValueError("reference and orthogonal states differ in width")
    evolved = evolve(spec, phi0, t)
    n = 1 << phi0.n_qubits
    amps = np.empty(2 * n, dtype=complex)
    amps[:n] = phi_perp.amplitudes / math.sqrt(2.0)
    amps[n:] = evolved.amplitudes / math.sqrt(2.0)
    return CompositeState(phi0.n_qubits, amps)


def exact_signal(
    spec: SpectralDecomposition,
    phi0: StateVector,
    observables: "list[PauliSum]",
    dt: float,
    k_max: int,
    mode: str = "real",
) -> MultiObservableSignal:
    """Noise-free overlap signals ``<phi0| O_i exp(-i H k dt) |phi0>``.

    Evaluated through the eigenbasis: with ``b = V^dag phi0`` and
    ``w_i = V^dag O_i phi0`` the signal is a sum of pure phases,
    ``sum_n conj(w_i[n]) b[n] exp(-i E_n k dt)``, so all ``k_max + 1``
    samples cost one pass over the spectrum.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not observables:
        raise ValueError("need at least one observable")
    v = spec.eigenvectors
    b = v.conj().T @ phi0.amplitudes
    coeffs = np.empty((len(observables), spec.dimension), dtype=complex)
    for i, obs in enumerate(observables):
        if obs.n_qubits != phi0.n_qubits:
            raise ValueError(f"observable {i} register width mismatch")
        coeffs[i] = np.conj(v.conj().T @ obs.apply(phi0.amplitudes)) * b
    phases = np.exp(
        -1j * np.outer(spec.energies, dt * np.arange(k_max + 1))
    )
    values = coeffs @ phases
    if mode == "real":
        values = values.real
    return MultiObservableSignal(len(observables), dt, values, mode)
