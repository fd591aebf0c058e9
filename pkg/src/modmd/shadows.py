"""Randomized-measurement estimation of overlap signals.

The probe is an ancilla-entangled state whose density matrix, paired with
a rank-two observable built from the reference state, has the real (or
imaginary) part of the overlap signal as its expectation value. Random
global rotations followed by computational-basis readout give an
unbiased single-shot estimator of that expectation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliSum
from .simulate import (
    CompositeState,
    MultiObservableSignal,
    SpectralDecomposition,
    StateVector,
    composite_state,
)

_SEED_MAX = 2**63 - 1


@dataclass(frozen=True, slots=True)
class RankTwoObservable:
    """Hermitian rank-two operator ``u v* + v u*`` (or its ``i u v* + h.c.``
    variant) on the ancilla-extended register.

    ``u`` occupies the ancilla-1 block and ``v`` the ancilla-0 block, so
    the supports are disjoint and the trace vanishes identically.
    ``part`` selects whether expectations give the real or imaginary
    signal quadrature.
    """

    n_system_qubits: int
    u: np.ndarray
    v: np.ndarray
    part: str

    def __post_init__(self):
        if self.part not in ("real", "imag"):
            raise ValueError(f"part must be 'real' or 'imag', got {self.part!r}")
        dim = 1 << (self.n_system_qubits + 1)
        u = np.asarray(self.u, dtype=complex)
        v = np.asarray(self.v, dtype=complex)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        if u.shape != (dim,) or v.shape != (dim,):
            raise ValueError(f"u and v must have length {dim}")
        half = dim // 2
        if np.linalg.norm(u[:half]) > 1e-12 * max(np.linalg.norm(u), 1.0):
            raise ValueError("u must live in the ancilla-1 block")
        if np.linalg.norm(v[half:]) > 1e-12 * max(np.linalg.norm(v), 1.0):
            raise ValueError("v must live in the ancilla-0 block")

    @property
    def dim(self) -> int:
        return 1 << (self.n_system_qubits + 1)

    @property
    def trace(self) -> float:
        return 0.0

    @property
    def trace_square(self) -> float:
        """``Tr[Gamma^2]`` in closed form; drives the variance bound."""
        overlap = np.vdot(self.u, self.v)
        norms = np.linalg.norm(self.u) ** 2 * np.linalg.norm(self.v) ** 2
        return float(2.0 * (abs(overlap) ** 2 + norms))

    def dense(self) -> np.ndarray:
        outer = np.outer(self.u, self.v.conj())
        if self.part == "imag":
            outer = 1j * outer
        return outer + outer.conj().T

    def expectation(self, amplitudes: np.ndarray) -> float:
        """``<psi| Gamma |psi>`` for a pure state, without densifying."""
        z = np.vdot(amplitudes, self.u) * np.vdot(self.v, amplitudes)
        return float(2.0 * z.real if self.part == "real" else -2.0 * z.imag)


@dataclass(frozen=True, slots=True)
class ShadowSample:
    """One randomized measurement: the unitary's seed and the outcome index."""

    unitary_seed: int
    outcome: int
    n_qubits: int

    def __post_init__(self):
        if not 0 <= self.outcome < (1 << self.n_qubits):
            raise ValueError(
                f"outcome {self.outcome} outside register of {self.n_qubits} qubits"
            )


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    """Additive Gaussian corruption of a signal.

    ``target`` picks which quadrature receives noise; components a signal
    does not carry are left untouched.
    """

    epsilon: float
    seed: int
    target: str = "both"

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.target not in ("real", "imag", "both"):
            raise ValueError(f"target must be real/imag/both, got {self.target!r}")


def build_gamma(
    observable: PauliSum,
    phi0: StateVector,
    phi_perp: StateVector,
    part: str = "real",
) -> RankTwoObservable:
    """Rank-two observable whose expectation on the ancilla probe is the
    chosen quadrature of ``<phi0| O exp(-i H t) |phi0>``.

    ``u = |1>(O |phi0>)`` and ``v = |0>|phi_perp>`` live in opposite
    ancilla blocks, so the operator is traceless by construction.
    """
    if observable.n_qubits != phi0.n_qubits or phi0.n_qubits != phi_perp.n_qubits:
        raise ValueError("observable and states must share one register width")
    n = 1 << phi0.n_qubits
    u = np.zeros(2 * n, dtype=complex)
    u[n:] = observable.apply(phi0.amplitudes)
    v = np.zeros(2 * n, dtype=complex)
    v[:n] = phi_perp.amplitudes
    return RankTwoObservable(phi0.n_qubits, u, v, part)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def sample_shadows(
    state: CompositeState,
    n_samples: int,
    seed: int,
    unitary_fn=None,
) -> "list[ShadowSample]":
    """Randomized measurements of an ancilla probe state.

    Each sample draws its own integer seed from the master ``seed``, so
    the record ``(unitary_seed, outcome)`` regenerates the rotation
    without storing the matrix. ``unitary_fn(dim, rng)`` replaces the
    Haar draw when supplied (testing hook).
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be >= 1, got {n_samples}")
    if unitary_fn is None:
        unitary_fn = haar_unitary
    dim = 1 << (state.n_system_qubits + 1)
    master = np.random.default_rng(seed)
    child_seeds = master.integers(0, _SEED_MAX, size=n_samples)
    samples = []
    for s in child_seeds:
        rng = np.random.default_rng(int(s))
        u = unitary_fn(dim, rng)
        rotated = u @ state.amplitudes
        probs = np.abs(rotated) ** 2
        probs /= probs.sum()
        outcome = int(rng.choice(dim, p=probs))
        samples.append(ShadowSample(int(s), outcome, state.n_system_qubits + 1))
    return samples


def _estimate_batch(
    samples: "list[ShadowSample]",
    gammas: "list[RankTwoObservable]",
    unitary_fn=None,
) -> np.ndarray:
    """Mean single-shot estimates of several observables from one batch."""
    if not samples:
        raise ValueError("need at least one sample")
    if unitary_fn is None:
        unitary_fn = haar_unitary
    dim = 1 << samples[0].n_qubits
    for g in gammas:
        if g.dim != dim:
            raise ValueError("observable register width differs from samples")
    totals = np.zeros(len(gammas))
    for s in samples:
        if (1 << s.n_qubits) != dim:
            raise ValueError("samples mix register widths")
        rng = np.random.default_rng(s.unitary_seed)
        row = unitary_fn(dim, rng)[s.outcome]
        for j, g in enumerate(gammas):
            z = (row @ g.u) * np.conj(row @ g.v)
            val = 2.0 * z.real if g.part == "real" else -2.0 * z.imag
            totals[j] += (dim + 1) * val - g.trace
    return totals / len(samples)


def estimate_trace(
    samples: "list[ShadowSample]",
    gamma: RankTwoObservable,
    unitary_fn=None,
) -> float:
    """Unbiased estimate of ``Tr[rho Gamma]`` from recorded measurements.

    Inverts the depolarizing action of the random rotations:
    each sample contributes ``(D+1) <b|U Gamma U*|b> - Tr[Gamma]``.
    """
    return float(_estimate_batch(samples, [gamma], unitary_fn)[0])


def variance_bound(gamma: RankTwoObservable) -> float:
    """Upper bound ``3 Tr[Gamma^2]`` on the single-shot estimator variance."""
    return 3.0 * gamma.trace_square


def shot_budget(
    n_observables: int,
    max_weight_l1: float,
    tolerance: float,
    constant: float = 34.0,
) -> int:
    """Samples per time step for uniform accuracy over all observables.

    Grows logarithmically with the observable count and quadratically
    with the worst coefficient 1-norm over the target tolerance.
    """
    if n_observables < 1:
        raise ValueError(f"n_observables must be >= 1, got {n_observables}")
    if not max_weight_l1 > 0:
        raise ValueError(f"max_weight_l1 must be positive, got {max_weight_l1}")
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if not constant > 0:
        raise ValueError(f"constant must be positive, got {constant}")
    return math.ceil(
        constant
        * math.log(max(n_observables, 2))
        * max_weight_l1**2
        / tolerance**2
    )


def shadow_signal(
    spec: SpectralDecomposition,
    phi0: StateVector,
    phi_perp: StateVector,
    observables: "list[PauliSum]",
    dt: float,
    k_max: int,
    n_samples: int,
    seed: int,
    mode: str = "real",
    unitary_fn=None,
) -> MultiObservableSignal:
    """Overlap signals estimated from randomized measurements.

    One batch of ``n_samples`` measurements is drawn per time step and
    shared by all observables (and by both quadratures in complex mode).
    Batch seeds derive deterministically from ``seed`` and the step
    index, so results are independent of evaluation order.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if not observables:
        raise ValueError("need at least one observable")
    real_gammas = [build_gamma(o, phi0, phi_perp, "real") for o in observables]
    gammas = list(real_gammas)
    if mode == "complex":
        gammas += [build_gamma(o, phi0, phi_perp, "imag") for o in observables]
    elif mode != "real":
        raise ValueError(f"mode must be 'real' or 'complex', got {mode!r}")
    n_obs = len(observables)
    values = np.empty(
        (n_obs, k_max + 1), dtype=float if mode == "real" else complex
    )
    for k in range(k_max + 1):
        step_seed = int(
            np.random.SeedSequence(entropy=seed, spawn_key=(k,)).generate_state(1)[0]
        )
        state = composite_state(phi_perp, phi0, spec, k * dt)
        samples = sample_shadows(state, n_samples, step_seed, unitary_fn)
        est = _estimate_batch(samples, gammas, unitary_fn)
        if mode == "real":
            values[:, k] = est
        else:
            values[:, k] = est[:n_obs] + 1j * est[n_obs:]
    return MultiObservableSignal(n_obs, dt, values, mode)


def gaussian_noise_channel(
    signal: MultiObservableSignal, noise: NoiseSpec
) -> MultiObservableSignal:
    """Add centered Gaussian noise to the targeted signal quadratures.

    Zero strength returns the values bit-for-bit. Draws are deterministic
    under the spec's seed: the real-part field (when targeted) is drawn
    first, then the imaginary-part field.
    """
    if noise.epsilon == 0.0:
        return MultiObservableSignal(
            signal.n_observables, signal.dt, signal.values.copy(), signal.mode
        )
    rng = np.random.default_rng(noise.seed)
    shape = signal.values.shape
    values = signal.values.copy()
    hit_real = noise.target in ("real", "both")
    hit_imag = noise.target in ("imag", "both")
    if signal.mode == "real":
        if hit_real:
            values = values + noise.epsilon * rng.standard_normal(shape)
    else:
        if hit_real:
            values = values + noise.epsilon * rng.standard_normal(shape)
        if hit_imag:
            values = values + 1j * noise.epsilon * rng.standard_normal(shape)
    return MultiObservableSignal(signal.n_observables, signal.dt, values, signal.mode)
