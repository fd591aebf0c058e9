"""Block-Hankel least-squares spectral estimation from multi-observable signals.

The pipeline stacks time-shifted copies of every observable's series into
a Hankel matrix pair, fits the one-step linear propagator through a
rank-truncated pseudo-inverse, and reads eigenenergies off the phases of
the propagator's eigenvalues. A single observable reduces the method to
classic single-signal harmonic retrieval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, EigenvalueShortfallError
from .pauli import PauliSum
from .simulate import (
    MultiObservableSignal,
    SpectralDecomposition,
    StateVector,
    evolve,
)

# Conjugate eigenvalue pairs are identified by phases canceling to this
# absolute tolerance.
CONJUGATE_PHASE_ATOL = 1e-8

# Biorthogonal left/right pairings with |<l|r>| / (|l||r|) below this are
# reported as ill-conditioned (near-defective propagator).
CONDITION_FLAG = 1e8


@dataclass(frozen=True, slots=True)
class ModmdConfig:
    """Solver hyperparameters.

    ``d`` is the number of stacked time shifts (state dimension is
    ``d * n_observables``), ``K + 1`` the number of least-squares
    snapshots, ``svd_threshold`` the relative singular-value cutoff, and
    ``magnitude_floor`` the modulus below which propagator eigenvalues
    are treated as noise artifacts.
    """

    d: int
    K: int
    dt: float
    svd_threshold: float
    n_eig: int
    magnitude_floor: float = 0.2

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0.0 < self.svd_threshold < 1.0:
            raise ValueError(
                f"svd_threshold must lie in (0, 1), got {self.svd_threshold}"
            )
        if self.n_eig < 1:
            raise ValueError(f"n_eig must be >= 1, got {self.n_eig}")
        if not 0.0 <= self.magnitude_floor < 1.0:
            raise ValueError(
                f"magnitude_floor must lie in [0, 1), got {self.magnitude_floor}"
            )


@dataclass(frozen=True, slots=True)
class HankelPair:
    """Time-aligned snapshot matrices ``x`` and its one-step shift ``xp``.

    Row ``a * n_observables + i`` of ``x`` holds observable ``i`` delayed
    by ``a`` steps; column ``k`` is time ``k * dt``.
    """

    x: np.ndarray
    xp: np.ndarray
    n_observables: int
    d: int
    dt: float

    @property
    def n_columns(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True, slots=True)
class TruncatedPinv:
    """Rank-truncated pseudo-inverse in factored SVD form."""

    left: np.ndarray
    inv_singular: np.ndarray
    right: np.ndarray
    singular_values: np.ndarray
    rank: int
    threshold: float

    def as_matrix(self) -> np.ndarray:
        return (self.right.conj().T * self.inv_singular) @ self.left.conj().T


@dataclass(frozen=True, slots=True)
class ModmdEstimate:
    """Spectral estimate extracted from the fitted propagator.

    Arrays are aligned: entry ``n`` holds the ``n``-th retained
    eigenvalue (descending phase, i.e. ascending energy), its energy
    ``-arg(lambda_n) / dt``, its modulus, and the matched left
    eigenvector row. ``singular_values`` and ``retained_rank`` describe
    the least-squares truncation when the estimate came from the full
    pipeline.
    """

    eigenvalues: np.ndarray
    energies: np.ndarray
    magnitudes: np.ndarray
    left_vectors: np.ndarray
    dt: float
    eigenvector_condition: float
    ill_conditioned: bool
    singular_values: np.ndarray | None = None
    retained_rank: int | None = None

    @property
    def n_eig(self) -> int:
        return len(self.eigenvalues)


def build_hankel(signal: MultiObservableSignal, d: int, K: int) -> HankelPair:
    """Stack ``d`` time shifts of every observable into a snapshot pair.

    Requires ``signal.n_steps >= K + d + 1`` so that both matrices have
    ``K + 1`` fully populated columns.
    """
    if d < 1 or K < 1:
        raise ValueError(f"need d >= 1 and K >= 1, got d={d}, K={K}")
    needed = K + d + 1
    if signal.n_steps < needed:
        raise ValueError(
            f"signal has {signal.n_steps} samples but d={d}, K={K} "
            f"requires {needed}"
        )
    n_obs = signal.n_observables
    vals = signal.values
    x = np.empty((d * n_obs, K + 1), dtype=vals.dtype)
    xp = np.empty_like(x)
    for a in range(d):
        x[a * n_obs : (a + 1) * n_obs] = vals[:, a : a + K + 1]
        xp[a * n_obs : (a + 1) * n_obs] = vals[:, a + 1 : a + K + 2]
    return HankelPair(x=x, xp=xp, n_observables=n_obs, d=d, dt=signal.dt)


def truncated_pinv(matrix: np.ndarray, threshold: float) -> TruncatedPinv:
    """Pseudo-inverse keeping singular values strictly above
    ``threshold * sigma_max``.

    A value exactly at the cutoff is discarded. The factored form keeps
    the full singular spectrum for diagnostics.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    if s[0] == 0.0:
        raise DegenerateInputError("all-zero matrix has no pseudo-inverse")
    rank = int(np.count_nonzero(s > threshold * s[0]))
    return TruncatedPinv(
        left=u[:, :rank],
        inv_singular=1.0 / s[:rank],
        right=vh[:rank],
        singular_values=s,
        rank=rank,
        threshold=threshold,
    )


def _system_matrix(pair: HankelPair, pinv: TruncatedPinv) -> np.ndarray:
    return (pair.xp @ pinv.right.conj().T * pinv.inv_singular) @ pinv.left.conj().T


def solve_system_matrix(pair: HankelPair, threshold: float) -> np.ndarray:
    """Least-squares one-step propagator ``A = xp @ pinv(x)``."""
    return _system_matrix(pair, truncated_pinv(pair.x, threshold))


def _merge_conjugate_pairs(eigenvalues: np.ndarray) -> np.ndarray:
    """Boolean mask keeping one member of each conjugate pair.

    Real-valued signals produce propagator spectra closed under complex
    conjugation, where both members encode one physical frequency. The
    member with nonnegative phase (the negative-energy branch, which the
    low-lying spectrum occupies after recentering) is kept.
    """
    args = np.angle(eigenvalues)
    keep = np.ones(len(eigenvalues), dtype=bool)
    used = np.zeros(len(eigenvalues), dtype=bool)
    for i in range(len(eigenvalues)):
        if used[i] or args[i] >= 0:
            continue
        for j in range(len(eigenvalues)):
            if j == i or used[j] or args[j] < 0:
                continue
            if (
                abs(args[i] + args[j]) <= CONJUGATE_PHASE_ATOL
                and not used[j]
            ):
                keep[i] = False
                used[i] = used[j] = True
                break
    return keep


def extract_eigen(
    a_matrix: np.ndarray,
    dt: float,
    n_eig: int,
    magnitude_floor: float = 0.2,
    merge_conjugates: bool = False,
) -> ModmdEstimate:
    """Eigenvalues, energies and left eigenvectors of the propagator.

    Eigenvalues with modulus below ``magnitude_floor`` are dropped as
    noise artifacts; survivors are ordered by descending phase on the
    principal branch, so index 0 is the lowest energy. Raises
    :class:`EigenvalueShortfallError` (carrying the survivors) when
    fewer than ``n_eig`` remain. With ``merge_conjugates`` set, one
    member of each conjugate pair of a real-signal spectrum is reported.

    Left rows are scaled biorthonormal to the right eigenvectors when
    the pairing is well conditioned; a near-defective pairing sets
    ``ill_conditioned`` instead of failing.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if n_eig < 1:
        raise ValueError(f"n_eig must be >= 1, got {n_eig}")
    w, vl, vr = scipy.linalg.eig(a_matrix, left=True, right=True)
    mask = np.abs(w) >= magnitude_floor
    w, vl, vr = w[mask], vl[:, mask], vr[:, mask]
    if merge_conjugates and len(w):
        keep = _merge_conjugate_pairs(w)
        w, vl, vr = w[keep], vl[:, keep], vr[:, keep]
    order = np.argsort(-np.angle(w), kind="stable")
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    if len(w) < n_eig:
        raise EigenvalueShortfallError(n_eig, w, -np.angle(w) / dt)
    w, vl, vr = w[:n_eig], vl[:, :n_eig], vr[:, :n_eig]

    left_rows = vl.conj().T
    condition = 1.0
    ill = False
    for j in range(n_eig):
        pairing = left_rows[j] @ vr[:, j]
        size = np.linalg.norm(left_rows[j]) * np.linalg.norm(vr[:, j])
        if abs(pairing) < 1e-14 * size:
            ill = True
            condition = math.inf
            continue
        condition = max(condition, size / abs(pairing))
        left_rows[j] = left_rows[j] / pairing
    if condition > CONDITION_FLAG:
        ill = True

    return ModmdEstimate(
        eigenvalues=w,
        energies=-np.angle(w) / dt,
        magnitudes=np.abs(w),
        left_vectors=left_rows,
        dt=dt,
        eigenvector_condition=float(condition),
        ill_conditioned=ill,
    )


def run_modmd(signal: MultiObservableSignal, config: ModmdConfig) -> ModmdEstimate:
    """Full pipeline: Hankel pair, truncated least squares, eigen extraction.

    Conjugate-pair merging switches on automatically for real-mode
    signals. One observable makes this the single-signal method exactly;
    there is no separate code path.
    """
    pair = build_hankel(signal, config.d, config.K)
    pinv = truncated_pinv(pair.x, config.svd_threshold)
    a_matrix = _system_matrix(pair, pinv)
    estimate = extract_eigen(
        a_matrix,
        config.dt,
        config.n_eig,
        magnitude_floor=config.magnitude_floor,
        merge_conjugates=signal.mode == "real",
    )
    return replace(
        estimate,
        singular_values=pinv.singular_values,
        retained_rank=pinv.rank,
    )


def residual(a_matrix: np.ndarray, pair: HankelPair) -> float:
    """Relative fit residual ``|xp - A x|_F / |xp|_F``."""
    denom = np.linalg.norm(pair.xp)
    if denom == 0.0:
        raise DegenerateInputError("all-zero shifted matrix has no residual")
    return float(np.linalg.norm(pair.xp - a_matrix @ pair.x) / denom)


def forecast(a_matrix: np.ndarray, pair: HankelPair, horizon: int) -> np.ndarray:
    """Extrapolate the signal by iterating the fitted propagator.

    Starting from the final snapshot column, each multiplication advances
    one step and the trailing observable block is read off. Column ``m``
    of the result is absolute step ``K + d + m``: column 0 coincides with
    the final observed sample when the fit is consistent, and later
    columns extend beyond the data. A zero horizon yields an empty block.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    n_obs = pair.n_observables
    a_matrix = np.asarray(a_matrix)
    if a_matrix.shape != (pair.x.shape[0], pair.x.shape[0]):
        raise ValueError("propagator shape does not match the snapshot pair")
    if horizon == 0:
        return np.empty((n_obs, 0), dtype=np.result_type(a_matrix, pair.x))
    x = a_matrix @ pair.x[:, -1]
    out = np.empty((n_obs, horizon), dtype=x.dtype)
    out[:, 0] = x[-n_obs:]
    for m in range(1, horizon):
        x = a_matrix @ x
        out[:, m] = x[-n_obs:]
    return out


def estimate_eigenstate(
    estimate: ModmdEstimate,
    n: int,
    spec: SpectralDecomposition,
    phi0: StateVector,
    observables: "list[PauliSum]",
) -> StateVector:
    """Reconstruct the ``n``-th eigenstate from a left eigenvector.

    The left row weights the library of states ``O_i exp(-i H a dt)
    |phi0>`` (time shift ``a``, observable ``i``); the weighted sum is
    normalized. Requires the estimate's state dimension to be a multiple
    of the observable count.
    """
    if not 0 <= n < estimate.n_eig:
        raise ValueError(f"eigenstate index {n} outside [0, {estimate.n_eig})")
    z = estimate.left_vectors[n]
    n_obs = len(observables)
    if n_obs < 1 or len(z) % n_obs != 0:
        raise ValueError(
            f"state dimension {len(z)} is not a multiple of "
            f"{n_obs} observables"
        )
    d = len(z) // n_obs
    acc = np.zeros(1 << phi0.n_qubits, dtype=complex)
    for a in range(d):
        shifted = evolve(spec, phi0, a * estimate.dt).amplitudes
        for i, obs in enumerate(observables):
            coeff = z[a * n_obs + i]
            if coeff != 0.0:
                acc += coeff * obs.apply(shifted)
    return StateVector.normalized(phi0.n_qubits, acc)


def select_time_step(
    e_min_bound: float,
    e_max_bound: float,
    gap_bounds: "tuple[float, ...] | list[float]" = (),
    safety: float = 1.0,
) -> float:
    """Sampling interval guaranteeing unambiguous eigenphases.

    ``gap_bounds`` holds upper bounds on the consecutive low-lying gaps
    ``E_1 - E_0, E_2 - E_1, ...`` when known. The step solves
    ``dt = safety * 2 pi / (range + max_n(gap_n - cum_n))`` where
    ``cum_n`` accumulates the gaps below level ``n``; with no gap
    information the fallback is ``safety * 2 pi / (2 range)``. The
    result always satisfies ``dt * range < 2 pi``.
    """
    spread = e_max_bound - e_min_bound
    if not spread > 0:
        raise ValueError(f"need e_max_bound > e_min_bound, got spread {spread}")
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety must lie in (0, 1], got {safety}")
    gaps = [float(g) for g in gap_bounds]
    if any(g <= 0 for g in gaps):
        raise ValueError("gap bounds must be positive")
    if gaps:
        cum = 0.0
        extra = 0.0
        for g in gaps:
            extra = max(extra, g - cum)
            cum += g
    else:
        extra = spread
    dt = safety * 2.0 * math.pi / (spread + extra)
    assert dt * spread < 2.0 * math.pi
    return dt


def ground_energy_error_bound(
    d: int,
    dt: float,
    e0: float,
    e1: float,
    e_max: float,
    overlap_sq: float,
) -> float:
    """A priori bound on the noiseless ground-energy error.

    Combines the spectral spread, the reference state's squared overlap
    with the ground state, and a gap-driven convergence factor that
    sharpens geometrically with the number of time shifts ``d``; at
    ``d = 1`` the gap factor drops out entirely.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (e0 < e1 <= e_max):
        raise ValueError(f"need e0 < e1 <= e_max, got {(e0, e1, e_max)}")
    if not 0.0 < overlap_sq <= 1.0:
        raise ValueError(f"overlap_sq must lie in (0, 1], got {overlap_sq}")
    amplification = 1.0 + 3.0 * (e1 - e0) * dt / (2.0 * math.pi)
    tan_sq = (1.0 - overlap_sq) / overlap_sq
    return (
        abs(math.sin((e_max - e0) * dt))
        / (amplification ** (2 * (d - 1)) * dt)
        * tan_sq
    )
