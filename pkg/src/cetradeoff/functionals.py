"""Information functionals: Holevo quantity, its assisted variant, entropy
gain and minimum output entropy.

The assisted quantity follows the bound for entanglement-assisted coding:

    chi_assist = sum_i p_i S(rho_i) + S(Phi(rho_bar)) - sum_i p_i S(Phi (x) I (phi_i))

where phi_i purifies rho_i and the receiver holds the reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import Channel, apply_matrix
from .qstate import (
    DensityMatrix,
    entropy_of_spectrum,
    make_density,
    partial_trace_matrix,
    purification_vector,
    von_neumann_entropy,
)

LOG_EIG_FLOOR = 1e-18


@dataclass(frozen=True)
class Ensemble:
    """Weighted signal states, optionally with purifications for assisted use.

    Each purification lives on signal (x) reference (signal factor first); its
    reference dimension is inferred from the purification size.
    """

    items: tuple[tuple[float, DensityMatrix], ...]
    purifications: tuple[DensityMatrix, ...] | None = None

    def __post_init__(self):
        if not self.items:
            raise ValueError("ensemble needs at least one signal")
        weights = np.array([w for w, _ in self.items])
        if np.any(weights <= 0):
            raise ValueError("ensemble weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"ensemble weights sum to {weights.sum()}, not 1")
        if self.purifications is not None:
            if len(self.purifications) != len(self.items):
                raise ValueError("one purification per signal required")
            for (w, sig), phi in zip(self.items, self.purifications):
                if phi.dim % sig.dim != 0:
                    raise ValueError(
                        f"purification dim {phi.dim} is not a multiple of the "
                        f"signal dim {sig.dim}"
                    )
                d_ref = phi.dim // sig.dim
                reduced = partial_trace_matrix(phi.entries, (sig.dim, d_ref), [0])
                if np.max(np.abs(reduced - sig.entries)) > 1e-10:
                    raise ValueError("purification does not reduce to its signal")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.items])

    @property
    def signals(self) -> tuple[DensityMatrix, ...]:
        return tuple(sig for _, sig in self.items)

    def average_signal(self) -> DensityMatrix:
        acc = sum(w * sig.entries for w, sig in self.items)
        return make_density(acc)


def ensemble_from_pure(vectors, weights) -> Ensemble:
    """Pure-signal ensemble; purifications use a trivial (dim-1) reference."""
    items = []
    purifs = []
    for w, v in zip(weights, vectors):
        v = np.asarray(v, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        rho = make_density(np.outer(v, v.conj()))
        items.append((float(w), rho))
        purifs.append(rho)
    return Ensemble(items=tuple(items), purifications=tuple(purifs))


def ensemble_from_purification_vectors(vectors, weights, signal_dim: int) -> Ensemble:
    """Ensemble of possibly mixed signals given joint signal-reference vectors."""
    items = []
    purifs = []
    for w, u in zip(weights, vectors):
        u = np.asarray(u, dtype=complex).reshape(-1)
        u = u / np.linalg.norm(u)
        if u.size % signal_dim != 0:
            raise ValueError("purification vector size incompatible with signal dim")
        d_ref = u.size // signal_dim
        u_mat = u.reshape(signal_dim, d_ref)
        rho = make_density(u_mat @ u_mat.conj().T)
        items.append((float(w), rho))
        purifs.append(make_density(np.outer(u, u.conj())))
    return Ensemble(items=tuple(items), purifications=tuple(purifs))


def avg_input_entropy(ensemble: Ensemble) -> float:
    """Average signal entropy sum_i p_i S(rho_i) in ebits."""
    return float(
        sum(w * von_neumann_entropy(sig) for w, sig in ensemble.items)
    )


def holevo_chi(channel: Channel, ensemble: Ensemble) -> float:
    """Holevo quantity S(Phi(rho_bar)) - sum_i p_i S(Phi(rho_i)) in bits."""
    _check_dims(channel, ensemble)
    avg_out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    mean_entropy = 0.0
    for w, sig in ensemble.items:
        out = apply_matrix(channel, sig.entries)
        avg_out += w * out
        mean_entropy += w * von_neumann_entropy(out)
    value = von_neumann_entropy(avg_out) - mean_entropy
    return max(0.0, float(value))


def chi_assist(channel: Channel, ensemble: Ensemble) -> float:
    """Assisted Holevo quantity; requires purifications on the ensemble."""
    _check_dims(channel, ensemble)
    if ensemble.purifications is None:
        raise ValueError("chi_assist needs an ensemble with purifications")
    d_in = channel.dim_in
    avg_out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    total = 0.0
    for (w, sig), phi in zip(ensemble.items, ensemble.purifications):
        avg_out += w * apply_matrix(channel, sig.entries)
        d_ref = phi.dim // d_in
        joint = _apply_on_first_factor(channel, phi.entries, d_in, d_ref)
        total += w * (von_neumann_entropy(sig) - entropy_of_spectrum(
            _pos_spectrum(joint)
        ))
    return float(total + von_neumann_entropy(avg_out))


def entropy_gain(channel: Channel, rho: DensityMatrix) -> float:
    """S(Phi (x) I (phi_rho)) - S(rho) for the canonical purification of rho.

    The value does not depend on which purification is used; this routine
    always builds its own from the eigendecomposition of rho.
    """
    if rho.dim != channel.dim_in:
        raise ValueError(
            f"state dimension {rho.dim} does not match channel input {channel.dim_in}"
        )
    u = purification_vector(rho)
    joint = _joint_output_vec(channel, u, rho.dim)
    return float(entropy_of_spectrum(_pos_spectrum(joint)) - von_neumann_entropy(rho))


def min_output_entropy(channel: Channel, restarts: int = 32, seed: int = 0) -> float:
    """Upper bound on min_psi S(Phi(psi)) from a seeded multi-start search."""
    value, _, _ = min_output_entropy_search(channel, restarts, seed)
    return value


def min_output_entropy_search(
    channel: Channel, restarts: int = 32, seed: int = 0
) -> tuple[float, np.ndarray, int]:
    """Multi-start minimum-output-entropy search.

    Returns (entropy, minimizing input vector, objective evaluations).  Each
    start runs the monotone cross-entropy fixed-point iteration followed by a
    gradient-free coordinate polish; start seeds derive deterministically from
    (seed, start index) so the reduction is schedule independent.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    d = channel.dim_in
    starts: list[np.ndarray] = []
    for i in range(min(d, restarts)):
        v = np.zeros(d, dtype=complex)
        v[i] = 1.0
        starts.append(v)
    starts.extend(_product_starts(channel, seed))
    best_val = np.inf
    best_vec = starts[0]
    evals = 0
    for idx in range(restarts):
        rng = np.random.default_rng([seed, idx])
        if idx < len(starts):
            v0 = starts[idx]
        else:
            v0 = rng.normal(size=d) + 1j * rng.normal(size=d)
            v0 = v0 / np.linalg.norm(v0)
        val, vec, used = _minimize_output_entropy_from(channel, v0, rng)
        evals += used
        if val < best_val - 1e-15:
            best_val = val
            best_vec = vec
    return float(best_val), best_vec, evals


def output_entropy(channel: Channel, vector: np.ndarray) -> float:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    out = sum(np.outer(k @ v, (k @ v).conj()) for k in channel.kraus)
    return entropy_of_spectrum(_pos_spectrum(out))


def _minimize_output_entropy_from(channel, v0, rng, max_iters=200, polish_steps=60):
    v = np.asarray(v0, dtype=complex).copy()
    val = output_entropy(channel, v)
    evals = 1
    patience = 0
    for _ in range(max_iters):
        out = sum(np.outer(k @ v, (k @ v).conj()) for k in channel.kraus)
        log_out = matrix_log2(out)
        score = sum(k.conj().T @ log_out @ k for k in channel.kraus)
        eigs, vecs = np.linalg.eigh((score + score.conj().T) / 2.0)
        cand = vecs[:, -1]
        cand_val = output_entropy(channel, cand)
        evals += 1
        if cand_val < val - 1e-13:
            v, val = cand, cand_val
            patience = 0
        else:
            patience += 1
            if patience >= 3:
                break
    step = 0.2
    for _ in range(polish_steps):
        cand = v + step * (rng.normal(size=v.size) + 1j * rng.normal(size=v.size))
        cand = cand / np.linalg.norm(cand)
        cand_val = output_entropy(channel, cand)
        evals += 1
        if cand_val < val - 1e-13:
            v, val = cand, cand_val
        else:
            step *= 0.8
            if step < 1e-4:
                break
    return val, v, evals


def _product_starts(channel, seed) -> list[np.ndarray]:
    origin = channel.origin or {}
    if origin.get("kind") != "tensor":
        return []
    first, second = origin["parts"]
    _, va, _ = min_output_entropy_search(first, restarts=8, seed=seed + 1)
    _, vb, _ = min_output_entropy_search(second, restarts=8, seed=seed + 2)
    return [np.kron(va, vb)]


def matrix_log2(matrix: np.ndarray, floor: float = LOG_EIG_FLOOR) -> np.ndarray:
    """log2 of a PSD matrix with eigenvalues floored away from zero."""
    herm = (matrix + matrix.conj().T) / 2.0
    eigs, vecs = np.linalg.eigh(herm)
    eigs = np.clip(eigs.real, floor, None)
    return (vecs * np.log2(eigs)) @ vecs.conj().T


def _pos_spectrum(matrix: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0)
    return np.clip(eigs, 0.0, None)


def _apply_on_first_factor(channel, joint_matrix, d_in, d_ref) -> np.ndarray:
    out_dim = channel.dim_out * d_ref
    out = np.zeros((out_dim, out_dim), dtype=complex)
    eye_ref = np.eye(d_ref, dtype=complex)
    for k in channel.kraus:
        lifted = np.kron(k, eye_ref)
        out += lifted @ joint_matrix @ lifted.conj().T
    return out


def _joint_output_vec(channel, u, d_in) -> np.ndarray:
    """(Phi (x) I)(|u><u|) for |u> on input (x) reference, without kron lifts."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    d_ref = u.size // d_in
    u_mat = u.reshape(d_in, d_ref)
    out_dim = channel.dim_out * d_ref
    out = np.zeros((out_dim, out_dim), dtype=complex)
    for k in channel.kraus:
        y = (k @ u_mat).reshape(-1)
        out += np.outer(y, y.conj())
    return out


def _check_dims(channel: Channel, ensemble: Ensemble) -> None:
    for _, sig in ensemble.items:
        if sig.dim != channel.dim_in:
            raise ValueError(
                f"signal dimension {sig.dim} does not match channel input "
                f"{channel.dim_in}"
            )
