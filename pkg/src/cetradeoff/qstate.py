"""Density matrices, entropies, purification and partial trace.

All entropies are base-2 (bits / ebits).  Multipartite states use the
row-major tensor convention of ``numpy.kron``: for a shape ``(d0, d1, ...)``
the joint index is ``i0 * d1 * d2 * ... + i1 * d2 * ... + ...``, with factor 0
leftmost.  Every other module in the package shares this convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-10
EIGENVALUE_TOL = 1e-10
TRACE_TOL = 1e-10
ENTROPY_EIG_FLOOR = 1e-15


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state: Hermitian, positive semidefinite, unit trace.

    Construct through :func:`make_density`, which performs the validation.
    Instances are immutable and safe to share between threads.
    """

    dim: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def matrix(self) -> np.ndarray:
        return self.entries


@dataclass(frozen=True)
class SubsystemShape:
    """Ordered tensor-factor dimensions of a multipartite state."""

    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims):
            raise ValueError("subsystem dimensions must be positive")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    def check_matches(self, dim: int) -> None:
        if self.total_dim != dim:
            raise ValueError(
                f"shape {self.dims} has total dimension {self.total_dim}, "
                f"state has dimension {dim}"
            )


def make_density(entries: np.ndarray) -> DensityMatrix:
    """Validate a complex matrix as a density matrix.

    Eigenvalues in ``[-1e-10, 0)`` are treated as roundoff and accepted;
    anything more negative raises.  Raises ``ValueError`` for non-square,
    non-Hermitian or non-unit-trace input.
    """
    arr = np.asarray(entries, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    dim = arr.shape[0]
    herm_dev = np.max(np.abs(arr - arr.conj().T))
    if herm_dev > HERMITICITY_TOL:
        raise ValueError(f"matrix is not Hermitian (deviation {herm_dev:.3e})")
    tr = np.trace(arr)
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"matrix trace {tr} is not 1 within {TRACE_TOL}")
    # Work with the Hermitian part so eigvalsh sees an exactly Hermitian input.
    herm = (arr + arr.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(herm)
    if eigs[0] < -EIGENVALUE_TOL:
        raise ValueError(
            f"matrix is not positive semidefinite (min eigenvalue {eigs[0]:.3e})"
        )
    return DensityMatrix(dim=dim, entries=herm.copy())


def pure_state(vector: np.ndarray) -> DensityMatrix:
    """Rank-1 density matrix from a (normalized) state vector."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm < 1e-12:
        raise ValueError("cannot normalize a zero vector")
    v = v / norm
    return DensityMatrix(dim=v.size, entries=np.outer(v, v.conj()))


def basis_state(index: int, dim: int) -> DensityMatrix:
    """Computational basis state |index><index| in the given dimension."""
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return pure_state(v)


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(dim=dim, entries=np.eye(dim, dtype=complex) / dim)


def _clipped_spectrum(matrix: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0)
    if eigs[0] < -EIGENVALUE_TOL:
        raise ValueError(
            f"matrix is not positive semidefinite (min eigenvalue {eigs[0]:.3e})"
        )
    return np.clip(eigs, 0.0, None)


def entropy_of_spectrum(eigs: np.ndarray) -> float:
    """Base-2 entropy of a nonnegative spectrum; values < 1e-15 contribute 0."""
    lam = np.asarray(eigs, dtype=float)
    lam = lam[lam >= ENTROPY_EIG_FLOOR]
    if lam.size == 0:
        return 0.0
    return float(-np.sum(lam * np.log2(lam)))


def von_neumann_entropy(rho: DensityMatrix | np.ndarray) -> float:
    """S(rho) = -tr[rho log2 rho] in bits, via Hermitian eigendecomposition."""
    matrix = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return entropy_of_spectrum(_clipped_spectrum(matrix))


def binary_entropy(p: float) -> float:
    """H2(p) in bits, with H2(0) = H2(1) = 0."""
    if p < 0.0 or p > 1.0:
        raise ValueError(f"binary entropy argument {p} outside [0, 1]")
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def symmetric_noise_entropy(eta: float, dim_b: int) -> float:
    """Output entropy of the symmetric noise profile on a dim_b alphabet.

    Equals ``H2(((dim_b-1)/dim_b) * eta) + ((dim_b-1)/dim_b) * eta * log2(dim_b-1)``,
    ranging from 0 at eta=0 to log2(dim_b) at eta=1.
    """
    if eta < 0.0 or eta > 1.0:
        raise ValueError(f"noise parameter {eta} outside [0, 1]")
    if dim_b < 2:
        raise ValueError(f"alphabet size must be >= 2, got {dim_b}")
    frac = (dim_b - 1) / dim_b * eta
    return binary_entropy(frac) + frac * np.log2(dim_b - 1)


def purification_vector(rho: DensityMatrix) -> np.ndarray:
    """Canonical purification |phi> on system (x) reference, reference dim = dim.

    Built from the eigendecomposition: |phi> = sum_i sqrt(lam_i) |e_i>|i>.
    """
    eigs, vecs = np.linalg.eigh(rho.entries)
    eigs = np.clip(eigs, 0.0, None)
    d = rho.dim
    phi = np.zeros(d * d, dtype=complex)
    for i in range(d):
        if eigs[i] <= 0.0:
            continue
        phi += np.sqrt(eigs[i]) * np.kron(vecs[:, i], _unit(i, d))
    return phi / np.linalg.norm(phi)


def purify(rho: DensityMatrix) -> DensityMatrix:
    """Rank-1 state on system (x) reference whose system marginal is rho."""
    return pure_state(purification_vector(rho))


def partial_trace(
    state: DensityMatrix | np.ndarray,
    shape: SubsystemShape | Sequence[int],
    keep: Iterable[int],
) -> DensityMatrix:
    """Trace out every tensor factor not listed in ``keep``.

    Kept factors stay in their original order.  The shape must multiply out
    to the state dimension.
    """
    matrix = state.entries if isinstance(state, DensityMatrix) else np.asarray(state)
    if not isinstance(shape, SubsystemShape):
        shape = SubsystemShape(tuple(shape))
    shape.check_matches(matrix.shape[0])
    dims = shape.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    traced = [i for i in range(n) if i not in keep]
    tensor = matrix.reshape(dims + dims)
    for count, idx in enumerate(traced):
        # Each completed trace removes one row and one column axis.
        row_ax = idx - count
        col_ax = idx - count + (n - count)
        tensor = np.trace(tensor, axis1=row_ax, axis2=col_ax)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = tensor.reshape(d_keep, d_keep)
    return make_density(out)


def partial_trace_matrix(
    matrix: np.ndarray, dims: Sequence[int], keep: Iterable[int]
) -> np.ndarray:
    """Partial trace on a raw matrix, skipping density-matrix validation."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    traced = [i for i in range(n) if i not in keep]
    tensor = np.asarray(matrix).reshape(dims + dims)
    for count, idx in enumerate(traced):
        row_ax = idx - count
        col_ax = idx - count + (n - count)
        tensor = np.trace(tensor, axis1=row_ax, axis2=col_ax)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(d_keep, d_keep)


def _unit(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v
