"""CPTP channels in Kraus form and the constructors used throughout.

Classical channels are realized with Kraus operators ``sqrt(p(b|a)) |b><a|``
so that coherence destruction is structural rather than approximate.  Each
constructor records how it was built in ``Channel.origin`` so downstream code
(fast paths, spec round-trip) can recover the construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qstate import (
    DensityMatrix,
    SubsystemShape,
    make_density,
    partial_trace_matrix,
)

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True)
class Channel:
    """A CPTP map given by Kraus operators of shape (dim_out, dim_in)."""

    dim_in: int
    dim_out: int
    kraus: tuple[np.ndarray, ...] = field(repr=False)
    label: str = ""
    origin: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        for k in self.kraus:
            k.setflags(write=False)

    @property
    def kraus_stack(self) -> np.ndarray:
        return np.stack(self.kraus)


@dataclass(frozen=True)
class FlaggedSpec:
    """Branch channels of a flag-conditioned channel; the flag is a qubit."""

    n0: Channel
    n1: Channel
    flag_dim: int = 2

    def __post_init__(self):
        if self.n0.dim_in != self.n1.dim_in or self.n0.dim_out != self.n1.dim_out:
            raise ValueError(
                "branch channels must share input and output dimensions, got "
                f"{self.n0.dim_in}->{self.n0.dim_out} and "
                f"{self.n1.dim_in}->{self.n1.dim_out}"
            )
        if self.flag_dim != 2:
            raise ValueError("flag register is a qubit")


def _make_channel(kraus, dim_in, dim_out, label, origin=None) -> Channel:
    ops = tuple(np.ascontiguousarray(np.asarray(k, dtype=complex)) for k in kraus)
    if not ops:
        raise ValueError("a channel needs at least one Kraus operator")
    for k in ops:
        if k.shape != (dim_out, dim_in):
            raise ValueError(
                f"Kraus operator shape {k.shape} does not match ({dim_out}, {dim_in})"
            )
    total = sum(k.conj().T @ k for k in ops)
    dev = np.max(np.abs(total - np.eye(dim_in)))
    if dev > COMPLETENESS_TOL:
        raise ValueError(f"Kraus set is not trace preserving (deviation {dev:.3e})")
    return Channel(dim_in=dim_in, dim_out=dim_out, kraus=ops, label=label, origin=origin)


def apply(channel: Channel, rho: DensityMatrix) -> DensityMatrix:
    """Evaluate the channel on a state: sum_K K rho K^dag."""
    if rho.dim != channel.dim_in:
        raise ValueError(
            f"state dimension {rho.dim} does not match channel input {channel.dim_in}"
        )
    out = apply_matrix(channel, rho.entries)
    return make_density((out + out.conj().T) / 2.0)


def apply_matrix(channel: Channel, matrix: np.ndarray) -> np.ndarray:
    """Raw Kraus action sum_K K M K^dag; works for non-Hermitian M too."""
    out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    for k in channel.kraus:
        out += k @ matrix @ k.conj().T
    return out


def apply_extended(
    channel: Channel,
    state: DensityMatrix,
    shape: SubsystemShape | Sequence[int],
    acting: int,
) -> DensityMatrix:
    """Apply channel (x) identity, with the channel on tensor factor ``acting``."""
    if not isinstance(shape, SubsystemShape):
        shape = SubsystemShape(tuple(shape))
    shape.check_matches(state.dim)
    dims = shape.dims
    if acting < 0 or acting >= len(dims):
        raise ValueError(f"acting index {acting} out of range")
    if dims[acting] != channel.dim_in:
        raise ValueError(
            f"factor {acting} has dimension {dims[acting]}, channel expects "
            f"{channel.dim_in}"
        )
    pre = int(np.prod(dims[:acting])) if acting > 0 else 1
    post = int(np.prod(dims[acting + 1:])) if acting + 1 < len(dims) else 1
    out_dim = pre * channel.dim_out * post
    out = np.zeros((out_dim, out_dim), dtype=complex)
    eye_pre = np.eye(pre, dtype=complex)
    eye_post = np.eye(post, dtype=complex)
    for k in channel.kraus:
        lifted = np.kron(np.kron(eye_pre, k), eye_post)
        out += lifted @ state.entries @ lifted.conj().T
    return make_density((out + out.conj().T) / 2.0)


def identity_channel(dim: int) -> Channel:
    return _make_channel(
        [np.eye(dim, dtype=complex)], dim, dim, f"identity({dim})",
        origin={"kind": "identity", "dim": dim},
    )


def classical_channel(transition: np.ndarray, label: str = "", origin=None) -> Channel:
    """Channel from a column-stochastic transition matrix p(b|a) = transition[b, a]."""
    t = np.asarray(transition, dtype=float)
    dim_out, dim_in = t.shape
    if np.any(t < -1e-12):
        raise ValueError("transition probabilities must be nonnegative")
    col_sums = t.sum(axis=0)
    if np.max(np.abs(col_sums - 1.0)) > 1e-10:
        raise ValueError("transition matrix columns must sum to 1")
    kraus = []
    for a in range(dim_in):
        for b in range(dim_out):
            p = t[b, a]
            if p <= 0.0:
                continue
            k = np.zeros((dim_out, dim_in), dtype=complex)
            k[b, a] = np.sqrt(p)
            kraus.append(k)
    return _make_channel(kraus, dim_in, dim_out, label, origin)


def classical_symmetric(dim_b: int, eta: float) -> Channel:
    """Symmetric classical noise on a dim_b alphabet.

    Basis state k maps to (1 - eta)|k><k| + eta * I/dim_b; coherences are
    destroyed structurally.
    """
    if dim_b < 2:
        raise ValueError(f"alphabet size must be >= 2, got {dim_b}")
    if eta < 0.0 or eta > 1.0:
        raise ValueError(f"noise parameter {eta} outside [0, 1]")
    t = np.full((dim_b, dim_b), eta / dim_b)
    t[np.diag_indices(dim_b)] += 1.0 - eta
    return classical_channel(
        t, label=f"symmetric(|B|={dim_b}, eta={eta})",
        origin={"kind": "classical_symmetric", "dim_b": dim_b, "eta": eta},
    )


def n0_embedding(dim_a: int, dim_b: int, eta: float) -> Channel:
    """Classical channel on an enlarged input alphabet.

    The first dim_b symbols behave like the symmetric channel; the extra
    symbols map to the uniform output and are useless for signalling.
    """
    if dim_a <= dim_b:
        raise ValueError(f"need dim_a > dim_b, got {dim_a} <= {dim_b}")
    t = np.full((dim_b, dim_a), eta / dim_b)
    for k in range(dim_b):
        t[k, k] += 1.0 - eta
    t[:, dim_b:] = 1.0 / dim_b
    return classical_channel(
        t, label=f"embedded(|A|={dim_a}, |B|={dim_b}, eta={eta})",
        origin={"kind": "n0_embedding", "dim_a": dim_a, "dim_b": dim_b, "eta": eta},
    )


def dephasing(lam: float) -> Channel:
    """Qubit dephasing: rho -> (1 - lam) rho + lam Z rho Z."""
    if lam < 0.0 or lam > 1.0:
        raise ValueError(f"dephasing parameter {lam} outside [0, 1]")
    z = np.diag([1.0, -1.0]).astype(complex)
    kraus = []
    if lam < 1.0:
        kraus.append(np.sqrt(1.0 - lam) * np.eye(2, dtype=complex))
    if lam > 0.0:
        kraus.append(np.sqrt(lam) * z)
    return _make_channel(
        kraus, 2, 2, f"dephasing(lambda={lam})",
        origin={"kind": "dephasing", "lam": lam},
    )


def heisenberg_weyl(d: int) -> list[np.ndarray]:
    """The d^2 shift/clock unitaries W(a, b) = shift^a clock^b, a, b in [0, d).

    The clock eigenvalues are exp(2 pi i k / d); global phases are left
    unconstrained.  Returned in index order j = a * d + b, so the first
    element is the identity.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    shift = np.zeros((d, d), dtype=complex)
    for k in range(d):
        shift[(k + 1) % d, k] = 1.0
    omega = np.exp(2j * np.pi / d)
    clock = np.diag(omega ** np.arange(d))
    ops = []
    for a in range(d):
        for b in range(d):
            ops.append(np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b))
    return ops


def covariant_extend(inner: Channel) -> Channel:
    """Lift a square channel E on C to F on R (x) C with |R| = |C|^2.

    F(|j><j| (x) rho) = W_j E(rho) W_j^dag with W_j the shift/clock unitaries;
    the classical register R is dephased by construction.
    """
    if inner.dim_in != inner.dim_out:
        raise ValueError(
            f"inner channel must be square, got {inner.dim_in}->{inner.dim_out}"
        )
    d = inner.dim_in
    r = d * d
    unitaries = heisenberg_weyl(d)
    eye_c = np.eye(d, dtype=complex)
    kraus = []
    for j in range(r):
        sel = np.zeros((1, r), dtype=complex)
        sel[0, j] = 1.0
        proj = np.kron(sel, eye_c)  # maps R (x) C onto the C block at R = j
        for k in inner.kraus:
            kraus.append(unitaries[j] @ k @ proj)
    return _make_channel(
        kraus, r * d, d, f"covariant[{inner.label}]",
        origin={"kind": "covariant_extend", "inner": inner},
    )


def flagged(spec: FlaggedSpec) -> Channel:
    """Flag-conditioned channel on M (x) A; M selects which branch acts.

    Kraus operators are branch operators composed with <0|_M or <1|_M, so the
    output depends only on the M-diagonal blocks of the input.
    """
    n0, n1 = spec.n0, spec.n1
    dim_a, dim_b = n0.dim_in, n0.dim_out
    eye_a = np.eye(dim_a, dtype=complex)
    kraus = []
    for flag, branch in ((0, n0), (1, n1)):
        sel = np.zeros((1, 2), dtype=complex)
        sel[0, flag] = 1.0
        proj = np.kron(sel, eye_a)
        for k in branch.kraus:
            kraus.append(k @ proj)
    return _make_channel(
        kraus, 2 * dim_a, dim_b, f"flagged[{n0.label} | {n1.label}]",
        origin={"kind": "flagged", "n0": n0, "n1": n1},
    )


def tensor(first: Channel, second: Channel) -> Channel:
    """Tensor product channel; the Kraus set is all pairwise products."""
    kraus = [np.kron(a, b) for a in first.kraus for b in second.kraus]
    return _make_channel(
        kraus,
        first.dim_in * second.dim_in,
        first.dim_out * second.dim_out,
        f"({first.label}) (x) ({second.label})",
        origin={"kind": "tensor", "parts": (first, second)},
    )


def tensor_power(channel: Channel, n: int) -> Channel:
    out = channel
    for _ in range(n - 1):
        out = tensor(out, channel)
    return out


def random_channel(dim_in: int, dim_out: int, env_dim: int, seed: int) -> Channel:
    """Seeded random channel from an orthonormalized Gaussian isometry.

    The Stinespring isometry into output (x) environment is the Q factor of a
    complex Gaussian matrix; the same seed always gives the same Kraus set.
    """
    if dim_in < 1 or dim_out < 1 or env_dim < 1:
        raise ValueError("dimensions must be positive")
    if dim_out * env_dim < dim_in:
        raise ValueError(
            f"need dim_out * env_dim >= dim_in for an isometry, got "
            f"{dim_out} * {env_dim} < {dim_in}"
        )
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim_out * env_dim, dim_in)) + 1j * rng.normal(
        size=(dim_out * env_dim, dim_in)
    )
    isometry, _ = np.linalg.qr(g)
    blocks = isometry.reshape(dim_out, env_dim, dim_in)
    kraus = [np.ascontiguousarray(blocks[:, e, :]) for e in range(env_dim)]
    return _make_channel(
        kraus, dim_in, dim_out,
        f"random({dim_in}->{dim_out}, env={env_dim}, seed={seed})",
        origin={
            "kind": "random",
            "dim_in": dim_in,
            "dim_out": dim_out,
            "env_dim": env_dim,
            "seed": seed,
        },
    )


def kraus_literal(kraus: Sequence[np.ndarray], label: str = "kraus_literal") -> Channel:
    ops = [np.asarray(k, dtype=complex) for k in kraus]
    dim_out, dim_in = ops[0].shape
    return _make_channel(ops, dim_in, dim_out, label, origin={"kind": "kraus_literal"})


def choi_matrix(channel: Channel) -> np.ndarray:
    """Choi matrix J[(a,b),(a',b')] = <b| Phi(|a><a'|) |b'> (input index first)."""
    d_in, d_out = channel.dim_in, channel.dim_out
    j = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for k in channel.kraus:
        w = k.T.reshape(-1)  # w[(a, b)] = K[b, a]
        j += np.outer(w, w.conj())
    return j


def is_classical(channel: Channel, tol: float = 1e-10) -> bool:
    """True when the Choi matrix is diagonal, i.e. the channel only moves
    basis-diagonal probability mass."""
    j = choi_matrix(channel)
    off = j - np.diag(np.diag(j))
    return bool(np.max(np.abs(off)) <= tol)


def transition_matrix(channel: Channel) -> np.ndarray:
    """p(b|a) of a classical channel; raises for non-classical input."""
    if not is_classical(channel):
        raise ValueError(f"channel {channel.label!r} is not classical")
    d_in, d_out = channel.dim_in, channel.dim_out
    t = np.zeros((d_out, d_in))
    for k in channel.kraus:
        t += np.abs(k) ** 2
    return t


def dephasing_projector(dim: int) -> Channel:
    """The noiseless classical channel: full dephasing in the computational basis."""
    return classical_channel(np.eye(dim), label=f"dephase({dim})",
                             origin={"kind": "dephase", "dim": dim})


def is_partial_cq(channel: Channel, dim_r: int, tol: float = 1e-10) -> bool:
    """Check invariance under dephasing of the leading register of size dim_r."""
    if channel.dim_in % dim_r != 0:
        return False
    dim_c = channel.dim_in // dim_r
    probe = np.zeros_like(choi_matrix(channel))
    # Choi of channel
    direct = choi_matrix(channel)
    # Choi of channel composed with (dephase_R (x) I_C)
    for a in range(channel.dim_in):
        for a2 in range(channel.dim_in):
            r1, c1 = divmod(a, dim_c)
            r2, c2 = divmod(a2, dim_c)
            if r1 != r2:
                continue  # dephasing kills R-coherent input blocks
            basis_op = np.zeros((channel.dim_in, channel.dim_in), dtype=complex)
            basis_op[a, a2] = 1.0
            out = apply_matrix(channel, basis_op)
            block = np.outer(
                _unit_vec(a, channel.dim_in), _unit_vec(a2, channel.dim_in).conj()
            )
            probe += np.kron(block, out)
    return bool(np.max(np.abs(direct - probe)) <= tol)


def _unit_vec(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v
