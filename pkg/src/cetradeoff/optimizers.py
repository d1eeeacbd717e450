"""Capacity optimizers.

``classical_capacity`` runs an alternating (Blahut-Arimoto) iteration on the
stochastic matrix induced by a classical channel, with the standard two-sided
stopping bound.

``c1`` and ``c1_assisted`` maximize the (assisted) Holevo quantity over
ensembles by multi-start hill climbing: multiplicative weight updates and
per-signal eigenvector proposals derived from the linearized objective, each
accepted only when the objective improves, plus a random coordinate polish.
Structured starting ensembles are derived from the channel construction
(flag branches, tensor factors, covariant register structure, shift/clock
conjugate families), so the searches start near the known achievability
structures and every reported value is certified by re-evaluating the
functional on the returned witness.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .channels import (
    Channel,
    apply_matrix,
    heisenberg_weyl,
    tensor,
    tensor_power,
    transition_matrix,
)
from .functionals import (
    Ensemble,
    chi_assist,
    ensemble_from_pure,
    ensemble_from_purification_vectors,
    holevo_chi,
    matrix_log2,
    min_output_entropy_search,
)
from .qstate import (
    DensityMatrix,
    entropy_of_spectrum,
    make_density,
    purification_vector,
    von_neumann_entropy,
)

DEAD_WEIGHT = 1e-12
ACCEPT_EPS = 1e-10
STALL_ITERS = 50
FEAS_TOL = 1e-9


class DimensionCapError(ValueError):
    """Raised when a requested computation exceeds the desk-scale dimension cap."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Knobs for the ensemble searches.

    ``ensemble_size_cap`` of None means the default of dim_in^2 signals.
    ``lagrange_grid`` holds the hinge-penalty weights used for the entropy
    budget; any value above 1 is an exact penalty here because one ebit of
    extra signal entropy never buys more than one bit of rate.
    """

    ensemble_size_cap: int | None = None
    restarts: int = 8
    max_iters: int = 300
    tol: float = 1e-6
    seed: int = 0
    lagrange_grid: tuple[float, ...] = (2.0,)
    threads: int = 1

    def __post_init__(self):
        if self.ensemble_size_cap is not None and self.ensemble_size_cap < 1:
            raise ValueError("ensemble_size_cap must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if any(m < 0 for m in self.lagrange_grid):
            raise ValueError("lagrange_grid entries must be nonnegative")


@dataclass(frozen=True)
class CapacityResult:
    value: float
    witness: Ensemble
    converged: bool
    evaluations: int
    extra: dict = field(default_factory=dict, compare=False)


def default_cap(channel: Channel, cfg: OptimizerConfig) -> int:
    return cfg.ensemble_size_cap or channel.dim_in ** 2


# ---------------------------------------------------------------------------
# classical capacity (Blahut-Arimoto on the induced stochastic matrix)
# ---------------------------------------------------------------------------

def classical_capacity(channel: Channel, tol: float = 1e-6) -> CapacityResult:
    """Capacity of a classical channel with a certified two-sided bound.

    Rejects channels whose Choi matrix is not diagonal.  The witness is a
    basis-state ensemble carrying the optimized prior.
    """
    t = transition_matrix(channel)  # (dim_out, dim_in), validates classicality
    dim_out, dim_in = t.shape
    r = np.full(dim_in, 1.0 / dim_in)
    iters = 0
    converged = False
    for iters in range(1, 20000):
        out = t @ r
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where((t > 0) & (out[:, None] > 0), t / out[:, None], 1.0)
            d_bits = np.sum(t * np.log2(ratio), axis=0)
        c_low = float(r @ d_bits)
        c_up = float(np.max(d_bits))
        if c_up - c_low < tol:
            converged = True
            break
        r = r * np.exp2(d_bits - np.max(d_bits))
        r = r / r.sum()
    keep = r > DEAD_WEIGHT
    weights = r[keep] / r[keep].sum()
    vectors = [_unit(a, dim_in) for a in np.nonzero(keep)[0]]
    witness = ensemble_from_pure(vectors, weights)
    value = holevo_chi(channel, witness)
    return CapacityResult(
        value=value, witness=witness, converged=converged, evaluations=iters
    )


# ---------------------------------------------------------------------------
# ensemble search engine
# ---------------------------------------------------------------------------

def _entropy_rows(matrices: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh(matrices)
    eigs = np.clip(eigs, 0.0, None)
    plogp = np.where(eigs > 1e-15, eigs * np.log2(np.where(eigs > 0, eigs, 1.0)), 0.0)
    return -plogp.sum(axis=-1)


class _PureProblem:
    """Holevo quantity over ensembles of pure signals."""

    def __init__(self, channel: Channel):
        self.kraus = channel.kraus_stack  # (nk, dout, din)
        self.d_in = channel.dim_in
        self.d_out = channel.dim_out
        self.evals = 0

    def outputs(self, vectors: np.ndarray) -> np.ndarray:
        y = np.matmul(self.kraus, vectors.T).transpose(2, 0, 1)  # (m, k, o)
        return np.matmul(y.transpose(0, 2, 1), y.conj())

    def init_state(self, weights, vectors):
        v = np.array(vectors, dtype=complex)
        w = np.asarray(weights, dtype=float)
        outs = self.outputs(v)
        s_out = _entropy_rows(outs)
        st = {
            "w": w.copy(), "V": v, "outs": outs, "S": s_out,
            "sbar": np.tensordot(w, outs, axes=([0], [0])), "logsbar": None,
        }
        st["obj"] = self._objective(st)
        return st

    def _objective(self, st) -> float:
        self.evals += 1
        return float(
            entropy_of_spectrum(np.clip(np.linalg.eigvalsh(st["sbar"]), 0, None))
            - st["w"] @ st["S"]
        )

    def _logsbar(self, st) -> np.ndarray:
        if st["logsbar"] is None:
            st["logsbar"] = matrix_log2(st["sbar"])
        return st["logsbar"]

    def weight_step(self, st, mu=None, budget=None) -> bool:
        logsbar = self._logsbar(st)
        cross = (st["outs"].reshape(len(st["w"]), -1) @ logsbar.T.reshape(-1)).real
        g = -st["S"] - cross
        return self._try_weights(st, g)

    def _try_weights(self, st, g) -> bool:
        improved = False
        for eta in (1.0, 0.5, 0.25):
            w_try = st["w"] * np.exp2(eta * (g - g.max()))
            total = w_try.sum()
            if total <= 0:
                continue
            w_try /= total
            obj_try = self._weights_objective(st, w_try)
            if obj_try > st["obj"] + ACCEPT_EPS:
                self._commit_weights(st, w_try, obj_try)
                improved = True
                break
        return improved

    def _weights_objective(self, st, w_try) -> float:
        self.evals += 1
        sbar = np.tensordot(w_try, st["outs"], axes=([0], [0]))
        return float(
            entropy_of_spectrum(np.clip(np.linalg.eigvalsh(sbar), 0, None))
            - w_try @ st["S"]
        )

    def _commit_weights(self, st, w_new, obj_new):
        st["w"] = w_new
        st["sbar"] = np.tensordot(w_new, st["outs"], axes=([0], [0]))
        st["logsbar"] = None
        st["obj"] = obj_new
        if "cooldown" in st:
            st["cooldown"][:] = 0

    def propose_vector(self, st, i) -> np.ndarray:
        a = matrix_log2(st["outs"][i]) - self._logsbar(st)
        score = np.zeros((self.d_in, self.d_in), dtype=complex)
        for k in self.kraus:
            score += k.conj().T @ a @ k
        _, vecs = np.linalg.eigh((score + score.conj().T) / 2.0)
        return vecs[:, -1]

    def try_vector(self, st, i, vec) -> bool:
        vec = vec / np.linalg.norm(vec)
        out_new = self.outputs(vec[None, :])[0]
        s_new = float(_entropy_rows(out_new[None])[0])
        sbar_new = st["sbar"] + st["w"][i] * (out_new - st["outs"][i])
        obj_new = float(
            entropy_of_spectrum(np.clip(np.linalg.eigvalsh(sbar_new), 0, None))
            - (st["w"] @ st["S"] - st["w"][i] * (st["S"][i] - s_new))
        )
        self.evals += 1
        if obj_new > st["obj"] + ACCEPT_EPS:
            st["V"][i] = vec
            st["outs"][i] = out_new
            st["S"][i] = s_new
            st["sbar"] = sbar_new
            st["logsbar"] = None
            st["obj"] = obj_new
            return True
        return False

    def state_step(self, st, i) -> bool:
        cooldown = st.setdefault("cooldown", np.zeros(len(st["w"]), dtype=int))
        if cooldown[i] > 0:
            cooldown[i] -= 1
            return False
        if st["w"][i] < DEAD_WEIGHT:
            return False
        accepted = _try_toward(self, st, i, st["V"][i], self.propose_vector(st, i))
        cooldown[i] = 0 if accepted else 3
        return accepted

    def random_vector(self, rng) -> np.ndarray:
        v = rng.normal(size=self.d_in) + 1j * rng.normal(size=self.d_in)
        return v / np.linalg.norm(v)

    def polish(self, st, rng, step: float) -> tuple[bool, float]:
        improved = False
        m = len(st["w"])
        for _ in range(2):
            i = int(rng.integers(m))
            if st["w"][i] < DEAD_WEIGHT:
                continue
            scale = 10.0 ** rng.uniform(-3.0, -0.5)
            noise = rng.normal(size=self.d_in) + 1j * rng.normal(size=self.d_in)
            if self.try_vector(st, i, st["V"][i] + scale * noise):
                improved = True
        g = rng.normal(size=m) * step
        if self._try_weights(st, g):
            improved = True
        return improved, step

    def revive_slot(self, st, rng) -> bool:
        m = len(st["w"])
        i = int(np.argmin(st["w"]))
        vec = self.random_vector(rng)
        w_try = st["w"].copy()
        w_try[i] += max(0.05, 1.0 / m)
        w_try /= w_try.sum()
        out_new = self.outputs(vec[None, :])[0]
        s_new = float(_entropy_rows(out_new[None])[0])
        outs = st["outs"].copy()
        outs[i] = out_new
        s_all = st["S"].copy()
        s_all[i] = s_new
        sbar = np.tensordot(w_try, outs, axes=([0], [0]))
        obj_new = float(
            entropy_of_spectrum(np.clip(np.linalg.eigvalsh(sbar), 0, None))
            - w_try @ s_all
        )
        self.evals += 1
        if obj_new > st["obj"] + ACCEPT_EPS:
            st["w"], st["outs"], st["S"], st["sbar"] = w_try, outs, s_all, sbar
            st["V"][i] = vec
            st["logsbar"] = None
            st["obj"] = obj_new
            return True
        return False

    def snapshot(self, st):
        return st["w"].copy(), st["V"].copy(), st["obj"]


class _AssistProblem:
    """Penalized assisted Holevo quantity over mixed signals.

    Signals are parameterized by purification vectors with reference
    dimension d_in; the budget enters as a hinge penalty mu * max(0, Sav - P).
    """

    def __init__(self, channel: Channel, budget: float, mu: float):
        self.kraus = channel.kraus_stack
        self.d_in = channel.dim_in
        self.d_out = channel.dim_out
        self.d_ref = channel.dim_in
        self.budget = budget
        self.mu = mu
        self.evals = 0

    def _signal_quantities(self, u: np.ndarray):
        u_mat = u.reshape(self.d_in, self.d_ref)
        sv = np.linalg.svd(u_mat, compute_uv=False)
        spec = np.clip(sv, 0.0, None) ** 2
        s_in = entropy_of_spectrum(spec)
        y = np.matmul(self.kraus, u_mat).reshape(len(self.kraus), -1)
        joint = y.T @ y.conj()
        s_joint = float(_entropy_rows(joint[None])[0])
        j4 = joint.reshape(self.d_out, self.d_ref, self.d_out, self.d_ref)
        out = np.trace(j4, axis1=1, axis2=3)
        return s_in, joint, s_joint, out

    def init_state(self, weights, vectors):
        u = np.array(vectors, dtype=complex)
        w = np.asarray(weights, dtype=float)
        s_in = np.zeros(len(w))
        s_joint = np.zeros(len(w))
        joints = np.zeros((len(w), self.d_out * self.d_ref,
                           self.d_out * self.d_ref), dtype=complex)
        outs = np.zeros((len(w), self.d_out, self.d_out), dtype=complex)
        for i in range(len(w)):
            s_in[i], joints[i], s_joint[i], outs[i] = self._signal_quantities(u[i])
        st = {
            "w": w.copy(), "U": u, "S_in": s_in, "S_joint": s_joint,
            "joints": joints, "outs": outs,
            "sbar": np.tensordot(w, outs, axes=([0], [0])), "logsbar": None,
        }
        st["obj"] = self._objective_from(st, w, s_in, s_joint, st["sbar"])
        return st

    def _objective_from(self, st, w, s_in, s_joint, sbar) -> float:
        self.evals += 1
        sav = float(w @ s_in)
        chi = float(
            w @ (s_in - s_joint)
            + entropy_of_spectrum(np.clip(np.linalg.eigvalsh(sbar), 0, None))
        )
        return chi - self.mu * max(0.0, sav - self.budget)

    def chi_and_sav(self, st) -> tuple[float, float]:
        sav = float(st["w"] @ st["S_in"])
        chi = st["obj"] + self.mu * max(0.0, sav - self.budget)
        return chi, sav

    def _logsbar(self, st):
        if st["logsbar"] is None:
            st["logsbar"] = matrix_log2(st["sbar"])
        return st["logsbar"]

    def weight_step(self, st) -> bool:
        logsbar = self._logsbar(st)
        cross = (st["outs"].reshape(len(st["w"]), -1) @ logsbar.T.reshape(-1)).real
        infeasible = float(st["w"] @ st["S_in"]) > self.budget
        g = st["S_in"] - st["S_joint"] - cross
        if infeasible:
            g = g - self.mu * st["S_in"]
        return self._try_weights(st, g)

    def _try_weights(self, st, g) -> bool:
        for eta in (1.0, 0.5, 0.25):
            w_try = st["w"] * np.exp2(eta * (g - g.max()))
            total = w_try.sum()
            if total <= 0:
                continue
            w_try /= total
            sbar = np.tensordot(w_try, st["outs"], axes=([0], [0]))
            obj_try = self._objective_from(st, w_try, st["S_in"], st["S_joint"], sbar)
            if obj_try > st["obj"] + ACCEPT_EPS:
                st["w"] = w_try
                st["sbar"] = sbar
                st["logsbar"] = None
                st["obj"] = obj_try
                if "cooldown" in st:
                    st["cooldown"][:] = 0
                return True
        return False

    def propose_vector(self, st, i) -> np.ndarray:
        u_mat = st["U"][i].reshape(self.d_in, self.d_ref)
        rho = u_mat @ u_mat.conj().T
        infeasible = float(st["w"] @ st["S_in"]) > self.budget
        c_s = 1.0 - (self.mu if infeasible else 0.0)
        log_rho = matrix_log2(rho)
        log_joint = matrix_log2(st["joints"][i])
        x4 = log_joint.reshape(self.d_out, self.d_ref, self.d_out, self.d_ref)
        lifted = np.zeros((self.d_in, self.d_ref, self.d_in, self.d_ref),
                          dtype=complex)
        logsbar = self._logsbar(st)
        phi_log = np.zeros((self.d_in, self.d_in), dtype=complex)
        for k in self.kraus:
            tmp = np.tensordot(k.conj(), x4, axes=([0], [0]))  # (i, r, p, s)
            tmp = np.tensordot(tmp, k, axes=([2], [0]))  # (i, r, s, j)
            lifted += tmp.transpose(0, 1, 3, 2)
            phi_log += k.conj().T @ logsbar @ k
        lifted = lifted.reshape(self.d_in * self.d_ref, self.d_in * self.d_ref)
        eye = np.eye(self.d_ref)
        grad = (-c_s * np.kron(log_rho, eye) + lifted - np.kron(phi_log, eye))
        _, vecs = np.linalg.eigh((grad + grad.conj().T) / 2.0)
        return vecs[:, -1]

    def try_vector(self, st, i, u_new) -> bool:
        u_new = u_new / np.linalg.norm(u_new)
        s_in_new, joint_new, s_joint_new, out_new = self._signal_quantities(u_new)
        w = st["w"]
        s_in = st["S_in"].copy()
        s_joint = st["S_joint"].copy()
        s_in[i], s_joint[i] = s_in_new, s_joint_new
        sbar_new = st["sbar"] + w[i] * (out_new - st["outs"][i])
        obj_new = self._objective_from(st, w, s_in, s_joint, sbar_new)
        if obj_new > st["obj"] + ACCEPT_EPS:
            st["U"][i] = u_new
            st["S_in"], st["S_joint"] = s_in, s_joint
            st["joints"][i] = joint_new
            st["outs"][i] = out_new
            st["sbar"] = sbar_new
            st["logsbar"] = None
            st["obj"] = obj_new
            return True
        return False

    def state_step(self, st, i) -> bool:
        cooldown = st.setdefault("cooldown", np.zeros(len(st["w"]), dtype=int))
        if cooldown[i] > 0:
            cooldown[i] -= 1
            return False
        if st["w"][i] < DEAD_WEIGHT:
            return False
        accepted = _try_toward(self, st, i, st["U"][i], self.propose_vector(st, i))
        cooldown[i] = 0 if accepted else 3
        return accepted

    def random_vector(self, rng) -> np.ndarray:
        n = self.d_in * self.d_ref
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        return v / np.linalg.norm(v)

    def polish(self, st, rng, step: float) -> tuple[bool, float]:
        improved = False
        m = len(st["w"])
        for _ in range(2):
            i = int(rng.integers(m))
            if st["w"][i] < DEAD_WEIGHT:
                continue
            scale = 10.0 ** rng.uniform(-3.0, -0.5)
            n = self.d_in * self.d_ref
            noise = rng.normal(size=n) + 1j * rng.normal(size=n)
            if self.try_vector(st, i, st["U"][i] + scale * noise):
                improved = True
        g = rng.normal(size=m) * step
        if self._try_weights(st, g):
            improved = True
        return improved, step

    def revive_slot(self, st, rng) -> bool:
        i = int(np.argmin(st["w"]))
        vec = self.random_vector(rng)
        w_try = st["w"].copy()
        w_try[i] += max(0.05, 1.0 / len(w_try))
        w_try /= w_try.sum()
        s_in_new, joint_new, s_joint_new, out_new = self._signal_quantities(vec)
        s_in = st["S_in"].copy()
        s_joint = st["S_joint"].copy()
        s_in[i], s_joint[i] = s_in_new, s_joint_new
        outs = st["outs"].copy()
        outs[i] = out_new
        sbar = np.tensordot(w_try, outs, axes=([0], [0]))
        obj_new = self._objective_from(st, w_try, s_in, s_joint, sbar)
        if obj_new > st["obj"] + ACCEPT_EPS:
            st["w"], st["S_in"], st["S_joint"] = w_try, s_in, s_joint
            st["U"][i] = vec
            st["joints"][i] = joint_new
            st["outs"] = outs
            st["sbar"] = sbar
            st["logsbar"] = None
            st["obj"] = obj_new
            return True
        return False

    def snapshot(self, st):
        return st["w"].copy(), st["U"].copy(), st["obj"]


def _try_toward(problem, st, i, current, proposal) -> bool:
    """Try the full eigenvector jump, then fractional steps toward it.

    The proposal's global phase is aligned with the current vector first so
    the interpolation is meaningful.
    """
    overlap = np.vdot(proposal, current)
    if abs(overlap) > 1e-12:
        proposal = proposal * (overlap / abs(overlap))
    if problem.try_vector(st, i, proposal):
        return True
    for alpha in (0.35, 0.12, 0.04):
        cand = (1.0 - alpha) * current + alpha * proposal
        norm = np.linalg.norm(cand)
        if norm < 1e-9:
            continue
        if problem.try_vector(st, i, cand / norm):
            return True
    return False


def _climb(problem, weights, vectors, cfg: OptimizerConfig, rng,
           feasible_tracker=None) -> tuple[tuple, bool]:
    """Monotone ascent from one starting ensemble.

    Returns ((weights, vectors, objective), stalled) with stalled True when the
    run stopped on the stall criterion rather than the iteration cap.
    """
    st = problem.init_state(weights, vectors)
    if feasible_tracker is not None:
        feasible_tracker(problem, st)
    best_obj = st["obj"]
    stall = 0
    stalled = False
    step = 0.15
    m = len(st["w"])
    for it in range(cfg.max_iters):
        problem.weight_step(st)
        for i in range(m):
            problem.state_step(st, i)
        _, step = problem.polish(st, rng, step)
        if it % 8 == 7:
            problem.revive_slot(st, rng)
        if it % 25 == 24:
            # refresh the running average against drift
            st["sbar"] = np.tensordot(st["w"], st["outs"], axes=([0], [0]))
            st["logsbar"] = None
        if feasible_tracker is not None:
            feasible_tracker(problem, st)
        if st["obj"] > best_obj + cfg.tol:
            best_obj = st["obj"]
            stall = 0
        else:
            stall += 1
            if stall >= STALL_ITERS:
                stalled = True
                break
    return problem.snapshot(st), stalled


def _run_starts(make_problem: Callable, starts, cfg: OptimizerConfig,
                feasible_tracker=None):
    """Run all starts (optionally on a thread pool) and reduce deterministically."""

    def run_one(idx_start):
        idx, (w0, v0) = idx_start
        problem = make_problem()
        rng = np.random.default_rng([cfg.seed, 7919, idx])
        snap, stalled = _climb(problem, w0, v0, cfg, rng,
                               feasible_tracker=feasible_tracker)
        return idx, snap, stalled, problem.evals

    indexed = list(enumerate(starts))
    if cfg.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            outcomes = list(pool.map(run_one, indexed))
    else:
        outcomes = [run_one(x) for x in indexed]
    outcomes.sort(key=lambda o: o[0])
    best = None
    stalled_any = False
    evals = 0
    for idx, snap, stalled, used in outcomes:
        evals += used
        stalled_any = stalled_any or stalled
        if best is None or snap[2] > best[2] + 1e-15:
            best = snap
    return best, stalled_any, evals


# ---------------------------------------------------------------------------
# structured starting ensembles
# ---------------------------------------------------------------------------

def _unit(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def _uniform(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def mixedness_for_entropy(dim: int, target: float) -> np.ndarray:
    """Spectrum of (1-t)|0><0| + t I/dim with entropy ``target``, via bisection."""
    target = min(max(target, 0.0), np.log2(dim))

    def spectrum(t):
        s = np.full(dim, t / dim)
        s[0] += 1.0 - t
        return s

    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = (lo + hi) / 2.0
        if entropy_of_spectrum(spectrum(mid)) < target:
            lo = mid
        else:
            hi = mid
    return spectrum((lo + hi) / 2.0)


def _state_with_entropy(dim: int, target: float) -> DensityMatrix:
    return make_density(np.diag(mixedness_for_entropy(dim, target)).astype(complex))


def _hw_family_vectors(dim: int, target_entropy: float) -> list[np.ndarray]:
    """Purification vectors of the shift/clock conjugates of one mixed state."""
    rho = _state_with_entropy(dim, target_entropy)
    base = purification_vector(rho)
    eye = np.eye(dim, dtype=complex)
    return [np.kron(w, eye) @ base for w in heisenberg_weyl(dim)]


def _embed_ref(u: np.ndarray, d_sig: int, d_ref_target: int) -> np.ndarray:
    """Pad the reference factor of a purification vector up to d_ref_target."""
    d_ref = u.size // d_sig
    if d_ref == d_ref_target:
        return u
    u_mat = u.reshape(d_sig, d_ref)
    out = np.zeros((d_sig, d_ref_target), dtype=complex)
    out[:, :d_ref] = u_mat
    return out.reshape(-1)


def _pure_structured_starts(channel: Channel, cap: int, cfg: OptimizerConfig,
                            depth: int = 0):
    d = channel.dim_in
    origin = channel.origin or {}
    starts = []
    kind = origin.get("kind")
    if kind == "flagged":
        n0, n1 = origin["n0"], origin["n1"]
        da = n0.dim_in
        both = [np.kron(_unit(f, 2), _unit(a, da)) for f in (0, 1) for a in range(da)]
        starts.append((_uniform(len(both)), both))
    elif kind == "tensor":
        parts = origin["parts"]
        branch_vecs = []
        sub_cfg = replace(cfg, restarts=max(3, cfg.restarts // 2),
                           max_iters=max(60, cfg.max_iters // 2), threads=1)
        cache: dict[int, tuple] = {}
        for part in parts:
            key = id(part)
            if key not in cache:
                if depth >= 3:
                    vecs = [_unit(a, part.dim_in) for a in range(part.dim_in)]
                    wts = np.full(len(vecs), 1.0 / len(vecs))
                else:
                    res = c1(part, sub_cfg, _depth=depth + 1)
                    vecs, wts = _pure_vectors_from_witness(res.witness)
                cache[key] = (vecs, wts)
            branch_vecs.append(cache[key])
        (va, wa), (vb, wb) = branch_vecs
        pairs = [(wa[i] * wb[j], np.kron(va[i], vb[j]))
                 for i in range(len(va)) for j in range(len(vb))]
        pairs.sort(key=lambda p: -p[0])
        pairs = pairs[:cap]
        wts = np.array([p[0] for p in pairs])
        starts.append((wts / wts.sum(), [p[1] for p in pairs]))
    elif kind == "covariant_extend":
        inner = origin["inner"]
        dc = inner.dim_in
        r = dc * dc
        for chi_vec in (_unit(0, dc),):
            vecs = [np.kron(_unit(j, r), chi_vec) for j in range(r)]
            starts.append((_uniform(r), vecs))
    basis = [_unit(a, d) for a in range(min(d, cap))]
    starts.append((_uniform(len(basis)), basis))
    return starts


def _pure_vectors_from_witness(witness: Ensemble):
    vecs = []
    wts = []
    for w, sig in witness.items:
        eigs, v = np.linalg.eigh(sig.entries)
        vecs.append(v[:, -1])
        wts.append(w)
    return vecs, np.array(wts)


def _assist_structured_starts(channel: Channel, budget: float, cap: int,
                              cfg: OptimizerConfig, depth: int = 0,
                              pure_witness: Ensemble | None = None):
    d = channel.dim_in
    origin = channel.origin or {}
    kind = origin.get("kind")
    starts = []

    def pack(weights, vectors):
        if len(vectors) > cap:
            order = np.argsort(weights)[::-1][:cap]
            weights = np.asarray(weights)[order]
            vectors = [vectors[i] for i in order]
            weights = weights / weights.sum()
        starts.append((np.asarray(weights, dtype=float), vectors))

    sub_cfg = replace(cfg, restarts=max(3, cfg.restarts // 2),
                      max_iters=max(60, cfg.max_iters // 2), threads=1)
    solved = _SubSolves(sub_cfg, depth)

    if kind == "flagged":
        n0, n1 = origin["n0"], origin["n1"]
        da = n0.dim_in
        for q in (0.0, 0.5):
            p_prime = min(budget / (1.0 - q), np.log2(da))
            items = []
            wts = []
            if q > 0:
                for a in range(da):
                    u = np.kron(np.kron(_unit(0, 2), _unit(a, da)), _unit(0, d))
                    items.append(u)
                    wts.append(q / da)
            branch = solved.assisted_family(n1, p_prime)
            for w_b, u_mat in branch:
                u = np.kron(_unit(1, 2), u_mat.reshape(-1))  # (M A) (x) ref
                items.append(_embed_ref(u, d, d))
                wts.append((1.0 - q) * w_b)
            pack(np.asarray(wts) / np.sum(wts), items)
    elif kind == "tensor":
        parts = origin["parts"]
        da, db = parts[0].dim_in, parts[1].dim_in
        splits = {(0.0, budget), (budget, 0.0), (budget / 2, budget / 2)}
        for pa, pb in sorted(splits):
            fam_a = solved.assisted_family(parts[0], min(pa, np.log2(da)))
            fam_b = solved.assisted_family(parts[1], min(pb, np.log2(db)))
            items = []
            wts = []
            for wa, ua in fam_a:
                for wb, ub in fam_b:
                    items.append(_product_purification(ua, ub, da, db, d))
                    wts.append(wa * wb)
            pack(wts, items)
    elif kind == "covariant_extend":
        inner = origin["inner"]
        dc = inner.dim_in
        r = dc * dc
        rho = _state_with_entropy(dc, min(budget, np.log2(dc)))
        pv = purification_vector(rho)
        items = []
        for j in range(r):
            u = np.kron(_unit(j, r), pv)  # (R C) (x) ref_c
            items.append(_embed_ref(u, d, d))
        pack(_uniform(r), items)
    if kind not in ("flagged", "tensor"):
        # generic family: shift/clock conjugates of one mixed state at budget
        fam = _hw_family_vectors(d, min(budget, np.log2(d)))
        pack(_uniform(len(fam)), fam)
    if pure_witness is not None:
        # conjugate families oriented along the best pure signals, plus a
        # time-share of the pure witness with the maximal-entropy family
        pure_vecs, pure_wts = _pure_vectors_from_witness(pure_witness)
        order = np.argsort(pure_wts)[::-1]
        eye = np.eye(d, dtype=complex)
        hw = heisenberg_weyl(d)
        for rank in order[:2]:
            rho = _rotated_mixture(pure_vecs[rank], d, min(budget, np.log2(d)))
            base = purification_vector(rho)
            fam = [np.kron(w, eye) @ base for w in hw]
            pack(_uniform(len(fam)), fam)
        full = np.log2(d)
        if 1e-9 < budget < full:
            q = 1.0 - budget / full
            base = purification_vector(
                make_density(np.eye(d, dtype=complex) / d)
            )
            items = []
            wts = []
            for wv, v in zip(pure_wts, pure_vecs):
                items.append(np.kron(v, _unit(0, d)))
                wts.append(q * wv)
            fam = [np.kron(w, eye) @ base for w in hw]
            for u in fam:
                items.append(u)
                wts.append((1.0 - q) / len(fam))
            pack(np.asarray(wts) / np.sum(wts), items)
    basis = [np.kron(_unit(a, d), _unit(0, d)) for a in range(min(d, cap))]
    pack(_uniform(len(basis)), basis)
    return starts


_BRANCH_SOLVE_CACHE: dict = {}


class _SubSolves:
    """Branch seed families from one full-budget solve per branch.

    The branch is solved once at its maximal useful budget; families at
    smaller budgets reuse the learned signal orientations with singular
    values sharpened until the average entropy matches.  The full solves are
    memoized at module level (keyed by channel identity and config) so curve
    sweeps and lemma checks pay for each branch once.
    """

    MAX_DEPTH = 3

    def __init__(self, cfg: OptimizerConfig, depth: int):
        self.cfg = cfg
        self.depth = depth

    def assisted_family(self, part: Channel, budget: float):
        """(weight, purification matrix (d_part x d_ref)) items for a branch."""
        budget = float(min(max(budget, 0.0), np.log2(part.dim_in)))
        if self.depth >= self.MAX_DEPTH:
            return _structural_family(part.dim_in, budget)
        key = (id(part), round(budget, 9), self.cfg.seed, self.cfg.restarts,
               self.cfg.max_iters)
        if key in _BRANCH_SOLVE_CACHE:
            return _BRANCH_SOLVE_CACHE[key][1]
        res = c1_assisted(part, budget, self.cfg, _depth=self.depth + 1)
        fam = []
        for (w, _), phi in zip(res.witness.items, res.witness.purifications):
            d_ref = phi.dim // part.dim_in
            u = _dominant_vector(phi.entries)
            fam.append((float(w), u.reshape(part.dim_in, d_ref)))
        fam = _expand_with_conjugates(fam, part.dim_in)
        if len(_BRANCH_SOLVE_CACHE) > 512:
            _BRANCH_SOLVE_CACHE.clear()
        _BRANCH_SOLVE_CACHE[key] = (part, fam)  # pin the channel ref
        return fam


def _expand_with_conjugates(family, dim: int):
    """Pad a small family with its shift/clock conjugates.

    A lone full-assistance signal expands into the d^2 conjugate family whose
    average input is maximally mixed; families that are already that large
    are left alone.
    """
    if len(family) >= dim * dim:
        return family
    ops = heisenberg_weyl(dim)
    expanded = []
    for w, u_mat in family:
        for op_w in ops:
            expanded.append((w / len(ops), op_w @ u_mat))
    return expanded


def _structural_family(dim: int, budget: float):
    if budget <= 1e-12:
        return [(1.0 / dim, _unit(a, dim).reshape(dim, 1)) for a in range(dim)]
    fam = _hw_family_vectors(dim, budget)
    return [(1.0 / len(fam), u.reshape(dim, dim)) for u in fam]


def _warm_start(witness: Ensemble, d_in: int, budget: float):
    """Turn a witness ensemble into a starting point at the given budget."""
    weights = []
    vectors = []
    for (w, _), phi in zip(witness.items, witness.purifications):
        weights.append(w)
        vectors.append(_embed_ref(_dominant_vector(phi.entries), d_in, d_in))
    weights = np.asarray(weights)
    weights = weights / weights.sum()
    w2, v2 = _sharpen_to_budget(weights, vectors, d_in, budget)
    return np.asarray(w2), [np.asarray(v) for v in v2]


def _conjugate_ansatz_starts(channel: Channel, budget: float,
                             cfg: OptimizerConfig,
                             pure_witness: Ensemble | None):
    """Optimize the shift/clock conjugate-family ansatz directly.

    One purification vector u defines the uniform family {(W_j (x) I)|u>}.
    chi_assist of that family is a smooth function of u alone, which Powell
    handles quickly; the result seeds (and often solves) the full search.
    Only used at desk dimensions where the d^2 family stays small.
    """
    from scipy import optimize

    d = channel.dim_in
    if d > 4 or budget <= 1e-9:
        return []
    kraus = channel.kraus_stack
    hw = heisenberg_weyl(d)
    mu = max(cfg.lagrange_grid) if cfg.lagrange_grid else 2.0

    def family_chi(u_mat):
        s_in = entropy_of_spectrum(
            np.clip(np.linalg.svd(u_mat, compute_uv=False), 0, None) ** 2
        )
        sbar = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
        s_joint = 0.0
        for w_op in hw:
            m = w_op @ u_mat
            y = np.matmul(kraus, m).reshape(len(kraus), -1)
            joint = y.T @ y.conj()
            s_joint += float(_entropy_rows(joint[None])[0]) / len(hw)
            j4 = joint.reshape(channel.dim_out, d, channel.dim_out, d)
            sbar += np.trace(j4, axis1=1, axis2=3) / len(hw)
        chi = s_in + float(_entropy_rows(sbar[None])[0]) - s_joint
        return chi, s_in

    def packed_objective(x):
        u_mat = (x[: d * d] + 1j * x[d * d:]).reshape(d, d)
        norm = np.linalg.norm(u_mat)
        if norm < 1e-12:
            return 0.0
        chi, s_in = family_chi(u_mat / norm)
        return -(chi - mu * max(0.0, s_in - budget))

    bases = [purification_vector(_state_with_entropy(d, min(budget, np.log2(d))))]
    if pure_witness is not None:
        vecs, wts = _pure_vectors_from_witness(pure_witness)
        v = vecs[int(np.argmax(wts))]
        bases.append(purification_vector(
            _rotated_mixture(v, d, min(budget, np.log2(d)))
        ))
    out = []
    for u0 in bases:
        x0 = np.concatenate([u0.real, u0.imag])
        res = optimize.minimize(packed_objective, x0, method="Powell",
                                options={"maxiter": 250, "xtol": 1e-8,
                                         "ftol": 1e-11})
        u_mat = (res.x[: d * d] + 1j * res.x[d * d:]).reshape(d, d)
        norm = np.linalg.norm(u_mat)
        if norm < 1e-12:
            continue
        u_mat = u_mat / norm
        _, s_in = family_chi(u_mat)
        if s_in > budget + FEAS_TOL:
            _, sharp = _sharpen_to_budget(np.array([1.0]), [u_mat.reshape(-1)],
                                          d, budget)
            u_mat = np.asarray(sharp[0]).reshape(d, d)
        fam = [_embed_ref((w_op @ u_mat).reshape(-1), d, d) for w_op in hw]
        out.append((_uniform(len(fam)), fam))
    return out


def _product_purification(ua, ub, da, db, d_in) -> np.ndarray:
    ra = ua.shape[1]
    rb = ub.shape[1]
    joint = np.einsum("ar,bs->abrs", ua, ub).reshape(da * db, ra * rb)
    return _embed_ref(joint.reshape(-1), d_in, d_in)


def _random_pure_start(problem: _PureProblem, cap: int, rng):
    m = min(cap, max(2 * problem.d_in, 4))
    return _uniform(m), [problem.random_vector(rng) for _ in range(m)]


def _random_assist_start(problem: _AssistProblem, cap: int, rng):
    m = min(cap, max(2 * problem.d_in, 4))
    return _uniform(m), [problem.random_vector(rng) for _ in range(m)]


# ---------------------------------------------------------------------------
# public optimizers
# ---------------------------------------------------------------------------

def c1(channel: Channel, cfg: OptimizerConfig | None = None,
       _depth: int = 0) -> CapacityResult:
    """1-shot unassisted capacity: max Holevo quantity over pure ensembles.

    The returned value is the functional re-evaluated on the witness, hence a
    certified achievable rate (a lower bound on the true optimum).
    """
    cfg = cfg or OptimizerConfig()
    if channel.dim_in > 16:
        raise DimensionCapError(
            f"input dimension {channel.dim_in} exceeds the desk-scale cap of 16"
        )
    cap = default_cap(channel, cfg)
    structured = _pure_structured_starts(channel, cap, cfg, depth=_depth)
    starts = list(structured[:cfg.restarts])
    probe = _PureProblem(channel)
    for idx in range(max(1, cfg.restarts - len(starts))):
        rng = np.random.default_rng([cfg.seed, 31, idx])
        starts.append(_random_pure_start(probe, cap, rng))
    best, stalled, evals = _run_starts(lambda: _PureProblem(channel), starts, cfg)
    w, v, _ = best
    witness = _pure_witness(w, v)
    value = holevo_chi(channel, witness)
    return CapacityResult(value=value, witness=witness, converged=stalled,
                          evaluations=evals)


def _pure_witness(weights, vectors) -> Ensemble:
    keep = weights > 1e-9
    w = weights[keep]
    w = w / w.sum()
    vecs = [vectors[i] for i in np.nonzero(keep)[0]]
    return ensemble_from_pure(vecs, w)


def _assist_witness(weights, vectors, d_in) -> Ensemble:
    keep = weights > 1e-9
    w = weights[keep]
    w = w / w.sum()
    vecs = [vectors[i] for i in np.nonzero(keep)[0]]
    return ensemble_from_purification_vectors(vecs, w, d_in)


def c1_assisted(channel: Channel, budget: float,
                cfg: OptimizerConfig | None = None,
                pure_result: CapacityResult | None = None,
                warm: Ensemble | None = None,
                _depth: int = 0) -> CapacityResult:
    """1-shot capacity with average signal entropy at most ``budget`` ebits.

    Runs the pure-signal search (always feasible) plus penalized mixed-signal
    searches over the Lagrange grid, then returns the best feasible witness.
    ``pure_result`` lets curve sweeps reuse one c1 solve across budgets, and
    ``warm`` injects a previous witness as the first starting ensemble.
    """
    if budget < 0:
        raise ValueError("entanglement budget must be nonnegative")
    cfg = cfg or OptimizerConfig()
    if channel.dim_in > 16:
        raise DimensionCapError(
            f"input dimension {channel.dim_in} exceeds the desk-scale cap of 16"
        )
    cap = default_cap(channel, cfg)

    pure_res = pure_result if pure_result is not None else c1(channel, cfg, _depth=_depth)
    best_witness = pure_res.witness
    best_value = chi_assist(channel, pure_res.witness)
    evals = pure_res.evaluations
    converged = pure_res.converged

    if budget > FEAS_TOL:
        for mu in cfg.lagrange_grid:
            feasible: dict = {"chi": -np.inf, "snap": None}

            def track(problem, st, _feasible=feasible):
                chi, sav = problem.chi_and_sav(st)
                if sav <= budget + FEAS_TOL and chi > _feasible["chi"]:
                    _feasible["chi"] = chi
                    _feasible["snap"] = (st["w"].copy(), st["U"].copy())

            structured = _assist_structured_starts(
                channel, budget, cap, cfg, depth=_depth,
                pure_witness=pure_res.witness,
            )
            structured = _conjugate_ansatz_starts(
                channel, budget, cfg, pure_res.witness
            ) + structured
            if warm is not None:
                structured.insert(0, _warm_start(warm, channel.dim_in, budget))
            starts = list(structured[:max(cfg.restarts, 4) + (1 if warm else 0)])
            probe = _AssistProblem(channel, budget, mu)
            for r_idx in range(max(1, cfg.restarts - len(starts))):
                rng = np.random.default_rng([cfg.seed, 67, r_idx])
                starts.append(_random_assist_start(probe, cap, rng))
            best, stalled, used = _run_starts(
                lambda: _AssistProblem(channel, budget, mu), starts, cfg,
                feasible_tracker=track,
            )
            evals += used
            converged = converged and stalled
            candidates = []
            if feasible["snap"] is not None:
                candidates.append(feasible["snap"])
            w_raw, u_raw, _ = best
            candidates.append(_sharpen_to_budget(w_raw, u_raw, channel.dim_in, budget))
            for w_cand, u_cand in candidates:
                if w_cand is None:
                    continue
                witness = _assist_witness(np.asarray(w_cand), list(u_cand),
                                          channel.dim_in)
                from .functionals import avg_input_entropy
                if avg_input_entropy(witness) > budget + 1e-8:
                    continue
                value = chi_assist(channel, witness)
                evals += 1
                if value > best_value + 1e-12:
                    best_value = value
                    best_witness = witness
    return CapacityResult(value=best_value, witness=best_witness,
                          converged=converged, evaluations=evals)


def _sharpen_to_budget(weights, vectors, d_in, budget):
    """Exact-feasibility polish: sharpen singular values until Sav <= budget."""
    w = np.asarray(weights, dtype=float)
    mats = [np.asarray(u).reshape(d_in, -1) for u in vectors]
    svds = [np.linalg.svd(m) for m in mats]

    def sav_at(beta):
        total = 0.0
        for wi, (_, s, _) in zip(w, svds):
            spec = np.clip(s, 1e-300, None) ** (2.0 * beta)
            spec = spec / spec.sum()
            total += wi * entropy_of_spectrum(spec)
        return total

    if sav_at(1.0) <= budget + FEAS_TOL:
        return weights, vectors
    lo, hi = 1.0, 256.0
    if sav_at(hi) > budget:
        # fall back to the dominant pure component of each signal
        vecs = []
        for (uu, s, vv) in svds:
            mat = np.zeros((d_in, mats[0].shape[1]), dtype=complex)
            mat[:, 0] = uu[:, 0]
            vecs.append(mat.reshape(-1))
        return weights, vecs
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if sav_at(mid) > budget:
            lo = mid
        else:
            hi = mid
    beta = hi
    vecs = []
    for (uu, s, vv) in svds:
        s2 = np.clip(s, 1e-300, None) ** beta
        s2 = s2 / np.linalg.norm(s2)
        mat = (uu[:, : s.size] * s2) @ vv[: s.size, :]
        vecs.append(mat.reshape(-1))
    return weights, vecs


def c1_assisted_covariant(channel: Channel, budget: float,
                          cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Fast path for channels built by ``covariant_extend``.

    Minimizes the entropy gain of the inner channel over inputs with entropy
    at most the budget; the witness is the uniform register-basis ensemble
    carrying the optimal inner state, re-scored through ``chi_assist``.
    """
    cfg = cfg or OptimizerConfig()
    origin = channel.origin or {}
    if origin.get("kind") != "covariant_extend":
        raise ValueError("channel was not built by covariant_extend")
    if budget < 0:
        raise ValueError("entanglement budget must be nonnegative")
    inner = origin["inner"]
    d = inner.dim_in
    gain, u_best, evals = _minimize_entropy_gain(inner, budget, cfg)
    r = d * d
    pv = u_best
    vectors = []
    for j in range(r):
        u = np.kron(_unit(j, r), pv)
        vectors.append(u)
    witness = ensemble_from_purification_vectors(vectors, _uniform(r), channel.dim_in)
    value = chi_assist(channel, witness)
    return CapacityResult(value=value, witness=witness, converged=True,
                          evaluations=evals,
                          extra={"inner_gain": gain, "formula": np.log2(d) - gain})


def _minimize_entropy_gain(inner: Channel, budget: float, cfg: OptimizerConfig):
    """min over S(rho) <= budget of S(E (x) I(phi_rho)) - S(rho), by multi-start
    penalized Powell search over purification vectors."""
    from scipy import optimize

    d = inner.dim_in
    kraus = inner.kraus_stack

    def joint_and_rho(u):
        u_mat = u.reshape(d, d)
        norm = np.linalg.norm(u_mat)
        if norm < 1e-14:
            u_mat = np.eye(d, dtype=complex) / np.sqrt(d)
        else:
            u_mat = u_mat / norm
        y = np.einsum("koi,ir->kor", kraus, u_mat).reshape(len(kraus), -1)
        joint = np.einsum("ka,kb->ab", y, y.conj())
        sv = np.linalg.svd(u_mat, compute_uv=False)
        return joint, np.clip(sv, 0, None) ** 2, u_mat

    evals = 0

    def gain_of(u):
        joint, spec, _ = joint_and_rho(u)
        s_joint = float(_entropy_rows(joint[None])[0])
        return s_joint - entropy_of_spectrum(spec), entropy_of_spectrum(spec)

    def packed(u):
        return np.concatenate([u.real, u.imag])

    def unpacked(x):
        n = x.size // 2
        return x[:n] + 1j * x[n:]

    best_gain = np.inf
    best_u = None

    def consider(u):
        nonlocal best_gain, best_u, evals
        g, s_in = gain_of(u)
        evals += 1
        if s_in <= budget + FEAS_TOL and g < best_gain - 1e-15:
            best_gain = g
            best_u = u / np.linalg.norm(u)

    # pure candidates from the output-entropy minimizer (feasible at any budget)
    _, v_min, used = min_output_entropy_search(inner, restarts=max(8, cfg.restarts),
                                               seed=cfg.seed)
    evals += used
    consider(np.kron(v_min, _unit(0, d)))
    consider(np.kron(_unit(0, d), _unit(0, d)))
    starts = []
    for base in (v_min, _unit(0, d)):
        rho = _rotated_mixture(base, d, budget)
        starts.append(purification_vector(rho))
    if budget >= np.log2(d) - 1e-12:
        starts.append(purification_vector(make_density(np.eye(d, dtype=complex) / d)))
    rng = np.random.default_rng([cfg.seed, 101])
    for _ in range(max(2, cfg.restarts // 2)):
        v = rng.normal(size=d * d) + 1j * rng.normal(size=d * d)
        starts.append(v / np.linalg.norm(v))

    mu_values = cfg.lagrange_grid or (2.0,)
    for u0 in starts:
        consider(u0)
        for mu in mu_values:
            def objective(x):
                nonlocal evals
                evals += 1
                u = unpacked(x)
                g, s_in = gain_of(u)
                return g + mu * max(0.0, s_in - budget)

            res = optimize.minimize(objective, packed(u0), method="Powell",
                                    options={"maxiter": 400, "xtol": 1e-7,
                                             "ftol": 1e-10})
            u_fin = unpacked(res.x)
            u_fin = u_fin / np.linalg.norm(u_fin)
            consider(u_fin)
            # project slightly infeasible endpoints onto the budget shell
            _, s_in = gain_of(u_fin)
            if s_in > budget:
                w_adj, vec_adj = _sharpen_to_budget(np.array([1.0]), [u_fin], d,
                                                    budget)
                consider(np.asarray(vec_adj[0]))
    return best_gain, best_u, evals


def _rotated_mixture(base_vec: np.ndarray, d: int, entropy_target: float):
    """Mixed state with the requested entropy whose dominant eigenvector is base."""
    spec = mixedness_for_entropy(d, min(entropy_target, np.log2(d)))
    basis = _orthonormal_from(base_vec, d)
    mat = sum(spec[i] * np.outer(basis[:, i], basis[:, i].conj()) for i in range(d))
    return make_density(mat)


def _orthonormal_from(vec: np.ndarray, d: int) -> np.ndarray:
    m = np.eye(d, dtype=complex)
    m[:, 0] = vec / np.linalg.norm(vec)
    q, _ = np.linalg.qr(m)
    # keep the first column aligned with vec (QR may flip phase)
    phase = np.vdot(q[:, 0], vec)
    if abs(phase) > 1e-12:
        q[:, 0] = q[:, 0] * (phase / abs(phase))
    return q


def n_shot(channel: Channel, n: int, budget: float | None = None,
           cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Per-use rate of the n-fold tensor power, n in {1, 2}.

    With a budget, runs the assisted optimizer at n * budget on the power and
    divides by n.  The witness lives on the tensor power; its functional value
    is n times the reported rate.
    """
    if n not in (1, 2):
        raise ValueError("only n in {1, 2} is supported")
    cfg = cfg or OptimizerConfig()
    if channel.dim_in ** n > 16 or channel.dim_out ** n > 16:
        raise DimensionCapError(
            f"tensor power dimension {channel.dim_in ** n} exceeds the cap of 16"
        )
    power = channel if n == 1 else tensor_power(channel, n)
    if budget is None:
        res = c1(power, cfg)
    else:
        res = c1_assisted(power, n * budget, cfg)
    extra = dict(res.extra)
    extra["n"] = n
    return CapacityResult(value=res.value / n, witness=res.witness,
                          converged=res.converged, evaluations=res.evaluations,
                          extra=extra)


def assisted_tensor_classical_quantum(
    classical_part: Channel, quantum_part: Channel, budget: float,
    cfg: OptimizerConfig | None = None,
    quantum_pure: CapacityResult | None = None,
) -> CapacityResult:
    """Additive fast path for classical (x) quantum products.

    Returns classical_capacity(first) + c1_assisted(second, budget), with a
    product witness scored through chi_assist on the joint channel.
    """
    cfg = cfg or OptimizerConfig()
    res0 = classical_capacity(classical_part, cfg.tol)
    res1 = c1_assisted(quantum_part, budget, cfg, pure_result=quantum_pure)
    joint = tensor(classical_part, quantum_part)
    d0 = classical_part.dim_in
    d1 = quantum_part.dim_in
    vectors = []
    weights = []
    for (w0, sig0) in res0.witness.items:
        a = int(np.argmax(np.diag(sig0.entries).real))
        for (w1, sig1), phi in zip(res1.witness.items, res1.witness.purifications):
            d_ref = phi.dim // d1
            u1 = _dominant_vector(phi.entries)
            u1_mat = u1.reshape(d1, d_ref)
            joint_mat = np.einsum("a,br->abr", _unit(a, d0), u1_mat)
            vectors.append(joint_mat.reshape(d0 * d1, d_ref).reshape(-1))
            weights.append(w0 * w1)
    witness = ensemble_from_purification_vectors(vectors, np.array(weights),
                                                 d0 * d1)
    value = chi_assist(joint, witness)
    return CapacityResult(
        value=value, witness=witness,
        converged=res0.converged and res1.converged,
        evaluations=res0.evaluations + res1.evaluations,
        extra={"classical_value": res0.value, "quantum_value": res1.value},
    )


def _dominant_vector(matrix: np.ndarray) -> np.ndarray:
    eigs, vecs = np.linalg.eigh(matrix)
    return vecs[:, -1] * np.sqrt(max(eigs[-1], 0.0))
