"""Numerical checks of the structural lemmas on random small instances.

Each check returns a :class:`VerificationReport`.  Slack conventions:
inequality checks record the signed margin (negative means violated);
equality checks record minus the absolute deviation.  A trial counts as a
violation only when its slack falls below minus the check tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import (
    Channel,
    FlaggedSpec,
    covariant_extend,
    flagged,
    heisenberg_weyl,
    is_partial_cq,
    tensor,
)
from .functionals import (
    Ensemble,
    avg_input_entropy,
    chi_assist,
    ensemble_from_purification_vectors,
    min_output_entropy,
)
from .optimizers import (
    OptimizerConfig,
    c1,
    c1_assisted,
    classical_capacity,
)
from .qstate import entropy_of_spectrum, partial_trace_matrix, von_neumann_entropy
from .tradeoff import sample_curve, timeshare_detail

INEQ_TOL = 1e-8
SSA_TOL = 1e-9
IDENTITY_TOL = 1e-9
OPT_TOL_TIGHT = 5e-3
OPT_TOL_LOOSE = 1e-2


@dataclass(frozen=True)
class VerificationReport:
    lemma_id: str
    trials: int
    violations: int
    worst_slack: float
    instances: tuple[int, ...]
    details: dict = field(default_factory=dict, compare=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def merge_reports(lemma_id: str, reports) -> VerificationReport:
    reports = list(reports)
    return VerificationReport(
        lemma_id=lemma_id,
        trials=sum(r.trials for r in reports),
        violations=sum(r.violations for r in reports),
        worst_slack=min(r.worst_slack for r in reports),
        instances=tuple(i for r in reports for i in r.instances),
        details={"merged": [r.details for r in reports]},
    )


# ---------------------------------------------------------------------------
# Lemma about partial-cq channels: dephasing the classical register and
# spectrally decomposing the conditional states never hurts.
# ---------------------------------------------------------------------------

def _infer_classical_register(channel: Channel) -> int:
    origin = channel.origin or {}
    kind = origin.get("kind")
    if kind == "flagged":
        return 2
    if kind == "covariant_extend":
        d = origin["inner"].dim_in
        return d * d
    raise ValueError(
        "cannot infer the classical register size; pass dim_r explicitly"
    )


def _haar_vector(rng, dim: int) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _joint_output(channel: Channel, u_mat: np.ndarray) -> np.ndarray:
    """(Psi (x) I)(|u><u|) for |u> given as a (dim_in, dim_env) matrix."""
    y = [k @ u_mat for k in channel.kraus]
    vecs = [yk.reshape(-1) for yk in y]
    out = np.zeros((vecs[0].size, vecs[0].size), dtype=complex)
    for v in vecs:
        out += np.outer(v, v.conj())
    return out


def improved_cq_ensemble(channel: Channel, ensemble: Ensemble, dim_r: int):
    """The alternative protocol: dephase the classical register, spectrally
    decompose each conditional state, and signal with flag-tagged C parts.

    Returns (new_ensemble, per_item_records) where the records carry the
    (i, j, k) bookkeeping needed for the entropy identities.
    """
    d_in = channel.dim_in
    dim_c = d_in // dim_r
    weights = []
    vectors = []
    records = []
    for i, ((p_i, _), phi) in enumerate(
        zip(ensemble.items, ensemble.purifications)
    ):
        d_env = phi.dim // d_in
        eigs, evecs = np.linalg.eigh(phi.entries)
        u = evecs[:, -1] * np.sqrt(max(eigs[-1], 0.0))
        u = u / np.linalg.norm(u)
        blocks = u.reshape(dim_r, dim_c, d_env)
        item_rec = {"i": i, "p_i": p_i, "d_env": d_env, "terms": []}
        for j in range(dim_r):
            block = blocks[j]  # (dim_c, d_env), amplitude of flag value j
            p_j = float(np.sum(np.abs(block) ** 2))
            if p_j < 1e-12:
                continue
            cond = np.outer(block.reshape(-1), block.conj().reshape(-1)) / p_j
            ev, ev_vecs = np.linalg.eigh(cond)
            for k in range(ev.size):
                p_k = float(max(ev[k], 0.0))
                if p_k < 1e-12:
                    continue
                x = ev_vecs[:, k].reshape(dim_c, d_env)
                u_full = np.zeros((dim_r, dim_c, d_env), dtype=complex)
                u_full[j] = x
                weights.append(p_i * p_j * p_k)
                vectors.append(u_full.reshape(-1))
                item_rec["terms"].append(
                    {"j": j, "k": k, "p_jk": p_j * p_k, "x": x}
                )
        records.append(item_rec)
    weights = np.asarray(weights)
    weights = weights / weights.sum()
    new_ens = ensemble_from_purification_vectors(vectors, weights, d_in)
    return new_ens, records


def check_lemma_cq(
    channel: Channel,
    trials: int = 200,
    seed: int = 0,
    dim_r: int | None = None,
) -> VerificationReport:
    """Random assisted ensembles on a partial-cq channel.

    Per trial this asserts: (a) the alternative protocol consumes no more
    entanglement, (b) it transmits at least as much, (c) strong subadditivity
    holds on the tagged output state, and (d) the four entropy bookkeeping
    identities behind (a)-(c) hold to 1e-9.
    """
    if dim_r is None:
        dim_r = _infer_classical_register(channel)
    if not is_partial_cq(channel, dim_r):
        raise ValueError(
            f"channel {channel.label!r} is not invariant under dephasing of a "
            f"register of size {dim_r}"
        )
    d_in = channel.dim_in
    dim_c = d_in // dim_r
    d_env = d_in  # full-rank purifications
    violations = 0
    worst = np.inf
    failing = []
    max_identity_dev = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        m = int(rng.integers(2, 5))
        w = rng.dirichlet(np.ones(m))
        phis = [_haar_vector(rng, d_in * d_env) for _ in range(m)]
        original = ensemble_from_purification_vectors(phis, w, d_in)
        slacks, identity_dev = _lemma_cq_trial(channel, original, dim_r)
        max_identity_dev = max(max_identity_dev, identity_dev)
        trial_worst = min(slacks.values())
        worst = min(worst, trial_worst)
        bad = (
            slacks["entanglement"] < -INEQ_TOL
            or slacks["chi"] < -INEQ_TOL
            or slacks["ssa"] < -SSA_TOL
            or identity_dev > IDENTITY_TOL
        )
        if bad:
            violations += 1
            failing.append(t)
    return VerificationReport(
        lemma_id="lemma1_cq",
        trials=trials,
        violations=violations,
        worst_slack=float(worst) if trials else 0.0,
        instances=tuple(failing),
        details={
            "seed": seed,
            "max_identity_dev": max_identity_dev,
            "tolerances": {
                "inequality": INEQ_TOL,
                "ssa": SSA_TOL,
                "identity": IDENTITY_TOL,
            },
        },
    )


def _lemma_cq_trial(channel: Channel, original: Ensemble, dim_r: int):
    """Slack values for one ensemble, plus the worst identity deviation."""
    d_in = channel.dim_in
    dim_c = d_in // dim_r
    new_ens, records = improved_cq_ensemble(channel, original, dim_r)

    e_orig = avg_input_entropy(original)
    e_new = avg_input_entropy(new_ens)
    chi_orig = chi_assist(channel, original)
    chi_new = chi_assist(channel, new_ens)

    ssa_slack = np.inf
    identity_dev = 0.0
    for rec, ((_, signal), phi) in zip(
        records, zip(original.items, original.purifications)
    ):
        d_env = rec["d_env"]
        terms = rec["terms"]
        probs = np.array([term["p_jk"] for term in terms])
        probs = probs / probs.sum()
        rho_e_list = []
        omega_list = []
        per_term_se = []
        per_term_somega = []
        for term in terms:
            x = term["x"]
            rho_e = np.einsum("ce,cf->ef", x, x.conj())
            u_full = np.zeros((dim_r, dim_c, d_env), dtype=complex)
            u_full[term["j"]] = x
            omega = _joint_output(channel, u_full.reshape(d_in, d_env))
            rho_e_list.append(rho_e)
            omega_list.append(omega)
            per_term_se.append(von_neumann_entropy(_psd(rho_e)))
            per_term_somega.append(entropy_of_spectrum(_spec(omega)))
        per_term_se = np.array(per_term_se)
        per_term_somega = np.array(per_term_somega)

        s_q = entropy_of_spectrum(probs)
        s_qe = entropy_of_spectrum(
            np.concatenate([p * _spec(r) for p, r in zip(probs, rho_e_list)])
        )
        s_qce = entropy_of_spectrum(
            np.concatenate([p * _spec(o) for p, o in zip(probs, omega_list)])
        )
        e_marginal = sum(p * r for p, r in zip(probs, rho_e_list))
        s_e = entropy_of_spectrum(_spec(e_marginal))
        ce_marginal = sum(p * o for p, o in zip(probs, omega_list))
        s_ce = entropy_of_spectrum(_spec(ce_marginal))

        # (S8a) the E marginal has the entropy of the original signal
        identity_dev = max(identity_dev, abs(s_e - von_neumann_entropy(signal)))
        # (S8b) the C'E marginal equals the output of the dephased input
        dephased = _dephase_register(phi.entries, dim_r, dim_c, d_env)
        out_dephased = _apply_first(channel, dephased, d_in, d_env)
        identity_dev = max(
            identity_dev, abs(s_ce - entropy_of_spectrum(_spec(out_dephased)))
        )
        # (S8c)/(S8d) conditional entropies decompose over the tag
        identity_dev = max(
            identity_dev, abs((s_qe - s_q) - float(probs @ per_term_se))
        )
        identity_dev = max(
            identity_dev, abs((s_qce - s_q) - float(probs @ per_term_somega))
        )
        ssa_slack = min(ssa_slack, (s_qe + s_ce) - (s_qce + s_e))

    slacks = {
        "entanglement": e_orig - e_new,
        "chi": chi_new - chi_orig,
        "ssa": float(ssa_slack),
    }
    return slacks, float(identity_dev)


def _dephase_register(joint: np.ndarray, dim_r: int, dim_c: int, d_env: int):
    t = joint.reshape(dim_r, dim_c * d_env, dim_r, dim_c * d_env)
    out = np.zeros_like(t)
    for j in range(dim_r):
        out[j, :, j, :] = t[j, :, j, :]
    return out.reshape(joint.shape)


def _apply_first(channel: Channel, matrix: np.ndarray, d_in: int, d_env: int):
    out_dim = channel.dim_out * d_env
    out = np.zeros((out_dim, out_dim), dtype=complex)
    eye = np.eye(d_env, dtype=complex)
    for k in channel.kraus:
        lifted = np.kron(k, eye)
        out += lifted @ matrix @ lifted.conj().T
    return out


def _spec(matrix: np.ndarray) -> np.ndarray:
    return np.clip(np.linalg.eigvalsh((matrix + matrix.conj().T) / 2.0), 0.0, None)


def _psd(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2.0


# ---------------------------------------------------------------------------
# flagged-channel capacity checks
# ---------------------------------------------------------------------------

def check_lemma_flagged_c1(
    n0: Channel, n1: Channel, cfg: OptimizerConfig | None = None
) -> VerificationReport:
    """|C1(flagged) - max{C(N0), C1(N1)}| <= 5e-3 for one branch pair."""
    cfg = cfg or OptimizerConfig()
    joint = flagged(FlaggedSpec(n0=n0, n1=n1))
    lhs = c1(joint, cfg).value
    rhs = max(classical_capacity(n0, cfg.tol).value, c1(n1, cfg).value)
    dev = abs(lhs - rhs)
    return VerificationReport(
        lemma_id="lemma2_flagged_c1",
        trials=1,
        violations=int(dev > OPT_TOL_TIGHT),
        worst_slack=-dev,
        instances=(0,) if dev > OPT_TOL_TIGHT else (),
        details={"lhs": lhs, "rhs": rhs, "tolerance": OPT_TOL_TIGHT},
    )


def check_lemma_flagged_cp(
    n0: Channel,
    n1: Channel,
    p_grid,
    cfg: OptimizerConfig | None = None,
    curve_points: int = 9,
) -> VerificationReport:
    """Assisted capacity of the flagged channel vs the time-sharing envelope."""
    cfg = cfg or OptimizerConfig()
    joint = flagged(FlaggedSpec(n0=n0, n1=n1))
    c_n0 = classical_capacity(n0, cfg.tol).value
    branch_grid = np.linspace(0.0, np.log2(n1.dim_in), curve_points)
    curve = sample_curve(n1, branch_grid, cfg)
    joint_pure = c1(joint, cfg)
    worst = np.inf
    violations = 0
    failing = []
    rows = []
    for idx, p in enumerate(p_grid):
        lhs = c1_assisted(joint, float(p), cfg, pure_result=joint_pure).value
        rhs, q_opt, p_prime = timeshare_detail(c_n0, curve, float(p))
        dev = abs(lhs - rhs)
        worst = min(worst, -dev)
        rows.append({"P": float(p), "lhs": lhs, "rhs": rhs,
                     "q": q_opt, "p_prime": p_prime})
        if dev > OPT_TOL_LOOSE:
            violations += 1
            failing.append(idx)
    return VerificationReport(
        lemma_id="lemma3_flagged_cp",
        trials=len(rows),
        violations=violations,
        worst_slack=float(worst),
        instances=tuple(failing),
        details={"rows": rows, "tolerance": OPT_TOL_LOOSE, "c_n0": c_n0},
    )


def check_tensor_additivity(
    psi0: Channel,
    psi1: Channel,
    p_grid,
    cfg: OptimizerConfig | None = None,
) -> VerificationReport:
    """Joint optimization on classical (x) quantum vs the additive fast path."""
    from .optimizers import assisted_tensor_classical_quantum

    cfg = cfg or OptimizerConfig()
    joint = tensor(psi0, psi1)
    joint_pure = c1(joint, cfg)
    quantum_pure = c1(psi1, cfg)
    worst = np.inf
    violations = 0
    failing = []
    rows = []
    for idx, p in enumerate(p_grid):
        lhs = c1_assisted(joint, float(p), cfg, pure_result=joint_pure).value
        rhs = assisted_tensor_classical_quantum(
            psi0, psi1, float(p), cfg, quantum_pure=quantum_pure
        ).value
        dev = abs(lhs - rhs)
        worst = min(worst, -dev)
        rows.append({"P": float(p), "joint": lhs, "additive": rhs})
        if dev > OPT_TOL_LOOSE:
            violations += 1
            failing.append(idx)
    return VerificationReport(
        lemma_id="lemmaS4_tensor",
        trials=len(rows),
        violations=violations,
        worst_slack=float(worst),
        instances=tuple(failing),
        details={"rows": rows, "tolerance": OPT_TOL_LOOSE},
    )


# ---------------------------------------------------------------------------
# covariant construction and twirl
# ---------------------------------------------------------------------------

def check_covariant_capacity(
    inner: Channel, cfg: OptimizerConfig | None = None
) -> VerificationReport:
    """c1 of the lifted channel vs log2(d) minus the inner minimum output
    entropy, plus the twirl identity at the same dimension."""
    cfg = cfg or OptimizerConfig()
    if inner.dim_in != inner.dim_out or inner.dim_in > 3:
        raise ValueError("inner channel must be square with dimension <= 3")
    lifted = covariant_extend(inner)
    lhs = c1(lifted, cfg).value
    s_min = min_output_entropy(inner, restarts=max(16, cfg.restarts * 2),
                               seed=cfg.seed)
    rhs = np.log2(inner.dim_in) - s_min
    dev = abs(lhs - rhs)
    twirl_dev = twirl_deviation(inner.dim_in, seed=cfg.seed)
    violated = dev > OPT_TOL_TIGHT or twirl_dev > 1e-12
    return VerificationReport(
        lemma_id="covariant_capacity",
        trials=1,
        violations=int(violated),
        worst_slack=-float(dev),
        instances=(0,) if violated else (),
        details={
            "lhs": lhs, "rhs": float(rhs), "s_min": float(s_min),
            "twirl_deviation": float(twirl_dev),
            "tolerance": OPT_TOL_TIGHT,
        },
    )


def twirl_deviation(dim: int, seed: int = 0, samples: int = 5) -> float:
    """Worst deviation of the shift/clock twirl from the maximally mixed state."""
    ops = heisenberg_weyl(dim)
    rng = np.random.default_rng([seed, dim])
    worst = 0.0
    for _ in range(samples):
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = g @ g.conj().T
        rho = rho / np.trace(rho)
        tw = sum(w @ rho @ w.conj().T for w in ops) / (dim * dim)
        worst = max(worst, float(np.max(np.abs(tw - np.eye(dim) / dim))))
    return worst


def check_twirl(dims=(2, 3, 4), seed: int = 0) -> VerificationReport:
    devs = {d: twirl_deviation(d, seed=seed) for d in dims}
    worst = max(devs.values())
    return VerificationReport(
        lemma_id="twirl",
        trials=len(devs),
        violations=int(worst > 1e-12),
        worst_slack=-float(worst),
        instances=(),
        details={"deviations": {str(d): v for d, v in devs.items()},
                 "tolerance": 1e-12},
    )
