"""Trade-off curves: sampling, time-sharing envelopes and the
superadditivity witness.

A curve maps entanglement budget P (ebits per use) to an achievable rate
(bits per use).  Curves are monotone and concave up to optimizer noise; both
properties are validated at construction.  Time sharing mixes a zero-budget
branch of known capacity with the curve at an inflated budget P' = P / (1-q).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channels import Channel
from .optimizers import CapacityResult, OptimizerConfig, c1, c1_assisted

MONOTONE_SLACK = 1e-6
CONCAVITY_SLACK = 2e-3
Q_GRID = 1024
SLOPE_ONE_TOL = 1e-3
STRICT_CONCAVITY_TOL = 2e-3
WITNESS_THRESHOLD = 1e-3


@dataclass(frozen=True)
class ProvenancePoint:
    point_id: str
    converged: bool = True
    evaluations: int = 0
    repaired: bool = False
    note: str = ""


@dataclass(frozen=True)
class TradeoffCurve:
    """Sampled budget -> rate curve with per-point provenance."""

    points: tuple[tuple[float, float], ...]
    provenance: tuple[ProvenancePoint, ...]
    results: tuple[CapacityResult, ...] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        ps = self.budgets
        rs = self.rates
        if len(ps) != len(self.provenance):
            raise ValueError("one provenance entry per point required")
        if np.any(np.diff(ps) <= 0):
            raise ValueError("budgets must be strictly increasing")
        if np.any(np.diff(rs) < -MONOTONE_SLACK):
            raise ValueError("rates must be nondecreasing within 1e-6")
        dev = _concave_envelope_deviation(ps, rs)
        if dev >= CONCAVITY_SLACK:
            raise ValueError(
                f"curve deviates from its concave envelope by {dev:.2e} (>= 2e-3)"
            )

    @property
    def budgets(self) -> np.ndarray:
        return np.array([p for p, _ in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for _, r in self.points])

    def rate_at(self, budget: float) -> float:
        """Linear interpolation, clamped to the sampled domain."""
        ps = self.budgets
        return float(np.interp(budget, ps, self.rates))

    @property
    def max_budget(self) -> float:
        return float(self.points[-1][0])


@dataclass(frozen=True)
class CurveAnalysis:
    slopes: tuple[float, ...]
    p_bar: float
    strict_concavity_flags: tuple[bool, ...]
    epsilon: float


@dataclass(frozen=True)
class SuperadditivityPoint:
    budget: float
    one_shot: float
    regularized: float
    gap: float
    case: str
    q: float
    p_prime: float


@dataclass(frozen=True)
class SuperadditivityReport:
    points: tuple[SuperadditivityPoint, ...]
    witness_budgets: tuple[float, ...]
    threshold: float
    epsilon: float
    model_label: str
    endpoint_gaps: tuple[float, float]

    @property
    def nonempty(self) -> bool:
        return len(self.witness_budgets) > 0


def _concave_envelope_deviation(ps, rs) -> float:
    """Max gap between the points and their upper concave envelope."""
    if len(ps) <= 2:
        return 0.0
    hull = [0]
    for i in range(1, len(ps)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (ps[i1] - ps[i0]) * (rs[i] - rs[i0]) - (
                rs[i1] - rs[i0]
            ) * (ps[i] - ps[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    env = np.interp(ps, ps[hull], rs[hull])
    return float(np.max(env - rs))


def sample_curve(
    channel: Channel, grid, cfg: OptimizerConfig | None = None
) -> TradeoffCurve:
    """One assisted solve per grid point, with a monotone-repair pass.

    A point that lands below its left neighbour (optimizer noise) is replaced
    by the neighbour's rate and flagged as repaired in the provenance.
    """
    cfg = cfg or OptimizerConfig()
    grid = [float(p) for p in grid]
    if any(b - a <= 0 for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    p_cap = np.log2(channel.dim_in)
    if grid[0] < -1e-12 or grid[-1] > p_cap + 1e-9:
        raise ValueError(
            f"grid must lie within [0, {p_cap:.4f}] for this channel"
        )
    pure_res = c1(channel, cfg)
    results = []
    warm = None
    for p in grid:
        res = c1_assisted(channel, max(p, 0.0), cfg, pure_result=pure_res,
                          warm=warm)
        warm = res.witness
        results.append(res)
    results, mixed = _timeshare_repair(channel, grid, results)
    rates = [r.value for r in results]
    provenance = []
    for i, (p, res) in enumerate(zip(grid, results)):
        repaired = False
        if i > 0 and rates[i] < rates[i - 1]:
            rates[i] = rates[i - 1]
            repaired = True
        provenance.append(
            ProvenancePoint(
                point_id=f"P={p:.6f}",
                converged=res.converged,
                evaluations=res.evaluations,
                repaired=repaired or (i in mixed),
                note="timeshare-mix" if i in mixed else "",
            )
        )
    points = tuple((p, float(r)) for p, r in zip(grid, rates))
    return TradeoffCurve(points=points, provenance=tuple(provenance),
                         results=tuple(results))


def _timeshare_repair(channel, grid, results):
    """Lift points under the chord of their neighbours by witness mixing.

    Mixing two feasible ensembles is itself feasible (budgets average) and
    its assisted Holevo value is at least the chord value by concavity of
    the entropy, so every repair stays a certified achievable rate.
    """
    from .functionals import Ensemble, chi_assist

    mixed: set[int] = set()
    for _ in range(6):
        rates = np.array([r.value for r in results])
        worst_dev = 0.0
        for i in range(1, len(grid) - 1):
            t = (grid[i] - grid[i - 1]) / (grid[i + 1] - grid[i - 1])
            chord = (1.0 - t) * rates[i - 1] + t * rates[i + 1]
            dev = chord - rates[i]
            if dev <= 1e-7:
                continue
            worst_dev = max(worst_dev, dev)
            left, right = results[i - 1].witness, results[i + 1].witness
            items = tuple(
                (w * (1.0 - t), sig) for w, sig in left.items
            ) + tuple((w * t, sig) for w, sig in right.items)
            purifs = tuple(left.purifications) + tuple(right.purifications)
            mix = Ensemble(items=items, purifications=purifs)
            value = chi_assist(channel, mix)
            if value > results[i].value:
                results[i] = CapacityResult(
                    value=value, witness=mix,
                    converged=results[i].converged,
                    evaluations=results[i].evaluations + 1,
                )
                mixed.add(i)
        if worst_dev <= 1e-7:
            break
    return results, mixed


def timeshare_flagged(c_n0: float, curve: TradeoffCurve, budget: float,
                      q_points: int = Q_GRID) -> float:
    """Best time-share of a budget-free branch against the curve.

    Maximizes q * c_n0 + (1-q) * curve(P') over a q grid, with
    P' = budget / (1-q) capped at the curve domain.
    """
    value, _, _ = timeshare_detail(c_n0, curve, budget, q_points)
    return value


def timeshare_detail(c_n0: float, curve: TradeoffCurve, budget: float,
                     q_points: int = Q_GRID) -> tuple[float, float, float]:
    """As timeshare_flagged, also returning the maximizing (q, P')."""
    if budget < -1e-12 or budget > curve.max_budget + 1e-9:
        raise ValueError(
            f"budget {budget} outside the curve domain [0, {curve.max_budget}]"
        )
    qs = np.linspace(0.0, 1.0, q_points)
    if budget > 0:
        qs = qs[:-1]  # q -> 1 makes P' diverge; the cap below handles the rest
    denom = np.maximum(1.0 - qs, 1e-12)
    p_prime = np.minimum(budget / denom, curve.max_budget)
    rates = np.interp(p_prime, curve.budgets, curve.rates)
    values = qs * c_n0 + (1.0 - qs) * rates
    best = int(np.argmax(values))
    return float(values[best]), float(qs[best]), float(p_prime[best])


def analyze(curve: TradeoffCurve, epsilon: float) -> CurveAnalysis:
    """Finite-difference slopes, the last slope-one budget, and strict-concavity
    flags at interior points (left slope exceeding right slope by > 2e-3)."""
    ps = curve.budgets
    rs = curve.rates
    if len(ps) < 3:
        raise ValueError("analysis needs at least 3 points")
    slopes = np.diff(rs) / np.diff(ps)
    p_bar = float(ps[0])
    for k, s in enumerate(slopes):
        if s >= 1.0 - SLOPE_ONE_TOL:
            p_bar = float(ps[k + 1])
    flags = [False]
    for k in range(1, len(ps) - 1):
        flags.append(bool(slopes[k - 1] - slopes[k] > STRICT_CONCAVITY_TOL))
    flags.append(False)
    return CurveAnalysis(
        slopes=tuple(float(s) for s in slopes),
        p_bar=p_bar,
        strict_concavity_flags=tuple(flags),
        epsilon=float(epsilon),
    )


def injected_gap_model(curve: TradeoffCurve, epsilon: float,
                       label: str = "injected-gap") -> TradeoffCurve:
    """Surrogate regularized curve: rates lifted by epsilon, capped at the
    full-assistance endpoint where one-shot and regularized rates agree."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    ceiling = float(curve.rates[-1])
    rates = np.minimum(curve.rates + epsilon, ceiling)
    points = tuple((float(p), float(r)) for p, r in zip(curve.budgets, rates))
    provenance = tuple(
        ProvenancePoint(point_id=prov.point_id, converged=prov.converged,
                        evaluations=0, note=label)
        for prov in curve.provenance
    )
    return TradeoffCurve(points=points, provenance=provenance)


def witness_superadditivity(
    c_n0: float,
    c1_curve: TradeoffCurve,
    cp_model: TradeoffCurve,
    epsilon: float,
    threshold: float = WITNESS_THRESHOLD,
    model_label: str = "model",
) -> SuperadditivityReport:
    """Compare the time-shared one-shot envelope against the model envelope.

    Requires the branch capacity to match the model curve at P = 0 (the
    equal-capacity choice the construction relies on).  Reports every budget
    where the model envelope exceeds the one-shot envelope by more than the
    threshold, along with which case the maximizing one-shot time share
    realizes (P' = P, or P' > P with q > 0).
    """
    if abs(c_n0 - cp_model.rates[0]) > 1e-6:
        raise ValueError(
            f"branch capacity {c_n0:.8f} does not match the model curve at P=0 "
            f"({cp_model.rates[0]:.8f})"
        )
    budgets = sorted(set(float(p) for p in c1_curve.budgets)
                     | set(float(p) for p in cp_model.budgets))
    entries = []
    witnesses = []
    for p in budgets:
        one_shot, q1, pp1 = timeshare_detail(c_n0, c1_curve, p)
        regular, _, _ = timeshare_detail(c_n0, cp_model, p)
        gap = regular - one_shot
        case = "P_tilde=P" if pp1 <= p + 1e-9 else "P_tilde>P"
        entries.append(
            SuperadditivityPoint(
                budget=p, one_shot=one_shot, regularized=regular,
                gap=gap, case=case, q=q1, p_prime=pp1,
            )
        )
        if gap > threshold:
            witnesses.append(p)
    return SuperadditivityReport(
        points=tuple(entries),
        witness_budgets=tuple(witnesses),
        threshold=threshold,
        epsilon=float(epsilon),
        model_label=model_label,
        endpoint_gaps=(entries[0].gap, entries[-1].gap),
    )


def curve_to_csv(curve: TradeoffCurve) -> str:
    """CSV with columns P,rate,provenance_id, 6 decimals, LF line endings."""
    lines = ["P,rate,provenance_id"]
    for (p, rate), prov in zip(curve.points, curve.provenance):
        pid = prov.point_id + ("|repaired" if prov.repaired else "")
        lines.append(f"{p:.6f},{rate:.6f},{pid}")
    return "\n".join(lines) + "\n"


def synthetic_curve(points) -> TradeoffCurve:
    """Curve from raw (P, rate) pairs, for models and tests."""
    pts = tuple((float(p), float(r)) for p, r in points)
    prov = tuple(
        ProvenancePoint(point_id=f"P={p:.6f}", note="synthetic") for p, _ in pts
    )
    return TradeoffCurve(points=pts, provenance=prov)
