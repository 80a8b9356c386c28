"""Worst-case information maximization over causally conditioned input laws.

The objective is the min over (initial state, family member) of directed
information per symbol, a concave function of the input law in path space.
It is maximized by projected supergradient ascent on the per-history
conditionals, with the supergradient taken at an active minimizer, iterate
averaging over the tail, and multiple starts. The certified value is the
objective evaluated at the better of the averaged and best visited iterate,
so reported values are always achievable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .causal import (
    CausalConditioning,
    DEFAULT_TABLE_CAP,
    channel_prob_table,
    policy_weight_table,
    uniform_policy,
    random_policy,
)
from .channel import (
    CompoundFamily,
    FeedbackMap,
    FscSpec,
    identity_feedback,
    no_feedback,
    state_transition_matrix,
    stationary_distribution,
    uniform_ergodicity_horizon,
)
from .directed_info import information_functional
from .errors import CapExceededError, ValidationError
from .util import enumerate_paths, project_rows_to_simplex, xlogy

_TINY = 1e-300


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 500
    restarts: int = 3
    step_init: float = 0.5
    step_power: float = 0.5
    avg_fraction: float = 0.5
    value_tol: float = 1e-6
    active_tol: float = 1e-12
    seed: int = 7
    table_cap: int = DEFAULT_TABLE_CAP

    def __post_init__(self):
        if self.max_iters < 1 or self.restarts < 0:
            raise ValidationError("max_iters must be >= 1 and restarts >= 0")
        if self.step_init <= 0 or not 0 < self.avg_fraction <= 1:
            raise ValidationError("bad step schedule or averaging fraction")


@dataclass(frozen=True)
class SolverDiagnostics:
    converged: bool
    iterations: int
    restarts: int
    best_start: int
    source: str
    final_step: float
    stationarity_norm: float
    value_history: tuple

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["value_history"] = list(self.value_history)
        return d


@dataclass(frozen=True)
class CapacityReport:
    n: int
    state_count: int
    C_n_nats: float
    hatC_n_nats: float
    worst_case: tuple
    policy: CausalConditioning
    diagnostics: SolverDiagnostics

    def __post_init__(self):
        want = self.C_n_nats - math.log(self.state_count) / self.n
        if abs(self.hatC_n_nats - want) > 1e-12:
            raise ValidationError("hatC_n must equal C_n - ln|S|/n")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "state_count": self.state_count,
            "C_n_nats_per_symbol": self.C_n_nats,
            "hatC_n_nats_per_symbol": self.hatC_n_nats,
            "worst_case": list(self.worst_case),
            "policy": self.policy.to_dict(),
            "solver": self.diagnostics.to_dict(),
        }


class _PathWorkspace:
    """Index arrays shared by every objective/gradient evaluation at one horizon."""

    def __init__(self, x_card: int, y_card: int, z_card: int, n: int, feedback: FeedbackMap, cap: int):
        nx, ny = x_card ** n, y_card ** n
        if nx * ny > cap:
            raise CapExceededError(
                f"solver path table needs {nx * ny} entries (cap {cap})"
            )
        self.n = n
        self.x_card = x_card
        self.y_card = y_card
        self.z_card = z_card
        x_paths = enumerate_paths(x_card, n)
        y_paths = enumerate_paths(y_card, n)
        z_paths = feedback.table[y_paths]
        base = x_card * z_card
        self.hist = []
        self.x_at = []
        h = np.zeros((nx, ny), dtype=np.int64)
        for i in range(n):
            self.hist.append(h)
            xi = np.broadcast_to(x_paths[:, i][:, None], (nx, ny))
            self.x_at.append(np.ascontiguousarray(xi))
            if i < n - 1:
                h = h * base + x_paths[:, i][:, None] * z_card + z_paths[:, i][None, :]

    def factors(self, conds) -> list[np.ndarray]:
        return [conds[i][self.hist[i], self.x_at[i]] for i in range(self.n)]

    def weights(self, conds) -> np.ndarray:
        w = np.ones_like(self.x_at[0], dtype=float)
        for f in self.factors(conds):
            w = w * f
        return w

    def gradient(self, conds, didw: np.ndarray) -> list[np.ndarray]:
        """d/d conds of sum W * didw, via leave-one-out path products."""
        facs = self.factors(conds)
        n = self.n
        pref = [None] * n
        suf = [None] * n
        acc = np.ones_like(didw)
        for i in range(n):
            pref[i] = acc
            acc = acc * facs[i]
        acc = np.ones_like(didw)
        for i in range(n - 1, -1, -1):
            suf[i] = acc
            acc = acc * facs[i]
        grads = []
        for i in range(n):
            contrib = pref[i] * suf[i] * didw
            g = np.zeros_like(conds[i])
            np.add.at(g, (self.hist[i], self.x_at[i]), contrib)
            grads.append(g)
        return grads


def _pair_value(w: np.ndarray, p: np.ndarray) -> float:
    return information_functional(w, p)


def _pair_didw(w: np.ndarray, p: np.ndarray) -> np.ndarray:
    p_y = (w * p).sum(axis=0)
    log_py = np.log(np.maximum(p_y, _TINY))
    out = np.zeros_like(p)
    mask = p > 0
    out[mask] = p[mask] * (np.log(p[mask]) - np.broadcast_to(log_py, p.shape)[mask] - 1.0)
    return out


def _conds_copy(q: CausalConditioning) -> list[np.ndarray]:
    return [np.array(c) for c in q.conditionals]


def _as_policy(conds, n, x_card, z_card) -> CausalConditioning:
    return CausalConditioning(horizon=n, x_card=x_card, z_card=z_card, conditionals=tuple(conds))


def _solve(pairs, x_card, y_card, z_card, n, feedback, cfg, extra_starts):
    """Shared max-min ascent. pairs: list of (label_tuple, P table)."""
    ws = _PathWorkspace(x_card, y_card, z_card, n, feedback, cfg.table_cap)
    tables = [p for _, p in pairs]

    def value(conds):
        w = ws.weights(conds)
        vals = [_pair_value(w, p) / n for p in tables]
        return min(vals), vals, w

    rng = np.random.default_rng(cfg.seed)
    starts = [uniform_policy(n, x_card, z_card)]
    starts.extend(extra_starts)
    starts.extend(random_policy(n, x_card, z_card, rng) for _ in range(cfg.restarts))

    global_best = (-math.inf, None, None, -1, "best")  # value, conds, history, start idx, src
    for start_idx, q0 in enumerate(starts):
        conds = _conds_copy(q0)
        avg = [np.zeros_like(c) for c in conds]
        avg_count = 0
        avg_from = max(1, int(math.ceil(cfg.max_iters * (1.0 - cfg.avg_fraction))))
        best_v, best_conds = -math.inf, None
        history = []
        for t in range(1, cfg.max_iters + 1):
            j, vals, w = value(conds)
            history.append(j)
            if j > best_v:
                best_v = j
                best_conds = [c.copy() for c in conds]
            active = min(
                (i for i, v in enumerate(vals) if v <= j + cfg.active_tol),
                default=int(np.argmin(vals)),
            )
            didw = _pair_didw(w, tables[active])
            grads = ws.gradient(conds, didw)
            step = cfg.step_init / (t ** cfg.step_power)
            for i in range(n):
                conds[i] = project_rows_to_simplex(conds[i] + (step / n) * grads[i])
            if t >= avg_from:
                for i in range(n):
                    avg[i] += conds[i]
                avg_count += 1
        avg_conds = [a / avg_count for a in avg]
        j_avg, _, _ = value(avg_conds)
        for cand_v, cand_c, src in ((j_avg, avg_conds, "averaged"), (best_v, best_conds, "best")):
            if cand_v > global_best[0]:
                global_best = (cand_v, cand_c, history, start_idx, src)

    c_n, conds, history, start_idx, source = global_best
    j_final, vals, w = value(conds)
    active = min(
        (i for i, v in enumerate(vals) if v <= j_final + cfg.active_tol),
        default=int(np.argmin(vals)),
    )
    didw = _pair_didw(w, tables[active])
    grads = ws.gradient(conds, didw)
    probe = 1e-3
    moved = [project_rows_to_simplex(conds[i] + probe * grads[i] / n) - conds[i] for i in range(n)]
    stationarity = max(float(np.abs(m).max()) for m in moved) / probe
    # converged when the running best stopped improving over the last quarter
    running = np.maximum.accumulate(history)
    window = max(10, cfg.max_iters // 4)
    converged = (running[-1] - running[max(0, len(running) - window)]) <= cfg.value_tol
    diag = SolverDiagnostics(
        converged=bool(converged),
        iterations=cfg.max_iters,
        restarts=len(starts),
        best_start=start_idx,
        source=source,
        final_step=cfg.step_init / (cfg.max_iters ** cfg.step_power),
        stationarity_norm=stationarity,
        value_history=tuple(history),
    )
    return c_n, _as_policy(conds, n, x_card, z_card), pairs[active][0], diag


def _state_pairs(family: CompoundFamily, n: int, cap: int):
    """(state label, member label) pairs in lexicographic evaluation order."""
    pairs = []
    states = family.members[0].states
    for s_idx, s_label in enumerate(states):
        for label, m in family:
            pairs.append(((str(s_label), label), channel_prob_table(m, n, s_idx, cap=cap)))
    return pairs


def compute_Cn(
    family: CompoundFamily,
    feedback: FeedbackMap,
    n: int,
    cfg: SolverConfig | None = None,
    extra_starts=(),
) -> CapacityReport:
    """Max over input laws of the min per-symbol directed information, together
    with the same value shifted down by ln|S|/n."""
    cfg = cfg or SolverConfig()
    first = family.members[0]
    if feedback.table.size != first.n_outputs:
        raise ValidationError("feedback map does not cover the output alphabet")
    pairs = _state_pairs(family, n, cfg.table_cap)
    c_n, policy, worst, diag = _solve(
        pairs, first.n_inputs, first.n_outputs, feedback.z_card, n, feedback, cfg, extra_starts
    )
    return CapacityReport(
        n=n,
        state_count=first.n_states,
        C_n_nats=c_n,
        hatC_n_nats=c_n - math.log(first.n_states) / n,
        worst_case=worst,
        policy=policy,
        diagnostics=diag,
    )


def compute_Cn_nofeedback(
    family: CompoundFamily,
    n: int,
    cfg: SolverConfig | None = None,
    extra_starts=(),
) -> CapacityReport:
    """Same program restricted to open-loop inputs (singleton feedback alphabet)."""
    return compute_Cn(family, no_feedback(family.members[0].outputs), n, cfg, extra_starts)


def compute_Cn_markovian(
    family: CompoundFamily,
    feedback: FeedbackMap,
    n: int,
    cfg: SolverConfig | None = None,
    ergodicity_eps: float = 0.05,
    ergodicity_max_n: int = 500,
    extra_starts=(),
) -> CapacityReport:
    """Worst case over members only, each started from its stationary state law.

    Requires an input-independent state marginal and uniform ergodicity at
    the configured tolerance.
    """
    cfg = cfg or SolverConfig()
    first = family.members[0]
    for label, m in family:
        state_transition_matrix(m)
    if uniform_ergodicity_horizon(family, ergodicity_eps, ergodicity_max_n) is None:
        raise ValidationError(
            f"family is not uniformly ergodic within {ergodicity_max_n} steps at eps={ergodicity_eps}"
        )
    pairs = []
    for label, m in family:
        pi = stationary_distribution(m)
        pairs.append((("stationary", label), channel_prob_table(m, n, pi, cap=cfg.table_cap)))
    c_n, policy, worst, diag = _solve(
        pairs, first.n_inputs, first.n_outputs, feedback.z_card, n, feedback, cfg, extra_starts
    )
    return CapacityReport(
        n=n,
        state_count=first.n_states,
        C_n_nats=c_n,
        hatC_n_nats=c_n - math.log(first.n_states) / n,
        worst_case=worst,
        policy=policy,
        diagnostics=diag,
    )


def product_policy(q_head: CausalConditioning, q_tail: CausalConditioning) -> CausalConditioning:
    """Concatenate two input laws; the tail conditions only on its own block."""
    if q_head.x_card != q_tail.x_card or q_head.z_card != q_tail.z_card:
        raise ValidationError("policies must share alphabets")
    base = q_head.x_card * q_head.z_card
    conds = [np.array(c) for c in q_head.conditionals]
    reps = base ** q_head.horizon
    for local in range(q_tail.horizon):
        conds.append(np.tile(q_tail.conditionals[local], (reps, 1)))
        reps_check = conds[-1].shape[0]
        assert reps_check == base ** (q_head.horizon + local)
    return CausalConditioning(
        horizon=q_head.horizon + q_tail.horizon,
        x_card=q_head.x_card,
        z_card=q_head.z_card,
        conditionals=tuple(conds),
    )


@dataclass(frozen=True)
class SuperadditivityResult:
    k: int
    m: int
    lhs: float
    rhs: float
    slack: float
    passed: bool
    report_k: CapacityReport
    report_m: CapacityReport
    report_n: CapacityReport


def superadditivity_check(
    family: CompoundFamily,
    feedback: FeedbackMap,
    k: int,
    m: int,
    cfg: SolverConfig | None = None,
    slack: float = 1e-3,
) -> SuperadditivityResult:
    """n*hatC_n against k*hatC_k + m*hatC_m for n = k + m.

    The n-horizon solve is warm-started from the product of the shorter
    optimal laws, which is exactly the construction behind the inequality.
    """
    cfg = cfg or SolverConfig()
    rk = compute_Cn(family, feedback, k, cfg)
    rm = compute_Cn(family, feedback, m, cfg)
    warm = product_policy(rk.policy, rm.policy)
    rn = compute_Cn(family, feedback, k + m, cfg, extra_starts=(warm,))
    lhs = (k + m) * rn.hatC_n_nats
    rhs = k * rk.hatC_n_nats + m * rm.hatC_n_nats
    return SuperadditivityResult(
        k=k,
        m=m,
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        passed=bool(lhs >= rhs - slack),
        report_k=rk,
        report_m=rm,
        report_n=rn,
    )


def blahut_arimoto(cond: np.ndarray, tol: float = 1e-8, max_iters: int = 200_000):
    """Single-letter capacity of a memoryless conditional P(y|x), in nats.

    Alternating maximization with the standard upper/lower capacity bounds as
    the stopping rule; returns (capacity, optimal input distribution).
    """
    p = np.asarray(cond, dtype=float)
    if p.ndim != 2 or np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1)) > 1e-9:
        raise ValidationError("conditional table must be row-stochastic")
    nx = p.shape[0]
    q = np.full(nx, 1.0 / nx)
    gap_tol = min(tol, 1e-10)
    for _ in range(max_iters):
        p_y = q @ p
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.where(p > 0, np.log(np.maximum(p, _TINY)) - np.log(np.maximum(p_y, _TINY))[None, :], 0.0)
        d = (p * log_ratio).sum(axis=1)
        upper = float(d.max())
        lower = float(np.log(np.dot(q, np.exp(d - d.max()))) + d.max())
        if upper - lower <= gap_tol:
            return 0.5 * (upper + lower), q
        q = q * np.exp(d - d.max())
        q /= q.sum()
    raise RuntimeError("alternating maximization did not converge")


def memoryless_compound_fb_capacity(family: CompoundFamily, tol: float = 1e-8) -> float:
    """Worst-member single-letter capacity; feedback cannot improve it for a
    known-order memoryless family, so this is the compound feedback value."""
    values = []
    for label, m in family:
        if m.n_states != 1:
            raise ValidationError("members must be memoryless (single state)")
        values.append(blahut_arimoto(m.kernel[0, :, :, 0], tol=tol)[0])
    return min(values)


def mixture_policy(q1: CausalConditioning, q2: CausalConditioning, lam: float) -> CausalConditioning:
    """Convex combination in path space, re-factorized into conditionals.

    Histories never reached by the mixture get uniform rows.
    """
    if (q1.horizon, q1.x_card, q1.z_card) != (q2.horizon, q2.x_card, q2.z_card):
        raise ValidationError("policies must share horizon and alphabets")
    if not 0.0 <= lam <= 1.0:
        raise ValidationError("lam must lie in [0, 1]")
    n, x_card, z_card = q1.horizon, q1.x_card, q1.z_card
    base = x_card * z_card
    conds = []
    # prefix[h] = q(x^i, applied to the (x, z) prefix encoded by h)
    pref1 = np.ones(1)
    pref2 = np.ones(1)
    for i in range(n):
        # extend prefixes by one (x, z) pair: shape (hist, x, z)
        t1 = pref1[:, None] * q1.conditionals[i]  # (hist, x)
        t2 = pref2[:, None] * q2.conditionals[i]
        num = lam * t1 + (1 - lam) * t2
        den = (lam * pref1 + (1 - lam) * pref2)[:, None]
        row = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0 / x_card)
        row /= row.sum(axis=1, keepdims=True)
        conds.append(row)
        if i < n - 1:
            pref1 = np.repeat(t1.reshape(-1), z_card)
            pref2 = np.repeat(t2.reshape(-1), z_card)
    return CausalConditioning(horizon=n, x_card=x_card, z_card=z_card, conditionals=tuple(conds))


def _is_gilbert_elliot_shaped(m: FscSpec) -> bool:
    if not (m.n_states == 2 and m.n_inputs == 2 and m.n_outputs == 2):
        return False
    try:
        trans = state_transition_matrix(m)
    except ValidationError:
        return False
    emit = m.kernel.sum(axis=3)  # [s, x, y]
    rebuilt = emit[:, :, :, None] * trans[:, None, None, :]
    if np.max(np.abs(rebuilt - m.kernel)) > 1e-9:
        return False
    # symmetric crossover per state
    return bool(np.max(np.abs(emit[:, 0, 0] - emit[:, 1, 1])) <= 1e-9)


@dataclass(frozen=True)
class FeedbackGapResult:
    n: int
    C_fb: float
    C_nfb: float
    gap: float
    uniform_value: float
    minmax_bound: float
    report_fb: CapacityReport
    report_nfb: CapacityReport


def ge_feedback_gap(family: CompoundFamily, n: int, cfg: SolverConfig | None = None) -> FeedbackGapResult:
    """Feedback vs no-feedback worst-case values for a Gilbert-Elliot family.

    For these channels a uniform open-loop input attains every per-member
    maximum (additive noise), so the min-max side needs no inner solve.
    """
    cfg = cfg or SolverConfig()
    for label, m in family:
        if not _is_gilbert_elliot_shaped(m):
            raise ValidationError(f"member {label!r} is not Gilbert-Elliot shaped")
    first = family.members[0]
    q_u = uniform_policy(n, first.n_inputs, 1)
    nofb = no_feedback(first.outputs)
    w = policy_weight_table(q_u, first.n_outputs, nofb, cap=cfg.table_cap)
    per_pair = []
    for s_idx in range(first.n_states):
        for label, m in family:
            p = channel_prob_table(m, n, s_idx, cap=cfg.table_cap)
            per_pair.append(information_functional(w, p) / n)
    uniform_value = min(per_pair)
    minmax_bound = uniform_value
    rep_fb = compute_Cn(family, identity_feedback(first.outputs), n, cfg)
    rep_nfb = compute_Cn_nofeedback(family, n, cfg)
    if rep_nfb.C_n_nats < uniform_value - 1e-9:
        raise RuntimeError("no-feedback solve fell below the feasible uniform value")
    if rep_fb.C_n_nats < uniform_value - 1e-9:
        raise RuntimeError("feedback solve fell below the feasible uniform value")
    if rep_fb.C_n_nats > minmax_bound + 1e-9:
        raise RuntimeError("feedback solve exceeded the min-max bound")
    return FeedbackGapResult(
        n=n,
        C_fb=rep_fb.C_n_nats,
        C_nfb=rep_nfb.C_n_nats,
        gap=rep_fb.C_n_nats - rep_nfb.C_n_nats,
        uniform_value=uniform_value,
        minmax_bound=minmax_bound,
        report_fb=rep_fb,
        report_nfb=rep_nfb,
    )
