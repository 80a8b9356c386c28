"""Directed information between input and output paths of a state channel.

Three routes to the same number: the per-step sum of conditional mutual
informations, a functional of the pair (input law, channel law), and the
exchange identity that swaps the roles of the two paths. All values in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .causal import (
    CausalConditioning,
    DEFAULT_TABLE_CAP,
    channel_prob_table,
    joint_and_output_probs,
    policy_weight_table,
    uniform_policy,
)
from .channel import CompoundFamily, FeedbackMap, FscSpec, no_feedback
from .errors import ValidationError
from .util import xlogy

AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class DirectedInfoResult:
    """Total directed information and its per-step decomposition, in nats."""

    value_nats: float
    per_step: tuple

    def __post_init__(self):
        if abs(self.value_nats - math.fsum(self.per_step)) > AGREEMENT_TOL:
            raise ValidationError("per-step terms do not resum to the total")


def information_functional(w: np.ndarray, p: np.ndarray) -> float:
    """sum_{x,y} w(x,y) p(y||x) log( p(y||x) / sum_x' w p ) with 0 log 0 = 0."""
    joint = w * p
    p_y = joint.sum(axis=0)
    mask = joint > 0
    terms = joint[mask] * (np.log(p[mask]) - np.log(p_y[np.nonzero(mask)[1]]))
    return float(terms.sum())


def _tensor(joint: np.ndarray, n: int, x_card: int, y_card: int) -> np.ndarray:
    return np.asarray(joint).reshape((x_card,) * n + (y_card,) * n)


def _marginal_entropy(t: np.ndarray, n: int, keep_x: int, keep_y: int) -> float:
    axes = tuple(range(keep_x, n)) + tuple(range(n + keep_y, 2 * n))
    m = t.sum(axis=axes) if axes else t
    return float(-xlogy(m, m).sum())


def per_step_terms(joint: np.ndarray, n: int, x_card: int, y_card: int) -> list[float]:
    """I(Y_i ; X^i | Y^{i-1}) for i = 1..n, from the exact path joint."""
    t = _tensor(joint, n, x_card, y_card)
    terms = []
    for i in range(1, n + 1):
        h_yi = _marginal_entropy(t, n, 0, i)
        h_xi_yprev = _marginal_entropy(t, n, i, i - 1)
        h_xi_yi = _marginal_entropy(t, n, i, i)
        h_yprev = _marginal_entropy(t, n, 0, i - 1)
        terms.append(h_yi + h_xi_yprev - h_xi_yi - h_yprev)
    return terms


def exchange_terms(joint: np.ndarray, n: int, x_card: int, y_card: int) -> list[float]:
    """I(X_i ; Y_i^n | X^{i-1}, Y^{i-1}) for i = 1..n, from the path joint."""
    t = _tensor(joint, n, x_card, y_card)
    terms = []
    for i in range(1, n + 1):
        h_xi_yprev = _marginal_entropy(t, n, i, i - 1)
        h_xprev_yn = _marginal_entropy(t, n, i - 1, n)
        h_xi_yn = _marginal_entropy(t, n, i, n)
        h_xprev_yprev = _marginal_entropy(t, n, i - 1, i - 1)
        terms.append(h_xi_yprev + h_xprev_yn - h_xi_yn - h_xprev_yprev)
    return terms


def directed_info_from_joint(joint: np.ndarray, n: int, x_card: int, y_card: int) -> float:
    return math.fsum(per_step_terms(joint, n, x_card, y_card))


def directed_information(
    q: CausalConditioning,
    fsc: FscSpec,
    s0,
    feedback: FeedbackMap,
    cap: int = DEFAULT_TABLE_CAP,
) -> DirectedInfoResult:
    """Directed information for one channel member from initial state s0.

    s0 may be a state index or a prior vector over states; a prior computes
    the quantity for the channel law mixed over the initial state.
    """
    w = policy_weight_table(q, fsc.n_outputs, feedback, cap=cap)
    p = channel_prob_table(fsc, q.horizon, s0, cap=cap)
    value = information_functional(w, p)
    steps = per_step_terms(w * p, q.horizon, q.x_card, fsc.n_outputs)
    return DirectedInfoResult(value_nats=value, per_step=tuple(steps))


def directed_information_kim(
    q: CausalConditioning,
    fsc: FscSpec,
    s0,
    feedback: FeedbackMap,
    cap: int = DEFAULT_TABLE_CAP,
) -> float:
    """Same quantity through the exchange identity; agrees to 1e-10."""
    joint, _ = joint_and_output_probs(q, fsc, s0, feedback, cap=cap)
    return math.fsum(exchange_terms(joint, q.horizon, q.x_card, fsc.n_outputs))


@dataclass(frozen=True)
class StateGapResult:
    value_mixed: float
    value_given_state: float
    gap: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.gap <= self.bound + 1e-9


def state_gap_check(
    q: CausalConditioning,
    fsc: FscSpec,
    feedback: FeedbackMap,
    s0_prior=None,
    cap: int = DEFAULT_TABLE_CAP,
) -> StateGapResult:
    """Gap between state-marginalized and state-averaged directed information.

    The initial state is drawn from s0_prior (uniform when omitted); the gap
    is bounded by ln of the state count.
    """
    if s0_prior is None:
        s0_prior = np.full(fsc.n_states, 1.0 / fsc.n_states)
    s0_prior = np.asarray(s0_prior, dtype=float)
    mixed = directed_information(q, fsc, s0_prior, feedback, cap=cap).value_nats
    given = math.fsum(
        float(pr) * directed_information(q, fsc, s, feedback, cap=cap).value_nats
        for s, pr in enumerate(s0_prior)
        if pr > 0
    )
    gap = abs(mixed - given)
    return StateGapResult(
        value_mixed=mixed,
        value_given_state=given,
        gap=gap,
        bound=math.log(fsc.n_states),
    )


@dataclass(frozen=True)
class ContinuityBoundResult:
    delta: float
    lhs: float | None
    rhs: float | None
    applicable: bool

    @property
    def passed(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs + 1e-9


def continuity_bound_check(
    q1: CausalConditioning,
    q2: CausalConditioning,
    fsc: FscSpec,
    s0,
    feedback: FeedbackMap,
    cap: int = DEFAULT_TABLE_CAP,
) -> ContinuityBoundResult:
    """|I(q1) - I(q2)| against -delta log(delta / |Y|^{2n}).

    delta sums |q1 - q2| path weights over all (x^n, y^n) pairs. The bound
    only applies for delta <= 1/2; larger perturbations report not-applicable.
    """
    if (q1.horizon, q1.x_card, q1.z_card) != (q2.horizon, q2.x_card, q2.z_card):
        raise ValidationError("policies must share horizon and alphabets")
    w1 = policy_weight_table(q1, fsc.n_outputs, feedback, cap=cap)
    w2 = policy_weight_table(q2, fsc.n_outputs, feedback, cap=cap)
    delta = float(np.abs(w1 - w2).sum())
    if delta > 0.5:
        return ContinuityBoundResult(delta=delta, lhs=None, rhs=None, applicable=False)
    p = channel_prob_table(fsc, q1.horizon, s0, cap=cap)
    lhs = abs(information_functional(w1, p) - information_functional(w2, p))
    if delta == 0.0:
        rhs = 0.0
    else:
        rhs = -delta * math.log(delta / fsc.n_outputs ** (2 * q1.horizon))
    return ContinuityBoundResult(delta=delta, lhs=lhs, rhs=rhs, applicable=True)


@dataclass(frozen=True)
class ZeroCapacityWitness:
    confirmed: bool
    uniform_value: float
    output_independent: bool | None
    solver_value: float | None

    def __bool__(self) -> bool:
        return self.confirmed


def zero_capacity_witness(
    fsc: FscSpec,
    feedback: FeedbackMap,
    n: int,
    s0_prior=None,
    solver_cfg=None,
    cap: int = DEFAULT_TABLE_CAP,
) -> ZeroCapacityWitness:
    """Certify a useless channel: zero info under a uniform open-loop input
    forces the output law to ignore the input, and then no causally
    conditioned law can do better, with or without feedback.
    """
    q_u = uniform_policy(n, fsc.n_inputs, 1)
    nofb = no_feedback(fsc.outputs)
    w = policy_weight_table(q_u, fsc.n_outputs, nofb, cap=cap)
    p = channel_prob_table(fsc, n, s0_prior, cap=cap)
    uniform_value = information_functional(w, p)
    if uniform_value > 1e-10:
        return ZeroCapacityWitness(
            confirmed=False,
            uniform_value=uniform_value,
            output_independent=None,
            solver_value=None,
        )
    p_out = (w * p).sum(axis=0)
    output_independent = bool(np.max(np.abs(p - p_out[None, :])) <= 1e-9)
    from .capacity import SolverConfig, compute_Cn

    cfg = solver_cfg if solver_cfg is not None else SolverConfig(max_iters=80, restarts=1)
    family = CompoundFamily(members=(fsc,), labels=("witness",))
    report = compute_Cn(family, feedback, n, cfg)
    solver_value = report.C_n_nats
    confirmed = output_independent and solver_value <= 1e-6
    return ZeroCapacityWitness(
        confirmed=confirmed,
        uniform_value=uniform_value,
        output_independent=output_independent,
        solver_value=solver_value,
    )
