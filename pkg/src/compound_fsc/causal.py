"""Causally conditioned input laws and channel path probabilities.

An input law over horizon n is a collection of conditionals
q_i(x_i | x^{i-1}, z^{i-1}); its product gives the weight the encoder assigns
an input path given a feedback path. The channel side is the causal law
P(y^n || x^n, s_0), obtained by summing state paths with a forward recursion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .channel import FeedbackMap, FscSpec
from .errors import CapExceededError, ValidationError
from .util import enumerate_paths

ROW_SUM_TOL = 1e-9
DEFAULT_TABLE_CAP = 2 ** 24


@dataclass(frozen=True, eq=False)
class CausalConditioning:
    """Per-step conditionals q_i(x | history), histories in mixed-radix order.

    conditionals[i] has shape ((x_card*z_card)**i, x_card): one row per joint
    history (x^i, z^i), encoded earliest-pair-most-significant with pair code
    x*z_card + z.
    """

    horizon: int
    x_card: int
    z_card: int
    conditionals: tuple

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if self.x_card < 1 or self.z_card < 1:
            raise ValidationError("alphabet cardinalities must be >= 1")
        conds = tuple(np.ascontiguousarray(c, dtype=float) for c in self.conditionals)
        if len(conds) != self.horizon:
            raise ValidationError("need one conditional table per step")
        base = self.x_card * self.z_card
        for i, c in enumerate(conds):
            want = (base ** i, self.x_card)
            if c.shape != want:
                raise ValidationError(f"step {i} table shape {c.shape} != {want}")
            if np.any(c < -1e-15):
                raise ValidationError("conditionals must be non-negative")
            if np.max(np.abs(c.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
                raise ValidationError("conditional rows must sum to 1")
        for c in conds:
            c.setflags(write=False)
        object.__setattr__(self, "conditionals", conds)

    def history_count(self, step: int) -> int:
        return (self.x_card * self.z_card) ** step

    def to_dict(self) -> dict:
        flat = []
        for c in self.conditionals:
            flat.extend(c.reshape(-1).tolist())
        return {
            "horizon": self.horizon,
            "x_card": self.x_card,
            "z_card": self.z_card,
            "conditionals": flat,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CausalConditioning":
        try:
            horizon = int(d["horizon"])
            x_card = int(d["x_card"])
            z_card = int(d["z_card"])
            flat = np.asarray(d["conditionals"], dtype=float)
        except KeyError as e:
            raise ValidationError(f"policy dict missing key {e}") from e
        conds = []
        pos = 0
        for i in range(horizon):
            n = (x_card * z_card) ** i * x_card
            conds.append(flat[pos : pos + n].reshape((x_card * z_card) ** i, x_card))
            pos += n
        if pos != flat.size:
            raise ValidationError("flat conditional array has wrong length")
        return cls(horizon=horizon, x_card=x_card, z_card=z_card, conditionals=tuple(conds))


def history_index(xs, zs, x_card: int, z_card: int) -> int:
    """Mixed-radix code of a joint history, earliest (x, z) pair most significant."""
    if len(xs) != len(zs):
        raise ValidationError("history parts must have equal length")
    h = 0
    for x, z in zip(xs, zs):
        h = h * (x_card * z_card) + int(x) * z_card + int(z)
    return h


def uniform_policy(n: int, x_card: int, z_card: int) -> CausalConditioning:
    base = x_card * z_card
    conds = tuple(np.full((base ** i, x_card), 1.0 / x_card) for i in range(n))
    return CausalConditioning(horizon=n, x_card=x_card, z_card=z_card, conditionals=conds)


def random_policy(n: int, x_card: int, z_card: int, rng: np.random.Generator) -> CausalConditioning:
    base = x_card * z_card
    conds = []
    for i in range(n):
        c = rng.dirichlet(np.ones(x_card), size=base ** i)
        conds.append(c)
    return CausalConditioning(horizon=n, x_card=x_card, z_card=z_card, conditionals=tuple(conds))


def iid_policy(n: int, marginal, z_card: int) -> CausalConditioning:
    """Same single-letter input marginal at every step, ignoring the history."""
    marginal = np.asarray(marginal, dtype=float)
    x_card = marginal.size
    base = x_card * z_card
    conds = tuple(np.tile(marginal, (base ** i, 1)) for i in range(n))
    return CausalConditioning(horizon=n, x_card=x_card, z_card=z_card, conditionals=conds)


def input_prob(q: CausalConditioning, xs, zs) -> float:
    """Product of the per-step conditionals along one (x, z) path.

    zs covers steps 1..n-1; a trailing feedback symbol, if present, is unused.
    """
    xs = list(xs)
    if len(xs) != q.horizon:
        raise ValidationError("input path length must equal the horizon")
    zs = list(zs)[: q.horizon - 1]
    if len(zs) != q.horizon - 1:
        raise ValidationError("feedback path must cover steps 1..n-1")
    p = 1.0
    h = 0
    base = q.x_card * q.z_card
    for i, x in enumerate(xs):
        p *= q.conditionals[i][h, x]
        if i < q.horizon - 1:
            h = h * base + x * q.z_card + zs[i]
    return p


@dataclass(frozen=True)
class ForwardState:
    """State-resolved prefix weights alpha[s] = P(y^i, s_i = s || x^i, s_0)."""

    step: int
    alpha: np.ndarray

    @property
    def prefix_prob(self) -> float:
        return float(math.fsum(self.alpha.tolist()))


def forward_pass(fsc: FscSpec, xs, ys, s0: int) -> list[ForwardState]:
    """All intermediate forward states for one (x, y) path from state s0."""
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        raise ValidationError("input and output paths must have equal length")
    if not 0 <= s0 < fsc.n_states:
        raise ValidationError("s0 outside the state alphabet")
    alpha = np.zeros(fsc.n_states)
    alpha[s0] = 1.0
    out = [ForwardState(step=0, alpha=alpha)]
    for i, (x, y) in enumerate(zip(xs, ys), start=1):
        alpha = alpha @ fsc.kernel[:, x, y, :]
        out.append(ForwardState(step=i, alpha=alpha))
    return out

def causal_channel_prob(fsc: FscSpec, xs, ys, s0: int) -> float:
    """P(y^n || x^n, s_0): sum over state paths via the forward recursion."""
    return forward_pass(fsc, xs, ys, s0)[-1].prefix_prob


def naive_causal_channel_prob(fsc: FscSpec, xs, ys, s0: int) -> float:
    """Brute-force state-path enumeration; oracle for the forward recursion."""
    xs, ys = list(xs), list(ys)
    n = len(xs)
    total = []
    for path in enumerate_paths(fsc.n_states, n):
        p = 1.0
        prev = s0
        for i in range(n):
            p *= fsc.kernel[prev, xs[i], ys[i], path[i]]
            prev = path[i]
        total.append(p)
    return math.fsum(total)


def causal_prob_rows(fsc: FscSpec, x_rows: np.ndarray, y_rows: np.ndarray, s0_prior) -> np.ndarray:
    """Vector of sum_s0 prior(s0) P(y || x, s0) for row-aligned path matrices."""
    x_rows = np.asarray(x_rows, dtype=np.int64)
    y_rows = np.asarray(y_rows, dtype=np.int64)
    if x_rows.shape != y_rows.shape:
        raise ValidationError("path matrices must share shape")
    t, n = x_rows.shape
    alpha = np.broadcast_to(_as_prior(fsc, s0_prior), (t, fsc.n_states)).copy()
    for i in range(n):
        step = fsc.kernel[:, x_rows[:, i], y_rows[:, i], :]  # [s_prev, row, s_next]
        alpha = np.einsum("ts,str->tr", alpha, step)
    return alpha.sum(axis=1)


def causal_log_prob_rows(fsc: FscSpec, x_rows: np.ndarray, y_rows: np.ndarray, s0_prior) -> np.ndarray:
    """Log of causal_prob_rows with per-step rescaling; -inf for zero paths."""
    x_rows = np.asarray(x_rows, dtype=np.int64)
    y_rows = np.asarray(y_rows, dtype=np.int64)
    if x_rows.shape != y_rows.shape:
        raise ValidationError("path matrices must share shape")
    t, n = x_rows.shape
    alpha = np.broadcast_to(_as_prior(fsc, s0_prior), (t, fsc.n_states)).copy()
    log_acc = np.zeros(t)
    for i in range(n):
        step = fsc.kernel[:, x_rows[:, i], y_rows[:, i], :]
        alpha = np.einsum("ts,str->tr", alpha, step)
        scale = alpha.sum(axis=1)
        dead = scale <= 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_acc += np.where(dead, -np.inf, np.log(np.where(dead, 1.0, scale)))
        alpha = np.where(dead[:, None], 0.0, alpha / np.where(scale[:, None] == 0, 1.0, scale[:, None]))
    return log_acc


def _as_prior(fsc: FscSpec, s0_prior) -> np.ndarray:
    if s0_prior is None:
        return np.full(fsc.n_states, 1.0 / fsc.n_states)
    if np.isscalar(s0_prior) or isinstance(s0_prior, (int, np.integer)):
        p = np.zeros(fsc.n_states)
        p[int(s0_prior)] = 1.0
        return p
    p = np.asarray(s0_prior, dtype=float)
    if p.shape != (fsc.n_states,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValidationError("s0 prior must be a distribution over the states")
    return p


def feedback_paths(feedback: FeedbackMap, y_rows: np.ndarray) -> np.ndarray:
    """Apply the feedback map elementwise to a matrix of output paths."""
    return feedback.table[np.asarray(y_rows, dtype=np.int64)]


def channel_prob_table(fsc: FscSpec, n: int, s0_prior, cap: int = DEFAULT_TABLE_CAP) -> np.ndarray:
    """Table P[xcode, ycode] = sum_s0 prior(s0) P(y^n || x^n, s0).

    Path codes are mixed-radix, earliest symbol most significant. Refuses
    above the cap instead of approximating.
    """
    nx, ny = fsc.n_inputs ** n, fsc.n_outputs ** n
    _check_cap(nx, ny, cap)
    x_paths = enumerate_paths(fsc.n_inputs, n)
    y_paths = enumerate_paths(fsc.n_outputs, n)
    table = np.empty((nx, ny))
    for k, xp in enumerate(x_paths):
        rows = np.broadcast_to(xp, (ny, n))
        table[k] = causal_prob_rows(fsc, rows, y_paths, s0_prior)
    return table


def policy_weight_table(q: CausalConditioning, y_card: int, feedback: FeedbackMap, cap: int = DEFAULT_TABLE_CAP) -> np.ndarray:
    """Table W[xcode, ycode] = q(x^n || f(y)^{n-1}) over all path pairs."""
    if feedback.z_card != q.z_card:
        raise ValidationError("policy and feedback map disagree on |Z|")
    if feedback.table.size != y_card:
        raise ValidationError("feedback table does not cover the output alphabet")
    n = q.horizon
    nx, ny = q.x_card ** n, y_card ** n
    _check_cap(nx, ny, cap)
    x_paths = enumerate_paths(q.x_card, n)
    y_paths = enumerate_paths(y_card, n)
    z_paths = feedback_paths(feedback, y_paths)
    base = q.x_card * q.z_card
    w = np.ones((nx, ny))
    h = np.zeros((nx, ny), dtype=np.int64)
    for i in range(n):
        xi = x_paths[:, i][:, None]
        w *= q.conditionals[i][h, np.broadcast_to(xi, h.shape)]
        if i < n - 1:
            h = h * base + xi * q.z_card + z_paths[:, i][None, :]
    return w


def joint_and_output_probs(
    q: CausalConditioning,
    fsc: FscSpec,
    s0,
    feedback: FeedbackMap,
    cap: int = DEFAULT_TABLE_CAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact joint P[xcode, ycode] and output marginal over all length-n paths.

    s0 may be a state index or a prior vector; the joint mixes over it.
    """
    if q.x_card != fsc.n_inputs:
        raise ValidationError("policy and channel disagree on |X|")
    w = policy_weight_table(q, fsc.n_outputs, feedback, cap=cap)
    p = channel_prob_table(fsc, q.horizon, s0, cap=cap)
    joint = w * p
    return joint, joint.sum(axis=0)


def _check_cap(nx: int, ny: int, cap: int) -> None:
    if nx * ny > cap:
        raise CapExceededError(
            f"joint table would need {nx * ny} entries (cap {cap}); refusing to approximate"
        )


def save_policy(q: CausalConditioning, path) -> None:
    with open(path, "w") as fh:
        json.dump(q.to_dict(), fh)
        fh.write("\n")


def load_policy(path) -> CausalConditioning:
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"invalid policy JSON: {e}") from e
    return CausalConditioning.from_dict(d)
