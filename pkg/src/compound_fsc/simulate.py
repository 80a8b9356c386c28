"""Closed-loop Monte Carlo over a compound channel, plus exact error sums.

Per-trial randomness comes from one row of a counter-based (Philox) uniform
matrix keyed by the seed, so results do not depend on how trials are split
across worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .causal import causal_prob_rows, feedback_paths, uniform_policy
from .channel import (
    CompoundFamily,
    FeedbackMap,
    FscSpec,
    GilbertElliotParams,
    identity_feedback,
    make_gilbert_elliot,
)
from .codetree import Codebook, paths_rows, sample_codebook, tree_size
from .decoder import MLDecoder, UniversalDecoder
from .errors import CapExceededError, ValidationError
from .util import LN2, binary_entropy_nats, enumerate_paths, wilson_interval, worker_count

_THREAD_MIN_CHUNK = 20_000


@dataclass(frozen=True)
class TrialConfig:
    family: CompoundFamily
    true_label: str
    codebook: Codebook
    feedback: FeedbackMap
    decoder: str = "ml"  # "ml" decodes with the true member; "universal" merges all
    trials: int = 1000
    seed: int = 0
    s0: int | None = None
    s0_prior: tuple | None = None  # sampling prior when s0 is None; uniform default
    decoder_s0_prior: tuple | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.decoder not in ("ml", "universal"):
            raise ValidationError("decoder must be 'ml' or 'universal'")


@dataclass(frozen=True, eq=False)
class TrialResult:
    trials: int
    errors: int
    error_rate: float
    ci95: tuple
    messages: np.ndarray
    decisions: np.ndarray
    error_flags: np.ndarray
    initial_states: np.ndarray
    state_paths: np.ndarray
    outputs: np.ndarray


def _uniform_rows(seed: int, trials: int, cols: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed))
    return gen.random((trials, cols))


def _sample_categorical_rows(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = rows.cumsum(axis=1)
    return np.minimum((cum < u[:, None]).sum(axis=1), rows.shape[1] - 1)


def _tree_program(cb: Codebook):
    """Flatten all codebook trees into one symbol matrix plus block layout."""
    first = cb.trees[0]
    blocks = getattr(first, "blocks", None)
    if blocks is None:
        m, n_blocks = first.depth, 1
        flat = np.stack([t.symbols for t in cb.trees])
    else:
        m, n_blocks = first.block_depth, first.n_blocks
        flat = np.stack([np.concatenate([b.symbols for b in t.blocks]) for t in cb.trees])
    z = first.z_card
    level_off = np.array([tree_size(j, z) for j in range(m)])
    return flat, m, n_blocks, tree_size(m, z), level_off


def simulate_batch(
    fsc: FscSpec,
    cb: Codebook,
    feedback: FeedbackMap,
    w: np.ndarray,
    s0: np.ndarray,
    u_steps: np.ndarray,
):
    """Drive the channel for every trial at once; returns (x, y, states)."""
    flat, m, n_blocks, block_size, level_off = _tree_program(cb)
    t, n = u_steps.shape[0], cb.depth
    z_card = cb.trees[0].z_card
    s_cur = s0.copy()
    xs = np.empty((t, n), dtype=np.int64)
    ys = np.empty((t, n), dtype=np.int64)
    states = np.empty((t, n), dtype=np.int64)
    node = np.zeros(t, dtype=np.int64)
    for i in range(n):
        b, j = divmod(i, m)
        if j == 0:
            node = np.zeros(t, dtype=np.int64)
        x = flat[w, b * block_size + level_off[j] + node]
        rows = fsc.kernel[s_cur, x].reshape(t, -1)
        pick = _sample_categorical_rows(rows, u_steps[:, i])
        y = pick // fsc.n_states
        s_cur = pick % fsc.n_states
        if j < m - 1:
            node = node * z_card + feedback.table[y]
        xs[:, i], ys[:, i], states[:, i] = x, y, s_cur
    return xs, ys, states


def _make_decoder(cfg: TrialConfig):
    if cfg.decoder == "ml":
        return MLDecoder(cfg.family.member(cfg.true_label), cfg.feedback, cfg.decoder_s0_prior)
    return UniversalDecoder(cfg.family, cfg.feedback, cfg.decoder_s0_prior)


def run_trials(cfg: TrialConfig) -> TrialResult:
    """Monte Carlo error rate with a Wilson 95% interval."""
    fsc = cfg.family.member(cfg.true_label)
    cb = cfg.codebook
    n = cb.depth
    u = _uniform_rows(cfg.seed, cfg.trials, n + 2)
    w = np.minimum((u[:, 0] * cb.m_count).astype(np.int64), cb.m_count - 1)
    if cfg.s0 is not None:
        s0 = np.full(cfg.trials, cfg.s0, dtype=np.int64)
    else:
        prior = (
            np.full(fsc.n_states, 1.0 / fsc.n_states)
            if cfg.s0_prior is None
            else np.asarray(cfg.s0_prior, dtype=float)
        )
        s0 = _sample_categorical_rows(np.tile(prior, (cfg.trials, 1)), u[:, 1])
    decoder = _make_decoder(cfg)

    def chunk(lo: int, hi: int):
        xs, ys, states = simulate_batch(fsc, cb, cfg.feedback, w[lo:hi], s0[lo:hi], u[lo:hi, 2:])
        return ys, states, decoder.decode_rows(cb, ys)

    workers = worker_count()
    if workers > 1 and cfg.trials >= 2 * _THREAD_MIN_CHUNK:
        bounds = np.linspace(0, cfg.trials, workers + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: chunk(*ab), zip(bounds[:-1], bounds[1:])))
        ys = np.concatenate([p[0] for p in parts])
        states = np.concatenate([p[1] for p in parts])
        w_hat = np.concatenate([p[2] for p in parts])
    else:
        ys, states, w_hat = chunk(0, cfg.trials)
    flags = w_hat != w
    errors = int(flags.sum())
    return TrialResult(
        trials=cfg.trials,
        errors=errors,
        error_rate=errors / cfg.trials,
        ci95=wilson_interval(errors, cfg.trials),
        messages=w,
        decisions=w_hat,
        error_flags=flags,
        initial_states=s0,
        state_paths=states,
        outputs=ys,
    )


def exact_error_probability(
    cb: Codebook,
    fsc: FscSpec,
    s0: int,
    feedback: FeedbackMap,
    decoder,
    cap: int = 4096,
) -> float:
    """Average over messages of the exact decoding-error probability, by
    enumerating every output path. Refuses when |Y|^n exceeds the cap."""
    n = cb.depth
    n_y = fsc.n_outputs ** n
    if n_y > cap:
        raise CapExceededError(f"output enumeration needs {n_y} paths (cap {cap})")
    y_all = enumerate_paths(fsc.n_outputs, n)
    w_hat = decoder.decode_rows(cb, y_all)
    z_all = feedback_paths(feedback, y_all[:, :-1])
    total = 0.0
    for w, tree in enumerate(cb.trees):
        x_rows = paths_rows(tree, z_all)
        probs = causal_prob_rows(fsc, x_rows, y_all, int(s0))
        total += float(probs[w_hat != w].sum())
    return total / cb.m_count


@dataclass(frozen=True)
class Example1Row:
    theta: int
    n: int
    trials: int
    all_bad_freq: float
    all_bad_exact: float
    all_bad_sigma: float
    error_rate: float
    error_floor: float
    error_sigma: float
    one_minus_n_2n: float
    half: float
    rate_floor_bits: float
    rate_floor_nats: float


def example1_config(theta: int, n: int, trials: int, seed: int = 0) -> TrialConfig:
    """Burst-noise truncation setup: two uniformly drawn code-trees over a
    slow-mixing channel forced to start in the noisy state."""
    g = 2.0 ** (-theta)
    member = make_gilbert_elliot(GilbertElliotParams(g=g, b=g, p_g=0.0, p_b=0.5))
    family = CompoundFamily(members=(member,), labels=(f"theta-{theta}",))
    fb = identity_feedback(member.outputs)
    rng = np.random.default_rng(seed)
    q_u = uniform_policy(n, member.n_inputs, fb.z_card)
    cb = sample_codebook(q_u, 2, rng)
    bad = 1  # state order is (G, B)
    return TrialConfig(
        family=family,
        true_label=f"theta-{theta}",
        codebook=cb,
        feedback=fb,
        decoder="ml",
        trials=trials,
        seed=seed,
        s0=bad,
        decoder_s0_prior=(0.0, 1.0),
    )


def example1_row(res: TrialResult, theta: int, n: int) -> Example1Row:
    bad = 1
    g = 2.0 ** (-theta)
    all_bad = (res.state_paths == bad).all(axis=1)
    freq = float(all_bad.mean())
    exact = (1.0 - g) ** n
    err_floor = 0.25
    trials = res.trials
    return Example1Row(
        theta=theta,
        n=n,
        trials=trials,
        all_bad_freq=freq,
        all_bad_exact=exact,
        all_bad_sigma=math.sqrt(exact * (1.0 - exact) / trials),
        error_rate=res.error_rate,
        error_floor=err_floor,
        error_sigma=math.sqrt(err_floor * (1.0 - err_floor) / trials),
        one_minus_n_2n=1.0 - n * 2.0 ** (-n),
        half=0.5,
        rate_floor_bits=1.0 - binary_entropy_nats(0.25) / LN2,
        rate_floor_nats=LN2 - binary_entropy_nats(0.25),
    )


def example1_demo(theta: int, n: int, trials: int, seed: int = 0) -> Example1Row:
    """Run the burst-noise truncation demo end to end: from the all-bad start
    the state chain rarely leaves the noisy state, so short blocks carry
    almost no information and two messages collide a quarter of the time."""
    res = run_trials(example1_config(theta, n, trials, seed))
    return example1_row(res, theta, n)
