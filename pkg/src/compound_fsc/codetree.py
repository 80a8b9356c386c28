"""Code-trees: feedback-dependent codewords stored as flat symbol vectors.

A depth-n tree over feedback alphabet Z holds one input symbol per node,
levels concatenated, nodes within a level ordered by the mixed-radix code of
their feedback history. Concatenated trees chain N blocks of depth m, each
block consulting only the feedback received inside the block.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .causal import CausalConditioning
from .errors import CapExceededError, ValidationError

DEFAULT_TYPE_SPACE_CAP = 1024


def tree_size(depth: int, z_card: int) -> int:
    """Node count of a depth-n tree: (|Z|^n - 1)/(|Z| - 1), or n when |Z| = 1."""
    if depth < 0 or z_card < 1:
        raise ValidationError("depth must be >= 0 and z_card >= 1")
    if z_card == 1:
        return depth
    return (z_card ** depth - 1) // (z_card - 1)


@dataclass(frozen=True, eq=False)
class CodeTree:
    depth: int
    x_card: int
    z_card: int
    symbols: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        symbols = np.ascontiguousarray(self.symbols, dtype=np.int64)
        want = tree_size(self.depth, self.z_card)
        if symbols.shape != (want,):
            raise ValidationError(f"symbol vector must have length {want}")
        if symbols.min() < 0 or symbols.max() >= self.x_card:
            raise ValidationError("symbols outside the input alphabet")
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    @property
    def key(self) -> int:
        return tree_code(self)


@dataclass(frozen=True, eq=False)
class ConcatTree:
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValidationError("need at least one block")
        first = blocks[0]
        for b in blocks:
            if (b.depth, b.x_card, b.z_card) != (first.depth, first.x_card, first.z_card):
                raise ValidationError("blocks must share depth and alphabets")
        object.__setattr__(self, "blocks", blocks)

    @property
    def depth(self) -> int:
        return self.blocks[0].depth * len(self.blocks)

    @property
    def block_depth(self) -> int:
        return self.blocks[0].depth

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def x_card(self) -> int:
        return self.blocks[0].x_card

    @property
    def z_card(self) -> int:
        return self.blocks[0].z_card

    @property
    def key(self) -> tuple:
        return tuple(tree_code(b) for b in self.blocks)


def tree_code(tree: CodeTree) -> int:
    """Canonical integer encoding: mixed-radix over the flat symbol vector."""
    code = 0
    for s in tree.symbols.tolist():
        code = code * tree.x_card + s
    return code


def tree_from_code(code: int, depth: int, x_card: int, z_card: int) -> CodeTree:
    size = tree_size(depth, z_card)
    digits = np.empty(size, dtype=np.int64)
    for k in range(size - 1, -1, -1):
        digits[k] = code % x_card
        code //= x_card
    if code:
        raise ValidationError("code out of range for this tree shape")
    return CodeTree(depth=depth, x_card=x_card, z_card=z_card, symbols=digits)


def _blocks(tree) -> tuple:
    if isinstance(tree, ConcatTree):
        return tree.blocks
    return (tree,)


def path(tree, z_hist) -> np.ndarray:
    """Input path selected by a feedback history z_1..z_{depth-1}."""
    z_hist = np.asarray(list(z_hist), dtype=np.int64)
    if z_hist.size < tree.depth - 1:
        raise ValidationError("feedback history too short for the tree depth")
    return paths_rows(tree, z_hist[: tree.depth - 1][None, :])[0]


def paths_rows(tree, z_rows: np.ndarray) -> np.ndarray:
    """Row-wise tree paths for a matrix of feedback histories (T, depth-1)."""
    z_rows = np.asarray(z_rows, dtype=np.int64)
    blocks = _blocks(tree)
    m = blocks[0].depth
    z = blocks[0].z_card
    t = z_rows.shape[0]
    if z_rows.shape[1] != tree.depth - 1:
        raise ValidationError("feedback matrix must have depth-1 columns")
    out = np.empty((t, tree.depth), dtype=np.int64)
    level_off = [tree_size(j, z) for j in range(m)]
    for b, block in enumerate(blocks):
        node = np.zeros(t, dtype=np.int64)
        for j in range(m):
            out[:, b * m + j] = block.symbols[level_off[j] + node]
            if j < m - 1:
                node = node * z + z_rows[:, b * m + j]
    return out


def sample_codetree(q: CausalConditioning, rng: np.random.Generator) -> CodeTree:
    """Draw a tree node by node: each node's symbol from the conditional for
    the (input, feedback) history spelled by its root path."""
    z = q.z_card
    base = q.x_card * z
    size = tree_size(q.horizon, z)
    symbols = np.empty(size, dtype=np.int64)
    hist = np.zeros(1, dtype=np.int64)
    offset = 0
    for i in range(q.horizon):
        probs = q.conditionals[i][hist]
        u = rng.random(hist.size)
        x = np.minimum((probs.cumsum(axis=1) < u[:, None]).sum(axis=1), q.x_card - 1)
        symbols[offset : offset + hist.size] = x
        offset += hist.size
        if i < q.horizon - 1:
            child = (hist * base + x * z)[:, None] + np.arange(z)[None, :]
            hist = child.reshape(-1)
    return CodeTree(depth=q.horizon, x_card=q.x_card, z_card=z, symbols=symbols)


def tree_prob(q: CausalConditioning, tree: CodeTree) -> float:
    """Probability that sample_codetree returns this tree: the product of the
    node conditionals over every node of the tree."""
    if (tree.depth, tree.x_card, tree.z_card) != (q.horizon, q.x_card, q.z_card):
        raise ValidationError("tree and policy shapes disagree")
    z = tree.z_card
    base = q.x_card * z
    hist = np.zeros(1, dtype=np.int64)
    offset = 0
    p = 1.0
    for i in range(q.horizon):
        x = tree.symbols[offset : offset + hist.size]
        p *= float(np.prod(q.conditionals[i][hist, x]))
        offset += hist.size
        if i < q.horizon - 1:
            child = (hist * base + x * z)[:, None] + np.arange(z)[None, :]
            hist = child.reshape(-1)
    return p


def _guard_type_space(x_card: int, m: int, z_card: int, cap: int) -> int:
    space = x_card ** tree_size(m, z_card)
    if space > cap:
        raise CapExceededError(
            f"type operations need |X|^D(m) = {space} distinct block trees (cap {cap})"
        )
    return space


@dataclass(frozen=True, eq=False)
class TreeType:
    """Empirical distribution of block trees inside a concatenated tree."""

    block_depth: int
    x_card: int
    z_card: int
    n_blocks: int
    entries: tuple  # ((block code, count), ...) sorted by code

    def __post_init__(self):
        entries = tuple(sorted((int(c), int(k)) for c, k in self.entries))
        if sum(k for _, k in entries) != self.n_blocks:
            raise ValidationError("type counts must sum to the block count")
        if any(k <= 0 for _, k in entries):
            raise ValidationError("type counts must be positive")
        object.__setattr__(self, "entries", entries)

    @property
    def key(self) -> tuple:
        return self.entries


def tree_type(tree: ConcatTree, type_space_cap: int = DEFAULT_TYPE_SPACE_CAP) -> TreeType:
    _guard_type_space(tree.x_card, tree.block_depth, tree.z_card, type_space_cap)
    counts = Counter(tree_code(b) for b in tree.blocks)
    return TreeType(
        block_depth=tree.block_depth,
        x_card=tree.x_card,
        z_card=tree.z_card,
        n_blocks=tree.n_blocks,
        entries=tuple(counts.items()),
    )


def type_count_bound(n_blocks: int, m: int, x_card: int, z_card: int) -> int:
    """(N+1)^(|X|^D(m)): crude count of possible block-tree types."""
    return (n_blocks + 1) ** (x_card ** tree_size(m, z_card))


def sample_uniform_from_type(
    tt: TreeType, rng: np.random.Generator, type_space_cap: int = DEFAULT_TYPE_SPACE_CAP
) -> ConcatTree:
    """Uniform draw from the type class: shuffle the block multiset."""
    _guard_type_space(tt.x_card, tt.block_depth, tt.z_card, type_space_cap)
    blocks = []
    for code, count in tt.entries:
        block = tree_from_code(code, tt.block_depth, tt.x_card, tt.z_card)
        blocks.extend([block] * count)
    order = rng.permutation(len(blocks))
    return ConcatTree(blocks=tuple(blocks[i] for i in order))


@dataclass(frozen=True, eq=False)
class Codebook:
    """Ordered message-to-tree table; duplicates allowed and kept."""

    trees: tuple
    rate_nats: float | None = None

    def __post_init__(self):
        trees = tuple(self.trees)
        if not trees:
            raise ValidationError("codebook must be non-empty")
        first = trees[0]
        for t in trees:
            if (type(t), t.depth, t.x_card, t.z_card) != (
                type(first),
                first.depth,
                first.x_card,
                first.z_card,
            ):
                raise ValidationError("codebook trees must share shape")
        object.__setattr__(self, "trees", trees)

    @property
    def m_count(self) -> int:
        return len(self.trees)

    @property
    def depth(self) -> int:
        return self.trees[0].depth

    def rate_consistent(self) -> bool | None:
        """Whether m_count equals ceil(exp(depth * rate)); None without a rate."""
        if self.rate_nats is None:
            return None
        return self.m_count == math.ceil(math.exp(self.depth * self.rate_nats) - 1e-12)


def sample_codebook(q: CausalConditioning, m_count: int, rng: np.random.Generator, rate_nats=None) -> Codebook:
    if m_count < 1:
        raise ValidationError("m_count must be >= 1")
    return Codebook(trees=tuple(sample_codetree(q, rng) for _ in range(m_count)), rate_nats=rate_nats)


def sample_concat_codebook(
    q_block: CausalConditioning, n_blocks: int, m_count: int, rng: np.random.Generator, rate_nats=None
) -> Codebook:
    """Independent blocks, each drawn from the same depth-m law."""
    if n_blocks < 1 or m_count < 1:
        raise ValidationError("n_blocks and m_count must be >= 1")
    trees = tuple(
        ConcatTree(blocks=tuple(sample_codetree(q_block, rng) for _ in range(n_blocks)))
        for _ in range(m_count)
    )
    return Codebook(trees=trees, rate_nats=rate_nats)


def delta_rate_penalty(n_blocks: int, m: int, x_card: int, z_card: int) -> float:
    """Rate lost when thinning to a dominant type: |X|^D(m) ln(N+1) / (N m)."""
    return x_card ** tree_size(m, z_card) * math.log(n_blocks + 1) / (n_blocks * m)


@dataclass(frozen=True, eq=False)
class DominantTypeResult:
    subcode: Codebook
    tree_type: TreeType
    delta_nats: float
    target_size: int


def dominant_type_subcode(
    cb: Codebook, type_space_cap: int = DEFAULT_TYPE_SPACE_CAP
) -> DominantTypeResult:
    """Thin a concatenated-tree codebook to its most frequent block type.

    Keeps the first ceil(M / (N+1)^(|X|^D(m))) trees of that type in message
    order; the pigeonhole argument guarantees that many exist. Ties between
    equally frequent types break toward the smaller type encoding.
    """
    first = cb.trees[0]
    if not isinstance(first, ConcatTree):
        raise ValidationError("dominant-type thinning needs concatenated trees")
    _guard_type_space(first.x_card, first.block_depth, first.z_card, type_space_cap)
    by_type: dict = {}
    types: dict = {}
    for idx, tree in enumerate(cb.trees):
        tt = tree_type(tree, type_space_cap)
        by_type.setdefault(tt.key, []).append(idx)
        types[tt.key] = tt
    top = max(len(v) for v in by_type.values())
    best_key = min(k for k, v in by_type.items() if len(v) == top)
    denom = type_count_bound(first.n_blocks, first.block_depth, first.x_card, first.z_card)
    target = max(1, -(-cb.m_count // denom))
    picked = by_type[best_key][:target]
    if len(picked) < target:
        raise RuntimeError("pigeonhole violated; dominant type smaller than target")
    subcode = Codebook(trees=tuple(cb.trees[i] for i in picked), rate_nats=None)
    delta = delta_rate_penalty(first.n_blocks, first.block_depth, first.x_card, first.z_card)
    return DominantTypeResult(
        subcode=subcode, tree_type=types[best_key], delta_nats=delta, target_size=target
    )
