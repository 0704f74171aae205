"""Continuous-time working memory with attention addressing.

A memory is a bank of column vectors living in the controller's hidden
feature space. Read and write are weighted by attention factors; hard
attention touches exactly one column per instant, soft attention spreads
over all active columns. The reallocation mechanism shifts attention to
a fresh (or least relevant) column whenever no stored content is within
a threshold of the current hidden representation, so information already
stored survives the shift.

Distance conventions: all key/content comparisons use the max (infinity)
norm. Stored contents equilibrate at write_gain times the write vector,
so content comparisons divide the column by write_gain first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Spacing used to break ties when a baseline starts with several
# identical columns/keys active at once.
TIE_BREAK_SPACING = 1e-3


@dataclass
class WorkingMemory:
    """Memory bank owned by one simulation instance.

    contents: (n_hidden, capacity); columns at index >= n_active are
    all-zero and never read. keys: (2, capacity) when the addressing is
    state-keyed; content-keyed addressing uses the columns themselves,
    so no separate key storage exists in that mode.
    """

    contents: np.ndarray
    n_active: int
    capacity: int
    write_gain: float = 0.75
    key_rate: float = 1.0
    threshold: float = 0.2
    keys: np.ndarray | None = None

    def active(self) -> np.ndarray:
        return self.contents[:, :self.n_active]

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.contents[:, :self.n_active]))


@dataclass(frozen=True)
class AttentionConfig:
    """Attention mode and reallocation policy.

    mode: "soft", "hard_state" or "hard_content". reallocation: "off",
    "initial" (active only until the bank is full, then off for good) or
    "always". soft_key selects the distance metric the soft baseline
    uses ("content" or "state"); sharpness is its softmax scale.
    """

    mode: str = "hard_content"
    reallocation: str = "initial"
    sharpness: float = 10.0
    soft_key: str = "content"

    def __post_init__(self):
        if self.mode not in ("soft", "hard_state", "hard_content"):
            raise ValueError(f"unknown attention mode {self.mode!r}")
        if self.reallocation not in ("off", "initial", "always"):
            raise ValueError(f"unknown reallocation policy {self.reallocation!r}")
        if self.soft_key not in ("content", "state"):
            raise ValueError(f"unknown soft_key {self.soft_key!r}")

    @property
    def state_keyed(self) -> bool:
        return self.mode == "hard_state" or (
            self.mode == "soft" and self.soft_key == "state")


@dataclass(frozen=True)
class AttentionWeights:
    """Read/write factors over the active columns, plus the selected
    (hard) or dominant (soft) index."""

    weights: np.ndarray
    index: int


class EmptyMemoryError(ValueError):
    """Attention requested on a memory with no active locations."""


def softmax(a) -> np.ndarray:
    """Standard softmax with max subtraction for overflow safety."""
    a = np.asarray(a, dtype=float)
    shifted = np.exp(a - a.max())
    return shifted / shifted.sum()


def state_distances(mem: WorkingMemory, q) -> np.ndarray:
    """Max-norm distance from the query point to each active key."""
    if mem.keys is None:
        raise ValueError("memory has no state keys")
    q = np.asarray(q, dtype=float)
    return np.max(np.abs(mem.keys[:, :mem.n_active] - q[:, None]), axis=0)


def content_distances(mem: WorkingMemory, q) -> np.ndarray:
    """Max-norm distance from the query vector to each active column,
    with columns rescaled by 1/write_gain to undo the write equilibrium."""
    q = np.asarray(q, dtype=float)
    scaled = mem.contents[:, :mem.n_active] / mem.write_gain
    return np.max(np.abs(scaled - q[:, None]), axis=0)


def _one_hot(distances: np.ndarray) -> AttentionWeights:
    if distances.size == 0:
        raise EmptyMemoryError("no active memory locations")
    idx = int(np.argmin(distances))  # ties go to the lowest index
    w = np.zeros(distances.size)
    w[idx] = 1.0
    return AttentionWeights(weights=w, index=idx)


def hard_attention_state(mem: WorkingMemory, q) -> AttentionWeights:
    """One-hot selection of the key closest to the query state."""
    return _one_hot(state_distances(mem, q))


def hard_attention_content(mem: WorkingMemory, q) -> AttentionWeights:
    """One-hot selection of the column closest to the query
    representation (the columns act as their own keys)."""
    return _one_hot(content_distances(mem, q))


def soft_attention(mem: WorkingMemory, q, metric: str = "content",
                   sharpness: float = 10.0) -> AttentionWeights:
    """Softmax weights over negated distances; sharpness -> inf recovers
    the hard selection, sharpness 0 gives uniform weights."""
    d = state_distances(mem, q) if metric == "state" else content_distances(mem, q)
    if d.size == 0:
        raise EmptyMemoryError("no active memory locations")
    w = softmax(-sharpness * d)
    return AttentionWeights(weights=w, index=int(np.argmax(w)))


def attention(mem: WorkingMemory, config: AttentionConfig, x_query,
              sigma_query) -> AttentionWeights:
    """Dispatch on the configured mode; x_query is the plant position
    pair, sigma_query the current hidden activations."""
    if config.mode == "hard_state":
        return hard_attention_state(mem, x_query)
    if config.mode == "hard_content":
        return hard_attention_content(mem, sigma_query)
    q = x_query if config.soft_key == "state" else sigma_query
    return soft_attention(mem, q, metric=config.soft_key,
                          sharpness=config.sharpness)


def read(mem: WorkingMemory, att: AttentionWeights) -> np.ndarray:
    """Weighted combination of the active columns."""
    return mem.contents[:, :mem.n_active] @ att.weights


def write_derivative(mem: WorkingMemory, att: AttentionWeights, write_vec,
                     correction) -> np.ndarray:
    """Time derivative of the active columns.

    Each column relaxes toward write_gain*write_vec plus the error-driven
    correction, at a rate set by its attention factor; unattended columns
    have exactly zero derivative.
    """
    write_vec = np.asarray(write_vec, dtype=float)
    correction = np.asarray(correction, dtype=float)
    target = mem.write_gain * write_vec + correction
    cols = mem.contents[:, :mem.n_active]
    return att.weights[None, :] * (target[:, None] - cols)


def key_derivative(mem: WorkingMemory, att: AttentionWeights, x_query) -> np.ndarray:
    """Time derivative of the active state keys: each attended key decays
    toward the current position pair at rate key_rate."""
    if mem.keys is None:
        raise ValueError("memory has no state keys")
    x_query = np.asarray(x_query, dtype=float)
    cols = mem.keys[:, :mem.n_active]
    return -mem.key_rate * att.weights[None, :] * (cols - x_query[:, None])


def needs_reallocation(mem: WorkingMemory, sigma_now) -> bool:
    """True when no active column is strictly within the threshold of the
    current hidden representation."""
    return not bool(np.any(content_distances(mem, sigma_now) < mem.threshold))


def reallocate(mem: WorkingMemory, sigma_now, x_query=None) -> int:
    """Shift attention to a fresh or least-relevant column.

    Below capacity a new column is activated; at capacity the column
    farthest from the current representation is overwritten. The target
    column is initialized at write_gain*sigma_now (so its rescaled
    content equals the representation exactly) and, in state-keyed mode,
    its key is pinned at the current position pair. Returns the target
    index. All other columns are untouched.
    """
    sigma_now = np.asarray(sigma_now, dtype=float)
    if mem.n_active < mem.capacity:
        target = mem.n_active
        mem.n_active += 1
    else:
        target = int(np.argmax(content_distances(mem, sigma_now)))
    mem.contents[:, target] = mem.write_gain * sigma_now
    if mem.keys is not None:
        if x_query is None:
            raise ValueError("state-keyed memory needs the position query")
        mem.keys[:, target] = np.asarray(x_query, dtype=float)
    return target


def init_growing(n_hidden: int, capacity: int, sigma0, x0, state_keyed: bool,
                 write_gain: float = 0.75, key_rate: float = 1.0,
                 threshold: float = 0.2) -> WorkingMemory:
    """Memory for the reallocating controller: one active location seeded
    from the initial hidden representation (and position, if state-keyed)."""
    contents = np.zeros((n_hidden, capacity))
    contents[:, 0] = write_gain * np.asarray(sigma0, dtype=float)
    keys = None
    if state_keyed:
        keys = np.zeros((2, capacity))
        keys[:, 0] = np.asarray(x0, dtype=float)
    return WorkingMemory(contents=contents, n_active=1, capacity=capacity,
                         write_gain=write_gain, key_rate=key_rate,
                         threshold=threshold, keys=keys)


def init_full(n_hidden: int, capacity: int, x0, state_keyed: bool,
              write_gain: float = 0.75, key_rate: float = 1.0,
              threshold: float = 0.2, content_base=None,
              content_spacing: float = TIE_BREAK_SPACING) -> WorkingMemory:
    """Memory for the non-reallocating baselines: every location active
    from the start.

    Every column starts at `content_base` (the usual choice is the
    initial write target write_gain*sigma(0)) plus a distinct small
    offset; identical columns would tie forever under hard selection and
    stay bit-identical forever under softmax weighting. State keys start
    at the initial position plus the same small offsets.
    """
    contents = np.zeros((n_hidden, capacity))
    if content_base is not None:
        contents += np.asarray(content_base, dtype=float)[:, None]
    contents += content_spacing * np.arange(capacity)[None, :]
    keys = None
    if state_keyed:
        keys = (np.asarray(x0, dtype=float)[:, None]
                + TIE_BREAK_SPACING * np.arange(capacity)[None, :])
    return WorkingMemory(contents=contents, n_active=capacity, capacity=capacity,
                         write_gain=write_gain, key_rate=key_rate,
                         threshold=threshold, keys=keys)
