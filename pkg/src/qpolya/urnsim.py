"""Seeded simulation of the multiple q-Polya urn.

Balls sit in colour blocks ``1..k+1``.  A q-drawing picks position ``i``
with chance proportional to ``q**(i-1)``, so only the block sizes matter
and the state is a vector of per-colour counts.  Positions are drawn by
inverting the q-uniform distribution function ``[i]_q / [R]_q``.

Single-run samplers work on :class:`UrnState`; the ``*_batch`` variants
run many urns side by side in numpy.  Batches are cut into fixed-size
chunks and chunk ``c`` always uses stream ``c`` of the seed, so results do
not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from .distributions.params import PmfTable, UrnSpec
from .distributions.representations import check_negative_regime
from .errors import DomainError, InfeasibleError, NonTerminationError
from .qcore import CompositionVector, QBase

__all__ = [
    "DEFAULT_CHUNK",
    "DEFAULT_MAX_DRAWS",
    "ESCAPE_TOLERANCE",
    "GofReport",
    "RandomStream",
    "UrnState",
    "goodness_of_fit",
    "q_draw",
    "q_draw_batch",
    "q_positions",
    "sample_bernoulli_blocks",
    "sample_bernoulli_blocks_batch",
    "sample_inverse_qpolya",
    "sample_inverse_qpolya_batch",
    "sample_negative_blocks",
    "sample_negative_blocks_batch",
    "sample_qpolya",
    "sample_qpolya_batch",
    "step",
]

DEFAULT_MAX_DRAWS = 10_000_000
DEFAULT_CHUNK = 1 << 16
# a run whose chance of ever stopping is below this is reported as escaped
ESCAPE_TOLERANCE = 1e-20


class RandomStream:
    """Stream ``stream_id`` of a 64-bit seed (PCG64 via ``SeedSequence``)."""

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= int(seed) < 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size=None):
        """Uniform variates on ``(0, 1]``."""
        return 1.0 - self.generator.random(size)

    def geometric(self, p, size=None):
        return self.generator.geometric(p, size)


@dataclass(frozen=True)
class UrnState:
    current_counts: tuple[int, ...]
    m: int
    q: QBase
    draws_made: int = 0
    per_color_drawn: tuple[int, ...] = ()

    def __post_init__(self):
        counts = tuple(int(c) for c in self.current_counts)
        drawn = tuple(int(c) for c in self.per_color_drawn) or (0,) * len(counts)
        if len(drawn) != len(counts):
            raise DomainError("per-colour draw counts do not match the colours")
        if any(c < 0 for c in counts):
            raise InfeasibleError(f"negative ball count in {counts}", self.draws_made)
        if sum(drawn) != self.draws_made:
            raise DomainError("draws_made differs from the per-colour total")
        object.__setattr__(self, "current_counts", counts)
        object.__setattr__(self, "per_color_drawn", drawn)
        object.__setattr__(self, "q", QBase.of(self.q))

    @classmethod
    def initial(cls, spec: UrnSpec) -> "UrnState":
        return cls(spec.counts, spec.m, spec.q)

    @property
    def total(self) -> int:
        return sum(self.current_counts)

    def spec(self) -> UrnSpec:
        """The current contents as an urn (for the one-draw law)."""
        return UrnSpec(self.current_counts, self.m, self.q)


def q_positions(totals, u, log_q: float):
    """Invert ``[i]_q / [R]_q`` at ``u`` in (0, 1]; positions in ``1..R``."""
    totals = np.asarray(totals, dtype=float)
    u = np.asarray(u, dtype=float)
    if log_q < 0:
        x = np.log1p(u * np.expm1(totals * log_q)) / log_q
    else:
        x = totals + np.log(u + (1.0 - u) * np.exp(-totals * log_q)) / log_q
    return np.clip(np.ceil(x), 1, np.maximum(totals, 1)).astype(np.int64)


def _geometric_positions(totals, rng: RandomStream, log_q: float):
    """Ball passing: each ball in turn catches with chance ``1 - q``.

    For ``q > 1`` the balls are passed from the back with ``1/q``.
    """
    totals = np.asarray(totals, dtype=np.int64)
    p = -math.expm1(-abs(log_q))
    passes = rng.geometric(p, size=totals.shape) - 1
    idx = passes % totals
    return idx + 1 if log_q < 0 else totals - idx


def _colours(counts: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """0-based colour of each position, blocks in colour order."""
    bounds = np.cumsum(counts, axis=-1)[..., :-1]
    return (positions[..., None] > bounds).sum(axis=-1)


def q_draw(state: UrnState, rng: RandomStream, method: str = "inverse_cdf") -> int:
    """Colour (1-based) of one q-drawing from ``state``; the state is unchanged."""
    total = state.total
    if total < 1:
        raise DomainError("cannot draw from an empty urn")
    counts = np.asarray(state.current_counts)
    if method == "inverse_cdf":
        pos = q_positions(total, rng.uniform(), state.q.log_value)
    elif method == "geometric":
        pos = _geometric_positions(total, rng, state.q.log_value)
    else:
        raise DomainError(f"unknown draw method {method!r}")
    return int(_colours(counts, np.asarray(pos))) + 1


def q_draw_batch(state: UrnState, rng: RandomStream, size: int,
                 method: str = "inverse_cdf") -> np.ndarray:
    """``size`` independent draws (1-based colours) from the same state."""
    if state.total < 1:
        raise DomainError("cannot draw from an empty urn")
    totals = np.full(size, state.total)
    if method == "geometric":
        pos = _geometric_positions(totals, rng, state.q.log_value)
    else:
        pos = q_positions(totals, rng.uniform(size), state.q.log_value)
    return _colours(np.asarray(state.current_counts), pos) + 1


def step(state: UrnState, color: int) -> UrnState:
    """Return the drawn ball (1-based ``color``) together with ``m`` more."""
    v = color - 1
    if not 0 <= v < len(state.current_counts):
        raise DomainError(f"no colour {color}")
    counts = list(state.current_counts)
    counts[v] += state.m
    if counts[v] < 0:
        raise InfeasibleError(
            f"removing {-state.m} balls of colour {color} leaves {counts[v]}",
            state.draws_made + 1)
    drawn = list(state.per_color_drawn)
    drawn[v] += 1
    return replace(state, current_counts=tuple(counts), draws_made=state.draws_made + 1,
                   per_color_drawn=tuple(drawn))


def _check_draws(spec: UrnSpec, n: int) -> None:
    if n < 0:
        raise DomainError("n must be nonnegative")
    if spec.m < 0 and spec.total + spec.m * n < 0:
        raise DomainError(f"an urn of {spec.total} balls cannot lose {-spec.m} per draw "
                          f"for {n} draws")


def sample_qpolya(spec: UrnSpec, n: int, rng: RandomStream,
                  method: str = "inverse_cdf") -> CompositionVector:
    """Colour counts ``x_1..x_k`` after ``n`` q-drawings."""
    _check_draws(spec, n)
    state = UrnState.initial(spec)
    for _ in range(n):
        state = step(state, q_draw(state, rng, method))
    return CompositionVector(state.per_color_drawn[:-1], cap=n)


def _escape_bound(others: float, last: float, m: int, log_q: float) -> float:
    """Chance of ever drawing the last colour again (``0 < q < 1``, ``m > 0``).

    The next draw hits it with ``q**A [B]_q / [A+B]_q``; each miss adds
    ``m`` to ``A``, giving at most ``q**A [B]_q / ([A+B]_q (1 - q**m))``.
    """
    return (math.exp(others * log_q) * math.expm1(last * log_q)
            / math.expm1((others + last) * log_q) / -math.expm1(m * log_q))


def _check_inverse(spec: UrnSpec, n: int) -> None:
    if n < 1:
        raise DomainError("the inverse law needs n >= 1")
    last = spec.counts[-1]
    if last == 0:
        raise DomainError("the last colour is absent, so the run never stops")
    if spec.m < 0 and last + spec.m * (n - 1) < 1:
        raise DomainError(f"colour k+1 runs out before its draw number {n}")


def sample_inverse_qpolya(spec: UrnSpec, n: int, rng: RandomStream,
                          max_draws: int = DEFAULT_MAX_DRAWS,
                          escape_tolerance: float = ESCAPE_TOLERANCE) -> CompositionVector:
    """Colour counts ``w_1..w_k`` seen before the ``n``-th draw of colour ``k+1``.

    For ``0 < q < 1`` with ``m > 0`` the run may never stop; once the
    chance of stopping drops below ``escape_tolerance`` the run raises
    :class:`NonTerminationError` with ``escaped=True``.  Hitting
    ``max_draws`` raises it with ``escaped=False``.
    """
    _check_inverse(spec, n)
    state = UrnState.initial(spec)
    log_q = spec.q.log_value
    watch = log_q < 0 and spec.m > 0
    while state.per_color_drawn[-1] < n:
        if state.draws_made >= max_draws:
            raise NonTerminationError(f"no stop within {max_draws} draws",
                                      state.draws_made, escaped=False)
        state = step(state, q_draw(state, rng))
        if watch and state.per_color_drawn[-1] < n:
            b = state.current_counts[-1]
            if _escape_bound(state.total - b, b, spec.m, log_q) < escape_tolerance:
                raise NonTerminationError("the run escaped: stopping has become "
                                          "practically impossible", state.draws_made,
                                          escaped=True)
    return CompositionVector(state.per_color_drawn[:-1])


# -- batches ---------------------------------------------------------------


def _run_chunks(size: int, seed: int, chunk: int, threads: int,
                job: Callable[[int, RandomStream], np.ndarray]) -> np.ndarray:
    if size < 0:
        raise DomainError("sample size must be nonnegative")
    if chunk < 1:
        raise DomainError("chunk size must be positive")
    sizes = [min(chunk, size - start) for start in range(0, size, chunk)]
    tasks = [(sz, RandomStream(seed, c)) for c, sz in enumerate(sizes)]
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda t: job(*t), tasks))
    else:
        parts = [job(*t) for t in tasks]
    return np.concatenate(parts) if parts else job(0, RandomStream(seed, 0))


def sample_qpolya_batch(spec: UrnSpec, n: int, size: int, seed: int,
                        threads: int = 1, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    """``size`` independent runs; rows are ``(x_1..x_k)``."""
    _check_draws(spec, n)
    log_q = spec.q.log_value
    m = spec.m

    def job(sz: int, rng: RandomStream) -> np.ndarray:
        counts = np.tile(np.asarray(spec.counts, dtype=np.int64), (sz, 1))
        drawn = np.zeros_like(counts)
        rows = np.arange(sz)
        for i in range(n):
            pos = q_positions(counts.sum(axis=1), rng.uniform(sz), log_q)
            col = _colours(counts, pos)
            counts[rows, col] += m
            drawn[rows, col] += 1
            if m < -1 and (counts[rows, col] < 0).any():
                raise InfeasibleError("a removal left a negative ball count", i + 1)
        return drawn[:, :-1]

    return _run_chunks(size, seed, chunk, threads, job)


def sample_inverse_qpolya_batch(spec: UrnSpec, n: int, size: int, seed: int,
                                threads: int = 1, chunk: int = DEFAULT_CHUNK,
                                max_draws: int = DEFAULT_MAX_DRAWS,
                                escape_tolerance: float = ESCAPE_TOLERANCE) -> np.ndarray:
    """``size`` independent inverse runs; rows are ``(w_1..w_k)``.

    Escaped runs (see :func:`sample_inverse_qpolya`) come back as rows of
    ``-1``.  Reaching ``max_draws`` raises.
    """
    _check_inverse(spec, n)
    log_q = spec.q.log_value
    m = spec.m
    watch = log_q < 0 and m > 0

    def job(sz: int, rng: RandomStream) -> np.ndarray:
        counts = np.tile(np.asarray(spec.counts, dtype=np.int64), (sz, 1))
        drawn = np.zeros_like(counts)
        active = np.arange(sz)
        escaped = np.zeros(sz, dtype=bool)
        draws = 0
        while active.size:
            if draws >= max_draws:
                raise NonTerminationError(f"no stop within {max_draws} draws", draws,
                                          escaped=False)
            c = counts[active]
            pos = q_positions(c.sum(axis=1), rng.uniform(active.size), log_q)
            col = _colours(c, pos)
            counts[active, col] += m
            drawn[active, col] += 1
            draws += 1
            if m < -1 and (counts[active, col] < 0).any():
                raise InfeasibleError("a removal left a negative ball count", draws)
            going = drawn[active, -1] < n
            if watch:
                b = counts[active, -1].astype(float)
                a = counts[active].sum(axis=1) - b
                bound = (np.exp(a * log_q) * np.expm1(b * log_q)
                         / np.expm1((a + b) * log_q) / -math.expm1(m * log_q))
                gone = going & (bound < escape_tolerance)
                escaped[active[gone]] = True
                going &= ~gone
            active = active[going]
        out = drawn[:, :-1].copy()
        out[escaped] = -1
        return out

    return _run_chunks(size, seed, chunk, threads, job)


def _bernoulli_probs(r: int, theta: float, log_q: float) -> np.ndarray:
    i = np.arange(r)
    return special.expit(math.log(theta) + i * log_q)


def _block_sums(trials: np.ndarray, sizes: Sequence[int]) -> np.ndarray:
    edges = np.cumsum((0,) + tuple(sizes))
    return np.stack([trials[..., a:b].sum(axis=-1) for a, b in zip(edges[:-1], edges[1:])],
                    axis=-1)


def _sizes(block_sizes) -> tuple[int, ...]:
    sizes = tuple(int(r) for r in block_sizes)
    if len(sizes) < 2 or any(r < 0 for r in sizes):
        raise DomainError(f"need at least two nonnegative block sizes, got {sizes}")
    return sizes


def _positive_theta(theta) -> float:
    t = float(theta)
    if not t > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    return t


def sample_bernoulli_blocks(block_sizes, theta, q: QBase, rng: RandomStream) -> CompositionVector:
    """Successes per block in ``r`` independent trials.

    Trial ``i`` succeeds with ``theta q**(i-1) / (1 + theta q**(i-1))``.
    """
    sizes = _sizes(block_sizes)
    p = _bernoulli_probs(sum(sizes), _positive_theta(theta), QBase.of(q).log_value)
    trials = rng.uniform(p.size) <= p
    return CompositionVector(_block_sums(trials.astype(np.int64), sizes))


def sample_bernoulli_blocks_batch(block_sizes, theta, q: QBase, size: int, seed: int,
                                  threads: int = 1, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    sizes = _sizes(block_sizes)
    p = _bernoulli_probs(sum(sizes), _positive_theta(theta), QBase.of(q).log_value)

    def job(sz: int, rng: RandomStream) -> np.ndarray:
        trials = rng.uniform((sz, p.size)) <= p
        return _block_sums(trials.astype(np.int64), sizes).reshape(sz, len(sizes))

    return _run_chunks(size, seed, chunk, threads, job)


def _success_probs(sizes, theta, q: QBase) -> np.ndarray:
    r = sum(sizes)
    check_negative_regime(theta, q, r)
    t = float(theta)
    return -np.expm1(math.log(t) + np.arange(r) * q.log_value)


def sample_negative_blocks(block_sizes, theta, q: QBase, rng: RandomStream) -> CompositionVector:
    """Failures per block of successes.

    After ``j - 1`` successes a trial succeeds with ``1 - theta q**(j-1)``;
    block ``v`` collects the failures between success ``s_{v-1}`` and
    success ``s_v``.
    """
    sizes = _sizes(block_sizes)
    q = QBase.of(q)
    p = _success_probs(sizes, theta, q)
    fails = rng.geometric(p) - 1
    return CompositionVector(_block_sums(fails, sizes))


def sample_negative_blocks_batch(block_sizes, theta, q: QBase, size: int, seed: int,
                                 threads: int = 1, chunk: int = DEFAULT_CHUNK) -> np.ndarray:
    sizes = _sizes(block_sizes)
    q = QBase.of(q)
    p = _success_probs(sizes, theta, q)

    def job(sz: int, rng: RandomStream) -> np.ndarray:
        fails = rng.geometric(p, size=(sz, p.size)) - 1
        return _block_sums(fails, sizes).reshape(sz, len(sizes))

    return _run_chunks(size, seed, chunk, threads, job)


# -- goodness of fit ---------------------------------------------------------


@dataclass(frozen=True)
class GofReport:
    tv_distance: float
    chi_square_stat: float
    degrees_of_freedom: int
    p_value: float
    sample_count: int
    merged_cells: int

    def as_dict(self) -> dict:
        return {
            "tv_distance": self.tv_distance,
            "chi_square_stat": self.chi_square_stat,
            "degrees_of_freedom": self.degrees_of_freedom,
            "p_value": self.p_value,
            "sample_count": self.sample_count,
            "merged_cells": self.merged_cells,
        }


def _tally(samples) -> tuple[dict, int]:
    arr = np.asarray(samples)
    if arr.size == 0:
        raise DomainError("no samples")
    if arr.ndim == 1:
        arr = arr[:, None]
    rows, counts = np.unique(arr, axis=0, return_counts=True)
    return {tuple(int(v) for v in row): int(c) for row, c in zip(rows, counts)}, len(arr)


def goodness_of_fit(samples, exact: PmfTable, min_expected: float = 5.0) -> GofReport:
    """Compare sampled outcomes with an exact table.

    Outcomes missing from the table (escaped runs, the truncated tail)
    share an overflow cell whose expected mass is ``1 - sum(table)``.
    Table cells expected fewer than ``min_expected`` times are merged
    into the overflow cell.
    """
    observed, total = _tally(samples)
    probs = np.clip(np.asarray(exact.floats(), dtype=float), 0.0, None)
    outside = 1.0 - math.fsum(probs)
    if outside < 1e-12:
        # rounding residue of a complete table, not a real overflow cell
        outside = 0.0
    obs = np.array([observed.pop(tuple(s), 0) for s in exact.support], dtype=float)
    obs_out = float(sum(observed.values()))

    freq = obs / total
    tv = 0.5 * (np.abs(freq - probs).sum() + abs(obs_out / total - outside))

    expected = probs * total
    keep = expected >= min_expected
    merged = int((~keep).sum())
    cell_obs = list(obs[keep])
    cell_exp = list(expected[keep])
    rest_obs = obs_out + obs[~keep].sum()
    rest_exp = outside * total + expected[~keep].sum()
    if rest_exp > 0 or rest_obs > 0:
        cell_obs.append(rest_obs)
        cell_exp.append(rest_exp)
    cell_obs = np.asarray(cell_obs)
    cell_exp = np.asarray(cell_exp)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(cell_exp > 0, (cell_obs - cell_exp) ** 2 / cell_exp,
                         np.where(cell_obs > 0, np.inf, 0.0))
    stat = float(terms.sum())
    dof = max(len(cell_obs) - 1, 0)
    p = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return GofReport(float(min(max(tv, 0.0), 1.0)), stat, dof, min(max(p, 0.0), 1.0),
                     total, merged)
