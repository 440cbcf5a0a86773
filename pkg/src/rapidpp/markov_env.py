"""Finite-state Markov environments and their stationary analysis.

The environment is an irreducible continuous-time Markov chain X on states
{0, ..., n-1} with generator Q, together with a nonnegative per-state arrival
rate vector f.  This module computes the stationary distribution pi, the
long-run rate lambda_star = pi . f, the centered rate vector f - lambda_star,
the accumulated-deviation vector g solving Q g = -(f - lambda_star) with
pi . g = 0, and the time-average variance constant sigma2, and it simulates
exact environment trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    NegativeOffDiagonalError,
    NonSquareError,
    ReducibleError,
    RowSumError,
    SingularSystemError,
    ZeroMeanRateError,
)

__all__ = [
    "GeneratorMatrix",
    "CtmcModel",
    "StationaryAnalysis",
    "EnvironmentPath",
    "validate_generator",
    "stationary_distribution",
    "analyze",
    "sample_path",
    "occupation_integral",
    "sample_occupation_integrals",
]

ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Validated transition-rate matrix of an irreducible finite CTMC."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise NonSquareError(f"rate matrix must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise NonSquareError("rate matrix entries must be finite")
        n = q.shape[0]
        off = q.copy()
        np.fill_diagonal(off, 0.0)
        if np.any(off < 0):
            i, j = np.argwhere(off < 0)[0]
            raise NegativeOffDiagonalError(
                f"off-diagonal rate q[{i}][{j}] = {q[i, j]} is negative"
            )
        row_sums = q.sum(axis=1)
        bad = np.abs(row_sums) > ROW_SUM_TOL
        if np.any(bad):
            i = int(np.argmax(np.abs(row_sums)))
            raise RowSumError(f"row {i} sums to {row_sums[i]:.3e}, expected 0")
        if n > 1:
            adjacency = csr_matrix(off > 0)
            n_comp, _ = connected_components(adjacency, directed=True, connection="strong")
            if n_comp != 1:
                raise ReducibleError(
                    "positive-rate graph is not strongly connected "
                    f"({n_comp} strongly connected components)"
                )
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        """Sojourn-ending rate per state, -q[i][i]."""
        return -np.diag(self.q)


def validate_generator(q) -> GeneratorMatrix:
    """Check a candidate rate matrix and wrap it as a :class:`GeneratorMatrix`.

    Raises :class:`NonSquareError`, :class:`NegativeOffDiagonalError`,
    :class:`RowSumError` or :class:`ReducibleError` on violation.
    """
    return GeneratorMatrix(np.array(q, dtype=float))


@dataclass(frozen=True, eq=False)
class CtmcModel:
    """Markov environment plus the per-state arrival rate vector f."""

    generator: GeneratorMatrix
    rates: np.ndarray
    initial_state: int = 0

    def __post_init__(self):
        rates = np.asarray(self.rates, dtype=float)
        n = self.generator.n
        if rates.shape != (n,):
            raise ValueError(f"rates must have shape ({n},), got {rates.shape}")
        if not np.all(np.isfinite(rates)) or np.any(rates < 0):
            raise ValueError("rates must be finite and nonnegative")
        if not np.any(rates > 0):
            raise ValueError("at least one state must have a positive rate")
        if not (0 <= self.initial_state < n):
            raise ValueError(f"initial_state {self.initial_state} out of range [0, {n})")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "initial_state", int(self.initial_state))

    @property
    def n(self) -> int:
        return self.generator.n


@dataclass(frozen=True, eq=False)
class StationaryAnalysis:
    """All stationary quantities of a model.

    ``g`` accumulates the expected transient deviation of the rate from its
    long-run mean when started in each state; ``sigma2`` is the time-average
    variance constant 2 sum_i pi[i] f_centered[i] g[i].
    """

    pi: np.ndarray
    lambda_star: float
    f_centered: np.ndarray
    g: np.ndarray
    sigma2: float


@dataclass(frozen=True, eq=False)
class EnvironmentPath:
    """Piecewise-constant environment trajectory on [0, horizon].

    ``states`` has one more entry than ``jump_times``; segment i occupies
    [jump_times[i-1], jump_times[i]) in state states[i], with jump_times[-1]
    read as 0 and the final segment ending at the horizon.
    """

    horizon: float
    jump_times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=float)
        st = np.asarray(self.states, dtype=np.int64)
        if st.shape != (jt.size + 1,):
            raise ValueError("states must be one longer than jump_times")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "states", st)

    @property
    def n_jumps(self) -> int:
        return self.jump_times.size


def _solve_refined(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense solve with one step of iterative refinement."""
    try:
        lu = lu_factor(a)
        x = lu_solve(lu, b)
        x += lu_solve(lu, b - a @ x)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularSystemError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("linear solve produced non-finite values")
    return x


def stationary_distribution(gen: GeneratorMatrix) -> np.ndarray:
    """Stationary probability vector pi with pi Q = 0 and sum(pi) = 1.

    One redundant balance equation is replaced by the normalization row and
    the resulting dense system is solved directly.
    """
    n = gen.n
    a = gen.q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = _solve_refined(a, b)
    if np.any(pi <= 0):
        raise SingularSystemError("stationary solve produced nonpositive entries")
    return pi / pi.sum()


def analyze(model: CtmcModel) -> StationaryAnalysis:
    """Compute pi, lambda_star, the centered rates, g and sigma2.

    g solves the singular system Q g = -(f - lambda_star) with one equation
    replaced by the centering constraint pi . g = 0.
    """
    pi = stationary_distribution(model.generator)
    f = model.rates
    lambda_star = float(pi @ f)
    if lambda_star <= 0.0:
        raise ZeroMeanRateError("pi . f must be positive")
    if np.all(f == f[0]):
        # constant rate: the centered system is exactly zero
        n = model.n
        return StationaryAnalysis(pi, lambda_star, np.zeros(n), np.zeros(n), 0.0)
    f_centered = f - lambda_star
    a = model.generator.q.copy()
    a[-1, :] = pi
    b = -f_centered.copy()
    b[-1] = 0.0
    g = _solve_refined(a, b)
    sigma2 = 2.0 * float(np.sum(pi * f_centered * g))
    if sigma2 < 0.0:
        if sigma2 < -1e-12:
            raise SingularSystemError(f"sigma2 = {sigma2:.3e} is negative beyond tolerance")
        sigma2 = 0.0
    return StationaryAnalysis(pi, lambda_star, f_centered, g, sigma2)


def sample_path(model: CtmcModel, horizon: float, rng: np.random.Generator) -> EnvironmentPath:
    """Exact CTMC trajectory on [0, horizon].

    Sojourns are exponential with the state's exit rate; the next state is
    drawn proportionally to the off-diagonal rates of the current row.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    q = model.generator.q
    exit_rates = model.generator.exit_rates
    n = model.n
    jump_probs = q.copy()
    np.fill_diagonal(jump_probs, 0.0)
    with np.errstate(invalid="ignore"):
        jump_probs = np.where(
            exit_rates[:, None] > 0, jump_probs / np.maximum(exit_rates, 1e-300)[:, None], 0.0
        )
    cum = np.cumsum(jump_probs, axis=1)

    times = []
    states = [model.initial_state]
    t = 0.0
    state = model.initial_state
    while True:
        rate = exit_rates[state]
        if rate <= 0.0:
            break
        t += rng.exponential(1.0 / rate)
        if t >= horizon:
            break
        state = int(np.searchsorted(cum[state], rng.random() * cum[state, -1], side="right"))
        state = min(state, n - 1)
        times.append(t)
        states.append(state)
    return EnvironmentPath(horizon, np.array(times), np.array(states, dtype=np.int64))


def occupation_integral(path: EnvironmentPath, weights) -> float:
    """Exact integral of weights[X(s)] over [0, horizon] along the path."""
    weights = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite")
    bounds = np.concatenate(([0.0], path.jump_times, [path.horizon]))
    durations = np.diff(bounds)
    return float(np.sum(weights[path.states] * durations))


def _segment_rounds(
    model: CtmcModel, horizon: float, size: int, rng: np.random.Generator
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Stream sojourn segments of ``size`` independent trajectories.

    Yields (replication_index, state, start, end) arrays, one sojourn per
    replication per round, so consumers never hold full paths in memory.
    Replications whose trajectory has reached the horizon drop out.
    """
    exit_rates = model.generator.exit_rates
    q = model.generator.q
    n = model.n
    jump_probs = q.copy()
    np.fill_diagonal(jump_probs, 0.0)
    rate_pos = exit_rates > 0
    safe = np.where(rate_pos, exit_rates, 1.0)
    cum = np.cumsum(np.where(rate_pos[:, None], jump_probs / safe[:, None], 0.0), axis=1)
    # guard against rounding so the inverse-cdf lookup never overruns
    cum[rate_pos, -1] = 1.0

    idx = np.arange(size)
    state = np.full(size, model.initial_state, dtype=np.int64)
    t_now = np.zeros(size)
    while idx.size:
        draws = rng.exponential(size=idx.size)
        soj = np.where(rate_pos[state], draws / safe[state], np.inf)
        end = np.minimum(t_now + soj, horizon)
        yield idx, state, t_now, end
        jumped = end < horizon
        if not np.any(jumped):
            return
        idx = idx[jumped]
        t_now = end[jumped]
        jstate = state[jumped]
        u = rng.random(size=idx.size)
        state = (u[:, None] >= cum[jstate]).sum(axis=1).astype(np.int64)
    return


def sample_occupation_integrals(
    model: CtmcModel,
    weights,
    horizon: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``size`` iid copies of the occupation integral of ``weights``.

    Streams segments instead of materializing paths, so memory stays O(size)
    regardless of the horizon.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    weights = np.asarray(weights, dtype=float)
    out = np.zeros(size)
    for idx, state, start, end in _segment_rounds(model, horizon, size, rng):
        out[idx] += weights[state] * (end - start)
    return out
