"""The exact augmented jump chain: kernel, survival, sampling, reconstruction.

The chain lives on space-time points (state, jump time).  With a
piecewise-constant protocol all waiting-time integrals are finite sums, so
survival probabilities, kernel densities and the inverse-CDF sampler are
evaluated in closed form by walking the time cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import RateMatrixSequence, embedded_probabilities


@dataclass(frozen=True)
class SpaceTimePoint:
    state: int
    time: float


@dataclass(frozen=True)
class TrajectorySample:
    """One realization: states[n] entered at times[n], observed up to horizon."""

    states: np.ndarray
    times: np.ndarray
    horizon: float

    def __post_init__(self):
        states = np.asarray(self.states, dtype=int)
        times = np.asarray(self.times, dtype=float)
        if states.size != times.size or states.size == 0:
            raise ValueError("states and times must be equally sized and nonempty")
        if np.any(np.diff(times) <= 0):
            raise ValueError("jump times must be strictly increasing")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "times", times)

    def __len__(self):
        return self.states.size


def integrated_rate(seq: RateMatrixSequence, i: int, s: float, t: float) -> float:
    """Integral of the outbound rate q_i(u) over [s, t]."""
    if s > t:
        raise ValueError("need s <= t")
    edges = seq.grid.edges
    overlap = np.clip(np.minimum(t, edges[1:]) - np.maximum(s, edges[:-1]), 0.0, None)
    return float(np.dot(seq.outbound[i], overlap))


def survival(seq: RateMatrixSequence, i: int, s: float, t: float) -> float:
    """Probability of no jump from state i during (s, t]."""
    return float(np.exp(-integrated_rate(seq, i, s, t)))


def kernel_density(seq: RateMatrixSequence, i: int, s: float, j: int, t: float) -> float:
    """Transition kernel density of the augmented chain, zero for s >= t.

    k(i, s, j, t) = q_ij(t) * exp(-int_s^t q_i), using the rate of the time
    cell containing t.
    """
    if s >= t:
        return 0.0
    Q = seq.rates_at(t)
    qij = Q[i, j] if i != j else 0.0
    if qij == 0.0:
        return 0.0
    return float(qij) * np.exp(-integrated_rate(seq, i, s, t))


def _invert_hazard(seq: RateMatrixSequence, i: int, s: float, u: float):
    """Inverse CDF of the non-homogeneous exponential waiting time.

    Returns (t, k) with the jump time and the index of its time cell, or
    None when the accumulated hazard never reaches -log(1-u) before the
    horizon (the jump falls past the end of the grid).
    """
    target = -np.log1p(-u)
    edges = seq.grid.edges
    rates = seq.outbound[i]
    k0 = seq.grid.interval_of(s) if s > edges[0] else 0
    acc = 0.0
    for k in range(k0, seq.grid.M):
        lo = max(s, float(edges[k]))
        inc = rates[k] * (float(edges[k + 1]) - lo)
        if inc > 0 and acc + inc >= target:
            return lo + (target - acc) / rates[k], k
        acc += inc
    return None


def sample_jump_time(seq: RateMatrixSequence, i: int, s: float, u: float) -> float | None:
    """Jump time t with int_s^t q_i = -log(1-u), or None if past the horizon."""
    hit = _invert_hazard(seq, i, s, u)
    return None if hit is None else hit[0]


def sample_trajectory(
    seq: RateMatrixSequence,
    start: SpaceTimePoint,
    horizon: float,
    rng,
) -> TrajectorySample:
    """Temporal Gillespie sampling of the augmented chain up to the horizon.

    Alternates waiting-time inversion and a categorical draw from the
    embedded chain at the realized jump time.  rng is a seed or a
    numpy Generator; results are deterministic given the seed.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    if not (start.time <= horizon <= seq.grid.horizon):
        raise ValueError("need start.time <= horizon <= grid horizon")
    states = [int(start.state)]
    times = [float(start.time)]
    while True:
        hit = _invert_hazard(seq, states[-1], times[-1], rng.random())
        if hit is None or hit[0] > horizon:
            break
        t, k = hit
        row = embedded_probabilities(seq.matrices[k], states[-1])
        cum = np.cumsum(row.data)
        j = int(row.indices[np.searchsorted(cum, rng.random() * cum[-1], side="right")])
        states.append(j)
        times.append(t)
    return TrajectorySample(np.array(states), np.array(times), float(horizon))


def path_state_at(traj: TrajectorySample, t: float) -> int:
    """State of the reconstructed path at time t (right-continuous)."""
    if t < traj.times[0] or t > traj.horizon:
        raise ValueError("time outside the trajectory's observation window")
    n = int(np.searchsorted(traj.times, t, side="right")) - 1
    return int(traj.states[n])
