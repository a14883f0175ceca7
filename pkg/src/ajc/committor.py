"""Space-time committors and the forward-coherence defect.

Committors are solved on the augmented chain: hitting a space-time set A
before a set B, with all three exits of a trajectory accounted for --
jumping into A or B, jumping into a free cell, or never jumping again
before the horizon.  The last event is classified by where the frozen
trajectory sits at the horizon: terminal-block membership of the current
state decides A or B, and only otherwise does the tail policy apply.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .galerkin import JumpMatrix, apply_adjoint
from .operators import SpaceTimeVector, _solve_diagonal_block

TAIL_TO_A = "absorb_to_A"
TAIL_TO_B = "absorb_to_B"


class EmptyTarget(ValueError):
    """The target set of a committor or coherence query is empty."""


@dataclass(frozen=True)
class SpaceTimeSet:
    """Set of (state, block) cells, both 0-based."""

    cells: frozenset
    label: str = ""

    def __post_init__(self):
        object.__setattr__(
            self, "cells", frozenset((int(i), int(k)) for i, k in self.cells)
        )

    @classmethod
    def from_cells(cls, cells: Iterable, label: str = "") -> "SpaceTimeSet":
        return cls(frozenset(tuple(c) for c in cells), label)

    @classmethod
    def rectangle(cls, states: Iterable[int], blocks: tuple[int, int],
                  label: str = "") -> "SpaceTimeSet":
        lo, hi = blocks
        return cls(
            frozenset((int(i), k) for i in states for k in range(lo, hi + 1)), label
        )

    def mask(self, N: int, M: int) -> np.ndarray:
        """Boolean flat-index membership mask."""
        out = np.zeros(N * M, dtype=bool)
        for i, k in self.cells:
            if not (0 <= i < N and 0 <= k < M):
                raise ValueError(f"cell ({i}, {k}) outside the {N}x{M} space-time grid")
            out[k * N + i] = True
        return out

    def __len__(self):
        return len(self.cells)


def _tail_value(tail) -> float:
    if tail == TAIL_TO_B:
        return 0.0
    if tail == TAIL_TO_A:
        return 1.0
    v = float(tail)
    if not 0.0 <= v <= 1.0:
        raise ValueError("tail value must lie in [0, 1]")
    return v


def committor_solve(J: JumpMatrix, A: SpaceTimeSet, B: SpaceTimeSet,
                    tail=TAIL_TO_B) -> SpaceTimeVector:
    """Probability of hitting A before B on the augmented chain.

    Boundary values are 1 on A and 0 on B; free cells satisfy
    c = J c + survival_mass * c_tail, solved by block back-substitution.
    c_tail per state is 1/0 if the terminal-block cell lies in A/B and the
    tail policy's value otherwise.
    """
    n, m = J.indexer.N, J.indexer.M
    in_a = A.mask(n, m)
    in_b = B.mask(n, m)
    if not in_a.any():
        raise EmptyTarget("set A is empty")
    if (in_a & in_b).any():
        raise ValueError("sets A and B must be disjoint")

    tail_default = _tail_value(tail)
    last = slice((m - 1) * n, m * n)
    c_tail = np.full(n, tail_default)
    c_tail[in_a[last]] = 1.0
    c_tail[in_b[last]] = 0.0

    c = np.zeros(J.indexer.size)
    c[in_a] = 1.0
    surv = J.survival_mass
    for k in range(m - 1, -1, -1):
        blk = slice(k * n, (k + 1) * n)
        free = ~(in_a[blk] | in_b[blk])
        if not free.any():
            continue
        rows = J.matrix[blk]
        future = rows[:, (k + 1) * n:] @ c[(k + 1) * n:]
        diag = J.diagonal_block(k)
        fixed = ~free
        rhs = (future + surv[blk] * c_tail + diag[:, fixed] @ c[blk][fixed])[free]
        sol = _solve_diagonal_block(diag[free][:, free], rhs)
        vals = c[blk]
        vals[free] = sol
        c[blk] = vals
    return SpaceTimeVector(c, J.indexer, "observable")


def coherence_defect(J: JumpMatrix, C: SpaceTimeSet,
                     count_survival: bool = False) -> tuple[float, float]:
    """Defect of the indicator of C from being forward coherent.

    Scores each cell by the pulled-back indicator (plus, optionally, the
    never-jump-again mass of cells inside C).  Returns the minimum slack
    over C and the total positive violation mass; the indicator is forward
    coherent iff the slack is nonnegative.
    """
    n, m = J.indexer.N, J.indexer.M
    in_c = C.mask(n, m)
    if not in_c.any():
        raise EmptyTarget("set C is empty")
    ind = in_c.astype(float)
    score = apply_adjoint(J, ind)
    if count_survival:
        score = score + J.survival_mass * ind
    min_slack = float(np.min(score[in_c] - 1.0))
    violation_mass = float(np.sum(np.maximum(0.0, ind - score)))
    return min_slack, violation_mass
