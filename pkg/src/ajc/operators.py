"""Solvers on the assembled jump matrix.

Forward route: jump activity (Neumann series of the forward operator),
synchronization onto a time-block edge, and the reconstructed propagator.
Backward route: the Koopman boundary value problem, solved by block
back-substitution with a sparse within-block solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .galerkin import JumpMatrix, SpaceTimeIndexer

DIRECT_SOLVE_MAX_N = 2000
BLOCK_RESIDUAL_TOL = 1e-12


class NonConvergence(RuntimeError):
    """An iterative solve failed to reach its tolerance."""


@dataclass(frozen=True)
class SpaceTimeVector:
    """Values over the N*M space-time cells, flat-indexed by the indexer.

    kind is "density" (mass per cell) or "observable" (value per cell).
    """

    values: np.ndarray
    indexer: SpaceTimeIndexer
    kind: str = "density"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.indexer.size,):
            raise ValueError("values must have length N*M")
        if self.kind not in ("density", "observable"):
            raise ValueError("kind must be 'density' or 'observable'")
        object.__setattr__(self, "values", values)

    def as_grid(self) -> np.ndarray:
        """(N, M) view with [i, k] = value at state i, block k."""
        return self.values.reshape(self.indexer.M, self.indexer.N).T


def embed_spacelike(fbar: np.ndarray, indexer: SpaceTimeIndexer, block: int = 0,
                    kind: str = "density") -> SpaceTimeVector:
    """Put a spatial vector into a single time block of a space-time vector."""
    fbar = np.asarray(fbar, dtype=float)
    if fbar.shape != (indexer.N,):
        raise ValueError("spatial vector must have length N")
    values = np.zeros(indexer.size)
    values[block * indexer.N:(block + 1) * indexer.N] = fbar
    return SpaceTimeVector(values, indexer, kind)


def default_n_max(J: JumpMatrix) -> int:
    """Truncation cap scaling with the total integrated rate."""
    load = float(np.max(J.outbound * J.grid.widths[None, :], initial=0.0))
    return int(np.ceil(10 * J.indexer.M * (1.0 + load)))


def jump_activity(J: JumpMatrix, f: SpaceTimeVector, tol: float = 1e-10,
                  n_max: int | None = None) -> tuple[SpaceTimeVector, float]:
    """Sum of all iterated forward jumps of a density (truncated Neumann series).

    Returns the activity and the mass of the last summed term (residual).
    Raises NonConvergence if the term mass is still >= tol after n_max
    applications.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if n_max is None:
        n_max = default_n_max(J)
    term = f.values.copy()
    total = term.copy()
    residual = float(np.abs(term).sum())
    for _ in range(n_max):
        term = J.matrix.T @ term
        residual = float(np.abs(term).sum())
        total += term
        if residual < tol:
            return SpaceTimeVector(total, J.indexer, "density"), residual
    raise NonConvergence(
        f"activity series residual {residual:.3e} >= tol {tol:.3e} after {n_max} terms"
    )


def synchronize(J: JumpMatrix, a: SpaceTimeVector, l: int) -> np.ndarray:
    """Project a jump-activity density onto the right edge of time block l.

    Each cell (i, k) with k <= l is weighted by its probability of not
    jumping again before that edge.
    """
    if not 0 <= l < J.indexer.M:
        raise ValueError("invalid time block")
    n = J.indexer.N
    weighted = a.values * J.block_survival(l)
    return weighted[:(l + 1) * n].reshape(l + 1, n).sum(axis=0)


def reconstruct_propagator(J: JumpMatrix, fbar: np.ndarray, l: int,
                           tol: float = 1e-10, n_max: int | None = None) -> np.ndarray:
    """Evolve a spatial density from the first block to the edge of block l."""
    f = embed_spacelike(fbar, J.indexer, block=0)
    activity, _ = jump_activity(J, f, tol=tol, n_max=n_max)
    return synchronize(J, activity, l)


def _solve_diagonal_block(B: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    """Solve (I - B) x = rhs for a strictly substochastic block B.

    Direct sparse solve at desk scale, fixed-point iteration beyond.
    """
    n = B.shape[0]
    if B.nnz == 0:
        return rhs.copy()
    if n <= DIRECT_SOLVE_MAX_N:
        x = spla.spsolve(sp.eye(n, format="csc") - B.tocsc(), rhs)
        x = np.atleast_1d(x)
    else:
        x = rhs.copy()
        for _ in range(100 * n):
            x_new = B @ x + rhs
            if np.max(np.abs(x_new - x)) <= BLOCK_RESIDUAL_TOL:
                x = x_new
                break
            x = x_new
    res = np.max(np.abs(x - B @ x - rhs), initial=0.0)
    if res > 1e-10:
        raise NonConvergence(f"diagonal block residual {res:.3e}")
    return x


def koopman_solve(J: JumpMatrix, g: np.ndarray, l: int) -> SpaceTimeVector:
    """Pull a spatial observable at the edge of block l back through space-time.

    Terminal block l carries the observable itself; earlier blocks satisfy
    K = (jumps into blocks <= l) K + (survival to the edge of l) * g, solved
    block by block from l downwards.  Blocks after l are zero-filled.
    """
    g = np.asarray(g, dtype=float)
    n, m = J.indexer.N, J.indexer.M
    if g.shape != (n,):
        raise ValueError("observable must have length N")
    if not 0 <= l < m:
        raise ValueError("invalid terminal block")
    K = np.zeros(J.indexer.size)
    K[l * n:(l + 1) * n] = g
    surv = J.block_survival(l)
    for k in range(l - 1, -1, -1):
        rows = J.matrix[k * n:(k + 1) * n]
        inflow = rows[:, (k + 1) * n:(l + 1) * n] @ K[(k + 1) * n:(l + 1) * n]
        rhs = inflow + surv[k * n:(k + 1) * n] * g
        K[k * n:(k + 1) * n] = _solve_diagonal_block(J.diagonal_block(k), rhs)
    return SpaceTimeVector(K, J.indexer, "observable")


def koopman_matrix_column(J: JumpMatrix, y: int, l: int) -> SpaceTimeVector:
    """Koopman solve for the point observable at state y (fundamental column)."""
    g = np.zeros(J.indexer.N)
    g[y] = 1.0
    return koopman_solve(J, g, l)
