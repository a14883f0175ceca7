"""Dense reference computations for verifying the sparse space-time route.

Everything here goes through matrix exponentials of the piecewise-constant
generator, which is an entirely independent path from the Galerkin
assembly.  Dense work is restricted to desk scale (N <= 500).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .galerkin import JumpMatrix
from .generator import RateMatrixSequence

DENSE_MAX_N = 500


def expm(Q: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Dense matrix exponential exp(t Q) via scaling and squaring."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    Q = np.asarray(Q, dtype=float)
    if Q.shape[0] > DENSE_MAX_N:
        raise ValueError(f"dense oracle limited to N <= {DENSE_MAX_N}")
    return scipy.linalg.expm(t * Q)


def exact_propagator(seq: RateMatrixSequence, s: float, t: float) -> np.ndarray:
    """Transition matrix of the jump process from time s to time t.

    Ordered product of the interval exponentials over the overlap of each
    time cell with [s, t]; rows are distributions.
    """
    if not (seq.grid.t0 <= s <= t <= seq.grid.horizon):
        raise ValueError("need t0 <= s <= t <= horizon")
    edges = seq.grid.edges
    P = np.eye(seq.N)
    for k, Q in enumerate(seq.matrices):
        overlap = min(t, edges[k + 1]) - max(s, edges[k])
        if overlap > 0:
            P = P @ expm(Q.toarray(), overlap)
    return P


def reconstructed_propagator_matrix(J: JumpMatrix) -> np.ndarray:
    """Dense matrix of the sparse-route propagator up to the final block edge.

    Row i is the reconstructed evolution of a unit mass starting uniformly
    in the first time cell at state i.  The jump-activity Neumann series is
    summed exactly by forward block substitution of (I - J^T) X = F, which
    is its limit; the truncated series agrees to its tolerance.
    """
    n, m = J.indexer.N, J.indexer.M
    X = np.zeros((J.indexer.size, n))
    X[:n] = np.eye(n)
    for l in range(m):
        blk = slice(l * n, (l + 1) * n)
        inflow = J.matrix[: l * n, blk].T @ X[: l * n]
        B = J.diagonal_block(l)
        rhs = X[blk] + inflow
        if B.nnz == 0:
            X[blk] = rhs
        else:
            lu = spla.splu(sp.eye(n, format="csc") - B.T.tocsc())
            X[blk] = lu.solve(rhs)
    weighted = X * J.block_survival(m - 1)[:, None]
    return weighted.reshape(m, n, n).sum(axis=0).T


def operator_norm_error(J: JumpMatrix, seq: RateMatrixSequence,
                        l: int | None = None) -> float:
    """Induced 2-norm distance between sparse-route and exact propagator.

    Compares at the right edge of block l (default: the final block).
    """
    m = J.indexer.M
    if l is None:
        l = m - 1
    if l != m - 1:
        raise ValueError("norm comparison is implemented at the final block edge")
    approx = reconstructed_propagator_matrix(J)
    exact = exact_propagator(seq, seq.grid.t0, seq.grid.horizon)
    return float(np.linalg.norm(approx - exact, 2))


def frobenius_error(J: JumpMatrix, seq: RateMatrixSequence) -> float:
    approx = reconstructed_propagator_matrix(J)
    exact = exact_propagator(seq, seq.grid.t0, seq.grid.horizon)
    return float(np.linalg.norm(approx - exact, "fro"))


def convergence_study(seq_builder, dt_list) -> dict:
    """Error of the Galerkin route versus the dense oracle for a dt sweep.

    seq_builder(dt) must return the protocol discretized with time step dt;
    it is expected to reject steps that do not align with the protocol's
    switching times.  Returns rows of (dt, 2-norm error, Frobenius error)
    plus the fitted log-log slope (None for a single step size).
    """
    from .galerkin import assemble

    dt_list = [float(dt) for dt in dt_list]
    if sorted(dt_list, reverse=True) != dt_list:
        raise ValueError("dt_list must be sorted descending")
    rows = []
    for dt in dt_list:
        seq = seq_builder(dt)
        J = assemble(seq)
        approx = reconstructed_propagator_matrix(J)
        exact = exact_propagator(seq, seq.grid.t0, seq.grid.horizon)
        diff = approx - exact
        rows.append((dt, float(np.linalg.norm(diff, 2)),
                     float(np.linalg.norm(diff, "fro"))))
    slope = None
    if len(rows) > 1:
        logs = np.log([r[0] for r in rows]), np.log([r[1] for r in rows])
        slope = float(np.polyfit(logs[0], logs[1], 1)[0])
    return {"rows": rows, "slope": slope}
