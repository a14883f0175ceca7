"""Time-dependent infinitesimal generators and embedded-chain quantities.

A non-autonomous jump process is described here by a piecewise-constant
rate matrix protocol: a time grid with M cells and one sparse rate matrix
per cell.  All builders recompute the diagonal from the off-diagonal rates
so that row sums vanish by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

ROWSUM_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Ordered partition of a finite time interval into M cells.

    Cell k (0-based) covers the half-open interval (edges[k], edges[k+1]],
    so a rate valid "at" a boundary is the one of the cell ending there.
    """

    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise ValueError("time grid needs at least two edges")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("time grid edges must be strictly increasing")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def uniform(cls, t0: float, t1: float, cells: int) -> "TimeGrid":
        return cls(np.linspace(t0, t1, cells + 1))

    @property
    def M(self) -> int:
        return self.edges.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def t0(self) -> float:
        return float(self.edges[0])

    @property
    def horizon(self) -> float:
        return float(self.edges[-1])

    def interval_of(self, t: float) -> int:
        """Index k of the cell (edges[k], edges[k+1]] containing t.

        The left endpoint t0 is assigned to the first cell.
        """
        if t < self.edges[0] or t > self.edges[-1]:
            raise ValueError(f"time {t} outside grid [{self.edges[0]}, {self.edges[-1]}]")
        k = int(np.searchsorted(self.edges, t, side="left")) - 1
        return max(k, 0)


def with_recomputed_diagonal(offdiag: sp.spmatrix) -> sp.csr_matrix:
    """Return a rate matrix whose diagonal is the negative off-diagonal row sum.

    Any diagonal present in the input is discarded; off-diagonal entries are
    kept as given.
    """
    Q = sp.csr_matrix(offdiag, dtype=float).copy()
    Q.setdiag(0.0)
    Q.eliminate_zeros()
    out = np.asarray(Q.sum(axis=1)).ravel()
    Q = (Q - sp.diags(out)).tocsr()
    return Q


def outbound_rates(Q: sp.spmatrix) -> np.ndarray:
    """Outbound rate per state, q_i = -Q_ii."""
    return -Q.diagonal()


@dataclass(frozen=True)
class RateMatrixSequence:
    """Piecewise-constant generator: matrices[k] is valid on grid cell k."""

    grid: TimeGrid
    matrices: tuple

    def __post_init__(self):
        mats = tuple(sp.csr_matrix(Q, dtype=float) for Q in self.matrices)
        if len(mats) != self.grid.M:
            raise ValueError("need exactly one rate matrix per time cell")
        n = mats[0].shape[0]
        for Q in mats:
            if Q.shape != (n, n):
                raise ValueError("all rate matrices must share the same dimension")
        object.__setattr__(self, "matrices", mats)

    @property
    def N(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def outbound(self) -> np.ndarray:
        """(N, M) array of outbound rates per state and time cell."""
        return np.column_stack([outbound_rates(Q) for Q in self.matrices])

    def rates_at(self, t: float) -> sp.csr_matrix:
        return self.matrices[self.grid.interval_of(t)]


@dataclass(frozen=True)
class Violation:
    """One invariant defect found by validate_generator."""

    matrix: int
    kind: str  # "rowsum" or "negativity"
    row: int
    col: int | None
    magnitude: float

    def __str__(self):
        where = f"matrix {self.matrix}, row {self.row}"
        if self.col is not None:
            where += f", col {self.col}"
        return f"{self.kind} violation at {where}: {self.magnitude:.3e}"


def validate_generator(seq: RateMatrixSequence) -> list[Violation]:
    """Check row-sum and sign invariants of every matrix in the sequence.

    Returns an empty list iff the sequence is a valid piecewise-constant
    generator.
    """
    violations = []
    for m, Q in enumerate(seq.matrices):
        rowsums = np.asarray(Q.sum(axis=1)).ravel()
        # tolerance is relative to the outbound rate so that large-rate rows
        # are not flagged for unavoidable summation roundoff
        scale = np.maximum(1.0, outbound_rates(Q))
        for i in np.flatnonzero(np.abs(rowsums) > ROWSUM_TOL * scale):
            violations.append(Violation(m, "rowsum", int(i), None, abs(float(rowsums[i]))))
        coo = Q.tocoo()
        neg = (coo.row != coo.col) & (coo.data < 0)
        for i, j, v in zip(coo.row[neg], coo.col[neg], coo.data[neg]):
            violations.append(Violation(m, "negativity", int(i), int(j), float(-v)))
    return violations


def embedded_probabilities(Q: sp.spmatrix, i: int) -> sp.csr_matrix:
    """Jump-target distribution of the embedded chain from state i.

    For q_i > 0 the row is q_ij / q_i on the off-diagonal; an absorbing
    state (q_i = 0) stays put with probability one.  Returned as a sparse
    (1, N) row.
    """
    Q = sp.csr_matrix(Q)
    qi = -Q[i, i]
    if qi == 0:
        n = Q.shape[0]
        return sp.csr_matrix(([1.0], ([0], [i])), shape=(1, n))
    row = Q.getrow(i) / qi
    row[0, i] = 0.0
    row.eliminate_zeros()
    return row


def embedded_matrix(Q: sp.spmatrix) -> sp.csr_matrix:
    """Full embedded-chain transition matrix (row-normalized off-diagonal)."""
    Q = sp.csr_matrix(Q).copy()
    qi = outbound_rates(Q)
    Q.setdiag(0.0)
    Q.eliminate_zeros()
    active = qi > 0
    scale = np.where(active, np.where(qi > 0, qi, 1.0), 1.0)
    P = sp.diags(1.0 / scale) @ Q
    absorbing = np.flatnonzero(~active)
    if absorbing.size:
        P = P + sp.csr_matrix(
            (np.ones(absorbing.size), (absorbing, absorbing)), shape=Q.shape
        )
    return sp.csr_matrix(P)


def four_neighbor_adjacency(nx: int, ny: int) -> sp.csr_matrix:
    """Symmetric 0/1 adjacency of the nx-by-ny rectangular grid.

    State index is row-major: index = row * nx + col with row in [0, ny).
    """
    rows, cols = [], []
    for r in range(ny):
        for c in range(nx):
            a = r * nx + c
            if c + 1 < nx:
                b = a + 1
                rows += [a, b]
                cols += [b, a]
            if r + 1 < ny:
                b = a + nx
                rows += [a, b]
                cols += [b, a]
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(nx * ny, nx * ny))


@dataclass(frozen=True)
class GridPotential:
    """Potential sampled on a rectangular grid with 4-neighbor adjacency."""

    nx: int
    ny: int
    h: float
    values: np.ndarray
    adjacency: sp.csr_matrix = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size != self.nx * self.ny:
            raise ValueError("potential values must have nx*ny entries")
        if self.h <= 0:
            raise ValueError("cell size h must be positive")
        object.__setattr__(self, "values", values)
        adj = self.adjacency
        if adj is None:
            adj = four_neighbor_adjacency(self.nx, self.ny)
        object.__setattr__(self, "adjacency", sp.csr_matrix(adj))

    @property
    def N(self) -> int:
        return self.nx * self.ny


def sqra_generator(p: GridPotential, beta: float) -> sp.csr_matrix:
    """Square-root-approximation generator for a potential on a grid.

    Off-diagonal rates are Phi * A_ij * exp(-beta (V_j - V_i) / 2) with the
    flat-potential rate Phi = 1 / (beta h^2); the diagonal closes the rows.
    The sparsity pattern equals the adjacency pattern.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    phi = 1.0 / (beta * p.h ** 2)
    A = p.adjacency.tocoo()
    v = p.values
    data = phi * np.exp(-0.5 * beta * (v[A.col] - v[A.row]))
    off = sp.csr_matrix((data, (A.row, A.col)), shape=A.shape)
    return with_recomputed_diagonal(off)


def rate_sequence_from_protocol(
    grid: TimeGrid,
    builder: Callable[[int, tuple[float, float]], sp.spmatrix],
) -> RateMatrixSequence:
    """Build a RateMatrixSequence by calling builder(k, (t_k, t_{k+1})) per cell.

    Diagonals are recomputed from the returned off-diagonal rates.  Builder
    failures and invariant violations are reported with the cell index.
    """
    mats = []
    for k in range(grid.M):
        span = (float(grid.edges[k]), float(grid.edges[k + 1]))
        try:
            Q = with_recomputed_diagonal(builder(k, span))
        except Exception as exc:
            raise ValueError(f"builder failed on time cell {k} {span}: {exc}") from exc
        mats.append(Q)
    seq = RateMatrixSequence(grid, tuple(mats))
    bad = validate_generator(seq)
    if bad:
        raise ValueError("invalid protocol: " + "; ".join(str(b) for b in bad))
    return seq
