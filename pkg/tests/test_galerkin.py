import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from ajc.galerkin import (
    SpaceTimeIndexer,
    apply_adjoint,
    apply_forward,
    assemble,
    closed_form_survival,
    phi,
    psi,
    row_mass,
)
from ajc.generator import RateMatrixSequence, TimeGrid
from ajc.jumpchain import kernel_density

from conftest import dense_rate_matrix

A, B = 0, 1


def quadrature_entry(seq, i, k, j, l):
    """Independent oracle: cell-averaged double integral of the exact kernel."""
    e = seq.grid.edges
    # the kernel vanishes for t1 <= t0; start the inner integral there to
    # keep the discontinuity off the quadrature grid on diagonal blocks
    val, _ = dblquad(
        lambda t1, t0: kernel_density(seq, i, t0, j, t1),
        e[k], e[k + 1],
        lambda t0: max(e[l], t0), lambda t0: e[l + 1],
        epsabs=1e-12,
    )
    return val / (e[k + 1] - e[k])


class TestHelpers:
    @settings(max_examples=200, deadline=None)
    @given(q=st.floats(min_value=1e-12, max_value=1e6), dt=st.floats(min_value=1e-6, max_value=10.0))
    def test_phi_matches_high_precision_reference(self, q, dt):
        import mpmath

        with mpmath.workdps(50):
            ref = float((1 - mpmath.exp(-mpmath.mpf(q) * dt)) / q)
        assert float(phi(q, dt)) == pytest.approx(ref, rel=1e-11)

    @settings(max_examples=200, deadline=None)
    @given(q=st.floats(min_value=1e-12, max_value=1e6), dt=st.floats(min_value=1e-6, max_value=10.0))
    def test_psi_matches_high_precision_reference(self, q, dt):
        import mpmath

        with mpmath.workdps(50):
            x = mpmath.mpf(q) * dt
            ref = float((mpmath.exp(-x) + x - 1) / (mpmath.mpf(q) * q))
        assert float(psi(q, dt)) == pytest.approx(ref, rel=1e-11)

    def test_zero_rate_limits(self):
        assert float(phi(0.0, 0.7)) == pytest.approx(0.7)
        assert float(psi(0.0, 0.7)) == pytest.approx(0.7 ** 2 / 2)


class TestIndexer:
    def test_layout_time_outer_space_inner(self):
        idx = SpaceTimeIndexer(N=5, M=3)
        assert idx.flat(0, 0) == 0
        assert idx.flat(4, 0) == 4
        assert idx.flat(0, 1) == 5
        i, k = idx.unflat(np.arange(idx.size))
        assert np.array_equal(idx.flat(i, k), np.arange(idx.size))


class TestAssemble:
    def test_within_block_entry(self, two_state_seq, two_state_J):
        got = two_state_J.matrix[0, 1]
        assert got == pytest.approx(np.exp(-1.0), rel=1e-12)
        assert got == pytest.approx(quadrature_entry(two_state_seq, A, 0, B, 0), rel=1e-8)

    def test_gap_entry(self, two_state_seq, two_state_J):
        idx = two_state_J.indexer
        got = two_state_J.matrix[idx.flat(A, 0), idx.flat(B, 2)]
        assert got == pytest.approx((1 - np.exp(-1)) ** 2 * np.exp(-1), rel=1e-12)
        assert got == pytest.approx(quadrature_entry(two_state_seq, A, 0, B, 2), rel=1e-8)

    def test_quadrature_oracle_on_changing_rates(self, positive_rates_seq):
        J = assemble(positive_rates_seq)
        idx = J.indexer
        for (i, k, j, l) in [(0, 0, 1, 0), (0, 0, 2, 3), (1, 1, 0, 2), (2, 0, 1, 1)]:
            got = J.matrix[idx.flat(i, k), idx.flat(j, l)]
            assert got == pytest.approx(
                quadrature_entry(positive_rates_seq, i, k, j, l), rel=1e-7
            )

    def test_absorbing_row_is_empty(self):
        seq = RateMatrixSequence(
            TimeGrid.uniform(0, 2, 4),
            tuple(dense_rate_matrix([[0, 0], [1, 0]]) for _ in range(4)),
        )
        J = assemble(seq)
        for k in range(4):
            a = int(J.indexer.flat(0, k))
            assert J.matrix[a].nnz == 0
            assert J.survival_mass[a] == pytest.approx(1.0)

    def test_block_upper_triangular(self, two_state_J, triple_well_J):
        for J in (two_state_J, triple_well_J):
            coo = J.matrix.tocoo()
            _, k = J.indexer.unflat(coo.row)
            _, l = J.indexer.unflat(coo.col)
            assert np.all(l >= k)

    def test_entries_are_probabilities(self, two_state_J, triple_well_J):
        for J in (two_state_J, triple_well_J):
            assert J.matrix.data.min() >= 0.0
            assert J.matrix.data.max() <= 1.0
            rowsums = np.asarray(J.matrix.sum(axis=1)).ravel()
            assert rowsums.max() <= 1.0 + 1e-12
            assert J.survival_mass.min() >= -1e-12
            assert J.survival_mass.max() <= 1.0 + 1e-12

    def test_sparsity_inheritance(self, positive_rates_seq, two_state_J):
        # equality for strictly positive rates, inequality in general
        J = assemble(positive_rates_seq)
        M = positive_rates_seq.grid.M
        nnz_q = 6  # 3 states, all off-diagonal rates positive
        assert J.matrix.nnz == nnz_q * M * (M + 1) // 2
        assert two_state_J.matrix.nnz <= 2 * 8 * 9 // 2

    def test_block_sparsity_within_generator_pattern(self, triple_well_seq, triple_well_J):
        J, seq = triple_well_J, triple_well_seq
        coo = J.matrix.tocoo()
        i, k = J.indexer.unflat(coo.row)
        j, l = J.indexer.unflat(coo.col)
        for m in range(seq.grid.M):
            Q = seq.matrices[m]
            pattern = set(zip(*Q.nonzero()))
            sel = l == m
            assert all((a, b) in pattern for a, b in zip(i[sel], j[sel]))


class TestRowMass:
    def test_absorbing_row(self):
        seq = RateMatrixSequence(
            TimeGrid.uniform(0, 2, 2),
            tuple(dense_rate_matrix([[0, 0], [1, 0]]) for _ in range(2)),
        )
        J = assemble(seq)
        assert row_mass(J, 0, 0) == (0.0, 1.0)

    def test_two_state_first_cell(self, two_state_J):
        # A leaves at rate 1 on [0,4] and is frozen afterwards
        jump, surv = row_mass(two_state_J, A, 0)
        expected_jump = 1.0 - np.exp(-4.0) * (np.e - 1.0)
        assert jump == pytest.approx(expected_jump, rel=1e-12)
        assert jump + surv == pytest.approx(1.0, abs=1e-12)

    def test_last_cell_constant_rate(self, positive_rates_seq):
        seq = positive_rates_seq
        J = assemble(seq)
        M = seq.grid.M
        dt = seq.grid.widths[-1]
        for i in range(seq.N):
            q = seq.outbound[i, M - 1]
            jump, surv = row_mass(J, i, M - 1)
            assert jump == pytest.approx(1 - (1 - np.exp(-q * dt)) / (q * dt), rel=1e-11)
            assert jump + surv == pytest.approx(1.0, abs=1e-12)

    def test_mass_conservation_everywhere(self, two_state_J, triple_well_J):
        for J in (two_state_J, triple_well_J):
            jump = np.asarray(J.matrix.sum(axis=1)).ravel()
            surv = np.array([
                closed_form_survival(J, i, k)
                for k in range(J.indexer.M) for i in range(J.indexer.N)
            ])
            assert np.abs(jump + surv - 1.0).max() < 1e-10


class TestApply:
    def test_zero_maps_to_zero(self, two_state_J):
        z = np.zeros(two_state_J.indexer.size)
        assert np.all(apply_forward(two_state_J, z) == 0)

    def test_last_block_support_stays_in_last_block(self, two_state_J):
        idx = two_state_J.indexer
        f = np.zeros(idx.size)
        f[idx.flat(B, idx.M - 1)] = 1.0
        out = apply_forward(two_state_J, f)
        assert np.all(out[: (idx.M - 1) * idx.N] == 0)

    def test_adjoint_pair(self, triple_well_J):
        rng = np.random.default_rng(11)
        n = triple_well_J.indexer.size
        for _ in range(5):
            f, g = rng.random(n), rng.random(n)
            lhs = apply_forward(triple_well_J, f) @ g
            rhs = f @ apply_adjoint(triple_well_J, g)
            assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(f) * np.linalg.norm(g)

    def test_dimension_mismatch(self, two_state_J):
        with pytest.raises(ValueError):
            apply_forward(two_state_J, np.zeros(3))
