"""Per-model tests: coarsenings, statistics, closed forms, invariances."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from evseq import models, specfun
from evseq.errors import DataError, DomainError, RegressionStartup, StateError


def t_state(ys):
    state = None
    for y in ys:
        state = models.t_update(state, y)
    return state


def chisq_state(ys):
    state = None
    for y in ys:
        state = models.chisq_update(state, y)
    return state


def bern_state(ys):
    state = None
    for y in ys:
        state = models.bern_update(state, y)
    return state


def reg_snapshot(obs):
    snap = None
    for o in obs:
        snap = models.reg_update(snap, o)
    return snap


class TestTStatistic:
    def test_worked_example(self):
        state = t_state([2.0, 4.0, 6.0])
        assert models.t_statistic(state) == pytest.approx(2.0 * math.sqrt(3.0), rel=1e-15)

    def test_zero_variance_positive(self):
        assert models.t_statistic(t_state([3.0, 3.0, 3.0])) == math.inf

    def test_zero_variance_negative(self):
        assert models.t_statistic(t_state([-3.0, -3.0])) == -math.inf

    @given(st.lists(st.floats(min_value=-10, max_value=10), min_size=2, max_size=12))
    @settings(max_examples=100, deadline=None)
    def test_negation_antisymmetry(self, ys):
        ys = [y if abs(y) > 1e-6 else y + 1.0 for y in ys]
        plus = models.t_statistic(t_state(ys))
        minus = models.t_statistic(t_state([-y for y in ys]))
        if math.isinf(plus):
            assert minus == -plus
        else:
            assert minus == pytest.approx(-plus, abs=1e-9, rel=1e-9)

    def test_needs_two_observations(self):
        with pytest.raises(StateError):
            models.t_statistic(t_state([1.0]))

    def test_zero_first_observation_rejected(self):
        with pytest.raises(DataError):
            models.t_update(None, 0.0)


class TestTLogEvalue:
    def test_equal_deltas_zero(self):
        state = t_state([1.0, -2.0, 0.7])
        for n_state in (t_state([1.0]), state):
            assert models.t_log_evalue(n_state, 0.4, 0.4) == 0.0

    def test_first_step_sign_rule(self):
        # frozen from the 50-digit normal-CDF oracle: ln Phi(0.5) - ln Phi(0)
        got = models.t_log_evalue(t_state([3.7]), 0.0, 0.5)
        assert got == pytest.approx(0.32420076527128894, abs=1e-13)
        # negative first observation flips the sign inside Phi
        neg = models.t_log_evalue(t_state([-3.7]), 0.0, 0.5)
        want = math.log(specfun.norm_cdf(-0.5)) - math.log(0.5)
        assert neg == pytest.approx(want, abs=1e-13)

    def test_worked_example_matches_ratio(self):
        state = t_state([2.0, 4.0, 6.0])
        got = models.t_log_evalue(state, 0.0, 0.3)
        want = specfun.nct_logratio(
            2.0 * math.sqrt(3.0), 2.0, 0.3 * math.sqrt(3.0), 0.0
        )
        assert got == pytest.approx(want, abs=1e-14)

    def test_sufficiency_coincidence_against_quadrature(self):
        # process value equals the density-ratio of the sufficient statistic
        state = t_state([1.0, 2.5, 0.3, 1.7])
        tval = models.t_statistic(state)
        got = models.t_log_evalue(state, 0.1, 0.6)
        n = state.n
        want = oracles.nct_logpdf_quadrature(
            tval, n - 1, 0.6 * math.sqrt(n)
        ) - oracles.nct_logpdf_quadrature(tval, n - 1, 0.1 * math.sqrt(n))
        assert got == pytest.approx(want, abs=1e-11)

    @given(
        st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=10),
        st.floats(min_value=0.01, max_value=100.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_scale_invariance(self, ys, c):
        ys = [y if abs(y) > 1e-6 else y + 0.5 for y in ys]
        base = t_state(ys)
        scaled = t_state([c * y for y in ys])
        for d0, dp in ((0.0, 0.5), (-0.3, 0.2)):
            assert models.t_log_evalue(scaled, d0, dp) == pytest.approx(
                models.t_log_evalue(base, d0, dp), abs=1e-11
            )


class TestChiSq:
    def test_worked_Q(self):
        assert models.chisq_Q(chisq_state([1.0, 2.0, 3.0])) == pytest.approx(2.0, abs=1e-14)

    def test_constant_data(self):
        assert models.chisq_Q(chisq_state([4.2, 4.2, 4.2])) == 0.0

    @given(
        st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=12),
        st.floats(min_value=-1e3, max_value=1e3),
    )
    @settings(max_examples=100, deadline=None)
    def test_translation_invariance(self, ys, c):
        q0 = models.chisq_Q(chisq_state(ys))
        q1 = models.chisq_Q(chisq_state([y + c for y in ys]))
        assert q1 == pytest.approx(q0, abs=1e-8, rel=1e-10)

    @given(
        st.lists(st.floats(min_value=-10, max_value=10), min_size=1, max_size=12),
        st.floats(min_value=-100, max_value=100),
    )
    @settings(max_examples=100, deadline=None)
    def test_log_evalue_translation_invariance(self, ys, c):
        base = chisq_state(ys)
        shifted = chisq_state([y + c for y in ys])
        assert models.chisq_log_evalue(shifted, 1.0, 2.0) == pytest.approx(
            models.chisq_log_evalue(base, 1.0, 2.0), abs=1e-11
        )

    def test_worked_log_evalue(self):
        state = chisq_state([1.0, 2.0, 3.0])
        got = models.chisq_log_evalue(state, 1.0, 2.0)
        want = 2.0 * math.log(0.5) + 0.5 * (1.0 - 0.25) * 2.0
        assert got == pytest.approx(want, abs=1e-14)
        assert math.exp(got) == pytest.approx(0.5292500041531687, rel=1e-12)

    def test_equal_scales_zero(self):
        state = chisq_state([1.0, 5.0, -2.0])
        assert models.chisq_log_evalue(state, 1.3, 1.3) == 0.0

    def test_single_observation_zero(self):
        assert models.chisq_log_evalue(chisq_state([7.0]), 1.0, 2.0) == 0.0

    def test_matches_density_ratio(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 30))
            ys = rng.normal(rng.uniform(-5, 5), rng.uniform(0.2, 3.0), n)
            s0, sp = rng.uniform(0.3, 3.0, 2)
            state = chisq_state(list(ys))
            q = models.chisq_Q(state)
            got = models.chisq_log_evalue(state, s0, sp)
            want = specfun.chisq_scaled_logpdf(q, n - 1, sp * sp) - specfun.chisq_scaled_logpdf(
                q, n - 1, s0 * s0
            )
            assert got == pytest.approx(want, abs=1e-9)

    def test_nonpositive_scales(self):
        state = chisq_state([1.0, 2.0])
        with pytest.raises(DomainError):
            models.chisq_log_evalue(state, 0.0, 1.0)
        with pytest.raises(DomainError):
            models.chisq_log_evalue(state, 1.0, -2.0)


class TestBernoulli:
    def test_first_step_zero(self):
        assert models.bern_log_evalue(bern_state([1.0]), 0.5, 0.9) == 0.0
        assert models.bern_log_evalue(bern_state([0.0]), 0.5, 0.9) == 0.0

    def test_worked_example(self):
        state = bern_state([1.0, 1.0])
        got = models.bern_log_evalue(state, 0.5, 0.9)
        assert got == pytest.approx(math.log(1.64), rel=1e-14)

    def test_equal_thetas_zero(self):
        state = bern_state([1.0, 0.0, 1.0])
        assert models.bern_log_evalue(state, 0.7, 0.7) == 0.0

    def test_parameters_below_half_rejected_with_guidance(self):
        state = bern_state([1.0, 0.0])
        with pytest.raises(DomainError, match="label-flip"):
            models.bern_log_evalue(state, 0.3, 0.8)
        with pytest.raises(DomainError):
            models.bern_log_evalue(state, 0.6, 1.0)

    def test_non_binary_rejected(self):
        with pytest.raises(DataError):
            models.bern_update(None, 0.5)

    @given(st.lists(st.integers(min_value=0, max_value=1), min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_label_flip_invariance_bitwise(self, bits):
        ys = [float(b) for b in bits]
        flipped = [1.0 - y for y in ys]
        a, b = bern_state(ys), bern_state(flipped)
        assert models.bern_statistic(a) == models.bern_statistic(b)
        # identical to the bit: same statistic feeds the same closed form
        assert models.bern_log_evalue(a, 0.55, 0.8) == models.bern_log_evalue(b, 0.55, 0.8)

    def test_monotone_in_statistic_exhaustive(self):
        # log e-value nondecreasing in T_n for every n <= 30 and a
        # representative set of parameter pairs
        for theta0, theta_plus in ((0.5, 0.7), (0.6, 0.9), (0.5, 0.51), (0.55, 0.55)):
            for n in range(2, 31):
                vals = []
                for t in range(math.ceil(n / 2), n + 1):
                    num = models._bern_logpmf_shape(n, float(t), theta_plus)
                    den = models._bern_logpmf_shape(n, float(t), theta0)
                    vals.append(num - den)
                diffs = np.diff(vals)
                assert np.all(diffs >= -1e-12), (theta0, theta_plus, n)


class TestNullspaceBasis:
    def test_empty_nuisance(self):
        basis, rank = models.nullspace_basis(np.empty((3, 0)))
        assert rank == 0
        np.testing.assert_allclose(basis, np.eye(3))

    def test_ones_column_two_rows(self):
        basis, rank = models.nullspace_basis(np.ones((2, 1)))
        assert rank == 1 and basis.shape == (1, 2)
        v = basis[0] * math.copysign(1.0, basis[0, 0])
        np.testing.assert_allclose(v, [1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)], atol=1e-12)

    def test_duplicate_columns(self):
        z = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        basis, rank = models.nullspace_basis(z)
        assert rank == 1 and basis.shape == (2, 3)

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=4), st.integers(0, 2**32 - 1))
    @settings(max_examples=100, deadline=None)
    def test_orthonormality_and_projection(self, n, d, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(n, d))
        basis, rank = models.nullspace_basis(z)
        k = n - rank
        assert basis.shape == (k, n)
        np.testing.assert_allclose(basis @ basis.T, np.eye(k), atol=1e-9)
        proj = np.eye(n) - z @ np.linalg.pinv(z) if d else np.eye(n)
        np.testing.assert_allclose(basis.T @ basis, proj, atol=1e-8)


class TestRegression:
    def test_reduction_to_t_statistic(self):
        ys = [1.3, -0.2, 2.7, 0.4, -1.1]
        snap = reg_snapshot([(y, 1.0, ()) for y in ys])
        t, dof, b_norm = models.reg_t_statistic(snap)
        want = models.t_statistic(t_state(ys))
        assert t == pytest.approx(want, abs=1e-9)
        assert dof == len(ys) - 1
        assert b_norm == pytest.approx(math.sqrt(len(ys)), rel=1e-12)

    def test_reduction_to_t_log_evalue(self):
        ys = [1.3, -0.2, 2.7, 0.4, -1.1]
        snap = reg_snapshot([(y, 1.0, ()) for y in ys])
        got = models.reg_log_evalue(snap, 0.0, 0.5)
        want = models.t_log_evalue(t_state(ys), 0.0, 0.5)
        assert got == pytest.approx(want, abs=1e-9)

    def test_lstsq_oracle_example(self):
        snap = reg_snapshot([(1.0, 1.0, (1.0,)), (2.0, 2.0, (1.0,)), (4.0, 3.0, (1.0,))])
        t, dof, b_norm = models.reg_t_statistic(snap)
        t_want, dof_want, rx_norm = oracles.reg_t_lstsq([1, 2, 4], [1, 2, 3], [[1], [1], [1]])
        assert t == pytest.approx(t_want, abs=1e-10)
        assert dof == dof_want
        assert b_norm == pytest.approx(rx_norm, rel=1e-12)

    @given(st.integers(min_value=4, max_value=12), st.integers(min_value=0, max_value=3), st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_lstsq_oracle_random(self, n, d, seed):
        rng = np.random.default_rng(seed)
        y, x = rng.normal(size=n), rng.normal(size=n)
        z = rng.normal(size=(n, d))
        snap = reg_snapshot([(float(yi), float(xi), tuple(zi)) for yi, xi, zi in zip(y, x, z)])
        try:
            t, dof, _ = models.reg_t_statistic(snap)
        except RegressionStartup:
            return
        t_want, dof_want, _ = oracles.reg_t_lstsq(y, x, z)
        assert t == pytest.approx(t_want, abs=1e-9)
        assert dof == dof_want

    def test_rotation_invariance(self):
        rng = np.random.default_rng(5)
        n, d = 8, 2
        y, x = rng.normal(size=n), rng.normal(size=n)
        z = rng.normal(size=(n, d))
        snap = reg_snapshot([(float(yi), float(xi), tuple(zi)) for yi, xi, zi in zip(y, x, z)])
        t0, _, _ = models.reg_t_statistic(snap)
        k = snap.basis.shape[0]
        for _ in range(10):
            o = np.linalg.qr(rng.normal(size=(k, k)))[0]
            rotated = models.RegressionSnapshot(
                n=snap.n, y=snap.y, x=snap.x, z=snap.z, rank=snap.rank, k=snap.k,
                basis=o @ snap.basis, b=o @ snap.b,
            )
            t1, _, _ = models.reg_t_statistic(rotated)
            assert t1 == pytest.approx(t0, abs=1e-9)

    def test_startup_and_collinear_x(self):
        # one observation: k = 1 < 2, uninformative step
        snap = reg_snapshot([(1.0, 2.0, (1.0,))])
        with pytest.raises(RegressionStartup):
            models.reg_t_statistic(snap)
        assert models.reg_log_evalue(snap, 0.0, 0.5) == 0.0
        # x in the column span of z: b = 0, uninformative step
        obs = [(1.0, 2.0, (1.0,)), (2.0, 2.0, (1.0,)), (0.5, 2.0, (1.0,))]
        snap = reg_snapshot(obs)
        with pytest.raises(RegressionStartup):
            models.reg_t_statistic(snap)
        assert models.reg_log_evalue(snap, 0.0, 0.5) == 0.0

    def test_zero_residual_data_error(self):
        # y exactly in the column span of z leaves a zero coarsened vector
        obs = [(1.0, 0.3, (1.0,)), (1.0, -0.2, (1.0,)), (1.0, 0.9, (1.0,))]
        with pytest.raises(DataError):
            models.reg_t_statistic(reg_snapshot(obs))

    def test_equal_deltas_zero(self):
        rng = np.random.default_rng(2)
        obs = [(float(rng.normal()), float(rng.normal()), ()) for _ in range(5)]
        assert models.reg_log_evalue(reg_snapshot(obs), 0.7, 0.7) == 0.0

    def test_nuisance_dimension_must_stay_fixed(self):
        snap = models.reg_update(None, (1.0, 1.0, (2.0,)))
        with pytest.raises(DataError):
            models.reg_update(snap, (1.0, 1.0, (2.0, 3.0)))

    def test_sufficiency_coincidence_against_quadrature(self):
        rng = np.random.default_rng(13)
        n, d = 7, 1
        y, x = rng.normal(size=n), rng.normal(size=n)
        z = rng.normal(size=(n, d))
        snap = reg_snapshot([(float(yi), float(xi), tuple(zi)) for yi, xi, zi in zip(y, x, z)])
        t, dof, b_norm = models.reg_t_statistic(snap)
        got = models.reg_log_evalue(snap, 0.0, 0.4)
        want = oracles.nct_logpdf_quadrature(t, dof, 0.4 * b_norm) - oracles.nct_logpdf_quadrature(
            t, dof, 0.0
        )
        assert got == pytest.approx(want, abs=1e-11)
