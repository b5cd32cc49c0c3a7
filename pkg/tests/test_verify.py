"""Finite-size sampling, exact and stochastic pressures, concentration."""

import math

import numpy as np
import pytest

from tfglass import (
    CapacityError,
    DistributionSpec,
    FieldSpec,
    ValidationError,
    concentration_check,
    convergence_study,
    exact_pressure,
    sample_instance,
    sign_invariance_check,
    stochastic_pressure,
)
from tfglass.model import ln_2cosh
from tfglass.verify import (
    dense_hamiltonian,
    diagonal_pressure,
    exact_spectrum,
    field_only_pressure,
)

LN2 = math.log(2.0)

REM_SPEC = DistributionSpec.rem()
GREM_SPEC = DistributionSpec.from_jumps([0.5, 0.5], [0.5, 1.0])
ZERO_SPEC = DistributionSpec.step([1.0], [0.0], normalized=False)  # U identically 0
CONST1 = FieldSpec.constant(1.0)


class TestSampleInstance:
    def test_deterministic_replay(self):
        a = sample_instance(GREM_SPEC, CONST1, 6, 123)
        b = sample_instance(GREM_SPEC, CONST1, 6, 123)
        c = sample_instance(GREM_SPEC, CONST1, 6, 124)
        assert np.array_equal(a.potential, b.potential)
        assert np.array_equal(a.field_weights, b.field_weights)
        assert not np.array_equal(a.potential, c.potential)

    def test_rem_variance(self):
        # 2^N i.i.d. values with variance N
        R, N = 4000, 2
        draws = np.array([sample_instance(REM_SPEC, CONST1, N, s).potential for s in range(R)])
        var = draws.var(axis=0)
        se = N * math.sqrt(2.0 / R)
        assert np.all(np.abs(var - N) < 3.5 * se)

    def test_shared_prefix_covariance(self):
        # two-block model at N=2: configurations sharing the first spin have
        # covariance N * A(1/2) = 1
        R = 100_000
        draws = np.array([sample_instance(GREM_SPEC, CONST1, 2, s).potential for s in range(R)])
        emp = np.mean(draws[:, 0] * draws[:, 1])  # sigma = (+,+) vs (+,-)
        se = math.sqrt((2.0 * 2.0 + 1.0) / R)
        assert abs(emp - 1.0) < 3.0 * se
        # no shared prefix: independent
        emp0 = np.mean(draws[:, 0] * draws[:, 3])
        assert abs(emp0) < 3.0 * math.sqrt(4.0 / R)

    def test_covariance_matrix_matches_profile(self):
        # full pairwise check at small N against N * A(overlap)
        spec = DistributionSpec.from_jumps([0.6, 0.4], [0.5, 1.0])
        N, R = 4, 30_000
        draws = np.array([sample_instance(spec, CONST1, N, s).potential for s in range(R)])
        emp = draws.T @ draws / R
        idx = np.arange(1 << N)
        for i in idx:
            for j in idx:
                if i == j:
                    q = 1.0
                else:
                    q = (N - 1 - int(np.floor(np.log2(i ^ j)))) / N  # common-prefix length
                want = N * spec.value_at(q)
                se = math.sqrt((N * N + want * want) / R)
                assert abs(emp[i, j] - want) < 4.0 * se

    def test_empty_block_rejected(self):
        spec = DistributionSpec.step([0.05, 0.1, 1.0], [0.3, 0.6, 1.0])
        with pytest.raises(ValidationError):
            sample_instance(spec, CONST1, 10, 0)

    def test_piecewise_linear_uses_resolution_n(self):
        spec = DistributionSpec.piecewise_linear([1.0], [1.0])  # A(x) = x
        inst = sample_instance(spec, CONST1, 4, 9)
        assert inst.potential.shape == (16,)
        # identity profile at resolution N: all N levels carry weight 1/N
        sib = sample_instance(spec, CONST1, 4, 9)
        assert np.array_equal(inst.potential, sib.potential)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            sample_instance(REM_SPEC, CONST1, 21, 0)


class TestExactPressure:
    def test_diagonal_limit_matches_direct_sum(self):
        # zero field: the Hamiltonian is diagonal
        inst = sample_instance(REM_SPEC, FieldSpec.constant(0.0), 8, 11)
        assert exact_pressure(inst, 1.3) == pytest.approx(diagonal_pressure(inst, 1.3), abs=1e-10)

    def test_pure_field_closed_form(self):
        # U = 0: tensor-product spectrum, pressure is ln 2 cosh(beta Gamma) at any N
        for N in (2, 5, 8):
            inst = sample_instance(ZERO_SPEC, CONST1, N, 3)
            for beta in (0.5, 1.2, 3.0):
                assert exact_pressure(inst, beta) == pytest.approx(
                    float(ln_2cosh(beta)), abs=1e-12
                )

    def test_infinite_temperature(self):
        inst = sample_instance(REM_SPEC, CONST1, 6, 5)
        assert exact_pressure(inst, 0.0) == pytest.approx(LN2, abs=1e-13)

    def test_capacity_gate(self):
        inst = sample_instance(REM_SPEC, CONST1, 15, 0)
        with pytest.raises(CapacityError):
            exact_pressure(inst, 1.0)

    def test_gibbs_lower_bounds(self, rng):
        N = 6
        for s in range(50):
            # breakpoints on the 1/N lattice so no block is empty
            n_blocks = int(rng.integers(1, 4))
            cuts = sorted(rng.choice(np.arange(1, N), size=n_blocks - 1, replace=False))
            xs = [c / N for c in cuts] + [1.0]
            jumps = rng.dirichlet(np.ones(n_blocks))
            spec = DistributionSpec.from_jumps(jumps, xs)
            inst = sample_instance(spec, FieldSpec.constant(float(rng.uniform(0, 2))), N, s)
            beta = float(rng.uniform(0.1, 2.5))
            phi = exact_pressure(inst, beta)
            assert phi >= diagonal_pressure(inst, beta) - 1e-10
            assert phi >= field_only_pressure(inst, beta) - 1e-10

    def test_convex_in_beta(self):
        inst = sample_instance(GREM_SPEC, CONST1, 8, 17)
        eigs = exact_spectrum(inst)
        lo = eigs.min()
        betas = np.linspace(0.0, 3.0, 61)
        phis = [(-b * lo + math.log(np.exp(-b * (eigs - lo)).sum())) / inst.N for b in betas]
        assert np.all(np.diff(phis, 2) >= -1e-9)


class TestStochasticPressure:
    def test_agrees_with_exact_within_three_error_bars(self):
        for seed in (1, 2, 3):
            inst = sample_instance(REM_SPEC, CONST1, 10, seed)
            want = exact_pressure(inst, 1.2)
            est = stochastic_pressure(inst, 1.2, probes=96, seed=seed + 100)
            assert est.converged
            assert abs(est.value - want) <= 3.0 * est.error

    def test_pure_field_closed_form_within_error_bar(self):
        inst = sample_instance(ZERO_SPEC, FieldSpec.constant(0.7), 9, 4)
        est = stochastic_pressure(inst, 1.1, probes=64, seed=8)
        assert abs(est.value - float(ln_2cosh(1.1 * 0.7))) <= 3.0 * max(est.error, 1e-12)

    def test_zero_probes_rejected(self):
        inst = sample_instance(REM_SPEC, CONST1, 6, 0)
        with pytest.raises(ValidationError):
            stochastic_pressure(inst, 1.0, probes=0)

    def test_insufficient_degree_is_flagged_not_silent(self):
        inst = sample_instance(REM_SPEC, CONST1, 8, 2)
        est = stochastic_pressure(inst, 2.0, probes=32, poly_degree=4, seed=1, tol=1e-3)
        assert not est.converged

    def test_deterministic_for_fixed_seed(self):
        inst = sample_instance(REM_SPEC, CONST1, 8, 2)
        a = stochastic_pressure(inst, 1.2, probes=32, seed=5)
        b = stochastic_pressure(inst, 1.2, probes=32, seed=5)
        assert a == b


class TestSignInvariance:
    def test_random_flip_patterns_leave_diagonal_fixed(self):
        inst = sample_instance(GREM_SPEC, CONST1, 6, 21)
        dev = sign_invariance_check(inst, 1.0, patterns=20, seed=3)
        assert dev <= 1e-8

    def test_flipping_all_signs(self):
        from dataclasses import replace

        from tfglass.verify import _exp_diag

        inst = sample_instance(REM_SPEC, CONST1, 8, 33)
        base, anchor = _exp_diag(inst, 1.0)
        flipped, _ = _exp_diag(replace(inst, field_weights=-inst.field_weights), 1.0, anchor)
        assert np.max(np.abs(flipped - base) / base) <= 1e-8

    def test_off_diagonals_do_change_sign(self):
        # the invariance is a statement about diagonals only
        inst = sample_instance(REM_SPEC, CONST1, 2, 1)
        H = dense_hamiltonian(inst)
        H2 = dense_hamiltonian(
            type(inst)(inst.N, inst.potential, -inst.field_weights, inst.seed)
        )
        assert np.allclose(np.diag(H), np.diag(H2))
        off = H - np.diag(np.diag(H))
        assert np.allclose(H2 - np.diag(np.diag(H2)), -off)
        assert np.any(off != 0)


class TestConcentration:
    def test_needs_replicas(self):
        with pytest.raises(ValidationError):
            concentration_check(REM_SPEC, CONST1, 6, 1.0, replicas=100, seed=0)

    def test_infinite_temperature_is_deterministic(self):
        rep = concentration_check(REM_SPEC, CONST1, 4, 0.0, replicas=200, seed=1)
        assert rep.fractions == (0.0, 0.0, 0.0)
        assert rep.passed

    def test_bounds_hold_at_small_sizes(self):
        rep = concentration_check(GREM_SPEC, CONST1, 6, 1.2, replicas=250, seed=2)
        assert rep.passed
        assert all(b > 0 for b in rep.bounds)

    def test_spread_shrinks_with_n(self):
        a = concentration_check(REM_SPEC, CONST1, 4, 1.0, replicas=300, seed=3)
        b = concentration_check(REM_SPEC, CONST1, 8, 1.0, replicas=300, seed=3)
        assert b.std < a.std


class TestConvergenceStudy:
    def test_pure_paramagnet_control_has_zero_gap(self):
        study = convergence_study(ZERO_SPEC, CONST1, 1.2, [4, 6], replicas=5, seed=0)
        for row in study.rows:
            assert row.gap == pytest.approx(0.0, abs=1e-12)
        assert study.limit == pytest.approx(float(ln_2cosh(1.2)), abs=1e-12)

    def test_deterministic_aggregate(self):
        a = convergence_study(REM_SPEC, CONST1, 1.2, [5], replicas=8, seed=42)
        b = convergence_study(REM_SPEC, CONST1, 1.2, [5], replicas=8, seed=42)
        assert a == b

    def test_workers_do_not_change_the_result(self):
        a = convergence_study(REM_SPEC, CONST1, 1.0, [6], replicas=10, seed=7)
        b = convergence_study(REM_SPEC, CONST1, 1.0, [6], replicas=10, seed=7, workers=2)
        assert a == b

    def test_freeze_field_freezes_weights(self):
        f = FieldSpec.gaussian(0.0, 1.0)
        study = convergence_study(ZERO_SPEC, f, 1.0, [4], replicas=6, seed=9, freeze_field=True)
        # zero potential: Phi_N is a function of the (frozen) weights only
        assert len(set(study.replica_phis[0])) == 1
