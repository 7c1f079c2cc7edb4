import numpy as np
import pytest

from drivedesign.dynamics import ActuatorModel, SamplingGrid, make_profile
from drivedesign.estimator import QualityTarget
from drivedesign.problems import (
    Bounds,
    DesignProblem,
    PiecewiseBound,
    assemble_constraints,
    check_feasibility,
    lift_point,
    lift_problem,
    verify_rank_one,
)


def small_problem(n=4, ts=0.5, p=0.5, v0=2.0, r=1.0, objective="min_distance", **bnd):
    bounds = Bounds(
        a_min=bnd.pop("a_min", -0.5),
        a_max=bnd.pop("a_max", 0.9),
        v_min=bnd.pop("v_min", 1.0),
        v_max=bnd.pop("v_max", 4.0),
        **bnd,
    )
    target = QualityTarget(m_nominal=1000.0, sigma_e2=1.0, r_designed=r)
    return DesignProblem(
        objective=objective,
        grid=SamplingGrid(ts=ts, n=n),
        actuator=ActuatorModel(p=p),
        bounds=bounds,
        target=target,
        v0=v0,
    )


class TestBounds:
    def test_input_limits_default_to_acceleration_limits(self):
        b = Bounds(a_min=-0.3, a_max=0.9, v_min=1.0, v_max=3.0)
        assert b.u_min == -0.3
        assert b.u_max == 0.9

    def test_sign_conventions_enforced(self):
        with pytest.raises(ValueError):
            Bounds(a_min=0.1, a_max=0.9, v_min=0.0, v_max=1.0)
        with pytest.raises(ValueError):
            Bounds(a_min=-0.1, a_max=-0.9, v_min=0.0, v_max=1.0)
        with pytest.raises(ValueError):
            Bounds(a_min=-0.1, a_max=0.9, v_min=2.0, v_max=1.0)

    def test_piecewise_lookup(self):
        pb = PiecewiseBound(breaks=[0.0, 10.0, 25.0], values=[1.0, 2.0, 3.0])
        np.testing.assert_allclose(pb.value_at([0.0, 9.9, 10.0, 24.0, 100.0]),
                                   [1.0, 1.0, 2.0, 2.0, 3.0])

    def test_varying_override_changes_with_distance(self):
        b = Bounds(
            a_min=-0.5, a_max=0.9, v_min=1.0, v_max=4.0,
            varying={"v_max": PiecewiseBound(breaks=[0.0, 20.0], values=[4.0, 6.0])},
        )
        _, _, _, v_max_k = b.at_distance(np.array([5.0, 30.0]))
        np.testing.assert_allclose(v_max_k, [4.0, 6.0])

    def test_unknown_varying_key_rejected(self):
        with pytest.raises(ValueError, match="not recognized"):
            Bounds(
                a_min=-0.5, a_max=0.9, v_min=1.0, v_max=4.0,
                varying={"d_max": PiecewiseBound(breaks=[0.0], values=[1.0])},
            )


class TestDesignProblem:
    def test_rejects_unknown_objective(self):
        with pytest.raises(ValueError, match="objective"):
            small_problem(objective="fastest")

    def test_requires_target_for_non_accuracy_objectives(self):
        bounds = Bounds(a_min=-0.5, a_max=0.9, v_min=1.0, v_max=4.0)
        target = QualityTarget(m_nominal=1000.0, sigma_e2=1.0)
        with pytest.raises(ValueError, match="r_designed"):
            DesignProblem(
                objective="min_time",
                grid=SamplingGrid(ts=0.5, n=4),
                actuator=ActuatorModel(p=0.5),
                bounds=bounds,
                target=target,
                v0=2.0,
            )
        DesignProblem(
            objective="max_accuracy",
            grid=SamplingGrid(ts=0.5, n=4),
            actuator=ActuatorModel(p=0.5),
            bounds=bounds,
            target=target,
            v0=2.0,
        )


class TestAssembleConstraints:
    def test_scalar_instance_reduces_to_box(self):
        prob = small_problem(n=1, p=1e-9, v0=2.0)
        sys = assemble_constraints(prob)
        # With F = I the acceleration rows are the identity against the box.
        np.testing.assert_allclose(sys.quality, [[1.0]], atol=1e-8)
        i_up = sys.labels.index("accel_upper[1]")
        i_lo = sys.labels.index("accel_lower[1]")
        np.testing.assert_allclose(sys.a_ub[i_up], [1.0], atol=1e-8)
        assert sys.b_ub[i_up] == pytest.approx(0.9)
        np.testing.assert_allclose(sys.a_ub[i_lo], [-1.0], atol=1e-8)
        assert sys.b_ub[i_lo] == pytest.approx(0.5)

    def test_paper_style_settings_build(self):
        prob = small_problem(
            n=20, ts=0.5, p=0.979, v0=4.0 / 3.6,
            a_min=-0.3, a_max=0.9, v_min=4.0 / 3.6, v_max=12.0 / 3.6,
        )
        sys = assemble_constraints(prob)
        assert sys.a_ub.shape == (6 * 20, 20)

    def test_row_count_with_and_without_distance(self):
        n = 5
        assert assemble_constraints(small_problem(n=n)).a_ub.shape[0] == 6 * n
        sys = assemble_constraints(small_problem(n=n, d_max=100.0))
        assert sys.a_ub.shape[0] == 6 * n + 1
        assert sys.labels[-1] == "distance"

    def test_rows_match_simulation(self):
        # Matrix residuals and simulated trajectories see the same physics.
        rng = np.random.default_rng(0)
        for trial in range(10):
            n = int(rng.integers(2, 7))
            prob = small_problem(n=n, p=float(rng.uniform(0.1, 0.95)), d_max=50.0)
            u = rng.uniform(-0.5, 0.9, size=n)
            sys = assemble_constraints(prob)
            res = sys.residuals(u)
            prof = make_profile(u, prob.actuator, prob.grid, v0=prob.v0)
            b = prob.bounds
            for k in range(n):
                assert res[sys.labels.index(f"accel_upper[{k + 1}]")] == pytest.approx(
                    prof.a[k] - b.a_max, abs=1e-9
                )
                assert res[sys.labels.index(f"vel_lower[{k + 1}]")] == pytest.approx(
                    b.v_min - prof.v[k], abs=1e-9
                )
            assert res[sys.labels.index("distance")] == pytest.approx(
                prof.d[-1] - b.d_max, abs=1e-9
            )

    def test_initial_velocity_outside_band_rejected(self):
        with pytest.raises(ValueError, match="infeasible by construction"):
            assemble_constraints(small_problem(v0=0.5))

    def test_varying_bounds_evaluated_at_distances(self):
        prob = small_problem(
            n=3, v0=2.0,
            varying={"a_max": PiecewiseBound(breaks=[0.0, 2.0], values=[0.9, 0.4])},
        )
        sys0 = assemble_constraints(prob)
        sys1 = assemble_constraints(prob, distances=np.array([0.0, 2.5, 3.0]))
        i1 = sys0.labels.index("accel_upper[2]")
        assert sys0.b_ub[i1] == pytest.approx(0.9)
        assert sys1.b_ub[i1] == pytest.approx(0.4)


class TestCheckFeasibility:
    def test_zero_input_misses_quality(self):
        prob = small_problem(r=1.0)
        rep = check_feasibility(np.zeros(4), prob)
        assert not rep.feasible
        assert rep.violations["quality"] == pytest.approx(1.0)
        assert rep.r_achieved == pytest.approx(0.0)

    def test_input_bound_violation_reports_first_index(self):
        prob = small_problem(n=4, r=1e-6)
        u = np.array([0.0, 0.0, 1.5, 2.0])
        rep = check_feasibility(u, prob)
        assert not rep.feasible
        assert rep.first_violation_index["input_upper"] == 3
        assert rep.violations["input_upper"] == pytest.approx(2.0 - 0.9)

    def test_feasible_candidate_passes(self):
        prob = small_problem(n=4, r=1e-4, v0=2.0)
        u = np.full(4, 0.1)
        rep = check_feasibility(u, prob)
        assert rep.feasible
        assert rep.worst_violation == 0.0

    def test_agrees_with_matrix_rows(self):
        rng = np.random.default_rng(1)
        for trial in range(20):
            n = int(rng.integers(2, 7))
            prob = small_problem(
                n=n, p=float(rng.uniform(0.1, 0.95)), ts=float(rng.uniform(0.2, 1.0)),
                d_max=30.0,
            )
            u = rng.uniform(-1.0, 1.2, size=n)
            sys = assemble_constraints(prob)
            res = sys.residuals(u)
            rep = check_feasibility(u, prob)
            for fam in ("accel_upper", "accel_lower", "vel_upper", "vel_lower",
                        "input_upper", "input_lower"):
                rows = [i for i, lab in enumerate(sys.labels) if lab.startswith(fam)]
                worst = max(0.0, float(np.max(res[rows])))
                assert rep.violations[fam] == pytest.approx(worst, abs=1e-9)
            i_d = sys.labels.index("distance")
            assert rep.violations["distance"] == pytest.approx(
                max(0.0, res[i_d]), abs=1e-9
            )

    def test_varying_bounds_use_own_distances(self):
        # Tightened far-field ceiling binds only once the candidate travels.
        prob = small_problem(
            n=6, v0=2.0, r=1e-6,
            varying={"v_max": PiecewiseBound(breaks=[0.0, 5.0], values=[4.0, 2.1])},
        )
        u = np.full(6, 0.3)
        rep = check_feasibility(u, prob)
        prof = make_profile(u, prob.actuator, prob.grid, v0=2.0)
        assert prof.d[-1] > 5.0
        expected = max(0.0, float(np.max(prof.v - np.where(prof.d >= 5.0, 2.1, 4.0))))
        assert rep.violations["vel_upper"] == pytest.approx(expected, abs=1e-12)


class TestLiftProblem:
    def test_dimensions(self):
        lp = lift_problem(small_problem(n=4))
        assert lp.dim == 4 * 5 // 2 + 4
        assert all(row.coeffs.shape == (lp.dim,) for row in lp.rows)

    def test_scalar_velocity_row(self):
        prob = small_problem(n=1, ts=0.5, p=1e-9, v0=0.0, v_min=-1.0, v_max=3.0)
        lp = lift_problem(prob)
        row = next(r for r in lp.rows if r.label == "vel_product[1]")
        # T_s^2 U11 - (v_min + v_max) T_s u1 + v_min v_max <= 0 at F = I.
        np.testing.assert_allclose(row.coeffs, [0.25, -(-1.0 + 3.0) * 0.5], atol=1e-8)
        assert row.rhs == pytest.approx(-(-1.0) * 3.0, abs=1e-12)

    def test_feasible_point_satisfies_lift(self):
        rng = np.random.default_rng(2)
        prob = small_problem(n=3, r=1e-6, d_max=40.0)
        lp = lift_problem(prob)
        hits = 0
        for _ in range(100):
            u = rng.uniform(-0.8, 1.1, size=3)
            rep = check_feasibility(u, prob)
            z = lift_point(u)
            lifted_ok = all(row.coeffs @ z <= row.rhs + 1e-9 for row in lp.rows)
            quality_ok = lp.quality_weights @ z >= (lp.r_designed or 0.0) - 1e-9
            original_ok = rep.feasible
            assert original_ok == (lifted_ok and quality_ok)
            hits += original_ok
        assert 0 < hits < 100

    def test_violation_maps_to_lifted_row(self):
        prob = small_problem(n=3, r=1e-6, v0=3.8)
        lp = lift_problem(prob)
        u = np.array([0.9, 0.9, 0.9])
        rep = check_feasibility(u, prob)
        assert rep.violations["vel_upper"] > 0
        z = lift_point(u)
        worst = max(row.coeffs @ z - row.rhs for row in lp.rows
                    if row.label.startswith("vel_product"))
        assert worst > 0

    def test_quality_trace_equals_energy(self):
        rng = np.random.default_rng(3)
        prob = small_problem(n=5)
        lp = lift_problem(prob)
        sys = assemble_constraints(prob)
        for _ in range(10):
            u = rng.normal(size=5)
            assert lp.quality_weights @ lift_point(u) == pytest.approx(
                u @ sys.quality @ u, rel=1e-12
            )

    def test_min_distance_cost_matches_distance(self):
        prob = small_problem(n=4, v0=2.0, objective="min_distance")
        lp = lift_problem(prob)
        rng = np.random.default_rng(4)
        u = rng.uniform(-0.3, 0.5, size=4)
        prof = make_profile(u, prob.actuator, prob.grid, v0=2.0)
        const = 2.0 * 4 * prob.grid.ts
        assert lp.cost @ lift_point(u) + const == pytest.approx(prof.d[-1], rel=1e-12)

    def test_varying_bounds_unsupported(self):
        prob = small_problem(
            varying={"a_max": PiecewiseBound(breaks=[0.0], values=[0.9])}
        )
        with pytest.raises(ValueError, match="constant bounds"):
            lift_problem(prob)

    def test_psd_block_roundtrip(self):
        lp = lift_problem(small_problem(n=3))
        u = np.array([0.1, -0.2, 0.3])
        block = lp.psd_block(lift_point(u))
        np.testing.assert_allclose(block[:3, :3], np.outer(u, u), atol=1e-15)
        np.testing.assert_allclose(block[:3, 3], u)
        assert block[3, 3] == 1.0


class TestVerifyRankOne:
    def test_exact_lift_is_rank_one(self):
        u = np.array([1.0, -2.0, 0.5])
        rep = verify_rank_one(np.outer(u, u), u, tol=1e-8)
        assert rep.is_rank_one
        np.testing.assert_allclose(rep.u_recovered, u, atol=1e-9)

    def test_inflated_diagonal_is_not_rank_one(self):
        u = np.array([1.0, -2.0, 0.5])
        rep = verify_rank_one(np.outer(u, u) + np.eye(3), u, tol=1e-8)
        assert not rep.is_rank_one

    def test_nuclear_norm_of_exact_lift(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            u = rng.normal(size=4)
            rep = verify_rank_one(np.outer(u, u), u)
            assert rep.nuclear_norm == pytest.approx(1.0 + float(u @ u), rel=1e-10)

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            verify_rank_one(np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([1.0, 0.0]))
