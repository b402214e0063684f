import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaborflow.flow import (
    BumpSpec,
    FlowStepError,
    NearSurfaceGradient,
    TruncatedHamiltonian,
    chi,
    flow_trajectory,
    grad_chi,
    integrate_flow,
    truncated_hamiltonian_value,
    verify_truncated_flow,
    write_trajectory_csv,
)
from gaborflow.lattice import Ellipsoid
from gaborflow.symplectic import QuadraticHamiltonian, flow_matrix


@pytest.fixture
def circle_bump(unit_circle):
    return BumpSpec(unit_circle, 0.3)


@pytest.fixture
def circle_truncated(circle_bump):
    return TruncatedHamiltonian(circle_bump)


class TestChi:
    def test_enclosed_is_one(self, circle_bump):
        assert chi([0.1, 0.0], circle_bump) == 1.0
        assert chi([1.0, 0.0], circle_bump) == 1.0  # on the surface

    def test_outside_support_is_zero(self, circle_bump):
        assert chi([3.0, 0.0], circle_bump) == 0.0
        assert chi([0.0, -1.31], circle_bump) == 0.0

    def test_midpoint_by_symmetry(self, circle_bump):
        # s = 3 eps/4 sits at the symmetric center of the transition
        assert chi([1.225, 0.0], circle_bump) == pytest.approx(0.5, abs=1e-12)

    def test_monotone_in_radius(self, circle_bump):
        radii = np.linspace(1.0, 1.4, 81)
        vals = [chi([r, 0.0], circle_bump) for r in radii]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    @given(angle=st.floats(0, 2 * math.pi), r1=st.floats(1.0, 1.5), r2=st.floats(1.0, 1.5))
    @settings(max_examples=20)
    def test_monotone_along_rays(self, angle, r1, r2):
        bump = BumpSpec(Ellipsoid(QuadraticHamiltonian(np.eye(2)), 0.5), 0.3)
        lo, hi = sorted([r1, r2])
        u = np.array([math.cos(angle), math.sin(angle)])
        assert chi(lo * u, bump) >= chi(hi * u, bump)


class TestGradChi:
    def test_zero_on_plateaus(self, circle_bump):
        assert np.array_equal(grad_chi([0.3, 0.2], circle_bump), [0.0, 0.0])
        assert np.array_equal(grad_chi([1.0, 1.0], circle_bump), [0.0, 0.0])

    def test_matches_finite_differences(self, circle_bump):
        rng = np.random.default_rng(5)
        step = 1e-6
        for _ in range(12):
            r = rng.uniform(1.16, 1.29)
            ang = rng.uniform(0, 2 * math.pi)
            z = r * np.array([math.cos(ang), math.sin(ang)])
            analytic = grad_chi(z, circle_bump)
            fd = np.zeros(2)
            for i in range(2):
                zp, zm = z.copy(), z.copy()
                zp[i] += step
                zm[i] -= step
                fd[i] = (chi(zp, circle_bump) - chi(zm, circle_bump)) / (2 * step)
            assert np.max(np.abs(analytic - fd)) <= 1e-5

    def test_near_surface_flagged(self, circle_bump):
        z = [math.sqrt(1.0 + 1e-13), 0.0]  # H - E ~ 5e-14, outside branch
        with pytest.warns(NearSurfaceGradient):
            out = grad_chi(z, circle_bump)
        assert np.array_equal(out, [0.0, 0.0])


class TestTruncatedValue:
    def test_interior_value(self, circle_truncated):
        assert truncated_hamiltonian_value([0.1, 0.0], circle_truncated) == pytest.approx(
            0.005, abs=1e-15
        )

    def test_outside_support(self, circle_truncated):
        assert truncated_hamiltonian_value([3.0, 0.0], circle_truncated) == 0.0

    def test_mid_shell_cross_check(self, circle_truncated):
        z = [1.22, 0.05]
        c = chi(z, circle_truncated.bump)
        assert 0.0 < c < 1.0
        expect = circle_truncated.ell.H.value(z) * c
        assert truncated_hamiltonian_value(z, circle_truncated) == pytest.approx(expect)


class TestIntegrateFlow:
    def test_exterior_start_fixed_bitwise(self, circle_truncated):
        z0 = np.array([3.0, 3.0])
        out = integrate_flow(z0, circle_truncated, 1.0, 1e-3)
        assert np.array_equal(out.coords, z0)

    def test_interior_matches_rotation(self, circle_truncated):
        out = integrate_flow([0.5, 0.0], circle_truncated, math.pi / 2.0, 1e-3)
        assert np.max(np.abs(out.coords - [0.0, -0.5])) <= 1e-6

    def test_surface_orbit_conserves_H(self, circle_truncated, unit_circle):
        out = integrate_flow([1.0, 0.0], circle_truncated, 2.0, 1e-3)
        assert abs(unit_circle.value(out.coords) - unit_circle.E) <= 1e-6 * unit_circle.E

    def test_zero_time(self, circle_truncated):
        z0 = np.array([0.3, 0.4])
        assert np.array_equal(integrate_flow(z0, circle_truncated, 0.0).coords, z0)

    def test_step_underflow(self, circle_truncated):
        with pytest.raises(FlowStepError):
            integrate_flow([0.5, 0.0], circle_truncated, 1e-13, 1e-3)

    def test_support_fixes_random_exterior_points(self, circle_truncated):
        rng = np.random.default_rng(17)
        count = 0
        while count < 1000:
            z = rng.uniform(-4.0, 4.0, size=2)
            if chi(z, circle_truncated.bump) != 0.0:
                continue
            out = integrate_flow(z, circle_truncated, 0.5, 1e-2)
            assert np.array_equal(out.coords, z)
            count += 1

    def test_energy_conservation_along_trajectories(self, circle_truncated):
        # starts away from the transition endpoints, including mid-shell
        for z0, t in [([0.4, 0.1], 2 * math.pi), ([1.02, 0.0], 2.0), ([1.225, 0.0], 1.0)]:
            h0 = truncated_hamiltonian_value(z0, circle_truncated)
            out = integrate_flow(z0, circle_truncated, t, 1e-3)
            h1 = truncated_hamiltonian_value(out.coords, circle_truncated)
            assert abs(h1 - h0) <= 1e-6 * (1.0 + abs(h0))

    def test_interior_linearity_full_period(self, circle_truncated, unit_circle):
        z0 = np.array([0.45, -0.2])
        out = integrate_flow(z0, circle_truncated, 2 * math.pi, 1e-3)
        ref = flow_matrix(unit_circle.H, 2 * math.pi).S @ z0
        assert np.max(np.abs(out.coords - ref)) <= 1e-6

    def test_anisotropic_interior_linearity(self):
        ell = Ellipsoid(QuadraticHamiltonian(np.diag([4.0, 1.0])), 0.5)
        th = TruncatedHamiltonian(BumpSpec(ell, 0.2))
        z0 = np.array([0.2, 0.3])
        out = integrate_flow(z0, th, 1.5, 1e-3)
        ref = flow_matrix(ell.H, 1.5).S @ z0
        assert np.max(np.abs(out.coords - ref)) <= 1e-6


class TestVerifyTruncatedFlow:
    def test_zero_time_all_zero(self, z2_lattice, circle_truncated):
        rep = verify_truncated_flow(z2_lattice, circle_truncated, 0.0)
        assert rep.max_dev_moved == 0.0
        assert rep.max_dev_fixed == 0.0

    def test_quarter_turn_deviations(self, z2_lattice, circle_truncated):
        rep = verify_truncated_flow(z2_lattice, circle_truncated, math.pi / 2.0)
        assert rep.moved_count == 5
        assert rep.fixed_count == 44
        assert rep.max_dev_moved <= 1e-6
        assert rep.max_dev_fixed == 0.0

    def test_oversized_shell_rejected(self, z2_lattice, unit_circle):
        th = TruncatedHamiltonian(BumpSpec(unit_circle, 0.42))
        with pytest.raises(ValueError, match="shell"):
            verify_truncated_flow(z2_lattice, th, 0.5)
        # the offending diagonal neighbours are named
        try:
            verify_truncated_flow(z2_lattice, th, 0.5)
        except ValueError as exc:
            assert "[1.0, 1.0]" in str(exc) or "[-1.0, -1.0]" in str(exc)


class TestTrajectory:
    def test_exterior_rows_constant(self, circle_truncated, tmp_path):
        times, pts, hvals = flow_trajectory([3.0, 3.0], circle_truncated, 0.05, 1e-2)
        assert np.all(pts == pts[0])
        assert np.all(hvals == 0.0)
        out = tmp_path / "traj.csv"
        write_trajectory_csv(out, times, pts, hvals)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,x1,p1,H_eps"
        assert len(lines) == times.size + 1

    def test_records_every_step(self, circle_truncated):
        times, pts, hvals = flow_trajectory([0.5, 0.0], circle_truncated, 0.02, 1e-3)
        assert times.size == 21
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(0.02)
