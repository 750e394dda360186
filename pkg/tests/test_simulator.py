"""Propagator and pulse-schedule checks on the truncated model."""

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from so42hydrogen import controllability as ct
from so42hydrogen import simulator as sim
from so42hydrogen.errors import SymmetryError


@pytest.fixture(scope="module")
def full4():
    return ct.full_system(4)


def basis_state(rep, n, l, m):
    psi = np.zeros(rep.dim, dtype=complex)
    psi[rep.index[(n, l, m)]] = 1.0
    return psi


class TestPulseSchedule:
    def test_from_segments_dict(self):
        sched = sim.PulseSchedule.from_segments(
            [(0.5, {"A3": 0.1, "C": -0.2}), (1.5, {})]
        )
        assert sched.n_segments == 2
        assert sched.total_duration == 2.0
        assert sched.amplitudes[0, 5] == 0.1   # A3
        assert sched.amplitudes[0, 13] == -0.2  # C
        assert np.all(sched.amplitudes[1] == 0.0)

    def test_from_segments_vector(self):
        vec = np.linspace(-1, 1, 15)
        sched = sim.PulseSchedule.from_segments([(0.3, vec)])
        assert np.allclose(sched.amplitudes[0], vec)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            sim.PulseSchedule(np.array([1.0]), np.zeros((1, 14)))
        with pytest.raises(ValueError):
            sim.PulseSchedule(np.array([1.0, 1.0]), np.zeros((1, 15)))

    def test_durations_must_be_positive(self):
        with pytest.raises(ValueError):
            sim.PulseSchedule(np.array([0.0]), np.zeros((1, 15)))
        with pytest.raises(ValueError):
            sim.PulseSchedule(np.array([-0.5]), np.zeros((1, 15)))

    def test_amplitudes_must_be_finite(self):
        amps = np.zeros((1, 15))
        amps[0, 3] = np.nan
        with pytest.raises(ValueError):
            sim.PulseSchedule(np.array([1.0]), amps)

    def test_json_roundtrip(self, tmp_path):
        sched = sim.PulseSchedule.from_segments(
            [(0.5, {"B3": 0.7}), (0.25, {"S": -0.3, "D": 0.1})]
        )
        path = tmp_path / "sched.json"
        sched.to_json(path)
        back = sim.PulseSchedule.from_json(path)
        assert np.array_equal(back.durations, sched.durations)
        assert np.array_equal(back.amplitudes, sched.amplitudes)

    def test_json_drops_zero_amplitudes(self, tmp_path):
        import json

        sched = sim.PulseSchedule.from_segments([(1.0, {"G2": 0.4})])
        path = tmp_path / "sched.json"
        sched.to_json(path)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        assert doc["segments"][0]["u"] == {"G2": 0.4}


class TestPrimitives:
    def test_rotation_exponential(self):
        theta = 0.37
        K = theta * np.array([[0.0, 1.0], [-1.0, 0.0]])
        U = sim.matrix_exponential(K)
        expected = np.array(
            [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
        )
        assert np.abs(U - expected).max() < 1e-12

    def test_rejects_non_skew_input(self):
        with pytest.raises(SymmetryError):
            sim.matrix_exponential(np.eye(2))

    def test_fidelity_trivia(self):
        psi = np.array([0.6, 0.8j])
        assert sim.fidelity(psi, psi) == pytest.approx(1.0)
        assert sim.fidelity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    @given(st.floats(0.0, 6.3))
    @settings(max_examples=25, deadline=None)
    def test_fidelity_ignores_global_phase(self, alpha):
        psi = np.array([0.6, 0.8j])
        target = np.array([1.0, 0.0], dtype=complex)
        shifted = np.exp(1j * alpha) * psi
        assert sim.fidelity(shifted, target) == pytest.approx(
            sim.fidelity(psi, target), abs=1e-12
        )

    def test_expectation_values(self, full4):
        rep = full4.rep
        g = basis_state(rep, 1, 0, 0)
        assert sim.observable_expectation(g, rep.hamiltonian) == pytest.approx(
            -0.5, abs=1e-12
        )
        e211 = basis_state(rep, 2, 1, 1)
        assert sim.observable_expectation(
            e211, rep.generator("L3")
        ) == pytest.approx(1.0, abs=1e-12)
        assert sim.observable_expectation(
            e211, rep.generator("D")
        ) == pytest.approx(2.0, abs=1e-12)

    def test_expectation_rejects_non_hermitian(self):
        with pytest.raises(SymmetryError):
            sim.observable_expectation(
                np.array([1.0, 0.0]), np.array([[0.0, 1.0], [0.0, 0.0]])
            )


class TestPropagation:
    def test_input_validation(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments([(1.0, {})])
        with pytest.raises(ValueError):
            sim.propagate(full4, sched, g[:-1])
        with pytest.raises(ValueError):
            sim.propagate(full4, sched, 2.0 * g)
        with pytest.raises(ValueError):
            sim.propagate(full4, sched, g, substeps=0)

    def test_free_evolution_phase(self, full4):
        # zero amplitudes: an eigenstate only picks up exp(-i E_n t)
        rep = full4.rep
        psi = basis_state(rep, 2, 1, 0)
        t = 3.7
        sched = sim.PulseSchedule.from_segments([(t, {})])
        traj = sim.propagate(full4, sched, psi)
        expected = np.exp(-1j * (-0.125) * t) * psi
        assert np.abs(traj.final_state - expected).max() < 1e-9
        assert traj.times[0] == 0.0
        assert np.array_equal(traj.states[0], psi)

    def test_norm_preserved_over_1000_segments(self, full4):
        rng = np.random.default_rng(0)
        sched = sim.PulseSchedule(
            np.full(1000, 0.05), rng.normal(0.0, 0.2, (1000, 15))
        )
        g = basis_state(full4.rep, 1, 0, 0)
        traj = sim.propagate(full4, sched, g)
        assert traj.norm_defects.max() < 1e-10
        assert len(traj.times) == 1001

    def test_substeps_refine_sampling_not_result(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments(
            [(0.9, {"B3": 0.5}), (0.4, {"C": 0.3, "L2": 0.2})]
        )
        a = sim.propagate(full4, sched, g)
        b = sim.propagate(full4, sched, g, substeps=5)
        assert len(b.times) == 1 + 2 * 5
        assert np.abs(a.final_state - b.final_state).max() < 1e-12

    def test_energy_invariant_under_degeneracy_controls(self, full4):
        # L and A act inside an n-shell, D is diagonal: none of them
        # move <H>
        rep = full4.rep
        rng = np.random.default_rng(5)
        names = ["L1", "L2", "L3", "A1", "A2", "A3", "D"]
        segs = [
            (0.7, dict(zip(names, rng.normal(0.0, 0.5, len(names)))))
            for _ in range(5)
        ]
        sched = sim.PulseSchedule.from_segments(segs)
        psi = (basis_state(rep, 1, 0, 0) + basis_state(rep, 2, 1, 0)) / np.sqrt(2)
        traj = sim.propagate(full4, sched, psi, substeps=3)
        assert np.abs(traj.energy - traj.energy[0]).max() < 1e-10

    def test_shell_ladder_control_changes_energy(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments([(1.0, {"C": 1.0})])
        traj = sim.propagate(full4, sched, g)
        assert abs(traj.energy[-1] - traj.energy[0]) > 1e-3

    def test_truncation_flag(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        hard = sim.PulseSchedule.from_segments([(1.0, {"C": 1.0})])
        traj = sim.propagate(full4, hard, g)
        assert traj.truncation_unreliable
        assert traj.boundary_population.max() > sim.LEAK_FLAG_LEVEL
        gentle = sim.PulseSchedule.from_segments([(1.0, {"L3": 0.8})])
        traj = sim.propagate(full4, gentle, g)
        assert not traj.truncation_unreliable
        assert traj.boundary_population.max() == 0.0

    def test_shell_populations_sum_to_one(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments([(0.8, {"B2": 0.6, "S": 0.1})])
        traj = sim.propagate(full4, sched, g, substeps=4)
        sums = traj.shell_populations.sum(axis=1)
        assert np.abs(sums - 1.0).max() < 1e-12

    def test_segment_concatenation(self, full4):
        # independent reconstruction: rotating-frame product of the two
        # segment exponentials, then drift phases at the final time
        rep = full4.rep
        g = basis_state(rep, 1, 0, 0)
        prim = [-1j * G for G in rep.generators]
        sched = sim.PulseSchedule.from_segments(
            [(0.7, {"B3": 0.4}), (0.5, {"G1": 0.3, "S": -0.2})]
        )
        Ua = sim.matrix_exponential(
            0.7 * np.tensordot(sched.amplitudes[0], prim, axes=1)
        )
        Ub = sim.matrix_exponential(
            0.5 * np.tensordot(sched.amplitudes[1], prim, axes=1)
        )
        energies = np.real(np.diag(rep.hamiltonian))
        expected = np.exp(-1j * energies * 1.2) * (Ub @ Ua @ g)
        traj = sim.propagate(full4, sched, g)
        assert np.abs(traj.final_state - expected).max() < 1e-12


class TestFrameConsistency:
    def test_sliced_integrator_converges_first_order(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments(
            [(0.8, {"B3": 0.4, "S": 0.2}), (0.6, {"G1": 0.3, "C": 0.25})]
        )
        ref = sim.propagate(full4, sched, g).final_state
        errs = []
        for slices in (16, 32, 64, 128):
            approx = sim.labframe_sliced_state(full4, sched, g, slices=slices)
            errs.append(np.linalg.norm(approx - ref))
        for a, b in zip(errs, errs[1:]):
            assert 1.7 < a / b < 2.3
        assert errs[-1] < 1e-3


class TestTrajectoryCsv:
    def test_roundtrip(self, full4, tmp_path):
        g = basis_state(full4.rep, 1, 0, 0)
        sched = sim.PulseSchedule.from_segments([(0.6, {"C": 0.5})])
        traj = sim.propagate(full4, sched, g, substeps=4)
        path = tmp_path / "traj.csv"
        sim.trajectory_to_csv(traj, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == (
            ["time", "pop_n1", "pop_n2", "pop_n3", "pop_n4",
             "energy", "l3", "d", "norm_defect"]
        )
        assert len(rows) == 1 + len(traj.times)
        parsed = np.array([[float(x) for x in row] for row in rows[1:]])
        assert np.abs(parsed[:, 0] - traj.times).max() < 1e-10
        assert np.abs(parsed[-1, 5] - traj.energy[-1]) < 1e-10


class TestOptimizeEdges:
    def test_trivial_target_returns_zero_schedule(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        sched, fid = sim.optimize_pulse(full4, g, g)
        assert fid == pytest.approx(1.0)
        assert np.all(sched.amplitudes == 0.0)
        assert sched.n_segments == 20
        assert sched.total_duration == pytest.approx(20.0)

    def test_input_validation(self, full4):
        g = basis_state(full4.rep, 1, 0, 0)
        e = basis_state(full4.rep, 2, 1, 0)
        with pytest.raises(ValueError):
            sim.optimize_pulse(full4, g[:-1], e[:-1])
        with pytest.raises(ValueError):
            sim.optimize_pulse(full4, 2.0 * g, e)
        with pytest.raises(ValueError):
            sim.optimize_pulse(full4, g, e, n_segments=0)

    def test_empty_control_set_rejected(self):
        drift = ct.drift_only_system(3)
        rep = drift.rep
        g = basis_state(rep, 1, 0, 0)
        e = basis_state(rep, 2, 1, 0)
        with pytest.raises(ValueError):
            sim.optimize_pulse(drift, g, e)
