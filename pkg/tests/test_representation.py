"""Bound-state matrix representation: basis, coefficients, generator
matrices, interior commutators, Casimirs, heisenberg evolution."""

import json
import math

import numpy as np
import pytest

from so42hydrogen import representation as rp
from so42hydrogen.algebra import structure_constants_array
from so42hydrogen.errors import SymmetryError
from so42hydrogen.generators import INDEX, NAMES


class TestBasis:
    def test_minimal_basis(self):
        states, index = rp.build_basis(1)
        assert states == [rp.BasisState(1, 0, 0)]
        assert index[(1, 0, 0)] == 0

    @pytest.mark.parametrize("n_max,dim", [(1, 1), (2, 5), (4, 30), (6, 91)])
    def test_dimension_formula(self, n_max, dim):
        states, _ = rp.build_basis(n_max)
        assert len(states) == dim
        assert rp.basis_dimension(n_max) == dim

    def test_shell_multiplicity_is_n_squared(self):
        states, _ = rp.build_basis(5)
        for n in range(1, 6):
            assert sum(1 for s in states if s.n == n) == n * n

    def test_lexicographic_order(self):
        states, index = rp.build_basis(3)
        assert states == sorted(states)
        assert all(index[tuple(s)] == i for i, s in enumerate(states))


class TestLadderCoefficients:
    def test_alpha_example(self):
        assert rp.ladder_coefficient("alpha", l=2, m=1) == pytest.approx(math.sqrt(3))

    def test_c_example(self):
        assert rp.ladder_coefficient("c", n=2, l=1) == pytest.approx(1.0)

    def test_u_example(self):
        assert rp.ladder_coefficient("u", n=2, l=1) == pytest.approx(math.sqrt(2) / 2)

    def test_v_value(self):
        # v(n=3, l=1) = 0.5 * sqrt(2*3/3) = sqrt(2)/2... direct formula
        assert rp.ladder_coefficient("v", n=3, l=1) == pytest.approx(
            0.5 * math.sqrt((3 - 1) * (3 - 1 + 1) / 3.0)
        )

    def test_alpha_vanishes_at_stretch(self):
        assert rp.ladder_coefficient("alpha", l=2, m=2) == 0.0
        assert rp.ladder_coefficient("alpha", l=2, m=-2) == 0.0

    def test_out_of_range_raises(self):
        with pytest.raises(IndexError):
            rp.ladder_coefficient("alpha", l=1, m=2)
        with pytest.raises(IndexError):
            rp.ladder_coefficient("c", n=2, l=2)
        with pytest.raises(IndexError):
            rp.ladder_coefficient("u", n=2, l=0)
        with pytest.raises(KeyError):
            rp.ladder_coefficient("w", n=2, l=1)


class TestDerivedCoefficients:
    def test_rot_example(self):
        assert rp.omega_rot(1, 0) == pytest.approx(math.sqrt(2))

    def test_solver_matches_closed_forms(self):
        tables = rp.derive_ladder_coefficients(5)
        for (l, m), val in tables.rot.items():
            assert val == pytest.approx(rp.omega_rot(l, m), abs=1e-12)
        for (l, m), val in tables.beta.items():
            assert val == pytest.approx(rp.beta_mix(l, m), abs=1e-12)
        for (l, m), val in tables.gamma.items():
            assert val == pytest.approx(rp.gamma_mix(l, m), abs=1e-12)
        for (n, l), val in tables.rad.items():
            assert val == pytest.approx(rp.omega_rad(n, l), abs=1e-12)

    def test_solver_residual_tiny(self):
        tables = rp.derive_ladder_coefficients(4)
        assert tables.residual < 1e-12

    def test_index_negation_symmetry_was_detected(self):
        tables = rp.derive_ladder_coefficients(4)
        assert tables.index_negation_rot
        assert tables.index_negation_rad

    def test_coefficients_nonnegative(self):
        tables = rp.derive_ladder_coefficients(4)
        for table in (tables.rot, tables.beta, tables.gamma, tables.rad):
            assert all(v >= 0 for v in table.values())

    def test_too_small_cutoff_rejected(self):
        with pytest.raises(ValueError):
            rp.derive_ladder_coefficients(2)


class TestGeneratorMatrices:
    def test_l3_diagonal_at_cutoff_two(self):
        # states (1,0,0),(2,0,0),(2,1,-1),(2,1,0),(2,1,1) carry
        # m = 0, 0, -1, 0, 1
        M = rp.build_generator_matrix("L3", 2)
        assert np.allclose(M, np.diag([0.0, 0.0, -1.0, 0.0, 1.0]))

    def test_d_diagonal_at_cutoff_two(self):
        M = rp.build_generator_matrix("D", 2)
        assert np.allclose(M, np.diag([1.0, 2.0, 2.0, 2.0, 2.0]))

    def test_every_generator_hermitian(self):
        rep = rp.build_rep(5)
        for name in NAMES:
            assert rp.symmetry_tag(rep.generator(name)) == "Hermitian"

    def test_d_spectrum_multiplicities(self):
        rep = rp.build_rep(4)
        evals = np.linalg.eigvalsh(rep.generator("D"))
        vals, counts = np.unique(np.round(evals).astype(int), return_counts=True)
        assert list(vals) == [1, 2, 3, 4]
        assert list(counts) == [1, 4, 9, 16]

    def test_l3_spectrum_symmetric(self):
        rep = rp.build_rep(4)
        evals = np.sort(np.diag(rep.generator("L3")).real)
        assert np.allclose(evals, -evals[::-1])

    def test_primed_generators_skew(self):
        rep = rp.build_rep(3)
        for name in ("L1", "B2", "S", "D"):
            X = rep.primed(name)
            assert rp.symmetry_tag(X) == "SkewHermitian"


class TestHamiltonian:
    def test_energies(self):
        H = rp.build_hamiltonian(3)
        d = np.diag(H).real
        assert d[0] == pytest.approx(-0.5)
        assert d[1] == pytest.approx(-0.125)
        states, _ = rp.build_basis(3)
        for i, s in enumerate(states):
            assert d[i] == pytest.approx(-0.5 / s.n**2)

    def test_commutes_with_l3_and_d(self):
        rep = rp.build_rep(4)
        H = rep.hamiltonian
        for name in ("L3", "D"):
            G = rep.generator(name)
            assert np.abs(H @ G - G @ H).max() == 0.0


class TestCommutators:
    def test_full_suite_interior(self):
        rep = rp.build_rep(5)
        rpt = rp.check_commutators(rep, tol=1e-9)
        assert rpt.ok
        assert rpt.max_residual < 1e-12

    def test_angular_block_exact_without_projection(self):
        # L matrices are block-diagonal in n: no truncation damage
        rep = rp.build_rep(4)
        f = structure_constants_array()
        for a in range(3):
            for b in range(3):
                A, B = rep.generators[a], rep.generators[b]
                comm = A @ B - B @ A
                expect = 1j * sum(
                    f[a, b, c] * rep.generators[c] for c in range(15)
                )
                assert np.abs(comm - expect).max() < 1e-12

    def test_c_commutes_with_l2(self):
        rep = rp.build_rep(4)
        C, L2 = rep.generator("C"), rep.generator("L2")
        P = rep.interior_mask
        resid = (C @ L2 - L2 @ C) * np.outer(P, P)
        assert np.abs(resid).max() < 1e-13


class TestRadialLadders:
    def test_t_plus_minus_conjugate(self):
        rep = rp.build_rep(4)
        S, C = rep.generator("S"), rep.generator("C")
        Tp = C + 1j * S
        Tm = C - 1j * S
        assert np.abs(Tp.conj().T - Tm).max() == 0.0

    def test_d_ladder_relations_interior(self):
        rep = rp.build_rep(5)
        S, C, D = (rep.generator(k) for k in ("S", "C", "D"))
        Tp = C + 1j * S
        Tm = C - 1j * S
        P = np.outer(rep.interior_mask, rep.interior_mask)
        assert np.abs((D @ Tp - Tp @ D - Tp) * P).max() < 1e-12
        assert np.abs((D @ Tm - Tm @ D + Tm) * P).max() < 1e-12
        assert np.abs((Tp @ Tm - Tm @ Tp + 2 * D) * P).max() < 1e-12

    def test_t_plus_annihilates_no_inner_state(self):
        rep = rp.build_rep(4)
        S, C = rep.generator("S"), rep.generator("C")
        Tp = C + 1j * S
        for i, s in enumerate(rep.states):
            if s.n < rep.n_max:
                e = np.zeros(rep.dim)
                e[i] = 1.0
                assert np.linalg.norm(Tp @ e) > 0.5


class TestCasimirs:
    def test_report_ok(self):
        rep = rp.build_rep(5)
        out = rp.casimir_check(rep)
        assert out["ok"]
        assert out["LA_residual"] < 1e-12
        assert out["quadratic_residual"] < 1e-12

    def test_quadratic_value_on_2p_state(self):
        rep = rp.build_rep(4)
        g = rep.generators
        quad = sum(g[i] @ g[i] for i in range(6))  # L^2 + A^2
        e = np.zeros(rep.dim)
        e[rep.index[(2, 1, 0)]] = 1.0
        out = quad @ e
        assert np.allclose(out, 3.0 * e, atol=1e-12)  # n^2 - 1 = 3

    def test_l_squared_kills_ground_state(self):
        rep = rp.build_rep(3)
        L2 = sum(rep.generators[i] @ rep.generators[i] for i in range(3))
        e = np.zeros(rep.dim)
        e[rep.index[(1, 0, 0)]] = 1.0
        assert np.linalg.norm(L2 @ e) < 1e-14


class TestHeisenberg:
    def test_l3_unchanged(self):
        rep = rp.build_rep(4)
        G = rp.heisenberg_generator(rep, "L3", 2.7)
        assert np.abs(G - rep.generator("L3")).max() < 1e-14

    def test_t_zero_identity(self):
        rep = rp.build_rep(4)
        for name in ("B1", "S"):
            assert np.abs(
                rp.heisenberg_generator(rep, name, 0.0) - rep.generator(name)
            ).max() == 0.0

    def test_fd_derivative_matches_commutator(self):
        rep = rp.build_rep(4)
        H = rep.hamiltonian
        h = 1e-5
        for name in ("B2", "G1", "S", "C"):
            Gp = rp.heisenberg_generator(rep, name, 0.3 + h)
            Gm = rp.heisenberg_generator(rep, name, 0.3 - h)
            G0 = rp.heisenberg_generator(rep, name, 0.3)
            fd = (Gp - Gm) / (2 * h)
            assert np.abs(fd - (-1j) * (H @ G0 - G0 @ H)).max() < 1e-6

    def test_preserves_hermiticity_and_spectrum(self):
        rep = rp.build_rep(4)
        G0 = rep.generator("B3")
        Gt = rp.heisenberg_generator(rep, "B3", 1.9)
        assert rp.symmetry_tag(Gt) == "Hermitian"
        assert np.allclose(
            np.linalg.eigvalsh(Gt), np.linalg.eigvalsh(G0), atol=1e-10
        )


class TestSymmetryTags:
    def test_tags(self):
        eye = np.eye(3)
        assert rp.symmetry_tag(eye) == "Unitary"  # unitary wins when both hold
        herm = np.array([[1.0, 2j], [-2j, 0.0]])
        assert rp.symmetry_tag(herm) == "Hermitian"
        assert rp.symmetry_tag(1j * herm) == "SkewHermitian"
        assert rp.symmetry_tag(np.array([[1.0, 1.0], [0.0, 1.0]])) is None

    def test_assert_hermitian_raises(self):
        with pytest.raises(SymmetryError):
            rp.assert_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestExport:
    def test_json_roundtrip(self, tmp_path):
        rep = rp.build_rep(3)
        rp.export_matrices(rep, tmp_path)
        basis = json.loads((tmp_path / "basis.json").read_text())
        assert len(basis["states"]) == rep.dim
        doc = json.loads((tmp_path / "A3.json").read_text())
        M = np.zeros((rep.dim, rep.dim), dtype=complex)
        for row, col, re, im in doc["entries"]:
            M[row, col] = re + 1j * im
        assert np.abs(M - rep.generator("A3")).max() < 1e-15

    def test_csv_export(self, tmp_path):
        rep = rp.build_rep(3)
        rp.export_matrices(rep, tmp_path, fmt="csv")
        text = (tmp_path / "D.csv").read_text().strip().splitlines()
        assert text[0].startswith("row")
        assert len(text) == 1 + rep.dim  # D is diagonal


def test_generators_read_only():
    rep = rp.build_rep(3)
    with pytest.raises(ValueError):
        rep.generators[0][0, 0] = 99.0
