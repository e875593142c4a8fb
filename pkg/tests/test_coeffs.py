import numpy as np
import pytest

from marangoni.coeffs import (
    CriticalSetup,
    K0_sign_change_on_curve,
    beta_of_g,
    beta_root_of_N,
    conservation_polynomial,
    hex_coefficients,
    hex_projected_residual_fit,
    modulation_scaling_check,
    projected_residual_fit,
    square_coefficients,
)
from marangoni.coeffs import _corrections, _neg, K1, K2, K3
from marangoni.errors import DomainError, RegimeError
from marangoni.lattice import HEXAGONAL
from marangoni.linear import FluidParams, symbol_matrix

G12 = 12.0
B12 = beta_of_g(12.0)


@pytest.fixture(scope="module")
def sq12():
    return square_coefficients(G12, B12)


@pytest.fixture(scope="module")
def hx12():
    return hex_coefficients(G12, B12)


class TestBetaCurve:
    def test_value_at_12(self):
        assert beta_of_g(12.0) == pytest.approx(0.1865184573, abs=1e-8)

    def test_domain(self):
        with pytest.raises(DomainError):
            beta_of_g(18.5)
        with pytest.raises(DomainError):
            beta_of_g(0.0)

    def test_N_vanishes_on_curve(self):
        for g in (2.0, 6.0, 16.0):
            hx, _ = hex_coefficients(g, beta_of_g(g))
            scale = max(abs(hx.K0), abs(hx.K2), abs(hx.kappa))
            assert abs(hx.N) < 1e-6 * scale

    def test_bisection_root_brackets_closed_form(self):
        for g in (6.0, 12.0):
            root = beta_root_of_N(g)
            assert root == pytest.approx(beta_of_g(g), abs=1e-6)


class TestCoefficientStructure:
    def test_K0_same_on_both_lattices(self, sq12, hx12):
        assert hx12[0].K0 == pytest.approx(sq12[0].K0, abs=1e-9)

    def test_K0_same_off_curve(self):
        sq, _ = square_coefficients(10.0, 1.0)
        hx, _ = hex_coefficients(10.0, 1.0)
        assert hx.K0 == pytest.approx(sq.K0, abs=1e-9)

    def test_rotation_symmetry_square(self):
        # recompute the self-interaction with k2 playing the role of k1
        setup = CriticalSetup(G12, B12, "square")
        nu0, corr = _corrections(setup, hexagonal=False)
        phi = setup.phi
        q2 = setup.n2_modes((K2, phi), (K2, phi))
        nu_2k2 = -setup.inv_symbol((0, 2)) @ q2
        k0_rot = (
            2.0 * setup.p_plus(setup.n2_modes(((0, 0), setup.phi_minus_0), (K2, phi))) * nu0
            + 2.0 * setup.p_plus(setup.n2_modes(((0, 2), nu_2k2), (_neg(K2), phi)))
            + 3.0 * setup.p_plus(setup.n3_modes((K2, phi), (K2, phi), (_neg(K2), phi)))
        )
        sq, _ = square_coefficients(G12, B12)
        assert k0_rot.real == pytest.approx(sq.K0, abs=1e-9)
        assert abs(k0_rot.imag) < 1e-9

    def test_corrections_solve_their_systems(self):
        setup = CriticalSetup(G12, B12, "square")
        nu0, corr = _corrections(setup, hexagonal=False)
        phi = setup.phi
        # L(2k1) nu_2k1 = -N2 term (prefactor 1 for the self pair)
        q = setup.n2_modes((K1, phi), (K1, phi))
        L = symbol_matrix(2 * setup.k_star, setup.params)
        assert np.linalg.norm(L @ corr.nu_2k1 + q) < 1e-10 * max(1, np.linalg.norm(q))
        # L(k1+k2) nu_plus = -2 N2 term
        qp = setup.n2_modes((K1, phi), (K2, phi))
        Lp = symbol_matrix(np.sqrt(2) * setup.k_star, setup.params)
        assert np.linalg.norm(Lp @ corr.nu_k1_plus_k2 + 2 * qp) < 1e-10 * max(
            1, np.linalg.norm(qp))

    def test_hex_nu3_solves_its_system(self):
        setup = CriticalSetup(G12, B12, "hexagonal")
        nu0, corr = _corrections(setup, hexagonal=True)
        q3 = setup.p_minus_star(
            setup.n2_modes((_neg(K1), setup.phi), (_neg(K2), setup.phi)))
        assert abs(setup.lambda_minus_star * corr.nu3 + 2 * q3) < 1e-10

    def test_nu0_feedback_term_vanishes_structurally(self):
        # phi_-(0) is a constant pure-temperature shift: its quadratic
        # interaction with any field is identically zero
        setup = CriticalSetup(G12, B12, "square")
        val = setup.n2_modes(((0, 0), setup.phi_minus_0), (K1, setup.phi))
        assert np.abs(val).max() < 1e-12

    def test_normalization_scaling(self):
        # K0 scales as s^2 under phi -> s phi; realized by comparing the
        # h-normalized run against a manually scaled eigenvector
        setup = CriticalSetup(G12, B12, "square")
        phi = setup.phi
        s = 2.0
        q2 = setup.n2_modes((K1, s * phi), (K1, s * phi))
        nu_2k1 = -setup.inv_symbol((2, 0)) @ q2
        term_2k1 = 2.0 * setup.n2_modes(((2, 0), nu_2k1), (_neg(K1), s * phi))
        term_cubic = 3.0 * setup.n3_modes((K1, s * phi), (K1, s * phi),
                                          (_neg(K1), s * phi))
        adj, denom = setup._proj_plus
        scaled_k0 = complex(np.vdot(adj, term_2k1 + term_cubic) / (s * denom))
        sq, _ = square_coefficients(G12, B12)
        assert scaled_k0.real == pytest.approx(s * s * sq.K0, rel=1e-9)

    def test_regime_guard(self):
        with pytest.raises(RegimeError):
            square_coefficients(12.0, 40.0)

    def test_all_imaginary_parts_small(self, sq12, hx12):
        for co in (sq12[0], hx12[0]):
            for v in (co.kappa, co.Kc, co.K0, co.nu0, co.kappa0, co.kappa1):
                assert isinstance(v, float)


class TestSignAnchors:
    def test_K0_sign_change_near_10(self):
        g_root = K0_sign_change_on_curve(8.0, 12.0)
        assert g_root == pytest.approx(10.0, abs=0.2)

    def test_K0_signs_on_curve(self):
        assert square_coefficients(12.0, beta_of_g(12.0))[0].K0 < 0
        assert square_coefficients(6.0, beta_of_g(6.0))[0].K0 > 0

    def test_K2_signs_on_curve(self):
        # negative over the range used by the hexagonal front analysis;
        # genuinely positive for small g (confirmed by the residual oracle)
        assert hex_coefficients(12.0, beta_of_g(12.0))[0].K2 < 0
        assert hex_coefficients(16.0, beta_of_g(16.0))[0].K2 < 0
        assert hex_coefficients(2.0, beta_of_g(2.0))[0].K2 == pytest.approx(
            0.454, abs=0.05)

    def test_subcritical_roll_zone(self):
        # K0 > 0 (subcritical rolls for M0 < 0) in the low-beta low-g corner
        sq, _ = square_coefficients(4.0, 0.5)
        assert sq.K0 > 0


class TestResidualOracle:
    def test_roll_and_square_fits(self):
        dM = 1e-5
        for g, beta in ((G12, B12), (10.0, 1.0)):
            sq, _ = square_coefficients(g, beta)
            c1, c3 = projected_residual_fit(g, beta, "roll", dM=dM)
            assert c1 / dM == pytest.approx(sq.kappa, rel=1e-3)
            assert c3 == pytest.approx(sq.K0, rel=1e-3)
            c1, c3 = projected_residual_fit(g, beta, "square", dM=dM)
            assert c1 / dM == pytest.approx(sq.kappa, rel=1e-3)
            assert c3 == pytest.approx(sq.K0 + sq.K1, rel=1e-3)

    def test_hexagon_fit_on_and_off_curve(self):
        dM = 1e-5
        hx, _ = hex_coefficients(G12, B12)
        c1, c2, c3 = hex_projected_residual_fit(G12, B12, dM=dM)
        assert c1 / dM == pytest.approx(hx.kappa, rel=1e-4)
        assert abs(c2) < 1e-3
        assert c3 == pytest.approx(hx.K0 + 2 * hx.K2, rel=1e-3)
        hx_off, _ = hex_coefficients(6.0, 1.2)
        _, c2, c3 = hex_projected_residual_fit(6.0, 1.2, dM=dM)
        assert c2 == pytest.approx(hx_off.N, rel=1e-3)
        assert c3 == pytest.approx(hx_off.K0 + 2 * hx_off.K2, rel=1e-3)

    def test_stationary_amplitude_zeroes_residual(self):
        # A = sqrt(-dM kappa / K0) kills the reduced cubic; the projected
        # residual at that amplitude is O(dM^2)
        from marangoni.coeffs import roll_ansatz
        from marangoni.model import rhs_full

        sq, _ = square_coefficients(G12, B12)
        setup = CriticalSetup(G12, B12, "square")
        nu0, corr = _corrections(setup, hexagonal=False)
        residuals = []
        for dM in (1e-4, 2e-4):
            amp = np.sqrt(-dM * sq.kappa / sq.K0)
            U = roll_ansatz(setup, corr, nu0, amp)
            val = setup.p_plus(
                rhs_full(U, setup.params.at_marangoni(setup.M_star + dM)).field[K1])
            residuals.append(abs(val))
        # doubling dM should multiply the residual by about 4 (order dM^2)
        assert residuals[1] / residuals[0] == pytest.approx(4.0, rel=0.5)
        assert residuals[0] < 10 * (1e-4) ** 2


class TestConservationPolynomial:
    def test_values_and_oracle(self):
        k = np.array([1.2843299054, 0.0])
        kappa0, kappa1 = conservation_polynomial(G12, 0.1865184573,
                                                 8.5144749311, k)
        assert kappa1 == pytest.approx(2.0, abs=1e-12)  # HUnit: 2 phi1^2
        rel, power = modulation_scaling_check(G12, B12, m=64)
        assert abs(rel) < 0.1
        assert power == pytest.approx(2.0, abs=0.05)

    def test_check_flag_passes(self):
        k = np.array([1.2843299054, 0.0])
        conservation_polynomial(G12, 0.1865184573, 8.5144749311, k,
                                check_scaling=True)
