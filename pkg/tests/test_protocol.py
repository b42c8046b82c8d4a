import numpy as np
import pytest
from scipy.stats import chisquare

from irsim.channel import FrameChannels, sample_frame, VehicleLinkParams
from irsim.protocol import (
    FrameConfig,
    data_phase_stage2,
    default_l_x,
    dft_refraction_matrix,
    initial_refraction,
    make_training_matrix,
    overall_rate,
    random_refraction_matrix,
    rate_stage1,
    rate_stage2,
    run_frame,
    stage2_training_matrix,
)
from irsim.signal_math import steering_2d


class TestFrameConfig:
    def test_defaults_valid(self):
        cfg = FrameConfig()
        assert cfg.gamma_gap == pytest.approx(10**0.9)

    def test_no_stage1_data_rejected(self):
        with pytest.raises(ValueError):
            FrameConfig(q_symbols=31, tau1=30, tau_d=1)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            FrameConfig(eta=1.5)

    def test_bad_training(self):
        with pytest.raises(ValueError):
            FrameConfig(training="hadamard")


class TestRandomRefraction:
    def test_shape_and_modulus(self):
        rng = np.random.default_rng(0)
        v = random_refraction_matrix(12, 8, 0.7, rng)
        assert v.shape == (12, 8)
        np.testing.assert_allclose(np.abs(v), 0.7, rtol=1e-12)

    def test_phase_uniformity(self):
        rng = np.random.default_rng(1)
        v = random_refraction_matrix(200, 100, 1.0, rng)
        phases = np.angle(v).ravel()
        counts, _ = np.histogram(phases, bins=16, range=(-np.pi, np.pi))
        _, p = chisquare(counts)
        assert p > 1e-3

    def test_too_few_pilots(self):
        with pytest.raises(ValueError):
            random_refraction_matrix(3, 8, 1.0, np.random.default_rng(0))


class TestDefaultLx:
    def test_square_surface(self):
        # tau1=16, m_x=m_y -> the most balanced divisor split is 4x4
        assert default_l_x(16, 4, 4) == 4

    def test_elongated_surface(self):
        # m_x/m_y = 4 favours more x-columns: 8x2 beats 4x4 for tau1=16
        assert default_l_x(16, 8, 2) == 8

    def test_divides(self):
        for tau1 in (8, 30, 80, 120):
            assert tau1 % default_l_x(tau1, 5, 10) == 0


class TestDftRefraction:
    def test_rows_are_kron_pairs(self):
        v = dft_refraction_matrix(8, 4, 2, l_x=4)
        assert v.shape == (8, 8)
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)

    def test_complete_training_is_orthogonal(self):
        # tau1 = M with every column pair used once: V^H V = M I
        v = dft_refraction_matrix(8, 4, 2, l_x=4)
        np.testing.assert_allclose(v.conj().T @ v, 8 * np.eye(8), atol=1e-9)

    def test_explicit_schedule(self):
        from irsim.signal_math import dft_matrix

        v = dft_refraction_matrix(4, 4, 2, l_x=2)
        d_x, d_y = dft_matrix(4), dft_matrix(2)
        # x columns {0, 2}, y columns {0, 1}, y index fastest
        expected = np.stack([
            np.kron(d_x[:, 0], d_y[:, 0]),
            np.kron(d_x[:, 0], d_y[:, 1]),
            np.kron(d_x[:, 2], d_y[:, 0]),
            np.kron(d_x[:, 2], d_y[:, 1]),
        ])
        np.testing.assert_allclose(v, expected, atol=1e-12)

    def test_literal_formula_variant_runs(self):
        v = dft_refraction_matrix(8, 4, 2, l_x=4, literal_formula=True)
        assert v.shape == (8, 8)
        np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)

    def test_bad_split(self):
        with pytest.raises(ValueError):
            dft_refraction_matrix(8, 4, 2, l_x=3)

    def test_eta_scaling(self):
        v = dft_refraction_matrix(8, 4, 2, l_x=4, eta=0.5)
        np.testing.assert_allclose(np.abs(v), 0.5, atol=1e-12)


class TestInitialRefraction:
    def test_perfect_alignment_sums_magnitudes(self):
        psi = (0.3, -0.7)
        nu = initial_refraction(psi, 3, 4)
        u = steering_2d(psi[0], psi[1], 3, 4)
        assert nu @ u == pytest.approx(12.0)

    def test_dirichlet_kernel_mismatch(self):
        # 1D surface: |nu(psi_hat) . u(psi)| equals the Dirichlet kernel
        m = 8
        psi, psi_hat = 0.31, 0.19
        nu = initial_refraction((psi_hat, 0.0), m, 1)
        u = steering_2d(psi, 0.0, m, 1)
        d = np.pi * (psi - psi_hat) / 2
        expected = abs(np.sin(m * d) / np.sin(d))
        assert abs(nu @ u) == pytest.approx(expected, rel=1e-10)

    def test_eta(self):
        nu = initial_refraction((0.1, 0.2), 2, 2, eta=0.6)
        np.testing.assert_allclose(np.abs(nu), 0.6, rtol=1e-12)


class TestStage2Training:
    def test_two_pilots(self):
        np.testing.assert_allclose(
            stage2_training_matrix(2), [[1, 1], [1, -1]], atol=1e-12
        )

    def test_orthogonal_columns(self):
        th = stage2_training_matrix(4)
        assert th.shape == (4, 2)
        assert abs(th[:, 0].conj() @ th[:, 1]) < 1e-12

    def test_minimum(self):
        with pytest.raises(ValueError):
            stage2_training_matrix(1)


class TestRates:
    def test_stage1_frozen_value(self):
        # (100-31)/100 * log2(1 + 1e4 / 10^0.9)
        cfg = FrameConfig(q_symbols=100, tau1=30, tau_d=1, gamma_gap_db=9.0, sigma2=1e-4)
        assert rate_stage1(1.0, cfg) == pytest.approx(7.106394602733508, rel=1e-12)

    def test_stage2_frozen_value(self):
        # (100-2)/100 * log2(1 + 100 / 10^0.9), single block
        cfg = FrameConfig(q_symbols=100, tau2=2, gamma_gap_db=9.0, sigma2=1.0)
        assert rate_stage2([100.0], cfg) == pytest.approx(3.689106479702004, rel=1e-12)

    def test_stage2_additivity(self):
        cfg = FrameConfig(sigma2=0.5)
        w = [1.0, 4.0, 9.0]
        per_block = [rate_stage2([wi], cfg) for wi in w]
        assert rate_stage2(w, cfg) == pytest.approx(np.mean(per_block))

    def test_overall_is_convex_combination(self):
        assert overall_rate(10.0, 2.0, 40) == pytest.approx(10.0 / 40 + 39 * 2.0 / 40)
        assert overall_rate(5.0, 3.0, 1) == pytest.approx(5.0)

    def test_zero_gain_zero_rate(self):
        cfg = FrameConfig(sigma2=1.0)
        assert rate_stage1(0.0, cfg) == 0.0

    def test_negative_gain_rejected(self):
        with pytest.raises(ValueError):
            rate_stage1(-1.0, FrameConfig(sigma2=1.0))

    def test_data_phase_unit_modulus(self):
        assert abs(data_phase_stage2(1.234)) == pytest.approx(1.0)
        assert data_phase_stage2(0.0) == 1.0


def _los_only_channels(n_blocks=4, m_x=3, m_y=4, beta=2e-4 * np.exp(0.7j), h_d_mag=3e-5):
    m = m_x * m_y
    psi = (0.27, -0.61)
    u = steering_2d(psi[0], psi[1], m_x, m_y)
    c_los = np.tile(beta * u, (n_blocks, 1))
    # direct channel co-phased with the aligned cascaded term
    h_d = np.full(n_blocks, h_d_mag * np.exp(1j * np.angle(beta)))
    return FrameChannels(
        c_los=c_los, c_nlos=np.zeros((n_blocks, m), dtype=complex),
        h_d=h_d, psi_x=psi[0], psi_y=psi[1], m_x=m_x, m_y=m_y,
    )


class TestRunFrame:
    def test_noiseless_alignment_oracle(self):
        ch = _los_only_channels()
        cfg = FrameConfig(n_blocks=4, q_symbols=100, tau1=30, sigma2=1e-13)
        res = run_frame(cfg, ch, np.random.default_rng(0), inject_noise=False)
        beta, h_d = ch.beta[0], ch.h_d[0]
        expected = (ch.m * abs(beta) + abs(h_d)) ** 2
        assert res.w_stage1 == pytest.approx(expected, rel=1e-4)
        np.testing.assert_allclose(res.w_stage2, expected, rtol=1e-4)

    def test_perfect_phase_hits_bound_exactly(self):
        ch = _los_only_channels()
        cfg = FrameConfig(n_blocks=4, q_symbols=100, tau1=30, sigma2=1e-13)
        res = run_frame(
            cfg, ch, np.random.default_rng(0),
            psi_true=(ch.psi_x, ch.psi_y), inject_noise=False,
        )
        expected = (ch.m * abs(ch.beta[0]) + abs(ch.h_d[0])) ** 2
        assert res.w_stage1 == pytest.approx(expected, rel=1e-10)

    def test_eta_zero_reduces_to_direct_link(self):
        ch = _los_only_channels()
        cfg = FrameConfig(n_blocks=4, q_symbols=100, tau1=30, sigma2=1e-13, eta=0.0)
        res = run_frame(
            cfg, ch, np.random.default_rng(0),
            psi_true=(ch.psi_x, ch.psi_y), inject_noise=False,
        )
        np.testing.assert_allclose(res.w_stage2, abs(ch.h_d[0]) ** 2, rtol=1e-10)

    def test_cpa_never_below_no_cpa_noiseless(self):
        p = VehicleLinkParams(
            m_x=5, m_y=10, rician_k=10.0, speed=50.0, carrier_hz=5.9e9,
            t_b=2e-4, n_blocks=6,
        )
        for seed in range(5):
            ch = sample_frame(p, np.random.default_rng(seed))
            cfg = FrameConfig(n_blocks=6, q_symbols=100, tau1=30, sigma2=1e-13)
            rng = np.random.default_rng(seed)
            with_cpa = run_frame(cfg, ch, rng, inject_noise=False)
            without = run_frame(
                cfg, ch, np.random.default_rng(seed),
                mu_policy="none", inject_noise=False,
            )
            assert np.all(with_cpa.w_stage2 >= without.w_stage2 - 1e-20)

    def test_seed_determinism(self):
        p = VehicleLinkParams(
            m_x=3, m_y=4, rician_k=10.0, speed=50.0, carrier_hz=5.9e9,
            t_b=2e-4, n_blocks=5,
        )
        ch = sample_frame(p, np.random.default_rng(7))
        cfg = FrameConfig(n_blocks=5, q_symbols=100, tau1=30, sigma2=1e-12)
        a = run_frame(cfg, ch, np.random.default_rng(11))
        b = run_frame(cfg, ch, np.random.default_rng(11))
        assert a.rate_overall == b.rate_overall
        np.testing.assert_array_equal(a.w_stage2, b.w_stage2)

    def test_block_count_mismatch(self):
        ch = _los_only_channels(n_blocks=4)
        cfg = FrameConfig(n_blocks=5, sigma2=1.0)
        with pytest.raises(ValueError):
            run_frame(cfg, ch, np.random.default_rng(0))

    def test_unknown_policy(self):
        ch = _los_only_channels()
        cfg = FrameConfig(n_blocks=4, sigma2=1.0)
        with pytest.raises(ValueError):
            run_frame(cfg, ch, np.random.default_rng(0), mu_policy="sometimes")

    def test_rate_composition(self):
        ch = _los_only_channels()
        cfg = FrameConfig(n_blocks=4, q_symbols=100, tau1=30, sigma2=1e-12)
        res = run_frame(cfg, ch, np.random.default_rng(3))
        assert res.rate_overall == pytest.approx(
            overall_rate(res.rate_stage1, res.rate_stage2, 4)
        )

    def test_make_training_dispatch(self):
        rng = np.random.default_rng(0)
        cfg = FrameConfig(tau1=8, sigma2=1.0, training="dft", l_x=4)
        v = make_training_matrix(cfg, 4, 2, rng)
        np.testing.assert_allclose(v, dft_refraction_matrix(8, 4, 2, l_x=4))
