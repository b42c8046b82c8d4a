import numpy as np
import pytest
from scipy.special import j0

from irsim.channel import (
    BsIrsParams,
    IrsUserParams,
    LinkBudget,
    SPEED_OF_LIGHT,
    VehicleLinkParams,
    bs_irs_los,
    cascade,
    doppler_frequency,
    end_to_end,
    irs_user,
    path_gain,
    sample_bs_irs,
    sample_direct_sequence,
    sample_frame,
)
from irsim.signal_math import steering_2d


class TestPathGain:
    def test_reference_distance(self):
        assert path_gain(LinkBudget(1.0, 2.2, -30.0)) == pytest.approx(1e-3)

    def test_irs_link(self):
        # 1e-3 * 100**-2.2 evaluated directly
        assert path_gain(LinkBudget(100.0, 2.2, -30.0)) == pytest.approx(3.9810717055e-8)

    def test_direct_link(self):
        assert path_gain(LinkBudget(100.0, 3.0, -30.0)) == pytest.approx(1e-9)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            LinkBudget(0.0, 2.2)


class TestDoppler:
    def test_nominal_magnitude(self):
        lam = SPEED_OF_LIGHT / 5.9e9
        assert doppler_frequency(50.0, 0.0, 0.0, lam) == pytest.approx(983.33, rel=1e-3)

    def test_zero_speed(self):
        assert doppler_frequency(0.0, 0.3, 1.1, 0.05) == 0.0

    def test_broadside(self):
        assert doppler_frequency(50.0, np.pi / 2, 0.0, 0.05) == pytest.approx(0.0, abs=1e-12)

    def test_bad_wavelength(self):
        with pytest.raises(ValueError):
            doppler_frequency(50.0, 0.0, 0.0, 0.0)


def _bi_params(k=10.0, rho=1e-4 + 5e-5j, f_d=983.0, m_x=3, m_y=4):
    return BsIrsParams(
        rho=rho, rician_k=k, f_d=f_d, theta=0.4, vartheta=1.2,
        m_x=m_x, m_y=m_y, t_b=2e-4,
    )


class TestBsIrs:
    def test_pure_los_limit(self):
        p = _bi_params(k=1e18)
        a = bs_irs_los(p, 1)
        np.testing.assert_allclose(a, p.rho * p.steering(), rtol=1e-9)

    def test_k_zero_mean_power(self):
        p = _bi_params(k=0.0)
        rng = np.random.default_rng(5)
        draws = np.stack([sample_bs_irs(p, 1, rng) for _ in range(10_000)])
        power = np.mean(np.abs(draws) ** 2)
        assert power == pytest.approx(abs(p.rho) ** 2, rel=0.02)

    def test_doppler_rotation(self):
        p = _bi_params()
        a1, a2 = bs_irs_los(p, 1), bs_irs_los(p, 2)
        np.testing.assert_allclose(a2, a1 * np.exp(2j * np.pi * p.f_d * p.t_b), atol=1e-18)

    def test_los_magnitude_block_invariant(self):
        p = _bi_params()
        for n in (1, 5, 40):
            np.testing.assert_allclose(
                np.abs(bs_irs_los(p, n)),
                np.sqrt(p.rician_k / (1 + p.rician_k)) * abs(p.rho),
                rtol=1e-12,
            )

    def test_phase_consistency(self):
        p = _bi_params()
        assert p.phi == pytest.approx(2 * 0.5 * np.cos(0.4) * np.cos(1.2), abs=1e-12)
        assert p.varphi == pytest.approx(2 * 0.5 * np.cos(0.4) * np.sin(1.2), abs=1e-12)


class TestIrsUser:
    def test_all_ones(self):
        p = IrsUserParams(alpha=1.0, theta=-np.pi / 2, vartheta=0.0, m_x=2, m_y=3)
        np.testing.assert_allclose(irs_user(p), np.ones(6), atol=1e-12)

    def test_entry_magnitudes(self):
        p = IrsUserParams(alpha=0.3 - 0.1j, theta=-0.7, vartheta=2.1, m_x=3, m_y=4)
        np.testing.assert_allclose(np.abs(irs_user(p)), abs(p.alpha), rtol=1e-12)

    def test_enumeration_oracle(self):
        p = IrsUserParams(alpha=1.0, theta=-0.3, vartheta=0.9, m_x=2, m_y=3)
        g = irs_user(p)
        expected = np.array([
            np.exp(1j * np.pi * (kx * p.phi + ky * p.varphi))
            for kx in range(2) for ky in range(3)
        ])
        np.testing.assert_allclose(g, expected, atol=1e-12)


class TestCascade:
    def test_no_nlos(self):
        rng = np.random.default_rng(1)
        g = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        a_los = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        c_los, c_nlos, _ = cascade(g, a_los, a_los)
        np.testing.assert_allclose(c_nlos, 0.0, atol=1e-15)
        np.testing.assert_allclose(c_los, g * a_los)

    def test_beta_is_first_entry(self):
        bi = _bi_params()
        iu = IrsUserParams(alpha=0.2 + 0.1j, theta=-0.5, vartheta=1.0, m_x=3, m_y=4)
        g = irs_user(iu)
        a_los = bs_irs_los(bi, 1)
        _, _, beta = cascade(g, a_los, a_los)
        assert beta == pytest.approx(bi.los_gain(1) * iu.alpha)

    def test_los_is_steering_multiple(self):
        bi = _bi_params()
        iu = IrsUserParams(alpha=0.2 + 0.1j, theta=-0.5, vartheta=1.0, m_x=3, m_y=4)
        g = irs_user(iu)
        rng = np.random.default_rng(2)
        a_los = bs_irs_los(bi, 3)
        a = a_los + 0.01 * (rng.standard_normal(12) + 1j * rng.standard_normal(12))
        c_los, _, beta = cascade(g, a, a_los)
        u = steering_2d(iu.phi + bi.phi, iu.varphi + bi.varphi, 3, 4)
        assert np.max(np.abs(c_los - beta * u)) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cascade(np.ones(3), np.ones(4), np.ones(4))


class TestDirectSequence:
    def test_fully_correlated_when_static(self):
        rng = np.random.default_rng(0)
        h = sample_direct_sequence(1.0, 0.0, 2e-4, 10, rng)
        # equality holds to the jitter scale used to factor the singular
        # zero-Doppler covariance
        np.testing.assert_allclose(h, h[0], rtol=1e-5)

    def test_zero_variance(self):
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(sample_direct_sequence(0.0, 1e3, 2e-4, 5, rng), 0.0)

    def test_lag1_autocorrelation(self):
        rng = np.random.default_rng(42)
        n_seq, variance = 20_000, 2.5
        h = np.stack([
            sample_direct_sequence(variance, 1000.0, 2e-4, 4, rng) for _ in range(n_seq)
        ])
        lag1 = np.mean(h[:, 1:] * h[:, :-1].conj()).real
        expected = variance * j0(2 * np.pi * 0.2)
        assert lag1 == pytest.approx(expected, rel=0.02)

    def test_stationary_power(self):
        rng = np.random.default_rng(9)
        h = np.stack([
            sample_direct_sequence(3.0, 983.0, 2e-4, 6, rng) for _ in range(20_000)
        ])
        per_block = np.mean(np.abs(h) ** 2, axis=0)
        np.testing.assert_allclose(per_block, 3.0, rtol=0.02)


class TestEndToEnd:
    def test_zero_refraction(self):
        fr = _small_frame()
        block = fr.block(1)
        assert end_to_end(np.zeros(fr.m), block) == pytest.approx(block.h_d)

    def test_dot_product_oracle(self):
        fr = _small_frame()
        block = fr.block(2)
        rng = np.random.default_rng(4)
        nu = np.exp(1j * rng.uniform(0, 2 * np.pi, fr.m))
        expected = sum(nu[k] * block.c[k] for k in range(fr.m)) + block.h_d
        assert end_to_end(nu, block) == pytest.approx(expected)

    def test_dimension_mismatch(self):
        fr = _small_frame()
        with pytest.raises(ValueError):
            end_to_end(np.zeros(fr.m + 1), fr.block(1))


def _vehicle_params(**kw):
    defaults = dict(
        m_x=3, m_y=4, rician_k=10.0, speed=50.0, carrier_hz=5.9e9,
        t_b=2e-4, n_blocks=6,
    )
    defaults.update(kw)
    return VehicleLinkParams(**defaults)


class TestSampleFrame:
    def test_los_decomposition(self):
        fr = sample_frame(_vehicle_params(), np.random.default_rng(0))
        u = steering_2d(fr.psi_x, fr.psi_y, fr.m_x, fr.m_y)
        for n in range(fr.n_blocks):
            resid = fr.c_los[n] - fr.beta[n] * u
            assert np.max(np.abs(resid)) < 1e-12

    def test_beta_magnitude_constant(self):
        fr = sample_frame(_vehicle_params(), np.random.default_rng(1))
        np.testing.assert_allclose(np.abs(fr.beta), np.abs(fr.beta[0]), rtol=1e-12)

    def test_shapes(self):
        p = _vehicle_params()
        fr = sample_frame(p, np.random.default_rng(2))
        assert fr.c_los.shape == (p.n_blocks, 12)
        assert fr.c_nlos.shape == (p.n_blocks, 12)
        assert fr.h_d.shape == (p.n_blocks,)

    def test_reproducible(self):
        a = sample_frame(_vehicle_params(), np.random.default_rng(3))
        b = sample_frame(_vehicle_params(), np.random.default_rng(3))
        np.testing.assert_array_equal(a.c_los, b.c_los)
        np.testing.assert_array_equal(a.h_d, b.h_d)


def _small_frame():
    return sample_frame(_vehicle_params(), np.random.default_rng(8))
