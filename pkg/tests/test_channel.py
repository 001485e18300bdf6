import numpy as np
import pytest

from simbeam.channel import (assign_users, build_channel_model, build_correlation,
                             build_propagation, dbm_to_watts, psd_sqrt, rs_coefficient,
                             sample_channels)
from simbeam.exceptions import NumericError
from simbeam.geometry import propagation_metrics

from helpers import toy_geometry, toy_model


def diffraction_oracle(d_x, d_y, lam, dist, cos_phi):
    # straight-line evaluation of the diffraction coefficient, kept separate
    # from the vectorized builder on purpose
    return (d_x * d_y * cos_phi / dist) * (1 / (2 * np.pi * dist) - 1j / lam) \
        * np.exp(2j * np.pi * dist / lam)


class TestDiffractionCoefficient:
    def test_facing_pair_one_wavelength(self):
        geom = toy_geometry(N=4, N_r=2, L=1)
        lam = geom.wavelength
        # aperture lam/2 x lam/2 at distance lam: phase term is exactly 1
        value = rs_coefficient(geom, lam, 1.0)
        assert value == pytest.approx(1 / (8 * np.pi) - 0.25j, rel=1e-12)

    def test_modulus_decreases_with_distance(self):
        geom = toy_geometry(N=4, N_r=2, L=1)
        lam = geom.wavelength
        mods = [abs(rs_coefficient(geom, d, 1.0)) for d in (lam, 2 * lam, 4 * lam)]
        assert mods[0] > mods[1] > mods[2]

    def test_depends_only_on_metrics(self):
        geom = toy_geometry(N=4, N_r=2, L=1)
        a = rs_coefficient(geom, 0.3, 0.8)
        b = rs_coefficient(geom, 0.3, 0.8)
        assert a == b

    def test_rejects_nonpositive_distance(self):
        geom = toy_geometry(N=4, N_r=2, L=1)
        with pytest.raises(ValueError):
            rs_coefficient(geom, 0.0, 1.0)


class TestPropagationBuild:
    def test_single_layer_has_no_interlayer_matrices(self):
        geom = toy_geometry(N=4, N_r=2, L=1)
        W, w1 = build_propagation(geom)
        assert W == []
        assert w1.shape == (4, 2)

    def test_facing_pairs_give_constant_diagonal(self):
        geom = toy_geometry(N=4, N_r=2, L=2)
        W, _ = build_propagation(geom)
        diag = np.diag(W[0])
        assert np.allclose(diag, diag[0])

    def test_matches_scalar_oracle_on_two_atom_lattice(self):
        geom = toy_geometry(N=2, N_r=2, L=2)
        W, _ = build_propagation(geom)
        for src in (1, 2):
            for dst in (1, 2):
                met = propagation_metrics(geom, ("atom", 1, src), ("atom", 2, dst))
                expected = diffraction_oracle(geom.d_x, geom.d_y, geom.wavelength,
                                              met.distance, met.cos_incidence)
                assert W[0][dst - 1, src - 1] == pytest.approx(expected, rel=1e-12)

    def test_rebuild_is_bit_identical(self):
        geom = toy_geometry(N=4, N_r=2, L=3)
        Wa, w1a = build_propagation(geom)
        Wb, w1b = build_propagation(geom)
        assert all(np.array_equal(x, y) for x, y in zip(Wa, Wb))
        assert np.array_equal(w1a, w1b)


class TestCorrelation:
    def test_diagonal_is_one_and_trace_is_N(self):
        geom = toy_geometry(N=6, N_r=3, L=1)
        R = build_correlation(geom)
        assert np.allclose(np.diag(R), 1.0)
        assert np.trace(R) == pytest.approx(6.0, rel=1e-15)
        assert np.allclose(R, R.T.conj())

    def test_half_wavelength_separation_decorrelates(self):
        # full-pitch lattice with lam/2 atoms puts neighbours at exactly lam/2
        geom = toy_geometry(N=2, N_r=2, L=1, lattice_step="full")
        R = build_correlation(geom)
        assert R[0, 1] == pytest.approx(0.0, abs=1e-15)

    def test_psd_sqrt_squares_back(self):
        geom = toy_geometry(N=9, N_r=3, L=1)
        R = build_correlation(geom)
        S = psd_sqrt(R)
        assert np.allclose(S @ S, R, atol=1e-12)

    def test_psd_sqrt_rejects_indefinite_matrix(self):
        bad = np.diag([1.0, -1.0])
        with pytest.raises(NumericError):
            psd_sqrt(bad)


class TestUsers:
    def test_paper_path_loss_at_60m(self):
        users = assign_users(0, 1, 60.0, 60.0 + 1e-9)
        assert users.beta[0] == pytest.approx(1e-3 / 3600, rel=1e-6)

    def test_dbm_conversions(self):
        assert dbm_to_watts(-80.0) == pytest.approx(1e-11, rel=1e-12)
        assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-12)

    def test_distances_stay_in_annulus(self):
        users = assign_users(3, 200, 60.0, 80.0)
        assert np.all(users.distances >= 60.0)
        assert np.all(users.distances <= 80.0)

    def test_rejects_bad_radii(self):
        with pytest.raises(ValueError):
            assign_users(0, 2, 80.0, 60.0)
        with pytest.raises(ValueError):
            assign_users(0, 2, 0.0, 60.0)

    def test_model_requires_matching_antenna_count(self):
        geom = toy_geometry(N=4, N_r=2, L=1, M=3)
        users = assign_users(0, 2, 60.0, 80.0)
        with pytest.raises(ValueError):
            build_channel_model(geom, users)


class TestSampling:
    def test_sample_covariance_converges_to_R(self):
        rng = np.random.default_rng(11)
        _, model = toy_model(rng, N=9, N_r=3, L=1, K=1)
        n = 100_000
        draws = sample_channels(model, seed=5, n_draws=n)
        h = draws[:, 0, :] / np.sqrt(model.beta[0])
        cov = (h.conj().T @ h) / n
        # entrywise CLT bound: Var of the estimator entry is R_nn R_mm / n
        bound = 3.0 * np.sqrt(np.outer(np.diag(model.R), np.diag(model.R)) / n)
        assert np.all(np.abs(cov - model.R) <= bound + 1e-12)

    def test_mean_energy_matches_trace(self):
        rng = np.random.default_rng(2)
        _, model = toy_model(rng, N=4, N_r=2, L=1, K=2)
        draws = sample_channels(model, seed=7, n_draws=20_000)
        energy = np.mean(np.sum(np.abs(draws)**2, axis=2), axis=0)
        assert np.allclose(energy, model.beta * model.N, rtol=0.05)

    def test_draws_are_zero_mean(self):
        rng = np.random.default_rng(3)
        _, model = toy_model(rng, N=4, N_r=2, L=1, K=2)
        n = 50_000
        draws = sample_channels(model, seed=9, n_draws=n)
        mean = draws.mean(axis=0)
        bound = 3.0 * np.sqrt(model.beta[:, None] / n)
        assert np.all(np.abs(mean) <= bound)

    def test_same_seed_is_reproducible(self):
        rng = np.random.default_rng(4)
        _, model = toy_model(rng, N=4, N_r=2, L=1, K=2)
        a = sample_channels(model, seed=13, n_draws=8)
        b = sample_channels(model, seed=13, n_draws=8)
        assert np.array_equal(a, b)

    def test_draws_independent_of_batching(self):
        # counter-based substreams: draw j is the same whether or not the
        # preceding draws were generated
        rng = np.random.default_rng(5)
        _, model = toy_model(rng, N=4, N_r=2, L=1, K=2)
        full = sample_channels(model, seed=21, n_draws=6)
        from simbeam.channel import _draw_generator
        g = _draw_generator(21, 5)
        z = (g.standard_normal((2, 4)) + 1j * g.standard_normal((2, 4))) / np.sqrt(2)
        direct = np.sqrt(model.beta)[:, None] * (z @ model.R_sqrt.T)
        assert np.array_equal(full[5], direct)
