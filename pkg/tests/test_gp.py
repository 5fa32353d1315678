import numpy as np
import pytest

from spacegan.gp import fit_spatial_gp, gp_fit, gp_predict, gp_sample_posterior, rbf_kernel


def dense_oracle(X, y, Xs, ell=1.0, noise=1e-6):
    """Posterior by explicit matrix inverse."""
    def k(a, b):
        return np.exp(-((a[:, None, :] - b[None, :, :]) ** 2).sum(-1) / (2 * ell**2))

    Kinv = np.linalg.inv(k(X, X) + noise * np.eye(len(X)))
    Ks = k(X, Xs)
    return Ks.T @ Kinv @ y, k(Xs, Xs) - Ks.T @ Kinv @ Ks


def test_kernel_diagonal(rng):
    X = rng.normal(size=(6, 2))
    np.testing.assert_array_equal(np.diag(rbf_kernel(X, X)), 1.0)


def test_near_interpolation():
    X = np.array([[0.0, 0.0], [1.0, 0.5]])
    y = np.array([0.7, -1.2])
    mean, _ = gp_predict(gp_fit(X, y), X)
    np.testing.assert_allclose(mean, y, atol=1e-3)


def test_two_point_closed_form():
    X = np.array([[0.0], [1.0]])
    y = np.array([1.0, 2.0])
    xs = np.array([[0.4]])
    k01 = np.exp(-0.5)
    a = 1 + 1e-6
    inv = np.array([[a, -k01], [-k01, a]]) / (a * a - k01 * k01)
    ks = np.exp(-0.5 * (xs[0, 0] - X[:, 0]) ** 2)
    expected = ks @ inv @ y
    mean, _ = gp_predict(gp_fit(X, y), xs)
    assert mean[0] == pytest.approx(expected, abs=1e-10)


def test_three_point_dense_oracle(rng):
    X = rng.normal(size=(3, 2))
    y = rng.normal(size=3)
    Xs = rng.normal(size=(4, 2))
    mean, cov = gp_predict(gp_fit(X, y), Xs)
    m_ref, c_ref = dense_oracle(X, y, Xs)
    np.testing.assert_allclose(mean, m_ref, atol=1e-8)
    np.testing.assert_allclose(cov, c_ref, atol=1e-8)


def test_covariance_symmetric_psd(rng):
    model = gp_fit(rng.normal(size=(20, 2)), rng.normal(size=20))
    _, cov = gp_predict(model, rng.normal(size=(15, 2)))
    np.testing.assert_array_equal(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() > -1e-8


def test_factorization_residual(rng):
    X = rng.normal(size=(30, 2))
    model = gp_fit(X, rng.normal(size=30))
    K = rbf_kernel(X, X) + model.noise * np.eye(30)
    assert np.abs(K - model.chol @ model.chol.T).max() < 1e-8


def test_far_field_reverts_to_prior(rng):
    model = gp_fit(rng.normal(size=(10, 2)), rng.normal(size=10))
    mean, cov = gp_predict(model, np.array([[100.0, 100.0]]))
    assert abs(mean[0]) < 1e-8 and cov[0, 0] == pytest.approx(1.0, abs=1e-8)


def test_empty_query(rng):
    mean, cov = gp_predict(gp_fit(rng.normal(size=(4, 2)), rng.normal(size=4)), np.zeros((0, 2)))
    assert mean.shape == (0,) and cov.shape == (0, 0)


def test_affine_equivariance(rng):
    X, Xs = rng.normal(size=(12, 2)), rng.normal(size=(5, 2))
    y = rng.normal(size=12)
    m1, _ = gp_predict(gp_fit(X, y), Xs)
    m2, _ = gp_predict(gp_fit(X, 3.5 * y), Xs)
    np.testing.assert_allclose(m2, 3.5 * m1, atol=1e-8)


def test_jitter_escalation_on_duplicates():
    X = np.zeros((5, 1))
    model = gp_fit(X, np.arange(5.0), noise=0.0)
    assert model.noise > 0


class TestPosteriorSampling:
    def test_monte_carlo_mean(self, rng):
        X = rng.normal(size=(8, 2))
        model = gp_fit(X, rng.normal(size=8))
        Xs = rng.normal(size=(40, 2)) * 1.5
        mean, cov = gp_predict(model, Xs)
        B = 2000
        draws = gp_sample_posterior(model, Xs, B, seed=3)
        sd = np.sqrt(np.clip(np.diag(cov), 0, None))
        ok = np.abs(draws.mean(0) - mean) < 4 * sd / np.sqrt(B) + 1e-12
        assert ok.mean() >= 0.95

    def test_degenerate_covariance(self):
        X = np.array([[0.0], [5.0]])
        model = gp_fit(X, np.array([1.0, 2.0]), noise=1e-12)
        draws = gp_sample_posterior(model, X, 5, seed=0)
        np.testing.assert_allclose(draws, np.tile(gp_predict(model, X)[0], (5, 1)), atol=1e-4)

    def test_zero_covariance_returns_mean(self):
        from spacegan.gp import _psd_factor

        assert not _psd_factor(np.zeros((3, 3))).any()

    def test_deterministic(self, rng):
        model = gp_fit(rng.normal(size=(5, 2)), rng.normal(size=5))
        Xs = rng.normal(size=(7, 2))
        a = gp_sample_posterior(model, Xs, 4, seed=9)
        assert a.tobytes() == gp_sample_posterior(model, Xs, 4, seed=9).tobytes()
        assert gp_sample_posterior(model, Xs, 0, seed=9).shape == (0, 7)


def test_spatial_gp_raw_units(rng):
    coords = rng.random((30, 2)) * 100
    y = 1000 + 50 * np.sin(coords[:, 0] / 20)
    gp = fit_spatial_gp(coords, y)
    mean, _ = gp.predict(coords)
    np.testing.assert_allclose(mean, y, atol=1.0)
    assert fit_spatial_gp(coords, y, max_points=10).model.X.shape == (10, 2)
