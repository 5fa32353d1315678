import numpy as np
import pytest

from spacegan.datasets import gen_toy1
from spacegan.ensemble import (
    Ensemble,
    block_bootstrap_indices,
    design_matrix,
    ensemble_predict,
    gp_bagging,
    spatial_bootstrap,
)
from spacegan.gp import fit_spatial_gp
from spacegan.tree import TreeParams, tree_fit
from spacegan.weights import knn_graph, queen_graph


@pytest.fixture(scope="module")
def toy():
    return gen_toy1(0), queen_graph(20, 20)


def make_members(rng, B, n=30):
    X = rng.normal(size=(n, 2))
    return X, [tree_fit(X, rng.normal(size=n), TreeParams(4, 2)) for _ in range(B)]


class TestAggregation:
    def test_mean_of_members(self, rng):
        X, members = make_members(rng, 5)
        ens = Ensemble(members, "spatial_boot")
        expected = np.mean([m.predict(X) for m in members], axis=0)
        np.testing.assert_allclose(ensemble_predict(ens, X), expected, atol=1e-12)

    def test_single_member(self, rng):
        X, members = make_members(rng, 1)
        np.testing.assert_array_equal(Ensemble(members, "gp_bag").predict(X), members[0].predict(X))

    def test_variance_not_above_member_average(self, rng):
        X, members = make_members(rng, 8)
        y = rng.normal(size=len(X))
        ens_err = np.mean((Ensemble(members, "ganning").predict(X) - y) ** 2)
        member_err = np.mean([np.mean((m.predict(X) - y) ** 2) for m in members])
        assert ens_err <= member_err + 1e-12

    def test_rejects_empty_and_mismatched(self, rng):
        with pytest.raises(ValueError):
            Ensemble([], "ganning")
        a = tree_fit(rng.normal(size=(5, 2)), rng.normal(size=5))
        b = tree_fit(rng.normal(size=(5, 3)), rng.normal(size=5))
        with pytest.raises(ValueError):
            Ensemble([a, b], "ganning")

    def test_csv_round_trip(self, tmp_path, rng):
        X, members = make_members(rng, 3)
        ens = Ensemble(members, "gp_bag")
        ens.to_csv(tmp_path / "e.csv")
        back = Ensemble.from_csv(tmp_path / "e.csv")
        assert back.provenance == "gp_bag" and len(back.members) == 3
        assert back.predict(X).tobytes() == ens.predict(X).tobytes()


class TestBlockBootstrap:
    def test_size_and_range(self, toy, rng):
        _, g = toy
        idx = block_bootstrap_indices(g, rng)
        assert idx.shape == (400,) and idx.min() >= 0 and idx.max() < 400

    def test_blocks_are_neighbourhoods(self):
        g = knn_graph(np.arange(10.0)[:, None] * np.array([[1.0, 0.0]]), 2)
        idx = block_bootstrap_indices(g, np.random.default_rng(4))
        first = int(idx[0])
        assert idx[1:3].tolist() == list(g.neighbors[first])


class TestMethods:
    def test_spatial_bootstrap_deterministic(self, toy):
        data, g = toy
        X = design_matrix(data)
        a = spatial_bootstrap(data, g, 3, seed=7).predict(X)
        b = spatial_bootstrap(data, g, 3, seed=7).predict(X)
        assert a.tobytes() == b.tobytes()
        assert len(spatial_bootstrap(data, g, 4, seed=7).members) == 4

    def test_gp_bagging_close_to_target(self, toy):
        data, _ = toy
        gp = fit_spatial_gp(data.coords, data.target)
        ens = gp_bagging(gp, data, 3, seed=1)
        pred = ens.predict(design_matrix(data))
        assert np.sqrt(np.mean((pred - data.target) ** 2)) < 0.5 * data.target.std()

    def test_design_matrix(self, toy):
        data, _ = toy
        X = design_matrix(data)
        assert X.shape == (400, 3)
        np.testing.assert_array_equal(X[:, 1:], data.coords)
