import numpy as np
import pytest

from spacegan.cv import buffer_violations, spatial_folds
from spacegan.datasets import gen_toy1
from spacegan.errors import EmptyFoldError
from spacegan.weights import knn_graph, queen_graph


@pytest.fixture(scope="module")
def toy1_plan():
    d = gen_toy1(0)
    g = queen_graph(20, 20)
    return d, g, spatial_folds(d.coords, g, 5)


def test_ten_folds_of_eighty(toy1_plan):
    _, _, plan = toy1_plan
    assert plan.n_folds == 10
    assert [f.test.size for f in plan] == [80] * 10


def test_partition_per_axis(toy1_plan):
    _, _, plan = toy1_plan
    for axis in (0, 1):
        tests = [f.test for f in plan if f.axis == axis]
        allidx = np.concatenate(tests)
        assert np.array_equal(np.sort(allidx), np.arange(400))


def test_each_point_tested_twice(toy1_plan):
    _, _, plan = toy1_plan
    counts = np.bincount(np.concatenate([f.test for f in plan]), minlength=400)
    assert np.all(counts == 2)


def test_roles_partition_and_buffer(toy1_plan):
    _, g, plan = toy1_plan
    for fold in plan:
        sets = [set(fold.train.tolist()), set(fold.buffer.tolist()), set(fold.test.tolist())]
        assert sum(map(len, sets)) == 400
        assert set.union(*sets) == set(range(400))
        assert buffer_violations(fold, g) == 0


def test_directed_knn_buffer(rng):
    coords = rng.random((120, 2))
    g = knn_graph(coords, 6)
    for fold in spatial_folds(coords, g, 3):
        assert buffer_violations(fold, g) == 0
        assert np.intersect1d(fold.train, fold.test).size == 0


def test_last_bin_closed_above():
    coords = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    g = knn_graph(coords, 1)
    plan = spatial_folds(coords, g, 2)
    assert plan[1].test.tolist() == [2, 3]


def test_empty_bin():
    coords = np.array([[0.0, 0.0], [0.1, 0.0], [0.2, 0.0], [10.0, 0.0]] + [[0.05 * i, 1.0] for i in range(2)])
    g = knn_graph(coords, 1)
    with pytest.raises(EmptyFoldError) as exc:
        spatial_folds(coords, g, 3)
    assert exc.value.axis == 0 and exc.value.bin_index == 1


def test_csv(tmp_path, toy1_plan):
    _, _, plan = toy1_plan
    plan.to_csv(tmp_path / "folds.csv")
    lines = (tmp_path / "folds.csv").read_text().splitlines()
    assert lines[0] == "index,fold,role"
    assert len(lines) == 1 + 400 * 10
    roles = [l.split(",")[2] for l in lines[1:]]
    assert roles.count("test") == 800
