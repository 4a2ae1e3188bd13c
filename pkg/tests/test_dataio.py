import numpy as np
import pytest

from holarchy.dataio import (PlanFileError, generate_synthetic, load_plans, parse_plan_file,
                             write_plans)
from holarchy.plans import DimensionError, make_plan_set


def test_synthetic_shape_and_costs():
    sets = generate_synthetic(5, k=3, d=7, seed=1)
    assert len(sets) == 5
    assert all(ps.matrix.shape == (3, 7) for ps in sets)
    assert [p.raw_cost for p in sets[0].plans] == [0, 1, 2]
    single = generate_synthetic(2, k=1, d=3)
    assert single[0].plans[0].local_cost == 0


def test_synthetic_deterministic(tmp_path):
    write_plans(tmp_path / "a", generate_synthetic(4, 5, 6, seed=9))
    write_plans(tmp_path / "b", generate_synthetic(4, 5, 6, seed=9))
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_synthetic_moments():
    sets = generate_synthetic(20, k=16, d=400, seed=3)
    x = np.stack([ps.matrix for ps in sets]).ravel()
    n = x.size
    assert n >= 1e5
    assert abs(x.mean()) < 3 / np.sqrt(n)
    assert abs(x.var() - 1) < 3 * np.sqrt(2 / n)


def test_parse_line(tmp_path):
    f = tmp_path / "agent_0.plans"
    f.write_text("0.5:1.0,2.0\n")
    ps = parse_plan_file(f, 0, normalize=False)
    assert ps.plans[0].raw_cost == 0.5
    assert ps.matrix.tolist() == [[1.0, 2.0]]


def test_parse_errors(tmp_path):
    empty = tmp_path / "agent_0.plans"
    empty.write_text("")
    with pytest.raises(PlanFileError):
        parse_plan_file(empty, 0)
    bad = tmp_path / "agent_1.plans"
    bad.write_text("0:1,2\n1:1,x\n")
    with pytest.raises(PlanFileError, match=r"agent_1\.plans:2"):
        parse_plan_file(bad, 1)
    negative = tmp_path / "agent_2.plans"
    negative.write_text("-1:1,2\n")
    with pytest.raises(PlanFileError):
        parse_plan_file(negative, 2)


def test_dimension_mismatch(tmp_path):
    rng = np.random.default_rng(0)
    write_plans(tmp_path, [make_plan_set(0, rng.normal(size=(2, 100)), [0, 1]),
                           make_plan_set(1, rng.normal(size=(2, 98)), [0, 1])])
    with pytest.raises(DimensionError):
        load_plans(tmp_path)


def test_round_trip_bytes(tmp_path):
    sets = generate_synthetic(3, 4, 5, seed=2)
    write_plans(tmp_path / "a", sets)
    loaded = load_plans(tmp_path / "a")
    write_plans(tmp_path / "b", loaded)
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()
    for x, y in zip(sets, loaded):
        assert np.array_equal(x.matrix, y.matrix)
        assert np.array_equal(x.local_costs, y.local_costs)


def test_heterogeneous_plan_counts(tmp_path):
    write_plans(tmp_path, [make_plan_set(0, [[1, 2]], [0]), make_plan_set(1, [[1, 2], [3, 4]], [0, 1])])
    sets = load_plans(tmp_path)
    assert [len(ps) for ps in sets] == [1, 2]


def test_missing_directory(tmp_path):
    with pytest.raises(PlanFileError):
        load_plans(tmp_path / "nope")
