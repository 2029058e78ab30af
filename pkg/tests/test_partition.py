import numpy as np
import pytest

from dprep import ConfigError, Dataset, PartitionPlan, make_partition, subset_view


def test_exact_division():
    plan = make_partition(10, 5, seed=1)
    assert plan.sizes.tolist() == [2, 2, 2, 2, 2]
    all_rows = np.concatenate([plan.rows_of(l) for l in range(5)])
    assert sorted(all_rows.tolist()) == list(range(10))


def test_remainder_rule_lowest_indexed_subsets():
    plan = make_partition(11, 5, seed=3)
    assert plan.sizes.tolist() == [3, 2, 2, 2, 2]
    plan = make_partition(17, 4, seed=3)
    assert plan.sizes.tolist() == [5, 4, 4, 4]


def test_single_subset_is_identity():
    ds = Dataset({"v": np.array([3.0, 1.0, 4.0, 1.0, 5.0, 9.0])})
    plan = make_partition(6, 1, seed=9)
    sub = subset_view(ds, plan, 0)
    assert sub.column("v").tolist() == ds.column("v").tolist()
    assert sub.column("v").mean() == ds.column("v").mean()


def test_argument_errors():
    with pytest.raises(ConfigError, match="exceed"):
        make_partition(4, 5, seed=0)
    with pytest.raises(ConfigError):
        make_partition(4, 0, seed=0)


def test_reproducible_and_seed_sensitive():
    a = make_partition(100, 7, seed=42)
    b = make_partition(100, 7, seed=42)
    c = make_partition(100, 7, seed=43)
    assert np.array_equal(a.assignment, b.assignment)
    assert not np.array_equal(a.assignment, c.assignment)


def test_uniform_assignment_over_seeds():
    # each row should land in each of 4 subsets about a quarter of the time
    n_seeds, N, M = 10_000, 100, 4
    counts = np.zeros((N, M))
    for seed in range(n_seeds):
        assignment = make_partition(N, M, seed=seed).assignment
        counts[np.arange(N), assignment] += 1
    freq = counts / n_seeds
    assert np.all(np.abs(freq - 0.25) <= 0.02)


def test_record_round_trip():
    plan = make_partition(23, 4, seed=77)
    record = plan.to_record()
    assert '"assignment"' not in record  # assignment is recomputable, never stored
    clone = PartitionPlan.from_record(record)
    assert np.array_equal(clone.assignment, plan.assignment)


def test_subset_view_order_and_mismatch():
    ds = Dataset({"v": np.arange(12.0)})
    plan = make_partition(12, 3, seed=5)
    for l in range(3):
        v = subset_view(ds, plan, l).column("v")
        assert np.all(np.diff(v) > 0)  # original order preserved
    with pytest.raises(ConfigError, match="plan covers"):
        subset_view(Dataset({"v": np.arange(5.0)}), plan, 0)
    with pytest.raises(ConfigError):
        plan.rows_of(3)
