import numpy as np
import pytest

from propagator.grouping import (
    GroupingThresholds,
    RawGroup,
    _split_cluster,
    group_bruteforce,
    group_spectral,
    validate_group,
)


def block_matrix(sizes, within=1.0, cross=0.0, noise=0.0, seed=0):
    n = sum(sizes)
    s = np.full((n, n), cross)
    start = 0
    for size in sizes:
        s[start : start + size, start : start + size] = within
        start += size
    if noise:
        rng = np.random.default_rng(seed)
        bump = rng.uniform(0, noise, size=(n, n))
        bump = (bump + bump.T) / 2
        s = np.clip(s + bump, 0.0, 1.0)
    np.fill_diagonal(s, 1.0)
    return s


def members_sets(groups):
    return {frozenset(g.members) for g in groups if g.complete}


def test_bruteforce_recovers_perfect_blocks():
    s = block_matrix([2, 2, 2])
    groups = group_bruteforce(s, 2)
    assert members_sets(groups) == {frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})}
    assert all(g.complete for g in groups)


def test_bruteforce_n_equals_k():
    groups = group_bruteforce(np.ones((3, 3)), 3)
    assert len(groups) == 1
    assert set(groups[0].members) == {0, 1, 2}


def test_bruteforce_leftover_incomplete():
    s = block_matrix([2, 2, 2, 1])
    groups = group_bruteforce(s, 2)
    complete = [g for g in groups if g.complete]
    incomplete = [g for g in groups if not g.complete]
    assert len(complete) == 3
    assert len(incomplete) == 1
    assert incomplete[0].members == (6,)


def test_bruteforce_tie_takes_lower_index():
    groups = group_bruteforce(np.ones((3, 3)), 2)
    assert groups[0].members == (0, 1)
    assert groups[1].members == (2,)
    assert not groups[1].complete


def test_bruteforce_invalid_k():
    with pytest.raises(ValueError):
        group_bruteforce(np.ones((3, 3)), 4)
    with pytest.raises(ValueError):
        group_bruteforce(np.ones((3, 3)), 0)


def test_bruteforce_partition_property():
    rng = np.random.default_rng(13)
    for _ in range(20):
        n = int(rng.integers(2, 15))
        k = int(rng.integers(1, n + 1))
        x = rng.random((n, n))
        s = (x + x.T) / 2
        np.fill_diagonal(s, 1.0)
        groups = group_bruteforce(s, k)
        seen = [m for g in groups for m in g.members]
        assert sorted(seen) == list(range(n))
        complete = [g for g in groups if g.complete]
        assert len(complete) == n // k
        assert all(len(g.members) == k for g in complete)


def test_spectral_recovers_perfect_blocks():
    s = block_matrix([2, 2, 2])
    groups = group_spectral(s, 2)
    assert members_sets(groups) == {frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})}


def test_spectral_matches_bruteforce_on_noisy_blocks():
    s = block_matrix([3, 3], cross=0.01)
    spectral = group_spectral(s, 3)
    brute = group_bruteforce(s, 3)
    assert members_sets(spectral) == members_sets(brute) == {
        frozenset({0, 1, 2}),
        frozenset({3, 4, 5}),
    }


def test_spectral_n_equals_k():
    groups = group_spectral(np.ones((4, 4)), 4)
    assert len(groups) == 1
    assert set(groups[0].members) == {0, 1, 2, 3}


def test_spectral_is_deterministic():
    s = block_matrix([3, 3, 3], cross=0.02, noise=0.05, seed=5)
    first = group_spectral(s, 3)
    second = group_spectral(s, 3)
    assert first == second


def test_spectral_handles_zero_degree_rows():
    s = block_matrix([2, 2])
    s = np.pad(s, ((0, 1), (0, 1)))
    groups = group_spectral(s, 2)
    seen = sorted(m for g in groups for m in g.members)
    assert seen == [0, 1, 2, 3, 4]


def test_spectral_invalid_k():
    with pytest.raises(ValueError):
        group_spectral(np.ones((2, 2)), 3)


def test_split_cluster_extracts_dense_subsets():
    s = block_matrix([2, 2, 2], cross=0.1)
    groups = _split_cluster([0, 1, 2, 3, 4, 5], s, 2)
    assert members_sets(groups) == {frozenset({0, 1}), frozenset({2, 3}), frozenset({4, 5})}


def test_split_cluster_undersized_remainder():
    s = block_matrix([2, 2, 1], cross=0.1)
    groups = _split_cluster([0, 1, 2, 3, 4], s, 2)
    incomplete = [g for g in groups if not g.complete]
    assert len(incomplete) == 1
    assert len(incomplete[0].members) == 1


def test_raw_group_rejects_duplicates():
    with pytest.raises(ValueError):
        RawGroup(members=(1, 1), complete=True)


def test_thresholds_validate_range():
    with pytest.raises(ValueError):
        GroupingThresholds(t_group=1.5)


class TestValidateGroup:
    def test_all_ones_passes_half_thresholds(self):
        s = np.ones((2, 2))
        th = GroupingThresholds(0.5, 0.5, 0.5, 0.5)
        report = validate_group([0, 1], s, s, th)
        assert report.passed
        assert len(report.checks) == 4

    def test_zero_gamma_flags_stream_criterion(self):
        s_rd = np.array([[1.0, 0.0], [0.0, 0.0]])
        s_dd = np.ones((2, 2))
        report = validate_group([0, 1], s_rd, s_dd, GroupingThresholds(t_stream=0.1))
        assert not report.passed
        flagged = {c.name: c.passed for c in report.checks}
        assert flagged["stream_min"] is False

    def test_worked_example(self):
        s_rd = np.array([[0.9, 0.0], [0.0, 0.7]])
        s_dd = np.array([[1.0, 0.8], [0.8, 1.0]])
        th = GroupingThresholds(0.75, 0.6, 0.7, 0.7)
        report = validate_group([0, 1], s_rd, s_dd, th)
        assert report.passed
        values = {c.name: c.value for c in report.checks}
        assert values["group_mean"] == pytest.approx(0.8)
        assert values["stream_min"] == pytest.approx(0.7)
        assert values["pair_mean"] == pytest.approx(0.8)

    def test_incomplete_rejected_with_reason(self):
        report = validate_group([0], np.ones((1, 1)), np.ones((1, 1)),
                                GroupingThresholds(), complete=False)
        assert not report.passed
        assert report.reason == "incomplete"

    def test_singleton_pairwise_checks_vacuous(self):
        report = validate_group([0], np.ones((1, 1)), np.ones((1, 1)),
                                GroupingThresholds(s_allpair=0.9, s_pair=0.9))
        assert report.passed
        vacuous = [c for c in report.checks if c.value is None]
        assert len(vacuous) == 2

    def test_inequalities_are_strict(self):
        s = np.full((2, 2), 0.5)
        th = GroupingThresholds(0.5, 0.0, 0.0, 0.0)
        assert not validate_group([0, 1], s, np.ones((2, 2)), th).passed

    def test_raising_thresholds_is_monotone(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            k = int(rng.integers(1, 5))
            s_rd = rng.random((k, k))
            x = rng.random((k, k))
            s_dd = (x + x.T) / 2
            low = GroupingThresholds(*rng.uniform(0, 0.5, size=4).tolist())
            high = GroupingThresholds(
                *np.minimum(
                    np.array([low.t_group, low.t_stream, low.s_allpair, low.s_pair])
                    + rng.uniform(0, 0.5, size=4),
                    1.0,
                ).tolist()
            )
            members = list(range(k))
            if not validate_group(members, s_rd, s_dd, low).passed:
                assert not validate_group(members, s_rd, s_dd, high).passed
