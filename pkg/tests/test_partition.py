import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roughlab.partition import (PartitionError, certify, check_balanced, check_complete_refining,
                                check_finitely_refining, check_refining, child_index_map,
                                estimate_convergent_ratio, from_levels, is_dyadic, make_badic,
                                make_dyadic, make_random_refining)


def test_dyadic_levels():
    seq = make_dyadic(1.0, 1)
    assert seq[0].tolist() == [0.0, 1.0]
    assert seq[1].tolist() == [0.0, 0.5, 1.0]
    assert make_dyadic(1.0, 0).depth == 0
    assert make_dyadic(2.0, 2)[2].tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]


@pytest.mark.parametrize("T,n", [(0.0, 2), (-1.0, 2), (1.0, -1)])
def test_dyadic_rejects_bad_args(T, n):
    with pytest.raises(PartitionError):
        make_dyadic(T, n)


def test_badic():
    seq = make_badic(1.0, 3, 1)
    assert np.allclose(seq[1], [0, 1 / 3, 2 / 3, 1])
    for n in range(6):
        assert np.array_equal(make_badic(1.0, 2, 5)[n], make_dyadic(1.0, 5)[n])
    cert = certify(make_badic(1.0, 3, 6))
    assert cert.M == 3 and cert.c == pytest.approx(1.0) and cert.r_estimate == pytest.approx(3.0)
    with pytest.raises(PartitionError):
        make_badic(1.0, 1, 3)


def test_badic_nesting_is_exact():
    for base in (2, 3, 5, 7):
        seq = make_badic(0.7, base, 5 if base < 5 else 4)
        assert check_refining(seq)
        for n in range(seq.depth):
            assert np.array_equal(seq[n + 1][::base], seq[n])


def test_check_refining():
    assert check_refining(make_dyadic(1.0, 5))
    assert not check_refining(from_levels(1.0, [[0, 1], [0, 0.3, 1], [0, 0.5, 1]]))
    assert check_refining(from_levels(1.0, [[0, 1]]))


def test_level_validation():
    with pytest.raises(PartitionError):
        from_levels(1.0, [[0, 0.5]])
    with pytest.raises(PartitionError):
        from_levels(1.0, [[0, 1], [0, 0.6, 0.4, 1]])
    with pytest.raises(PartitionError):
        from_levels(1.0, [[0, 0.5, 1]])


def test_finitely_refining():
    assert check_finitely_refining(make_dyadic(1.0, 6)) == 2
    assert check_finitely_refining(make_badic(1.0, 3, 4)) == 3
    seq = make_random_refining(1.0, 6, max_children=4, ratio_cap=4.0, seed=2)
    assert check_finitely_refining(seq) <= 4
    with pytest.raises(PartitionError):
        check_finitely_refining(from_levels(1.0, [[0, 1], [0, 0.3, 1], [0, 0.5, 1]]))


def test_balanced():
    assert check_balanced(make_dyadic(1.0, 5)) == 1.0
    seq = from_levels(1.0, [[0, 1], [0, 0.2, 0.4, 1]])
    assert check_balanced(seq) == pytest.approx(3.0)


def test_complete_refining():
    assert check_complete_refining(make_dyadic(1.0, 5)) == (1.0, 2.0)
    a, b = check_complete_refining(make_badic(1.0, 3, 4))
    assert a == pytest.approx(2.0) and b == pytest.approx(3.0)
    stalled = from_levels(1.0, [[0, 1], [0, 0.5, 1], [0, 0.25, 0.5, 1]])
    with pytest.raises(PartitionError):
        check_complete_refining(stalled)


def test_convergent_ratio():
    assert estimate_convergent_ratio(make_dyadic(1.0, 8), 5) == (2.0, 0.0)
    r, d = estimate_convergent_ratio(make_badic(1.0, 3, 6), 5)
    assert r == pytest.approx(3.0) and d < 1e-6
    seq = make_random_refining(1.0, 8, seed=4)
    a, b = check_complete_refining(seq)
    r, _ = estimate_convergent_ratio(seq, 5)
    assert 1 + a <= r <= b
    with pytest.raises(PartitionError):
        estimate_convergent_ratio(make_dyadic(1.0, 1), 5)


def test_child_index_map():
    seq = make_dyadic(1.0, 3)
    assert child_index_map(seq, 1, 1) == 2
    assert child_index_map(seq, 2, 0) == 0
    with pytest.raises(IndexError):
        child_index_map(seq, 1, 5)


def test_is_dyadic():
    assert is_dyadic(make_dyadic(1.0, 4))
    assert is_dyadic(from_levels(1.0, [list(l) for l in make_dyadic(1.0, 3).levels]))
    assert not is_dyadic(make_badic(1.0, 3, 2))


def test_random_refining_deterministic():
    a = make_random_refining(1.0, 6, seed=11)
    b = make_random_refining(1.0, 6, seed=11)
    assert all(np.array_equal(x, y) for x, y in zip(a.levels, b.levels))


def test_random_refining_unit_cap():
    seq = make_random_refining(1.0, 5, max_children=3, ratio_cap=1.0, seed=0)
    assert check_balanced(seq) == pytest.approx(1.0)


def test_random_refining_infeasible():
    with pytest.raises(PartitionError):
        make_random_refining(1.0, 5, max_children=1)


def test_stats_invariants():
    seq = make_random_refining(2.0, 6, seed=5)
    for n in range(seq.depth + 1):
        s = seq.stats(n)
        assert s.min_step <= s.mesh
        assert s.N * s.min_step <= seq.T * (1 + 1e-12)
        assert s.N * s.mesh >= seq.T * (1 - 1e-12)


def test_certificate_invariants():
    cert = certify(make_random_refining(1.0, 7, seed=9))
    assert cert.refining
    assert cert.c >= 1
    assert 1 + cert.a <= cert.b
    assert cert.M_interior == cert.M - 1


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), children=st.integers(2, 5), depth=st.integers(1, 6))
def test_random_refining_properties(seed, children, depth):
    seq = make_random_refining(1.0, depth, max_children=children, ratio_cap=5.0, seed=seed)
    assert check_refining(seq)
    assert check_finitely_refining(seq) <= children
    for n in range(depth):
        pm = seq.parent_map(n)
        assert pm[0] == 0 and pm[-1] == seq.n_intervals(n + 1)
        assert np.all(np.diff(pm) > 0)
        assert np.array_equal(seq[n + 1][pm], seq[n])
        # points of every coarser level survive verbatim
        for m in range(n):
            assert np.all(np.isin(seq[m], seq[n + 1]))
