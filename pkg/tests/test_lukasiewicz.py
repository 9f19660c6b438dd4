"""Walk, ladder decomposition and genealogy read off the walk."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chronoforest.forest import build_forest
from chronoforest.lukasiewicz import (
    D_functional,
    ancestors_from_walk,
    chi,
    dual_passage_measure,
    dual_passage_time,
    first_passage_below,
    forward_ladder,
    ladder_decomp,
    max_drop,
    mrca,
    walk,
)
from chronoforest.measures import PointMeasure, Stick
from chronoforest.stochastic import GeometricUniformLaw

from conftest import REFERENCE_WALK


def test_reference_walk(reference_sticks):
    w = walk(reference_sticks)
    assert tuple(w.s) == REFERENCE_WALK
    assert tuple(w.counts) == (2, 2, 1, 0, 0, 3, 0, 0, 1, 0)


def test_walk_from_counts():
    w = walk([2, 0, 0])
    assert tuple(w.s) == (0, 1, 0, -1)


def test_first_passage_below(reference_sticks):
    w = walk(reference_sticks)
    assert first_passage_below(w, 0) == 0
    assert first_passage_below(w, 1) == 10
    assert first_passage_below(w, 2) is None
    assert first_passage_below(walk([0]), 1) == 1
    with pytest.raises(ValueError):
        first_passage_below(w, -1)


def test_max_drop(reference_sticks):
    w = walk(reference_sticks)
    # max over m < k <= n of S(m) - S(k), floored at 0
    assert max_drop(w, 0, 10) == 1
    assert max_drop(w, 1, 4) == 0
    assert max_drop(w, 2, 5) == 2
    assert max_drop(w, 4, 4) == 0


def test_chi_finds_children(reference_sticks):
    w = walk(reference_sticks)
    f = build_forest(reference_sticks)
    # chi(m, k) is the k-th child of m in exploration order.
    for m in range(10):
        kids = [i for i in range(10) if f.nodes[i].parent == m]
        for k, kid in enumerate(kids):
            assert chi(w, m, k) == kid
    assert chi(w, 0) == 10  # past the last child: the walk's final passage
    assert chi(w, 3) == 4  # childless stick: its subtree closes immediately
    with pytest.raises(ValueError):
        chi(w, 3, 1)


def test_ladder_decomp_reference_n3(reference_sticks):
    dec = ladder_decomp(reference_sticks, 3)
    assert dec.times == [1, 2, 3]
    assert dec.zetas == [0, 0, 0]
    assert [m.atoms for m in dec.measures] == [(0.9,), (1.2, 0.5), (1.5, 0.5)]
    assert dec.height == 3
    assert dec.height_sum() == pytest.approx(3.6)
    assert dec.stick_indices == [2, 1, 0]


def test_ladder_decomp_reference_n9(reference_sticks):
    dec = ladder_decomp(reference_sticks, 9)
    assert dec.times == [1, 4, 9]
    assert dec.zetas == [0, 2, 1]
    assert [m.atoms for m in dec.measures] == [(1.0,), (1.0,), (0.5,)]
    assert dec.height == 3
    assert dec.height_sum() == pytest.approx(2.5)
    assert dec.count_upto(4) == 2
    assert dec.first_epoch_at_or_after(2) == 2
    assert dec.first_epoch_at_or_after(10) is None


def test_ladder_matches_forest_everywhere(reference_sticks):
    f = build_forest(reference_sticks)
    for n in range(f.n_sticks + 1):
        dec = ladder_decomp(reference_sticks, n)
        assert dec.height == f.depths()[n]
        assert dec.height_sum() == pytest.approx(f.birth_times()[n])


def test_ancestors_from_walk(reference_sticks):
    w = walk(reference_sticks)
    f = build_forest(reference_sticks)
    for n in range(10):
        assert ancestors_from_walk(w, n) == f.ancestors(n)


def test_mrca_from_walk(reference_sticks):
    w = walk(reference_sticks)
    f = build_forest(reference_sticks)
    for m in range(10):
        for n in range(m, 10):
            assert mrca(w, m, n) == f.mrca(m, n)
    assert mrca(reference_sticks, 2, 4) == 1
    assert mrca(reference_sticks, 3, 7) == 0


def test_mrca_disjoint():
    sticks = [Stick(1.0), Stick(1.0, PointMeasure([1.0]))]
    assert mrca(sticks, 0, 1) is None


def test_dual_passage(reference_sticks):
    w = walk(reference_sticks)
    # From m = 0 no backward step exists, so every positive level is open.
    assert dual_passage_time(w, 0, 1) is None
    # Walking backward from 5, the walk first returns weakly below S(5) at
    # stick 0 (5 steps back); what survives of stick 0's births is the stub
    # stick 5 hangs from.
    assert dual_passage_time(w, 5, 0) == 5
    assert dual_passage_measure(reference_sticks, w, 5, 0).atoms == (0.5,)
    assert dual_passage_time(w, 5, 1) is None
    # From 9 one step back suffices: stick 8's single atom carries node 9.
    assert dual_passage_time(w, 9, 0) == 1
    assert dual_passage_measure(reference_sticks, w, 9, 0).atoms == (1.0,)
    assert dual_passage_time(w, 4, 0) == 3
    assert dual_passage_measure(reference_sticks, w, 4, 0).atoms == (0.5,)


def test_drop_functional(reference_sticks):
    assert D_functional(reference_sticks, 5, 0) == 0.0
    assert D_functional(reference_sticks, 5, 1) == pytest.approx(0.5)
    # Monotone in the level, bounded by the spine height.
    f = build_forest(reference_sticks)
    for n in range(1, 10):
        prev = 0.0
        for level in range(0, 4):
            d = D_functional(reference_sticks, n, level)
            assert d >= prev - 1e-12
            assert d <= f.birth_times()[n] + 1e-12
            prev = d


def test_forward_ladder(reference_sticks):
    rungs = forward_ladder(reference_sticks)
    times = [t for t, _, _, _ in rungs]
    assert times == sorted(times)
    assert all(t >= 1 for t in times)
    for _, gap, zeta, measure in rungs:
        assert gap >= 1
        assert zeta >= 0
        assert measure.mass >= 1


@given(st.lists(st.integers(0, 3), min_size=1, max_size=30))
def test_walk_is_cumulative(counts):
    w = walk(counts)
    assert w.s[0] == 0
    steps = np.diff(w.s)
    assert np.array_equal(steps, np.asarray(counts) - 1)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=25), st.data())
def test_ladder_count_is_weak_ascent_count(counts, data):
    """Brute-force duality: the decomposition at n lists exactly the j where
    the reversed increments reach a new weak maximum."""
    n = data.draw(st.integers(0, len(counts)))
    w = walk(counts)
    dual = [0]
    for j in range(1, n + 1):
        dual.append(w.s[n] - w.s[n - j])
    epochs = [j for j in range(1, n + 1) if dual[j] >= max(dual[:j])]
    sticks = [Stick(1.0, PointMeasure([1.0] * c)) for c in counts]
    dec = ladder_decomp(sticks, n)
    assert dec.times == epochs


def test_ladder_and_forest_agree_on_random_inputs(rng):
    law = GeometricUniformLaw(mean_offspring=0.9, v=1.0)
    for _ in range(15):
        sticks = law.sample_batch(rng, int(rng.integers(2, 60))).to_sticks()
        f = build_forest(sticks)
        for n in range(len(sticks) + 1):
            dec = ladder_decomp(sticks, n)
            assert dec.height == f.depths()[n]
            assert dec.height_sum() == pytest.approx(f.birth_times()[n], abs=1e-9)
