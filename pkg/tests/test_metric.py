import numpy as np
import pytest

from diamond_embed.dyadic import Dyadic
from diamond_embed.graphs import BundleGraph, VertexCode
from diamond_embed.metric import (
    DisconnectedGraphError,
    bfs_all_pairs,
    bfs_single_source,
    closed_form_distance,
    closed_form_matrix,
    isometry_apply,
    isometry_inverse,
    vertical_mask,
    vertical_path_test,
)


@pytest.mark.parametrize("k,w", [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_closed_form_equals_bfs(k, w, coded):
    g = coded(k, w)
    assert np.array_equal(closed_form_matrix(g), bfs_all_pairs(g))


def test_single_source_matches_all_pairs(coded):
    g = coded(2, 3)
    dm = bfs_all_pairs(g)
    for s in (0, 5, g.n - 1):
        assert np.array_equal(bfs_single_source(g, s), dm[s])


def test_disconnected():
    g = BundleGraph(n=3, edges=((0, 1),), bottom=0, top=1, height=1, family="custom")
    with pytest.raises(DisconnectedGraphError):
        bfs_all_pairs(g)


def test_terminals_and_midpoints(coded):
    g = coded(2, 2)
    b, t = g.codes[g.bottom], g.codes[g.top]
    assert closed_form_distance(b, t, 2) == 4
    x = VertexCode((1,), Dyadic(1, 1))
    y = VertexCode((2,), Dyadic(1, 1))
    assert closed_form_distance(x, y, 2) == 4


def test_vertical_definitions_agree(coded):
    g = coded(3, 2)
    dm = bfs_all_pairs(g)
    mask = vertical_mask(g, dm)
    for i in range(g.n):
        for j in range(i + 1, g.n):
            assert mask[i, j] == vertical_path_test(g.codes[i], g.codes[j], g)


@pytest.mark.parametrize("which", ["down", "up", "flip"])
def test_isometries_preserve_distance(which, coded):
    k, j = 3, 1
    g = coded(k, 2)
    small = coded(k - 1, 2)
    dm = bfs_all_pairs(small)
    images = [isometry_inverse(which, c, k, j) for c in small.codes]
    for a in range(small.n):
        assert isometry_apply(which, images[a], k, j) == small.codes[a]
        for b in range(a + 1, small.n):
            # each half of a branch is an undistorted copy of the shallower diamond
            assert closed_form_distance(images[a], images[b], k) == dm[a, b]
    assert all(c in g.code_index for c in images)
