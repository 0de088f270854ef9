from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from diamond_embed.distortion import Norm, SparseVector
from diamond_embed.lp_transfer import (
    BaseEmbedding,
    StepFunction,
    TooManyBitsError,
    UncertifiedBaseError,
    bits_used,
    certify,
    frechet_base,
    full_expansion_powered,
    lp_distance_powered,
    restrict_to_subdiamond,
    transfer,
)
from diamond_embed.metric import bfs_all_pairs, vertical_mask

_CACHE = {}


def emb(k, w):
    if (k, w) not in _CACHE:
        _CACHE[k, w] = transfer(frechet_base(k), w)
    return _CACHE[k, w]


def test_frechet_is_isometric():
    base = frechet_base(2)
    assert certify(base) == 1


def test_halved_base_has_C_two():
    base = frechet_base(2)
    half = BaseEmbedding(base.graph, [v.scale(Fraction(1, 2)) for v in base.images], base.norm,
                         list(range(base.graph.n)))
    assert certify(half) == 2


def test_expanding_base_rejected():
    base = frechet_base(1)
    doubled = BaseEmbedding(base.graph, [v.scale(2) for v in base.images], base.norm, list(range(base.graph.n)))
    with pytest.raises(UncertifiedBaseError):
        certify(doubled)


@pytest.mark.parametrize("which", ["l+", "r+", "l-", "r-"])
def test_subdiamond_restriction_is_isometric(which):
    phi = restrict_to_subdiamond(frechet_base(3), which)
    assert phi.graph.depth == 2
    assert certify(phi) == 1
    with pytest.raises(ValueError):
        restrict_to_subdiamond(frechet_base(1), which)


def test_step_function_distance():
    pal = [SparseVector({0: 0}), SparseVector({0: 2})]
    f = StepFunction((0,), np.array([0, 1], dtype=np.int32), pal)
    g = StepFunction.constant(0, pal)
    # differs on half the space by 2 in sup norm
    assert lp_distance_powered(f, g, 1) == 1
    assert lp_distance_powered(f, g, 2) == 2
    assert f.value_indices() == {0: Fraction(1, 2), 1: Fraction(1, 2)}


@pytest.mark.parametrize("k,w,n", [(1, 2, 2), (1, 3, 3), (2, 2, 10), (2, 3, 15), (3, 2, 42), (3, 3, 63)])
def test_bit_budget(k, w, n):
    assert bits_used(k, w) == n
    if k < 3:
        e = emb(k, w)
        assert e.n_bits == n
        assert max(len(f.deps) for f in e.functions) == 2**k - 1


@pytest.mark.parametrize("k,w", [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)])
@pytest.mark.parametrize("p", [1, 2])
def test_transfer_bounds(k, w, p):
    e = emb(k, w)
    g = e.graph
    dm = bfs_all_pairs(g)
    vert = vertical_mask(g, dm)
    N, den = e.pairwise_powered(p)
    assert not e.provenance_violations()
    for i, j in g.edges:
        assert N[i, j] <= den
    for i, j in combinations(range(g.n), 2):
        dp = int(dm[i, j]) ** p
        assert N[i, j] <= dp * den
        assert 2 * N[i, j] >= dp * den
        if vert[i, j]:
            assert N[i, j] >= dp * den


def test_matches_full_expansion():
    e = emb(2, 2)
    for i, j in combinations(range(e.graph.n), 2):
        assert full_expansion_powered(e, i, j, 1) == e.lp_powered(i, j, 1)


def test_full_expansion_guard():
    with pytest.raises(TooManyBitsError):
        full_expansion_powered(transfer(frechet_base(3), 2), 0, 1, 1)


def test_bad_width():
    with pytest.raises(ValueError):
        transfer(frechet_base(1), 1)
