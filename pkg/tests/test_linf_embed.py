from fractions import Fraction

import pytest

from diamond_embed.distortion import SparseVector, evaluate
from diamond_embed.dyadic import Dyadic
from diamond_embed.graphs import VertexCode
from diamond_embed.linf_embed import (
    CoefficientTable,
    GoodTree,
    functional_coordinate,
    lp_parameter,
    psi,
    psi_all,
)
from diamond_embed.metric import bfs_all_pairs, vertical_mask


def test_coefficients_by_hand():
    c = CoefficientTable(2)
    assert c(0, Dyadic(3, 2)) == 3
    assert c(1, Dyadic(1, 2)) == 1
    assert c(1, Dyadic(3, 2)) == 1
    assert c(2, Dyadic(3, 2)) == 1
    assert c(0, 1) == 4 and c(0, 0) == 0
    with pytest.raises(ValueError):
        c(2, Dyadic(1, 1))


def test_psi_example():
    tree = GoodTree(2, 2)
    v = VertexCode((1, 2), Dyadic(3, 2))
    img = psi(2, v, tree)
    assert {tree.nodes[k]: val for k, val in img.items()} == {(): 3, (1,): 1, (1, 2): 1}


@pytest.mark.parametrize("k,eps,p", [(3, 0.6, 12), (1, 3, 2), (2, 1e9, 1), (1, 0.6, 8), (2, 0.6, 10)])
def test_lp_parameter(k, eps, p):
    assert lp_parameter(k, eps) == p
    e = Fraction(str(eps))
    assert (1 + e / 3) ** p >= 2 * k + 2
    assert p == 1 or (1 + e / 3) ** (p - 1) < 2 * k + 2


def test_lp_parameter_rejects_nonpositive():
    with pytest.raises(ValueError):
        lp_parameter(2, 0)


def test_tree_orders_by_max():
    tree = GoodTree(2, 2)
    maxes = [A[-1] if A else 0 for A in tree.nodes]
    assert maxes == sorted(maxes)
    assert tree.dimension == len(tree.nodes)
    assert GoodTree(2, 2, mode="max").dimension == 5


@pytest.mark.parametrize("k,w", [(1, 2), (2, 3), (3, 2), (3, 3)])
def test_functional_coordinate_is_height(k, w, coded):
    g = coded(k, w)
    for c in g.codes:
        assert functional_coordinate(c, k, GoodTree(k, w)) == c.r.scale_pow2(k)


# sup distortion of the tree embedding at w = 2; computed once by exhaustive evaluation
SUP_DISTORTION = {1: Fraction(2), 2: Fraction(2), 3: Fraction(8, 3), 4: Fraction(8, 3)}


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sup_distortion_values(k, coded):
    g = coded(k, 2)
    dm = bfs_all_pairs(g)
    rep = evaluate(psi_all(g), dm, "sup", vertical=vertical_mask(g, dm))
    assert rep.lipschitz_powered == 1
    assert rep.distortion_powered == SUP_DISTORTION[k]
    assert rep.classes["vertical"]["min_powered"] == 1
    assert rep.max_support == k + 1


def test_regression_k2_w3(coded):
    g = coded(2, 3)
    assert evaluate(psi_all(g), bfs_all_pairs(g), "sup").distortion_powered == 2


def test_shared_coordinates_distort_more(coded):
    g = coded(2, 2)
    rep = evaluate(psi_all(g, GoodTree(2, 2, mode="max")), bfs_all_pairs(g), "sup")
    assert rep.distortion_powered == 3


def test_depth_zero():
    from diamond_embed.graphs import BundleSpec, build_coded

    g = build_coded(BundleSpec("diamond", 0, 2))
    imgs = psi_all(g)
    assert sorted(imgs, key=len) == [SparseVector({}), SparseVector({0: 1})]
