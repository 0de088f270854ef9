import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diamond_embed.distortion import (
    MissingImageError,
    Norm,
    SparseVector,
    evaluate,
    evaluate_powered,
    norm,
    norm_powered,
)
from diamond_embed.dyadic import Dyadic
from diamond_embed.graphs import BundleSpec, build_coded
from diamond_embed.linf_embed import psi_all
from diamond_embed.metric import bfs_all_pairs, vertical_mask


def path_metric(n):
    idx = np.arange(n)
    return np.abs(idx[:, None] - idx[None, :])


def test_norms():
    v = SparseVector({0: 3, 1: -4, 2: 0})
    assert len(v) == 2
    assert norm(v, "sup") == 4
    assert norm(v, "l1") == 7
    assert norm_powered(v, "p:2") == 25
    assert norm(v, "p:2") == 5
    assert str(Norm.parse("p:1.5")) == "p:1.5"
    assert Norm.parse("p:1.5").p == Fraction(3, 2)
    with pytest.raises(ValueError):
        Norm.parse("p:0.5")
    with pytest.raises(ValueError):
        Norm.parse("banana")


def test_json_round_trip():
    v = SparseVector({"a": Dyadic(3, 2), "b": Fraction(1, 3), "c": 5})
    assert SparseVector.from_json(v.to_json()) == v


def test_isometric_line():
    imgs = [SparseVector({0: i}) for i in range(5)]
    rep = evaluate(imgs, path_metric(5), "sup")
    assert rep.distortion == 1.0
    assert rep.distortion_powered == 1
    assert rep.distortion_at_most(1)
    assert not rep.distortion_at_most(Fraction(99, 100))


def test_squashed_pair():
    imgs = [SparseVector({0: 0}), SparseVector({0: 1}), SparseVector({0: 1, 1: 1})]
    dm = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    rep = evaluate(imgs, dm, "p:2")
    # pair (0, 2): sqrt(2) / 2
    assert rep.colipschitz_powered == Fraction(1, 2)
    assert rep.lipschitz_powered == 1
    assert rep.distortion_powered == 2
    assert math.isclose(rep.distortion, math.sqrt(2))
    assert rep.colipschitz_pair == (0, 2)


def test_missing_image():
    with pytest.raises(MissingImageError):
        evaluate({0: SparseVector({0: 1})}, path_metric(2), "sup")


def test_fractional_p_is_float_only():
    imgs = [SparseVector({0: i, 1: i}) for i in range(3)]
    rep = evaluate(imgs, path_metric(3), "p:1.5")
    assert not rep.exact
    assert math.isclose(rep.distortion, 1.0)
    assert math.isclose(rep.lipschitz, 2 ** (1 / 1.5))


def test_powered_matches_vectors(coded):
    g = coded(2, 2)
    dm = bfs_all_pairs(g)
    imgs = psi_all(g)
    P = np.zeros((g.n, g.n), dtype=object)
    for i in range(g.n):
        for j in range(g.n):
            P[i, j] = int(norm_powered(imgs[i] - imgs[j], "p:2"))
    a = evaluate(imgs, dm, "p:2")
    b = evaluate_powered(P, dm, 2)
    assert a.lipschitz_powered == b.lipschitz_powered
    assert a.colipschitz_powered == b.colipschitz_powered


def test_classes(coded):
    g = coded(2, 3)
    dm = bfs_all_pairs(g)
    vert = vertical_mask(g, dm)
    rep = evaluate(psi_all(g), dm, "sup", vertical=vert)
    v = rep.classes["vertical"]
    assert v["max_powered"] == v["min_powered"] == 1
    assert rep.classes["vertical"]["pairs"] + rep.classes["nonvertical"]["pairs"] == rep.pairs
    assert rep.pairs == g.n * (g.n - 1) // 2


scales = st.fractions(min_value=Fraction(1, 50), max_value=50)


G22 = build_coded(BundleSpec("diamond", 2, 2))
DM22 = bfs_all_pairs(G22)
PSI22 = psi_all(G22)


@settings(max_examples=25, deadline=None)
@given(scales, st.sampled_from(["sup", "l1", "p:2", "p:3"]))
def test_rescaling(c, which):
    dm, imgs = DM22, PSI22
    a = evaluate(imgs, dm, which)
    b = evaluate([v.scale(c) for v in imgs], dm, which)
    q = int(Norm.parse(which).q)
    assert b.distortion_powered == a.distortion_powered
    assert b.lipschitz_powered == a.lipschitz_powered * c**q
    assert b.colipschitz_powered == a.colipschitz_powered * c**q


@settings(max_examples=25, deadline=None)
@given(st.permutations(range(12)))
def test_permutation_invariance(perm):
    dm, imgs = DM22, PSI22
    perm = np.array(perm)
    a = evaluate(imgs, dm, "p:2")
    b = evaluate([imgs[i] for i in perm], dm[np.ix_(perm, perm)], "p:2")
    assert (a.lipschitz_powered, a.colipschitz_powered) == (b.lipschitz_powered, b.colipschitz_powered)


def test_spot_check_ratios(coded):
    g = coded(3, 3)
    dm = bfs_all_pairs(g)
    imgs = psi_all(g)
    rep = evaluate(imgs, dm, "p:2")
    rng = np.random.default_rng(0)
    for _ in range(100):
        i, j = rng.choice(g.n, size=2, replace=False)
        r2 = Fraction(int(norm_powered(imgs[i] - imgs[j], "p:2")), int(dm[i, j]) ** 2)
        assert rep.colipschitz_powered <= r2 <= rep.lipschitz_powered
