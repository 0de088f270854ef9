"""Acceptance criteria, each with its own time limit.

Run under pytest (a summary line per criterion is printed at the end) or
directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import time
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from diamond_embed.bounds import check_lemma51, grid_curve, lower_bound_curve, restricted_report
from diamond_embed.distortion import evaluate, evaluate_powered
from diamond_embed.dyadic import Dyadic
from diamond_embed.graphs import BundleSpec, build_coded, build_recursive, check_isomorphism
from diamond_embed.l1_embed import build_S, l1_distance_matrix
from diamond_embed.linf_embed import lp_parameter, psi_all
from diamond_embed.lp_transfer import frechet_base, transfer
from diamond_embed.metric import bfs_all_pairs, closed_form_matrix, vertical_mask

RESULTS: dict[int, tuple[bool, str]] = {}


def _counts(k, w):
    # |V_{j+1}| = |V_j| + w |E_j|, |E_{j+1}| = 2 w |E_j|, starting from one edge
    v, e = 2, 1
    for _ in range(k):
        v, e = v + w * e, 2 * w * e
    return v


def _coded(k, w):
    return build_coded(BundleSpec("diamond", k, w))


def criterion_1():
    for k, w in [(1, 3), (2, 3), (2, 2), (3, 2)]:
        spec = BundleSpec("diamond", k, w)
        rec, cod = build_recursive(spec), build_coded(spec)
        n = _counts(k, w)
        assert rec.n == cod.n == n, (k, w, rec.n, cod.n, n)
        m = check_isomorphism(rec, cod)
        assert {tuple(sorted((m[i], m[j]))) for i, j in rec.edges} == set(cod.edges)
    assert _counts(2, 3) == 23 and _counts(3, 2) == 44
    return "4 isomorphisms, counts 5/23/12/44"


def criterion_2():
    pairs = 0
    for k in (1, 2, 3):
        for w in (2, 3):
            g = _coded(k, w)
            assert np.array_equal(closed_form_matrix(g), bfs_all_pairs(g)), (k, w)
            pairs += g.n * (g.n - 1) // 2
    return f"{pairs} pairs equal"


def criterion_3():
    worst = Fraction(0)
    for k in (1, 2, 3, 4):
        for w in (2, 3):
            g = _coded(k, w)
            dm = bfs_all_pairs(g)
            imgs = psi_all(g)
            rep = evaluate(imgs, dm, "sup", vertical=vertical_mask(g, dm))
            assert rep.distortion_at_most(3), (k, w, rep.distortion)
            v = rep.classes["vertical"]
            assert v["max_powered"] == v["min_powered"] == 1, (k, w)
            assert max(len(x) for x in imgs) <= k + 1
            worst = max(worst, rep.distortion_powered)
    return f"max distortion {worst}"


def criterion_4():
    worst = 0.0
    for k in (1, 2, 3):
        p = lp_parameter(k, 0.6)
        for w in (2, 3):
            g = _coded(k, w)
            rep = evaluate(psi_all(g), bfs_all_pairs(g), f"p:{p}")
            assert rep.exact
            assert rep.distortion_at_most(Fraction(18, 5)), (k, w, p, rep.distortion)
            worst = max(worst, rep.distortion)
    return f"max distortion {worst:.4f}"


def criterion_5():
    for k in (1, 2, 3):
        for w in (2, 3):
            g = _coded(k, w)
            for c in g.codes:
                assert build_S(k, c).measure() == c.r
            dm = bfs_all_pairs(g)
            vert = vertical_mask(g, dm)
            M = l1_distance_matrix(g, "closed")
            assert (M == l1_distance_matrix(g, "atoms")).all(), (k, w)
            for i, j in combinations(range(g.n), 2):
                d = int(dm[i, j])
                assert Dyadic(d, 1) <= M[i, j] <= d
                if vert[i, j]:
                    assert M[i, j] == d
    return "measures, window, vertical equality and atom oracle hold"


def criterion_6():
    for k in (1, 2, 3):
        emb = transfer(frechet_base(k), 2)
        g = emb.graph
        dm = bfs_all_pairs(g)
        vert = vertical_mask(g, dm)
        for p in (1, 2):
            N, den = emb.pairwise_powered(p)
            for i, j in g.edges:
                assert N[i, j] <= den
            for i, j in combinations(range(g.n), 2):
                dp = int(dm[i, j]) ** p * den
                assert 2 * N[i, j] >= dp
                if vert[i, j]:
                    assert N[i, j] >= dp
            # distortion^p = max ratio^p / min ratio^p, compared exactly
            ratio = evaluate_powered(N, dm, p, den=den).distortion_powered
            assert ratio <= 2, (k, p, ratio)
    return "edges 1-Lipschitz, vertical >= d, all >= d / 2^(1/p)"


def criterion_7():
    hits = []
    for p in ("1.5", "2", "4"):
        res = check_lemma51(8, f"p:{p}", 10_000, seed=0)
        assert res.violations == 0, (p, res.examples)
        hits.append(res.bar_hits)
    return f"0 violations; Bar hits {hits}"


def criterion_8():
    worst = 0.0
    for p in (2, 4):
        for rho in (1, 2):
            c = lower_bound_curve(p, 1.0, rho, 20)
            assert all(b >= a for a, b in zip(c.values, c.values[1:]))
            assert all(v >= f * (1 - 1e-9) for v, f in zip(c.values, c.floors))
            grid = grid_curve(p, 1.0, rho, 20)
            worst = max(worst, max(abs(a - b) / a for a, b in zip(c.values, grid)))
    assert worst <= 1e-9
    return f"bisection vs grid rel. error {worst:.1e}"


def criterion_9():
    series = []
    for k in (1, 2, 3, 4):
        g = _coded(k, 2)
        rep = evaluate(psi_all(g), bfs_all_pairs(g), "p:2")
        series.append(rep.distortion_powered)
    assert all(b >= a for a, b in zip(series, series[1:])), series
    for k in (2, 3, 4):
        for w in (2, 3):
            g = _coded(k, w)
            imgs = psi_all(g)
            for norm in ("sup", "p:2"):
                full, part = restricted_report(g, imgs, norm)
                assert part.distortion_powered <= full.distortion_powered, (k, w, norm)
    return "p=2 distortions " + ", ".join(f"{float(x) ** 0.5:.4f}" for x in series)


CRITERIA = [
    (1, "construction equivalence", criterion_1, 5),
    (2, "metric oracle agreement", criterion_2, 10),
    (3, "sup-norm tree embedding", criterion_3, 30),
    (4, "lp reading with eps = 0.6", criterion_4, 60),
    (5, "Bernoulli L1 embedding", criterion_5, 60),
    (6, "Lp transfer", criterion_6, 120),
    (7, "barycenters lie in Mid", criterion_7, 10),
    (8, "lower-bound curves", criterion_8, 1),
    (9, "growth trend and restriction", criterion_9, 60),
]


def _run(num, fn, limit):
    t0 = time.perf_counter()
    try:
        detail = fn()
        ok = True
    except AssertionError as exc:
        detail, ok = f"assertion failed: {exc}", False
    elapsed = time.perf_counter() - t0
    if ok and elapsed >= limit:
        ok, detail = False, f"{detail}; too slow"
    RESULTS[num] = (ok, f"{detail} [{elapsed:.2f}s / {limit}s]")
    return ok


@pytest.mark.parametrize("num,name,fn,limit", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(num, name, fn, limit):
    ok = _run(num, fn, limit)
    assert ok, RESULTS[num][1]


def summary_lines() -> list[str]:
    names = {num: name for num, name, _, _ in CRITERIA}
    return [f"{'PASS' if ok else 'FAIL'} criterion {num} ({names[num]}): {detail}"
            for num, (ok, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    for num, _, fn, limit in CRITERIA:
        _run(num, fn, limit)
    print("\n".join(summary_lines()))
