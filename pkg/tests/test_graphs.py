import networkx as nx
import pytest

from diamond_embed.dyadic import Dyadic
from diamond_embed.graphs import (
    BundleGraph,
    BundleSpec,
    NotABundleError,
    VertexCode,
    build_coded,
    build_recursive,
    bundle_violation,
    check_isomorphism,
    count_recursive,
    diamond_base,
    enumerate_codes,
    laakso_base,
    oslash_product,
    parasol_base,
    single_edge,
    up_down_edge,
)

# |V_{k+1}| = |V_k| + w |E_k|, |E_{k+1}| = 2 w |E_k|, computed by hand
COUNTS = {(1, 3): 5, (2, 3): 23, (2, 2): 12, (3, 2): 44, (3, 3): 131, (4, 3): 779, (4, 4): 2342}


@pytest.mark.parametrize("kw,n", sorted(COUNTS.items()))
def test_vertex_counts(kw, n, coded, recursive):
    k, w = kw
    assert count_recursive(k, w)[0] == n
    assert coded(k, w).n == n
    if n < 1000:
        assert recursive("diamond", k, w).n == n


@pytest.mark.parametrize("k,w", [(1, 3), (2, 2), (2, 3), (3, 2)])
def test_isomorphic_both_ways(k, w, coded, recursive):
    a, b = recursive("diamond", k, w), coded(k, w)
    m = check_isomorphism(a, b)
    assert {(min(m[i], m[j]), max(m[i], m[j])) for i, j in a.edges} == set(b.edges)
    m2 = check_isomorphism(b, a)
    assert len(set(m2.values())) == a.n


def test_bases():
    assert (laakso_base(3).n, laakso_base(3).height) == (7, 4)
    assert (parasol_base(3).n, parasol_base(3).height) == (6, 3)
    for base in (laakso_base(2), parasol_base(2), diamond_base(4)):
        assert bundle_violation(base) is None


def test_not_a_bundle():
    # triangle: paths of length 1 and 2 between the terminals
    g = BundleGraph(n=3, edges=((0, 1), (0, 2), (1, 2)), bottom=0, top=1, height=1, family="custom")
    assert bundle_violation(g) is not None
    with pytest.raises(NotABundleError):
        BundleSpec("custom", 1, 2, base=g)


def test_single_edge_is_unit():
    d = diamond_base(3)
    assert nx.is_isomorphic(oslash_product(d, single_edge()).to_networkx(), d.to_networkx())


def test_oslash_associative():
    a, b, c = diamond_base(2), laakso_base(2), parasol_base(2)
    left = oslash_product(oslash_product(a, b), c)
    right = oslash_product(a, oslash_product(b, c))
    assert left.n == right.n == 92
    assert nx.is_isomorphic(left.to_networkx(), right.to_networkx())


def V(A, num, exp):
    return VertexCode(tuple(A), Dyadic(num, exp))


@pytest.mark.parametrize("v,down,up", [
    (V([1, 3], 1, 2), V([1], 1, 1), V([], 0, 0)),
    (V([1, 2, 4], 5, 3), V([1, 2], 3, 2), V([1], 1, 1)),
    (V([1, 2], 3, 2), V([], 1, 0), V([1], 1, 1)),
])
def test_up_down_edge(v, down, up):
    assert up_down_edge(v, v.depth) == (down, up)


def test_vertex_code_validation():
    with pytest.raises(ValueError):
        V([1, 3], 1, 1)  # 1/2 is not in level 2
    with pytest.raises(ValueError):
        V([2, 1], 1, 2)
    assert str(V([1, 2], 3, 2)) == "({1,2},3/2^2)"


@pytest.mark.parametrize("k,w", [(1, 2), (2, 3), (3, 2), (3, 3), (4, 2)])
def test_coded_invariants(k, w, coded):
    g = coded(k, w)
    assert g.height == 2**k
    assert len(g.edges) == (2 * w) ** k
    assert sorted(g.codes, key=str) == sorted(enumerate_codes(k, w), key=str)
    # every edge joins labels one step 2^-k apart, and every vertex but the terminals has both
    lv = g.levels
    for i, j in g.edges:
        assert abs(lv[i] - lv[j]) == 1
        assert abs(g.codes[i].r - g.codes[j].r) == Dyadic(1, k)
    for i in range(g.n):
        if i not in (g.bottom, g.top):
            assert {lv[j] - lv[i] for j in g.adjacency[i]} == {-1, 1}


@pytest.mark.parametrize("family,w", [("laakso", 2), ("parasol", 2), ("laakso", 3)])
def test_recursive_families_are_bundles(family, w, recursive):
    g = recursive(family, 2, w)
    assert bundle_violation(g, budget=50_000) is None
    assert g.height == base_height(family, w) ** 2


def base_height(family, w):
    return {"laakso": laakso_base, "parasol": parasol_base}[family](w).height


def test_bad_specs():
    with pytest.raises(ValueError):
        BundleSpec("diamond", -1, 2)
    with pytest.raises(ValueError):
        BundleSpec("diamond", 2, 1)
    with pytest.raises(ValueError):
        BundleSpec("torus", 2, 2)
    with pytest.raises(ValueError):
        build_coded(BundleSpec("laakso", 2, 2))
