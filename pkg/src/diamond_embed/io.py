"""File formats: graph and embedding JSON, distance and pair CSV, atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .distortion import SparseVector, as_rational
from .dyadic import Dyadic, to_dyadic
from .graphs import BundleGraph, VertexCode, _recipe_codes

__all__ = [
    "atomic_write_text",
    "dump_json",
    "graph_to_json",
    "graph_from_json",
    "load_graph",
    "embedding_to_json",
    "embedding_from_json",
    "rational_to_json",
    "rational_to_str",
    "rational_from_str",
    "matrix_csv",
    "read_matrix_csv",
    "pairs_csv",
    "read_pairs_csv",
]


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write through a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def rational_to_json(x) -> dict:
    x = as_rational(x)
    if isinstance(x, Fraction):
        return {"num": x.numerator, "den": x.denominator}
    d = to_dyadic(x)
    return {"num": d.num, "exp": d.exp}


def rational_to_str(x) -> str:
    x = as_rational(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    d = to_dyadic(x)
    return f"{d.num}/2^{d.exp}"


def rational_from_str(text: str):
    text = text.strip()
    if "/2^" in text:
        num, exp = text.split("/2^")
        return Dyadic(int(num), int(exp))
    return as_rational(Fraction(text))


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

def graph_to_json(g: BundleGraph) -> dict:
    """Serialise a graph; recursively built diamonds also get the codes of their isomorphic image."""
    codes = g.codes
    if codes is None and g.origins is not None:
        codes = _recipe_codes(g)
    vertices = []
    for i in range(g.n):
        v: dict[str, Any] = {"id": i}
        if codes is not None:
            v["A"] = list(codes[i].A)
            v["r"] = {"num": codes[i].r.num, "exp": codes[i].r.exp}
        if g.origins is not None and g.origins[i] is not None:
            v["origin"] = list(g.origins[i])
        vertices.append(v)
    return {
        "family": g.family,
        "depth": g.depth,
        "branching": g.branching,
        "height": g.height,
        "bottom": g.bottom,
        "top": g.top,
        "vertices": vertices,
        "edges": [list(e) for e in g.edges],
    }


def graph_from_json(data: dict) -> BundleGraph:
    try:
        verts = sorted(data["vertices"], key=lambda v: v["id"])
        n = len(verts)
        if [v["id"] for v in verts] != list(range(n)):
            raise ValueError("vertex ids must be 0..n-1")
        codes = None
        if verts and all("A" in v and "r" in v for v in verts):
            codes = tuple(VertexCode(tuple(v["A"]), to_dyadic(v["r"])) for v in verts)
        origins = None
        if any("origin" in v for v in verts):
            origins = tuple(tuple(v["origin"]) if "origin" in v else None for v in verts)
        edges = tuple(sorted((min(i, j), max(i, j)) for i, j in data["edges"]))
        return BundleGraph(
            n=n, edges=edges, bottom=int(data["bottom"]), top=int(data["top"]),
            height=int(data["height"]), family=data.get("family", "custom"),
            depth=int(data.get("depth", 0)), branching=int(data.get("branching", 0)),
            codes=codes, origins=origins,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph file: {exc}") from None


def load_graph(path: str | os.PathLike) -> BundleGraph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------

def embedding_to_json(images: Sequence[SparseVector]) -> dict:
    return {str(i): v.to_json() for i, v in enumerate(images)}


def embedding_from_json(data: dict, n: int) -> list[SparseVector]:
    out = []
    for i in range(n):
        try:
            out.append(SparseVector.from_json(data[str(i)]))
        except KeyError:
            raise ValueError(f"embedding has no image for vertex {i}") from None
    return out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _csv_text(rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def matrix_csv(M: np.ndarray, fmt=str) -> str:
    """Square matrix with vertex ids in the first row and column."""
    n = M.shape[0]
    rows = [[""] + list(range(n))]
    for i in range(n):
        rows.append([i] + [fmt(M[i, j]) for j in range(n)])
    return _csv_text(rows)


def read_matrix_csv(path) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    n = len(rows) - 1
    M = np.zeros((n, n), dtype=np.int64)
    for i, row in enumerate(rows[1:]):
        M[i] = [int(x) for x in row[1:]]
    return M


PAIR_HEADER = ["i", "j", "q", "powered", "root", "target"]


def pairs_csv(entries: Iterable[tuple[int, int, Any, Any, float]], target: str) -> str:
    rows: list[Sequence[Any]] = [PAIR_HEADER]
    for i, j, q, powered, root in entries:
        rows.append([i, j, q, rational_to_str(powered), repr(float(root)), target])
    return _csv_text(rows)


def read_pairs_csv(path, n: int) -> tuple[np.ndarray, int, int, str]:
    """Integer matrix ``N``, denominator, exponent ``q`` and target of a pair file."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("empty pair file")
    q = int(rows[0]["q"])
    target = rows[0].get("target", "")
    vals = {}
    den = 1
    for row in rows:
        v = Fraction(as_rational(rational_from_str(row["powered"])))
        vals[int(row["i"]), int(row["j"])] = v
        den = math.lcm(den, v.denominator)
    N = np.zeros((n, n), dtype=object)
    for (i, j), v in vals.items():
        N[i, j] = N[j, i] = v.numerator * (den // v.denominator)
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in vals and (j, i) not in vals]
    if missing:
        raise ValueError(f"pair file lacks pair {missing[0]}")
    return N, den, q, target
