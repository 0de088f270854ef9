"""Command line entry point.

Exit status: 0 on success, 1 for invalid input, 2 when a computed object
fails one of its invariants (a JSON diagnostic goes to stderr).
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as dio
from .bounds import ModulusSpec, check_lemma51, lower_bound_curve
from .distortion import Norm, SparseVector, evaluate, evaluate_powered
from .graphs import (
    BundleSpec,
    NotABundleError,
    NotIsomorphicError,
    build_coded,
    build_recursive,
    check_isomorphism,
    count_recursive,
)
from .l1_embed import l1_closed_form
from .linf_embed import GoodTree, lp_parameter, psi_all
from .lp_transfer import BaseEmbedding, UncertifiedBaseError, certify, frechet_base, transfer
from .metric import bfs_all_pairs, closed_form_distance, vertical_mask
from .pool import map_rows
from .report import render

MAX_DEPTH = 6
MAX_BRANCH = 6
MAX_TRANSFER_DEPTH = 3
MAX_VERTICES = 200_000
MAX_PAIR_VERTICES = 6_000


class ValidationError(Exception):
    pass


class InvariantError(Exception):
    def __init__(self, message: str, **detail):
        super().__init__(message)
        self.detail = detail


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


# ---------------------------------------------------------------------------
# guards and loaders
# ---------------------------------------------------------------------------

def _check_size(depth: int, branch: int, limit: int = MAX_VERTICES) -> None:
    if not 0 <= depth <= MAX_DEPTH:
        raise ValidationError(f"depth must be in 0..{MAX_DEPTH}")
    if not 2 <= branch <= MAX_BRANCH:
        raise ValidationError(f"branching must be in 2..{MAX_BRANCH}")
    n = count_recursive(depth, branch)[0]
    if n > limit:
        raise ValidationError(f"depth {depth}, branching {branch} gives {n} vertices (limit {limit})")


def _load_graph(path: str, limit: int = MAX_PAIR_VERTICES):
    try:
        g = dio.load_graph(path)
    except OSError as exc:
        raise ValidationError(f"cannot read graph {path}: {exc.strerror}") from None
    except (ValueError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if g.n > limit:
        raise ValidationError(f"graph has {g.n} vertices; pairwise work is limited to {limit}")
    return g


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _parse_norm(text: str) -> Norm:
    try:
        return Norm.parse(text)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _graph_meta(g) -> dict:
    return {"family": g.family, "depth": g.depth, "branching": g.branching, "n": g.n}


# ---------------------------------------------------------------------------
# row kernels (module level so worker processes can import them)
# ---------------------------------------------------------------------------

def _closed_row(g, i):
    c, k = g.codes, g.depth
    return [closed_form_distance(c[i], c[j], k) if j != i else 0 for j in range(g.n)]


def _l1_row(g, i):
    c, k = g.codes, g.depth
    return [l1_closed_form(k, c[i], c[j]) for j in range(i + 1, g.n)]


def _transfer_row(payload, i):
    emb, p = payload
    return [emb.lp_powered(i, j, p) for j in range(i + 1, emb.graph.n)]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_build(a) -> int:
    _check_size(a.depth, a.branch)
    spec = BundleSpec(a.family, a.depth, a.branch)
    if a.mode == "coded":
        if a.family != "diamond":
            raise ValidationError("coded mode only exists for the diamond family")
        g = build_coded(spec)
    else:
        g = build_recursive(spec)
    dio.atomic_write_text(a.output, dio.dump_json(dio.graph_to_json(g)))
    return 0


def cmd_verify_iso(a) -> int:
    _check_size(a.depth, a.branch)
    spec = BundleSpec("diamond", a.depth, a.branch)
    g_rec, g_cod = build_recursive(spec), build_coded(spec)
    try:
        mapping = check_isomorphism(g_rec, g_cod)
    except NotIsomorphicError as exc:
        raise InvariantError(str(exc), witness=repr(exc.witness)) from None
    out = {"depth": a.depth, "branching": a.branch, "vertices": g_rec.n, "edges": len(g_rec.edges),
           "isomorphic": True}
    if a.output:
        out["mapping"] = {str(i): mapping[i] for i in range(g_rec.n)}
        dio.atomic_write_text(a.output, dio.dump_json(out))
    else:
        print(json.dumps(out, sort_keys=True))
    return 0


def cmd_dist(a) -> int:
    g = _load_graph(a.graph)
    if a.method == "bfs":
        dm = bfs_all_pairs(g)
    else:
        if g.codes is None:
            raise ValidationError("closed-form distances need vertex codes")
        dm = np.array(map_rows(_closed_row, g.n, a.threads, g), dtype=np.int64).reshape(g.n, g.n)
    dio.atomic_write_text(a.output, dio.matrix_csv(dm))
    return 0


def _base_from_args(a, k: int) -> BaseEmbedding:
    if a.base == "frechet":
        return frechet_base(k)
    g = build_coded(BundleSpec("diamond", k, 2))
    try:
        images = dio.embedding_from_json(_read_json(a.base), g.n)
    except ValueError as exc:
        raise ValidationError(f"{a.base}: {exc}") from None
    base = BaseEmbedding(g, images, _parse_norm(a.base_norm), list(range(g.n)))
    try:
        certify(base)
    except UncertifiedBaseError as exc:
        raise InvariantError(f"base embedding rejected: {exc}") from None
    return base


def cmd_embed(a) -> int:
    g = _load_graph(a.graph)
    if g.codes is None or g.family != "diamond":
        raise ValidationError("embeddings are defined on coded diamonds; build with --mode coded")
    k = g.depth
    if a.target in ("c0", "lp"):
        info = {"target": a.target, "depth": k}
        if a.target == "lp":
            if (a.p is None) == (a.eps is None):
                raise ValidationError("--target lp needs exactly one of --p and --eps")
            try:
                info["p"] = str(Fraction(str(a.p))) if a.p is not None else str(lp_parameter(max(k, 1), a.eps))
            except ValueError as exc:
                raise ValidationError(str(exc)) from None
        images = psi_all(g, GoodTree(max(k, 1), g.branching) if k else None)
        dio.atomic_write_text(a.output, dio.dump_json(dio.embedding_to_json(images)))
        print(json.dumps(info, sort_keys=True))
        return 0
    if a.target == "l1":
        rows = map_rows(_l1_row, g.n, a.threads, g)
        M = np.zeros((g.n, g.n), dtype=object)
        for i, row in enumerate(rows):
            for off, v in enumerate(row):
                M[i, i + 1 + off] = M[i + 1 + off, i] = v
        M[np.arange(g.n), np.arange(g.n)] = 0
        dio.atomic_write_text(a.output, dio.matrix_csv(M, fmt=dio.rational_to_str))
        return 0
    # transfer
    if k < 1 or k > MAX_TRANSFER_DEPTH:
        raise ValidationError(f"transfer needs 1 <= depth <= {MAX_TRANSFER_DEPTH}")
    if a.p is None:
        raise ValidationError("--target transfer needs --p")
    p = Fraction(str(a.p))
    if p < 1 or p.denominator != 1:
        raise ValidationError("transfer distances are exact only for integer p >= 1")
    p = int(p)
    base = _base_from_args(a, k)
    if base.norm.kind == "p" and base.norm.q != p:
        raise ValidationError("a p-norm base must be measured with the same p")
    emb = transfer(base, g.branching, p)
    bad = emb.provenance_violations()
    if bad:
        raise InvariantError("step function takes a value from the wrong level", pairs=bad[:5])
    order = [emb.graph.code_index[c] for c in g.codes]
    rows = map_rows(_transfer_row, g.n, a.threads, (emb, p))
    vals = {}
    for i, row in enumerate(rows):
        for off, v in enumerate(row):
            vals[i, i + 1 + off] = Fraction(v)
    entries = []
    for i in range(g.n):
        for j in range(i + 1, g.n):
            ii, jj = order[i], order[j]
            v = vals[min(ii, jj), max(ii, jj)]
            entries.append((i, j, p, v, float(v) ** (1 / p)))
    dio.atomic_write_text(a.output, dio.pairs_csv(entries, f"transfer:C={base.C}"))
    return 0


def _embedding_kind(path: str) -> str:
    if Path(path).suffix != ".csv":
        return "json"
    with open(path, encoding="utf-8") as fh:
        head = fh.readline()
    return "pairs" if head.startswith("i,") else "matrix"


def cmd_distort(a) -> int:
    g = _load_graph(a.graph)
    dm = bfs_all_pairs(g)
    vert = vertical_mask(g, dm)
    labels = [g.label(i) for i in range(g.n)]
    try:
        kind = _embedding_kind(a.embedding)
    except OSError as exc:
        raise ValidationError(f"cannot read {a.embedding}: {exc.strerror}") from None
    base_C = None
    try:
        if kind == "json":
            nm = _parse_norm(a.norm)
            images = dio.embedding_from_json(_read_json(a.embedding), g.n)
            rep = evaluate(images, dm, nm, vertical=vert, labels=labels)
            target = a.target or ("c0" if nm.kind == "sup" else "lp")
        elif kind == "matrix":
            nm = _parse_norm(a.norm)
            if nm != Norm("p", Fraction(1)):
                raise ValidationError("a distance matrix is read as L1 distances; use --norm l1")
            M = _read_rational_matrix(a.embedding, g.n)
            N, den = _integer_matrix(M)
            rep = evaluate_powered(N, dm, 1, den=den, norm_name="l1", vertical=vert, labels=labels)
            target = a.target or "l1"
        else:
            N, den, q, tag = dio.read_pairs_csv(a.embedding, g.n)
            nm = _parse_norm(a.norm)
            if nm.kind != "p" or nm.q != q:
                raise ValidationError(f"pair file holds p-th powers with p={q}; use --norm p:{q}")
            rep = evaluate_powered(N, dm, q, den=den, norm_name=str(nm), vertical=vert, labels=labels)
            target = a.target or tag.split(":")[0]
            if "C=" in tag:
                base_C = float(Fraction(tag.split("C=")[1]))
    except ValueError as exc:
        raise ValidationError(f"{a.embedding}: {exc}") from None
    out = rep.to_json()
    out["graph"] = _graph_meta(g)
    out["target"] = target
    if base_C is not None:
        out["base_C"] = base_C
    dio.atomic_write_text(a.output, dio.dump_json(out))
    if a.expect_max is not None and not rep.distortion_at_most(Fraction(str(a.expect_max))):
        raise InvariantError(f"distortion {rep.distortion:.6g} exceeds {a.expect_max}",
                             distortion=rep.distortion, pair=list(rep.colipschitz_pair))
    return 0


def _read_rational_matrix(path: str, n: int) -> np.ndarray:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) != n + 1 or any(len(r) != n + 1 for r in rows):
        raise ValueError(f"expected a {n}x{n} matrix")
    M = np.zeros((n, n), dtype=object)
    for i, row in enumerate(rows[1:]):
        for j, cell in enumerate(row[1:]):
            M[i, j] = Fraction(dio.as_rational(dio.rational_from_str(cell)))
    return M


def _integer_matrix(M: np.ndarray) -> tuple[np.ndarray, int]:
    den = 1
    for x in M.flat:
        den = math.lcm(den, x.denominator)
    N = np.zeros(M.shape, dtype=object)
    for idx, x in np.ndenumerate(M):
        N[idx] = x.numerator * (den // x.denominator)
    return N, den


def cmd_bounds(a) -> int:
    if not 1 <= a.kmax <= 10_000:
        raise ValidationError("kmax must be in 1..10000")
    modulus = None
    if a.modulus == "lp":
        modulus = ModulusSpec("lp", p=a.p)
    try:
        curve = lower_bound_curve(a.p, a.gamma, a.rho, a.kmax, a.c1, modulus)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if any(b < x for x, b in zip(curve.values, curve.values[1:])):
        raise InvariantError("curve is not nondecreasing")
    text = f"# p={a.p!r} gamma={a.gamma!r} rho={a.rho!r} c1={a.c1!r} K={curve.K!r} modulus={a.modulus}\n"
    text += "k,C_k,floor_k\n" + "".join(f"{k},{c!r},{f!r}\n" for k, c, f in curve.rows())
    dio.atomic_write_text(a.output, text)
    return 0


def cmd_lemma51(a) -> int:
    try:
        norm = a.p if a.p in ("sup", "linf") or a.p.startswith("p:") else f"p:{a.p}"
        res = check_lemma51(a.dim, norm, a.samples, a.seed, threads=a.threads)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    text = dio.dump_json(res.to_json())
    if a.output:
        dio.atomic_write_text(a.output, text)
    else:
        sys.stdout.write(text)
    if res.violations:
        raise InvariantError("found z in Bar but not in Mid", violations=res.violations,
                             examples=res.examples)
    return 0


def cmd_report(a) -> int:
    try:
        md, csv_text = render(a.inputs)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ValidationError(f"report input: {exc}") from None
    dio.atomic_write_text(a.output, md)
    csv_path = a.csv or str(Path(a.output).with_suffix(".csv"))
    dio.atomic_write_text(csv_path, csv_text)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="diamond-embed", description="Diamond graphs, their embeddings and distortion bounds.")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for pairwise work (default 1)")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("build", help="construct a graph and write it as JSON")
    s.add_argument("--family", choices=["diamond", "laakso", "parasol"], default="diamond")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--branch", type=int, required=True)
    s.add_argument("--mode", choices=["coded", "recursive"], default="coded")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("verify-iso", help="check that both constructions give the same diamond")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--branch", type=int, required=True)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_verify_iso)

    s = sub.add_parser("dist", help="write the shortest-path distance matrix")
    s.add_argument("--graph", required=True)
    s.add_argument("--method", choices=["bfs", "closed"], default="bfs")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_dist)

    s = sub.add_parser("embed", help="compute an embedding of a coded diamond")
    s.add_argument("--target", choices=["c0", "lp", "l1", "transfer"], required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--p", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--base", default="frechet", help="'frechet' or an embedding JSON of the binary diamond")
    s.add_argument("--base-norm", default="sup", help="norm of a base given as a file (default sup)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("distort", help="measure the distortion of an embedding")
    s.add_argument("--graph", required=True)
    s.add_argument("--embedding", required=True)
    s.add_argument("--norm", required=True, help="sup, l1 or p:P")
    s.add_argument("--target", help="label stored in the report (inferred when omitted)")
    s.add_argument("--expect-max", type=float, help="exit 2 if the distortion exceeds this")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_distort)

    s = sub.add_parser("bounds", help="lower-bound growth curve")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--kmax", type=int, required=True)
    s.add_argument("--c1", type=float, default=1.0)
    s.add_argument("--modulus", choices=["power", "lp"], default="power")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("check-lemma51", help="sample barycenters and look for points outside Mid")
    s.add_argument("--dim", type=int, default=8)
    s.add_argument("--p", default="2")
    s.add_argument("--samples", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_lemma51)

    s = sub.add_parser("report", help="tabulate distortion reports against bounds")
    s.add_argument("--inputs", nargs="*", default=[])
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--csv")
    s.set_defaults(func=cmd_report)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
        if a.threads < 1:
            raise ValidationError("--threads must be at least 1")
        return a.func(a)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(json.dumps({"error": "invariant", "message": str(exc), **exc.detail}, sort_keys=True, default=str),
              file=sys.stderr)
        return 2
    except NotABundleError as exc:
        print(json.dumps({"error": "invariant", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
