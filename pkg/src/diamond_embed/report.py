"""Tables comparing measured distortions with the theoretical upper and lower bounds."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

__all__ = ["ReportRow", "upper_bound", "load_inputs", "render"]

REPORT_COLUMNS = ["norm", "target", "family", "branching", "k", "measured", "upper_bound", "floor"]


@dataclass
class ReportRow:
    norm: str
    target: str
    family: str
    branching: int
    k: int
    measured: float
    upper: Optional[float]
    floor: Optional[float]


def upper_bound(target: str, norm: str, k: int, C: float = 1.0) -> Optional[float]:
    """Guaranteed distortion bound for each construction.

    For ``lp`` images of the tree embedding the bound is ``3 + eps`` with the
    smallest ``eps`` whose exponent rule admits the given ``p``.
    """
    p = _p_of(norm)
    if target == "c0":
        return 3.0
    if target == "l1":
        return 2.0
    if target == "transfer" and p is not None:
        return 2 ** (1 / p) * C
    if target == "lp" and p is not None:
        return 3 + 3 * ((2 * k + 2) ** (1 / p) - 1)
    return None


def _p_of(norm: str) -> Optional[float]:
    if norm == "l1":
        return 1.0
    if norm.startswith("p:"):
        return float(norm[2:])
    if norm.startswith("q="):
        return float(norm[2:])
    return None


def read_curve(path: Path) -> tuple[dict, list[tuple[int, float, float]]]:
    params: dict = {}
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, val = item.partition("=")
                    try:
                        params[key] = float(val)
                    except ValueError:
                        params[key] = val
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or not {"k", "C_k", "floor_k"} <= set(reader.fieldnames):
        raise ValueError(f"{path}: curve CSV needs columns k, C_k, floor_k")
    for row in reader:
        rows.append((int(row["k"]), float(row["C_k"]), float(row["floor_k"])))
    return params, rows


def load_inputs(paths: Sequence[str]) -> tuple[list[dict], list[tuple[dict, list]]]:
    reports, curves = [], []
    for p in map(Path, paths):
        if p.suffix == ".csv":
            curves.append(read_curve(p))
            continue
        with open(p, encoding="utf-8") as fh:
            data = json.load(fh)
        for key in ("norm", "distortion", "graph"):
            if key not in data:
                raise ValueError(f"{p}: not a distortion report (missing {key!r})")
        reports.append(data)
    return reports, curves


def _floor_for(norm: str, k: int, curves) -> Optional[float]:
    p = _p_of(norm)
    if p is None or p == 1:
        return None
    for params, rows in curves:
        if params.get("p") is not None and math.isclose(params["p"], p):
            for kk, _, floor in rows:
                if kk == k:
                    return floor
    return None


def render(paths: Sequence[str]) -> tuple[str, str]:
    """Markdown tables (one per norm) and the same rows as plot-ready CSV."""
    reports, curves = load_inputs(paths)
    rows = []
    for r in reports:
        g = r["graph"]
        target = r.get("target", "")
        k = int(g["depth"])
        rows.append(ReportRow(
            norm=r["norm"], target=target, family=g.get("family", ""),
            branching=int(g.get("branching", 0)), k=k, measured=float(r["distortion"]),
            upper=upper_bound(target, r["norm"], k, float(r.get("base_C", 1.0))),
            floor=_floor_for(r["norm"], k, curves),
        ))
    rows.sort(key=lambda x: (x.norm, x.target, x.family, x.branching, x.k))

    def fmt(x: Optional[float]) -> str:
        return "-" if x is None else f"{x:.6g}"

    md = ["# Distortion report", ""]
    if not rows:
        md += ["| k | target | measured | upper bound | floor |", "|---|---|---|---|---|", ""]
    for norm in sorted({r.norm for r in rows}):
        md += [f"## norm {norm}", "", "| k | target | family | w | measured | upper bound | floor |",
               "|---|---|---|---|---|---|---|"]
        for r in rows:
            if r.norm == norm:
                md.append(f"| {r.k} | {r.target} | {r.family} | {r.branching} | {fmt(r.measured)} "
                          f"| {fmt(r.upper)} | {fmt(r.floor)} |")
        md.append("")
    lines = [",".join(REPORT_COLUMNS)]
    for r in rows:
        lines.append(",".join([r.norm, r.target, r.family, str(r.branching), str(r.k), repr(r.measured),
                               "" if r.upper is None else repr(r.upper),
                               "" if r.floor is None else repr(r.floor)]))
    return "\n".join(md) + "\n", "\n".join(lines) + "\n"
