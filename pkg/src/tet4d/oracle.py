"""Brute-force reference implementations of every query setup.

These are deliberately O(n*m) and serve as ground truth for the structure
module and for all acceptance tests.  Pair loops use the exact sign
predicates as a fast path and fall back to the exact direct solvers whenever
any sub-sign is ZERO, so the results are exact on every input, degenerate or
not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .kernel4d import (
    Contained,
    DegeneratePosition,
    Point4,
    Segment4,
    Tetrahedron4,
    TetraPre,
    Triangle4,
    TrianglePre,
    _dot,
    _sign,
    _sub,
    line_2flat_meet,
    line_tetra_interval,
    linsolve,
    seg_tetra_hit,
    segment_tetra_direct,
    tetra_plane,
    tri_tri_direct,
    tri_tri_any,
    tri_tri_hit,
)


class QueryMode(str, enum.Enum):
    DETECT = "detect"
    COUNT = "count"
    REPORT = "report"


@dataclass
class IntersectionReport:
    detected: bool
    count: int
    pairs: List[Tuple[int, int, Optional[Point4]]] = field(default_factory=list)

    def __post_init__(self):
        self.pairs.sort(key=lambda p: (p[0], p[1]))


def _assemble(mode: QueryMode, hits, witness_fn) -> IntersectionReport:
    """hits: iterable of (i, j) pairs in any order."""
    hits = list(hits)
    if mode == QueryMode.DETECT:
        det = bool(hits)
        return IntersectionReport(det, 1 if det else 0, [])
    if mode == QueryMode.COUNT:
        return IntersectionReport(bool(hits), len(hits), [])
    pairs = [(i, j, witness_fn(i, j)) for (i, j) in hits]
    return IntersectionReport(bool(pairs), len(pairs), pairs)


# ---------------------------------------------------------------------------
# setups (i) and (iii)


def seg_tetra_query(segments: Sequence[Segment4], tetrahedra: Sequence[Tetrahedron4],
                    mode: QueryMode) -> IntersectionReport:
    pres = [TetraPre(t) for t in tetrahedra]
    hits = []
    for i, e in enumerate(segments):
        for j, t in enumerate(tetrahedra):
            if seg_tetra_hit(e, t, pres[j]):
                if mode == QueryMode.DETECT:
                    return _assemble(mode, [(i, j)], None)
                hits.append((i, j))
    return _assemble(mode, hits, lambda i, j: segment_tetra_direct(segments[i], tetrahedra[j], pres[j]))


def tetra_seg_query(tetrahedra: Sequence[Tetrahedron4], segments: Sequence[Segment4],
                    mode: QueryMode) -> IntersectionReport:
    pres = [TetraPre(t) for t in tetrahedra]
    hits = []
    for i, t in enumerate(tetrahedra):
        for j, e in enumerate(segments):
            if seg_tetra_hit(e, t, pres[i]):
                if mode == QueryMode.DETECT:
                    return _assemble(mode, [(i, j)], None)
                hits.append((i, j))
    return _assemble(mode, hits, lambda i, j: segment_tetra_direct(segments[j], tetrahedra[i], pres[i]))


# ---------------------------------------------------------------------------
# setup (ii)


def _tri_witness(t1: Triangle4, t2: Triangle4) -> Point4:
    try:
        w = tri_tri_direct(t1, t2)
    except DegeneratePosition:
        w = tri_tri_any(t1, t2)
    assert w is not None
    return w


def tri_tri_query(red: Sequence[Triangle4], blue: Sequence[Triangle4],
                  mode: QueryMode) -> IntersectionReport:
    pres_r = [TrianglePre(t) for t in red]
    pres_b = [TrianglePre(t) for t in blue]
    hits = []
    for i, t1 in enumerate(red):
        for j, t2 in enumerate(blue):
            if tri_tri_hit(t1, t2, pres_r[i], pres_b[j]):
                if mode == QueryMode.DETECT:
                    return _assemble(mode, [(i, j)], None)
                hits.append((i, j))
    return _assemble(mode, hits, lambda i, j: _tri_witness(red[i], blue[j]))


# ---------------------------------------------------------------------------
# lines vs 2-flats


def _flat_witness(line: Segment4, flat) -> Point4:
    try:
        w = line_2flat_meet(line, flat)
    except Contained:
        return Point4(*line.a)
    assert w is not None
    return w


def line_2flat_query(lines: Sequence[Segment4], flats, mode: QueryMode) -> IntersectionReport:
    hits = []
    for i, ln in enumerate(lines):
        for j, fl in enumerate(flats):
            try:
                meet = line_2flat_meet(ln, fl) is not None
            except Contained:
                meet = True
            if meet:
                if mode == QueryMode.DETECT:
                    return _assemble(mode, [(i, j)], None)
                hits.append((i, j))
    return _assemble(mode, hits, lambda i, j: _flat_witness(lines[i], flats[j]))


# ---------------------------------------------------------------------------
# ray shooting


def ray_shoot(origin: Point4, direction, tetrahedra: Sequence[Tetrahedron4]):
    """First tetrahedron hit by origin + t*direction, t >= 0; ties broken by
    the smaller index.  Returns (index, witness) or None."""
    if all(c == 0 for c in direction):
        raise ValueError("zero direction")
    best = None
    for j, t in enumerate(tetrahedra):
        res = line_tetra_interval(origin, direction, t)
        if res is None:
            continue
        if res[0] == "point":
            th = res[1]
            if th < 0:
                continue
        else:
            _tag, lo, hi = res
            if hi is not None and hi < 0:
                continue
            th = lo if (lo is not None and lo > 0) else Fraction(0)
        if best is None or th < best[0]:
            best = (th, j)
    if best is None:
        return None
    th, j = best
    witness = Point4(*(origin[i] + th * direction[i] for i in range(4)))
    return j, witness


# ---------------------------------------------------------------------------
# arrangement entity counts (k2 / k3 / k4)


@dataclass
class KCounts:
    k2: int
    k3: int
    k4: int
    vertices: List[Point4]
    pair_set: List[Tuple[int, int]]
    triple_set: List[Tuple[int, int, int]]
    quad_set: List[Tuple[int, int, int, int]]
    quad_points: List[Point4]
    triple_endpoints: List[Point4]

    def counts(self):
        return (self.k2, self.k3, self.k4)


def _pair_intersects(ti, tj, pre_i: TetraPre, pre_j: TetraPre) -> bool:
    from .kernel4d import tetra_tetra_intersect

    return tetra_tetra_intersect(ti, tj, pre_i, pre_j) is not None


def _triple_segment(pres, i, j, k):
    """Common intersection of three tetrahedra: a closed segment on the line
    h_i ^ h_j ^ h_k, returned as (origin, direction, lo, hi) or None."""
    A = []
    b = []
    for idx in (i, j, k):
        A.append(list(pres[idx].n))
        b.append(pres[idx].c)
    sol = linsolve(A, b)
    if sol is None:
        return None
    part, basis = sol
    if len(basis) != 1:
        raise DegeneratePosition("hyperplanes not in general position")
    o, d = tuple(part), tuple(basis[0])
    lo, hi = None, None
    for idx in (i, j, k):
        res = line_tetra_interval(o, d, pres[idx].tet, pres[idx])
        if res is None:
            return None
        if res[0] == "point":
            raise DegeneratePosition("triple line transversal to a member hyperplane")
        _tag, l2, h2 = res
        if l2 is not None:
            lo = l2 if lo is None else max(lo, l2)
        if h2 is not None:
            hi = h2 if hi is None else min(hi, h2)
    if lo is None or hi is None or lo > hi:
        return None
    return o, d, lo, hi


def _quad_point(pres, idxs):
    A = [list(pres[i].n) for i in idxs]
    b = [pres[i].c for i in idxs]
    sol = linsolve(A, b)
    if sol is None:
        return None
    part, basis = sol
    if basis:
        raise DegeneratePosition("four hyperplanes do not meet in a point")
    p = tuple(part)
    for i in idxs:
        if not pres[i].contains(p):
            return None
    return Point4(*p)


def _canon_point(p) -> Point4:
    return Point4(*(Fraction(c) for c in p))


def arrangement_k_counts(tetrahedra: Sequence[Tetrahedron4]) -> KCounts:
    """Exhaustive (monotone-pruned) enumeration of intersecting pairs,
    triples with a common point, and arrangement vertices.

    k4 counts the 4-wise intersection points plus the endpoints of every
    triple intersection segment ("triple-face vertices"), deduplicated by
    exact coordinates.
    """
    n = len(tetrahedra)
    pres = [TetraPre(t) for t in tetrahedra]
    pair_set = []
    pair_witness = {}
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            from .kernel4d import tetra_tetra_intersect

            w = tetra_tetra_intersect(tetrahedra[i], tetrahedra[j], pres[i], pres[j])
            if w is not None:
                pair_set.append((i, j))
                pair_witness[(i, j)] = _canon_point(w)
                adj[i].add(j)
                adj[j].add(i)

    triple_set = []
    triple_data = {}
    for (i, j) in pair_set:
        for k in sorted(adj[i] & adj[j]):
            if k <= j:
                continue
            seg = _triple_segment(pres, i, j, k)
            if seg is not None:
                triple_set.append((i, j, k))
                triple_data[(i, j, k)] = seg

    quad_set = []
    quad_points = []
    seen_quads = set()
    triples = set(triple_set)
    for (i, j, k) in triple_set:
        for l in sorted(adj[i] & adj[j] & adj[k]):
            if l <= k:
                continue
            key = (i, j, k, l)
            if key in seen_quads:
                continue
            seen_quads.add(key)
            if ((i, j, l) not in triples or (i, k, l) not in triples
                    or (j, k, l) not in triples):
                continue
            p = _quad_point(pres, key)
            if p is not None:
                quad_set.append(key)
                quad_points.append(_canon_point(p))

    triple_endpoints = []
    for (i, j, k) in triple_set:
        o, d, lo, hi = triple_data[(i, j, k)]
        for t in {lo, hi}:
            triple_endpoints.append(_canon_point(tuple(o[m] + t * d[m] for m in range(4))))

    uniq = {}
    for p in quad_points + triple_endpoints:
        uniq[tuple(p)] = p
    k4 = len(uniq)
    vertices = [pair_witness[p] for p in pair_set]
    vertices += [
        _canon_point(tuple(o[m] + ((lo + hi) / 2) * d[m] for m in range(4)))
        for (o, d, lo, hi) in (triple_data[t] for t in triple_set)
    ]
    vertices += list(uniq.values())
    endpoints_uniq = [Point4(*t) for t in sorted(set(map(tuple, triple_endpoints)))]
    return KCounts(
        k2=len(pair_set),
        k3=len(triple_set),
        k4=k4,
        vertices=vertices,
        pair_set=pair_set,
        triple_set=triple_set,
        quad_set=quad_set,
        quad_points=quad_points,
        triple_endpoints=endpoints_uniq,
    )
