import random
from fractions import Fraction

import pytest

from conftest import cluster_tetra, rnd_tetra
from tet4d.arrangement import (
    IntersectionPolygon,
    intersection_polygon,
    k_counts,
    pairwise,
    per_tetra_reduction,
)
from tet4d.kernel4d import (
    DegeneratePosition,
    EmptyIntersection,
    Point4,
    TetraPre,
    Tetrahedron4,
)
from tet4d.oracle import arrangement_k_counts

F = Fraction


def far_apart_tetra(rng, k):
    out = []
    for i in range(k):
        t = rnd_tetra(rng, 3, 3)
        out.append(Tetrahedron4(*(Point4(p.x + 100 * i, p.y, p.z, p.w)
                                  for p in t.vertices)))
    return out


class TestPairwise:
    def test_disjoint_scene_empty(self, rng):
        assert pairwise(far_apart_tetra(rng, 5)) == []

    def test_pair_set_matches_oracle(self, rng):
        for _ in range(4):
            tets = cluster_tetra(rng, tuple(rng.randint(-4, 4) for _ in range(4)),
                                 rng.randint(4, 7)) + [rnd_tetra(rng, 5, 8) for _ in range(5)]
            kc = arrangement_k_counts(tets)
            got = pairwise(tets)
            assert [w.pair for w in got] == kc.pair_set

    def test_witness_membership(self, rng):
        tets = cluster_tetra(rng, (0, 0, 0, 0), 6)
        pres = [TetraPre(t) for t in tets]
        for w in pairwise(tets):
            i, j = w.pair
            assert pres[i].contains(w.vertex) and pres[j].contains(w.vertex)
            assert w.kind in ("EDGE_TETRA", "FACE_FACE")


class TestIntersectionPolygon:
    def test_empty_raises(self, rng):
        a, b = far_apart_tetra(rng, 2)
        with pytest.raises(EmptyIntersection):
            intersection_polygon(a, b)

    def test_single_point_contact_degenerate(self):
        # two tetrahedra sharing exactly one vertex
        a = Tetrahedron4(Point4(0, 0, 0, 0), Point4(1, 0, 0, 0),
                         Point4(0, 1, 0, 0), Point4(0, 0, 1, 0))
        b = Tetrahedron4(Point4(0, 0, 0, 0), Point4(-1, 0, 0, 0),
                         Point4(0, -1, 0, 0), Point4(0, 0, 0, -1))
        with pytest.raises((DegeneratePosition, EmptyIntersection)):
            intersection_polygon(a, b)

    def test_vertices_in_both_and_convex(self, rng):
        found = 0
        trials = 0
        while found < 12 and trials < 400:
            trials += 1
            tets = cluster_tetra(rng, (0, 1, -1, 0), 2)
            try:
                poly = intersection_polygon(tets[0], tets[1])
            except (EmptyIntersection, DegeneratePosition):
                continue
            found += 1
            assert 3 <= len(poly.ordered_vertices) <= 8
            pres = [TetraPre(t) for t in tets]
            for v in poly.ordered_vertices:
                assert pres[0].contains(v) and pres[1].contains(v)
            # convex position in cyclic order: all cross products same sign
            from tet4d.arrangement import _chart3

            pts = poly.ordered_vertices
            # project to a planar chart spanned by the polygon itself
            o = pts[0]
            from tet4d.kernel4d import _sub

            d1 = _sub(pts[1], o)
            d2 = _sub(pts[-1], o)
            ci, cj = None, None
            for i in range(4):
                for j in range(i + 1, 4):
                    if d1[i] * d2[j] - d1[j] * d2[i] != 0:
                        ci, cj = i, j
                        break
                if ci is not None:
                    break
            flat = [(p[ci], p[cj]) for p in pts]
            m = len(flat)
            crosses = []
            for k in range(m):
                ax, ay = flat[k]
                bx, by = flat[(k + 1) % m]
                cx, cy = flat[(k + 2) % m]
                crosses.append((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
            pos = [c for c in crosses if c > 0]
            neg = [c for c in crosses if c < 0]
            assert not (pos and neg)
        assert found >= 12


class TestReduction:
    def test_single_neighbour_no_triples(self, rng):
        while True:
            tets = cluster_tetra(rng, (0, 0, 0, 0), 2)
            try:
                triples, quads = per_tetra_reduction(tets[0], [(1, tets[1])], 0)
                break
            except (EmptyIntersection, DegeneratePosition):
                continue
        assert triples == {} and quads == {}

    def test_chart_round_trip(self, rng):
        from tet4d.arrangement import _chart3

        for _ in range(20):
            t = rnd_tetra(rng, 6, 8)
            project, lift_fn = _chart3(t)
            # random rational points of the supporting hyperplane
            from tet4d.kernel4d import tetra_plane

            vs = t.vertices
            for _s in range(5):
                lam = [F(rng.randint(-4, 8), 4) for _ in range(3)]
                p = Point4(*(vs[0][i] + sum(lam[k] * (vs[k + 1][i] - vs[0][i])
                                            for k in range(3)) for i in range(4)))
                assert lift_fn(project(p)) == p

    def test_counts_match_oracle(self, rng):
        for trial in range(5):
            tets = []
            for c in range(rng.randint(1, 2)):
                core = tuple(rng.randint(-4, 4) + 150 * c for _ in range(4))
                tets += cluster_tetra(rng, core, rng.randint(5, 7))
            kc = arrangement_k_counts(tets)
            assert k_counts(tets) == kc.counts()

    def test_monotone_under_additions(self, rng):
        core = (1, -2, 0, 3)
        tets = cluster_tetra(rng, core, 7)
        prev = (0, 0, 0)
        for upto in range(2, 8):
            cur = k_counts(tets[:upto])
            assert all(c >= p for c, p in zip(cur, prev))
            prev = cur


class TestChain:
    def test_k4_ge_k3_ge_k2(self, rng):
        for _ in range(5):
            tets = cluster_tetra(rng, tuple(rng.randint(-3, 3) for _ in range(4)),
                                 rng.randint(5, 8))
            k2, k3, k4 = k_counts(tets)
            assert k4 >= k3 >= k2 > 0
