import random

import pytest

from tet4d.kernel4d import (
    DegenerateTetrahedron,
    Point4,
    Segment4,
    Tetrahedron4,
    Triangle4,
)


def rnd_point(rng, crange):
    return Point4(*(rng.randint(-crange, crange) for _ in range(4)))


def rnd_segment(rng, crange=8, spread=8):
    while True:
        c = rnd_point(rng, crange)
        a = Point4(*(ci + rng.randint(-spread, spread) for ci in c))
        b = Point4(*(ci + rng.randint(-spread, spread) for ci in c))
        if tuple(a) != tuple(b):
            return Segment4(a, b)


def rnd_triangle(rng, crange=8, spread=8):
    while True:
        c = rnd_point(rng, crange)
        try:
            return Triangle4(*(Point4(*(ci + rng.randint(-spread, spread) for ci in c))
                               for _ in range(3)))
        except ValueError:
            continue


def rnd_tetra(rng, crange=8, spread=8):
    while True:
        c = rnd_point(rng, crange)
        try:
            return Tetrahedron4(*(Point4(*(ci + rng.randint(-spread, spread) for ci in c))
                                  for _ in range(4)))
        except DegenerateTetrahedron:
            continue


def rnd_flat(rng, crange=8, spread=8):
    t = rnd_triangle(rng, crange, spread)
    return t.vertices


def cluster_tetra(rng, core, count, spread=12):
    """Tetrahedra sharing the common interior point `core` (their centroid)."""
    out = []
    for _ in range(count):
        while True:
            vs = [Point4(*(core[i] + rng.randint(-spread, spread) for i in range(4)))
                  for _ in range(3)]
            v3 = Point4(*(4 * core[i] - vs[0][i] - vs[1][i] - vs[2][i] for i in range(4)))
            try:
                out.append(Tetrahedron4(vs[0], vs[1], vs[2], v3))
                break
            except DegenerateTetrahedron:
                continue
    return out


@pytest.fixture
def rng():
    return random.Random(0xDECADE)


# the standard simplex tetrahedron conv{e1, e2, e3, e4}
@pytest.fixture
def simplex_tetra():
    return Tetrahedron4(
        Point4(1, 0, 0, 0), Point4(0, 1, 0, 0), Point4(0, 0, 1, 0), Point4(0, 0, 0, 1)
    )
