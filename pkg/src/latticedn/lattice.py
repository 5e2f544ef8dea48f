"""Square-lattice region geometry: vertices, edges, boundary indexing.

Vertices are integer pairs ``(n1, n2)`` standing for ``n1 + i*n2``.  The
interior is the square ``0 <= n1, n2 <= N``; the boundary consists of the
lattice vertices adjacent to it (the four corners of the bounding square are
not adjacent to any interior vertex and are therefore excluded).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

__all__ = [
    "Vertex",
    "Edge",
    "BoundaryIndex",
    "Region",
    "SIDES",
    "build_region",
    "edge_between",
    "diagonal_vertices",
    "rotate_pi",
    "rotate_edge",
    "upper_triangle_edges",
    "level_edges",
]

SIDES = ("T", "B", "L", "R")


class Vertex(NamedTuple):
    n1: int
    n2: int

    def __add__(self, other):  # type: ignore[override]
        return Vertex(self.n1 + other[0], self.n2 + other[1])

    def __sub__(self, other):
        return Vertex(self.n1 - other[0], self.n2 - other[1])

    @property
    def level(self) -> int:
        """Coordinate sum ``n1 + n2`` (the diagonal line the vertex lies on)."""
        return self.n1 + self.n2


RIGHT = (1, 0)
UP = (0, 1)
STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class Edge(NamedTuple):
    """Canonical lattice edge ``(origin, origin + 1)`` or ``(origin, origin + i)``."""

    origin: Vertex
    direction: str  # "R" or "U"

    @property
    def tail(self) -> Vertex:
        return self.origin

    @property
    def head(self) -> Vertex:
        return self.origin + (RIGHT if self.direction == "R" else UP)

    def endpoints(self) -> tuple[Vertex, Vertex]:
        return self.tail, self.head

    def other(self, v: Vertex) -> Vertex:
        if v == self.tail:
            return self.head
        if v == self.head:
            return self.tail
        raise ValueError(f"{v} is not an endpoint of {self}")

    def __str__(self) -> str:
        a, b = self.endpoints()
        return f"({a.n1},{a.n2})-({b.n1},{b.n2})"


def edge_between(v, w) -> Edge:
    """Canonical edge joining two adjacent vertices."""
    v, w = Vertex(*v), Vertex(*w)
    d = (w.n1 - v.n1, w.n2 - v.n2)
    if d == RIGHT:
        return Edge(v, "R")
    if d == (-1, 0):
        return Edge(w, "R")
    if d == UP:
        return Edge(v, "U")
    if d == (0, -1):
        return Edge(w, "U")
    raise ValueError(f"vertices {v} and {w} are not adjacent")


def parse_edge(text: str) -> Edge:
    """Parse ``"(a,b)-(c,d)"`` into an :class:`Edge`."""
    parts = text.replace(" ", "").split(")-(")
    if len(parts) != 2:
        raise ValueError(f"cannot parse edge {text!r}")
    a = tuple(int(s) for s in parts[0].strip("(").split(","))
    b = tuple(int(s) for s in parts[1].strip(")").split(","))
    return edge_between(a, b)


class BoundaryIndex(NamedTuple):
    side: str
    m: int


@dataclass(frozen=True)
class Region:
    """Finite region with interior ``D_N`` and its one-step boundary.

    Attributes
    ----------
    N : int
        Interior side length minus one.
    interior : tuple of Vertex
        Interior vertices in row-major order (n2 outer, n1 inner).
    boundary : tuple of Vertex
        Boundary vertices in matrix order: T, B, L, R, each with m ascending.
    edges, interior_edges, boundary_edges : tuple of Edge
    """

    N: int
    interior: tuple
    boundary: tuple
    boundary_labels: tuple
    edges: tuple
    interior_edges: tuple
    boundary_edges: tuple
    _interior_pos: dict = field(repr=False, compare=False)
    _boundary_pos: dict = field(repr=False, compare=False)

    @property
    def M(self) -> int:
        return len(self.boundary)

    @property
    def vertices(self) -> tuple:
        return self.interior + self.boundary

    def is_interior(self, v) -> bool:
        return Vertex(*v) in self._interior_pos

    def is_boundary(self, v) -> bool:
        return Vertex(*v) in self._boundary_pos

    def contains(self, v) -> bool:
        return self.is_interior(v) or self.is_boundary(v)

    def interior_index(self, v) -> int:
        return self._interior_pos[Vertex(*v)]

    def boundary_index(self, v) -> int:
        return self._boundary_pos[Vertex(*v)]

    def boundary_vertex(self, side: str, m: int) -> Vertex:
        N = self.N
        if not 0 <= m <= N:
            raise IndexError(m)
        return {
            "T": Vertex(m, N + 1),
            "B": Vertex(m, -1),
            "L": Vertex(-1, m),
            "R": Vertex(N + 1, m),
        }[side]

    def side_slice(self, side: str) -> slice:
        j = SIDES.index(side)
        n = self.N + 1
        return slice(j * n, (j + 1) * n)

    def side_indices(self, *sides: str) -> list[int]:
        out: list[int] = []
        for s in sides:
            sl = self.side_slice(s)
            out.extend(range(sl.start, sl.stop))
        return out

    def neighbors(self, v) -> list[Vertex]:
        """Neighbours of ``v`` inside the region joined by an edge of ``E_Omega``."""
        v = Vertex(*v)
        if self.is_boundary(v):
            return [w for w in (v + s for s in STEPS) if self.is_interior(w)]
        return [w for w in (v + s for s in STEPS) if self.contains(w)]

    def degree(self, v) -> int:
        return len(self.neighbors(v))

    def interior_neighbor(self, b) -> Vertex:
        """The unique interior vertex adjacent to boundary vertex ``b``."""
        (w,) = self.neighbors(b)
        return w

    def incident_edges(self, v) -> list[Edge]:
        return [edge_between(v, w) for w in self.neighbors(v)]

    def is_interior_edge(self, e: Edge) -> bool:
        return self.is_interior(e.tail) and self.is_interior(e.head)


def build_region(N: int) -> Region:
    """Build the region with interior ``{0..N} x {0..N}``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    interior = tuple(Vertex(n1, n2) for n2 in range(N + 1) for n1 in range(N + 1))
    labels = tuple(BoundaryIndex(s, m) for s in SIDES for m in range(N + 1))
    side_map = {
        "T": lambda m: Vertex(m, N + 1),
        "B": lambda m: Vertex(m, -1),
        "L": lambda m: Vertex(-1, m),
        "R": lambda m: Vertex(N + 1, m),
    }
    boundary = tuple(side_map[b.side](b.m) for b in labels)
    ipos = {v: j for j, v in enumerate(interior)}
    bpos = {v: j for j, v in enumerate(boundary)}

    edges = []
    for v in interior:
        for step, d in ((RIGHT, "R"), (UP, "U")):
            w = v + step
            if w in ipos or w in bpos:
                edges.append(Edge(v, d))
    # edges entering the interior from the left and bottom boundary sides
    for m in range(N + 1):
        edges.append(Edge(Vertex(-1, m), "R"))
        edges.append(Edge(Vertex(m, -1), "U"))
    edges.sort(key=lambda e: (e.origin.n2, e.origin.n1, e.direction))
    inner = tuple(e for e in edges if e.tail in ipos and e.head in ipos)
    outer = tuple(e for e in edges if not (e.tail in ipos and e.head in ipos))
    return Region(N, interior, boundary, labels, tuple(edges), inner, outer, ipos, bpos)


def diagonal_vertices(region: Region, k: int) -> list[Vertex]:
    """Vertices ``alpha_{k,l}``, ``l = 0..2N+2-k``, on the line ``n1 + n2 = k``.

    The first lies on the top side, the last on the right side.
    """
    N = region.N
    if not N + 1 <= k <= 2 * N:
        raise ValueError(f"k={k} outside [{N + 1}, {2 * N}]")
    start = Vertex(k - N - 1, N + 1)
    return [start + (l, -l) for l in range(2 * N + 3 - k)]


def rotate_pi(region: Region, v) -> Vertex:
    """Rotation by pi about the centre of the square: ``(N - n1, N - n2)``."""
    v = Vertex(*v)
    if not region.contains(v):
        raise ValueError(f"{v} is not in the region")
    return Vertex(region.N - v.n1, region.N - v.n2)


def rotate_edge(region: Region, e: Edge) -> Edge:
    a, b = e.endpoints()
    return edge_between(rotate_pi(region, a), rotate_pi(region, b))


def level_edges(region: Region, k: int) -> list[tuple[Edge, Edge]]:
    """(left edge, down edge) of each interior ``alpha_{k,l}``, l = 1..2N+1-k."""
    alphas = diagonal_vertices(region, k)
    return [(edge_between(a - (1, 0), a), edge_between(a - (0, 1), a)) for a in alphas[1:-1]]


def upper_triangle_edges(region: Region) -> set[Edge]:
    """Interior edges recovered by the diagonal sweep ``k = 2N, ..., N+1``."""
    out: set[Edge] = set()
    for k in range(2 * region.N, region.N, -1):
        for left, down in level_edges(region, k):
            for e in (left, down):
                if region.is_interior_edge(e):
                    out.add(e)
    return out


def boundary_permutation_pi(region: Region) -> list[int]:
    """Index map ``p`` with ``boundary[p[j]] == rotate_pi(boundary[j])``."""
    return [region.boundary_index(rotate_pi(region, b)) for b in region.boundary]


def edges_of(vertices: Iterable, region: Region) -> set[Edge]:
    vs = set(Vertex(*v) for v in vertices)
    return {e for e in region.edges if e.tail in vs or e.head in vs}
