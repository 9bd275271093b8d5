"""Graphs cellularly embedded on closed orientable surfaces.

An embedding is a rotation system: the counterclockwise cyclic order of the
darts leaving each vertex.  Edge ``e`` owns darts ``2e`` (tail ``u``, written
``e+``) and ``2e+1`` (tail ``v``, written ``e-``).  Faces come from tracing
``d -> next_ccw(reverse(d))``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import gf2


class GraphError(ValueError):
    """Invalid graph or embedding input."""


def dart_name(d: int) -> str:
    return f"{d >> 1}{'+' if d % 2 == 0 else '-'}"


def parse_dart(tok: str) -> int:
    tok = tok.strip()
    if not tok or tok[-1] not in "+-":
        raise GraphError(f"bad dart token {tok!r}")
    try:
        e = int(tok[:-1])
    except ValueError as exc:
        raise GraphError(f"bad dart token {tok!r}") from exc
    return 2 * e + (0 if tok[-1] == "+" else 1)


class EmbeddedGraph:
    """Connected multigraph with a rotation system.

    Vertices are ``0..n_vertices-1`` and edges ``0..n_edges-1``.  Faces,
    genus and the dart permutations are derived once at construction.
    """

    def __init__(
        self,
        n_vertices: int,
        ends: Sequence[tuple[int, int]],
        rotation: Sequence[Sequence[int]],
        allow_loops: bool = False,
    ) -> None:
        self.n_vertices = int(n_vertices)
        self.ends = [(int(u), int(v)) for u, v in ends]
        self.n_edges = len(self.ends)
        self.rotation = [list(r) for r in rotation]
        self._validate(allow_loops)
        nd = 2 * self.n_edges
        self.rot_next = [0] * nd
        self.rot_prev = [0] * nd
        for darts in self.rotation:
            k = len(darts)
            for i, d in enumerate(darts):
                self.rot_next[d] = darts[(i + 1) % k]
                self.rot_prev[d] = darts[(i - 1) % k]
        self.faces, self.face_of = self._trace_faces()
        chi = self.n_vertices - self.n_edges + len(self.faces)
        if chi % 2 or chi > 2:
            raise GraphError(f"Euler characteristic {chi} is not 2 - 2g")
        self.genus = (2 - chi) // 2

    # -- construction helpers -------------------------------------------------

    def _validate(self, allow_loops: bool) -> None:
        if len(self.rotation) != self.n_vertices:
            raise GraphError("rotation must list every vertex")
        for e, (u, v) in enumerate(self.ends):
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise GraphError(f"edge {e} has an endpoint out of range")
            if u == v and not allow_loops:
                raise GraphError(f"edge {e} is a self-loop")
        seen = [False] * (2 * self.n_edges)
        for v, darts in enumerate(self.rotation):
            for d in darts:
                if not 0 <= d < 2 * self.n_edges:
                    raise GraphError(f"dangling dart {d} at vertex {v}")
                if seen[d]:
                    raise GraphError(f"dart {dart_name(d)} listed twice")
                if self.tail(d) != v:
                    raise GraphError(f"dart {dart_name(d)} does not leave vertex {v}")
                seen[d] = True
        if not all(seen):
            missing = [dart_name(d) for d, s in enumerate(seen) if not s]
            raise GraphError(f"darts missing from rotation: {missing[:5]}")
        if self.n_vertices == 0:
            raise GraphError("empty graph")
        if not self._connected():
            raise GraphError("graph is disconnected")

    def _connected(self) -> bool:
        adj: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.ends:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return len(seen) == self.n_vertices

    def _trace_faces(self) -> tuple[list[list[int]], list[int]]:
        nd = 2 * self.n_edges
        face_of = [-1] * nd
        faces = []
        for start in range(nd):
            if face_of[start] >= 0:
                continue
            walk = []
            d = start
            while face_of[d] < 0:
                face_of[d] = len(faces)
                walk.append(d)
                d = self.face_next(d)
            if d != start:
                raise GraphError("face tracing did not close")
            faces.append(walk)
        return faces, face_of

    # -- basic queries -------------------------------------------------------

    def tail(self, d: int) -> int:
        u, v = self.ends[d >> 1]
        return u if d % 2 == 0 else v

    def head(self, d: int) -> int:
        return self.tail(d ^ 1)

    def face_next(self, d: int) -> int:
        return self.rot_next[d ^ 1]

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def incident_edges(self, v: int) -> list[int]:
        return [d >> 1 for d in self.rotation[v]]

    def star(self, v: int) -> int:
        """Bitset of edges at ``v`` (a vertex cocycle)."""
        x = 0
        for d in self.rotation[v]:
            x ^= 1 << (d >> 1)
        return x

    def face_boundary(self, f: int) -> int:
        """Bitset of edges on face ``f`` counted mod 2."""
        x = 0
        for d in self.faces[f]:
            x ^= 1 << (d >> 1)
        return x

    def is_cycle(self, x: int) -> bool:
        return all(gf2.dot(self.star(v), x) == 0 for v in range(self.n_vertices))

    def is_cocycle(self, x: int) -> bool:
        return all(gf2.dot(self.face_boundary(f), x) == 0 for f in range(self.n_faces))

    def cycle_space_dim(self) -> int:
        return self.n_edges - self.n_vertices + 1

    def dual(self) -> "EmbeddedGraph":
        """Dual embedding: one vertex per face, dual dart ``d`` leaves face_of[d]."""
        rotation = [list(walk) for walk in self.faces]
        ends = [(self.face_of[2 * e], self.face_of[2 * e + 1]) for e in range(self.n_edges)]
        return EmbeddedGraph(self.n_faces, ends, rotation, allow_loops=True)

    def __repr__(self) -> str:
        return (
            f"EmbeddedGraph(V={self.n_vertices}, E={self.n_edges}, "
            f"F={self.n_faces}, g={self.genus})"
        )


def derive_faces_and_genus(
    n_vertices: int, ends: Sequence[tuple[int, int]], rotation: Sequence[Sequence[int]]
) -> EmbeddedGraph:
    """Validate a raw rotation system and derive its faces and genus."""
    return EmbeddedGraph(n_vertices, ends, rotation)


def dual_graph(g: EmbeddedGraph) -> EmbeddedGraph:
    return g.dual()


# -- tree-cotree --------------------------------------------------------------


@dataclass(frozen=True)
class TreeCotree:
    """Partition E = T | C | X with |X| = 2g.

    ``parent_dart[v]`` is the tree dart entering ``v`` from its parent
    (``-1`` at the root); the cotree is stored the same way on faces.
    """

    tree: frozenset[int]
    cotree: frozenset[int]
    leftover: tuple[int, ...]
    parent_dart: tuple[int, ...]
    depth: tuple[int, ...]
    face_parent_dart: tuple[int, ...]
    face_depth: tuple[int, ...]

    def fundamental_cycle(self, g: EmbeddedGraph, e: int) -> int:
        """T(e): the unique cycle in T + e."""
        u, v = g.ends[e]
        return (1 << e) ^ _tree_path(u, v, self.parent_dart, self.depth, g.tail)

    def fundamental_cocycle(self, g: EmbeddedGraph, e: int) -> int:
        """C(e): the unique cocycle in C + e."""
        f1, f2 = g.face_of[2 * e], g.face_of[2 * e + 1]

        def face_tail(d: int) -> int:
            return g.face_of[d]

        return (1 << e) ^ _tree_path(f1, f2, self.face_parent_dart, self.face_depth, face_tail)


def _tree_path(a: int, b: int, parent_dart, depth, tail) -> int:
    """Edge bitset of the tree path between nodes ``a`` and ``b``."""
    x = 0
    while a != b:
        if depth[a] >= depth[b]:
            d = parent_dart[a]
            x ^= 1 << (d >> 1)
            a = tail(d)
        else:
            d = parent_dart[b]
            x ^= 1 << (d >> 1)
            b = tail(d)
    return x


def tree_cotree(g: EmbeddedGraph) -> TreeCotree:
    """BFS spanning tree, then BFS dual spanning tree on the remaining edges.

    Neighbors are explored in ascending edge id; the leftover edges are
    returned in ascending id.
    """
    parent = [-1] * g.n_vertices
    depth = [0] * g.n_vertices
    seen = [False] * g.n_vertices
    seen[0] = True
    tree: set[int] = set()
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for d in sorted(g.rotation[v], key=lambda x: x >> 1):
            w = g.head(d)
            if not seen[w]:
                seen[w] = True
                parent[w] = d
                depth[w] = depth[v] + 1
                tree.add(d >> 1)
                queue.append(w)
    nf = g.n_faces
    fparent = [-1] * nf
    fdepth = [0] * nf
    fseen = [False] * nf
    fseen[0] = True
    cotree: set[int] = set()
    queue = deque([0])
    while queue:
        f = queue.popleft()
        for d in sorted(g.faces[f], key=lambda x: x >> 1):
            if (d >> 1) in tree:
                continue
            h = g.face_of[d ^ 1]
            if not fseen[h]:
                fseen[h] = True
                fparent[h] = d
                fdepth[h] = fdepth[f] + 1
                cotree.add(d >> 1)
                queue.append(h)
    leftover = tuple(e for e in range(g.n_edges) if e not in tree and e not in cotree)
    if len(leftover) != 2 * g.genus:
        raise GraphError("tree-cotree leftover size differs from 2g")
    return TreeCotree(
        frozenset(tree),
        frozenset(cotree),
        leftover,
        tuple(parent),
        tuple(depth),
        tuple(fparent),
        tuple(fdepth),
    )


# -- punctured cylinders ------------------------------------------------------


@dataclass(frozen=True)
class PuncturedCylinderSpec:
    """Vertically periodic N x M lattice with slots (x, y, K).

    Slot ``(x, y, K)`` sits between rows ``y`` and ``y+1`` and carries the
    vertical edges of columns ``x .. x+K-1`` through a handle.
    """

    N: int
    M: int
    slots: tuple[tuple[int, int, int], ...] = ()

    def validate(self) -> None:
        if self.N < 2 or self.M < 1:
            raise GraphError("need N >= 2 rows and M >= 1 columns")
        if self.slots and self.M < 2:
            raise GraphError("slots need at least two columns")
        prev_end = None
        for x, y, k in self.slots:
            if k < 1:
                raise GraphError("slot width must be positive")
            if not (0 <= x and x + k <= self.M and 0 <= y < self.N):
                raise GraphError(f"slot {(x, y, k)} outside the lattice")
            if prev_end is not None and x < prev_end:
                raise GraphError("slots must be ordered left to right without stacking")
            prev_end = x + k

    @classmethod
    def parse(cls, text: str) -> "PuncturedCylinderSpec":
        n = m = None
        slots = []
        for tok in text.replace("\n", " ").split():
            if "=" not in tok:
                raise GraphError(f"bad cylinder token {tok!r}")
            key, val = tok.split("=", 1)
            try:
                if key == "N":
                    n = int(val)
                elif key == "M":
                    m = int(val)
                elif key == "slot":
                    x, y, k = (int(t) for t in val.split(","))
                    slots.append((x, y, k))
                else:
                    raise GraphError(f"unknown cylinder key {key!r}")
            except ValueError as exc:
                raise GraphError(f"bad cylinder value {tok!r}") from exc
        if n is None or m is None:
            raise GraphError("cylinder spec needs N and M")
        spec = cls(n, m, tuple(slots))
        spec.validate()
        return spec

    def format(self) -> str:
        parts = [f"N={self.N}", f"M={self.M}"]
        parts += [f"slot={x},{y},{k}" for x, y, k in self.slots]
        return " ".join(parts)


@dataclass
class EdgeLayout:
    """Lattice role of each edge.

    ``kind[e]`` is ``"v"`` (vertical, column ``col[e]``, from row ``row[e]`` to
    ``row[e]+1``) or ``"h"`` (horizontal, between columns ``col[e]`` and
    ``col[e]+1`` at row ``row[e]``).
    """

    N: int
    M: int
    kind: list[str] = field(default_factory=list)
    row: list[int] = field(default_factory=list)
    col: list[int] = field(default_factory=list)
    slot_of_edge: dict[int, int] = field(default_factory=dict)

    def vertex(self, r: int, c: int) -> int:
        return c * self.N + (r % self.N)

    def vertical(self, r: int, c: int) -> int:
        return c * (2 * self.N) + (r % self.N)

    def horizontal(self, r: int, c: int) -> int:
        return c * (2 * self.N) + self.N + (r % self.N)

    def ltor_order(self) -> list[int]:
        """Column by column, vertical edges then horizontal, row by row."""
        order = []
        for c in range(self.M):
            order += [self.vertical(r, c) for r in range(self.N)]
            if c < self.M - 1:
                order += [self.horizontal(r, c) for r in range(self.N)]
        return order


def punctured_cylinder(spec: PuncturedCylinderSpec) -> tuple[EmbeddedGraph, EdgeLayout]:
    """Build the embedded punctured-cylinder lattice.

    Without slots the lattice is an annulus on the sphere; the leftmost and
    rightmost columns each bound a cap face.  Every vertex uses the planar
    order (right, up, left, down).  A slot routes its vertical edges over a
    handle: at the upper endpoint of the slot's last column the down dart is
    moved between up and left (swapped with up in column 0, which has no
    left dart), which raises the genus by exactly one.
    """
    spec.validate()
    n, m = spec.N, spec.M
    layout = EdgeLayout(n, m)
    ends: list[tuple[int, int]] = []
    for c in range(m):
        for r in range(n):
            ends.append((layout.vertex(r, c), layout.vertex(r + 1, c)))
            layout.kind.append("v")
            layout.row.append(r)
            layout.col.append(c)
        if c < m - 1:
            for r in range(n):
                ends.append((layout.vertex(r, c), layout.vertex(r, c + 1)))
                layout.kind.append("h")
                layout.row.append(r)
                layout.col.append(c)
    twisted = set()
    for j, (x, y, k) in enumerate(spec.slots):
        for c in range(x, x + k):
            layout.slot_of_edge[layout.vertical(y, c)] = j
        twisted.add(layout.vertex(y, x + k - 1))
    rotation: list[list[int]] = []
    for c in range(m):
        for r in range(n):
            right = 2 * layout.horizontal(r, c) if c < m - 1 else None
            left = 2 * layout.horizontal(r, c - 1) + 1 if c > 0 else None
            down = 2 * layout.vertical(r, c)
            up = 2 * layout.vertical(r - 1, c) + 1
            if layout.vertex(r, c) in twisted:
                order = [right, up, down, left] if c > 0 else [right, down, up]
            else:
                order = [right, up, left, down]
            rotation.append([d for d in order if d is not None])
    g = EmbeddedGraph(n * m, ends, rotation)
    if g.genus != len(spec.slots):
        raise GraphError(f"slot construction produced genus {g.genus}, expected {len(spec.slots)}")
    return g, layout


def rotation_from_neighbors(
    n_vertices: int, ends: Sequence[tuple[int, int]], order: Iterable[Iterable[int]]
) -> list[list[int]]:
    """Convert per-vertex ccw lists of edge ids into dart rotations."""
    rotation = []
    for v, edges in enumerate(order):
        darts = []
        for e in edges:
            u, w = ends[e]
            darts.append(2 * e if u == v else 2 * e + 1)
        rotation.append(darts)
    return rotation


# -- text format ---------------------------------------------------------------


def format_graph(
    g: EmbeddedGraph,
    cocycles: Sequence[int] | None = None,
    header_extra: str = "",
    cylinder: tuple[PuncturedCylinderSpec, EdgeLayout] | None = None,
) -> str:
    lines = [f"vertices {g.n_vertices} edges {g.n_edges}" + (f" {header_extra}" if header_extra else "")]
    if cylinder is not None:
        spec, layout = cylinder
        lines.append("cylinder " + spec.format())
        for e in range(g.n_edges):
            lines.append(f"layout {e} {layout.kind[e]} {layout.row[e]} {layout.col[e]}")
    for e, (u, v) in enumerate(g.ends):
        lines.append(f"edge {e} {u} {v}")
    for v, darts in enumerate(g.rotation):
        lines.append("rot " + str(v) + " " + " ".join(dart_name(d) for d in darts))
    for k, c in enumerate(cocycles or []):
        lines.append(f"cocycle {k + 1} " + " ".join(str(e) for e in gf2.bits_of(c)))
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> tuple[EmbeddedGraph, list[int]]:
    """Parse the line format; returns the graph and any cocycles listed."""
    g, cos, _ = read_graph_file(text)
    return g, cos


def read_graph_file(text: str) -> tuple[EmbeddedGraph, list[int], tuple[PuncturedCylinderSpec, EdgeLayout] | None]:
    """Like ``parse_graph`` but also returns the cylinder annotation when present.

    The annotation is trusted only if rebuilding the cylinder reproduces the
    listed edges and rotations exactly.
    """
    nv = ne = None
    cyl = None
    ends: dict[int, tuple[int, int]] = {}
    rot: dict[int, list[int]] = {}
    cocycles: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        try:
            if tok[0] == "vertices":
                nv, ne = int(tok[1]), int(tok[3])
                if tok[2] != "edges":
                    raise GraphError("header must read 'vertices N edges M'")
            elif tok[0] == "edge":
                ends[int(tok[1])] = (int(tok[2]), int(tok[3]))
            elif tok[0] == "rot":
                rot[int(tok[1])] = [parse_dart(t) for t in tok[2:]]
            elif tok[0] == "cocycle":
                cocycles[int(tok[1])] = gf2.from_indices(int(t) for t in tok[2:])
            elif tok[0] == "cylinder":
                cyl = PuncturedCylinderSpec.parse(" ".join(tok[1:]))
            elif tok[0] == "layout":
                pass  # derived from the cylinder line
            else:
                raise GraphError(f"unknown record {tok[0]!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, GraphError):
                raise GraphError(f"line {lineno}: {exc}") from exc
            raise GraphError(f"line {lineno}: malformed {raw!r}") from exc
    if nv is None or ne is None:
        raise GraphError("missing header line")
    if sorted(ends) != list(range(ne)):
        raise GraphError("edge ids must be 0..M-1")
    if sorted(rot) != list(range(nv)):
        raise GraphError("every vertex needs a rot line")
    g = EmbeddedGraph(nv, [ends[e] for e in range(ne)], [rot[v] for v in range(nv)])
    cos = [cocycles[k] for k in sorted(cocycles)]
    if cyl is None:
        return g, cos, None
    ref, layout = punctured_cylinder(cyl)
    if ref.ends != g.ends or ref.rotation != g.rotation:
        raise GraphError("cylinder annotation does not match the listed graph")
    return g, cos, (cyl, layout)


def toroidal_grid(n: int, m: int) -> EmbeddedGraph:
    """n x m grid with both directions periodic, embedded on the torus.

    Vertex (r, c) is ``r * m + c``; edge ``2*v`` goes right and ``2*v+1`` down.
    """
    ends = []
    for r in range(n):
        for c in range(m):
            v = r * m + c
            ends.append((v, r * m + (c + 1) % m))
            ends.append((v, ((r + 1) % n) * m + c))
    rotation = []
    for r in range(n):
        for c in range(m):
            v = r * m + c
            left = r * m + (c - 1) % m
            up = ((r - 1) % n) * m + c
            rotation.append([2 * (2 * v), 2 * (2 * up + 1) + 1, 2 * (2 * left) + 1, 2 * (2 * v + 1)])
    return EmbeddedGraph(n * m, ends, rotation)


def random_embedded_graph(n_vertices: int, n_edges: int, genus: int, rng, max_tries: int = 200) -> EmbeddedGraph:
    """Random connected loopless multigraph embedded with exactly the given genus.

    Starts from a random tree and inserts edges at random rotation corners.
    An insertion inside one face keeps the genus, one joining two faces
    raises it by one; proposals that would make ``genus`` unreachable with
    the edges left are rejected.
    """
    if n_edges < n_vertices - 1:
        raise GraphError("too few edges for a connected graph")
    if 2 * genus > n_edges - n_vertices + 1:
        raise GraphError("cycle rank too small for that genus")
    ends = [(int(rng.integers(0, v)), v) for v in range(1, n_vertices)]
    rotation: list[list[int]] = [[] for _ in range(n_vertices)]
    for e, (u, v) in enumerate(ends):
        rotation[u].append(2 * e)
        rotation[v].append(2 * e + 1)
    for darts in rotation:
        rng.shuffle(darts)
    g = EmbeddedGraph(n_vertices, ends, rotation)
    while g.n_edges < n_edges:
        left = n_edges - g.n_edges - 1
        for _ in range(max_tries):
            u, v = (int(t) for t in rng.choice(n_vertices, size=2, replace=False))
            e = g.n_edges
            trial = [list(r) for r in rotation]
            trial[u].insert(int(rng.integers(0, len(trial[u]) + 1)), 2 * e)
            trial[v].insert(int(rng.integers(0, len(trial[v]) + 1)), 2 * e + 1)
            h = EmbeddedGraph(n_vertices, ends + [(u, v)], trial)
            if h.genus <= genus and genus - h.genus <= left:
                g, ends, rotation = h, ends + [(u, v)], trial
                break
        else:
            raise GraphError(f"could not place edge {g.n_edges} at genus {genus}")
    return g
