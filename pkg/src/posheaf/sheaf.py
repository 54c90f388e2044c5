"""Sheaves (diagrams of finite-dimensional vector spaces) on finite posets.

Structure maps are stored on Hasse edges only; the map for a general relation
s < t is composed along the canonical saturated path (lexicographically least
in topo order).  check_compositionality certifies path-independence.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    Disconnected,
    ExtraEdgeMap,
    FieldMismatch,
    MissingEdgeMap,
    NonInvertibleMap,
    NotAPath,
    NotMonotone,
    ShapeMismatch,
    TooShort,
    UnknownElement,
)
from .linalg import FieldTag, Matrix, invert, kernel_basis
from .poset import Poset, build_poset


class Sheaf:
    """Stalk dimensions per element plus a structure matrix on every Hasse edge."""

    __slots__ = ("poset", "field", "stalk_dim", "edge_map", "_path_cache")

    def __init__(self, poset: Poset, field: FieldTag, stalk_dim: dict[str, int],
                 edge_map: dict[tuple[str, str], Matrix]):
        self.poset = poset
        self.field = field
        self.stalk_dim = dict(stalk_dim)
        self.edge_map = dict(edge_map)
        self._path_cache: dict[tuple[str, str], Matrix] = {}

    def stalk(self, s: str) -> int:
        if s not in self.stalk_dim:
            raise UnknownElement(f"element {s!r} has no stalk")
        return self.stalk_dim[s]

    def canonical_path(self, s: str, t: str) -> list[str]:
        """Saturated Hasse path from s to t that is lexicographically least in
        topo-order positions; requires s < t."""
        if not self.poset.lt(s, t):
            raise NotAPath(f"{s!r} is not strictly below {t!r}")
        path = [s]
        current = s
        while current != t:
            step = None
            for nxt in self.poset.covers_of(current):
                if nxt == t or self.poset.lt(nxt, t):
                    step = nxt
                    break
            path.append(step)
            current = step
        return path

    def map(self, s: str, t: str) -> Matrix:
        """Structure map for s <= t, composed along the canonical path."""
        if s == t:
            return Matrix.identity(self.stalk(s), self.field)
        key = (s, t)
        cached = self._path_cache.get(key)
        if cached is not None:
            return cached
        path = self.canonical_path(s, t)
        m = self.edge_map[(path[0], path[1])]
        for a, b in zip(path[1:], path[2:]):
            m = self.edge_map[(a, b)] @ m
        self._path_cache[key] = m
        return m

    def compose_along(self, path: list[str]) -> Matrix:
        """Composition of edge maps along an explicit saturated ascending path."""
        m = Matrix.identity(self.stalk(path[0]), self.field)
        for a, b in zip(path, path[1:]):
            m = self.edge_map[(a, b)] @ m
        return m

    def __repr__(self) -> str:
        return f"Sheaf(on {self.poset!r}, field {self.field})"


def build_sheaf(p: Poset, stalks: dict[str, int],
                maps: dict[tuple[str, str], Matrix | list],
                field: FieldTag) -> Sheaf:
    """Shape-check and assemble a sheaf; compositionality is NOT verified here
    (use check_compositionality), and is vacuous on one-dimensional posets."""
    stalk_dim = {}
    for e in p.elements:
        if e not in stalks:
            raise MissingEdgeMap(f"stalks: missing dimension for {e!r}")
        d = int(stalks[e])
        if d < 0:
            raise ShapeMismatch(f"negative stalk dimension at {e!r}")
        stalk_dim[e] = d
    edge_map: dict[tuple[str, str], Matrix] = {}
    hasse = set(p.hasse_edges())
    for (a, b), m in maps.items():
        if (a, b) not in hasse:
            raise ExtraEdgeMap(f"({a!r}, {b!r}) is not a Hasse edge")
        if not isinstance(m, Matrix):
            m = Matrix.from_rows(m, field)
        if m.field != field:
            raise FieldMismatch(f"map on ({a!r}, {b!r}) uses field {m.field}")
        if m.rows != stalk_dim[b] or m.cols != stalk_dim[a]:
            raise ShapeMismatch(
                f"map on ({a!r}, {b!r}) has shape {m.rows}x{m.cols}, "
                f"expected {stalk_dim[b]}x{stalk_dim[a]}"
            )
        edge_map[(a, b)] = m
    for edge in hasse:
        if edge not in edge_map:
            raise MissingEdgeMap(f"maps: missing {edge[0]}<{edge[1]}")
    return Sheaf(p, field, stalk_dim, edge_map)


@dataclass(frozen=True)
class CompositionalityViolation:
    source: str
    target: str
    path_a: tuple[str, ...]
    path_b: tuple[str, ...]
    deviation_sq: float

    def __iter__(self):
        yield from (self.source, self.target, self.path_a, self.path_b)


def _all_saturated_paths(p: Poset, s: str, t: str) -> list[list[str]]:
    paths = []

    def extend(path):
        last = path[-1]
        if last == t:
            paths.append(path[:])
            return
        for nxt in p.covers_of(last):
            if nxt == t or p.lt(nxt, t):
                path.append(nxt)
                extend(path)
                path.pop()

    extend([s])
    return paths


def _frobenius_sq(m: Matrix) -> float:
    return float(sum(float(x) * float(x) for row in m.data for x in row))


def check_compositionality(d: Sheaf) -> list[CompositionalityViolation]:
    """Compare all saturated-path compositions pairwise for every s < t.

    An empty list certifies a genuine diagram.  Each violation carries the raw
    squared Frobenius deviation of the two compositions as a diagnostic.
    """
    p = d.poset
    violations = []
    for s in p.topo_order:
        for t in p.topo_order:
            if not p.lt(s, t):
                continue
            paths = _all_saturated_paths(p, s, t)
            if len(paths) < 2:
                continue
            composed = [(tuple(path), d.compose_along(path)) for path in paths]
            for i in range(len(composed)):
                for j in range(i + 1, len(composed)):
                    pa, ma = composed[i]
                    pb, mb = composed[j]
                    if ma != mb:
                        violations.append(
                            CompositionalityViolation(
                                s, t, pa, pb, _frobenius_sq(ma - mb)
                            )
                        )
    return violations


def constant_sheaf(p: Poset, dim: int, field: FieldTag) -> Sheaf:
    stalks = {e: dim for e in p.elements}
    ident = Matrix.identity(dim, field)
    maps = {edge: ident for edge in p.hasse_edges()}
    return build_sheaf(p, stalks, maps, field)


def skyscraper_cone_sheaf(p: Poset, s: str, dim: int, field: FieldTag) -> Sheaf:
    """Constant stalk on the down-set {t <= s}, zero elsewhere; identity maps
    inside the cone, zero maps out."""
    p.index(s)
    cone = {s} | p.strict_lower(s)
    stalks = {e: (dim if e in cone else 0) for e in p.elements}
    maps = {}
    for (a, b) in p.hasse_edges():
        if b in cone:
            maps[(a, b)] = Matrix.identity(dim, field)
        else:
            maps[(a, b)] = Matrix.zeros(stalks[b], stalks[a], field)
    return build_sheaf(p, stalks, maps, field)


def dirac_sheaf(p: Poset, s: str, dim: int, field: FieldTag) -> Sheaf:
    p.index(s)
    stalks = {e: (dim if e == s else 0) for e in p.elements}
    maps = {
        (a, b): Matrix.zeros(stalks[b], stalks[a], field)
        for (a, b) in p.hasse_edges()
    }
    return build_sheaf(p, stalks, maps, field)


def cycle_poset(n: int) -> Poset:
    """Poset of the cycle graph C_n: vertices v0..v{n-1}, edges e_i over {v_i, v_{i+1}}."""
    vertices = [f"v{i}" for i in range(n)]
    edges = [f"e{i}" for i in range(n)]
    covers = []
    for i in range(n):
        covers.append((vertices[i], edges[i]))
        covers.append((vertices[(i + 1) % n], edges[i]))
    return build_poset(vertices + edges, covers)


def path_poset(n: int) -> Poset:
    """Poset of the path graph on n vertices v0..v{n-1} with edges e0..e{n-2}."""
    vertices = [f"v{i}" for i in range(n)]
    edges = [f"e{i}" for i in range(n - 1)]
    covers = []
    for i in range(n - 1):
        covers.append((vertices[i], edges[i]))
        covers.append((vertices[i + 1], edges[i]))
    return build_poset(vertices + edges, covers)


def mobius_sheaf(n: int, field: FieldTag) -> Sheaf:
    """One-dimensional sheaf on the cycle C_n whose maps are all [1] except a
    single [-1] on the wrap-around edge map (v0, e{n-1})."""
    if n < 3:
        raise TooShort("a cycle needs at least 3 vertices")
    p = cycle_poset(n)
    stalks = {e: 1 for e in p.elements}
    one = Matrix.identity(1, field)
    maps = {edge: one for edge in p.hasse_edges()}
    maps[("v0", f"e{n - 1}")] = one.scale(field.coerce(-1))
    return build_sheaf(p, stalks, maps, field)


def pullback(d: Sheaf, f: dict[str, str], source: Poset) -> Sheaf:
    """Inverse image along a monotone map f: source -> d.poset.

    Stalks and maps transport along f; Hasse edges of the source mapping to
    equalities downstairs get identity maps.
    """
    target = d.poset
    for s in source.elements:
        if s not in f:
            raise NotMonotone(f"map does not cover element {s!r}")
        target.index(f[s])
    for (a, b) in source.closure_pairs():
        if not target.leq(f[a], f[b]):
            raise NotMonotone(f"map is not monotone on {a!r} < {b!r}")
    stalks = {s: d.stalk(f[s]) for s in source.elements}
    maps = {}
    for (a, b) in source.hasse_edges():
        maps[(a, b)] = d.map(f[a], f[b])
    return build_sheaf(source, stalks, maps, d.field)


@dataclass(frozen=True)
class SectionSpace:
    """Basis of the global-section space; vectors concatenate per-element
    stalk coordinates in topo order."""

    layout: tuple[str, ...]
    offsets: dict[str, int]
    basis: list[list]
    dim: int


def stalk_layout(d: Sheaf) -> tuple[tuple[str, ...], dict[str, int], int]:
    """Topo-order layout of the 0-th cochain coordinates for brute-force sections."""
    layout = tuple(d.poset.topo_order)
    offsets = {}
    total = 0
    for e in layout:
        offsets[e] = total
        total += d.stalk(e)
    return layout, offsets, total


def global_sections_bruteforce(d: Sheaf) -> SectionSpace:
    """Kernel of the stacked Hasse-edge system {D(s<t) x_s - x_t = 0}.

    This is the construction-independent oracle for H^0.
    """
    if not d.field.is_exact:
        raise FieldMismatch("brute-force sections need an exact field")
    layout, offsets, total = stalk_layout(d)
    rows = sum(d.stalk(b) for (_, b) in d.poset.hasse_edges())
    system = Matrix.zeros(rows, total, d.field)
    r = 0
    one = d.field.one()
    for (a, b) in d.poset.hasse_edges():
        m = d.edge_map[(a, b)]
        ca, cb = offsets[a], offsets[b]
        for i in range(m.rows):
            row = system.data[r + i]
            for j in range(m.cols):
                if m.data[i][j]:
                    row[ca + j] = m.data[i][j]
            row[cb + i] = d.field.neg(one)
        r += m.rows
    basis = kernel_basis(system)
    return SectionSpace(layout, offsets, basis, len(basis))


@dataclass(frozen=True)
class TransportResult:
    path: tuple[str, ...]
    matrix: Matrix


def _step_matrix(d: Sheaf, a: str, b: str) -> Matrix:
    """Transport matrix for one zig-zag step a -> b (ascending or descending)."""
    if a == b:
        return Matrix.identity(d.stalk(a), d.field)
    if d.poset.lt(a, b):
        return d.map(a, b)
    if d.poset.lt(b, a):
        m = d.map(b, a)
        inv = invert(m)
        if inv is None:
            raise NonInvertibleMap(f"map {b!r} -> {a!r} is not invertible")
        return inv
    raise NotAPath(f"consecutive elements {a!r}, {b!r} are incomparable")


def parallel_transport(d: Sheaf, path) -> TransportResult:
    """Composition of structure maps along a zig-zag path, with inverses on
    descending steps."""
    path = [str(x) for x in path]
    if len(path) < 1:
        raise NotAPath("empty path")
    for x in path:
        d.poset.index(x)
    m = Matrix.identity(d.stalk(path[0]), d.field)
    for a, b in zip(path, path[1:]):
        m = _step_matrix(d, a, b) @ m
    return TransportResult(tuple(path), m)


def monodromy(d: Sheaf, base: str) -> list[TransportResult]:
    """Transport matrices around the fundamental cycles of the Hasse diagram,
    one per non-tree edge of a breadth-first spanning tree rooted at base."""
    p = d.poset
    p.index(base)
    neighbors: dict[str, list[str]] = {e: [] for e in p.elements}
    for (a, b) in p.hasse_edges():
        neighbors[a].append(b)
        neighbors[b].append(a)
    for e in neighbors:
        neighbors[e].sort(key=p.topo_position)
    parent: dict[str, str | None] = {base: None}
    queue = [base]
    tree_edges: set[frozenset] = set()
    while queue:
        current = queue.pop(0)
        for nxt in neighbors[current]:
            if nxt not in parent:
                parent[nxt] = current
                tree_edges.add(frozenset((current, nxt)))
                queue.append(nxt)
    if len(parent) != len(p.elements):
        raise Disconnected("Hasse diagram is not connected")

    def tree_path(x: str) -> list[str]:
        out = [x]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return list(reversed(out))

    loops = []
    extra = [
        (a, b)
        for (a, b) in p.hasse_edges()
        if frozenset((a, b)) not in tree_edges
    ]
    extra.sort(key=lambda ab: (p.topo_position(ab[0]), p.topo_position(ab[1])))
    for (a, b) in extra:
        loop = tree_path(a) + list(reversed(tree_path(b)))
        loops.append(parallel_transport(d, loop))
    return loops
