"""Finite posets stored by their Hasse diagrams: construction, down-sets,
order complexes, gradings, and the cell-like classification used by the
one-shot cohomology machinery.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import (
    CycleDetected,
    DuplicateElement,
    EmptyHyperedge,
    UnknownElement,
    UnknownVertex,
)
from .linalg import AugChainComplex, FieldTag, Matrix, homology_basis


class RedundantCoversWarning(UserWarning):
    """Input covers contained transitive edges; they were silently reduced."""


def _toposort_indices(n: int, succ: list[set[int]]) -> list[int]:
    """Kahn's algorithm, ties broken by declaration index."""
    indeg = [0] * n
    for a in range(n):
        for b in succ[a]:
            indeg[b] += 1
    from heapq import heapify, heappop, heappush

    ready = [i for i in range(n) if indeg[i] == 0]
    heapify(ready)
    order = []
    while ready:
        a = heappop(ready)
        order.append(a)
        for b in sorted(succ[a]):
            indeg[b] -= 1
            if indeg[b] == 0:
                heappush(ready, b)
    if len(order) != n:
        raise CycleDetected("covering relation contains a directed cycle")
    return order


def _closure_from_succ(n: int, succ: list[set[int]], topo: list[int]) -> list[set[int]]:
    """up[i] = set of j with i < j, accumulated in reverse topological order."""
    up: list[set[int]] = [set() for _ in range(n)]
    for a in reversed(topo):
        acc: set[int] = set()
        for b in succ[a]:
            acc.add(b)
            acc |= up[b]
        up[a] = acc
    for i in range(n):
        if i in up[i]:
            raise CycleDetected("relation is not irreflexive")
    return up


def _reduce_succ(n: int, up: list[set[int]]) -> list[set[int]]:
    """Transitive reduction: keep i->j only when no intermediate k has i<k<j."""
    reduced: list[set[int]] = [set() for _ in range(n)]
    for a in range(n):
        for b in up[a]:
            if not any(b in up[k] for k in up[a] if k != b):
                reduced[a].add(b)
    return reduced


class Poset:
    """Immutable finite poset.  Elements are opaque strings; all internal
    indexing uses dense integer handles in declaration order.
    """

    __slots__ = ("elements", "covers", "_index", "_succ", "_pred", "_up", "_down",
                 "topo_order", "_topo_pos")

    def __init__(self, elements: tuple[str, ...], covers: tuple[tuple[str, str], ...],
                 succ: list[set[int]], up: list[set[int]], topo_idx: list[int]):
        self.elements = elements
        self.covers = covers
        self._index = {e: i for i, e in enumerate(elements)}
        self._succ = succ
        self._pred: list[set[int]] = [set() for _ in elements]
        for a in range(len(elements)):
            for b in succ[a]:
                self._pred[b].add(a)
        self._up = up
        self._down: list[set[int]] = [set() for _ in elements]
        for a in range(len(elements)):
            for b in up[a]:
                self._down[b].add(a)
        self.topo_order = tuple(elements[i] for i in topo_idx)
        self._topo_pos = {e: k for k, e in enumerate(self.topo_order)}

    # -- basic queries ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, element: str) -> bool:
        return element in self._index

    def index(self, element: str) -> int:
        try:
            return self._index[element]
        except KeyError:
            raise UnknownElement(f"element {element!r} is not in the poset") from None

    def topo_position(self, element: str) -> int:
        return self._topo_pos[element]

    def lt(self, a: str, b: str) -> bool:
        return self.index(b) in self._up[self.index(a)]

    def leq(self, a: str, b: str) -> bool:
        return a == b or self.lt(a, b)

    def strict_upper(self, s: str) -> set[str]:
        return {self.elements[i] for i in self._up[self.index(s)]}

    def strict_lower(self, s: str) -> set[str]:
        return {self.elements[i] for i in self._down[self.index(s)]}

    def covers_of(self, s: str) -> list[str]:
        """Elements covering s, in topo order."""
        i = self.index(s)
        return sorted((self.elements[j] for j in self._succ[i]), key=self._topo_pos.get)

    def covered_by(self, s: str) -> list[str]:
        i = self.index(s)
        return sorted((self.elements[j] for j in self._pred[i]), key=self._topo_pos.get)

    def minimal_elements(self) -> list[str]:
        return [e for i, e in enumerate(self.elements) if not self._pred[i]]

    def maximal_elements(self) -> list[str]:
        return [e for i, e in enumerate(self.elements) if not self._succ[i]]

    def closure_pairs(self) -> set[tuple[str, str]]:
        return {
            (self.elements[a], self.elements[b])
            for a in range(len(self.elements))
            for b in self._up[a]
        }

    def hasse_edges(self) -> tuple[tuple[str, str], ...]:
        return self.covers

    def __repr__(self) -> str:
        return f"Poset({len(self.elements)} elements, {len(self.covers)} covers)"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poset)
            and self.elements == other.elements
            and self.covers == other.covers
        )

    def __hash__(self):
        return hash((self.elements, self.covers))


def build_poset(elements, covers) -> Poset:
    """Validate and build a poset from element identifiers and cover pairs.

    Redundant (transitive) covers are reduced with a RedundantCoversWarning;
    cycles, unknown endpoints and duplicate identifiers are errors.
    """
    elements = tuple(str(e) for e in elements)
    seen = set()
    for e in elements:
        if e in seen:
            raise DuplicateElement(f"duplicate element {e!r}")
        seen.add(e)
    index = {e: i for i, e in enumerate(elements)}
    n = len(elements)
    succ: list[set[int]] = [set() for _ in range(n)]
    for a, b in covers:
        a, b = str(a), str(b)
        if a not in index:
            raise UnknownElement(f"cover endpoint {a!r} is not a declared element")
        if b not in index:
            raise UnknownElement(f"cover endpoint {b!r} is not a declared element")
        if a == b:
            raise CycleDetected(f"reflexive cover ({a!r}, {b!r})")
        succ[index[a]].add(index[b])
    topo = _toposort_indices(n, succ)
    up = _closure_from_succ(n, succ, topo)
    reduced = _reduce_succ(n, up)
    if reduced != succ:
        warnings.warn(
            "input covers contained transitive edges; stored their reduction",
            RedundantCoversWarning,
            stacklevel=2,
        )
    cover_pairs = tuple(
        (elements[a], elements[b])
        for a in range(n)
        for b in sorted(reduced[a])
    )
    return Poset(elements, cover_pairs, reduced, up, topo)


def transitive_reduction(pairs) -> set[tuple[str, str]]:
    """Minimal edge set whose transitive closure equals the closure of the input."""
    pairs = [(str(a), str(b)) for a, b in pairs]
    names: list[str] = []
    seen: set[str] = set()
    for a, b in pairs:
        for x in (a, b):
            if x not in seen:
                seen.add(x)
                names.append(x)
    index = {e: i for i, e in enumerate(names)}
    n = len(names)
    succ: list[set[int]] = [set() for _ in range(n)]
    for a, b in pairs:
        if a == b:
            raise CycleDetected(f"reflexive pair ({a!r}, {b!r})")
        succ[index[a]].add(index[b])
    topo = _toposort_indices(n, succ)
    up = _closure_from_succ(n, succ, topo)
    reduced = _reduce_succ(n, up)
    return {(names[a], names[b]) for a in range(n) for b in reduced[a]}


def topological_sort(p: Poset) -> list[str]:
    """Linearization respecting the order; ties broken by declaration order."""
    return list(p.topo_order)


def down_set(p: Poset, s: str, strict: bool = True) -> Poset:
    """Induced subposet on the elements below s (strictly, or weakly)."""
    i = p.index(s)
    keep = {p.elements[j] for j in p._down[i]}
    if not strict:
        keep.add(s)
    return induced_subposet(p, keep)


def induced_subposet(p: Poset, keep) -> Poset:
    """Subposet on a subset of elements; covers are re-reduced from the closure."""
    keep = set(keep)
    for e in keep:
        p.index(e)
    elements = [e for e in p.elements if e in keep]
    pairs = [(a, b) for (a, b) in p.closure_pairs() if a in keep and b in keep]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RedundantCoversWarning)
        return build_poset(elements, pairs)


@dataclass(frozen=True)
class ChainSimplex:
    """A strictly increasing chain s_0 < ... < s_j, a simplex of the order complex."""

    elements: tuple[str, ...]

    @property
    def dim(self) -> int:
        return len(self.elements) - 1

    @property
    def top(self) -> str:
        """The largest element of the chain."""
        return self.elements[-1]


def order_complex(p: Poset) -> list[list[ChainSimplex]]:
    """All nonempty chains of p grouped by dimension.

    Within each dimension, chains are listed in lexicographic order of their
    topo_order positions.
    """
    topo = list(p.topo_order)
    groups: list[list[ChainSimplex]] = []

    def extend(chain: list[str]):
        dim = len(chain) - 1
        while len(groups) <= dim:
            groups.append([])
        groups[dim].append(ChainSimplex(tuple(chain)))
        last = chain[-1]
        for t in topo:
            if p.lt(last, t):
                chain.append(t)
                extend(chain)
                chain.pop()

    for s in topo:
        extend([s])
    return groups


def simplicial_chain_complex(groups: list[list[ChainSimplex]], field: FieldTag,
                             augmented: bool = True) -> AugChainComplex:
    """Augmented simplicial chain complex of an order complex (or any list of
    simplices closed under faces), with alternating-sign boundaries.
    """
    labels: list = []
    degrees: list[int] = []
    if augmented:
        labels.append("@")
        degrees.append(-1)
    position: dict[tuple[str, ...], int] = {}
    for dim, simplices in enumerate(groups):
        for sx in simplices:
            position[sx.elements] = len(labels)
            labels.append(sx.elements)
            degrees.append(dim)
    n = len(labels)
    m = Matrix.zeros(n, n, field)
    one = field.one()
    for dim, simplices in enumerate(groups):
        for sx in simplices:
            col = position[sx.elements]
            if dim == 0:
                if augmented:
                    m.data[0][col] = one
                continue
            sign = one
            for i in range(dim + 1):
                face = sx.elements[:i] + sx.elements[i + 1:]
                m.data[position[face]][col] = sign if i % 2 == 0 else field.neg(sign)
    return AugChainComplex(labels, degrees, m, field)


def reduced_betti_numbers(p: Poset, field: FieldTag) -> dict[int, int]:
    """Reduced field Betti numbers of the order complex of p, indexed from -1.

    The empty poset has reduced homology of the (-1)-sphere: betti[-1] = 1.
    """
    groups = order_complex(p)
    complex_ = simplicial_chain_complex(groups, field, augmented=True)
    dims = homology_basis(complex_).dims_by_degree()
    return {d: k for d, k in sorted(dims.items())}


@dataclass(frozen=True)
class PosetClassification:
    """Gradedness plus the homology-sphere structure of every strict down-set."""

    graded: bool
    rank: dict[str, int] | None
    homology_cell: bool
    morse_cell: bool
    cell_dims: dict[str, int] | None


def _grading(p: Poset) -> dict[str, int] | None:
    """Unique rank function when all maximal descending chains agree, else None."""
    lengths: dict[int, set[int]] = {}
    for e in p.topo_order:
        i = p.index(e)
        preds = p._pred[i]
        if not preds:
            lengths[i] = {0}
        else:
            acc: set[int] = set()
            for q in preds:
                acc |= {l + 1 for l in lengths[q]}
            lengths[i] = acc
    if any(len(v) != 1 for v in lengths.values()):
        return None
    return {p.elements[i]: next(iter(v)) for i, v in lengths.items()}


def _sphere_dimension(betti: dict[int, int]) -> int | None:
    """d such that the reduced Betti numbers are those of S^(d-1), else None."""
    nonzero = {k: v for k, v in betti.items() if v}
    if len(nonzero) != 1:
        return None
    (deg, count), = nonzero.items()
    if count != 1:
        return None
    return deg + 1


def classify(p: Poset, field: FieldTag) -> PosetClassification:
    """Grading search plus the field-homology sphere test on all strict down-sets.

    Field homology only: posets whose down-sets carry torsion may be classified
    differently than with integral coefficients.
    """
    rank = _grading(p)
    cell_dims: dict[str, int] = {}
    morse = True
    for s in p.elements:
        betti = reduced_betti_numbers(down_set(p, s, strict=True), field)
        d = _sphere_dimension(betti)
        if d is None:
            morse = False
            break
        cell_dims[s] = d
    homology_cell = (
        morse
        and rank is not None
        and all(cell_dims[s] == rank[s] for s in p.elements)
    )
    return PosetClassification(
        graded=rank is not None,
        rank=rank,
        homology_cell=homology_cell,
        morse_cell=morse,
        cell_dims=cell_dims if morse else None,
    )


def hypergraph_to_poset(vertices, hyperedges, edge_names=None) -> Poset:
    """Two-layer poset V ⊔ H with v < h iff v belongs to the hyperedge h."""
    vertices = [str(v) for v in vertices]
    vertex_set = set(vertices)
    names = []
    covers = []
    for k, edge in enumerate(hyperedges):
        members = [str(v) for v in edge]
        if not members:
            raise EmptyHyperedge(f"hyperedge #{k} is empty")
        for v in members:
            if v not in vertex_set:
                raise UnknownVertex(f"hyperedge #{k} mentions unknown vertex {v!r}")
        if edge_names is not None:
            name = str(edge_names[k])
        else:
            name = f"h{k}"
            while name in vertex_set:
                name = "_" + name
        names.append(name)
        covers.extend((v, name) for v in dict.fromkeys(members))
    return build_poset(vertices + names, covers)


def simplicial_complex_poset(simplices) -> Poset:
    """Poset of nonempty simplices of the simplicial complex generated by the input.

    Elements are canonical comma-joined sorted vertex tuples ("1", "1,2", ...),
    declared by (dimension, lexicographic) order; this is the encoding expected
    by the cellular cochain construction.
    """
    closed: set[tuple[str, ...]] = set()

    def close(simplex: tuple[str, ...]):
        if simplex in closed or not simplex:
            return
        closed.add(simplex)
        for i in range(len(simplex)):
            close(simplex[:i] + simplex[i + 1:])

    for sx in simplices:
        vertices = tuple(sorted({str(v) for v in sx}))
        close(vertices)
    ordered = sorted(closed, key=lambda t: (len(t), t))
    names = {t: ",".join(t) for t in ordered}
    covers = []
    for t in ordered:
        if len(t) == 1:
            continue
        for i in range(len(t)):
            covers.append((names[t[:i] + t[i + 1:]], names[t]))
    return build_poset([names[t] for t in ordered], covers)


def decode_simplicial_elements(p: Poset) -> dict[str, tuple[str, ...]] | None:
    """Map each element to its vertex tuple when the poset encodes a simplicial
    complex (strict order = strict inclusion, faces all present); else None.
    """
    decoded: dict[str, tuple[str, ...]] = {}
    sets_seen = set()
    for e in p.elements:
        parts = tuple(sorted(e.split(",")))
        if any(not part for part in parts) or len(set(parts)) != len(parts):
            return None
        if parts in sets_seen:
            return None
        sets_seen.add(parts)
        decoded[e] = parts
    by_set = {v: k for k, v in decoded.items()}
    for e, parts in decoded.items():
        if len(parts) > 1:
            for i in range(len(parts)):
                if parts[:i] + parts[i + 1:] not in by_set:
                    return None
    closure = p.closure_pairs()
    for a in p.elements:
        for b in p.elements:
            inclusion = set(decoded[a]) < set(decoded[b])
            if inclusion != ((a, b) in closure):
                return None
    return decoded
