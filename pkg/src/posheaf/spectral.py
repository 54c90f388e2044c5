"""Real-valued Laplacians of all orders on any cochain construction, weak and
strong normalization, a cyclic-Jacobi symmetric eigensolver, Dirichlet
energies, and heat diffusion with convergence-rate estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateInitialState,
    DegreeOutOfRange,
    DimensionMismatch,
    FieldMismatch,
    NoConvergence,
    NotTwoLayer,
    OverflowOnConvert,
    TraceTooShort,
    UnstableStepSize,
)
from .linalg import RATIONALS, REALS
from .cochain import CochainComplexInstance, SummandTag
from .sheaf import Sheaf, stalk_layout

D2_RESIDUAL_TOL = 1e-10
ZERO_EIG_FLOOR = 1e-12


class RealComplex:
    """Float64 shadow of a cochain complex: per-degree summand tags, summand
    dimensions (the block boundaries used by strong normalization), and dense
    differentials."""

    __slots__ = ("kind", "degrees", "dims", "diffs")

    def __init__(self, kind: str, degrees: list[list[SummandTag]],
                 dims: list[list[int]], diffs: list[np.ndarray]):
        self.kind = kind
        self.degrees = degrees
        self.dims = dims
        self.diffs = diffs
        self._check_residual()

    @property
    def top_degree(self) -> int:
        return len(self.degrees) - 1

    def degree_dim(self, j: int) -> int:
        if 0 <= j <= self.top_degree:
            return sum(self.dims[j])
        return 0

    def diff(self, j: int) -> np.ndarray:
        if 0 <= j < len(self.diffs):
            return self.diffs[j]
        return np.zeros((self.degree_dim(j + 1), self.degree_dim(j)))

    def _check_residual(self):
        for j in range(len(self.diffs) - 1):
            a, b = self.diffs[j + 1], self.diffs[j]
            if a.size and b.size:
                bound = D2_RESIDUAL_TOL * (
                    1.0 + _max_abs(a) * _max_abs(b)
                )
                if _max_abs(a @ b) > bound:
                    raise FieldMismatch(f"d_{j+1} . d_{j} residual exceeds tolerance")


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def realize(c: CochainComplexInstance) -> RealComplex:
    """Entrywise exact-to-double conversion of a rational cochain complex."""
    if c.field.kind != RATIONALS:
        raise FieldMismatch(f"realize expects a rational complex, got {c.field}")
    diffs = []
    for m in c.diffs:
        out = np.zeros((m.rows, m.cols))
        for i in range(m.rows):
            for j in range(m.cols):
                v = m.data[i][j]
                if v:
                    try:
                        out[i, j] = float(v)
                    except OverflowError as exc:
                        raise OverflowOnConvert(str(exc)) from exc
        diffs.append(out)
    return RealComplex(c.kind, c.degrees, c.dims, diffs)


@dataclass
class Laplacian:
    """Symmetric Laplacian of one degree, with the summand block sizes used by
    the stalk-wise normalization and a provenance note."""

    degree: int
    matrix: np.ndarray
    normalization: str
    blocks: list[int]
    provenance: str = ""

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def laplacian(rc: RealComplex, j: int, norm: str = "none") -> Laplacian:
    """Degree-j Laplacian d_j^T d_j + d_{j-1} d_{j-1}^T, optionally normalized."""
    if not (0 <= j <= rc.top_degree):
        raise DegreeOutOfRange(f"degree {j} outside 0..{rc.top_degree}")
    up = rc.diff(j)
    mat = up.T @ up
    if j > 0:
        down = rc.diff(j - 1)
        mat = mat + down @ down.T
    mat = 0.5 * (mat + mat.T)
    norm = norm.lower()
    if norm == "none":
        out = mat
    elif norm == "weak":
        out = _weak_normalize(mat)
    elif norm == "strong":
        out = _strong_normalize(mat, rc.dims[j])
    else:
        raise FieldMismatch(f"unknown normalization {norm!r}")
    out = 0.5 * (out + out.T)
    return Laplacian(j, out, norm, list(rc.dims[j]), provenance=rc.kind)


def _weak_normalize(mat: np.ndarray) -> np.ndarray:
    """K^(1/2) L K^(1/2) with K the pseudo-inverse of diag(L), zeros mapped to 1."""
    diag = np.diag(mat).copy()
    k = np.where(diag != 0.0, 1.0 / np.where(diag != 0.0, diag, 1.0), 1.0)
    half = np.sqrt(k)
    return mat * np.outer(half, half)


def _strong_normalize(mat: np.ndarray, blocks: list[int]) -> np.ndarray:
    """Blockwise diagonalization then pseudo-inverse scaling, zeros mapped to 1."""
    n = mat.shape[0]
    q = np.eye(n)
    scale = np.ones(n)
    offset = 0
    for size in blocks:
        if size == 0:
            continue
        block = mat[offset:offset + size, offset:offset + size]
        eigenvalues, vectors = jacobi_eigh(block)
        q[offset:offset + size, offset:offset + size] = vectors
        top = float(eigenvalues[-1]) if eigenvalues.size else 0.0
        threshold = max(ZERO_EIG_FLOOR, ZERO_EIG_FLOOR * top)
        for i, lam in enumerate(eigenvalues):
            scale[offset + i] = 1.0 / lam if lam > threshold else 1.0
        offset += size
    half = np.sqrt(scale)
    rotated = q.T @ mat @ q
    return rotated * np.outer(half, half)


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10,
                max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations for a real symmetric matrix.

    Returns ascending eigenvalues and the matrix whose columns are the
    corresponding orthonormal eigenvectors (deterministic sign convention).
    """
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    work = a.astype(float).copy()
    vectors = np.eye(n)
    scale = max(_max_abs(work), ZERO_EIG_FLOOR)
    converged = False
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(n - 1):
            off = max(off, float(np.max(np.abs(work[p, p + 1:]))))
        if off <= tol * scale:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * work[:, p] - s * work[:, q]
                rot_q = s * work[:, p] + c * work[:, q]
                work[:, p], work[:, q] = rot_p, rot_q
                rot_p = c * work[p, :] - s * work[q, :]
                rot_q = s * work[p, :] + c * work[q, :]
                work[p, :], work[q, :] = rot_p, rot_q
                work[p, q] = work[q, p] = 0.0
                rot_p = c * vectors[:, p] - s * vectors[:, q]
                rot_q = s * vectors[:, p] + c * vectors[:, q]
                vectors[:, p], vectors[:, q] = rot_p, rot_q
    if not converged:
        raise NoConvergence(f"Jacobi sweeps did not converge within {max_sweeps}")
    eigenvalues = np.diag(work).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    for i in range(n):
        column = vectors[:, i]
        lead = int(np.argmax(np.abs(column)))
        if column[lead] < 0:
            vectors[:, i] = -column
    return eigenvalues, vectors


@dataclass
class SpectralBundle:
    """Full symmetric spectrum: ascending eigenvalues, orthonormal eigenvector
    columns, and the harmonic bookkeeping derived from a relative threshold."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    lam_min: float | None
    lam_max: float
    harmonic_dim: int
    tol: float

    def harmonic_projector(self) -> np.ndarray:
        h = self.eigenvectors[:, : self.harmonic_dim]
        return h @ h.T


def eigendecompose(l: Laplacian, tol: float = 1e-8) -> SpectralBundle:
    eigenvalues, vectors = jacobi_eigh(l.matrix)
    lam_max = float(eigenvalues[-1]) if eigenvalues.size else 0.0
    threshold = max(tol * lam_max, ZERO_EIG_FLOOR)
    harmonic = int(np.sum(eigenvalues < threshold))
    positive = eigenvalues[eigenvalues >= threshold]
    lam_min = float(positive[0]) if positive.size else None
    return SpectralBundle(eigenvalues, vectors, lam_min, lam_max, harmonic, tol)


def harmonic_dim(l: Laplacian, tol: float = 1e-8) -> int:
    """Count of near-zero eigenvalues; equals the exact Betti number of the
    originating complex in that degree."""
    return eigendecompose(l, tol).harmonic_dim


def dirichlet_energy(rc: RealComplex, x) -> float:
    """||d_0 x||^2 for a 0-cochain x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (rc.degree_dim(0),):
        raise DimensionMismatch(
            f"0-cochain has length {x.shape}, expected ({rc.degree_dim(0)},)"
        )
    image = rc.diff(0) @ x
    return float(image @ image)


@dataclass
class DiffusionConfig:
    eta: float | None = None
    steps: int = 100
    mode: str = "discrete"


@dataclass
class DiffusionTrace:
    states: list[np.ndarray]
    energies: list[float]
    distances: list[float]
    eta: float
    mode: str
    limit: np.ndarray


def default_eta(lam_max: float) -> float:
    """1 / (2 lam_max): keeps every decay factor 1 - 2*eta*lambda inside [0, 1)."""
    return 0.5 / lam_max if lam_max > 0 else 0.5


def heat_diffusion(l: Laplacian, x0, cfg: DiffusionConfig | None = None) -> DiffusionTrace:
    """Gradient flow of the quadratic energy of a Laplacian.

    Discrete mode iterates x -> x - 2*eta*L x; continuous-spectral mode
    evaluates exp(-2 eta L t) x0 at unit-spaced times.  The stored limit is the
    orthogonal projection of x0 onto the harmonic subspace.
    """
    cfg = cfg or DiffusionConfig()
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (l.size,):
        raise DimensionMismatch(f"state has shape {x0.shape}, Laplacian is {l.size}")
    spectrum = eigendecompose(l)
    eta = cfg.eta if cfg.eta is not None else default_eta(spectrum.lam_max)
    mode = cfg.mode.lower()
    if mode not in ("discrete", "continuous"):
        raise UnstableStepSize(f"unknown diffusion mode {cfg.mode!r}")
    if eta <= 0:
        raise UnstableStepSize("step size must be positive")
    if mode == "discrete" and spectrum.lam_max > 0 and eta >= 1.0 / spectrum.lam_max:
        raise UnstableStepSize(
            f"eta={eta} is not below 1/lambda_max={1.0 / spectrum.lam_max}"
        )
    limit = spectrum.harmonic_projector() @ x0
    coords = spectrum.eigenvectors.T @ x0
    states = [x0]
    if mode == "discrete":
        operator = np.eye(l.size) - 2.0 * eta * l.matrix
        x = x0
        for _ in range(cfg.steps):
            x = operator @ x
            states.append(x)
    else:
        for k in range(1, cfg.steps + 1):
            decay = np.exp(-2.0 * eta * spectrum.eigenvalues * float(k))
            states.append(spectrum.eigenvectors @ (decay * coords))
    energies = [float(x @ (l.matrix @ x)) for x in states]
    distances = [float(np.linalg.norm(x - limit)) for x in states]
    return DiffusionTrace(states, energies, distances, eta, mode, limit)


def convergence_rate(trace: DiffusionTrace, spectrum: SpectralBundle) -> float:
    """Least-squares decay ratio of the tail half of the distance sequence.

    For discrete traces of a generic start the estimate approaches
    |1 - 2 eta lambda_min|; continuous traces approach exp(-2 eta lambda_min).
    """
    n = len(trace.distances)
    if n < 10:
        raise TraceTooShort(f"trace has {n} distances, need at least 10")
    start_norm = trace.distances[0]
    scale = 1.0 + float(np.linalg.norm(trace.states[0]))
    if start_norm <= 1e-12 * scale:
        raise DegenerateInitialState("initial state is already harmonic")
    if spectrum.lam_min is not None:
        lam = spectrum.eigenvalues
        mask = np.abs(lam - spectrum.lam_min) <= 1e-9 * max(spectrum.lam_max, 1.0)
        component = spectrum.eigenvectors[:, mask].T @ (
            trace.states[0] - trace.limit
        )
        if float(np.linalg.norm(component)) <= 1e-12 * scale:
            raise DegenerateInitialState(
                "initial state has no component on the slowest mode"
            )
    tail = trace.distances[n // 2:]
    # float cancellation floors the distances; points below the floor carry no
    # decay information and would bias the slope toward zero
    noise_floor = max(1e-300, 1e-13 * start_norm)
    ks = []
    logs = []
    for i, dk in enumerate(tail):
        if dk > noise_floor:
            ks.append(float(n // 2 + i))
            logs.append(math.log(dk))
    if len(ks) < 2:
        return 0.0
    ks_arr = np.array(ks)
    logs_arr = np.array(logs)
    slope = float(np.polyfit(ks_arr, logs_arr, 1)[0])
    return math.exp(slope)


# ---------------------------------------------------------------------------
# Hypergraph energies (two-layer posets).
# ---------------------------------------------------------------------------

def _as_real_sheaf_vectors(h: Sheaf, x) -> dict[str, np.ndarray]:
    layout, offsets, total = stalk_layout(h)
    x = np.asarray(x, dtype=float)
    if x.shape != (total,):
        raise DimensionMismatch(f"cochain has shape {x.shape}, expected ({total},)")
    return {e: x[offsets[e]: offsets[e] + h.stalk(e)] for e in layout}


def _real_map(h: Sheaf, a: str, b: str) -> np.ndarray:
    m = h.edge_map[(a, b)]
    return np.array([[float(v) for v in row] for row in m.data], dtype=float)


def _check_two_layer(h: Sheaf):
    """Every cover must run from a minimal element straight to a maximal one."""
    p = h.poset
    tops = set(p.maximal_elements())
    bottoms = set(p.minimal_elements())
    for (a, b) in p.hasse_edges():
        if a not in bottoms or b not in tops:
            raise NotTwoLayer("poset is not a two-layer vertex/hyperedge poset")


def hypergraph_energy_forms(h: Sheaf, x) -> tuple[float, float]:
    """The two Dirichlet energies of a sheaf on a hypergraph poset.

    q_roos sums ||x_b - f_ab(x_a)||^2 over incidences; q_pairwise is the
    barycentric pairwise form (1/|A_b|) sum over unordered pairs of
    ||f_a'b(x_a') - f_a''b(x_a'')||^2.  The two agree when every hyperedge
    value sits at the barycenter of its incoming images.
    """
    _check_two_layer(h)
    vectors = _as_real_sheaf_vectors(h, x)
    p = h.poset
    q_roos = 0.0
    q_pairwise = 0.0
    for b in p.maximal_elements():
        members = p.covered_by(b)
        if not members:
            continue
        images = [_real_map(h, a, b) @ vectors[a] for a in members]
        xb = vectors[b]
        for img in images:
            diff = xb - img
            q_roos += float(diff @ diff)
        k = len(images)
        pair_sum = 0.0
        for i in range(k):
            for j in range(i + 1, k):
                diff = images[i] - images[j]
                pair_sum += float(diff @ diff)
        q_pairwise += pair_sum / k
    return q_roos, q_pairwise


def hyperedge_barycenters(h: Sheaf, x) -> np.ndarray:
    """Copy of x with every hyperedge value replaced by the barycenter of its
    incoming images; at this assignment the two energy forms coincide."""
    _check_two_layer(h)
    layout, offsets, total = stalk_layout(h)
    vectors = _as_real_sheaf_vectors(h, x)
    out = np.array(np.asarray(x, dtype=float), copy=True)
    for b in h.poset.maximal_elements():
        members = h.poset.covered_by(b)
        if not members:
            continue
        images = [_real_map(h, a, b) @ vectors[a] for a in members]
        out[offsets[b]: offsets[b] + h.stalk(b)] = sum(images) / len(images)
    return out


# ---------------------------------------------------------------------------
# Direct real complexes for sheaves that never pass through exact arithmetic.
# ---------------------------------------------------------------------------

def real_sheaf_complex(sheaf: Sheaf, inc=None) -> RealComplex:
    """Minimal-construction RealComplex for a sheaf over Q or R.

    The incidence data depends only on the poset, so it is computed over the
    rationals and realized; the sheaf's structure maps may already be floats.
    """
    from .cochain import minimal_complex, minimal_incidence
    from .linalg import QQ

    if sheaf.field.kind == RATIONALS:
        if inc is None:
            inc = minimal_incidence(sheaf.poset, sheaf.field)
        return realize(minimal_complex(sheaf, inc))
    if sheaf.field.kind != REALS:
        raise FieldMismatch(f"cannot realize a sheaf over {sheaf.field}")
    if inc is None:
        inc = minimal_incidence(sheaf.poset, QQ)
    top = max((g.degree for g in inc.generators), default=-1)
    degrees: list[list[SummandTag]] = [[] for _ in range(top + 1)]
    dims: list[list[int]] = [[] for _ in range(top + 1)]
    slot: dict[int, int] = {}
    for g in inc.generators:
        slot[g.gid] = len(degrees[g.degree])
        degrees[g.degree].append(SummandTag(g.owner, slot[g.gid], gid=g.gid))
        dims[g.degree].append(sheaf.stalk(g.owner))
    gens_by_degree: dict[int, list] = {}
    for g in inc.generators:
        gens_by_degree.setdefault(g.degree, []).append(g)
    diffs = []
    for j in range(top):
        col_off = np.cumsum([0] + dims[j]).tolist()
        row_off = np.cumsum([0] + dims[j + 1]).tolist()
        m = np.zeros((row_off[-1], col_off[-1]))
        for g2 in gens_by_degree.get(j + 1, ()):
            for g1 in gens_by_degree.get(j, ()):
                scalar = inc.incidence(g2, g1)
                if not scalar:
                    continue
                block = _real_composed_map(sheaf, g1.owner, g2.owner)
                r0, c0 = row_off[slot[g2.gid]], col_off[slot[g1.gid]]
                m[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] = (
                    float(Fraction(scalar)) * block
                )
        diffs.append(m)
    return RealComplex("minimal", degrees, dims, diffs)


def _real_composed_map(sheaf: Sheaf, s: str, t: str) -> np.ndarray:
    if s == t:
        return np.eye(sheaf.stalk(s))
    path = sheaf.canonical_path(s, t)
    m = _real_map(sheaf, path[0], path[1])
    for a, b in zip(path[1:], path[2:]):
        m = _real_map(sheaf, a, b) @ m
    return m
