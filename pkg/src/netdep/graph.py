"""Network construction, geodesic distances and spectral utilities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import io
from .errors import ContractViolation, FormatError, ParameterError

#: Sentinel stored in a :class:`GeodesicMatrix` for pairs with no connecting path.
UNREACHABLE = -1

_SPECTRAL_TOL = 1e-8


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Binary adjacency matrix ``A`` without self-loops.

    Parameters
    ----------
    entries : array_like
        ``n x n`` array of 0/1 values.
    symmetric : bool, optional
        Declares the network undirected. When omitted it is inferred from
        ``entries``; when given as ``True`` the entries are checked.
    """

    entries: np.ndarray
    symmetric: bool = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ContractViolation(f"adjacency must be a non-empty square matrix, got shape {a.shape}")
        if not np.all((a == 0) | (a == 1)):
            raise ContractViolation("adjacency entries must be exactly 0 or 1")
        if np.any(np.diag(a) != 0):
            raise ContractViolation("adjacency diagonal must be zero (no self-loops)")
        a = a.astype(np.int64)
        a.setflags(write=False)
        is_sym = bool(np.array_equal(a, a.T))
        if self.symmetric is None:
            object.__setattr__(self, "symmetric", is_sym)
        elif self.symmetric and not is_sym:
            raise ContractViolation("adjacency flagged symmetric but entries[i][j] != entries[j][i]")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def n_edges(self) -> int:
        """Undirected edge count if symmetric, else directed arc count."""
        total = int(self.entries.sum())
        return total // 2 if self.symmetric else total

    def as_float(self) -> np.ndarray:
        return self.entries.astype(float)


@dataclass(frozen=True)
class SpectralDecomposition:
    """``A = U diag(eigenvalues) U^T`` with eigenvalues in descending order."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def rotate(self, v) -> np.ndarray:
        """Coordinates of ``v`` in the eigenbasis, ``U^T v``."""
        return self.eigenvectors.T @ np.asarray(v, dtype=float)

    def apply(self, weights, v) -> np.ndarray:
        """Compute ``U diag(weights) U^T v``."""
        return self.eigenvectors @ (np.asarray(weights) * self.rotate(v))

    def matrix(self, weights) -> np.ndarray:
        """Assemble ``U diag(weights) U^T`` as a symmetric dense matrix."""
        u = self.eigenvectors
        m = (u * np.asarray(weights)) @ u.T
        return 0.5 * (m + m.T)


@dataclass(frozen=True)
class GeodesicMatrix:
    """Shortest-path lengths; unreachable pairs hold :data:`UNREACHABLE`."""

    distances: np.ndarray

    def reachable(self) -> np.ndarray:
        return self.distances != UNREACHABLE


def erdos_renyi_gnm(n: int, m: int, seed) -> AdjacencyMatrix:
    """Uniform random undirected graph with exactly ``m`` edges, ``G(n, M)``.

    The ``m`` edges are drawn without replacement from the ``n(n-1)/2``
    node pairs, so every graph with ``m`` edges is equally likely.
    """
    if n < 1:
        raise ParameterError(f"node count must be positive, got {n}")
    pairs = n * (n - 1) // 2
    if not 0 <= m <= pairs:
        raise ParameterError(f"edge count must be in [0, {pairs}] for n={n}, got {m}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(pairs, size=m, replace=False)
    rows, cols = np.triu_indices(n, k=1)
    a = np.zeros((n, n), dtype=np.int64)
    a[rows[chosen], cols[chosen]] = 1
    a += a.T
    return AdjacencyMatrix(a, symmetric=True)


def geodesic_distances(A: AdjacencyMatrix) -> GeodesicMatrix:
    """Breadth-first shortest-path lengths between all node pairs."""
    dist = shortest_path(csr_matrix(A.entries), directed=not A.symmetric, unweighted=True)
    out = np.full(dist.shape, UNREACHABLE, dtype=np.int64)
    finite = np.isfinite(dist)
    out[finite] = dist[finite].astype(np.int64)
    return GeodesicMatrix(out)


def matrix_power(A: AdjacencyMatrix, m: int) -> np.ndarray:
    """Walk counts: entry ``(i, j)`` of ``A^m`` is the number of length-``m`` walks."""
    if m < 0:
        raise ParameterError(f"power must be nonnegative, got {m}")
    return np.linalg.matrix_power(A.entries, m)


def eigendecompose(A: AdjacencyMatrix) -> SpectralDecomposition:
    """Symmetric eigendecomposition with a deterministic sign convention.

    Eigenvalues are sorted in descending order and every eigenvector is
    flipped so that its first nonzero component is positive.
    """
    if not A.symmetric:
        raise ContractViolation("eigendecompose requires a symmetric adjacency matrix")
    if not A.entries.any():
        return SpectralDecomposition(np.zeros(A.n), np.eye(A.n))
    w, u = np.linalg.eigh(A.as_float())
    order = np.argsort(-w, kind="stable")
    w, u = w[order], u[:, order]
    nonzero = np.abs(u) > 1e-10
    first = np.argmax(nonzero, axis=0)
    signs = np.sign(u[first, np.arange(u.shape[1])])
    u = u * np.where(signs < 0, -1.0, 1.0)
    return SpectralDecomposition(w, u)


def check_decomposition(A: AdjacencyMatrix, decomp: SpectralDecomposition, tol: float = _SPECTRAL_TOL) -> None:
    """Raise if ``decomp`` does not satisfy its orthonormality/reconstruction invariants."""
    u = decomp.eigenvectors
    if np.max(np.abs(u.T @ u - np.eye(decomp.n))) >= tol:
        raise ContractViolation("eigenvectors are not orthonormal")
    if np.max(np.abs(decomp.matrix(decomp.eigenvalues) - A.entries)) >= tol:
        raise ContractViolation("decomposition does not reconstruct A")


def row_normalize(A: AdjacencyMatrix) -> np.ndarray:
    """Row-stochastic weights ``W_ij = A_ij / sum_j A_ij``; isolated rows stay zero."""
    a = A.as_float()
    deg = a.sum(axis=1, keepdims=True)
    return np.divide(a, deg, out=np.zeros_like(a), where=deg > 0)


# -- serialization ---------------------------------------------------------


def write_edge_list(path, A: AdjacencyMatrix) -> None:
    """Write ``A`` as a ``src,dst`` CSV (0-indexed).

    A leading ``# nodes: n`` comment records the node count so that trailing
    isolated nodes survive a round trip. Undirected edges are written once
    with ``src < dst``.
    """
    a = A.entries
    src, dst = np.nonzero(np.triu(a, 1) if A.symmetric else a)
    with open(path, "w", newline="") as fh:
        fh.write(f"# nodes: {A.n}\n")
        fh.write(f"# directed: {'false' if A.symmetric else 'true'}\n")
        fh.write("src,dst\n")
        for i, j in zip(src, dst):
            fh.write(f"{i},{j}\n")


def read_edge_list(path, n: int | None = None, directed: bool | None = None) -> AdjacencyMatrix:
    """Load a ``src,dst`` edge list, validating indices and self-loops.

    The node count comes from ``n``, else from a ``# nodes:`` comment, else
    from the largest index seen.
    """
    declared_n = None
    declared_directed = False
    edges = []
    header_seen = False
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FormatError(path, None, f"cannot open: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                key, value = key.strip().lower(), value.strip().lower()
                if key == "nodes":
                    try:
                        declared_n = int(value)
                    except ValueError:
                        raise FormatError(path, lineno, f"bad node count {value!r}") from None
                elif key == "directed":
                    declared_directed = value == "true"
                continue
            fields = [f.strip() for f in line.split(",")]
            if not header_seen:
                if fields != ["src", "dst"]:
                    raise FormatError(path, lineno, "expected header 'src,dst'")
                header_seen = True
                continue
            if len(fields) != 2:
                raise FormatError(path, lineno, f"expected 2 columns, got {len(fields)}")
            try:
                i, j = int(fields[0]), int(fields[1])
            except ValueError:
                raise FormatError(path, lineno, f"node ids must be integers: {line!r}") from None
            if i < 0 or j < 0:
                raise FormatError(path, lineno, "node ids must be nonnegative")
            if i == j:
                raise FormatError(path, lineno, f"self-loop on node {i}")
            edges.append((lineno, i, j))
    if not header_seen:
        raise FormatError(path, None, "missing header 'src,dst'")
    size = n if n is not None else declared_n
    if size is None:
        size = 1 + max((max(i, j) for _, i, j in edges), default=-1)
    if size < 1:
        raise FormatError(path, None, "cannot determine a positive node count")
    is_directed = declared_directed if directed is None else directed
    a = np.zeros((size, size), dtype=np.int64)
    for lineno, i, j in edges:
        if i >= size or j >= size:
            raise FormatError(path, lineno, f"node id out of range for n={size}")
        a[i, j] = 1
        if not is_directed:
            a[j, i] = 1
    return AdjacencyMatrix(a, symmetric=None if is_directed else True)


def write_dense(path, A: AdjacencyMatrix) -> None:
    io.write_matrix(path, A.entries)


def read_dense(path) -> AdjacencyMatrix:
    m = io.read_matrix(path)
    try:
        return AdjacencyMatrix(m)
    except ContractViolation as exc:
        raise FormatError(path, None, str(exc)) from None

