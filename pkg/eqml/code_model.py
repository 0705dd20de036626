"""
Code structure - alist parsing, the Tanner graph, syndromes and the GF(2)
codeword space of an LDPC parity-check matrix.

Everything here is 0-based internally; alist files are 1-based.
"""

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, List, Sequence, Tuple, Union

import numpy as np


class AlistParseError(ValueError):
    """Base class for malformed alist input. Always names the offending line."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AlistDimensionError(AlistParseError):
    pass


class AlistIndexError(AlistParseError):
    pass


class AlistDuplicateEdgeError(AlistParseError):
    pass


class AlistConsistencyError(AlistParseError):
    pass


class PunctureMaskError(ValueError):
    pass


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TannerGraph:
    """
    Immutable bipartite graph of an M x N parity-check matrix.

    Edges are numbered densely in (check, var) order, so the edges of one
    check are contiguous and start at cn_start[m]. That layout is what the
    vectorized check-node kernels in eqml.bp rely on.
    """

    n_vars: int
    n_checks: int
    edge_check: np.ndarray
    edge_var: np.ndarray
    cn_start: np.ndarray
    vn_adjacency: Tuple[np.ndarray, ...]
    cn_adjacency: Tuple[np.ndarray, ...]
    vn_degree: np.ndarray
    cn_degree: np.ndarray

    @classmethod
    def from_edges(cls, n_vars: int, n_checks: int, edges: Sequence[Tuple[int, int]]) -> "TannerGraph":
        """Builds the graph from (check, var) pairs; validates the structural invariants."""
        pairs = sorted(set((int(m), int(n)) for m, n in edges))
        if len(pairs) != len(edges):
            raise ValueError("duplicate (check, var) pairs")
        for m, n in pairs:
            if not (0 <= m < n_checks and 0 <= n < n_vars):
                raise ValueError(f"edge ({m}, {n}) out of range for {n_checks}x{n_vars}")

        edge_check = np.array([m for m, _ in pairs], dtype=np.int64)
        edge_var = np.array([n for _, n in pairs], dtype=np.int64)
        cn_degree = np.bincount(edge_check, minlength=n_checks).astype(np.int64)
        vn_degree = np.bincount(edge_var, minlength=n_vars).astype(np.int64)
        if np.any(vn_degree == 0):
            raise ValueError(f"variable node {int(np.argmin(vn_degree))} has degree 0")
        if np.any(cn_degree == 0):
            raise ValueError(f"check node {int(np.argmin(cn_degree))} has degree 0")

        cn_start = np.concatenate(([0], np.cumsum(cn_degree)[:-1])).astype(np.int64)
        edge_ids = np.arange(len(pairs), dtype=np.int64)
        order = np.argsort(edge_var, kind="stable")
        vn_split = np.split(edge_ids[order], np.cumsum(vn_degree)[:-1])
        cn_split = np.split(edge_ids, np.cumsum(cn_degree)[:-1])

        return cls(
            n_vars=n_vars,
            n_checks=n_checks,
            edge_check=_frozen(edge_check),
            edge_var=_frozen(edge_var),
            cn_start=_frozen(cn_start),
            vn_adjacency=tuple(_frozen(a) for a in vn_split),
            cn_adjacency=tuple(_frozen(a) for a in cn_split),
            vn_degree=_frozen(vn_degree),
            cn_degree=_frozen(cn_degree),
        )

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "TannerGraph":
        h = np.asarray(matrix) & 1
        checks, variables = np.nonzero(h)
        return cls.from_edges(h.shape[1], h.shape[0], list(zip(checks.tolist(), variables.tolist())))

    @property
    def n_edges(self) -> int:
        return int(self.edge_check.size)

    def checks_of(self, var: int) -> np.ndarray:
        return self.edge_check[self.vn_adjacency[var]]

    def vars_of(self, check: int) -> np.ndarray:
        return self.edge_var[self.cn_adjacency[check]]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TannerGraph):
            return NotImplemented
        return (
            self.n_vars == other.n_vars
            and self.n_checks == other.n_checks
            and np.array_equal(self.edge_check, other.edge_check)
            and np.array_equal(self.edge_var, other.edge_var)
        )


@dataclass(frozen=True)
class PunctureMask:
    """VN positions that are never transmitted (they enter the decoder with LLR 0)"""

    punctured: FrozenSet[int] = frozenset()

    def indices(self) -> np.ndarray:
        return np.array(sorted(self.punctured), dtype=np.int64)

    def transmitted(self, n_vars: int) -> np.ndarray:
        keep = np.ones(n_vars, dtype=bool)
        keep[self.indices()] = False
        return keep


@dataclass(frozen=True)
class CodewordBasis:
    """K independent codewords spanning the code; K = N - rank(H)"""

    n_vars: int
    basis: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return int(self.basis.shape[0])


# ---------------------------------------------------------------------------
# alist I/O


def _numbered_lines(text: str) -> List[Tuple[int, List[int]]]:
    rows = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split()
        if not tokens:
            continue
        try:
            rows.append((line_no, [int(t) for t in tokens]))
        except ValueError:
            raise AlistDimensionError(line_no, "non-integer token") from None
    return rows


def parse_alist(text: str) -> TannerGraph:
    """
    Parses the alist exchange format. Zero entries in the connection lists
    are padding and get ignored, so both the fixed-width and the compact
    variants load.
    """
    rows = _numbered_lines(text)
    if len(rows) < 4:
        last = rows[-1][0] if rows else 0
        raise AlistDimensionError(last + 1, "alist header needs 4 lines")

    (l1, dims), (l2, maxima), (l3, col_degrees), (l4, row_degrees) = rows[:4]
    if len(dims) != 2:
        raise AlistDimensionError(l1, f"expected 'N M', got {len(dims)} values")
    n_vars, n_checks = dims
    if n_vars < 1 or n_checks < 1:
        raise AlistDimensionError(l1, f"dimensions must be positive, got N={n_vars} M={n_checks}")
    if len(maxima) != 2:
        raise AlistDimensionError(l2, "expected 'max_col_deg max_row_deg'")
    if len(col_degrees) != n_vars:
        raise AlistDimensionError(l3, f"expected {n_vars} column degrees, got {len(col_degrees)}")
    if len(row_degrees) != n_checks:
        raise AlistDimensionError(l4, f"expected {n_checks} row degrees, got {len(row_degrees)}")
    if min(col_degrees) < 1:
        raise AlistDimensionError(l3, "degree-0 columns are not allowed")
    if min(row_degrees) < 1:
        raise AlistDimensionError(l4, "degree-0 rows are not allowed")
    if max(col_degrees) > maxima[0]:
        raise AlistDimensionError(l3, f"column degree {max(col_degrees)} exceeds declared max {maxima[0]}")
    if max(row_degrees) > maxima[1]:
        raise AlistDimensionError(l4, f"row degree {max(row_degrees)} exceeds declared max {maxima[1]}")
    if sum(col_degrees) != sum(row_degrees):
        raise AlistConsistencyError(l4, f"column degrees sum to {sum(col_degrees)}, row degrees to {sum(row_degrees)}")

    body = rows[4:]
    if len(body) < n_vars + n_checks:
        last = body[-1][0] if body else l4
        raise AlistDimensionError(last + 1, f"expected {n_vars} column lines and {n_checks} row lines")

    col_edges: Dict[Tuple[int, int], int] = {}
    for n, (line_no, entries) in enumerate(body[:n_vars]):
        col_edges.update(_connections(line_no, entries, col_degrees[n], n_checks, "check", lambda m, n=n: (m, n)))

    row_edges: Dict[Tuple[int, int], int] = {}
    for m, (line_no, entries) in enumerate(body[n_vars:n_vars + n_checks]):
        row_edges.update(_connections(line_no, entries, row_degrees[m], n_vars, "variable", lambda v, m=m: (m, v)))

    for edge, line_no in sorted(col_edges.items(), key=lambda kv: kv[1]):
        if edge not in row_edges:
            raise AlistConsistencyError(line_no, f"column {edge[1] + 1} lists check {edge[0] + 1} but that row does not list it")
    for edge, line_no in sorted(row_edges.items(), key=lambda kv: kv[1]):
        if edge not in col_edges:
            raise AlistConsistencyError(line_no, f"row {edge[0] + 1} lists variable {edge[1] + 1} but that column does not list it")

    try:
        return TannerGraph.from_edges(n_vars, n_checks, sorted(col_edges))
    except ValueError as exc:
        raise AlistDimensionError(l3, str(exc)) from None


def _connections(line_no, entries, degree, bound, kind, make_edge) -> Dict[Tuple[int, int], int]:
    found = [e for e in entries if e != 0]
    if len(found) != degree:
        raise AlistDimensionError(line_no, f"expected {degree} {kind} indices, got {len(found)}")
    edges: Dict[Tuple[int, int], int] = {}
    for index in found:
        if not 1 <= index <= bound:
            raise AlistIndexError(line_no, f"{kind} index {index} outside 1..{bound}")
        edge = make_edge(index - 1)
        if edge in edges:
            raise AlistDuplicateEdgeError(line_no, f"{kind} index {index} listed twice")
        edges[edge] = line_no
    return edges


def to_alist(graph: TannerGraph) -> str:
    """Compact (unpadded) alist text for a graph."""
    lines = [
        f"{graph.n_vars} {graph.n_checks}",
        f"{int(graph.vn_degree.max())} {int(graph.cn_degree.max())}",
        " ".join(str(d) for d in graph.vn_degree.tolist()),
        " ".join(str(d) for d in graph.cn_degree.tolist()),
    ]
    for n in range(graph.n_vars):
        lines.append(" ".join(str(m + 1) for m in sorted(graph.checks_of(n).tolist())))
    for m in range(graph.n_checks):
        lines.append(" ".join(str(v + 1) for v in graph.vars_of(m).tolist()))
    return "\n".join(lines) + "\n"


def load_alist(path: Union[str, Path]) -> TannerGraph:
    return parse_alist(Path(path).read_text())


def load_puncture_mask(path: Union[str, Path], n_vars: int) -> PunctureMask:
    """Whitespace-separated 0-based VN indices."""
    tokens = Path(path).read_text().split()
    try:
        indices = [int(t) for t in tokens]
    except ValueError:
        raise PunctureMaskError(f"{path}: puncture mask must hold integer indices") from None
    bad = [i for i in indices if not 0 <= i < n_vars]
    if bad:
        raise PunctureMaskError(f"{path}: indices {bad[:5]} outside 0..{n_vars - 1}")
    return PunctureMask(frozenset(indices))


# ---------------------------------------------------------------------------
# GF(2) algebra


def dense_matrix(graph: TannerGraph) -> np.ndarray:
    h = np.zeros((graph.n_checks, graph.n_vars), dtype=np.uint8)
    h[graph.edge_check, graph.edge_var] = 1
    return h


def syndrome(graph: TannerGraph, bits: np.ndarray) -> np.ndarray:
    """Entry m is the XOR of the bits on check m's neighbours."""
    x = np.asarray(bits)
    if x.shape != (graph.n_vars,):
        raise ValueError(f"expected {graph.n_vars} bits, got shape {x.shape}")
    ones = (x[graph.edge_var] & 1).astype(np.int64)
    return (np.bincount(graph.edge_check, weights=ones, minlength=graph.n_checks).astype(np.int64) & 1).astype(np.uint8)


def is_codeword(graph: TannerGraph, bits: np.ndarray) -> bool:
    return not syndrome(graph, bits).any()


def gf2_rref(matrix: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(2) and its pivot columns."""
    a = (np.asarray(matrix) & 1).astype(np.uint8, copy=True)
    n_rows, n_cols = a.shape
    pivots: List[int] = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        rows = np.flatnonzero(a[r:, c])
        if rows.size == 0:
            continue
        p = r + int(rows[0])
        if p != r:
            a[[r, p], :] = a[[p, r], :]
        # clear column c everywhere else
        ones = np.flatnonzero(a[:, c])
        ones = ones[ones != r]
        if ones.size:
            a[ones, :] ^= a[r, :]
        pivots.append(c)
        r += 1
    return a[:r], pivots


def nullspace_basis(graph: TannerGraph) -> CodewordBasis:
    """
    Gaussian elimination on H. One basis vector per free column: the free
    bit set to 1 and each pivot bit read off its RREF row.
    """
    rref, pivots = gf2_rref(dense_matrix(graph))
    pivot_set = set(pivots)
    free = [c for c in range(graph.n_vars) if c not in pivot_set]

    basis = np.zeros((len(free), graph.n_vars), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for row, p in enumerate(pivots):
            basis[k, p] = rref[row, f]
    return CodewordBasis(n_vars=graph.n_vars, basis=_frozen(basis))


def combine(basis: CodewordBasis, coefficients: Sequence[int]) -> np.ndarray:
    """GF(2) combination of basis vectors selected by a coefficient word"""
    coeffs = np.asarray(coefficients, dtype=np.uint8) & 1
    if coeffs.shape != (basis.dimension,):
        raise ValueError(f"expected {basis.dimension} coefficients, got shape {coeffs.shape}")
    if basis.dimension == 0:
        return np.zeros(basis.n_vars, dtype=np.uint8)
    return (coeffs.astype(np.int64) @ basis.basis.astype(np.int64) & 1).astype(np.uint8)


def random_codeword(basis: CodewordBasis, rng: np.random.Generator) -> np.ndarray:
    if basis.dimension == 0:
        return np.zeros(basis.n_vars, dtype=np.uint8)
    return combine(basis, rng.integers(0, 2, size=basis.dimension))


# ---------------------------------------------------------------------------
# lint


def count_four_cycles(graph: TannerGraph) -> int:
    """Number of check pairs sharing two or more variables (each such pair closes a 4-cycle)."""
    h = dense_matrix(graph).astype(np.int64)
    overlap = h @ h.T
    upper = np.triu(overlap, k=1)
    pairs = upper[upper >= 2]
    return int(sum(v * (v - 1) // 2 for v in pairs.tolist()))


def lint_alist(text: str) -> Dict[str, object]:
    """Summary used by the `validate` command. Raises AlistParseError on bad input."""
    graph = parse_alist(text)
    basis = nullspace_basis(graph)
    return {
        "n_vars": graph.n_vars,
        "n_checks": graph.n_checks,
        "edges": graph.n_edges,
        "dimension": basis.dimension,
        "rank": graph.n_vars - basis.dimension,
        "rate": basis.dimension / graph.n_vars,
        "vn_degrees": dict(sorted(Counter(graph.vn_degree.tolist()).items())),
        "cn_degrees": dict(sorted(Counter(graph.cn_degree.tolist()).items())),
        "four_cycles": count_four_cycles(graph),
    }
