"""Directed claim networks: parsing, validation, and S/T decomposition.

A survey network is a set of directed "u claims v as a friend" statements.
Pairs that claim each other form the reciprocated (symmetric) edge set S;
one-directional claims form the unreciprocated (asymmetric) edge set T.
The ordinary adjacency matrix is the sum of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class EdgeListError(ValueError):
    """Malformed edge-list input, with the offending 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


def check_ranking(ranks: np.ndarray, n: int) -> np.ndarray:
    """Validate that ``ranks`` is a permutation of 1..n; return it as int64."""
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.shape != (n,):
        raise ValueError(f"ranking must have shape ({n},), got {ranks.shape}")
    if not np.array_equal(np.sort(ranks), np.arange(1, n + 1)):
        raise ValueError("ranking must assign each node a unique rank in 1..n")
    return ranks


@dataclass(frozen=True)
class DirectedNetwork:
    """An immutable directed claim network decomposed into S and T.

    Attributes
    ----------
    labels : tuple of str
        External node labels; position is the dense internal index.
    sym_edges : tuple of (int, int)
        Reciprocated pairs, stored as (i, j) with i < j.
    asym_edges : tuple of (int, int)
        One-directional claims, stored as (claimant, claimed).
    """

    labels: tuple[str, ...]
    sym_edges: tuple[tuple[int, int], ...]
    asym_edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise ValueError("node labels must be unique")
        sym = tuple(sorted((min(i, j), max(i, j)) for i, j in self.sym_edges))
        asym = tuple(sorted((int(u), int(v)) for u, v in self.asym_edges))
        object.__setattr__(self, "sym_edges", sym)
        object.__setattr__(self, "asym_edges", asym)
        seen = set()
        for i, j in sym:
            if i == j:
                raise ValueError(f"self-pair ({i}, {j}) in reciprocated edges")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            if (i, j) in seen:
                raise ValueError(f"duplicate reciprocated pair ({i}, {j})")
            seen.add((i, j))
        asym_pairs = set()
        for u, v in asym:
            if u == v:
                raise ValueError(f"self-claim ({u}, {v})")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"claim ({u}, {v}) out of range for n={n}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"pair {key} present in both S and T")
            if (u, v) in asym_pairs:
                raise ValueError(f"duplicate claim ({u}, {v})")
            if (v, u) in asym_pairs:
                raise ValueError(f"pair {key} claimed both ways must be stored in S")
            asym_pairs.add((u, v))

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def n_sym(self) -> int:
        return len(self.sym_edges)

    @property
    def n_asym(self) -> int:
        return len(self.asym_edges)

    @property
    def claim_count(self) -> int:
        """Number of raw ordered claims encoded by the network: 2|S| + |T|."""
        return 2 * self.n_sym + self.n_asym

    @cached_property
    def _sym_arr(self) -> np.ndarray:
        arr = np.asarray(self.sym_edges, dtype=np.int64).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    @cached_property
    def _asym_arr(self) -> np.ndarray:
        arr = np.asarray(self.asym_edges, dtype=np.int64).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    def sym_array(self) -> np.ndarray:
        """Reciprocated pairs as a read-only (|S|, 2) int array."""
        return self._sym_arr

    def asym_array(self) -> np.ndarray:
        """Claims as a read-only (|T|, 2) (claimant, claimed) int array."""
        return self._asym_arr

    def subnetwork(self, nodes: Iterable[int]) -> "DirectedNetwork":
        """Induced subnetwork on ``nodes``, relabeled to dense indices.

        New indices follow ascending old-index order; external labels are
        preserved.
        """
        keep = sorted(int(v) for v in nodes)
        new_index = {old: new for new, old in enumerate(keep)}
        keep_set = set(keep)
        sym = tuple(
            (new_index[i], new_index[j])
            for i, j in self.sym_edges
            if i in keep_set and j in keep_set
        )
        asym = tuple(
            (new_index[u], new_index[v])
            for u, v in self.asym_edges
            if u in keep_set and v in keep_set
        )
        return DirectedNetwork(tuple(self.labels[v] for v in keep), sym, asym)

    def canonical_order(self) -> tuple["DirectedNetwork", np.ndarray]:
        """Relabel nodes into sorted-label order.

        Returns the relabeled network and ``order`` such that canonical node
        k is original node ``order[k]``. Running seeded algorithms on the
        canonical network makes results independent of input node order.
        """
        order = np.array(sorted(range(self.n), key=self.labels.__getitem__))
        inv = np.empty(self.n, dtype=np.int64)
        inv[order] = np.arange(self.n)
        sym = tuple((int(inv[i]), int(inv[j])) for i, j in self.sym_edges)
        asym = tuple((int(inv[u]), int(inv[v])) for u, v in self.asym_edges)
        net = DirectedNetwork(tuple(self.labels[v] for v in order), sym, asym)
        return net, order


def network_from_claims(
    labels: Iterable[str], claims: Iterable[tuple[int, int]]
) -> DirectedNetwork:
    """Build a network from deduplicated ordered (claimant, claimed) pairs.

    Pairs claimed in both directions become one S edge; the rest become T
    edges.
    """
    claim_set = set((int(u), int(v)) for u, v in claims)
    sym = []
    asym = []
    for u, v in sorted(claim_set):
        if u < v and (v, u) in claim_set:
            sym.append((u, v))
        elif (v, u) not in claim_set:
            asym.append((u, v))
    return DirectedNetwork(tuple(labels), tuple(sym), tuple(asym))


def parse_edge_list(source: str | IO[str] | Iterable[str]) -> DirectedNetwork:
    """Parse an edge-list text stream into a DirectedNetwork.

    Each non-comment line is ``<src> <dst>``, meaning src claims dst as a
    friend. Lines whose first non-blank character is ``#`` are comments.
    Duplicate claim lines collapse silently; claims in both directions
    become a single reciprocated edge. Internal indices follow first
    appearance order.

    Raises
    ------
    EdgeListError
        On a self-claim or a line that does not have exactly two tokens.
    """
    if isinstance(source, str):
        lines: Iterable[str] = source.splitlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = source
    index: dict[str, int] = {}
    order: list[str] = []
    claims: set[tuple[int, int]] = set()
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListError(
                f"expected two whitespace-separated tokens, got {len(parts)}", line_no
            )
        src, dst = parts
        if src == dst:
            raise EdgeListError(f"self-claim {src!r}", line_no)
        for token in (src, dst):
            if token not in index:
                index[token] = len(order)
                order.append(token)
        claims.add((index[src], index[dst]))
    return network_from_claims(order, claims)


def load_edge_list(path) -> DirectedNetwork:
    """Parse an edge-list file (UTF-8)."""
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def format_edge_list(net: DirectedNetwork, header: str | None = None) -> str:
    """Serialize a network back to claim lines.

    Reciprocated pairs emit both claim directions, so parsing the output
    recovers the same (S, T) decomposition. Isolated nodes are not
    representable in this format.
    """
    out = []
    if header:
        for line in header.splitlines():
            out.append(f"# {line}")
    for i, j in net.sym_edges:
        out.append(f"{net.labels[i]} {net.labels[j]}")
        out.append(f"{net.labels[j]} {net.labels[i]}")
    for u, v in net.asym_edges:
        out.append(f"{net.labels[u]} {net.labels[v]}")
    return "\n".join(out) + "\n"


def write_edge_list(net: DirectedNetwork, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edge_list(net, header=header))


@dataclass(frozen=True)
class DegreeSummary:
    """Per-node degree counts under the claim convention.

    A reciprocated edge represents claims both ways, so it adds 1 to the
    in-degree and 1 to the out-degree of each endpoint; a T edge u -> v adds
    1 to out(u) and 1 to in(v). Total degree is in + out and mean_degree is
    its average over nodes.
    """

    in_degree: np.ndarray
    out_degree: np.ndarray
    total_degree: np.ndarray
    mean_degree: float


def degree_summary(net: DirectedNetwork) -> DegreeSummary:
    if net.n == 0:
        raise ValueError("degree summary of an empty network is undefined")
    in_deg = np.zeros(net.n, dtype=np.int64)
    out_deg = np.zeros(net.n, dtype=np.int64)
    sym = net.sym_array()
    asym = net.asym_array()
    if len(sym):
        for col in (0, 1):
            np.add.at(in_deg, sym[:, col], 1)
            np.add.at(out_deg, sym[:, col], 1)
    if len(asym):
        np.add.at(out_deg, asym[:, 0], 1)
        np.add.at(in_deg, asym[:, 1], 1)
    total = in_deg + out_deg
    return DegreeSummary(in_deg, out_deg, total, float(total.mean()))


def largest_component(net: DirectedNetwork, mode: str = "strong") -> DirectedNetwork:
    """Induced subnetwork on the largest connected component.

    ``mode`` selects strong or weak directed connectivity. Size ties break
    toward the component containing the smallest internal index. The result
    is relabeled to dense indices with external labels preserved.
    """
    if mode not in ("strong", "weak"):
        raise ValueError(f"mode must be 'strong' or 'weak', got {mode!r}")
    if net.n == 0:
        raise ValueError("largest component of an empty network is undefined")
    rows = []
    cols = []
    for i, j in net.sym_edges:
        rows.extend((i, j))
        cols.extend((j, i))
    for u, v in net.asym_edges:
        rows.append(u)
        cols.append(v)
    adj = coo_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(net.n, net.n)
    )
    _, comp = connected_components(adj, directed=True, connection=mode)
    sizes = np.bincount(comp)
    best_size = sizes.max()
    # np.argmax over first occurrence: component labels are assigned in node
    # order, so the first component reaching best_size contains the smallest
    # internal index among the tied ones.
    candidates = np.flatnonzero(sizes == best_size)
    first_node = [int(np.flatnonzero(comp == c)[0]) for c in candidates]
    winner = candidates[int(np.argmin(first_node))]
    return net.subnetwork(np.flatnonzero(comp == winner))
