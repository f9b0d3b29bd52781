"""Hilbert-space fragmentation: sector combinatorics and numerically detected fragments."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .floquet import FloquetSpectrum
from .spin_core import ProductState, SpinBasis

WEAK_COUPLING_THRESHOLD_CAP = 0.05


def binom(n: int, k: int) -> int:
    """Binomial coefficient with C(n, k) = 0 for k < 0 or k > n >= 0, and C(n, 0) = 1 for n >= -1.

    C(-1, 0) = 1 counts the single way to split zero spins into zero segments.
    """
    if k < 0:
        return 0
    if k == 0:
        return 1 if n >= -1 else 0
    if n < k:
        return 0
    return math.comb(n, k)


def _check_q(L: int, q: int):
    if not (0 <= q <= L) or (L - q) % 2:
        raise ValueError(f"q={q} is not a valid |magnetization| for L={L}")


def dim_q(L: int, q: int) -> int:
    _check_q(L, q)
    n_up, n_dn = (L + q) // 2, (L - q) // 2
    a = 1 if q == 0 else 2
    return a * (math.comb(L, n_up) + math.comb(L, n_dn)) // 2


def dim_qp(L: int, q: int, p: int) -> int:
    """Number of basis states with |magnetization| q and p domain walls (closed form)."""
    _check_q(L, q)
    if not 0 <= p <= L - 1:
        raise ValueError(f"p={p} outside 0..{L - 1}")
    n_up, n_dn = (L + q) // 2, (L - q) // 2
    s_up, s_dn = (p + 2) // 2, (p + 1) // 2  # ceil((p+1)/2), floor((p+1)/2)
    a = 1 if q == 0 else 2
    return (a * binom(n_up - 1, n_up - s_up) * binom(n_dn - 1, n_dn - s_dn)
            + a * binom(n_up - 1, n_up - s_dn) * binom(n_dn - 1, n_dn - s_up))


def q_values(L: int) -> list[int]:
    return list(range(L % 2, L + 1, 2))


def ratio_q_combinatorial(L: int, q: int) -> float:
    return max(dim_qp(L, q, p) for p in range(L)) / dim_q(L, q)


@dataclass
class SectorTable:
    L: int
    q_members: dict  # q -> sorted basis indices
    qp_members: dict  # (q, p) -> sorted basis indices

    def dim(self, q: int, p: int | None = None) -> int:
        if p is None:
            return self.q_members[q].size
        return self.qp_members.get((q, p), np.empty(0, int)).size

    def rows(self):
        """(L, q, p, dim) rows, dim taken from the closed form."""
        for q in q_values(self.L):
            for p in range(self.L):
                yield self.L, q, p, dim_qp(self.L, q, p)


def sector_table(L: int) -> SectorTable:
    basis = SpinBasis(L)
    qv, pv = basis.q_values, basis.p_values
    q_members = {q: np.flatnonzero(qv == q) for q in q_values(L)}
    qp_members = {}
    for q, idx in q_members.items():
        for p in np.unique(pv[idx]):
            qp_members[(q, int(p))] = idx[pv[idx] == p]
    return SectorTable(L, q_members, qp_members)


def default_threshold(J: float, V: float) -> float:
    """Overlap threshold J^2/V (infinite coupling ratio guarded)."""
    return math.inf if V == 0 else J * J / abs(V)


def fragment_threshold(J: float, V: float) -> float:
    """Threshold for fragment detection: J^2/V, capped for weak interactions.

    At V <~ J the bare J^2/V exceeds the typical amplitude of a delocalized
    Floquet state and no basis state would pass, so it is capped.
    """
    return min(default_threshold(J, V), WEAK_COUPLING_THRESHOLD_CAP)


@dataclass
class OverlapMatrix:
    matrix: sp.csr_matrix  # boolean, rows = Floquet states alpha, cols = basis states beta
    row_order: np.ndarray
    col_order: np.ndarray

    def permuted(self) -> sp.csr_matrix:
        return self.matrix[self.row_order][:, self.col_order]


def _bipartite_labels(mask: sp.csr_matrix):
    """Connected components of the eigenstate/basis-state graph given by ``mask``."""
    n_eig, n_basis = mask.shape
    A = sp.bmat([[None, mask], [mask.T, None]], format="csr")
    _, labels = connected_components(A, directed=False)
    return labels[:n_eig], labels[n_eig:]


def overlap_matrix(spec: FloquetSpectrum, threshold: float | None = None) -> OverlapMatrix:
    """Thresholded |<beta|psi_alpha>| with a block-revealing permutation.

    Basis states are ordered by (q, p, fragment, index); each Floquet state is
    placed at the position of its heaviest basis state.
    """
    if threshold is None:
        p = spec.params
        threshold = default_threshold(p.J, p.V)
    absV = np.abs(spec.eigenstates).T  # (alpha, beta)
    mask = sp.csr_matrix(absV > threshold)
    basis = SpinBasis(int(round(math.log2(absV.shape[1]))))
    _, frag = _bipartite_labels(mask)
    col_order = np.lexsort((np.arange(basis.dim), frag, basis.p_values, basis.q_values))
    pos = np.empty(basis.dim, int)
    pos[col_order] = np.arange(basis.dim)
    heaviest = np.argmax(absV, axis=1)
    row_order = np.lexsort((np.arange(absV.shape[0]), pos[heaviest]))
    return OverlapMatrix(mask, row_order, col_order)


def fragments(spec: FloquetSpectrum, q: int, threshold: float | None = None) -> list[np.ndarray]:
    """Basis-state fragments of sector q, largest first.

    Components of the bipartite graph linking Floquet states to sector-q basis
    states whose overlap exceeds ``threshold``.
    """
    if threshold is None:
        p = spec.params
        threshold = fragment_threshold(p.J, p.V)
    dim = spec.eigenstates.shape[0]
    basis = SpinBasis(int(round(math.log2(dim))))
    members = np.flatnonzero(basis.q_values == q)
    if members.size == 0:
        raise ValueError(f"sector q={q} is empty for L={basis.L}")
    sub = np.abs(spec.eigenstates[members]).T  # (alpha, member)
    mask = sp.csr_matrix(sub > threshold)
    _, lab = _bipartite_labels(mask)
    out = [members[lab == c] for c in np.unique(lab)]
    out.sort(key=lambda f: (-f.size, f[0]))
    return out


def ratio_q_numerical(spec: FloquetSpectrum, q: int, threshold: float | None = None) -> float:
    frs = fragments(spec, q, threshold)
    return frs[0].size / sum(f.size for f in frs)


def constrained_fragments(L: int) -> np.ndarray:
    """Exact fragment label of every basis state under wall-preserving hops plus global flip."""
    basis = SpinBasis(L)
    b = np.arange(basis.dim, dtype=np.int64)
    rows, cols = [b], [basis.flip(b)]
    for j in range(L - 1):
        src = b[((b >> j) & 1) != ((b >> (j + 1)) & 1)]
        dst = src ^ (3 << j)
        keep = basis.p_values[src] == basis.p_values[dst]
        rows.append(src[keep])
        cols.append(dst[keep])
    r, c = np.concatenate(rows), np.concatenate(cols)
    G = sp.csr_matrix((np.ones(r.size, bool), (r, c)), shape=(basis.dim, basis.dim))
    return connected_components(G, directed=False)[1]


def classify_frozen(state: ProductState, hprime) -> tuple[bool, int]:
    """Breadth-first closure of a product state under H' hops and the global flip.

    Returns ``(frozen, closure_size)``; frozen means the closure holds at most
    the state and its spin-reversed partner.
    """
    basis = state.basis
    H = sp.csr_matrix(hprime)
    seen = {state.index}
    todo = deque([state.index])
    while todo:
        b = todo.popleft()
        row = H.indices[H.indptr[b]:H.indptr[b + 1]]
        vals = H.data[H.indptr[b]:H.indptr[b + 1]]
        nbrs = [int(c) for c, v in zip(row, vals) if c != b and v != 0]
        nbrs.append(int(basis.flip(b)))
        for c in nbrs:
            if c not in seen:
                seen.add(c)
                todo.append(c)
    return len(seen) <= 2, len(seen)


def crossover_band(V_values, R_values, floor: float, low: float = 0.9, high: float = 1.1):
    """Interval of V where R lies within [low, high] times ``floor``; None if never."""
    V_values, R_values = np.asarray(V_values, float), np.asarray(R_values, float)
    inside = (R_values >= low * floor) & (R_values <= high * floor)
    if not inside.any():
        return None
    return float(V_values[inside].min()), float(V_values[inside].max())


def write_sector_table(path, table: SectorTable) -> None:
    with open(path, "w") as fh:
        fh.write(f"# L={table.L}\n# L q p dim members_count\n")
        for L, q, p, d in table.rows():
            fh.write(f"{L} {q} {p} {d} {table.dim(q, p)}\n")


def write_fragments(path, frags_by_q: dict, header: str = "") -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# q fragment_id size\n")
        for q in sorted(frags_by_q):
            for k, f in enumerate(frags_by_q[q]):
                fh.write(f"{q} {k} {f.size}\n")


def write_overlap(path, om: OverlapMatrix, header: str = "") -> str:
    """Permuted coordinate list ``row col``; the permutation goes to ``<path>.perm``."""
    P = sp.coo_matrix(om.permuted())
    order = np.lexsort((P.col, P.row))
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# row col\n")
        for k in order:
            fh.write(f"{P.row[k]} {P.col[k]}\n")
    side = f"{path}.perm"
    with open(side, "w") as fh:
        fh.write("# position alpha beta  (row position -> Floquet index, column position -> basis index)\n")
        for i in range(max(om.row_order.size, om.col_order.size)):
            a = om.row_order[i] if i < om.row_order.size else -1
            b = om.col_order[i] if i < om.col_order.size else -1
            fh.write(f"{i} {a} {b}\n")
    return side
