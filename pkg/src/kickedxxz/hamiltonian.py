"""XXZ Hamiltonian, its domain-wall-constrained projection, and diagonal symmetry operators.

Operators are plain ``scipy.sparse.csr_matrix`` objects over the basis of
:class:`~kickedxxz.spin_core.SpinBasis` (dense ``ndarray`` where noted).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .spin_core import SpinBasis


@dataclass(frozen=True)
class ModelParams:
    L: int
    J: float = 1.0
    V: float = 1.0
    T: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"need L >= 2, got {self.L}")
        if not self.T >= 0:
            raise ValueError(f"drive period must be non-negative, got {self.T}")

    @property
    def basis(self) -> SpinBasis:
        return SpinBasis(self.L)

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.T

    def replace(self, **kw) -> "ModelParams":
        d = asdict(self)
        d.update(kw)
        return ModelParams(**d)

    def header(self) -> str:
        return f"L={self.L} J={self.J!r} V={self.V!r} T={self.T!r} epsilon={self.epsilon!r}"


def _hopping_pairs(basis: SpinBasis, constrained: bool):
    """(target, source) index arrays for allowed nearest-neighbour exchanges."""
    b = np.arange(basis.dim, dtype=np.int64)
    rows, cols = [], []
    for j in range(basis.L - 1):
        src = b[((b >> j) & 1) != ((b >> (j + 1)) & 1)]
        dst = src ^ (3 << j)
        if constrained:
            keep = basis.p_values[src] == basis.p_values[dst]
            src, dst = src[keep], dst[keep]
        rows.append(dst)
        cols.append(src)
    return np.concatenate(rows), np.concatenate(cols)


def zz_diagonal(basis: SpinBasis, V: float) -> np.ndarray:
    s = basis.spins.astype(np.int64)
    return V * (s[:, :-1] * s[:, 1:]).sum(axis=1)


def _assemble(params: ModelParams, constrained: bool) -> sp.csr_matrix:
    basis = params.basis
    diag = zz_diagonal(basis, params.V).astype(float)
    rows, cols = _hopping_pairs(basis, constrained)
    # sigma^x sigma^x + sigma^y sigma^y = 2 (sigma^+ sigma^- + h.c.)
    vals = np.full(rows.size, 2.0 * params.J)
    idx = np.arange(basis.dim)
    H = sp.csr_matrix(
        (np.concatenate([diag, vals]), (np.concatenate([idx, rows]), np.concatenate([idx, cols]))),
        shape=(basis.dim, basis.dim),
    )
    H.eliminate_zeros()
    H.sort_indices()
    return H


def build_xxz(params: ModelParams) -> sp.csr_matrix:
    """Open-chain XXZ Hamiltonian, real symmetric in the sigma^z basis."""
    return _assemble(params, constrained=False)


def build_projected_h(params: ModelParams) -> sp.csr_matrix:
    """XXZ Hamiltonian keeping only exchanges that preserve the domain-wall count.

    Bulk exchanges survive iff the two outer neighbours of the bond are
    parallel; exchanges on the two edge bonds always change the wall count and
    are dropped.
    """
    return _assemble(params, constrained=True)


def build_sz_total(basis: SpinBasis) -> sp.csr_matrix:
    return sp.diags(basis.magnetization.astype(float), format="csr")


def build_q_operator(basis: SpinBasis) -> sp.csr_matrix:
    """|sum_j sigma_j^z|, absolute value taken entrywise on the diagonal."""
    return sp.diags(basis.q_values.astype(float), format="csr")


def build_pdw_operator(basis: SpinBasis) -> sp.csr_matrix:
    return sp.diags(basis.p_values.astype(float), format="csr")


def _as_matrix(A):
    return A if sp.issparse(A) else np.asarray(A)


def commutator_norm(A, B) -> float:
    """Largest entry magnitude of AB - BA (sparse or dense operands)."""
    A, B = _as_matrix(A), _as_matrix(B)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"incompatible operator shapes {A.shape} and {B.shape}")
    C = A @ B - B @ A
    if sp.issparse(C):
        return float(abs(C).max()) if C.nnz else 0.0
    return float(np.max(np.abs(C))) if C.size else 0.0


def write_operator(path, M, params: ModelParams) -> None:
    """Coordinate-list dump ``row col re im`` with a ``# L J V`` header."""
    coo = sp.coo_matrix(M)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# L J V\n# {params.L} {params.J!r} {params.V!r}\n")
        for k in order:
            z = complex(coo.data[k])
            fh.write(f"{coo.row[k]} {coo.col[k]} {z.real!r} {z.imag!r}\n")


def read_operator(path) -> sp.csr_matrix:
    rows, cols, vals, L = [], [], [], None
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0].isdigit():
                    L = int(parts[0])
                continue
            r, c, re_, im = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(float(re_), float(im)))
    if L is None:
        raise ValueError(f"{path}: missing '# L J V' header values")
    dim = 1 << L
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
