"""Reduced density matrices, von Neumann entropies and edge-spin mutual information."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .floquet import FloquetSpectrum
from .hamiltonian import ModelParams

EIG_CUTOFF = 1e-14
ENTROPY_BASE = "e"


def _num_sites(dim: int) -> int:
    L = dim.bit_length() - 1
    if dim != 1 << L or L < 1:
        raise ValueError(f"state dimension {dim} is not a power of two")
    return L


def _site_axes(sites, L: int) -> tuple[int, ...]:
    sites = tuple(int(s) for s in sites)
    if len(sites) not in (1, 2) or len(set(sites)) != len(sites):
        raise ValueError(f"need one or two distinct sites, got {sites}")
    if any(not 1 <= s <= L for s in sites):
        raise ValueError(f"sites {sites} outside 1..{L}")
    # C-order reshape puts bit L-1 (site L) on axis 0
    return tuple(L - s for s in sites)


def reduced_density(psi: np.ndarray, sites) -> np.ndarray:
    """Partial trace of |psi><psi| onto one or two sites.

    Local basis index is the bit value (0 = down, 1 = up); for two sites the
    index is ``2 * bit(sites[0]) + bit(sites[1])``. ``psi`` may carry a trailing
    batch axis, giving a stack of shape ``(k, d, d)``.
    """
    psi = np.asarray(psi)
    batched = psi.ndim == 2
    L = _num_sites(psi.shape[0])
    axes = _site_axes(sites, L)
    k = psi.shape[1] if batched else 1
    t = psi.reshape((2,) * L + (k,))
    keep = list(axes)
    rest = [a for a in range(L) if a not in keep]
    t = np.transpose(t, (L,) + tuple(keep) + tuple(rest)).reshape(k, 2 ** len(keep), -1)
    rho = t @ t.conj().transpose(0, 2, 1)
    return rho if batched else rho[0]


def entropy(rho: np.ndarray) -> float | np.ndarray:
    """Von Neumann entropy -Tr rho ln rho; eigenvalues below 1e-14 contribute zero.

    Accepts a single matrix or a stack ``(k, d, d)``.
    """
    w = np.linalg.eigvalsh(np.asarray(rho))
    w = np.where(w > EIG_CUTOFF, w, 1.0)
    S = -(w * np.log(w)).sum(axis=-1)
    return float(S) if np.ndim(S) == 0 else S


@dataclass
class MutualInfoResult:
    params: ModelParams | None
    M_bar: float
    per_state: np.ndarray | None = None  # M_alpha, ordered like the spectrum
    base: str = ENTROPY_BASE


def floquet_avg_mutual_info(spec: FloquetSpectrum, sites: tuple[int, int] | None = None,
                            keep_per_state: bool = False, chunk: int = 512) -> MutualInfoResult:
    """Floquet-state-averaged mutual information between two sites (default the chain edges).

    Each entropy is averaged over all eigenstates before combining,
    M = <S_A> + <S_B> - <S_AB>.
    """
    V = spec.eigenstates
    dim = V.shape[0]
    L = _num_sites(dim)
    if V.shape[1] != dim:
        raise ValueError(f"incomplete spectrum: {V.shape[1]} of {dim} eigenstates")
    a, b = sites if sites is not None else (1, L)
    S_a, S_b, S_ab = (np.empty(dim) for _ in range(3))
    for s in range(0, dim, chunk):
        cols = slice(s, min(dim, s + chunk))
        rho_ab = reduced_density(V[:, cols], (a, b)).reshape(-1, 2, 2, 2, 2)
        S_ab[cols] = entropy(rho_ab.reshape(-1, 4, 4))
        S_a[cols] = entropy(np.einsum("kijlj->kil", rho_ab))
        S_b[cols] = entropy(np.einsum("kjijl->kil", rho_ab))
    M_bar = float(S_a.mean() + S_b.mean() - S_ab.mean())
    per = S_a + S_b - S_ab if keep_per_state else None
    return MutualInfoResult(spec.params, M_bar, per)


def max_mutual_info() -> float:
    return 2 * math.log(2)


def write_mutual_info(path, rows, header: str = "") -> None:
    """Rows ``(epsilon, L, V, M_bar)``."""
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# entropy log base: e\n# epsilon L V M_bar\n")
        for eps, L, V, m in rows:
            fh.write(f"{eps!r} {L} {V!r} {m:.15e}\n")
