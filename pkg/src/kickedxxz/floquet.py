"""Floquet operator, quasi-energy spectrum, pi-pairs and beat frequencies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .evolve import Propagator, apply_u1
from .hamiltonian import ModelParams
from .spin_core import SpinBasis

FLOQUET_MAX_L = 14
DEFAULT_PAIR_TOL = 0.05
DEFAULT_WEIGHT_FRACTION = 0.25
DEGENERACY_TOL = 1e-8
GOLDEN = (math.sqrt(5) - 1) / 2


def wrap_phase(x):
    """Map phases into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    y = np.where(y <= -math.pi, y + 2 * math.pi, y)
    return y if y.ndim else float(y)


def fold_quasi_energy(eigvals: np.ndarray, T: float) -> np.ndarray:
    """epsilon = -arg(lambda)/T folded into (-pi/T, pi/T]; lambda = -1 maps to +pi/T."""
    return wrap_phase(-np.angle(eigvals)) / T


@dataclass
class FloquetSpectrum:
    quasi_energies: np.ndarray
    eigenstates: np.ndarray  # columns are Floquet states in the computational basis
    T: float
    params: ModelParams | None = None
    labels: list = field(default_factory=list)  # symmetry sector of each state, if resolved

    @property
    def dim(self) -> int:
        return self.quasi_energies.size

    @property
    def phases(self) -> np.ndarray:
        return self.quasi_energies * self.T

    def eigenvalues(self) -> np.ndarray:
        return np.exp(-1j * self.phases)


def build_floquet_matrix(params: ModelParams, prop: Propagator | None = None) -> np.ndarray:
    """Dense U_F = U2 U1."""
    if params.L > FLOQUET_MAX_L:
        raise ValueError(f"L={params.L} exceeds the dense Floquet limit L <= {FLOQUET_MAX_L}")
    prop = prop or Propagator(params, mode="dense")
    eye = np.eye(params.basis.dim, dtype=complex)
    return prop.apply(apply_u1(eye, params.L, params.epsilon))


def _schur_eig(M: np.ndarray):
    # complex Schur of a normal matrix is diagonal; Schur vectors are orthonormal eigenvectors
    Tm, Z = sla.schur(M, output="complex")
    return np.diag(Tm).copy(), Z


def _check_unitary(U: np.ndarray, tol: float = 1e-8):
    dev = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max |U^dag U - I| = {dev:.2e})")


def _clusters(phases: np.ndarray, tol: float):
    """Runs of sorted phases closer than ``tol``, joined across the +-pi seam."""
    if phases.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(phases) > tol) + 1
    groups = np.split(np.arange(phases.size), cuts)
    if len(groups) > 1 and phases[0] + 2 * math.pi - phases[-1] <= tol:
        groups[0] = np.concatenate([groups.pop(), groups[0]])
    return [g for g in groups if g.size > 1]


def _tie_break_weights(dim: int) -> np.ndarray:
    # generic, deterministic diagonal observable; quadratic in the index so that
    # sums over flip partners b, 2^L - 1 - b stay distinct
    b = np.arange(dim, dtype=float) + 1
    return np.mod(b * b * GOLDEN, 1.0)


def _canonical_degenerate_basis(phases, vecs, labels, tol: float = DEGENERACY_TOL):
    """Rotate every degenerate cluster onto eigenvectors of a fixed diagonal observable.

    Degenerate eigenspaces have no preferred basis; this choice keeps states as
    localized in the computational basis as the symmetry allows and makes the
    output independent of solver details.
    """
    w = _tie_break_weights(vecs.shape[0])
    for g in _clusters(phases, tol):
        Vc = vecs[:, g]
        D = Vc.conj().T @ (w[:, None] * Vc)
        _, R = np.linalg.eigh(0.5 * (D + D.conj().T))
        vecs[:, g] = Vc @ R
        if labels and len({labels[i] for i in g}) > 1:
            for i in g:
                labels[i] = None
    return vecs, labels


def _sorted_spectrum(lam, vecs, T, params=None, labels=None) -> FloquetSpectrum:
    eps = fold_quasi_energy(lam, T)
    order = np.argsort(eps, kind="stable")
    labels = [labels[i] for i in order] if labels else []
    vecs = np.ascontiguousarray(vecs[:, order])
    eps = eps[order]
    vecs, labels = _canonical_degenerate_basis(eps * T, vecs, labels)
    return FloquetSpectrum(eps, vecs, T, params, labels)


def diagonalize(U: np.ndarray, T: float, params: ModelParams | None = None) -> FloquetSpectrum:
    """Quasi-energies and orthonormal Floquet states of a unitary matrix."""
    U = np.asarray(U, dtype=complex)
    _check_unitary(U)
    lam, Z = _schur_eig(U)
    return _sorted_spectrum(lam, Z, T, params)


def symmetry_blocks(basis: SpinBasis, by_q: bool = False):
    """Orthonormal symmetry-adapted bases for global spin flip X and reflection R.

    Yields ``(label, B)`` with ``B`` a sparse (dim, d) isometry. Labels are
    ``(x, r)`` eigenvalue pairs, prefixed by q when ``by_q`` is set.
    """
    dim = basis.dim
    b = np.arange(dim, dtype=np.int64)
    xb = basis.flip(b)
    rb = basis.reflect(b)
    xrb = basis.flip(rb)
    rep = np.minimum(np.minimum(b, xb), np.minimum(rb, xrb))
    reps = np.unique(rep)
    images = np.stack([reps, basis.flip(reps), basis.reflect(reps), basis.flip(basis.reflect(reps))])
    qs = basis.q_values[reps]
    q_groups = np.unique(qs) if by_q else [None]
    for q in q_groups:
        sel = np.ones(reps.size, bool) if q is None else qs == q
        img = images[:, sel]
        for x in (1, -1):
            for r in (1, -1):
                chars = np.array([1, x, r, x * r], dtype=float)
                rows, cols, vals = [], [], []
                col = 0
                for k in range(img.shape[1]):
                    coeff: dict[int, float] = {}
                    for g in range(4):
                        coeff[int(img[g, k])] = coeff.get(int(img[g, k]), 0.0) + chars[g]
                    nz = {i: c for i, c in coeff.items() if abs(c) > 1e-12}
                    if not nz:
                        continue
                    norm = math.sqrt(sum(c * c for c in nz.values()))
                    for i, c in nz.items():
                        rows.append(i)
                        cols.append(col)
                        vals.append(c / norm)
                    col += 1
                if col == 0:
                    continue
                B = sp.csc_matrix((vals, (rows, cols)), shape=(dim, col))
                label = (x, r) if q is None else (int(q), x, r)
                yield label, B


def floquet_spectrum(params: ModelParams, prop: Propagator | None = None, *,
                     use_symmetry: bool = True, by_q: bool | None = None) -> FloquetSpectrum:
    """Full Floquet spectrum, block-diagonalized by the flip/reflection symmetries.

    At epsilon = 0 the blocks are further split by the conserved |S^z| (``by_q``).
    """
    if params.L > FLOQUET_MAX_L:
        raise ValueError(f"L={params.L} exceeds the dense Floquet limit L <= {FLOQUET_MAX_L}")
    prop = prop or Propagator(params, mode="dense")
    if not use_symmetry:
        return diagonalize(build_floquet_matrix(params, prop), params.T, params)
    if by_q is None:
        by_q = params.epsilon == 0
    lams, vecs, labels = [], [], []
    for label, B in symmetry_blocks(params.basis, by_q=by_q):
        Bd = B.toarray().astype(complex)
        UB = prop.apply(apply_u1(Bd, params.L, params.epsilon))
        block = B.T @ UB
        lam, Z = _schur_eig(block)
        lams.append(lam)
        vecs.append(B @ Z)
        labels.extend([label] * lam.size)
    lam = np.concatenate(lams)
    V = np.concatenate(vecs, axis=1)
    return _sorted_spectrum(lam, V, params.T, params, labels)


def overlaps(spec: FloquetSpectrum, psi0: np.ndarray) -> np.ndarray:
    """P_alpha = |<psi_alpha|psi0>|."""
    psi0 = np.asarray(psi0)
    if psi0.shape[0] != spec.eigenstates.shape[0]:
        raise ValueError(f"state dimension {psi0.shape[0]} != spectrum dimension {spec.eigenstates.shape[0]}")
    return np.abs(spec.eigenstates.conj().T @ psi0)


def spectral_fidelity(spec: FloquetSpectrum, psi0: np.ndarray, steps: int) -> np.ndarray:
    """|<psi0|U_F^n|psi0>| for n = 0..steps from the spectral decomposition."""
    w = overlaps(spec, psi0) ** 2
    n = np.arange(steps + 1)
    return np.abs(np.exp(-1j * np.outer(n, spec.phases)) @ w)


@dataclass(frozen=True)
class PiPair:
    alpha: int
    beta: int
    splitting: float  # |wrapped phase difference|, close to pi
    weight: float  # P_alpha^2 + P_beta^2


def detect_pi_pairs(spec: FloquetSpectrum, P: np.ndarray, weight_cut: float | None = None,
                    tol: float = DEFAULT_PAIR_TOL) -> list[PiPair]:
    """Greedy matching of heavy Floquet states whose quasi-energies differ by pi/T.

    States must have overlap above ``weight_cut`` (default 0.25 max P). Valid
    pairs are taken in order of decreasing combined weight, each state used once.
    """
    P = np.asarray(P, dtype=float)
    if weight_cut is None:
        weight_cut = DEFAULT_WEIGHT_FRACTION * P.max()
    heavy = np.flatnonzero(P > weight_cut)
    phases = spec.phases
    candidates = []
    for a, b in combinations(heavy, 2):
        split = abs(wrap_phase(phases[a] - phases[b]))
        if abs(split - math.pi) < tol:
            candidates.append((P[a] ** 2 + P[b] ** 2, int(a), int(b), split))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used: set[int] = set()
    pairs = []
    for w, a, b, split in candidates:
        if a in used or b in used:
            continue
        used.update((a, b))
        pairs.append(PiPair(a, b, split, w))
    return pairs


def pair_offsets(pairs: list[PiPair], spec: FloquetSpectrum) -> np.ndarray:
    """Minimal wrapped phase offset (in [0, pi/2]) between each two pi-pairs."""
    phases = spec.phases
    out = []
    for A, B in combinations(pairs, 2):
        d = min(abs(wrap_phase(phases[a] - phases[b])) for a in (A.alpha, A.beta) for b in (B.alpha, B.beta))
        out.append(d)
    return np.array(out)


def beat_frequencies(pairs: list[PiPair], spec: FloquetSpectrum, T: float | None = None) -> np.ndarray:
    """Predicted response frequencies from quasi-energy offsets between pi-pairs.

    For every offset delta (a phase per period) returns nu = delta/(2 pi T)
    together with 1/2T +- nu and the mirror 1/T - nu, all folded into [0, 1/T).
    Sorted, duplicates kept. Empty if fewer than two pairs.
    """
    T = spec.T if T is None else T
    if len(pairs) < 2:
        return np.array([])
    nus = pair_offsets(pairs, spec) / (2 * math.pi * T)
    f0 = 1.0 / T
    cand = np.concatenate([nus, f0 - nus, 0.5 * f0 + nus, 0.5 * f0 - nus])
    return np.sort(np.mod(cand, f0))


def write_spectrum(path, spec: FloquetSpectrum, P: np.ndarray, header: str) -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write("# alpha quasi_energy overlap\n")
        for a, (e, p) in enumerate(zip(spec.quasi_energies, P)):
            fh.write(f"{a} {e:.15e} {p:.15e}\n")
