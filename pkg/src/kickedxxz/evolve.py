"""Stroboscopic propagation: imperfect global pi-pulse followed by XXZ evolution."""

from __future__ import annotations

import logging
import math

import numpy as np
import scipy.linalg as sla

from .hamiltonian import ModelParams, build_xxz

log = logging.getLogger(__name__)

DENSE_MAX_L = 12
KRYLOV_MAX_L = 20


class KrylovConvergenceError(RuntimeError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"Krylov step failed to converge: error estimate {residual:.3e} > tol {tol:.1e}")
        self.residual = residual


def apply_u1(psi: np.ndarray, L: int, epsilon: float) -> np.ndarray:
    """exp(-i (pi/2 - epsilon) sum_j sigma_j^x) applied site by site.

    ``psi`` may be a single state of shape (2**L,) or a batch (2**L, k).
    Returns a new array.
    """
    theta = math.pi / 2 - epsilon
    c, s = math.cos(theta), -1j * math.sin(theta)
    out = np.array(psi, dtype=complex, copy=True)
    tail = out.shape[1:]
    for j in range(L):
        v = out.reshape((1 << (L - 1 - j), 2, 1 << j) + tail)
        a0 = v[:, 0].copy()
        a1 = v[:, 1]
        v[:, 0] = c * a0 + s * a1
        v[:, 1] = c * a1 + s * a0
    return out


class Propagator:
    """Applies U2 = exp(-i T H) for fixed model parameters.

    ``mode='dense'`` diagonalizes H inside each total-magnetization sector once
    and reuses the spectral data; ``mode='krylov'`` runs Lanczos with adaptive
    substepping. The default picks dense for L <= 12.
    """

    def __init__(self, params: ModelParams, mode: str | None = None, *, krylov_dim: int = 30,
                 tol: float = 1e-10, max_substeps: int = 1 << 20):
        if mode is None:
            mode = "dense" if params.L <= DENSE_MAX_L else "krylov"
        if mode not in ("dense", "krylov"):
            raise ValueError(f"unknown propagator mode {mode!r}")
        if mode == "krylov" and params.L > KRYLOV_MAX_L:
            raise ValueError(f"L={params.L} exceeds the supported Krylov size {KRYLOV_MAX_L}")
        self.params = params
        self.mode = mode
        self.krylov_dim = krylov_dim
        self.tol = tol
        self.max_substeps = max_substeps
        self.H = build_xxz(params)
        self.last_error = 0.0
        self._substeps = 1
        if mode == "dense":
            self._sectors = self._diagonalize_sectors()

    def _diagonalize_sectors(self):
        mag = self.params.basis.magnetization
        sectors = []
        for m in np.unique(mag):
            idx = np.flatnonzero(mag == m)
            block = self.H[idx][:, idx].toarray()
            w, v = np.linalg.eigh(block)
            sectors.append((idx, w, v))
        return sectors

    def energies(self) -> np.ndarray:
        if self.mode != "dense":
            raise RuntimeError("spectral data only available in dense mode")
        return np.concatenate([w for _, w, _ in self._sectors])

    def apply(self, psi: np.ndarray, t: float | None = None) -> np.ndarray:
        """exp(-i t H) psi, with t defaulting to the drive period T."""
        t = self.params.T if t is None else t
        if t == 0:
            return np.array(psi, dtype=complex, copy=True)
        if self.mode == "dense":
            return self._apply_dense(psi, t)
        if psi.ndim == 2:
            return np.stack([self._apply_krylov(psi[:, k], t) for k in range(psi.shape[1])], axis=1)
        return self._apply_krylov(psi, t)

    def _apply_dense(self, psi, t):
        out = np.empty(psi.shape, dtype=complex)
        for idx, w, v in self._sectors:
            phase = np.exp(-1j * t * w)
            coef = v.T @ psi[idx]
            coef *= phase if psi.ndim == 1 else phase[:, None]
            out[idx] = v @ coef
        return out

    def _lanczos_step(self, psi, dt):
        """One exp(-i dt H) psi step in a Krylov space; returns (result, error estimate)."""
        m = self.krylov_dim
        beta0 = np.linalg.norm(psi)
        n = psi.size
        Q = np.empty((m + 1, n), dtype=complex)
        alpha = np.zeros(m)
        beta = np.zeros(m)
        Q[0] = psi / beta0
        k_used = m
        for k in range(m):
            w = self.H @ Q[k]
            alpha[k] = np.vdot(Q[k], w).real
            w -= alpha[k] * Q[k]
            if k > 0:
                w -= beta[k - 1] * Q[k - 1]
            # full reorthogonalization, cheap at m ~ 30
            w -= Q[: k + 1].T @ (Q[: k + 1].conj() @ w)
            beta[k] = np.linalg.norm(w)
            if beta[k] < 1e-13 * max(1.0, abs(alpha[k])):
                k_used = k + 1
                break
            Q[k + 1] = w / beta[k]
        evals, evecs = sla.eigh_tridiagonal(alpha[:k_used], beta[: k_used - 1])
        coef = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        if k_used < m:
            err = 0.0
        else:
            err = beta0 * beta[m - 1] * abs(coef[-1])
        return beta0 * (coef @ Q[:k_used]), err

    def _apply_krylov(self, psi, t):
        n_sub = self._substeps
        while True:
            dt = t / n_sub
            cur = np.asarray(psi, dtype=complex)
            worst = 0.0
            ok = True
            for _ in range(n_sub):
                cur, err = self._lanczos_step(cur, dt)
                worst = max(worst, err)
                if err > self.tol / n_sub:
                    ok = False
                    break
            if ok:
                self._substeps = n_sub
                self.last_error = worst * n_sub
                return cur
            n_sub *= 2
            if n_sub > self.max_substeps:
                raise KrylovConvergenceError(worst, self.tol)
            log.debug("krylov: increasing substeps to %d (err %.2e)", n_sub, worst)

    def matrix(self) -> np.ndarray:
        """Dense U2 (dense mode only)."""
        if self.mode != "dense":
            raise RuntimeError("materializing U2 requires dense mode")
        dim = self.params.basis.dim
        U = np.zeros((dim, dim), dtype=complex)
        for idx, w, v in self._sectors:
            U[np.ix_(idx, idx)] = (v * np.exp(-1j * self.params.T * w)) @ v.T
        return U


def apply_u2(psi: np.ndarray, prop: Propagator) -> np.ndarray:
    return prop.apply(psi)


def floquet_step(psi: np.ndarray, prop: Propagator, params: ModelParams | None = None) -> np.ndarray:
    """One drive period: U_F psi = U2 U1 psi."""
    params = prop.params if params is None else params
    return prop.apply(apply_u1(psi, params.L, params.epsilon))
