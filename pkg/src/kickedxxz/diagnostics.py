"""Stroboscopic trajectories and dynamical DTC observables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .evolve import Propagator, floquet_step
from .floquet import FloquetSpectrum
from .hamiltonian import ModelParams
from .spin_core import ProductState, sz_profile

DEFAULT_STEPS = 500
DEFAULT_TOUCH_TOL = 0.05
LIFETIME_MAX_STEPS = 2_000_000


@dataclass
class Trajectory:
    params: ModelParams
    initial: ProductState
    fidelity: np.ndarray  # F(nT), n = 0..steps
    sz: np.ndarray  # (steps + 1, L) per-site <sigma^z>

    @property
    def steps(self) -> int:
        return self.fidelity.size - 1

    @property
    def times(self) -> np.ndarray:
        return self.params.T * np.arange(self.steps + 1)


def fidelity(psi0: np.ndarray, psit: np.ndarray) -> float:
    """|<psi0|psit>|."""
    if psi0.shape != psit.shape:
        raise ValueError(f"state shapes differ: {psi0.shape} vs {psit.shape}")
    return float(abs(np.vdot(psi0, psit)))


def run_trajectory(params: ModelParams, initial: ProductState, steps: int = DEFAULT_STEPS,
                   prop: Propagator | None = None, *, norm_tol: float = 1e-10) -> Trajectory:
    """Step psi(nT) = U_F^n psi(0) and record fidelity and <sigma_j^z>."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    prop = prop or Propagator(params)
    psi0 = initial.amplitudes()
    psi = psi0
    F = np.empty(steps + 1)
    sz = np.empty((steps + 1, params.L))
    F[0], sz[0] = 1.0, sz_profile(psi0, params.basis)
    for n in range(1, steps + 1):
        psi = floquet_step(psi, prop, params)
        norm = np.linalg.norm(psi)
        if abs(norm - 1) > norm_tol:
            raise FloatingPointError(f"norm drifted to {norm!r} at step {n}")
        F[n] = abs(psi[initial.index])
        sz[n] = sz_profile(psi, params.basis)
    return Trajectory(params, initial, F, sz)


def spectral_trajectory(spec: FloquetSpectrum, initial: ProductState, steps: int = DEFAULT_STEPS,
                        chunk: int = 256) -> Trajectory:
    """Same records as :func:`run_trajectory`, built from the Floquet decomposition."""
    basis = initial.basis
    c = spec.eigenstates[initial.index].conj()
    keep = np.abs(c) > 1e-14
    V, c, ph = spec.eigenstates[:, keep], c[keep], spec.phases[keep]
    F = np.empty(steps + 1)
    sz = np.empty((steps + 1, basis.L))
    for s in range(0, steps + 1, chunk):
        n = np.arange(s, min(steps + 1, s + chunk))
        psi = V @ (np.exp(-1j * np.outer(ph, n)) * c[:, None])
        F[n] = np.abs(psi[initial.index])
        sz[n] = sz_profile(psi, basis).T
    return Trajectory(spec.params, initial, F, sz)


@dataclass
class FourierSpectrum:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    T: float

    @property
    def h(self) -> float:
        """Amplitude at the subharmonic frequency 1/2T."""
        return float(self.amplitudes[self.frequencies.size // 2])

    def peaks(self, rel_height: float = 0.1, exclude_dc: bool = True) -> np.ndarray:
        """Indices of local maxima (periodic grid) above rel_height * h, excluding 1/2T."""
        a = self.amplitudes
        left, right = np.roll(a, 1), np.roll(a, -1)
        is_peak = (a > left) & (a >= right) & (a > rel_height * self.h)
        is_peak[a.size // 2] = False
        if exclude_dc:
            is_peak[0] = False
        return np.flatnonzero(is_peak)


def fourier(F, T: float = 1.0) -> FourierSpectrum:
    """|f_nu| = |sum_{n=0}^{N} F(nT) exp(-2 pi i n nu T)| / (N + 1) on nu_k = k/(N T), k < N.

    ``F`` is a :class:`Trajectory` or a sampled series of length N + 1 with N even,
    so that nu = 1/2T falls on the grid at k = N/2.
    """
    if isinstance(F, Trajectory):
        T = F.params.T
        F = F.fidelity
    F = np.asarray(F, dtype=float)
    N = F.size - 1
    if N < 2 or N % 2:
        raise ValueError(f"need an even number of steps >= 2, got {N}")
    # the n = N sample aliases onto n = 0 on this grid
    g = F[:N].copy()
    g[0] += F[N]
    amp = np.abs(np.fft.fft(g)) / (N + 1)
    return FourierSpectrum(np.arange(N) / (N * T), amp, T)


def subharmonic_amplitude(F, T: float = 1.0) -> float:
    return fourier(F, T).h


def autocorrelation(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Site-parity averaged C(nT) = (2/L) sum_j <s_j(nT)> s_j(0): (even sites, odd sites).

    Sites are numbered from 1, so "even" means j = 2, 4, ..., L.
    """
    L = traj.params.L
    if L % 2:
        raise ValueError("parity-resolved autocorrelation needs even L")
    C = traj.sz * traj.initial.spins()[None, :]
    return C[:, 1::2].mean(axis=1), C[:, 0::2].mean(axis=1)


def staggered_envelopes(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Even-time and odd-time envelopes of a stroboscopic series, on the full grid.

    Each envelope is linearly interpolated between its own samples, so in a
    period-doubled signal ``upper`` follows C(2mT) and ``lower`` follows C((2m+1)T).
    """
    C = np.asarray(C, dtype=float)
    n = np.arange(C.size)
    even, odd = n[::2], n[1::2]
    if odd.size == 0:
        raise ValueError("need at least two samples")
    return np.interp(n, even, C[even]), np.interp(n, odd, C[odd])


def lifetime(upper: np.ndarray, lower: np.ndarray, T: float = 1.0,
             touch_tol: float = DEFAULT_TOUCH_TOL) -> float:
    """First t = nT > 0 at which ``upper - lower < touch_tol``; inf if it never happens.

    The signed gap also catches envelopes that cross between two samples.
    """
    upper, lower = np.asarray(upper), np.asarray(lower)
    if upper.shape != lower.shape:
        raise ValueError("series must have equal length")
    hit = np.flatnonzero(upper[1:] - lower[1:] < touch_tol)
    return float((hit[0] + 1) * T) if hit.size else math.inf


class SpectralAutocorrelation:
    """Spatially averaged C(nT) over all L sites, evaluated from a Floquet spectrum.

    Works in the span of Floquet states whose overlap with the initial state
    exceeds ``cut``; each time step then costs O(K^2) for K retained states,
    which makes windows of 10^6 periods affordable.
    """

    def __init__(self, spec: FloquetSpectrum, initial: ProductState, cut: float = 1e-10):
        basis = initial.basis
        c = spec.eigenstates[initial.index].conj()
        keep = np.abs(c) > cut
        V = spec.eigenstates[:, keep]
        weights = basis.spins.astype(float) @ initial.spins().astype(float) / basis.L
        self.M = V.conj().T @ (weights[:, None] * V)
        self.c = c[keep]
        self.phases = spec.phases[keep]

    def __call__(self, n0: int, n1: int, chunk: int = 4096) -> np.ndarray:
        """C(nT) for n0 <= n <= n1."""
        out = np.empty(n1 - n0 + 1)
        for s in range(n0, n1 + 1, chunk):
            n = np.arange(s, min(n1 + 1, s + chunk))
            A = np.exp(-1j * np.outer(self.phases, n)) * self.c[:, None]
            out[n - n0] = np.einsum("kn,kn->n", A.conj(), self.M @ A).real
        return out


def spectral_autocorrelation(spec: FloquetSpectrum, initial: ProductState, steps: int) -> np.ndarray:
    return SpectralAutocorrelation(spec, initial)(0, steps)


def dtc_lifetime(spec: FloquetSpectrum, initial: ProductState, max_steps: int = LIFETIME_MAX_STEPS,
                 touch_tol: float = DEFAULT_TOUCH_TOL, window: int = 1 << 16) -> float:
    """Envelope-touching lifetime of C(nT), scanned in windows up to ``max_steps`` periods."""
    corr = SpectralAutocorrelation(spec, initial)
    window += window % 2
    start = 0
    while start < max_steps:
        stop = min(max_steps, start + window)
        # two samples of overlap keep both envelopes continuous and the parity aligned
        lo_n = max(0, start - 2)
        up, lo = staggered_envelopes(corr(lo_n, stop))
        gap = (up - lo)[max(1, start) - lo_n:]
        hit = np.flatnonzero(gap < touch_tol)
        if hit.size:
            return float((max(1, start) + hit[0]) * spec.T)
        start = stop
    return math.inf


def sector_states(basis, q: int = 0, subsample: float = 1.0) -> np.ndarray:
    """Basis indices of the |S^z| = q sector in index order, optionally thinned.

    A fraction below one keeps every k-th state (k = round(1/fraction)) within
    each domain-wall class, so all p classes stay represented.
    """
    members = np.flatnonzero(basis.q_values == q)
    if not 0 < subsample <= 1:
        raise ValueError(f"subsample fraction must lie in (0, 1], got {subsample}")
    if subsample == 1:
        return members
    stride = max(1, round(1 / subsample))
    p = basis.p_values[members]
    keep = np.concatenate([members[p == v][::stride] for v in np.unique(p)])
    return np.sort(keep)


def fidelity_batch(spec: FloquetSpectrum, indices, steps: int) -> np.ndarray:
    """F(nT) for product states ``indices``: shape (len(indices), steps + 1)."""
    W = np.abs(spec.eigenstates[np.asarray(indices)]) ** 2
    n = np.arange(steps + 1)
    return np.abs(W @ np.exp(-1j * np.outer(spec.phases, n)))


def mean_subharmonic(spec: FloquetSpectrum, indices, steps: int = DEFAULT_STEPS,
                     chunk: int = 128) -> float:
    """Average subharmonic amplitude h over product initial states."""
    indices = np.asarray(indices)
    hs = []
    for s in range(0, indices.size, chunk):
        for F in fidelity_batch(spec, indices[s:s + chunk], steps):
            hs.append(fourier(F, spec.T).h)
    return float(np.mean(hs))


def write_trajectory(path, traj: Trajectory, header: str) -> None:
    C_even, C_odd = autocorrelation(traj) if traj.params.L % 2 == 0 else (
        np.full(traj.steps + 1, np.nan), np.full(traj.steps + 1, np.nan))
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        cols = " ".join(f"sz_{j}" for j in range(1, traj.params.L + 1))
        fh.write(f"# n t F C_even C_odd {cols}\n")
        for n in range(traj.steps + 1):
            sz = " ".join(f"{x:.12e}" for x in traj.sz[n])
            fh.write(f"{n} {float(traj.times[n])!r} {traj.fidelity[n]:.15e} {C_even[n]:.12e} {C_odd[n]:.12e} {sz}\n")


def write_fourier(path, fs: FourierSpectrum, header: str) -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        fh.write(f"# h {fs.h:.15e}\n# nu amplitude\n")
        for nu, a in zip(fs.frequencies, fs.amplitudes):
            fh.write(f"{float(nu)!r} {a:.15e}\n")
