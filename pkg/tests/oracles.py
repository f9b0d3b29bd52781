"""Independent brute-force constructions used as test oracles.

Everything here is built from explicit Kronecker products of 2x2 Pauli
matrices and dense matrix exponentials, sharing no code with the package.
Local basis: index 0 = down, 1 = up; site 1 is the least significant factor.
"""

import itertools
import math

import numpy as np
import scipy.linalg as sla

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)  # sign fixed by the down/up ordering
SZ = np.diag([-1.0, 1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def site_op(op, site, L):
    """Operator ``op`` on ``site`` (1-based) of an L-site chain."""
    factors = [I2] * L
    factors[site - 1] = op
    out = np.array([[1.0 + 0j]])
    for f in reversed(factors):  # site L is the most significant factor
        out = np.kron(out, f)
    return out


def xxz_dense(L, J, V):
    H = np.zeros((2 ** L, 2 ** L), dtype=complex)
    for j in range(1, L):
        H += J * (site_op(SX, j, L) @ site_op(SX, j + 1, L) + site_op(SY, j, L) @ site_op(SY, j + 1, L))
        H += V * site_op(SZ, j, L) @ site_op(SZ, j + 1, L)
    return H


def kick_dense(L, epsilon):
    theta = math.pi / 2 - epsilon
    X = sum(site_op(SX, j, L) for j in range(1, L + 1))
    return sla.expm(-1j * theta * X)


def floquet_dense(L, J, V, T, epsilon):
    return sla.expm(-1j * T * xxz_dense(L, J, V)) @ kick_dense(L, epsilon)


def bitstrings(L):
    """All spin configurations as tuples of +-1 (site 1 first) with their basis index."""
    for b in range(2 ** L):
        yield b, tuple(1 if (b >> j) & 1 else -1 for j in range(L))


def walls(s):
    return sum(1 for a, b in zip(s, s[1:]) if a != b)


def naive_dft_amplitudes(F, T=1.0):
    """|sum_n F_n exp(-2 pi i n k / N)| / (N + 1) on k = 0..N-1, by direct summation."""
    F = np.asarray(F, float)
    N = F.size - 1
    n = np.arange(N + 1)
    return np.array([abs(np.sum(F * np.exp(-2j * np.pi * n * k / N))) / (N + 1) for k in range(N)])


def partial_trace_loop(psi, sites, L):
    keep = list(sites)
    d = 2 ** len(keep)
    rho = np.zeros((d, d), dtype=complex)
    for b1, b2 in itertools.product(range(2 ** L), repeat=2):
        if any(((b1 >> (j - 1)) & 1) != ((b2 >> (j - 1)) & 1) for j in range(1, L + 1) if j not in keep):
            continue
        i1 = i2 = 0
        for s in keep:
            i1 = 2 * i1 + ((b1 >> (s - 1)) & 1)
            i2 = 2 * i2 + ((b2 >> (s - 1)) & 1)
        rho[i1, i2] += psi[b1] * np.conj(psi[b2])
    return rho
