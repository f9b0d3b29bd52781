"""Computational basis, product states and diagonal observables.

Convention used everywhere in the package: basis index ``b`` in ``[0, 2**L)``,
bit ``j`` of ``b`` is the spin on site ``j + 1`` (site 1 is the leftmost),
bit value 1 is spin up (sigma^z = +1) and 0 is spin down (sigma^z = -1).
Bitstrings are written with ``'u'``/``'d'`` characters, site 1 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

UP, DOWN = "u", "d"
STATE_NAMES = ("neel", "domain_wall", "all_up")


@dataclass(frozen=True)
class SpinBasis:
    L: int

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 1:
            raise ValueError(f"chain length must be a positive integer, got {self.L!r}")

    @property
    def dim(self) -> int:
        return 1 << self.L

    @property
    def all_up(self) -> int:
        return self.dim - 1

    @cached_property
    def spins(self) -> np.ndarray:
        """(dim, L) int8 table of sigma^z eigenvalues, column j = site j+1."""
        b = np.arange(self.dim, dtype=np.int64)[:, None]
        bits = (b >> np.arange(self.L)) & 1
        return (2 * bits - 1).astype(np.int8)

    @cached_property
    def magnetization(self) -> np.ndarray:
        """Total sigma^z of every basis state."""
        return self.spins.sum(axis=1, dtype=np.int64)

    @cached_property
    def q_values(self) -> np.ndarray:
        return np.abs(self.magnetization)

    @cached_property
    def p_values(self) -> np.ndarray:
        """Open-chain domain-wall count of every basis state."""
        s = self.spins
        return (s[:, :-1] != s[:, 1:]).sum(axis=1).astype(np.int64)

    def bits(self, index: int) -> tuple[int, ...]:
        self._check_index(index)
        return tuple((index >> j) & 1 for j in range(self.L))

    def index(self, bits) -> int:
        bits = tuple(int(x) for x in bits)
        if len(bits) != self.L or any(x not in (0, 1) for x in bits):
            raise ValueError(f"expected {self.L} bits of 0/1, got {bits}")
        return sum(x << j for j, x in enumerate(bits))

    def to_string(self, index: int) -> str:
        return "".join(UP if x else DOWN for x in self.bits(index))

    def from_string(self, s: str) -> int:
        s = s.strip().lower()
        if len(s) != self.L:
            raise ValueError(f"bitstring {s!r} has length {len(s)}, chain has L={self.L}")
        table = {UP: 1, DOWN: 0, "1": 1, "0": 0, "↑": 1, "↓": 0}
        try:
            return self.index(table[c] for c in s)
        except KeyError as exc:
            raise ValueError(f"bad spin character {exc.args[0]!r} in {s!r}") from None

    def flip(self, index):
        """Global spin reversal (works on arrays of indices too)."""
        return np.bitwise_xor(index, self.all_up)

    def reflect(self, index):
        """Mirror image j -> L+1-j of basis states (array-friendly)."""
        idx = np.asarray(index, dtype=np.int64)
        out = np.zeros_like(idx)
        for j in range(self.L):
            out |= ((idx >> j) & 1) << (self.L - 1 - j)
        return out if out.ndim else int(out)

    def _check_index(self, index):
        if not 0 <= index < self.dim:
            raise ValueError(f"basis index {index} outside [0, {self.dim})")


@dataclass(frozen=True)
class ProductState:
    basis: SpinBasis
    index: int

    def __post_init__(self):
        self.basis._check_index(self.index)

    @property
    def bitstring(self) -> str:
        return self.basis.to_string(self.index)

    def amplitudes(self) -> np.ndarray:
        psi = np.zeros(self.basis.dim, dtype=complex)
        psi[self.index] = 1.0
        return psi

    def spins(self) -> np.ndarray:
        return self.basis.spins[self.index].astype(int)


def domain_wall_pattern(L: int) -> str:
    """Antiferromagnetic background with embedded adjacent-pair defects.

    One defect (a phase slip of the Neel pattern) per 12 sites, at least one,
    evenly spaced. Slips sit after an even number of sites, so the first
    defect is a down-down pair and even chains stay at zero magnetization.
    For L = 12 this gives ``udududdududu``.
    """
    n_defects = max(1, L // 12)
    cuts = [2 * int(k * L / (n_defects + 1) // 2) for k in range(1, n_defects + 1)]
    out, phase = [], 0
    for j in range(L):
        if j in cuts:
            phase ^= 1
        out.append(UP if (j + phase) % 2 == 0 else DOWN)
    return "".join(out)


def named_state(basis: SpinBasis, name: str) -> ProductState:
    """Product state by name: ``neel``, ``domain_wall``, ``all_up`` or a u/d bitstring."""
    key = name.strip().lower().replace("-", "_")
    L = basis.L
    if key == "neel":
        s = "".join(UP if j % 2 == 0 else DOWN for j in range(L))
    elif key in ("domain_wall", "domainwall", "dw"):
        s = domain_wall_pattern(L)
    elif key == "all_up":
        s = UP * L
    elif key.startswith("bitstring(") and key.endswith(")"):
        s = key[len("bitstring("):-1]
    elif key and set(key) <= {UP, DOWN}:
        s = key
    else:
        raise ValueError(f"unknown state name {name!r}; expected one of {STATE_NAMES} or a u/d bitstring")
    return ProductState(basis, basis.from_string(s))


def magnetization_q(state: ProductState) -> int:
    return int(abs(state.spins().sum()))


def domain_wall_p(state: ProductState) -> int:
    s = state.spins()
    return int(np.count_nonzero(s[:-1] != s[1:]))


def sz_profile(psi: np.ndarray, basis: SpinBasis) -> np.ndarray:
    """<sigma_j^z> for all sites j = 1..L. Accepts (dim,) or (dim, k) arrays."""
    prob = np.abs(psi) ** 2
    return basis.spins.T.astype(float) @ prob


def sz_expectation(psi: np.ndarray, basis: SpinBasis, site: int) -> float:
    if not 1 <= site <= basis.L:
        raise ValueError(f"site {site} outside 1..{basis.L}")
    col = basis.spins[:, site - 1].astype(float)
    return float(col @ (np.abs(psi) ** 2))
