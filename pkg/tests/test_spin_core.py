import numpy as np
import pytest
from hypothesis import given, strategies as st

from kickedxxz.hamiltonian import build_pdw_operator, build_q_operator
from kickedxxz.spin_core import (ProductState, SpinBasis, domain_wall_p, domain_wall_pattern,
                                 magnetization_q, named_state, sz_expectation, sz_profile)
from oracles import bitstrings, walls


def test_dim_and_bad_length():
    assert SpinBasis(7).dim == 128
    with pytest.raises(ValueError):
        SpinBasis(0)


@pytest.mark.parametrize("L", range(1, 13))
def test_index_roundtrip_exhaustive(L):
    basis = SpinBasis(L)
    for b in range(basis.dim):
        assert basis.index(basis.bits(b)) == b
        assert basis.from_string(basis.to_string(b)) == b


def test_named_states():
    assert named_state(SpinBasis(4), "neel").bitstring == "udud"
    assert named_state(SpinBasis(12), "domain_wall").bitstring == "udududdududu"
    assert named_state(SpinBasis(2), "all_up").bitstring == "uu"
    assert named_state(SpinBasis(3), "bitstring(udd)").bitstring == "udd"
    with pytest.raises(ValueError):
        named_state(SpinBasis(4), "ferro")
    with pytest.raises(ValueError):
        named_state(SpinBasis(4), "udu")


def test_bit_convention_site_one_is_lowest_bit():
    basis = SpinBasis(3)
    assert basis.from_string("udd") == 1
    assert basis.from_string("ddu") == 4


@pytest.mark.parametrize("s,q,p", [("udud", 0, 3), ("uuuu", 4, 0), ("uudu", 2, 2), ("uudd", 0, 1)])
def test_q_and_p(s, q, p):
    state = named_state(SpinBasis(4), s)
    assert magnetization_q(state) == q
    assert domain_wall_p(state) == p


@pytest.mark.parametrize("L", [12, 16, 20])
def test_domain_wall_pattern_balanced(L):
    s = domain_wall_pattern(L)
    assert s.count("u") == s.count("d")
    assert len(s) == L
    # one defect per 12 sites: every defect removes exactly one wall from the Neel count
    p = sum(1 for a, b in zip(s, s[1:]) if a != b)
    assert p == L - 1 - max(1, L // 12)


def test_sz_expectation():
    basis = SpinBasis(2)
    psi = ProductState(basis, basis.from_string("ud")).amplitudes()
    assert sz_expectation(psi, basis, 1) == 1.0
    assert sz_expectation(psi, basis, 2) == -1.0
    cat = np.zeros(4, complex)
    cat[basis.from_string("uu")] = cat[basis.from_string("dd")] = 1 / np.sqrt(2)
    assert abs(sz_expectation(cat, basis, 1)) < 1e-15
    with pytest.raises(ValueError):
        sz_expectation(psi, basis, 3)


@pytest.mark.parametrize("L", range(1, 9))
def test_diagonals_match_operators_exhaustive(L):
    basis = SpinBasis(L)
    Q = build_q_operator(basis).diagonal()
    P = build_pdw_operator(basis).diagonal()
    for b, s in bitstrings(L):
        state = ProductState(basis, b)
        assert magnetization_q(state) == abs(sum(s)) == Q[b]
        assert domain_wall_p(state) == walls(s) == P[b]
        assert magnetization_q(state) % 2 == L % 2


@given(st.integers(1, 10).flatmap(lambda L: st.tuples(st.just(L), st.integers(0, 2 ** L - 1))))
def test_flip_and_reflect_involutions(args):
    L, b = args
    basis = SpinBasis(L)
    assert basis.flip(basis.flip(b)) == b
    assert basis.reflect(basis.reflect(b)) == b
    assert basis.to_string(basis.reflect(b)) == basis.to_string(b)[::-1]


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=16, max_size=16))
def test_sz_profile_bounded(amps):
    psi = np.array(amps)
    if np.linalg.norm(psi) < 1e-6:
        return
    psi /= np.linalg.norm(psi)
    prof = sz_profile(psi, SpinBasis(4))
    assert np.all(np.abs(prof) <= 1 + 1e-12)
