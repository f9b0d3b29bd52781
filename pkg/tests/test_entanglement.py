import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kickedxxz.entanglement import (entropy, floquet_avg_mutual_info, max_mutual_info, reduced_density,
                                    write_mutual_info)
from kickedxxz.floquet import FloquetSpectrum, floquet_spectrum
from kickedxxz.hamiltonian import ModelParams
from kickedxxz.spin_core import SpinBasis, named_state
from oracles import partial_trace_loop


def random_state(L, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2 ** L) + 1j * rng.normal(size=2 ** L)
    return psi / np.linalg.norm(psi)


@pytest.mark.parametrize("sites", [(1,), (3,), (5,), (1, 5), (4, 2), (2, 3)])
def test_partial_trace_matches_loop(sites):
    psi = random_state(5, 7)
    assert np.max(np.abs(reduced_density(psi, sites) - partial_trace_loop(psi, sites, 5))) < 1e-14


@given(st.integers(2, 7).flatmap(lambda L: st.tuples(st.just(L), st.integers(0, 10 ** 6),
                                                     st.lists(st.integers(1, L), min_size=1, max_size=2,
                                                              unique=True))))
@settings(max_examples=40)
def test_density_matrix_properties(args):
    L, seed, sites = args
    rho = reduced_density(random_state(L, seed), sites)
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_examples():
    basis = SpinBasis(4)
    prod = named_state(basis, "uddu").amplitudes()
    rho = reduced_density(prod, (2,))
    assert np.allclose(rho @ rho, rho) and abs(np.trace(rho) - 1) < 1e-15
    bell = np.zeros(4, complex)
    bell[0] = bell[3] = 1 / math.sqrt(2)
    assert np.allclose(reduced_density(bell, (1,)), np.eye(2) / 2)
    neel = named_state(basis, "neel").amplitudes()
    r = reduced_density(neel, (1, 4))
    assert np.count_nonzero(np.abs(r) > 0) == 1 and np.allclose(r, np.diag(np.diag(r)))
    assert entropy(rho) == 0.0
    assert entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-15)
    assert entropy(np.diag([0.75, 0.25])) == pytest.approx(0.5623351446188083, abs=1e-12)


def test_invalid_sites():
    psi = random_state(3, 0)
    for bad in ((), (1, 2, 3), (0,), (4,), (2, 2)):
        with pytest.raises(ValueError):
            reduced_density(psi, bad)
    with pytest.raises(ValueError):
        reduced_density(np.ones(6), (1,))


def test_product_eigenstates_give_zero():
    spec = FloquetSpectrum(np.zeros(32), np.eye(32, dtype=complex), 1.0)
    assert floquet_avg_mutual_info(spec).M_bar == 0.0


def test_incomplete_spectrum_rejected():
    spec = FloquetSpectrum(np.zeros(4), np.eye(16, dtype=complex)[:, :4], 1.0)
    with pytest.raises(ValueError):
        floquet_avg_mutual_info(spec)


def test_bounds_phase_invariance_and_trend():
    res = {}
    for eps in (0.005, 0.1, 0.3):
        spec = floquet_spectrum(ModelParams(L=10, J=1, V=1000, epsilon=eps))
        r = floquet_avg_mutual_info(spec, keep_per_state=True)
        assert r.per_state.min() > -1e-10
        assert -1e-10 <= r.M_bar <= max_mutual_info()
        res[eps] = r.M_bar
        if eps == 0.1:
            spec.eigenstates *= np.exp(1j * np.arange(spec.dim))
            assert abs(floquet_avg_mutual_info(spec).M_bar - r.M_bar) < 1e-10
    assert res[0.005] > res[0.1] > res[0.3]
    assert 0.1 <= res[0.005] <= 1.0


def test_thermal_value_small():
    spec = floquet_spectrum(ModelParams(L=10, J=1, V=1000, epsilon=0.3))
    assert floquet_avg_mutual_info(spec).M_bar < 0.02


def test_export(tmp_path):
    write_mutual_info(tmp_path / "m.dat", [(0.1, 8, 1000.0, 0.25)], "L = 8")
    assert np.loadtxt(tmp_path / "m.dat").tolist() == [0.1, 8, 1000.0, 0.25]
