"""Exact numerics for the periodically kicked XXZ chain: time-crystal order and fragmentation."""

from .diagnostics import (Trajectory, autocorrelation, dtc_lifetime, fidelity, fourier,
                          mean_subharmonic, run_trajectory, spectral_trajectory)
from .entanglement import entropy, floquet_avg_mutual_info, reduced_density
from .evolve import KrylovConvergenceError, Propagator, apply_u1, floquet_step
from .fits import collapse_fit, exponential_fit, frequency_flatness, power_law_fit
from .floquet import (FloquetSpectrum, beat_frequencies, detect_pi_pairs, floquet_spectrum,
                      overlaps)
from .hamiltonian import (ModelParams, build_pdw_operator, build_projected_h, build_q_operator,
                          build_xxz, commutator_norm)
from .hsf import (classify_frozen, dim_q, dim_qp, overlap_matrix, ratio_q_combinatorial,
                  ratio_q_numerical)
from .spin_core import ProductState, SpinBasis, named_state

__version__ = "0.1.0"
