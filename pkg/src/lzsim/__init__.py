"""Landau-Zener-Stuckelberg interferometry of a driven qubit-resonator system.

Core layers: operators/params (Hamiltonians on the truncated product space),
floquet (one-period propagation, modes, Fourier components), dynamics
(closed-system probabilities and resonance geometry), bath + dissipative
(Floquet-Born-Markov generator and observables), sweep (parallel parameter
maps), service (FastAPI wrapper), cli (thin command-line front end).
"""

__version__ = "0.1.0"

from .bath import BathSpec, bose_occupation, rate_kernel, spectral_density
from .dissipative import (DissipativeResult, FbmGenerator, build_generator,
                          dissipative_run, evolve, p_up_period_averaged,
                          rho0_floquet, steady_state, structured_bath_run)
from .dynamics import (ProbabilityTrace, Rect, ResonanceRegions,
                       instantaneous_probability, p_up,
                       period_averaged_probability_at_time, resonance_regions,
                       running_average, rwa_probability,
                       rwa_probability_instantaneous, time_averaged_probability)
from .floquet import (DriveHamiltonian, FloquetSolution, FourierCoeffs,
                      Propagation, floquet_modes, floquet_solution,
                      fourier_coefficients, load_solution, propagate_period,
                      save_solution)
from .operators import (Operator, StaticSpectrum, annihilation_op, basis_index,
                        basis_state, build_djc_hamiltonian,
                        build_rabi_hamiltonian, coupling_coordinate,
                        dump_operator, gap_scan, number_op, pauli,
                        static_spectrum, tensor, up_projector)
from .params import DjcParams, SystemParams
from .sweep import Cut, SweepResult, compute_point, cut_1d, load_result, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
