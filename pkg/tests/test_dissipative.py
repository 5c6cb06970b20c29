"""FBM generator identities, evolution, steady states, structured bath."""
import numpy as np
import pytest

from lzsim.bath import BathSpec
from lzsim.dissipative import (GeneratorError, SteadyStateMultiplicityError,
                               build_generator, dissipative_run, evolve,
                               p_up_period_averaged, rho0_floquet, steady_state,
                               structured_bath_run)
from lzsim.dynamics import period_averaged_probability_at_time
from lzsim.floquet import DriveHamiltonian, floquet_solution, fourier_coefficients
from lzsim.operators import (basis_state, coupling_coordinate, qubit_parts,
                             rabi_parts, static_spectrum, up_projector)
from lzsim.params import SystemParams

OMEGA = 0.0375
SC = dict(delta=0.0038, g=0.0019, omega=OMEGA, omega_r=1.0, n_max=3)
BATH = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=0.0175)


def _sc_generator(eps0_ow, amp_ow, n_t=512, k_max=200, bath=BATH):
    p = SystemParams(eps0=eps0_ow * OMEGA, amp=amp_ow * OMEGA, **SC)
    h0, h1 = rabi_parts(p)
    sol = floquet_solution(DriveHamiltonian(h0, h1, p.omega), n_t=n_t)
    xc = fourier_coefficients(sol, coupling_coordinate(p.n_max).mat, k_max)
    return p, sol, build_generator(sol, xc, bath)


def test_trace_preservation_left_null_vector():
    _, sol, gen = _sc_generator(5.0, 12.0)
    d = sol.dim
    vec_ident = np.eye(d, dtype=complex).reshape(d * d)
    residual = np.abs(vec_ident @ gen.matrix).max()
    assert residual < 1e-10 * max(1.0, np.abs(gen.matrix).max())
    assert gen.trace_defect == residual


def test_hermiticity_preservation_random_rho():
    _, sol, gen = _sc_generator(3.0, 7.0)
    d = sol.dim
    rng = np.random.default_rng(11)
    for _ in range(5):
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        rho = m + m.conj().T
        drho = (gen.matrix @ rho.reshape(d * d)).reshape(d, d)
        assert np.abs(drho - drho.conj().T).max() < 1e-10 * max(1.0, np.abs(drho).max())


def test_commuting_coupling_gives_zero_dissipator_at_t0():
    # X commutes with the static Hamiltonian and T = 0: every rate sits at
    # N(0) = 0, so the relaxation tensor vanishes identically
    eps0 = 0.3
    h0 = 0.5 * eps0 * np.diag([-1.0, 1.0]).astype(complex)
    drive = DriveHamiltonian(h0, np.zeros((2, 2), dtype=complex), OMEGA)
    sol = floquet_solution(drive, n_t=256)
    xc = fourier_coefficients(sol, np.diag([-1.0, 1.0]).astype(complex), k_max=16)
    bath0 = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=0.0)
    gen = build_generator(sol, xc, bath0)
    coherent = np.diag((-1j * (sol.quasienergies[:, None]
                               - sol.quasienergies[None, :])).reshape(4))
    assert np.abs(gen.matrix - coherent).max() < 1e-12


def test_detailed_balance_undriven():
    # steady populations of adjacent static eigenstates follow the Boltzmann
    # ratio; oracle = Gibbs state from static_spectrum
    p, sol, gen = _sc_generator(-8.0, 0.0)
    ss = steady_state(gen)
    spec = static_spectrum(p, p.eps0)
    v = sol.modes0
    rho_lab = v @ ss.rho @ v.conj().T
    pops = np.real(np.diag(spec.states.conj().T @ rho_lab @ spec.states))
    for i in range(3):
        expected = np.exp(-(spec.energies[i + 1] - spec.energies[i]) / BATH.temperature)
        if pops[i] > 1e-12 and expected > 1e-12:
            assert abs(pops[i + 1] / pops[i] - expected) / expected < 0.02


def test_gibbs_trace_distance_undriven():
    for eps0_ow in (-8.0, 4.0):
        p, sol, gen = _sc_generator(eps0_ow, 0.0)
        ss = steady_state(gen)
        spec = static_spectrum(p, p.eps0)
        w = np.exp(-(spec.energies - spec.energies[0]) / BATH.temperature)
        rho_gibbs = (spec.states * (w / w.sum())) @ spec.states.conj().T
        v = sol.modes0
        rho_lab = v @ ss.rho @ v.conj().T
        td = 0.5 * np.abs(np.linalg.eigvalsh(rho_lab - rho_gibbs)).sum()
        assert td < 0.02


def test_zero_temperature_relaxes_to_ground_state():
    bath0 = BathSpec.ohmic(kappa=0.001, omega_d=12.5, temperature=0.0)
    p, sol, gen = _sc_generator(-8.0, 0.0, bath=bath0)
    ss = steady_state(gen)
    spec = static_spectrum(p, p.eps0)
    ground = np.outer(spec.states[:, 0], spec.states[:, 0].conj())
    v = sol.modes0
    rho_lab = v @ ss.rho @ v.conj().T
    assert np.abs(rho_lab - ground).max() < 1e-3


def test_evolve_t0_identity_and_trace():
    p, sol, gen = _sc_generator(2.0, 9.0)
    psi0 = basis_state("down,0", p.n_max)
    rho0 = rho0_floquet(sol, psi0)
    times = np.array([0.0, 10.0, 1000.0]) * sol.tau
    rhos = evolve(gen, rho0, times)
    assert np.abs(rhos[0] - rho0).max() < 1e-10
    assert np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0).max() < 1e-8


def test_evolve_expm_fallback_agrees():
    p, sol, gen = _sc_generator(2.0, 9.0, n_t=256, k_max=100)
    psi0 = basis_state("down,0", p.n_max)
    rho0 = rho0_floquet(sol, psi0)
    times = np.array([0.0, 25.0]) * sol.tau
    fast = evolve(gen, rho0, times)
    slow = evolve(gen, rho0, times, cond_threshold=0.0)  # force scaling-and-squaring
    assert np.abs(fast - slow).max() < 1e-8


def test_evolve_validates_rho0():
    p, sol, gen = _sc_generator(1.0, 2.0, n_t=128, k_max=60)
    bad = np.eye(sol.dim, dtype=complex)  # trace D, not 1
    with pytest.raises(ValueError):
        evolve(gen, bad, [0.0])


def test_weak_coupling_limit_matches_closed_system():
    bath_weak = BathSpec.ohmic(kappa=1e-6, omega_d=12.5, temperature=0.0175)
    p, sol, gen = _sc_generator(4.0, 11.0, bath=bath_weak)
    psi0 = basis_state("down,0", p.n_max)
    rho0 = rho0_floquet(sol, psi0)
    t_tau = 100.0
    rho_t = evolve(gen, rho0, [t_tau * sol.tau])[0]
    p_open = p_up_period_averaged(rho_t, sol)
    p_closed = period_averaged_probability_at_time(sol, psi0,
                                                   up_projector(p.n_max).mat, t_tau)
    assert abs(p_open - p_closed) < 1e-3


def test_steady_state_initial_condition_independence():
    p, sol, gen = _sc_generator(6.0, 14.0)
    ss = steady_state(gen)
    t = 1e6 * sol.tau
    for label in ("down,0", "up,0"):
        rho0 = rho0_floquet(sol, basis_state(label, p.n_max))
        rho_t = evolve(gen, rho0, [t])[0]
        td = 0.5 * np.abs(np.linalg.eigvalsh(rho_t - ss.rho)).sum()
        assert td < 1e-4


def test_steady_state_multiplicity_error_decoupled_qubit():
    # g = 0 and X acting only on the resonator: qubit populations conserved,
    # so the generator null space is at least two-dimensional
    p = SystemParams(eps0=0.2, amp=0.0, g=0.0,
                     **{k: v for k, v in SC.items() if k != "g"})
    h0, h1 = rabi_parts(p)
    sol = floquet_solution(DriveHamiltonian(h0, h1, p.omega), n_t=256)
    xc = fourier_coefficients(sol, coupling_coordinate(p.n_max).mat, k_max=100)
    gen = build_generator(sol, xc, BATH)
    with pytest.raises(SteadyStateMultiplicityError):
        steady_state(gen)


def test_steady_state_positivity_and_trace():
    _, sol, gen = _sc_generator(9.0, 21.0)
    ss = steady_state(gen)
    assert np.abs(ss.rho - ss.rho.conj().T).max() < 1e-12
    assert np.isclose(np.trace(ss.rho).real, 1.0, atol=1e-12)
    assert ss.min_eigenvalue > -1e-6
    assert ss.residual < 1e-10


def test_p_up_maximally_mixed():
    _, sol, gen = _sc_generator(1.0, 3.0, n_t=128, k_max=60)
    rho_mixed = np.eye(sol.dim) / sol.dim
    assert np.isclose(p_up_period_averaged(rho_mixed, sol), 0.5, atol=1e-12)


def test_region_i_ii_asymptotics():
    # far outside every diamond the steady state is the thermal ground state
    for eps0_ow, expected in ((-10.0, 1.0), (10.0, 0.0)):
        p = SystemParams(eps0=eps0_ow * OMEGA, amp=0.5 * OMEGA, **SC)
        res = dissipative_run(p, BATH, steady=True, n_t=256, k_max=100)
        assert abs(res.steady_p_up - expected) < 0.05


def test_dissipative_run_trace_and_diagnostics():
    p = SystemParams(eps0=2 * OMEGA, amp=8 * OMEGA, **SC)
    res = dissipative_run(p, BATH, times_tau=[0.0, 50.0, 1000.0], steady=True,
                          n_t=256, k_max=100)
    assert res.p_up_vs_time is not None
    assert res.p_up_vs_time.values.shape == (3,)
    assert np.all(res.p_up_vs_time.values >= -1e-9)
    assert np.all(res.p_up_vs_time.values <= 1 + 1e-9)
    assert res.steady_p_up is not None
    assert np.abs(np.linalg.eigvalsh(res.rho_steady)).sum() == pytest.approx(1.0, abs=1e-6)
    for key in ("unitarity_defect", "fourier_leakage", "k_tail_fraction",
                "trace_defect", "null_residual", "min_eigenvalue"):
        assert key in res.diagnostics
    assert res.diagnostics["lamb_shift_included"] is False


def test_structured_bath_ground_state_limit():
    sb = BathSpec.structured(kappa=0.001, g=0.0019, omega_r=1.0, temperature=0.0175)
    p = SystemParams(eps0=10 * OMEGA, amp=0.0, **SC)
    res = structured_bath_run(p, sb, steady=True, n_t=256, k_max=100)
    assert res.steady_p_up < 0.05
    p2 = SystemParams(eps0=-10 * OMEGA, amp=0.0, **SC)
    res2 = structured_bath_run(p2, sb, steady=True, n_t=256, k_max=100)
    assert res2.steady_p_up > 0.95


def test_structured_bath_requires_structured_spec():
    p = SystemParams(eps0=0.1, amp=0.0, **SC)
    with pytest.raises(ValueError):
        structured_bath_run(p, BATH)


def test_usc_reaches_stationarity_by_1000_tau():
    p = SystemParams(delta=0.0038, g=0.1125, omega=OMEGA, omega_r=1.0, n_max=3,
                     eps0=3 * OMEGA, amp=10 * OMEGA)
    res = dissipative_run(p, BATH, times_tau=[1000.0], steady=True,
                          n_t=512, k_max=200)
    h0, h1 = rabi_parts(p)
    sol = res.solution
    rho0 = rho0_floquet(sol, basis_state("down,0", p.n_max))
    rho_t = evolve(res.generator, rho0, [1000.0 * sol.tau])[0]
    ss = steady_state(res.generator)
    td = 0.5 * np.abs(np.linalg.eigvalsh(rho_t - ss.rho)).sum()
    assert td < 1e-3
