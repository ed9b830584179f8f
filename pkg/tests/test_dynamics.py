import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralwg import operators as ops, protocols
from chiralwg.dynamics import (
    dimer_analysis,
    dimer_state,
    evolve,
    liouvillian_spectrum,
    photon_flux,
    propagate_operator,
    steady_state,
    zero_eigenvalue_count,
)
from chiralwg.errors import CapacityError, IntegrationError
from chiralwg.master_equation import ChiralChannel, build_bidirectional, build_cascaded, build_chiral


def random_rho(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_single_emitter_decay():
    gen = build_chiral(ChiralChannel.uniform(1, 0.7, 0.2, loss=0.1))
    traj = evolve(gen, ops.basis_state("e"), t_final=5, n_times=51)
    assert np.allclose(traj.populations()[:, 0], np.exp(-traj.times), atol=1e-8)
    assert np.all(np.diff(traj.populations()[:, 0]) < 0)


@pytest.mark.parametrize("rabi, det, gamma", [(0.3, 0.0, 1.0), (1.2, 0.7, 1.0), (0.5, -2.0, 0.4)])
def test_driven_emitter_steady_population(rabi, det, gamma):
    gen = build_chiral(ChiralChannel.uniform(1, gamma, rabi=rabi, detuning=det))
    ss = steady_state(gen)
    expected = rabi**2 / (det**2 + gamma**2 / 4 + 2 * rabi**2)
    assert ops.excited_populations(ss.rho)[0] == pytest.approx(expected, abs=1e-12)
    assert ss.residual < 1e-10


def test_undriven_lossy_chain_relaxes_to_ground():
    ss = steady_state(build_chiral(ChiralChannel.uniform(3, 1.0, 0.5, loss=0.2, positions=(0, 0.2, 0.5))))
    ground = ops.ket_to_dm(ops.basis_state("ggg"))
    assert np.allclose(ss.rho, ground, atol=1e-12)


def test_dark_singlet_makes_null_space_degenerate():
    gen = build_bidirectional(ChiralChannel.uniform(2, 1.0, 1.0))
    ss = steady_state(gen)
    assert ss.degenerate and ss.rho is None
    assert ss.dimension == zero_eigenvalue_count(gen) == 4
    # the singlet projector lies in the span of the reported basis
    B = np.array([b.reshape(-1) for b in ss.basis]).T
    S = ops.ket_to_dm(ops.singlet()).reshape(-1)
    coef, *_ = np.linalg.lstsq(B, S, rcond=None)
    assert np.linalg.norm(B @ coef - S) < 1e-10


@pytest.mark.parametrize("channel", [
    ChiralChannel.uniform(2, 1.0, 0.0, loss=0.1, rabi=0.4),
    ChiralChannel.uniform(2, 1.0, 1.0, positions=(0, 0.1), rabi=(0.4, 0.2)),
    ChiralChannel.uniform(3, 1.0, 0.3, positions=(0, 0.3, 0.4)),
])
def test_zero_eigenvalues_match_steady_state_count(channel):
    gen = build_chiral(channel)
    assert zero_eigenvalue_count(gen) == steady_state(gen).dimension


def test_evolution_converges_to_steady_state():
    gen = build_chiral(ChiralChannel.uniform(2, 1.0, 0.3, loss=0.2, positions=(0, 0.15), rabi=(0.5, 0.3)))
    ss = steady_state(gen)
    rho0 = random_rho(np.random.default_rng(5), 4)
    final = evolve(gen, rho0, times=[0, 50]).states[-1]
    assert ops.trace_distance(final, ss.rho) < 1e-6


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_evolve_preserves_trace_and_hermiticity(seed):
    rng = np.random.default_rng(seed)
    ch = ChiralChannel.uniform(2, rng.uniform(0.2, 1), rng.uniform(0, 1), rng.uniform(0, 0.5),
                               positions=np.sort(rng.uniform(0, 1, 2)), rabi=rng.normal(size=2))
    traj = evolve(build_chiral(ch), random_rho(rng, 4), t_final=3, n_times=7)
    for rho in traj.states:
        assert abs(np.trace(rho) - 1) < 1e-8
        assert np.allclose(rho, rho.conj().T, atol=1e-10)


def test_evolve_reports_trace_drift():
    gen = build_chiral(ChiralChannel.uniform(2, 1.0, rabi=3.0))
    with pytest.raises(IntegrationError):
        evolve(gen, ops.basis_state("gg"), t_final=20, atol=0.5, rtol=0.5, n_times=3)


def test_steady_state_capacity():
    with pytest.raises(CapacityError):
        steady_state(build_cascaded(ChiralChannel.uniform(6, 1.0)))
    with pytest.raises(CapacityError):
        liouvillian_spectrum(build_cascaded(ChiralChannel.uniform(6, 1.0)))


def test_propagate_operator_tracks_coherence():
    gen = build_chiral(ChiralChannel.uniform(1, 1.0, detuning=0.3))
    X = np.outer(ops.basis_state("e"), ops.basis_state("g"))
    out = propagate_operator(gen, X, [0, 2.0])[-1]
    # coherence decays at gamma/2 and rotates with the detuning
    assert out[1, 0] == pytest.approx(np.exp(-1.0 + 0.6j), abs=1e-9)


def test_dimer_analysis_examples():
    rep = dimer_analysis(ops.ket_to_dm(ops.basis_state("gg")))
    assert rep.alpha == 0 and rep.purity == pytest.approx(1) and rep.fidelity == pytest.approx(1)
    assert dimer_analysis(np.eye(4) / 4).purity == pytest.approx(0.25)
    rep = dimer_analysis(ops.ket_to_dm(dimer_state(np.inf)))
    assert rep.singlet_weight == pytest.approx(1) and rep.fidelity == pytest.approx(1)
    with pytest.raises(ValueError):
        dimer_analysis(np.eye(2) / 2)


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False), st.floats(0, 6.28))
def test_dimer_fit_recovers_alpha(alpha, phase):
    psi = dimer_state(alpha)
    u = np.exp(1j * phase * np.array([0, 1, 0, 1]))
    rep = dimer_analysis(ops.ket_to_dm(u * psi), phase)
    assert rep.fidelity == pytest.approx(1, abs=1e-10)
    if abs(alpha) > 1e-6:
        assert rep.alpha == pytest.approx(alpha, rel=1e-8)


def test_ground_state_has_no_flux():
    gen = build_chiral(ChiralChannel.uniform(2, 1.0, 0.5, loss=0.1))
    flux = photon_flux(gen, ops.ket_to_dm(ops.basis_state("gg")))
    assert set(flux) == {"right", "left", "loss_0", "loss_1"}
    assert all(v == 0 for v in flux.values())


def test_matched_dimer_closed_form():
    # zero detuning, equal drives: alpha = 2 i rabi / gamma
    m = protocols.match_dimer_drive(rabi=0.3, gamma=1.0, positions=(0.0, 0.0))
    assert m.alpha == pytest.approx(0.6j, abs=1e-7)
    assert m.phase == pytest.approx(0.0, abs=1e-7) or m.phase == pytest.approx(2 * math.pi, abs=1e-7)


def test_purity_increases_toward_matched_phase():
    m = protocols.match_dimer_drive(rabi=0.5, positions=(0.0, 0.25), n_grid=36)
    dist = np.abs(np.angle(np.exp(1j * (m.sweep_phases - m.phase))))
    order = np.argsort(dist)
    # purity is non-increasing as the drive moves away from the match on either side
    for side in (1, -1):
        sel = [i for i in order if np.sign(np.angle(np.exp(1j * (m.sweep_phases[i] - m.phase)))) in (side, 0)]
        assert np.all(np.diff(m.sweep_purity[sel]) <= 1e-12)
