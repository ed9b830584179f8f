import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chiralwg import operators as ops
from chiralwg.dynamics import steady_state
from chiralwg.master_equation import (
    ChiralChannel,
    EmitterSpec,
    add_drive,
    build_bidirectional,
    build_cascaded,
    build_chiral,
    cascaded_from_rates,
    reduced_generator_check,
)


def random_rho(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def dag(a):
    return a.conj().T


def D(c, rho):
    return c @ rho @ dag(c) - 0.5 * (dag(c) @ c @ rho + rho @ dag(c) @ c)


def cascaded_oracle(gammas, xs, k, rho):
    """Cascaded equation in commutator form, written out term by term."""
    n = len(gammas)
    sm = ops.lowering_ops(n)
    out = sum(g * D(s, rho) for g, s in zip(gammas, sm))
    for j in range(n):
        for l in range(j + 1, n):
            c = math.sqrt(gammas[j] * gammas[l]) * np.exp(1j * k * (xs[l] - xs[j]))
            out = out - (c * (dag(sm[l]) @ sm[j] @ rho - sm[j] @ rho @ dag(sm[l])))
            out = out - np.conj(c) * (rho @ dag(sm[j]) @ sm[l] - sm[l] @ rho @ dag(sm[j]))
    return out


def bidirectional_oracle(g, xs, k, rho):
    """Symmetric equation: sin exchange plus 2 cos Kossakowski dissipator."""
    n = len(xs)
    sm = ops.lowering_ops(n)
    H = np.zeros_like(rho)
    out = np.zeros_like(rho)
    for i in range(n):
        for j in range(n):
            ph = k * abs(xs[i] - xs[j])
            if i != j:
                H = H + g * math.sin(ph) * dag(sm[i]) @ sm[j]
            a = 2 * g * math.cos(ph)
            out = out + a * (sm[j] @ rho @ dag(sm[i])
                             - 0.5 * (dag(sm[i]) @ sm[j] @ rho + rho @ dag(sm[i]) @ sm[j]))
    return out - 1j * (H @ rho - rho @ H)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_cascaded_matches_commutator_form(n, seed):
    rng = np.random.default_rng(seed)
    gammas = rng.uniform(0.1, 2, n)
    xs = np.sort(rng.uniform(0, 2, n))
    ch = ChiralChannel(tuple(EmitterSpec(x, g) for x, g in zip(xs, gammas)))
    rho = random_rho(rng, 1 << n)
    assert np.allclose(build_cascaded(ch).apply(rho), cascaded_oracle(gammas, xs, ch.k, rho), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 3), seed=st.integers(0, 2**31))
def test_bidirectional_matches_symmetric_form(n, seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 2, n))
    ch = ChiralChannel.uniform(n, 0.8, 0.8, positions=xs)
    rho = random_rho(rng, 1 << n)
    assert np.allclose(build_bidirectional(ch).apply(rho), bidirectional_oracle(0.8, xs, ch.k, rho), atol=1e-12)


def test_identical_pair_no_jump_hamiltonian():
    g = 0.7
    gen = build_cascaded(ChiralChannel.uniform(2, g))
    s1, s2 = ops.lowering_ops(2)
    expected = -0.5j * g * (dag(s1) @ s1 + dag(s2) @ s2 + 2 * dag(s2) @ s1)
    assert np.allclose(gen.h_eff, expected, atol=1e-15)
    (jump,) = gen.jumps
    assert np.allclose(math.sqrt(jump.rate) * jump.op, math.sqrt(g) * (s1 + s2))


def test_liouvillian_agrees_with_apply():
    rng = np.random.default_rng(1)
    ch = ChiralChannel.uniform(3, 1.0, 0.4, loss=0.2, positions=(0, 0.1, 0.6), rabi=(0.3, 0.2j, 0), detuning=(0.1, 0, -0.4))
    gen = build_chiral(ch)
    rho = random_rho(rng, 8)
    assert np.allclose(gen.liouvillian() @ rho.reshape(-1), gen.apply(rho).reshape(-1), atol=1e-13)


generators = st.tuples(
    st.integers(1, 3), st.floats(0, 2), st.floats(0, 2), st.floats(0, 1), st.integers(0, 2**31)
).filter(lambda p: p[1] + p[2] + p[3] > 0.05)


@settings(max_examples=40, deadline=None)
@given(generators)
def test_trace_and_hermiticity_preserved(p):
    n, gR, gL, loss, seed = p
    rng = np.random.default_rng(seed)
    ch = ChiralChannel.uniform(n, gR, gL, loss, positions=np.sort(rng.uniform(0, 1, n)),
                               rabi=rng.normal(size=n) + 1j * rng.normal(size=n), detuning=rng.normal(size=n))
    gen = build_chiral(ch)
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    rho = a + dag(a)
    out = gen.apply(rho)
    assert abs(np.trace(out)) < 1e-12 * max(1, np.abs(rho).max())
    assert np.allclose(out, dag(out), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 4), seed=st.integers(0, 2**31))
def test_limit_reductions_random_positions(n, seed):
    rng = np.random.default_rng(seed)
    xs = np.sort(rng.uniform(0, 3, n))
    one = ChiralChannel.uniform(n, 1.3, 0.0, positions=xs)
    two = ChiralChannel.uniform(n, 0.6, 0.6, positions=xs)
    assert np.linalg.norm(build_chiral(one).liouvillian() - build_cascaded(one).liouvillian()) < 1e-12
    assert np.linalg.norm(build_chiral(two).liouvillian() - build_bidirectional(two).liouvillian()) < 1e-12


def test_undriven_cascaded_pair_has_only_ground_steady_state():
    ss = steady_state(build_cascaded(ChiralChannel.uniform(2, 1.0, positions=(0, 0.3))))
    assert not ss.degenerate
    assert np.allclose(ss.rho, ops.ket_to_dm(ops.basis_state("gg")), atol=1e-12)


def test_add_drive_zero_is_identity_and_matches_channel_drive():
    gen = build_cascaded(ChiralChannel.uniform(2, 1.0))
    assert add_drive(gen, [0, 0]) is gen
    driven = add_drive(gen, [0.3, 0.3j], [0.1, -0.1])
    direct = build_cascaded(ChiralChannel.uniform(2, 1.0, rabi=(0.3, 0.3j), detuning=(0.1, -0.1)))
    assert np.allclose(driven.liouvillian(), direct.liouvillian())


def test_cascaded_from_rates_matches_builder():
    ch = ChiralChannel.uniform(2, 0.8, positions=(0, 0.2), loss=0.1)
    a = build_cascaded(ch).liouvillian()
    b = cascaded_from_rates((0.8, 0.8), 0.1, ch.phases).liouvillian()
    assert np.allclose(a, b, atol=1e-14)
    # switched-off emitters are allowed here
    assert cascaded_from_rates((0.0, 1.0)).liouvillian().shape == (16, 16)


def test_builder_preconditions():
    with pytest.raises(ValueError):
        build_cascaded(ChiralChannel.uniform(2, 1.0, 0.5))
    with pytest.raises(ValueError):
        build_bidirectional(ChiralChannel.uniform(2, 1.0, 0.5))
    with pytest.raises(ValueError):
        reduced_generator_check(build_cascaded(ChiralChannel.uniform(3, 1.0)))
    with pytest.raises(ValueError):
        ChiralChannel.uniform(2, positions=(1.0, 0.0))
    with pytest.raises(ValueError):
        EmitterSpec(0.0, 0.0, 0.0, 0.0)


def test_closure_report_shape():
    rep = reduced_generator_check(build_cascaded(ChiralChannel.uniform(2, 1.0)), t_final=5, n_times=11)
    assert rep.per_time.shape == (11,) and rep.divergence < 1e-12
