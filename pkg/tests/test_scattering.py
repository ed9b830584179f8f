import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from chiralwg import scattering as sc


def solve_chain(emitters, phases, forward=True):
    """
    Oracle: solve for all amplitudes at once.

    a_j / b_j are the right/left-moving amplitudes arriving at emitter j;
    outgoing waves follow from each emitter's (t+, t-, r) and propagate with
    phase exp(i phi_j) to the neighbour.
    """
    n = len(emitters)
    S = [sc.scatter_spectrum(bp, bm, d) for bp, bm, d in emitters]
    if not forward:
        # mirror the chain: swap directions and reverse the order
        S = [sc.ScatterSet(s.t_minus, s.t_plus, s.r, s.A_minus, s.A_plus) for s in S[::-1]]
        phases = list(phases)[::-1]
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    rhs = np.zeros(2 * n, dtype=complex)
    # unknowns: a_0..a_{n-1}, b_0..b_{n-1}
    A[0, 0] = 1
    rhs[0] = 1
    for j in range(n - 1):
        e = cmath.exp(1j * phases[j])
        # a_{j+1} = (t+ a_j + r b_j) e
        A[1 + j, j + 1] = 1
        A[1 + j, j] = -S[j].t_plus * e
        A[1 + j, n + j] = -S[j].r * e
        # b_j = (t- b_{j+1} + r a_{j+1}) e
        A[n + j, n + j] = 1
        A[n + j, n + j + 1] = -S[j + 1].t_minus * e
        A[n + j, j + 1] = -S[j + 1].r * e
    A[2 * n - 1, 2 * n - 1] = 1
    x = np.linalg.solve(A, rhs)
    a, b = x[:n], x[n:]
    t = S[-1].t_plus * a[-1] + S[-1].r * b[-1]
    r = S[0].t_minus * b[0] + S[0].r * a[0]
    return t / cmath.exp(1j * sum(phases)), r


beta_pairs = st.tuples(st.floats(0, 1), st.floats(0, 1)).map(
    lambda p: (p[0] * min(1.0, 1 / max(p[0] + p[1], 1e-300)), p[1] * min(1.0, 1 / max(p[0] + p[1], 1e-300)))
).filter(lambda p: p[0] + p[1] <= 1)


def test_resonance_examples():
    s = sc.scatter_on_resonance(0.5, 0.5)
    assert (s.t_plus, s.t_minus, s.r) == (0, 0, -1)
    s = sc.scatter_on_resonance(1, 0)
    assert (s.t_plus, s.t_minus, s.r) == (-1, 1, 0)
    s = sc.scatter_on_resonance(0.25, 0.25)
    assert (s.t_plus, s.r, s.A_plus, s.A_minus) == (0.5, -0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        sc.scatter_on_resonance(0.7, 0.6)
    with pytest.raises(ValueError):
        sc.scatter_on_resonance(-0.1, 0.2)


def test_spectrum_reduces_to_resonance_and_far_detuned_limit():
    assert sc.scatter_spectrum(0.3, 0.2, 0.0) == sc.scatter_on_resonance(0.3, 0.2)
    far = sc.scatter_spectrum(0.3, 0.2, 1e9)
    assert abs(far.t_plus - 1) < 1e-8 and abs(far.r) < 1e-8
    inf = sc.scatter_spectrum(0.3, 0.2, math.inf)
    assert (inf.t_plus, inf.r) == (1, 0)


def test_spectrum_lorentzian_oracle():
    # frozen value: t+ = 1 - 2 beta / (1 - 2 i Delta) at beta+=0.8, Delta=0.5
    s = sc.scatter_spectrum(0.8, 0.0, 0.5)
    assert s.t_plus == pytest.approx(1 - 1.6 / (1 - 1j), abs=1e-15)
    assert s.t_plus == pytest.approx(0.2 - 0.8j, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(beta_pairs, st.floats(-50, 50))
def test_absorption_bounds_and_symmetry(b, det):
    s = sc.scatter_spectrum(b[0], b[1], det)
    assert -1e-15 <= s.A_plus <= 1 + 1e-15 and -1e-15 <= s.A_minus <= 1 + 1e-15
    if b[0] == b[1]:
        assert s.A_plus == s.A_minus


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(-50, 50))
def test_lossless_emitter_conserves_flux(bp, det):
    s = sc.scatter_spectrum(bp, 1 - bp, det)
    assert abs(s.t_plus) ** 2 + abs(s.r) ** 2 == pytest.approx(1, abs=1e-12)
    assert abs(s.t_minus) ** 2 + abs(s.r) ** 2 == pytest.approx(1, abs=1e-12)


def test_chain_examples():
    assert sc.chain_transmission(sc.ChainSpec()).t == 1
    chiral = sc.ChainSpec(((1, 0), (1, 0)), (0.37,))
    assert sc.chain_transmission(chiral).t == pytest.approx(1, abs=1e-15)
    assert sc.chain_transmission(chiral, "backward").t == pytest.approx(1, abs=1e-15)
    # mirror between lossless neighbours: opaque, and all light comes back
    for phases in [(0.4, 1.3), (2.0, 5.1)]:
        res = sc.chain_transmission(sc.ChainSpec(((0.7, 0.3), (0.5, 0.5), (0.1, 0.9)), phases))
        assert abs(res.t) < 1e-15
        assert abs(res.r) == pytest.approx(1, abs=1e-12)


def test_lone_mirror_reflects_everything():
    res = sc.chain_transmission(sc.ChainSpec(((0.5, 0.5),)))
    assert (res.t, abs(res.r)) == (0, 1)
    assert res.method == "smatrix"


def test_two_mirror_cavity_frozen_value():
    # Fabry-Perot oracle: t = t1 t2 / (1 - r1 r2 exp(2 i phi)) relative to free propagation
    b, phi = 0.2, 0.9
    s = sc.scatter_on_resonance(b, b)
    fp = s.t_plus**2 / (1 - s.r**2 * cmath.exp(2j * phi))
    res = sc.chain_transmission(sc.ChainSpec(((b, b), (b, b)), (phi,)))
    assert res.t == pytest.approx(fp, abs=1e-14)
    assert res.t == pytest.approx(complex(0.33969339359342476, 0.051072917247243305), abs=1e-14)


chains = st.integers(1, 5).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(st.floats(0, 0.6), st.floats(0, 0.4), st.floats(-3, 3)), min_size=n, max_size=n),
    st.lists(st.floats(0, 2 * math.pi), min_size=n - 1, max_size=n - 1),
))


@settings(max_examples=80, deadline=None)
@given(chains)
def test_chain_matches_linear_system_oracle(ch):
    em, ph = ch
    spec = sc.ChainSpec(tuple(em), tuple(ph))
    for fwd in (True, False):
        t_ref, r_ref = solve_chain(spec.emitters, spec.phases, fwd)
        res = sc.chain_transmission(spec, "forward" if fwd else "backward")
        assert res.t == pytest.approx(t_ref, abs=1e-9)
        assert res.r == pytest.approx(r_ref, abs=1e-9)
    ref = sc.chain_smatrix(spec)
    assert ref["t_forward"] == pytest.approx(sc.chain_transmission(spec).t, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(st.tuples(st.floats(0, 0.5), st.floats(-3, 3)), min_size=n, max_size=n),
    st.lists(st.floats(0, 2 * math.pi), min_size=n - 1, max_size=n - 1))))
def test_symmetric_chains_are_reciprocal(ch):
    em, ph = ch
    spec = sc.ChainSpec(tuple((b, b, d) for b, d in em), tuple(ph))
    f = sc.chain_transmission(spec, "forward").t
    b = sc.chain_transmission(spec, "backward").t
    assert f == pytest.approx(b, abs=1e-12)
    assert sc.isolation_metrics(spec).isolation_db == pytest.approx(0, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(-3, 3)), min_size=1, max_size=5), st.data())
def test_chiral_chain_intensity_independent_of_phases(em, data):
    n = len(em)
    ph1 = data.draw(st.lists(st.floats(0, 6.3), min_size=n - 1, max_size=n - 1))
    ph2 = data.draw(st.lists(st.floats(0, 6.3), min_size=n - 1, max_size=n - 1))
    a = sc.ChainSpec(tuple((b, 0, d) for b, d in em), tuple(ph1))
    b = sc.ChainSpec(tuple((b, 0, d) for b, d in em), tuple(ph2))
    assert sc.chain_transmission(a).intensity == pytest.approx(sc.chain_transmission(b).intensity, abs=1e-12)


def test_isolation_examples():
    iso = sc.isolation_metrics(sc.ChainSpec(((0.5, 0.0),)))
    assert iso.insertion_loss_db == 0 and iso.isolation_db == math.inf
    assert iso.pass_direction == "backward"
    sym = sc.isolation_metrics(sc.ChainSpec(((0.3, 0.3), (0.2, 0.2)), (1.0,)))
    assert sym.isolation_db == pytest.approx(0, abs=1e-12) and sym.reciprocal


def test_transfer_matrix_singular_for_opaque_backward():
    with pytest.raises(ZeroDivisionError):
        sc.transfer_matrix(0.0, 0.5)


def test_circulator_examples():
    S = sc.circulator_smatrix(math.pi, 0)
    routes = {(r["input"], r["output"]) for r in sc.routing_table(S)}
    assert routes == {(1, 2), (2, 3), (3, 4), (4, 1)}
    assert sc.unitarity_deficit(S) < 1e-15
    R = sc.circulator_smatrix(0, 0)
    assert np.allclose(R, R.T)
    P = np.abs(R) ** 2
    assert P[1, 0] == pytest.approx(P[0, 1])
    E = sc.emitter_circulator_smatrix(1.0, 0.0)
    assert sc.unitarity_deficit(E) < 1e-12
    assert np.allclose(np.abs(E), np.abs(S))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi), st.floats(0, 1))
def test_circulator_unitary_for_any_phases(pf, pb, refl):
    assume(0 <= refl <= 1)
    assert sc.unitarity_deficit(sc.circulator_smatrix(pf, pb, refl)) < 1e-12
