"""
Time evolution, steady states and spectra of Lindblad generators, plus the
two-emitter dimer diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import operators as ops
from .errors import CapacityError, IntegrationError
from .master_equation import Generator

MAX_STEADY_SITES = 5

TRACE_DRIFT_TOL = 1e-8
POSITIVITY_TOL = -1e-7


@dataclass(frozen=True)
class Trajectory:
    """Density matrices sampled at increasing times."""

    times: np.ndarray
    states: np.ndarray = field(repr=False)

    def expect(self, op) -> np.ndarray:
        return np.real(np.einsum("tij,ji->t", self.states, np.asarray(op)))

    def populations(self) -> np.ndarray:
        """Excited population of every emitter, shape ``(n_times, n_sites)``."""
        return ops.excited_populations(self.states)

    def purity(self) -> np.ndarray:
        return np.real(np.einsum("tij,tji->t", self.states, self.states))

    def reduced(self, keep) -> np.ndarray:
        return np.array([ops.partial_trace(r, keep) for r in self.states])


def _rhs_factory(source):
    if isinstance(source, Generator):
        h = source.h_eff
        hd = h.conj().T
        jumps = [(j.rate, j.op, j.op.conj().T) for j in source.jumps]
        d = source.dim

        def rhs(t, y):
            rho = y.reshape(d, d)
            out = -1j * (h @ rho - rho @ hd)
            for rate, J, Jd in jumps:
                out += rate * (J @ rho @ Jd)
            return out.reshape(-1)

        return rhs, d

    d = source(0.0).dim

    def rhs(t, y):
        return source(t).apply(y.reshape(d, d)).reshape(-1)

    return rhs, d


def _integrate(source, rho0: np.ndarray, times: np.ndarray, atol: float, rtol: float,
               max_step: float = np.inf):
    rhs, d = _rhs_factory(source)
    if rho0.shape != (d, d):
        raise ValueError(f"initial state has shape {rho0.shape}, generator acts on dimension {d}")
    sol = solve_ivp(rhs, (times[0], times[-1]), np.asarray(rho0, complex).reshape(-1),
                    method="DOP853", t_eval=times, atol=atol, rtol=rtol, max_step=max_step)
    if sol.status != 0:
        raise IntegrationError(f"integration failed: {sol.message}")
    return sol.y.T.reshape(len(times), d, d)


def evolve(source, rho0, t_final: float | None = None, times: Sequence[float] | None = None,
           atol: float = 1e-10, rtol: float = 1e-8, n_times: int = 101,
           max_step: float = np.inf) -> Trajectory:
    """
    Integrate ``rho_dot = L rho`` with an adaptive embedded Runge-Kutta scheme (DOP853).

    Parameters
    ----------
    source : Generator or callable
        A generator, or a re-entrant factory ``t -> Generator``.
    rho0 : array_like
        Initial ket or density matrix.
    t_final : float, optional
        Final time; samples ``n_times`` equally spaced points from 0.
    times : sequence of float, optional
        Explicit strictly increasing sample times (overrides ``t_final``).

    Raises
    ------
    IntegrationError
        On solver failure, trace drift beyond ``1e-8`` or an eigenvalue below
        ``-1e-7``.  States are never renormalized.
    """
    rho0 = ops.as_density_matrix(rho0)
    if times is None:
        if t_final is None:
            raise ValueError("give t_final or times")
        times = np.linspace(0.0, t_final, n_times)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing with at least two entries")
    if atol <= 0 or rtol <= 0:
        raise ValueError("tolerances must be positive")
    states = _integrate(source, rho0, times, atol, rtol, max_step)
    for t, rho in zip(times, states):
        drift = abs(np.trace(rho) - 1.0)
        if drift > TRACE_DRIFT_TOL:
            raise IntegrationError(f"trace drift {drift:.3g} at t={t:.6g}")
        herm = 0.5 * (rho + rho.conj().T)
        lam = np.linalg.eigvalsh(herm).min()
        if lam < POSITIVITY_TOL:
            raise IntegrationError(f"negative eigenvalue {lam:.3g} at t={t:.6g}")
    states.setflags(write=False)
    return Trajectory(times, states)


def propagate_operator(source, X, times, atol: float = 1e-12, rtol: float = 1e-10) -> np.ndarray:
    """Evolve an arbitrary (not necessarily physical) operator; no validation."""
    times = np.asarray(times, dtype=float)
    return _integrate(source, np.asarray(X, complex), times, atol, rtol)


def _check_steady_capacity(generator: Generator) -> None:
    if generator.n_sites > MAX_STEADY_SITES:
        raise CapacityError(
            f"{generator.n_sites} emitters exceeds the dense Liouvillian capacity of {MAX_STEADY_SITES}"
        )


@dataclass(frozen=True)
class SteadyState:
    """
    Result of a null-space search.

    ``rho`` is the unique steady state, or ``None`` when the null space is
    degenerate; ``basis`` always spans the null space with Hermitian matrices.
    """

    rho: np.ndarray | None
    degenerate: bool
    basis: tuple = ()
    residual: float = 0.0
    singular_values: np.ndarray = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)


def _hermitian_basis(vectors: np.ndarray, d: int, tol: float = 1e-10) -> list[np.ndarray]:
    """Hermitian matrices spanning the same (dagger-closed) space as the columns."""
    cands = []
    for m in range(vectors.shape[1]):
        V = vectors[:, m].reshape(d, d)
        cands.append(0.5 * (V + V.conj().T))
        cands.append(-0.5j * (V - V.conj().T))
    # Hermitian matrices form a real vector space: orthonormalize real coordinates
    coords = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    u, s, vt = np.linalg.svd(coords, full_matrices=False)
    rank = int(np.sum(s > tol * max(s.max(), 1.0)))
    basis = []
    for row in vt[:rank]:
        M = (row[: d * d] + 1j * row[d * d:]).reshape(d, d)
        tr = np.trace(M).real
        basis.append(M / tr if abs(tr) > 1e-8 else M)
    return basis


def steady_state(generator: Generator, tol: float = 1e-10) -> SteadyState:
    """
    Steady state from the null space of the dense Liouvillian (SVD).

    A singular value counts as zero when below ``tol * max(1, largest)``.
    For a one-dimensional null space the state is normalized to unit trace;
    otherwise a Hermitian basis is returned with ``degenerate=True``.
    """
    _check_steady_capacity(generator)
    L = generator.liouvillian()
    d = generator.dim
    _, s, vh = np.linalg.svd(L)
    scale = max(1.0, s[0])
    null = vh[s < tol * scale].conj().T
    if null.shape[1] == 0:
        # numerically the smallest singular vector is the best candidate
        null = vh[-1:].conj().T
    if null.shape[1] > 1:
        basis = _hermitian_basis(null, d)
        res = max(np.linalg.norm(L @ b.reshape(-1)) for b in basis)
        return SteadyState(None, True, tuple(basis), float(res), s)
    rho = null[:, 0].reshape(d, d)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    res = float(np.linalg.norm(L @ rho.reshape(-1)))
    rho.setflags(write=False)
    return SteadyState(rho, False, (rho,), res, s)


def _triangular_blocks(L: np.ndarray) -> list[np.ndarray]:
    """
    Index sets of the diagonal blocks of ``L`` in block-triangular form.

    These are the strongly connected components of the graph of nonzero
    entries; a permutation brings ``L`` to block-triangular form with these
    blocks on the diagonal, so the spectrum is the union of the block spectra.
    Entries at rounding level (terms that cancel analytically) count as zero.
    """
    scale = np.abs(L).max() if L.size else 0.0
    pattern = np.abs(L) > 64 * np.finfo(float).eps * scale
    n_comp, labels = connected_components(csr_matrix(pattern), directed=True, connection="strong")
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_comp + 1))
    return [order[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def liouvillian_spectrum(generator: Generator, count: int | None = None) -> np.ndarray:
    """
    Liouvillian eigenvalues sorted by decreasing real part.

    The matrix is first split into its irreducible diagonal blocks (an exact
    permutation similarity).  For cascades without drive every block is
    1x1, which avoids the ill-conditioning of the defective full matrix.
    """
    _check_steady_capacity(generator)
    L = generator.liouvillian()
    parts = []
    for idx in _triangular_blocks(L):
        block = L[np.ix_(idx, idx)]
        parts.append(block.diagonal().copy() if idx.size == 1 else np.linalg.eigvals(block))
    w = np.concatenate(parts)
    order = np.lexsort((w.imag, -w.real))
    w = w[order]
    return w if count is None else w[:count]


def zero_eigenvalue_count(generator: Generator, tol: float = 1e-9) -> int:
    return int(np.sum(np.abs(liouvillian_spectrum(generator)) < tol))


def photon_flux(generator: Generator, rho) -> dict[str, float]:
    """Photon flux ``rate * <J^dag J>`` into every jump channel, keyed by label."""
    rho = np.asarray(rho)
    out = {}
    for j in generator.jumps:
        val = j.rate * ops.expectation(rho, j.op.conj().T @ j.op).real
        out[j.label] = max(float(val), 0.0)
    return out


@dataclass(frozen=True)
class DimerReport:
    purity: float
    singlet_weight: float
    alpha: complex
    fidelity: float
    residual: float

    def as_dict(self) -> dict:
        return {
            "purity": self.purity,
            "singlet_weight": self.singlet_weight,
            "alpha": self.alpha,
            "fidelity": self.fidelity,
            "residual": self.residual,
        }


def dimer_state(alpha: complex) -> np.ndarray:
    """Normalized ``|gg> + alpha (|ge> - |eg>)``; ``alpha = inf`` gives the pure singlet."""
    gg = ops.basis_state("gg")
    anti = ops.basis_state("ge") - ops.basis_state("eg")
    if np.isinf(abs(alpha)):
        return ops.normalize(anti)
    return ops.normalize(gg + alpha * anti)


def dimer_analysis(rho, phase: float = 0.0) -> DimerReport:
    """
    Purity, singlet weight and best fit to the dimer family.

    ``phase`` is the propagation phase ``k (x_2 - x_1)`` between the emitters.
    It is removed from emitter 2 by a local phase rotation before fitting, so
    for separated emitters the family reads
    ``|gg> + alpha (exp(i*phase)|ge> - |eg>)`` in the lab basis.  The fidelity ``<psi_alpha|rho|psi_alpha>`` is a Rayleigh quotient on the
    plane spanned by ``|gg>`` and ``(|ge> - |eg>)/sqrt(2)``; its maximum is the
    top eigenpair of ``rho`` projected onto that plane, which fixes ``alpha``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"dimer analysis needs a two-emitter state, got shape {rho.shape}")
    if phase:
        u = np.exp(-1j * phase * np.array([0, 1, 0, 1]))
        rho = u[:, None] * rho * u.conj()[None, :]
    gg = ops.basis_state("gg")
    a = ops.normalize(ops.basis_state("ge") - ops.basis_state("eg"))
    P = np.array([gg, a])
    R = P.conj() @ rho @ P.T
    R = 0.5 * (R + R.conj().T)
    w, v = np.linalg.eigh(R)
    c0, c1 = v[:, -1]
    if abs(c0) < 1e-300:
        alpha = complex(np.inf)
    else:
        alpha = complex(c1 / c0 / math.sqrt(2))
    psi = dimer_state(alpha)
    fid = float(np.real(np.vdot(psi, rho @ psi)))
    pur = ops.purity(rho)
    s = ops.singlet()
    sw = float(np.real(np.vdot(s, rho @ s)))
    resid = ops.trace_distance(rho, np.outer(psi, psi.conj()))
    return DimerReport(pur, sw, alpha, min(max(fid, 0.0), 1.0), resid)
