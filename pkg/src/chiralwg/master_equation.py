"""
Lindblad generators for emitters coupled through a 1D waveguide.

Every emitter carries a right-moving rate ``gamma_R``, a left-moving rate
``gamma_L`` and a loss rate ``loss`` into non-guided modes, so that
``beta_pm = gamma_{R/L} / (gamma_R + gamma_L + loss)``.  With this convention

* the unidirectional (cascaded) equation uses ``gamma_R = gamma``, ``gamma_L = 0``,
  and a lone emitter decays at ``gamma``;
* the bidirectional equation uses ``gamma_R = gamma_L = gamma``, so a lone
  emitter decays at ``2*gamma``.

A generator stores the Hermitian Hamiltonian split into the user part
(detunings and drives) and the waveguide-mediated exchange part, plus a list of
jump operators with explicit rates.  ``rho_dot = -i[H, rho] + sum_k rate_k D[J_k]rho``
and the no-jump Hamiltonian is ``H - (i/2) sum_k rate_k J_k^dag J_k``.

Positions enter only through phases ``k*x``; the right-moving collective jump
is ``sum_j sqrt(gamma_R_j) exp(-i k x_j) sigma_j^-``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import operators as ops


@dataclass(frozen=True)
class EmitterSpec:
    """One two-level emitter on the waveguide; rates in units of the reference rate."""

    x: float = 0.0
    gamma_R: float = 1.0
    gamma_L: float = 0.0
    loss: float = 0.0
    detuning: float = 0.0
    rabi: complex = 0.0

    def __post_init__(self):
        for name in ("gamma_R", "gamma_L", "loss"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {v}")
        if self.gamma_R + self.gamma_L + self.loss <= 0:
            raise ValueError("emitter needs a positive total decay rate")

    @property
    def total_rate(self) -> float:
        return self.gamma_R + self.gamma_L + self.loss

    @property
    def betas(self) -> tuple[float, float]:
        return self.gamma_R / self.total_rate, self.gamma_L / self.total_rate


@dataclass(frozen=True)
class ChiralChannel:
    """
    Emitters ordered along the waveguide, and the channel wavenumber.

    Positions must be non-decreasing; list order fixes which emitter is
    upstream when two share a position.  The default ``k = 2*pi`` measures
    positions in wavelengths.
    """

    emitters: tuple = ()
    k: float = 2 * math.pi

    def __post_init__(self):
        em = tuple(self.emitters)
        if not em:
            raise ValueError("channel needs at least one emitter")
        if any(not isinstance(e, EmitterSpec) for e in em):
            raise TypeError("emitters must be EmitterSpec instances")
        xs = [e.x for e in em]
        if any(b < a for a, b in zip(xs, xs[1:])):
            raise ValueError("emitter positions must be non-decreasing")
        ops.check_capacity(len(em), "pure")
        object.__setattr__(self, "emitters", em)

    @classmethod
    def uniform(cls, n: int, gamma_R: float = 1.0, gamma_L: float = 0.0, loss: float = 0.0,
                positions: Sequence[float] | None = None, k: float = 2 * math.pi,
                rabi=0.0, detuning=0.0) -> "ChiralChannel":
        positions = [0.0] * n if positions is None else list(positions)
        if len(positions) != n:
            raise ValueError("need one position per emitter")
        rabi = np.broadcast_to(np.asarray(rabi, dtype=complex), (n,))
        detuning = np.broadcast_to(np.asarray(detuning, dtype=float), (n,))
        return cls(tuple(
            EmitterSpec(float(positions[j]), gamma_R, gamma_L, loss,
                        float(detuning[j]), complex(rabi[j]))
            for j in range(n)
        ), k)

    @property
    def n(self) -> int:
        return len(self.emitters)

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def phases(self) -> np.ndarray:
        return self.k * np.array([e.x for e in self.emitters])

    def with_rates(self, **changes) -> "ChiralChannel":
        """Copy with the same field changes applied to every emitter."""
        return replace(self, emitters=tuple(replace(e, **changes) for e in self.emitters))


@dataclass(frozen=True)
class Jump:
    op: np.ndarray
    rate: float
    label: str


@dataclass(frozen=True)
class Generator:
    """
    Lindblad generator: ``H = h_sys + h_exchange`` plus rated jump operators.

    ``h_sys`` holds detunings and drives, ``h_exchange`` the coherent
    waveguide-mediated coupling.
    """

    h_sys: np.ndarray
    h_exchange: np.ndarray
    jumps: tuple = ()

    def __post_init__(self):
        for name in ("h_sys", "h_exchange"):
            a = np.array(getattr(self, name), dtype=complex)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "jumps", tuple(self.jumps))

    @property
    def dim(self) -> int:
        return self.h_sys.shape[0]

    @property
    def n_sites(self) -> int:
        return ops.n_sites_of(self.dim)

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h_sys + self.h_exchange

    @property
    def h_eff(self) -> np.ndarray:
        """Non-Hermitian Hamiltonian generating the no-jump evolution."""
        h = self.hamiltonian.astype(complex)
        for j in self.jumps:
            h = h - 0.5j * j.rate * (j.op.conj().T @ j.op)
        return h

    @property
    def labels(self) -> list[str]:
        return [j.label for j in self.jumps]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """``L(rho)`` without building the superoperator."""
        h = self.h_eff
        out = -1j * (h @ rho - rho @ h.conj().T)
        for j in self.jumps:
            out = out + j.rate * (j.op @ rho @ j.op.conj().T)
        return out

    def liouvillian(self) -> np.ndarray:
        """
        Superoperator acting on row-major ``rho.reshape(-1)``.

        Uses ``vec(A rho B) = (A kron B^T) vec(rho)``.
        """
        ops.check_capacity(self.n_sites, "density")
        d = self.dim
        eye = np.eye(d)
        h = self.h_eff
        L = -1j * (np.kron(h, eye) - np.kron(eye, h.conj()))
        for j in self.jumps:
            L = L + j.rate * np.kron(j.op, j.op.conj())
        return L

    def with_hamiltonian(self, extra: np.ndarray) -> "Generator":
        return replace(self, h_sys=self.h_sys + extra)


def drive_hamiltonian(n_sites: int, rabi: Sequence[complex], detuning: Sequence[float]) -> np.ndarray:
    """``sum_j [-detuning_j n_j + rabi_j sigma_j^+ + conj(rabi_j) sigma_j^-]`` (rotating frame)."""
    sm = ops.lowering_ops(n_sites)
    d = 1 << n_sites
    h = np.zeros((d, d), dtype=complex)
    for j in range(n_sites):
        sp = sm[j].conj().T
        h += -detuning[j] * (sp @ sm[j])
        h += rabi[j] * sp + np.conj(rabi[j]) * sm[j]
    return h


def _system_hamiltonian(channel: ChiralChannel) -> np.ndarray:
    return drive_hamiltonian(
        channel.n,
        [e.rabi for e in channel.emitters],
        [e.detuning for e in channel.emitters],
    )


def _collective(channel: ChiralChannel, rates: Sequence[float], sign: int) -> tuple[np.ndarray, float]:
    """Collective jump ``sum_j sqrt(rate_j/ref) exp(sign*i*k*x_j) sigma_j^-`` and its rate ``ref``."""
    sm = ops.lowering_ops(channel.n)
    ref = max(rates)
    op = np.zeros((channel.dim, channel.dim), dtype=complex)
    for j, (g, phi) in enumerate(zip(rates, channel.phases)):
        if g > 0:
            op += math.sqrt(g / ref) * cmath.exp(sign * 1j * phi) * sm[j]
    return op, ref


def _directional_exchange(channel: ChiralChannel, rates: Sequence[float], rightward: bool) -> np.ndarray:
    """
    Hermitian exchange generated by a unidirectional bath.

    For a right-moving bath and upstream emitter ``j`` before downstream ``l``:
    ``-(i/2) sqrt(g_j g_l) (e^{ik d} s_l^+ s_j^- - h.c.)`` with ``d = x_l - x_j``.
    """
    sm = ops.lowering_ops(channel.n)
    phi = channel.phases
    h = np.zeros((channel.dim, channel.dim), dtype=complex)
    for j in range(channel.n):
        for l in range(j + 1, channel.n):
            g = math.sqrt(rates[j] * rates[l])
            if g == 0:
                continue
            p = cmath.exp(1j * (phi[l] - phi[j]))
            if rightward:
                term = p * (sm[l].conj().T @ sm[j])
            else:
                term = p * (sm[j].conj().T @ sm[l])
            h += -0.5j * g * (term - term.conj().T)
    return h


def _loss_jumps(channel: ChiralChannel) -> list[Jump]:
    sm = ops.lowering_ops(channel.n)
    return [Jump(sm[j], e.loss, f"loss_{j}") for j, e in enumerate(channel.emitters) if e.loss > 0]


def build_chiral(channel: ChiralChannel) -> Generator:
    """
    General chiral generator: right-moving cascade + left-moving cascade + local loss.

    Jumps are labelled ``right``, ``left`` and ``loss_<j>``.
    """
    gR = [e.gamma_R for e in channel.emitters]
    gL = [e.gamma_L for e in channel.emitters]
    h_ex = np.zeros((channel.dim, channel.dim), dtype=complex)
    jumps = []
    if max(gR) > 0:
        op, rate = _collective(channel, gR, -1)
        jumps.append(Jump(op, rate, "right"))
        h_ex += _directional_exchange(channel, gR, rightward=True)
    if max(gL) > 0:
        op, rate = _collective(channel, gL, +1)
        jumps.append(Jump(op, rate, "left"))
        h_ex += _directional_exchange(channel, gL, rightward=False)
    jumps += _loss_jumps(channel)
    return Generator(_system_hamiltonian(channel), h_ex, jumps)


def build_cascaded(channel: ChiralChannel) -> Generator:
    """
    Unidirectional (right-moving) generator.

    For two identical emitters at a common position the no-jump Hamiltonian is
    ``H_sys - (i gamma/2)(n_1 + n_2 + 2 s_2^+ s_1^-)`` and the single guided
    jump is ``sigma_1^- + sigma_2^-`` at rate ``gamma``.
    """
    if any(e.gamma_L != 0 for e in channel.emitters):
        raise ValueError("cascaded channel requires gamma_L = 0 for every emitter")
    sm = ops.lowering_ops(channel.n)
    gR = [e.gamma_R for e in channel.emitters]
    # written out directly rather than via the bidirectional split
    h_ex = np.zeros((channel.dim, channel.dim), dtype=complex)
    phi = channel.phases
    for j in range(channel.n):
        for l in range(j + 1, channel.n):
            c = math.sqrt(gR[j] * gR[l]) * cmath.exp(1j * (phi[l] - phi[j]))
            a = sm[l].conj().T @ sm[j]
            h_ex += -0.5j * (c * a - np.conj(c) * a.conj().T)
    jumps = []
    if max(gR) > 0:
        op, rate = _collective(channel, gR, -1)
        jumps.append(Jump(op, rate, "right"))
    jumps += _loss_jumps(channel)
    return Generator(_system_hamiltonian(channel), h_ex, jumps)


def build_bidirectional(channel: ChiralChannel) -> Generator:
    """
    Symmetric (reciprocal) generator.

    Exchange ``sum_{i<j} sqrt(g_i g_j) sin(k|x_i - x_j|)(s_i^+ s_j^- + h.c.)``
    and dissipator with Kossakowski matrix ``2 sqrt(g_i g_j) cos(k|x_i - x_j|)``,
    diagonalized into at most two collective jumps labelled ``guided_<m>``.
    """
    if any(e.gamma_R != e.gamma_L for e in channel.emitters):
        raise ValueError("bidirectional channel requires gamma_R = gamma_L for every emitter")
    sm = ops.lowering_ops(channel.n)
    g = np.array([e.gamma_R for e in channel.emitters])
    phi = channel.phases
    dphi = np.abs(phi[:, None] - phi[None, :])
    amp = np.sqrt(np.outer(g, g))
    h_ex = np.zeros((channel.dim, channel.dim), dtype=complex)
    for i in range(channel.n):
        for j in range(i + 1, channel.n):
            c = amp[i, j] * math.sin(dphi[i, j])
            if c != 0:
                a = sm[i].conj().T @ sm[j]
                h_ex += c * (a + a.conj().T)
    kossakowski = 2 * amp * np.cos(dphi)
    w, v = np.linalg.eigh(kossakowski)
    jumps = []
    scale = max(np.max(np.abs(w)), 1.0)
    for m in np.argsort(w)[::-1]:
        if w[m] <= 1e-14 * scale:
            continue
        op = sum(v[i, m] * sm[i] for i in range(channel.n))
        jumps.append(Jump(op, float(w[m]), f"guided_{len(jumps)}"))
    jumps += _loss_jumps(channel)
    return Generator(_system_hamiltonian(channel), h_ex, jumps)


def add_drive(generator: Generator, rabi: Sequence[complex], detuning: Sequence[float] | None = None) -> Generator:
    """Add ``sum_j [-detuning_j n_j + rabi_j s_j^+ + conj(rabi_j) s_j^-]`` to ``h_sys``."""
    n = generator.n_sites
    rabi = np.broadcast_to(np.asarray(rabi, dtype=complex), (n,))
    detuning = np.zeros(n) if detuning is None else np.broadcast_to(np.asarray(detuning, float), (n,))
    if not np.any(rabi) and not np.any(detuning):
        return generator
    return generator.with_hamiltonian(drive_hamiltonian(n, rabi, detuning))


def time_dependent(factory: Callable[[float], Generator]) -> Callable[[float], Generator]:
    """Mark a ``t -> Generator`` callable; factories must not keep internal state."""
    factory.time_dependent = True
    return factory


def cascaded_from_rates(rates: Sequence[float], loss: float = 0.0,
                        phases: Sequence[float] | None = None) -> Generator:
    """
    Undriven cascade built straight from guided rates, allowing zero rates.

    Matches ``build_cascaded`` whenever every emitter has a positive total
    rate; used for time-dependent couplings that switch off.
    """
    n = len(rates)
    if any(g < 0 for g in rates) or loss < 0:
        raise ValueError(f"rates must be nonnegative, got {list(rates)} and loss {loss}")
    sm = ops.lowering_ops(n)
    phi = np.zeros(n) if phases is None else np.asarray(phases, dtype=float)
    d = 1 << n
    h_ex = np.zeros((d, d), dtype=complex)
    for j in range(n):
        for l in range(j + 1, n):
            c = math.sqrt(rates[j] * rates[l]) * cmath.exp(1j * (phi[l] - phi[j]))
            a = sm[l].conj().T @ sm[j]
            h_ex += -0.5j * (c * a - np.conj(c) * a.conj().T)
    jumps = []
    ref = max(rates)
    if ref > 0:
        op = sum(math.sqrt(g / ref) * cmath.exp(-1j * p) * s for g, p, s in zip(rates, phi, sm))
        jumps.append(Jump(op, ref, "right"))
    if loss > 0:
        jumps += [Jump(sm[j], loss, f"loss_{j}") for j in range(n)]
    return Generator(np.zeros((d, d)), h_ex, jumps)


def cascaded_factory(gamma1: Callable[[float], float], gamma2: Callable[[float], float],
                     loss: float = 0.0) -> Callable[[float], Generator]:
    """Two-emitter cascade with time-dependent guided rates ``gamma1(t)``, ``gamma2(t)``."""

    def factory(t: float) -> Generator:
        return cascaded_from_rates((float(gamma1(t)), float(gamma2(t))), loss)

    return time_dependent(factory)


@dataclass(frozen=True)
class ClosureReport:
    """Sensitivity of emitter 1's reduced state to emitter 2's initial state."""

    divergence: float
    times: np.ndarray = field(repr=False)
    per_time: np.ndarray = field(repr=False)


def reduced_generator_check(generator: Generator, rho1=None, states2=None,
                            t_final: float = 20.0, n_times: int = 201) -> ClosureReport:
    """
    Evolve ``rho1 x rho2`` for several ``rho2`` and report the largest trace
    distance between the resulting reduced states of emitter 1.

    Propagation is exact (matrix exponential of the Liouvillian).
    """
    from scipy.linalg import expm

    if generator.n_sites != 2:
        raise ValueError("closure check needs exactly two emitters")
    if rho1 is None:
        rho1 = ops.ket_to_dm(ops.normalize([1, 1]))
    if states2 is None:
        states2 = [
            ops.ket_to_dm(ops.basis_state("g")),
            ops.ket_to_dm(ops.basis_state("e")),
            ops.ket_to_dm(ops.normalize([1, 1])),
        ]
    L = generator.liouvillian()
    times = np.linspace(0.0, t_final, n_times)
    step = expm(L * (times[1] - times[0])) if n_times > 1 else np.eye(L.shape[0])
    vecs = np.array([np.kron(rho1, r2).reshape(-1) for r2 in states2]).T
    per_time = np.zeros(n_times)
    for it in range(n_times):
        if it > 0:
            vecs = step @ vecs
        reduced = [ops.partial_trace(vecs[:, m].reshape(4, 4), [0]) for m in range(vecs.shape[1])]
        per_time[it] = max(
            ops.trace_distance(a, b) for i, a in enumerate(reduced) for b in reduced[i + 1:]
        )
    return ClosureReport(float(per_time.max()), times, per_time)
