"""
Quantum-jump Monte Carlo unraveling of a time-independent generator.

Between jumps a trajectory evolves under ``exp(-i H_eff t)``; a jump happens
when the squared norm falls below a uniform random threshold.  Because the
norm decreases monotonically, the crossing is bracketed by the sample grid and
located by dyadic bisection to ``1e-10``.  The jump channel is drawn by
inverse transform on ``rate_c ||J_c psi||^2``.

Every trajectory owns a Philox stream keyed by ``(seed, trajectory index)``.
Trajectories are processed in fixed-size chunks and the chunk sums are reduced
in index order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import operators as ops
from .master_equation import Generator

EVENT_TOL = 1e-10
CHUNK_SIZE = 250


def default_workers() -> int:
    env = os.environ.get("CHIRALWG_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"CHIRALWG_THREADS must be an integer, got {env!r}") from None
    return 1


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory."""
    key = np.array([index, seed], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class JumpRecord:
    """Jump times and channel indices for every trajectory."""

    seed: int
    labels: list
    jump_times: list = field(default_factory=list)
    channels: list = field(default_factory=list)
    final_states: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_traj(self) -> int:
        return len(self.jump_times)

    def counts(self) -> dict[str, np.ndarray]:
        """Per-trajectory number of jumps into each channel."""
        out = {lab: np.zeros(self.n_traj, dtype=int) for lab in self.labels}
        for i, ch in enumerate(self.channels):
            for c in ch:
                out[self.labels[c]][i] += 1
        return out

    def first_jump_times(self) -> np.ndarray:
        """Time of the first jump, ``nan`` for trajectories that never jumped."""
        return np.array([t[0] if len(t) else np.nan for t in self.jump_times])


@dataclass(frozen=True)
class MCResult:
    times: np.ndarray
    rho: np.ndarray = field(repr=False)
    record: JumpRecord = field(repr=False)

    def populations(self) -> np.ndarray:
        return ops.excited_populations(self.rho)


def _apply(U: np.ndarray, psi: np.ndarray) -> np.ndarray:
    # einsum avoids BLAS so each row is computed identically for any batch size
    return np.einsum("ij,bj->bi", U, psi)


def _norm2(psi: np.ndarray) -> np.ndarray:
    return np.einsum("bi,bi->b", psi.conj(), psi).real


class _Unraveler:
    def __init__(self, generator: Generator, times: np.ndarray, seed: int):
        self.H = generator.h_eff
        self.jumps = [(j.rate, np.asarray(j.op)) for j in generator.jumps]
        self.times = times
        self.seed = seed
        self.dt = float(times[1] - times[0])
        self.uniform = np.allclose(np.diff(times), self.dt, rtol=0, atol=1e-13 * max(1.0, times[-1]))
        self.U_step = expm(-1j * self.H * self.dt)
        n_levels = max(1, math.ceil(math.log2(max(np.diff(times).max(), EVENT_TOL) / EVENT_TOL)))
        self.dyadic = [
            (np.diff(times).max() / 2**m, expm(-1j * self.H * np.diff(times).max() / 2**m))
            for m in range(1, n_levels + 1)
        ]

    def _propagators(self, tau: np.ndarray) -> np.ndarray:
        return expm(-1j * self.H[None, :, :] * tau[:, None, None])

    def run_chunk(self, psi0: np.ndarray, start: int, stop: int):
        n = stop - start
        d = psi0.size
        rngs = [trajectory_rng(self.seed, i) for i in range(start, stop)]
        psi = np.tile(psi0, (n, 1))
        thresh = np.array([g.random() for g in rngs])
        jump_times = [[] for _ in range(n)]
        channels = [[] for _ in range(n)]
        rho_sum = np.zeros((len(self.times), d, d), dtype=complex)
        rho_sum[0] = self._accumulate(psi)
        for it in range(1, len(self.times)):
            t0 = self.times[it - 1]
            span = self.times[it] - t0
            offset = np.zeros(n)
            pending = np.arange(n)
            while pending.size:
                rem = span - offset[pending]
                if self.uniform and np.all(offset[pending] == 0):
                    end = _apply(self.U_step, psi[pending])
                else:
                    U = self._propagators(rem)
                    end = np.einsum("bij,bj->bi", U, psi[pending])
                cross = _norm2(end) < thresh[pending]
                done = pending[~cross]
                psi[done] = end[~cross]
                hit = pending[cross]
                if hit.size == 0:
                    break
                lo_state, tau = self._locate(psi[hit], thresh[hit], rem[cross])
                for b, i in enumerate(hit):
                    state = lo_state[b]
                    weights = np.array([
                        rate * np.vdot(J @ state, J @ state).real for rate, J in self.jumps
                    ])
                    cum = np.cumsum(weights)
                    c = int(np.searchsorted(cum, rngs[i].random() * cum[-1], side="right"))
                    c = min(c, len(self.jumps) - 1)
                    new = self.jumps[c][1] @ state
                    psi[i] = new / np.sqrt(np.vdot(new, new).real)
                    offset[i] += tau[b]
                    jump_times[i].append(t0 + offset[i])
                    channels[i].append(c)
                    thresh[i] = rngs[i].random()
                pending = hit
            rho_sum[it] = self._accumulate(psi)
        finals = psi / np.sqrt(_norm2(psi))[:, None]
        return rho_sum, jump_times, channels, finals

    def _locate(self, psi: np.ndarray, thresh: np.ndarray, limit: np.ndarray):
        """Greedy dyadic search for the threshold crossing inside ``[0, limit]``."""
        lo = np.zeros(len(psi))
        state = psi.copy()
        for h, U in self.dyadic:
            trial = _apply(U, state)
            ok = (_norm2(trial) >= thresh) & (lo + h < limit)
            state[ok] = trial[ok]
            lo[ok] += h
        h_min, U_min = self.dyadic[-1]
        tau = np.minimum(lo + h_min, limit)
        final = _apply(U_min, state)
        return final, tau

    @staticmethod
    def _accumulate(psi: np.ndarray) -> np.ndarray:
        phi = psi / np.sqrt(_norm2(psi))[:, None]
        return np.einsum("bi,bj->ij", phi, phi.conj())


def mc_trajectories(generator: Generator, psi0, t_final: float | None = None, n_traj: int = 1000,
                    seed: int = 0, times=None, n_times: int = 101, workers: int | None = None,
                    chunk_size: int = CHUNK_SIZE) -> MCResult:
    """
    Average ``n_traj`` quantum-jump trajectories started from the ket ``psi0``.

    Returns the ensemble-averaged density matrix on the time grid and a
    ``JumpRecord`` with jump times and channel indices (matching
    ``generator.labels``).  ``workers`` defaults to ``$CHIRALWG_THREADS`` or 1.
    """
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if psi0.size != generator.dim:
        raise ValueError(f"initial ket has dimension {psi0.size}, generator acts on {generator.dim}")
    ops.check_capacity(generator.n_sites, "pure")
    if abs(np.linalg.norm(psi0) - 1) > 1e-12:
        raise ValueError("initial ket must be normalized")
    if times is None:
        if t_final is None:
            raise ValueError("give t_final or times")
        times = np.linspace(0.0, t_final, n_times)
    times = np.asarray(times, dtype=float)
    if times.size < 2 or times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must start at 0 and increase strictly")
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    workers = default_workers() if workers is None else max(1, int(workers))

    engine = _Unraveler(generator, times, seed)
    bounds = [(a, min(a + chunk_size, n_traj)) for a in range(0, n_traj, chunk_size)]
    if not engine.jumps:
        # unitary evolution: nothing to sample
        engine.jumps = [(0.0, np.zeros((generator.dim, generator.dim)))]

    def work(b):
        return engine.run_chunk(psi0, *b)

    if workers == 1 or len(bounds) == 1:
        parts = [work(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))

    rho = np.zeros((len(times), generator.dim, generator.dim), dtype=complex)
    record = JumpRecord(seed, generator.labels or ["none"])
    finals = []
    for rho_sum, jt, ch, fin in parts:
        rho += rho_sum
        record.jump_times.extend(np.array(t) for t in jt)
        record.channels.extend(np.array(c, dtype=int) for c in ch)
        finals.append(fin)
    record.final_states = np.concatenate(finals)
    rho /= n_traj
    return MCResult(times, rho, record)
