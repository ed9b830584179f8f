"""
Single-photon (weak-drive) scattering off chirally coupled emitters.

All amplitudes are valid in the weakly saturated regime only.  Transmission
amplitudes of composed chains are quoted relative to the empty waveguide, so
free propagation phases drop out of a reflectionless chain.

Transfer-matrix convention: field vectors are ``(right-mover, left-mover)``
and ``M`` maps the amplitudes just left of an element to those just right of
it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class ScatterSet:
    """Transmission, reflection and absorption of one element or a chain."""

    t_plus: complex
    t_minus: complex
    r: complex
    A_plus: float
    A_minus: float

    def as_dict(self) -> dict:
        return {
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "r": self.r,
            "A_plus": self.A_plus,
            "A_minus": self.A_minus,
        }


def _check_betas(beta_plus: float, beta_minus: float) -> None:
    if beta_plus < 0 or beta_minus < 0 or beta_plus + beta_minus > 1 + 1e-15:
        raise ValueError(
            f"need beta_plus, beta_minus >= 0 and beta_plus + beta_minus <= 1, "
            f"got ({beta_plus}, {beta_minus})"
        )


def _absorption(t: complex, r: complex) -> float:
    a = 1.0 - abs(t) ** 2 - abs(r) ** 2
    # rounding noise only; valid betas cannot give a genuinely negative value
    return 0.0 if -1e-14 < a < 0 else a


def scatter_on_resonance(beta_plus: float, beta_minus: float) -> ScatterSet:
    """``t_pm = 1 - 2 beta_pm``, ``r = -2 sqrt(beta_plus beta_minus)``."""
    _check_betas(beta_plus, beta_minus)
    tp = complex(1 - 2 * beta_plus)
    tm = complex(1 - 2 * beta_minus)
    r = complex(-2 * math.sqrt(beta_plus * beta_minus))
    return ScatterSet(tp, tm, r, _absorption(tp, r), _absorption(tm, r))


def scatter_spectrum(beta_plus: float, beta_minus: float, detuning: float) -> ScatterSet:
    """
    Lorentzian extension of the resonant amplitudes.

    ``detuning`` is in units of the total decay rate; the response is
    ``1 / (1 - 2i*detuning)`` so that ``detuning = 0`` reproduces
    ``scatter_on_resonance`` exactly.
    """
    _check_betas(beta_plus, beta_minus)
    if detuning == 0:
        return scatter_on_resonance(beta_plus, beta_minus)
    if math.isinf(detuning):
        return ScatterSet(1 + 0j, 1 + 0j, 0j, 0.0, 0.0)
    lor = 1.0 / (1.0 - 2j * detuning)
    tp = 1 - 2 * beta_plus * lor
    tm = 1 - 2 * beta_minus * lor
    r = -2 * math.sqrt(beta_plus * beta_minus) * lor
    return ScatterSet(tp, tm, r, _absorption(tp, r), _absorption(tm, r))


@dataclass(frozen=True)
class ChainSpec:
    """
    Ordered emitters along the waveguide.

    ``emitters`` holds ``(beta_plus, beta_minus, detuning)`` triples from left
    to right; ``phases[j]`` is ``k (x_{j+1} - x_j)``.
    """

    emitters: tuple = ()
    phases: tuple = ()

    def __post_init__(self):
        em = []
        for e in self.emitters:
            e = tuple(float(v) for v in e)
            if len(e) == 2:
                e += (0.0,)
            if len(e) != 3:
                raise ValueError(f"emitter must be (beta_plus, beta_minus[, detuning]), got {e}")
            em.append(e)
        em = tuple(em)
        for bp, bm, _ in em:
            _check_betas(bp, bm)
        ph = tuple(float(p) for p in self.phases)
        if em and len(ph) == 0:
            ph = (0.0,) * (len(em) - 1)
        if len(em) and len(ph) != len(em) - 1:
            raise ValueError(f"{len(em)} emitters need {len(em) - 1} phases, got {len(ph)}")
        if not all(math.isfinite(p) for p in ph):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "emitters", em)
        object.__setattr__(self, "phases", ph)

    @classmethod
    def uniform(cls, n: int, beta_plus: float, beta_minus: float, phase: float = 0.0,
                detuning: float = 0.0) -> "ChainSpec":
        return cls(((beta_plus, beta_minus, detuning),) * n, (phase,) * max(n - 1, 0))

    def __len__(self):
        return len(self.emitters)


@dataclass(frozen=True)
class _Two:
    """Scalar two-port S-matrix: t_f, t_b transmissions, r_l / r_r reflections
    seen from the left / right."""

    t_f: complex
    t_b: complex
    r_l: complex
    r_r: complex


def _element(bp: float, bm: float, det: float) -> _Two:
    s = scatter_spectrum(bp, bm, det)
    return _Two(s.t_plus, s.t_minus, s.r, s.r)


def _propagation(phi: float) -> _Two:
    p = cmath.exp(1j * phi)
    return _Two(p, p, 0j, 0j)


def _star(a: _Two, b: _Two) -> _Two:
    """Cascade ``a`` (left) with ``b`` (right)."""
    den = 1 - a.r_r * b.r_l
    if den == 0:
        # lossless cavity between perfect mirrors; transmission of the
        # blocking element is zero so the cross terms vanish
        return _Two(0j, 0j, a.r_l, b.r_r)
    return _Two(
        a.t_f * b.t_f / den,
        a.t_b * b.t_b / den,
        a.r_l + a.t_f * b.r_l * a.t_b / den,
        b.r_r + b.t_b * a.r_r * b.t_f / den,
    )


def transfer_matrix(bp: float, bm: float, det: float = 0.0) -> np.ndarray:
    """2x2 transfer matrix of one emitter; raises ``ZeroDivisionError`` when ``t_minus == 0``."""
    s = scatter_spectrum(bp, bm, det)
    tp, tm, r = s.t_plus, s.t_minus, s.r
    if tm == 0:
        raise ZeroDivisionError("transfer matrix is singular for t_minus = 0")
    return np.array([[tp - r * r / tm, r / tm], [-r / tm, 1 / tm]], dtype=complex)


def propagation_matrix(phi: float) -> np.ndarray:
    return np.diag([cmath.exp(1j * phi), cmath.exp(-1j * phi)])


def _chain_smatrix(chain: ChainSpec) -> _Two:
    total = _Two(1 + 0j, 1 + 0j, 0j, 0j)
    for j, (bp, bm, det) in enumerate(chain.emitters):
        if j > 0:
            total = _star(total, _propagation(chain.phases[j - 1]))
        total = _star(total, _element(bp, bm, det))
    return total


# below this |t_minus| the transfer matrix loses too many digits to cancellation
_TMATRIX_MIN_T = 1e-6
_TMATRIX_MAX_COND = 1e4


def _chain_tmatrix(chain: ChainSpec) -> np.ndarray:
    M = np.eye(2, dtype=complex)
    for j, (bp, bm, det) in enumerate(chain.emitters):
        if abs(scatter_spectrum(bp, bm, det).t_minus) < _TMATRIX_MIN_T:
            raise ZeroDivisionError("near-opaque element")
        if j > 0:
            M = propagation_matrix(chain.phases[j - 1]) @ M
        M = transfer_matrix(bp, bm, det) @ M
    return M


@dataclass(frozen=True)
class ChainResult:
    t: complex
    r: complex
    method: str

    @property
    def intensity(self) -> float:
        return abs(self.t) ** 2


def chain_transmission(chain: ChainSpec, direction: str = FORWARD) -> ChainResult:
    """
    Transmission and reflection amplitudes of a chain for light entering from
    the left (``forward``) or the right (``backward``).

    Uses transfer matrices; chains containing an element with
    ``|t_minus| < 1e-6``, or whose product has condition number above 1e4,
    go through the S-matrix cascade instead, since the transfer matrix
    cancels catastrophically there.
    """
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    free = cmath.exp(1j * sum(chain.phases))
    method = "transfer"
    try:
        M = _chain_tmatrix(chain)
        if abs(M[1, 1]) < 1e-300 or np.linalg.cond(M) > _TMATRIX_MAX_COND:
            raise ZeroDivisionError
        if direction == FORWARD:
            t = np.linalg.det(M) / M[1, 1]
            r = -M[1, 0] / M[1, 1]
        else:
            t = 1 / M[1, 1]
            r = M[0, 1] / M[1, 1]
    except ZeroDivisionError:
        method = "smatrix"
        s = _chain_smatrix(chain)
        t, r = (s.t_f, s.r_l) if direction == FORWARD else (s.t_b, s.r_r)
    return ChainResult(complex(t) / free, complex(r), method)


def chain_smatrix(chain: ChainSpec) -> dict:
    """S-matrix cascade result, the reference route for every chain."""
    s = _chain_smatrix(chain)
    free = cmath.exp(1j * sum(chain.phases))
    return {"t_forward": s.t_f / free, "t_backward": s.t_b / free,
            "r_left": s.r_l, "r_right": s.r_r}


def _db(x: float) -> float:
    return 10 * math.log10(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class Isolation:
    insertion_loss_db: float
    isolation_db: float
    pass_direction: str
    t_pass: float
    t_block: float

    @property
    def reciprocal(self) -> bool:
        return abs(self.isolation_db) < 1e-9


def isolation_metrics(chain: ChainSpec) -> Isolation:
    """
    Insertion loss and isolation in dB.

    The direction with the larger transmitted intensity is the pass direction.
    Zero blocked transmission gives ``isolation_db == inf``; equal
    transmissions (including a chain opaque both ways) give 0 dB.
    """
    tf = chain_transmission(chain, FORWARD).intensity
    tb = chain_transmission(chain, BACKWARD).intensity
    if tf >= tb:
        direction, tp, tk = FORWARD, tf, tb
    else:
        direction, tp, tk = BACKWARD, tb, tf
    il = -_db(tp) if tp > 0 else math.inf
    if tp == tk:
        iso = 0.0
    else:
        iso = math.inf if tk == 0 else 10 * math.log10(tp / tk)
    # exact zero instead of -0.0 for lossless pass
    return Isolation(il + 0.0, iso + 0.0, direction, tp, tk)


def beamsplitter(reflectivity: float) -> np.ndarray:
    """Symmetric lossless beamsplitter ``[[t, i r], [i r, t]]``."""
    if not 0 <= reflectivity <= 1:
        raise ValueError("reflectivity must lie in [0, 1]")
    t = math.sqrt(1 - reflectivity)
    r = math.sqrt(reflectivity)
    return np.array([[t, 1j * r], [1j * r, t]])


# port order: left-top, right-top, left-bottom, right-bottom
CIRCULATOR_PORTS = ("1", "2", "3", "4")
_LEFT = (0, 2)
_RIGHT = (1, 3)


def mach_zehnder_smatrix(arm_forward: complex, arm_backward: complex,
                         reflectivity: float = 0.5) -> np.ndarray:
    """
    4-port S-matrix of a Mach-Zehnder interferometer whose upper arm carries
    the complex amplitude ``arm_forward`` (left to right) or ``arm_backward``
    (right to left).

    Ports are numbered 1 = left-top, 2 = right-top, 3 = left-bottom,
    4 = right-bottom; ``S[out, in]``.  Reflection inside the arm is not
    modelled.
    """
    B = beamsplitter(reflectivity)
    fwd = B @ np.diag([arm_forward, 1.0]) @ B
    bwd = B.T @ np.diag([arm_backward, 1.0]) @ B.T
    S = np.zeros((4, 4), dtype=complex)
    for a, pin in enumerate(_LEFT):
        for b, pout in enumerate(_RIGHT):
            S[pout, pin] = fwd[b, a]
    for a, pin in enumerate(_RIGHT):
        for b, pout in enumerate(_LEFT):
            S[pout, pin] = bwd[b, a]
    return S


def circulator_smatrix(phi_forward: float, phi_backward: float,
                       reflectivity: float = 0.5) -> np.ndarray:
    """Mach-Zehnder S-matrix with unit-modulus, direction-dependent arm phases."""
    return mach_zehnder_smatrix(cmath.exp(1j * phi_forward), cmath.exp(1j * phi_backward),
                                reflectivity)


def emitter_circulator_smatrix(beta_plus: float, beta_minus: float = 0.0,
                               detuning: float = 0.0, reflectivity: float = 0.5) -> np.ndarray:
    """Circulator whose arm phase comes from an emitter's transmission amplitudes."""
    s = scatter_spectrum(beta_plus, beta_minus, detuning)
    return mach_zehnder_smatrix(s.t_plus, s.t_minus, reflectivity)


def routing_table(S: np.ndarray) -> list[dict]:
    """Most likely output port and its probability for each input port."""
    P = np.abs(S) ** 2
    table = []
    for pin in range(S.shape[1]):
        pout = int(np.argmax(P[:, pin]))
        table.append({"input": pin + 1, "output": pout + 1, "probability": float(P[pout, pin])})
    return table


def unitarity_deficit(S: np.ndarray) -> float:
    return float(np.max(np.abs(S.conj().T @ S - np.eye(S.shape[0]))))
