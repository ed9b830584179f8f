"""
Confined optical fields, transverse spin and directional emission rates.

Field maps live on a transverse ``(x, y)`` grid measured in units of the
vacuum wavelength, so the vacuum wavenumber is ``2*pi`` in grid units.  The
mode propagates along ``+z`` (forward) or ``-z`` (backward).

Phase convention
----------------
The longitudinal component obeys ``Ez = -/+ (i/k) (dEx/dx + dEy/dy)`` for
forward/backward propagation.  Gauss's law is exact under this relation when a
forward mode's z-derivative acts as ``-i*beta``, so ``divergence`` uses
``d/dz -> -i*beta`` (forward) and ``+i*beta`` (backward).  Backward amplitudes
are the complex conjugates of forward ones.

In the total-internal-reflection geometry the denser medium fills ``x > 0``
and the evanescent field lives on ``x <= 0``.  With these choices the
longitudinal/transverse ratio is ``-i * kappa / beta`` and the electric spin
density points along ``+y`` for forward propagation.
"""

from __future__ import annotations

import csv
import io
import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridError

FORWARD = "forward"
BACKWARD = "backward"
_DIRECTIONS = (FORWARD, BACKWARD)

CSV_HEADER = ["x", "y", "re_Ex", "im_Ex", "re_Ey", "im_Ey", "re_Ez", "im_Ez"]

# grid spacing limits in wavelengths
MAX_SPACING = 0.1
RECOMMENDED_SPACING = 0.05


def _check_direction(direction: str) -> str:
    if direction not in _DIRECTIONS:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return direction


def _direction_sign(direction: str) -> int:
    return 1 if _check_direction(direction) == FORWARD else -1


@dataclass(frozen=True)
class FieldMap:
    """
    Complex electric-field amplitudes on a uniform transverse grid.

    Attributes
    ----------
    x, y : ndarray
        1D coordinate axes in units of the wavelength.  Singleton axes mean
        the field is invariant along that direction.
    E : ndarray, shape (len(y), len(x), 3)
        Complex amplitudes ``(Ex, Ey, Ez)``.
    wavelength_nm : float
        Vacuum wavelength, metadata only.
    direction : {'forward', 'backward'}
    n_eff : float
        Effective index; the propagation constant is ``2*pi*n_eff`` in grid units.
    """

    x: np.ndarray
    y: np.ndarray
    E: np.ndarray
    wavelength_nm: float = 1000.0
    direction: str = FORWARD
    n_eff: float = 1.0

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        y = np.array(self.y, dtype=float).ravel()
        E = np.array(self.E, dtype=complex)
        if E.shape != (y.size, x.size, 3):
            raise GridError(
                f"amplitude array shape {E.shape} does not match grid ({y.size}, {x.size}, 3)"
            )
        _check_direction(self.direction)
        for name, axis in (("x", x), ("y", y)):
            _check_uniform(axis, name)
        for a in (x, y, E):
            a.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "E", E)

    @property
    def k(self) -> float:
        """Vacuum wavenumber in grid units."""
        return 2 * math.pi

    @property
    def beta(self) -> float:
        """Propagation constant in grid units."""
        return 2 * math.pi * self.n_eff

    @property
    def spacing(self) -> tuple[float | None, float | None]:
        return _spacing(self.x), _spacing(self.y)

    def conjugate(self) -> "FieldMap":
        """The counter-propagating mode, ``E_backward = conj(E_forward)``."""
        other = BACKWARD if self.direction == FORWARD else FORWARD
        return FieldMap(self.x, self.y, self.E.conj(), self.wavelength_nm, other, self.n_eff)

    def at(self, x: float, y: float) -> np.ndarray:
        """Amplitude vector at the grid point nearest ``(x, y)``."""
        i = int(np.argmin(np.abs(self.y - y)))
        j = int(np.argmin(np.abs(self.x - x)))
        return self.E[i, j].copy()


def _spacing(axis: np.ndarray) -> float | None:
    return float(axis[1] - axis[0]) if axis.size > 1 else None


def _check_uniform(axis: np.ndarray, name: str) -> None:
    if axis.size < 2:
        return
    d = np.diff(axis)
    if np.any(d <= 0):
        raise GridError(f"{name} axis must be strictly increasing")
    if np.max(np.abs(d - d[0])) > 1e-9 * max(abs(d[0]), 1e-300) + 1e-12:
        raise GridError(f"{name} axis spacing is not uniform")


def _derivative(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """
    Fourth-order finite differences: centred in the interior, one-sided
    (five-point) at the two outermost samples on each end.  Axes with fewer
    than five samples fall back to second order.
    """
    f = np.moveaxis(f, axis, 0)
    n = f.shape[0]
    out = np.zeros_like(f)
    if n < 3:
        raise GridError("need at least 3 samples along a varying axis")
    if n >= 5:
        out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
        out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
        out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
        out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    else:
        out[1:-1] = (f[2:] - f[:-2]) / (2 * h)
        out[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        out[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def _check_resolution(fm: FieldMap) -> None:
    for name, h in zip("xy", fm.spacing):
        if h is None:
            continue
        if h > MAX_SPACING:
            raise GridError(
                f"{name} spacing {h:.4g} wavelengths exceeds the limit of {MAX_SPACING}; "
                "finite differences would not resolve the field"
            )
        if h > RECOMMENDED_SPACING:
            warnings.warn(
                f"{name} spacing {h:.4g} wavelengths is coarser than {RECOMMENDED_SPACING}",
                stacklevel=3,
            )


def transverse_divergence(fm: FieldMap) -> np.ndarray:
    """``dEx/dx + dEy/dy`` by finite differences; singleton axes contribute zero."""
    hx, hy = fm.spacing
    div = np.zeros(fm.E.shape[:2], dtype=complex)
    if hx is not None:
        div += _derivative(fm.E[..., 0], hx, axis=1)
    if hy is not None:
        div += _derivative(fm.E[..., 1], hy, axis=0)
    return div


def longitudinal_component(fm: FieldMap, direction: str | None = None) -> FieldMap:
    """
    Fill in ``Ez`` from the transverse components.

    Uses ``Ez = -/+ (i/k)(dEx/dx + dEy/dy)`` with the sign chosen by the
    propagation direction (``fm.direction`` unless overridden).  Any ``Ez``
    already present in ``fm`` is ignored.
    """
    direction = fm.direction if direction is None else _check_direction(direction)
    _check_resolution(fm)
    sign = _direction_sign(direction)
    Ez = -sign * 1j / fm.k * transverse_divergence(fm)
    E = fm.E.copy()
    E[..., 2] = Ez
    return FieldMap(fm.x, fm.y, E, fm.wavelength_nm, direction, fm.n_eff)


def divergence(fm: FieldMap) -> np.ndarray:
    """Full ``div E`` including the z-derivative of the propagating mode."""
    sign = _direction_sign(fm.direction)
    return transverse_divergence(fm) - sign * 1j * fm.beta * fm.E[..., 2]


def electric_spin_density(fm: FieldMap | np.ndarray) -> np.ndarray:
    """
    Electric spin density ``-(i/2) conj(E) x E`` in units of ``eps0/omega``.

    Accepts a ``FieldMap`` or any array whose last axis holds the three
    components; returns a real array of the same shape.
    """
    E = fm.E if isinstance(fm, FieldMap) else np.asarray(fm, dtype=complex)
    s = -0.5j * np.cross(E.conj(), E)
    return np.real(s)


def photon_spin(fm: FieldMap | np.ndarray) -> np.ndarray:
    """
    Spin per photon in units of hbar, ``Im(conj(E) x E) / |E|^2``.

    This is ``omega * S_E`` divided by the energy density ``eps0 |E|^2 / 2``;
    circular polarization gives unit length.
    """
    E = fm.E if isinstance(fm, FieldMap) else np.asarray(fm, dtype=complex)
    num = np.imag(np.cross(E.conj(), E))
    den = np.sum(np.abs(E) ** 2, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, 0.0)


@dataclass(frozen=True)
class EvanescentWave:
    """Analytic parameters of a TIR evanescent wave, in units of the vacuum wavenumber."""

    beta: float
    kappa: float
    ratio: complex  # Ez / Ex

    @property
    def spin(self) -> float:
        """Photon spin along +y in units of hbar."""
        return 2 * self.beta * self.kappa / (self.beta**2 + self.kappa**2)


def evanescent_parameters(n1: float, n2: float, theta: float) -> EvanescentWave:
    """
    Propagation and decay constants beyond the critical angle.

    ``theta`` is the angle of incidence from the interface normal, in radians.
    """
    if not n1 > n2 > 0:
        raise ValueError("need n1 > n2 > 0")
    s = math.sin(theta)
    if not 0 < theta < math.pi / 2 or n1 * s <= n2:
        raise ValueError("no total internal reflection: angle is below the critical angle")
    beta = n1 * s
    kappa = math.sqrt(beta**2 - n2**2)
    return EvanescentWave(beta, kappa, -1j * kappa / beta)


def critical_angle(n1: float, n2: float) -> float:
    return math.asin(n2 / n1)


def tir_evanescent_field(
    n1: float,
    n2: float,
    theta: float,
    x,
    y=(0.0,),
    wavelength_nm: float = 852.0,
    direction: str = FORWARD,
) -> FieldMap:
    """
    p-polarized evanescent field in medium 2 beyond total internal reflection.

    The field is ``(Ex, 0, Ez) * exp(kappa * x)`` on ``x <= 0`` with
    ``kappa = k sqrt(n1^2 sin^2(theta) - n2^2)`` and ``Ez/Ex = -i kappa/beta``,
    ``beta = k n1 sin(theta)``.  Components follow from ``div E = 0`` and the
    p-polarization of the incident wave.  Normalized to unit intensity at the
    interface.  A backward map is the complex conjugate of the forward one.
    """
    wave = evanescent_parameters(n1, n2, theta)
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if np.any(x > 0):
        raise ValueError("evanescent field is defined on x <= 0 (medium 2)")
    k = 2 * math.pi
    ex0 = 1.0 / math.sqrt(1.0 + abs(wave.ratio) ** 2)
    profile = ex0 * np.exp(k * wave.kappa * x)
    E = np.zeros((y.size, x.size, 3), dtype=complex)
    E[..., 0] = profile[None, :]
    E[..., 2] = wave.ratio * profile[None, :]
    fm = FieldMap(x, y, E, wavelength_nm, FORWARD, n_eff=wave.beta)
    return fm if _check_direction(direction) == FORWARD else fm.conjugate()


@dataclass(frozen=True)
class RateSet:
    """Directional waveguide rates and the loss rate into non-guided modes."""

    gamma_plus: float
    gamma_minus: float
    loss: float = 0.0

    def __post_init__(self):
        rates = (self.gamma_plus, self.gamma_minus, self.loss)
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ValueError(f"rates must be finite and nonnegative, got {rates}")
        if sum(rates) <= 0:
            raise ValueError("at least one rate must be positive")

    @property
    def total(self) -> float:
        return self.gamma_plus + self.gamma_minus + self.loss


def beta_factors(rates: RateSet) -> tuple[float, float, float]:
    """``(beta_plus, beta_minus, beta)`` with ``beta_pm = gamma_pm / total``."""
    tot = rates.total
    bp = rates.gamma_plus / tot
    bm = rates.gamma_minus / tot
    return bp, bm, bp + bm


def _unit_dipole(d) -> np.ndarray:
    d = np.asarray(d, dtype=complex).ravel()
    if d.shape != (3,):
        raise ValueError("dipole must be a complex 3-vector")
    n = np.linalg.norm(d)
    if n == 0:
        raise ValueError("dipole must be nonzero")
    return d / n


def circular_dipole(helicity: int = +1) -> np.ndarray:
    """``(x + i*helicity*y)/sqrt(2)``."""
    return np.array([1, 1j * helicity, 0]) / math.sqrt(2)


def directional_rates(d, e_forward, gamma_wg: float = 1.0, loss: float = 0.0) -> RateSet:
    """
    Emission rates into the forward and backward modes.

    ``gamma_pm`` is proportional to ``|conj(d) . E_pm|^2`` with
    ``E_minus = conj(E_plus)``; the pair is scaled so ``gamma_plus +
    gamma_minus == gamma_wg``.  ``loss`` is passed through.
    """
    d = _unit_dipole(d)
    e = np.asarray(e_forward, dtype=complex).ravel()
    if e.shape != (3,) or not np.any(e):
        raise ValueError("forward field must be a nonzero complex 3-vector")
    wp = abs(np.vdot(d, e)) ** 2
    wm = abs(np.vdot(d, e.conj())) ** 2
    if wp + wm == 0:
        raise ValueError("dipole is orthogonal to both guided modes")
    return RateSet(gamma_wg * wp / (wp + wm), gamma_wg * wm / (wp + wm), loss)


def directionality(rates: RateSet) -> float:
    """``(gamma_plus - gamma_minus)/(gamma_plus + gamma_minus)``."""
    s = rates.gamma_plus + rates.gamma_minus
    return (rates.gamma_plus - rates.gamma_minus) / s if s > 0 else 0.0


# ---------------------------------------------------------------- CSV I/O

_META_RE = re.compile(r"^#\s*(.*)$")


def dumps_field_map(fm: FieldMap) -> str:
    buf = io.StringIO(newline="")
    meta = f"# lambda_nm={fm.wavelength_nm!r} direction={fm.direction}"
    if fm.n_eff != 1.0:
        meta += f" n_eff={fm.n_eff!r}"
    buf.write(meta + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, yv in enumerate(fm.y):
        for j, xv in enumerate(fm.x):
            e = fm.E[i, j]
            w.writerow(
                [repr(float(xv)), repr(float(yv))]
                + [repr(float(v)) for c in e for v in (c.real, c.imag)]
            )
    return buf.getvalue()


def save_field_map(fm: FieldMap, path) -> Path:
    path = Path(path)
    path.write_text(dumps_field_map(fm), encoding="utf-8", newline="")
    return path


def loads_field_map(text: str) -> FieldMap:
    lines = text.splitlines()
    meta = {}
    body = []
    for line in lines:
        m = _META_RE.match(line)
        if m:
            for tok in m.group(1).split():
                if "=" in tok:
                    key, val = tok.split("=", 1)
                    meta[key] = val
        elif line.strip():
            body.append(line)
    if "lambda_nm" not in meta or "direction" not in meta:
        raise GridError("missing metadata line '# lambda_nm=<float> direction=<forward|backward>'")
    try:
        wavelength = float(meta["lambda_nm"])
        n_eff = float(meta.get("n_eff", 1.0))
    except ValueError as exc:
        raise GridError(f"bad metadata value: {exc}") from None
    direction = meta["direction"]
    if direction not in _DIRECTIONS:
        raise GridError(f"bad direction {direction!r}")

    reader = csv.reader(body)
    header = next(reader, None)
    if header is None:
        raise GridError("missing header row")
    header = [h.strip() for h in header]
    missing = [c for c in CSV_HEADER if c not in header]
    if missing:
        raise GridError(f"missing columns: {', '.join(missing)}")
    cols = [header.index(c) for c in CSV_HEADER]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise GridError(f"row {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            rows.append([float(row[c]) for c in cols])
        except ValueError:
            raise GridError(f"row {lineno}: non-numeric value") from None
    if not rows:
        raise GridError("no data rows")
    data = np.array(rows)
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != len(rows):
        raise GridError("samples do not form a complete rectangular grid")
    _check_uniform(xs, "x")
    _check_uniform(ys, "y")
    E = np.full((ys.size, xs.size, 3), np.nan, dtype=complex)
    ix = np.searchsorted(xs, data[:, 0])
    iy = np.searchsorted(ys, data[:, 1])
    if len(set(zip(ix.tolist(), iy.tolist()))) != len(rows):
        raise GridError("duplicate grid points")
    # assign parts separately so signed zeros survive the round trip
    for c in range(3):
        E.real[iy, ix, c] = data[:, 2 + 2 * c]
        E.imag[iy, ix, c] = data[:, 3 + 2 * c]
    if np.isnan(E).any():
        raise GridError("duplicate grid points")
    return FieldMap(xs, ys, E, wavelength, direction, n_eff)


def load_field_map(path) -> FieldMap:
    """Read a field map written in the documented CSV schema."""
    return loads_field_map(Path(path).read_text(encoding="utf-8"))
