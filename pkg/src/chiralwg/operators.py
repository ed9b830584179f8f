"""
Operator algebra for N two-level emitters.

Basis conventions
-----------------
Each emitter has the local basis ``(|g>, |e>)`` with indices ``(0, 1)``, so the
lowering operator is ``sigma_minus() == [[0, 1], [0, 0]]``.  Site 0 is the
most significant tensor factor: the basis state ``|e g g>`` of three emitters
has index ``0b100 == 4``.  All rates are in units of a reference rate and
hbar = 1.

Operators and states are plain ``numpy`` arrays.  Constructors in this module
return read-only arrays so they can be shared freely.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError

MAX_PURE_SITES = 12
MAX_DENSITY_SITES = 6

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
POSITIVITY_TOL = -1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def sigma_minus() -> np.ndarray:
    """Lowering operator ``|g><e|``."""
    return _frozen([[0, 1], [0, 0]])


def sigma_plus() -> np.ndarray:
    """Raising operator ``|e><g|``."""
    return _frozen([[0, 0], [1, 0]])


def sigma_z() -> np.ndarray:
    """``|e><e| - |g><g|``."""
    return _frozen([[-1, 0], [0, 1]])


def number_op() -> np.ndarray:
    """Excited-state projector ``sigma_plus @ sigma_minus``."""
    return _frozen([[0, 0], [0, 1]])


def n_sites_of(dim: int) -> int:
    """Number of emitters for a Hilbert-space dimension, refusing non powers of two."""
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def check_capacity(n_sites: int, kind: str = "density") -> None:
    limit = MAX_DENSITY_SITES if kind == "density" else MAX_PURE_SITES
    if n_sites > limit:
        raise CapacityError(
            f"{n_sites} emitters exceeds the dense {kind} capacity of {limit}"
        )


def embed_operator(local, site: int, n_sites: int) -> np.ndarray:
    """
    Place a single-emitter operator at ``site`` of an ``n_sites`` register.

    Returns ``I x ... x local x ... x I`` with ``local`` in tensor position
    ``site`` (site 0 most significant).
    """
    local = np.asarray(local, dtype=complex)
    if local.shape != (2, 2):
        raise ValueError(f"local operator must be 2x2, got {local.shape}")
    if not 0 <= site < n_sites:
        raise IndexError(f"site {site} out of range for {n_sites} emitters")
    check_capacity(n_sites, "pure")
    left = np.eye(1 << site)
    right = np.eye(1 << (n_sites - site - 1))
    return _frozen(np.kron(np.kron(left, local), right))


def lowering_ops(n_sites: int) -> list[np.ndarray]:
    """``[sigma_j^-]`` for every site."""
    sm = sigma_minus()
    return [embed_operator(sm, j, n_sites) for j in range(n_sites)]


def basis_state(labels: str) -> np.ndarray:
    """
    Product ket from a label string, e.g. ``basis_state("eg")`` is ``|e_1 g_2>``.

    Accepts ``g``/``e`` or ``0``/``1`` per site.
    """
    index = 0
    for ch in labels:
        if ch in "g0":
            bit = 0
        elif ch in "e1":
            bit = 1
        else:
            raise ValueError(f"unknown site label {ch!r} in {labels!r}")
        index = (index << 1) | bit
    n = len(labels)
    check_capacity(n, "pure")
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    psi.setflags(write=False)
    return psi


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"state is not normalized (norm={norm:.15g})")
    return _frozen(np.outer(psi, psi.conj()))


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return _frozen(psi / norm)


def singlet() -> np.ndarray:
    """``(|eg> - |ge>)/sqrt(2)``."""
    return normalize(basis_state("eg") - basis_state("ge"))


def triplet() -> np.ndarray:
    """Single-excitation triplet ``(|eg> + |ge>)/sqrt(2)``."""
    return normalize(basis_state("eg") + basis_state("ge"))


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) < tol)


def validate_density_matrix(
    rho,
    trace_tol: float = TRACE_TOL,
    hermitian_tol: float = HERMITIAN_TOL,
    positivity_tol: float = POSITIVITY_TOL,
) -> np.ndarray:
    """
    Check the density-matrix invariants and return a read-only copy.

    Raises ``ValueError`` naming the violated invariant.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    check_capacity(n_sites_of(rho.shape[0]), "density")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr:.15g} differs from 1")
    if not is_hermitian(rho, hermitian_tol):
        raise ValueError("density matrix is not Hermitian")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam_min < positivity_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3g}")
    return _frozen(rho)


def as_density_matrix(state) -> np.ndarray:
    """Accept a ket or a density matrix and return a validated density matrix."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return ket_to_dm(state)
    return validate_density_matrix(state)


def partial_trace(rho, keep: Iterable[int]) -> np.ndarray:
    """
    Reduced density matrix on the sites listed in ``keep``.

    The kept sites appear in ascending order in the result regardless of the
    order given.
    """
    rho = np.asarray(rho, dtype=complex)
    n = n_sites_of(rho.shape[0])
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise IndexError(f"keep indices {keep} invalid for {n} emitters")
    traced = [j for j in range(n) if j not in keep]
    t = rho.reshape([2] * (2 * n))
    # trace out from the highest site down so remaining axis numbers stay valid
    n_left = n
    for j in reversed(traced):
        t = np.trace(t, axis1=j, axis2=j + n_left)
        n_left -= 1
    d = 1 << len(keep)
    return _frozen(t.reshape(d, d))


def expectation(rho, op) -> complex:
    """``Tr(rho @ op)``."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {op.shape}")
    return complex(np.einsum("ij,ji->", rho, op))


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def trace_distance(rho, sigma) -> float:
    """``0.5 * ||rho - sigma||_1`` for Hermitian arguments."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def excited_populations(rho) -> np.ndarray:
    """``<sigma_j^+ sigma_j^->`` for every site, read off the diagonal."""
    rho = np.asarray(rho)
    n = n_sites_of(rho.shape[-1])
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return diag @ bits


def tensor(*ops: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex) if np.ndim(ops[0]) == 2 else np.ones(1, dtype=complex)
    for op in ops:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return _frozen(out)
