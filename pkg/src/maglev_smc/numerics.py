"""Small dense linear-algebra helpers used across the controllers.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Everything
here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

HURWITZ_TOL = 1e-9
SCHUR_TOL = 1e-9
CONJUGATE_TOL = 1e-12


@dataclass(frozen=True)
class PolePlacementResult:
    """State-feedback row ``K`` such that ``A + B K`` has the requested poles."""

    K: np.ndarray
    achieved: list[complex]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D float array, raising ``ValueError`` otherwise."""
    m = np.asarray(a, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _square(a, name: str) -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def expm_zoh(A, B, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold discretization of ``x' = A x + B u``.

    Returns ``(Phi, Gamma)`` with ``Phi = exp(A tau)`` and
    ``Gamma = (int_0^tau exp(A s) ds) B``. Both come out of a single
    exponential of the augmented matrix ``[[A, B], [0, 0]]``, so singular
    ``A`` (the chain of integrators) needs no special casing.
    """
    A = _square(A, "A")
    B = as_matrix(B, "B")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
    if not (np.isfinite(tau) and tau > 0):
        raise ValueError(f"tau must be positive, got {tau}")
    n, m = B.shape
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = A
    aug[:n, n:] = B
    E = expm(aug * tau)
    return E[:n, :n].copy(), E[:n, n:].copy()


def eigenvalues(A) -> list[complex]:
    """Eigenvalues of a square matrix, sorted by real then imaginary part."""
    A = _square(A, "A")
    ev = np.linalg.eigvals(A)
    return sorted((complex(e) for e in ev), key=lambda c: (c.real, c.imag))


def is_hurwitz(A, tol: float = HURWITZ_TOL) -> bool:
    """True when every eigenvalue has real part below ``-tol``."""
    return max(e.real for e in eigenvalues(A)) < -tol


def is_schur(A, tol: float = SCHUR_TOL) -> bool:
    """True when the spectral radius is below ``1 - tol``."""
    return max(abs(e) for e in eigenvalues(A)) < 1.0 - tol


def spectral_radius(A) -> float:
    return max(abs(e) for e in eigenvalues(A))


def controllability_matrix(A, B) -> np.ndarray:
    A = _square(A, "A")
    B = as_matrix(B, "B")
    blocks = [B]
    for _ in range(A.shape[0] - 1):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def observability_matrix(A, C) -> np.ndarray:
    A = _square(A, "A")
    C = as_matrix(C, "C")
    if C.shape[1] != A.shape[0]:
        C = C.T
    rows = [C]
    for _ in range(A.shape[0] - 1):
        rows.append(rows[-1] @ A)
    return np.vstack(rows)


def _check_conjugate_closed(poles: np.ndarray) -> None:
    remaining = list(poles)
    while remaining:
        p = remaining.pop()
        if abs(p.imag) <= CONJUGATE_TOL:
            continue
        dist = [abs(q - np.conj(p)) for q in remaining]
        if not dist or min(dist) > CONJUGATE_TOL * max(1.0, abs(p)):
            raise ValueError(f"pole {p} has no conjugate partner")
        remaining.pop(int(np.argmin(dist)))


def place_poles(A, B, poles) -> PolePlacementResult:
    """Single-input pole placement by Ackermann's formula.

    The returned ``K`` uses the ``A + B K`` sign convention, so for the
    chain of integrators it is minus the coefficients of the desired
    characteristic polynomial (constant term first).
    """
    A = _square(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    if B.shape != (n, 1):
        raise ValueError(f"B must be {n}x1 for single-input placement, got {B.shape}")
    poles = np.asarray(poles, dtype=complex).ravel()
    if poles.size != n:
        raise ValueError(f"need {n} poles, got {poles.size}")
    _check_conjugate_closed(poles)

    ctrb = controllability_matrix(A, B)
    if np.linalg.matrix_rank(ctrb) < n:
        raise ValueError("(A, B) is not controllable")

    coeffs = np.real(np.poly(poles))  # monic, highest power first
    phi = np.zeros_like(A)
    Ak = np.eye(n)
    for c in coeffs[::-1]:
        phi += c * Ak
        Ak = Ak @ A
    last_row = np.zeros(n)
    last_row[-1] = 1.0
    K = -np.linalg.solve(ctrb.T, last_row) @ phi
    K = K.reshape(1, n)
    return PolePlacementResult(K=K, achieved=eigenvalues(A + B @ K))
