"""The manifold construction: deformation of the diagonal Gaussian family by
an adjacency matrix, its volume density, and the closed-form information
metric used as a validation oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_DET_TOL",
    "DegenerateDeformationError",
    "DeformedMatrix",
    "MetricEvaluation",
    "psi_map",
    "in_theta_tilde",
    "bare_metric",
    "deformed_metric",
    "upsilon",
    "log_upsilon",
    "fisher_metric_gaussian",
]

DEFAULT_DET_TOL = 1e-12

_LN2 = math.log(2.0)


class DegenerateDeformationError(ValueError):
    """The deformed matrix is (numerically) singular; exclude the point."""


@dataclass(frozen=True)
class DeformedMatrix:
    """diag(theta) + A together with its signed log-determinant."""

    psi: np.ndarray
    log_abs_det: float
    sign_det: float


@dataclass(frozen=True)
class MetricEvaluation:
    """Metric matrix with the log of sqrt|det| (may be +-inf)."""

    g_tilde: np.ndarray
    log_sqrt_abs_det: float


def _validate_theta(theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError(f"theta must be a nonempty vector, got shape {theta.shape}")
    if not np.isfinite(theta).all() or (theta <= 0).any():
        raise ValueError("theta components must be finite and strictly positive")
    return theta


def _validate_adjacency(A, n: int) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (n, n):
        raise ValueError(f"adjacency must have shape ({n}, {n}), got {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError("adjacency entries must be finite")
    if not np.array_equal(A, A.T):
        raise ValueError("adjacency must be symmetric")
    if np.diagonal(A).any():
        raise ValueError("adjacency must have zero diagonal")
    return A


def psi_map(theta, A) -> DeformedMatrix:
    """Deform the diagonal covariance by the adjacency: psi = diag(theta) + A.

    The determinant is evaluated through a pivoted factorization entirely in
    the log domain (sum of log |pivots|), so it never overflows.
    """
    theta = _validate_theta(theta)
    A = _validate_adjacency(A, theta.size)
    psi = A.copy()
    np.fill_diagonal(psi, np.diagonal(A) + theta)
    sign, logdet = np.linalg.slogdet(psi)
    return DeformedMatrix(psi=psi, log_abs_det=float(logdet), sign_det=float(sign))


def in_theta_tilde(d: DeformedMatrix, tol: float = DEFAULT_DET_TOL) -> bool:
    """Membership test for the non-degenerate parameter region: |det psi| > tol."""
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    return d.sign_det != 0 and d.log_abs_det > math.log(tol)


def bare_metric(theta) -> MetricEvaluation:
    """Diagonal metric of the edgeless network: g_ii = (1/2)(1/theta_i)^2."""
    theta = _validate_theta(theta)
    n = theta.size
    g = np.diag(0.5 / theta**2)
    log_sqrt = -0.5 * n * _LN2 - float(np.log(theta).sum())
    return MetricEvaluation(g_tilde=g, log_sqrt_abs_det=log_sqrt)


def _log_sqrt_abs_det_hadamard_square(M: np.ndarray) -> float:
    """log sqrt|det(0.5 * M∘M)| with power-of-two prescaling against overflow."""
    n = M.shape[0]
    amax = float(np.abs(M).max())
    if not math.isfinite(amax):
        return math.inf
    if amax == 0.0:
        return -math.inf
    e = math.frexp(amax)[1]
    Ms = M * math.ldexp(1.0, -e)
    sign, logdet = np.linalg.slogdet(0.5 * Ms * Ms)
    if sign == 0:
        return -math.inf
    return 0.5 * float(logdet) + n * e * _LN2


def deformed_metric(theta, A, tol: float = DEFAULT_DET_TOL) -> MetricEvaluation:
    """Metric of the deformed manifold: entrywise (1/2)(psi^-1)^2.

    The determinant may be negative (the metric can be pseudo-Riemannian);
    the volume density uses its absolute value.
    """
    d = psi_map(theta, A)
    if not in_theta_tilde(d, tol):
        raise DegenerateDeformationError(
            f"psi is degenerate (log|det| = {d.log_abs_det:.6g}); "
            "the point must be excluded from integration"
        )
    M = np.linalg.inv(d.psi)
    M = 0.5 * (M + M.T)  # the inverse of a symmetric matrix; kill LU roundoff
    g = 0.5 * M * M
    return MetricEvaluation(g_tilde=g, log_sqrt_abs_det=_log_sqrt_abs_det_hadamard_square(M))


def upsilon(d: DeformedMatrix, n: int) -> float:
    """Trace-damped regularizing weight exp(-Tr psi) * ln(1 + |det psi|^n).

    Evaluated from the stored signed log-determinant; the |det|^n power keeps
    the weight real and nonnegative when the deformation has negative
    determinant.  Exactly 0 for singular psi.
    """
    if n < 1:
        raise ValueError(f"power must be a positive integer, got {n}")
    if d.sign_det == 0:
        return 0.0
    tr = float(np.trace(d.psi))
    L = n * d.log_abs_det
    if L > 36.0:
        # ln(1 + e^L) = L + O(e^-L)
        return math.exp(-tr) * L
    if L < -700.0:
        return math.exp(L - tr)
    return math.exp(-tr) * math.log1p(math.exp(L))


def log_upsilon(d: DeformedMatrix, n: int) -> float:
    """Natural log of :func:`upsilon`, stable over the whole range (-inf if 0)."""
    if n < 1:
        raise ValueError(f"power must be a positive integer, got {n}")
    if d.sign_det == 0:
        return -math.inf
    tr = float(np.trace(d.psi))
    L = n * d.log_abs_det
    if L > 36.0:
        return -tr + math.log(L)
    if L < -36.0:
        # ln ln(1 + e^L) = L + ln(1 - e^L/2 + ...) and the correction is < 1e-16
        return -tr + L
    return -tr + math.log(math.log1p(math.exp(L)))


def fisher_metric_gaussian(theta, dC) -> np.ndarray:
    """Information metric of a zero-mean Gaussian family via the closed trace
    form g_uv = (1/2) Tr(C^-1 dC_u C^-1 dC_v), with C = diag(theta).

    Validation oracle only: for the coordinate basis of the diagonal family it
    must reproduce :func:`bare_metric` exactly.
    """
    theta = _validate_theta(theta)
    n = theta.size
    dC = np.asarray(dC, dtype=np.float64)
    if dC.ndim != 3 or dC.shape[1:] != (n, n):
        raise ValueError(f"dC must be a stack of ({n}, {n}) matrices, got {dC.shape}")
    if not np.isfinite(dC).all():
        raise ValueError("dC entries must be finite")
    if not np.array_equal(dC, dC.transpose(0, 2, 1)):
        raise ValueError("each dC matrix must be symmetric")
    # C^-1 dC_u for diagonal C is a row rescale
    S = dC / theta[None, :, None]
    g = 0.5 * np.einsum("aij,bji->ab", S, S)
    return 0.5 * (g + g.T)
