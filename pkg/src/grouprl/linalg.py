"""Small dense linear-algebra and random-stream kernels.

Everything here works on tiny problems (the critic system is 8x8 at p=3), so
the emphasis is on auditable numerics rather than speed.
"""

from __future__ import annotations

import math
import warnings
import zlib

import numpy as np
import scipy.linalg

SINGULAR_PIVOT_RTOL = 1e-14


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a pivot of the LU factorization is numerically zero."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


class CovarianceError(ValueError):
    pass


def exact_sum(values: np.ndarray, axis: int = 0) -> np.ndarray:
    """Correctly rounded sum along ``axis``.

    Uses ``math.fsum`` so the result does not depend on the order of the
    summands; permuting samples therefore leaves every reduction bitwise
    unchanged.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        return np.float64(math.fsum(values))
    moved = np.moveaxis(values, axis, -1)
    flat = moved.reshape(-1, moved.shape[-1])
    out = np.fromiter((math.fsum(row) for row in flat), dtype=float, count=flat.shape[0])
    return out.reshape(moved.shape[:-1])


def exact_mean(values: np.ndarray, axis: int = 0) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    return exact_sum(values, axis=axis) / values.shape[axis]


def solve_linear(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` with a partially pivoted LU factorization.

    Raises SingularMatrixError, carrying a condition-number estimate, when a
    pivot falls below ``1e-14 * ||A||_inf``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if b.shape != (A.shape[0],):
        raise ValueError(f"b has shape {b.shape}, expected ({A.shape[0]},)")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("non-finite entries in linear system")

    norm_inf = np.abs(A).sum(axis=1).max()
    with warnings.catch_warnings():
        # singularity is detected and reported below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if norm_inf == 0.0 or pivots.min() < SINGULAR_PIVOT_RTOL * norm_inf:
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(A, p=np.inf)) if norm_inf > 0 else math.inf
        raise SingularMatrixError(
            f"matrix is numerically singular (min pivot {pivots.min():.3e}, "
            f"||A||_inf {norm_inf:.3e}, condition estimate {cond:.3e})",
            condition=cond,
        )
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def substream(master_seed: int, tag: str, *ids: int) -> np.random.Generator:
    """Independent generator keyed by (master seed, purpose tag, ids).

    The key is a pure function of its arguments, so results never depend on
    the order in which streams are requested or on how work is scheduled.
    """
    key = [int(master_seed), zlib.crc32(tag.encode("utf-8"))] + [int(i) for i in ids]
    return np.random.default_rng(np.random.SeedSequence(key))


def gaussian(mean: float, std: float, rng: np.random.Generator) -> float:
    if std < 0:
        raise ValueError(f"std must be non-negative, got {std}")
    if std == 0:
        rng.standard_normal()  # keep stream position independent of std
        return float(mean)
    return float(mean + std * rng.standard_normal())


def covariance_factor(Sigma: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Symmetric square root ``L`` with ``L @ L.T == Sigma``.

    Built from an eigendecomposition so that PSD (not only PD) matrices work.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
        raise CovarianceError(f"covariance must be square, got shape {Sigma.shape}")
    if not np.all(np.isfinite(Sigma)):
        raise CovarianceError("covariance has non-finite entries")
    scale = max(1.0, float(np.abs(Sigma).max()))
    if not np.allclose(Sigma, Sigma.T, rtol=0, atol=atol * scale):
        raise CovarianceError("covariance is not symmetric")
    vals, vecs = np.linalg.eigh((Sigma + Sigma.T) / 2)
    if vals.min() < -atol * scale:
        raise CovarianceError(f"covariance is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def gaussian_vector(Sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from N(0, Sigma)."""
    L = covariance_factor(Sigma)
    return L @ rng.standard_normal(L.shape[0])
