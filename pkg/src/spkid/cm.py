"""Covariance-matrix speaker models compared with the arithmetic-harmonic
sphericity measure

    mu(A, B) = log(tr(A B^-1) * tr(B A^-1)) - 2 log(m)

which is zero exactly when A is proportional to B.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DimensionMismatchError, InsufficientDataError, SingularModelError
from .vq import argmin_speaker

PIVOT_RTOL = 1e-10
RIDGE_RTOL = 1e-8
# ridge used when the matrix has zero trace (e.g. identical frames)
RIDGE_FLOOR = 1e-8


def _ridge(C):
    m = C.shape[0]
    scale = np.trace(C) / m
    return RIDGE_RTOL * scale if scale > 0 else RIDGE_FLOOR


def _try_cholesky(C):
    m = C.shape[0]
    try:
        factor = cho_factor(C, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        return None
    pivots = np.diag(factor[0]) ** 2
    if pivots.min() < PIVOT_RTOL * np.trace(C) / m:
        return None
    return factor


def regularize(C):
    """Return ``(C', flagged)``; C' is C itself or C + eps*I when C is near-singular."""
    C = np.asarray(C, dtype=np.float64)
    if _try_cholesky(C) is not None:
        return C, False
    return C + _ridge(C) * np.eye(C.shape[0]), True


def invert_spd(C):
    """Inverse of a symmetric positive-definite matrix via Cholesky.

    Returns ``(inverse, regularized)``.  If the factorisation fails, or a
    pivot is below 1e-10*tr(C)/m, one retry is made on C + 1e-8*tr(C)/m*I.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {C.shape}")
    m = C.shape[0]
    regularized = False
    factor = _try_cholesky(C)
    if factor is None:
        regularized = True
        C = C + _ridge(C) * np.eye(m)
        factor = _try_cholesky(C)
        if factor is None:
            raise SingularModelError("matrix is singular even after ridge regularisation")
    inv = cho_solve(factor, np.eye(m))
    return (inv + inv.T) / 2.0, regularized


def pair_trace(Y, X_inv):
    """tr(Y X^-1) for symmetric Y and X^-1, summing symmetric element pairs:

        2 * sum_{i>j} y_ij x~_ij + sum_k y_kk x~_kk
    """
    prod = Y * X_inv
    return 2.0 * np.sum(np.tril(prod, -1)) + np.sum(np.diag(prod))


def trace_product(Y, X, X_inv, Y_inv):
    """``(tr(Y X^-1), tr(X Y^-1))`` without forming a matrix product."""
    shapes = {np.shape(M) for M in (Y, X, X_inv, Y_inv)}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"matrix shapes differ: {sorted(shapes)}")
    return pair_trace(Y, X_inv), pair_trace(X, Y_inv)


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    C: np.ndarray
    mean: np.ndarray
    frame_count: int
    speaker_id: str = ""
    language: str = "A"
    regularized: bool = False

    def __post_init__(self):
        C = np.asarray(self.C, dtype=np.float64)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionMismatchError(f"covariance must be square, got {C.shape}")
        C.setflags(write=False)
        mean = np.asarray(self.mean, dtype=np.float64)
        mean.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "mean", mean)

    @property
    def P(self):
        return self.C.shape[0]

    @property
    def n_parameters(self):
        return count_cm_parameters(self.P)

    @cached_property
    def inverse(self):
        inv, _ = invert_spd(self.C)
        return inv


def count_cm_parameters(P):
    return (P * P + P) // 2


def estimate_covariance(features, speaker_id=None, language=None):
    """Mean-subtracted sample covariance (divisor N), symmetrised and ridged if singular."""
    x = np.asarray(getattr(features, "vectors", features), dtype=np.float64)
    N, P = x.shape
    if N < 2:
        raise InsufficientDataError(f"need at least 2 frames, got {N}")
    if N < P:
        warnings.warn(f"only {N} frames for a {P}x{P} covariance", RuntimeWarning,
                      stacklevel=2)
    mean = x.mean(axis=0)
    d = x - mean
    C = d.T @ d / N
    C, flagged = regularize((C + C.T) / 2.0)
    source = getattr(features, "source", ("", "", ""))
    return CovarianceModel(C, mean, N,
                           speaker_id if speaker_id is not None else source[0],
                           language if language is not None else (source[1] or "A"),
                           flagged)


def _matrix_and_inverse(M):
    if isinstance(M, CovarianceModel):
        return M.C, M.inverse
    M = np.asarray(M, dtype=np.float64)
    inv, regularized = invert_spd(M)
    if regularized:
        M = M + _ridge(M) * np.eye(M.shape[0])
    return M, inv


def sphericity(C_test, C_j):
    """Arithmetic-harmonic sphericity (natural log). Accepts matrices or models."""
    A, A_inv = _matrix_and_inverse(C_test)
    B, B_inv = _matrix_and_inverse(C_j)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"sizes differ: {A.shape} vs {B.shape}")
    return _mu(A, A_inv, B, B_inv)


def _mu(A, A_inv, B, B_inv):
    t_ab, t_ba = trace_product(A, B, B_inv, A_inv)
    if not (t_ab > 0 and t_ba > 0):
        raise SingularModelError("non-positive trace; inputs are not positive definite")
    return float(np.log(t_ab * t_ba) - 2.0 * np.log(A.shape[0]))


def identify_cm(models, C_test):
    """Return ``(speaker_id, mu list)`` with mu aligned with ``models``."""
    if not models:
        raise ValueError("at least one model is required")
    m = models[0].P
    if any(mod.P != m for mod in models):
        raise DimensionMismatchError("models disagree on size")
    A, A_inv = _matrix_and_inverse(C_test)
    if A.shape[0] != m:
        raise DimensionMismatchError(f"test matrix is {A.shape[0]}x{A.shape[0]}, models are {m}x{m}")
    scores = np.array([_mu(A, A_inv, mod.C, mod.inverse) for mod in models])
    best = argmin_speaker([mod.speaker_id for mod in models], scores)
    return models[best].speaker_id, scores


def save_model(model, path):
    fmt = lambda vals: " ".join(repr(float(v)) for v in vals)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"cmmodel v1 P={model.P} frames={model.frame_count} "
                 f"speaker={model.speaker_id} lang={model.language}\n")
        fh.write(fmt(model.mean) + "\n")
        for i in range(model.P):
            fh.write(fmt(model.C[i, :i + 1]) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        parts = fh.readline().split()
        if parts[:2] != ["cmmodel", "v1"]:
            raise ValueError(f"{path}: not a cmmodel v1 file")
        head = dict(p.split("=", 1) for p in parts[2:])
        P = int(head["P"])
        mean = [float(v) for v in fh.readline().split()]
        C = np.zeros((P, P))
        for i in range(P):
            row = [float(v) for v in fh.readline().split()]
            if len(row) != i + 1:
                raise ValueError(f"{path}: row {i} has {len(row)} values, expected {i + 1}")
            C[i, :i + 1] = row
    C = np.tril(C) + np.tril(C, -1).T
    return CovarianceModel(C, mean, int(head["frames"]), head["speaker"], head["lang"])
