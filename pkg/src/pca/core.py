"""Core PCA functionality.

This module fits principal components with a cyclic Jacobi eigensolver,
projects data onto them, reconstructs data from scores and persists models.
"""

import json
import logging
import os
from typing import Tuple, Union

import numpy as np

from .exceptions import (
    ComponentCountError,
    EigensolverError,
    FeatureMismatchError,
    InsufficientRowsError,
    ModelFormatError,
    PCAError,
)
from .models import FORMAT_VERSION, PCAModel

logger = logging.getLogger(__name__)

JACOBI_TOLERANCE = 1e-12
MAX_SWEEPS = 100
ORTHONORMALITY_TOLERANCE = 1e-8

PathLike = Union[str, os.PathLike]


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOLERANCE,
                max_sweeps: int = MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps run until the off-diagonal Frobenius norm drops below ``tol``
    times the matrix norm.

    Returns:
        ``(eigenvalues, eigenvectors)`` in the order the rotations leave them;
        column i of ``eigenvectors`` belongs to ``eigenvalues[i]``.

    Raises:
        EigensolverError: If the matrix is not square or the sweeps do not
            converge.
    """
    A = np.array(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise EigensolverError(f"expected a square matrix, got shape {A.shape}")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    V = np.eye(n)
    threshold = tol * max(np.linalg.norm(A), np.finfo(float).tiny)
    for sweep in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off < threshold:
            logger.debug("jacobi converged after %d sweeps (n=%d)", sweep, n)
            return np.diag(A).copy(), V
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p], A[:, q] = c * col_p - s * col_q, s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :], A[q, :] = c * row_p - s * row_q, s * row_p + c * row_q
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * v_p - s * v_q, s * v_p + c * v_q
    raise EigensolverError(f"Jacobi sweeps did not converge within {max_sweeps} sweeps (n={n})")


def _descending(eigenvalues: np.ndarray) -> np.ndarray:
    # Stable, so tied eigenvalues keep the solver's order.
    return np.argsort(-eigenvalues, kind="stable")


def _complete_basis(vectors: np.ndarray, d: int, count: int) -> np.ndarray:
    """Append ``count`` unit vectors orthogonal to the columns of ``vectors``."""
    basis = [vectors[:, i] for i in range(vectors.shape[1])]
    for j in range(d):
        if count == 0:
            break
        candidate = np.zeros(d)
        candidate[j] = 1.0
        for b in basis:
            candidate -= (b @ candidate) * b
        norm = np.linalg.norm(candidate)
        if norm > 0.5:
            basis.append(candidate / norm)
            count -= 1
    return np.column_stack(basis)


def _gram_components(centered: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    rows = centered.shape[0]
    gram = centered @ centered.T / (rows - 1)
    eigenvalues, vectors = jacobi_eigh(gram)
    order = _descending(eigenvalues)
    eigenvalues, vectors = eigenvalues[order], vectors[:, order]
    mapped = centered.T @ vectors[:, :k]
    norms = np.linalg.norm(mapped, axis=0)
    scale = max(norms.max(initial=0.0), 1.0)
    usable = norms > 1e-10 * scale
    # Null directions (zero eigenvalue) cannot be mapped back; fill them with any orthonormal completion.
    first_null = int(np.argmin(usable)) if not usable.all() else k
    if first_null:
        q, r = np.linalg.qr(mapped[:, :first_null] / norms[:first_null])
        q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    else:
        q = np.zeros((centered.shape[1], 0))
    if first_null < k:
        q = _complete_basis(q, centered.shape[1], k - first_null)
    return eigenvalues[:k], q.T


def _covariance_components(centered: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    covariance = centered.T @ centered / (centered.shape[0] - 1)
    eigenvalues, vectors = jacobi_eigh(covariance)
    order = _descending(eigenvalues)
    return eigenvalues[order][:k], vectors[:, order[:k]].T


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # The entry of largest magnitude in each component is positive.
    pivots = components[np.arange(components.shape[0]), np.argmax(np.abs(components), axis=1)]
    return components * np.where(pivots < 0, -1.0, 1.0)[:, None]


def fit(X, k: int) -> PCAModel:
    """Fit ``k`` principal components to the rows of ``X``.

    With fewer rows than features the rows x rows Gram matrix is
    decomposed and its eigenvectors are mapped back to feature space;
    otherwise the d x d covariance is decomposed. Both use the 1/(rows - 1)
    convention.

    Args:
        X: Data matrix, one observation per row.
        k: Number of components, 1 <= k <= min(rows - 1, d).

    Returns:
        The fitted PCAModel.

    Raises:
        InsufficientRowsError: With fewer than two rows.
        ComponentCountError: If ``k`` is out of range.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientRowsError(f"PCA needs a matrix with at least 2 rows, got shape {X.shape}")
    rows, d = X.shape
    maximum = min(rows - 1, d)
    if not 1 <= k <= maximum:
        raise ComponentCountError(k, maximum)
    mean = X.mean(axis=0)
    centered = X - mean
    if rows < d:
        logger.info("fitting %d components on the %dx%d Gram matrix", k, rows, rows)
        eigenvalues, components = _gram_components(centered, k)
    else:
        logger.info("fitting %d components on the %dx%d covariance", k, d, d)
        eigenvalues, components = _covariance_components(centered, k)
    components = _fix_signs(components)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    deviation = np.abs(components @ components.T - np.eye(k)).max()
    if deviation > ORTHONORMALITY_TOLERANCE:
        raise EigensolverError(f"fitted components are not orthonormal (max deviation {deviation:.3g})")
    total_variance = float(np.sum(centered * centered) / (rows - 1))
    return PCAModel(mean=mean, components=components, eigenvalues=eigenvalues, total_variance=total_variance)


def _check_width(model: PCAModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise FeatureMismatchError(model.n_features, X.shape[1])
    return X


def transform(model: PCAModel, X) -> np.ndarray:
    """Scores (X - mean) components^T, one row per observation."""
    X = _check_width(model, X)
    return (X - model.mean) @ model.components.T


def inverse_transform(model: PCAModel, scores) -> np.ndarray:
    """Map scores back to feature space: scores components + mean."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores[None, :]
    if scores.shape[1] != model.n_components:
        raise PCAError(f"model has {model.n_components} components, scores have {scores.shape[1]} columns")
    return scores @ model.components + model.mean


def model_to_dict(model: PCAModel) -> dict:
    return {
        "format_version": model.format_version,
        "n_features": model.n_features,
        "n_components": model.n_components,
        "mean": model.mean.tolist(),
        "components": model.components.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
        "total_variance": model.total_variance,
    }


def model_from_dict(doc: dict) -> PCAModel:
    """Rebuild a model from its JSON form, checking every declared dimension."""
    if not isinstance(doc, dict):
        raise ModelFormatError("PCA model document must be a JSON object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported PCA model format_version {doc.get('format_version')!r}; supported: [{FORMAT_VERSION}]")
    try:
        d, k = int(doc["n_features"]), int(doc["n_components"])
        mean = np.asarray(doc["mean"], dtype=np.float64)
        components = np.asarray(doc["components"], dtype=np.float64)
        eigenvalues = np.asarray(doc["eigenvalues"], dtype=np.float64)
        total_variance = float(doc["total_variance"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed PCA model: {e!r}") from e
    if mean.shape != (d,) or components.shape != (k, d) or eigenvalues.shape != (k,):
        raise ModelFormatError(
            f"PCA model arrays do not match n_features={d}, n_components={k}: mean {mean.shape}, "
            f"components {components.shape}, eigenvalues {eigenvalues.shape}")
    return PCAModel(mean=mean, components=components, eigenvalues=eigenvalues, total_variance=total_variance)


def save_model(model: PCAModel, path: PathLike) -> None:
    """Write ``model`` to ``path`` as JSON."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, sort_keys=True)
        f.write("\n")


def load_model(path: PathLike) -> PCAModel:
    """Read a model written by :func:`save_model`.

    Raises:
        ModelFormatError: If the file is unreadable, malformed or its
            dimensions disagree with its arrays.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ModelFormatError(f"cannot read PCA model {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"PCA model {path} is not valid JSON: {e.msg}") from e
    return model_from_dict(doc)
