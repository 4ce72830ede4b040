"""Restarted block Lanczos for the lowest eigenpairs of a real symmetric operator."""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)


class EigensolverError(RuntimeError):
    def __init__(self, message: str, residuals=None, s: float | None = None):
        super().__init__(message)
        self.residuals = residuals
        self.s = s


def _project_out(W: np.ndarray, Q: np.ndarray) -> None:
    if Q.shape[1]:
        for _ in range(2):
            W -= Q @ (Q.T @ W)


def _orthonormalize(W: np.ndarray, Q: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal block spanning W minus its projection on the orthonormal columns of Q.

    Columns that lose more than eight digits to the projection carry no new
    direction and are replaced by random ones.  The result is projected
    again after normalization, since dividing by a small norm magnifies any
    leftover overlap with Q.
    """
    before = np.maximum(np.linalg.norm(W, axis=0), 1e-300)
    _project_out(W, Q)
    weak = np.linalg.norm(W, axis=0) < 1e-8 * before
    if weak.any():
        X = rng.standard_normal((W.shape[0], int(weak.sum())))
        _project_out(X, Q)
        W[:, weak] = X
    V, R = np.linalg.qr(W)
    diag = np.abs(np.diag(R))
    bad = diag < 1e-8 * max(diag.max(initial=0.0), 1e-300)
    if bad.any():
        V[:, bad] = rng.standard_normal((W.shape[0], int(bad.sum())))
    _project_out(V, Q)
    V, _ = np.linalg.qr(V)
    return V


def block_lanczos(
    matvec: Callable[[np.ndarray], np.ndarray],
    dim: int,
    k: int,
    *,
    block: int | None = None,
    tol: float = 1e-10,
    max_basis: int | None = None,
    keep: int | None = None,
    max_restarts: int = 60,
    seed: int = 0,
    start: np.ndarray | None = None,
    check_every: int = 8,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a symmetric operator given only its action on blocks.

    Each cycle grows a block Krylov basis with full reorthogonalization and
    extracts Ritz pairs from the projected matrix.  On restart the ``keep``
    lowest Ritz vectors stay in the basis and growth continues from their
    residual block.  Stops when every wanted residual, recomputed with a
    fresh product, is below ``tol`` (absolute).  Returns
    ``(values, vectors, residual_norms)``.
    """
    b = max(block or k + 2, k)
    if b > dim:
        raise ValueError("block size exceeds operator dimension")
    m_max = min(dim, max_basis or max(30 * b, 150))
    p = max(b, min(keep or 3 * b, m_max - b))
    rng = np.random.default_rng(seed)

    Q = np.empty((dim, m_max), order="F")
    AQ = np.empty((dim, m_max), order="F")
    X = rng.standard_normal((dim, b))
    if start is not None:
        start = np.atleast_2d(np.asarray(start, dtype=float).T).T
        c = min(start.shape[1], b)
        X[:, :c] = start[:, :c] + 1e-3 * X[:, :c] / np.sqrt(dim)
    Q[:, :b] = _orthonormalize(X, Q[:, :0], rng)
    AQ[:, :b] = matvec(Q[:, :b])
    grow = AQ[:, :b]
    size = b
    residuals = np.full(k, np.inf)
    for cycle in range(max_restarts):
        steps = 0
        while True:
            full = size + b > m_max
            if full or steps % check_every == check_every - 1:
                T = Q[:, :size].T @ AQ[:, :size]
                theta, S = np.linalg.eigh(0.5 * (T + T.T))
                Y = Q[:, :size] @ S[:, :b]
                est = np.linalg.norm(AQ[:, :size] @ S[:, :b] - Y * theta[:b], axis=0)
                residuals = est[:k]
                if np.all(est[:k] <= tol):
                    true = np.linalg.norm(matvec(Y[:, :k]) - Y[:, :k] * theta[:k], axis=0)
                    residuals = true
                    if np.all(true <= tol):
                        logger.debug("block lanczos converged: cycle %d basis %d", cycle, size)
                        return theta[:k].copy(), Y[:, :k].copy(), true
                if full:
                    break
            new = _orthonormalize(np.array(grow), Q[:, :size], rng)
            Q[:, size : size + b] = new
            AQ[:, size : size + b] = matvec(new)
            grow = AQ[:, size : size + b]
            size += b
            steps += 1
        logger.debug("block lanczos restart %d residuals %s", cycle, residuals)
        kc = min(p, size)
        Yk = _orthonormalize(Q[:, :size] @ S[:, :kc], Q[:, :0], rng)
        AYk = matvec(Yk)
        Tk = Yk.T @ AYk
        th, Sk = np.linalg.eigh(0.5 * (Tk + Tk.T))
        Q[:, :kc] = Yk @ Sk
        AQ[:, :kc] = AYk @ Sk
        grow = AQ[:, :b] - Q[:, :b] * th[:b]
        size = kc
    raise EigensolverError(
        f"block Lanczos did not converge after {max_restarts} restarts "
        f"(residuals {residuals.tolist()}, tol {tol})",
        residuals=residuals.tolist(),
    )
