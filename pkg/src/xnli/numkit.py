"""Deterministic numeric kernels used throughout the package.

Everything works in float64. Randomness comes from ``make_rng`` (numpy's
PCG64 bit generator) so a seed fixes every stream.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import (
    ConvergenceFailure,
    EmptyInput,
    EmptyVector,
    NonFiniteValue,
    RankTooLarge,
    ShapeMismatch,
)


# ---------------------------------------------------------------------------
# randomness

def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; identical seeds give identical streams."""
    return np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))


def derive_seed(seed: int, component: str) -> int:
    """Per-component seed: sha256 of ``"<component>:<seed>"``, first 8 bytes, big-endian, masked to 63 bits.

    Adding a component never changes the stream of another.
    """
    digest = hashlib.sha256(f"{component}:{int(seed)}".encode()).digest()
    return int.from_bytes(digest[:8], "big") & (2**63 - 1)


# ---------------------------------------------------------------------------
# least squares

class LstsqResult(NamedTuple):
    W: np.ndarray
    rank: int
    ridge: bool
    lam: float


def solve_least_squares(X, Z, rcond: float | None = None) -> LstsqResult:
    """Minimise ||XW - Z||_F via column-pivoted QR.

    If X is numerically rank deficient a ridge term
    lam = 1e-6 * trace(X'X) / p is added and ``ridge`` is set.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Z = np.asarray(Z, dtype=np.float64)
    squeeze = Z.ndim == 1
    if squeeze:
        Z = Z[:, None]
    n, p = X.shape
    if n == 0 or p == 0:
        raise EmptyInput("least squares needs at least one row and column")
    if Z.shape[0] != n:
        raise ShapeMismatch(f"X has {n} rows but Z has {Z.shape[0]}")

    Q, R, perm = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if rcond is None:
        rcond = max(n, p) * np.finfo(np.float64).eps
    rank = int(np.sum(diag > rcond * diag[0])) if diag.size and diag[0] > 0 else 0

    if rank == p:
        W = np.empty((p, Z.shape[1]))
        W[perm] = scipy.linalg.solve_triangular(R, Q.T @ Z)
        return LstsqResult(W[:, 0] if squeeze else W, rank, False, 0.0)

    # ridge: min ||XW - Z||^2 + lam ||W||^2 as an augmented least-squares problem
    lam = 1e-6 * float(np.sum(X * X)) / p
    if lam == 0.0:
        lam = 1e-6
    Xa = np.vstack([X, np.sqrt(lam) * np.eye(p)])
    Za = np.vstack([Z, np.zeros((p, Z.shape[1]))])
    Qa, Ra = np.linalg.qr(Xa)
    W = scipy.linalg.solve_triangular(Ra, Qa.T @ Za)
    return LstsqResult(W[:, 0] if squeeze else W, rank, True, lam)


# ---------------------------------------------------------------------------
# SVD

class SVDResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray
    iterations: int


def _orth(A: np.ndarray) -> np.ndarray:
    Q, _ = np.linalg.qr(A)
    return Q


def truncated_svd(M, k: int, max_iter: int = 1000, tol: float = 1e-10,
                  oversample: int = 10, seed: int = 0) -> SVDResult:
    """Top-k singular triplets by block subspace iteration with Rayleigh-Ritz.

    M may be dense or scipy.sparse. The iteration runs on the smaller side
    (M M' when rows <= cols, else M' M) from a Gaussian start block drawn
    from ``seed``, and stops once the leading k Ritz values change by less
    than ``tol`` relative to the largest. A final Rayleigh-Ritz step on the
    converged block gives the singular triplets.

    Convergence is tested on the squared values (eigenvalues of the
    projected Gram matrix) so that zero singular values inside the top k do
    not stall the test on rounding noise.
    """
    if sp.issparse(M):
        M = M.tocsr().astype(np.float64)
    else:
        M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    m, n = M.shape
    if k < 1 or k > min(m, n):
        raise RankTooLarge(f"rank {k} outside [1, {min(m, n)}] for a {m}x{n} matrix")
    if m > n:
        res = truncated_svd(M.T, k, max_iter, tol, oversample, seed)
        return SVDResult(res.V, res.S, res.U, res.iterations)

    Mt = M.T.tocsr() if sp.issparse(M) else M.T
    b = min(k + oversample, m)
    rng = make_rng(seed)
    Q = _orth(np.asarray(M @ rng.standard_normal((n, b))))
    prev = None
    it = 0
    if b < m:
        for it in range(1, max_iter + 1):
            Y = np.asarray(M @ np.asarray(Mt @ Q))
            T = Q.T @ Y
            lam = np.sort(np.linalg.eigvalsh((T + T.T) / 2))[::-1][:k]
            Q = _orth(Y)
            if prev is not None and np.max(np.abs(lam - prev)) <= tol * max(lam[0], np.finfo(float).tiny):
                break
            prev = lam
        else:
            raise ConvergenceFailure(f"truncated_svd did not reach tol={tol} in {max_iter} iterations")

    # Rayleigh-Ritz: M ~= Q B with B = Q' M
    B = np.asarray(Mt @ Q).T
    Ub, S, Vbt = np.linalg.svd(B, full_matrices=False)
    S = S[:k]
    U = Q @ Ub[:, :k]
    V = Vbt[:k].T
    # sign convention: largest-magnitude entry of each V column is positive
    flip = np.sign(V[np.argmax(np.abs(V), axis=0), np.arange(k)])
    flip[flip == 0] = 1.0
    return SVDResult(U * flip, S.copy(), V * flip, it)


def jacobi_svd(A, sweeps: int = 60, tol: float = 1e-15):
    """One-sided Jacobi (Hestenes) SVD of a dense matrix, kept as a reference oracle.

    Returns U (m x r), S (r, descending), V (n x r) with r = min(m, n).
    """
    A = np.array(A, dtype=np.float64)
    transposed = A.shape[0] < A.shape[1]
    if transposed:
        A = A.T
    m, n = A.shape
    U = A.copy()
    V = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                ui, uj = U[:, i], U[:, j]
                alpha = ui @ ui
                beta = uj @ uj
                gamma = ui @ uj
                if alpha == 0.0 or beta == 0.0:
                    continue
                c_ij = abs(gamma) / np.sqrt(alpha * beta)
                off = max(off, c_ij)
                if c_ij < tol:
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.sign(zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta)) if zeta != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                U[:, [i, j]] = np.column_stack([c * ui - s * uj, s * ui + c * uj])
                V[:, [i, j]] = np.column_stack([c * V[:, i] - s * V[:, j], s * V[:, i] + c * V[:, j]])
        if off < tol:
            break
    S = np.linalg.norm(U, axis=0)
    order = np.argsort(-S, kind="stable")
    S = S[order]
    V = V[:, order]
    U = U[:, order]
    nz = S > 0
    U[:, nz] /= S[nz]
    if transposed:
        U, V = V, U
    return U, S, V


# ---------------------------------------------------------------------------
# small kernels

def softmax(v, axis: int = -1) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        raise EmptyVector("softmax of an empty vector")
    z = np.exp(v - np.max(v, axis=axis, keepdims=True))
    return z / np.sum(z, axis=axis, keepdims=True)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return -np.logaddexp(0.0, -x)


def grad_check(f: Callable[[np.ndarray], float], grad: Callable[[np.ndarray], np.ndarray],
               x0, eps: float = 1e-4) -> float:
    """Max relative error between ``grad(x0)`` and a central-difference estimate.

    Per coordinate: |g - g_fd| / max(1e-8, |g| + |g_fd|).
    """
    x0 = np.array(x0, dtype=np.float64)
    g = np.asarray(grad(x0.copy()), dtype=np.float64).reshape(x0.shape)
    if not np.all(np.isfinite(g)):
        raise NonFiniteValue("analytic gradient is not finite")
    flat = x0.reshape(-1)
    fd = np.empty(flat.size)
    for i in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += eps
        xm[i] -= eps
        fp = float(f(xp.reshape(x0.shape)))
        fm = float(f(xm.reshape(x0.shape)))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NonFiniteValue(f"f is not finite near coordinate {i}")
        fd[i] = (fp - fm) / (2.0 * eps)
    g = g.reshape(-1)
    err = np.abs(g - fd) / np.maximum(1e-8, np.abs(g) + np.abs(fd))
    return float(err.max()) if err.size else 0.0


# ---------------------------------------------------------------------------
# optimizers

@dataclass
class Optimizer:
    """Plain SGD or Adagrad over a dict of named parameter arrays (updated in place)."""

    kind: str = "adagrad"
    learning_rate: float = 0.05
    epsilon: float = 1e-8
    state: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("sgd", "adagrad"):
            raise ValueError(f"unknown optimizer {self.kind!r}")

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        for name, g in grads.items():
            p = params[name]
            if p.shape != g.shape:
                raise ShapeMismatch(f"{name}: params {p.shape} vs grads {g.shape}")
            if self.kind == "sgd":
                p -= self.learning_rate * g
            else:
                acc = self.state.get(name)
                if acc is None:
                    acc = self.state[name] = np.zeros_like(p)
                acc += g * g
                p -= self.learning_rate * g / (np.sqrt(acc) + self.epsilon)
        return params


def optimizer_step(opt: Optimizer, params, grads):
    """Functional wrapper for single arrays or dicts of arrays."""
    if isinstance(params, dict):
        return opt.step(params, grads)
    p = np.array(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape:
        raise ShapeMismatch(f"params {p.shape} vs grads {g.shape}")
    return opt.step({"_": p}, {"_": g})["_"]
