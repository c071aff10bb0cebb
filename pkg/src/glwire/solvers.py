"""Linear solvers shared by the field, spectral and time-stepping modules.

Rectangle Poisson problems are diagonalised by real trig transforms:
node-centred Neumann (mirror ghosts) by DCT-I, node-centred Dirichlet by
DST-I and cell-centred Dirichlet (odd ghosts) by DST-II.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import fft

from .errors import EigSolveError, LinearSolveError


def _symbols(n: int, h: float, kind: str) -> np.ndarray:
    if kind == "neumann":
        k = np.arange(n)
        return (2.0 * np.cos(np.pi * k / (n - 1)) - 2.0) / (h * h)
    if kind == "dirichlet":
        k = np.arange(1, n + 1)
        return (2.0 * np.cos(np.pi * k / (n + 1)) - 2.0) / (h * h)
    if kind == "cell":
        k = np.arange(1, n + 1)
        return (2.0 * np.cos(np.pi * k / n) - 2.0) / (h * h)
    raise ValueError(kind)


def laplacian_neumann(u: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian with mirror ghosts on all four sides."""
    p = np.pad(u, 1, mode="reflect")
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * u) / (h * h)


def laplacian_cells(u: np.ndarray, h: float) -> np.ndarray:
    """Cell-centred Laplacian with odd ghosts (zero on the boundary)."""
    p = np.pad(u, 1, mode="constant")
    p[0, :], p[-1, :] = -p[1, :], -p[-2, :]
    p[:, 0], p[:, -1] = -p[:, 1], -p[:, -2]
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * u) / (h * h)


def laplacian_dirichlet_interior(u: np.ndarray, h: float) -> np.ndarray:
    """Five-point Laplacian at interior nodes of a full node array."""
    return (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
            - 4.0 * u[1:-1, 1:-1]) / (h * h)


class NeumannPoisson:
    """Solve lap(u) = f with mirror-ghost Neumann conditions.

    The right-hand side is projected onto zero trapezoid mean and the
    returned solution has zero trapezoid mean.
    """

    def __init__(self, nx: int, ny: int, h: float):
        self.shape = (nx, ny)
        self.h = h
        lam = _symbols(nx, h, "neumann")[:, None] + _symbols(ny, h, "neumann")[None, :]
        lam[0, 0] = 1.0
        self._inv = 1.0 / lam
        self._inv[0, 0] = 0.0
        wx = np.ones(nx)
        wx[[0, -1]] = 0.5
        wy = np.ones(ny)
        wy[[0, -1]] = 0.5
        self.weights = np.outer(wx, wy)

    def mean(self, f: np.ndarray) -> float:
        return float((self.weights * f).sum() / self.weights.sum())

    def solve(self, f: np.ndarray) -> np.ndarray:
        F = fft.dctn(f, type=1)
        return fft.idctn(F * self._inv, type=1)


class DirichletPoisson:
    """Solve lap(u) = f at interior nodes with prescribed boundary values."""

    def __init__(self, nx: int, ny: int, h: float):
        self.shape = (nx, ny)
        self.h = h
        lam = _symbols(nx - 2, h, "dirichlet")[:, None] + _symbols(ny - 2, h, "dirichlet")[None, :]
        self._inv = 1.0 / lam

    def solve(self, f_interior: np.ndarray, boundary: np.ndarray | None = None) -> np.ndarray:
        nx, ny = self.shape
        h2 = self.h * self.h
        u = np.zeros((nx, ny)) if boundary is None else np.array(boundary, dtype=float)
        u[1:-1, 1:-1] = 0.0
        rhs = np.array(f_interior, dtype=float)
        rhs[0, :] -= u[0, 1:-1] / h2
        rhs[-1, :] -= u[-1, 1:-1] / h2
        rhs[:, 0] -= u[1:-1, 0] / h2
        rhs[:, -1] -= u[1:-1, -1] / h2
        F = fft.dstn(rhs, type=1)
        u[1:-1, 1:-1] = fft.idstn(F * self._inv, type=1)
        return u


class CellDirichletPoisson:
    """Solve the cell-centred lap(u) = f with u = 0 on the boundary."""

    def __init__(self, mx: int, my: int, h: float):
        self.shape = (mx, my)
        self.h = h
        lam = _symbols(mx, h, "cell")[:, None] + _symbols(my, h, "cell")[None, :]
        self._inv = 1.0 / lam

    def solve(self, f: np.ndarray) -> np.ndarray:
        return fft.idstn(fft.dstn(f, type=2) * self._inv, type=2)


def check_residual(res: float, scale: float, tol: float, what: str) -> None:
    if not np.isfinite(res) or res > tol * max(scale, 1.0):
        raise LinearSolveError(f"{what}: residual {res:.3e} above tolerance {tol:.1e}")


# ------------------------------------------------------------ eigenproblems

@dataclass
class EigResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


def inverse_iteration(K: sp.spmatrix, mass=None, *, shift: float = 0.0,
                      tol: float = 1e-8, maxiter: int = 500, seed: int = 0,
                      v0: np.ndarray | None = None) -> EigResult:
    """Lowest eigenpair of the Hermitian pencil K u = lam * M u.

    ``mass`` is None (identity), a positive vector (diagonal M) or a sparse
    positive definite matrix.  Shifted inverse power iteration with a sparse
    LU factorisation; after the Rayleigh quotient settles the shift is moved
    just below it to speed up convergence.  The residual is
    ||K u - lam M u|| / ||M u||, required to fall below tol * max(1, |lam|).
    """
    n = K.shape[0]
    if n == 0:
        raise EigSolveError("empty operator")
    if mass is None or not sp.issparse(mass):
        m = np.ones(n) if mass is None else np.asarray(mass, dtype=float)
        s = 1.0 / np.sqrt(m)
        S = sp.diags(s)
        H = (S @ K @ S).tocsc()
        M = sp.identity(n, format="csc")
    else:
        s = None
        H = sp.csc_matrix(K)
        M = sp.csc_matrix(mass)
    cplx = np.iscomplexobj(H.data)
    dtype = complex if cplx else float
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) if v0 is None else np.asarray(v0, dtype=dtype).copy()
    v = v.astype(dtype)

    def mnorm(x):
        return np.sqrt(abs(np.vdot(x, M @ x)))

    v /= mnorm(v)

    def factor(sig):
        try:
            return spla.splu((H - sig * M).tocsc())
        except RuntimeError as exc:  # exactly singular shift
            raise EigSolveError(str(exc)) from exc

    sigma = shift
    lu = factor(sigma)
    lam_old = np.inf
    refined = False
    res = np.inf
    for it in range(1, maxiter + 1):
        w = lu.solve(M @ v)
        nw = mnorm(w)
        if not np.isfinite(nw) or nw == 0:
            raise EigSolveError("inverse iteration broke down")
        v = w / nw
        Hv = H @ v
        Mv = M @ v
        lam = float(np.real(np.vdot(v, Hv)))
        res = float(np.linalg.norm(Hv - lam * Mv) / np.linalg.norm(Mv))
        if res <= tol * max(1.0, abs(lam)):
            vec = v if s is None else s * v
            return EigResult(lam, vec, res, it)
        if not refined and abs(lam - lam_old) < 1e-3 * max(abs(lam), 1e-12):
            # shift just below the current estimate
            gap = max(1e-2 * abs(lam), 1e-8)
            sigma = lam - gap
            lu = factor(sigma)
            refined = True
        lam_old = lam
    raise EigSolveError(f"no convergence after {maxiter} iterations (residual {res:.2e})")
