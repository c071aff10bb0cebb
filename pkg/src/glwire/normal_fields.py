"""Normal-state fields of the wire and the regions derived from them.

The normal state carries no superconducting electrons: its magnetic field
B_n is harmonic with tangential derivative J along the boundary, and its
electric potential phi_n is the harmonic conjugate, with Neumann data -J.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage
from scipy.spatial import cKDTree
from skimage import measure

from .domain import CurrentProfile, DomainSpec, Grid, boundary_portion_length
from .errors import CompatibilityError
from .solvers import (CellDirichletPoisson, DirichletPoisson, NeumannPoisson,
                      check_residual, laplacian_cells, laplacian_dirichlet_interior,
                      laplacian_neumann)

SOLVE_TOL = 1e-10


@dataclass
class NormalFields:
    Bn: np.ndarray
    phin: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    Bp: np.ndarray  # B_n at plaquette centres
    h1: float
    h2: float
    h_ex: float

    @property
    def h(self) -> float:
        return max(abs(self.h1), abs(self.h2))

    @property
    def sign_condition(self) -> bool:
        return self.h1 * self.h2 < 0


# ------------------------------------------------------------------ B_n

def boundary_trace(domain: DomainSpec, grid: Grid, J: CurrentProfile, h_ex: float) -> np.ndarray:
    """B_n on the boundary walk: cumulative trapezoid of J, shifted to mean h_ex."""
    jb, jt = J.on_grid(grid)
    bi, bj = grid.bnd_i, grid.bnd_j
    i0, j0 = bi, bj
    i1, j1 = np.roll(bi, -1), np.roll(bj, -1)
    on_bottom = (j0 == 0) & (j1 == 0)
    on_top = (j0 == grid.ny - 1) & (j1 == grid.ny - 1)
    f0 = np.zeros(len(bi))
    f1 = np.zeros(len(bi))
    f0[on_bottom], f1[on_bottom] = jb[i0[on_bottom]], jb[i1[on_bottom]]
    f0[on_top], f1[on_top] = jt[i0[on_top]], jt[i1[on_top]]
    steps = 0.5 * grid.h * (f0 + f1)
    trace = np.concatenate([[0.0], np.cumsum(steps[:-1])])
    # the walk is closed and uniformly spaced, so the periodic trapezoid
    # mean is the plain mean over the walk nodes
    return trace - trace.mean() + h_ex


def solve_Bn(domain: DomainSpec, grid: Grid, J: CurrentProfile, h_ex: float) -> np.ndarray:
    """Harmonic extension of the integrated boundary trace."""
    trace = boundary_trace(domain, grid, J, h_ex)
    bnd = np.zeros(grid.shape)
    # extend the deviation from h_ex so that J = 0 gives B_n = h_ex exactly
    bnd[grid.bnd_i, grid.bnd_j] = trace - h_ex
    solver = DirichletPoisson(grid.nx, grid.ny, grid.h)
    B = solver.solve(np.zeros((grid.nx - 2, grid.ny - 2)), bnd) + h_ex
    res = np.abs(laplacian_dirichlet_interior(B, grid.h)).max() * grid.h ** 2
    check_residual(res, np.abs(trace).max(), SOLVE_TOL, "B_n Laplace solve")
    return B


# ---------------------------------------------------------------- phi_n

def contact_flux(grid: Grid, J: CurrentProfile) -> np.ndarray:
    """Per-node integral of J over the node's share of the contacts.

    Corner nodes take the contact-side value over half a cell; the
    insulating side contributes nothing.
    """
    jb, jt = J.on_grid(grid)
    w = np.full(grid.nx, grid.h)
    w[[0, -1]] = 0.5 * grid.h
    q = np.zeros(grid.shape)
    q[:, 0] = jb * w
    q[:, -1] = jt * w
    return q


def face_values(grid: Grid, Bn: np.ndarray) -> dict:
    """B_n at the midpoints of the boundary faces, side by side.

    ``bottom``/``top`` are indexed by i (face between x_i and x_i+1),
    ``left``/``right`` by j.
    """
    return {"bottom": 0.5 * (Bn[:-1, 0] + Bn[1:, 0]), "top": 0.5 * (Bn[:-1, -1] + Bn[1:, -1]),
            "left": 0.5 * (Bn[0, :-1] + Bn[0, 1:]), "right": 0.5 * (Bn[-1, :-1] + Bn[-1, 1:])}


def trace_flux(grid: Grid, Bn: np.ndarray) -> np.ndarray:
    """Per-node increment of the boundary trace of B_n across the node's share.

    The increment is taken counterclockwise between the two adjacent face
    midpoints.  It integrates the tangential derivative of B_n, i.e. the
    current J, and is the boundary source that makes the potential solve
    the exact divergence of the discrete field equation.
    """
    f = face_values(grid, Bn)
    fb, ft, fl, fr = f["bottom"], f["top"], f["left"], f["right"]
    q = np.zeros(grid.shape)
    q[1:-1, 0] = fb[1:] - fb[:-1]
    q[-1, 1:-1] = fr[1:] - fr[:-1]
    q[1:-1, -1] = ft[:-1] - ft[1:]
    q[0, 1:-1] = fl[:-1] - fl[1:]
    q[0, 0] = fb[0] - fl[0]
    q[-1, 0] = fr[0] - fb[-1]
    q[-1, -1] = ft[-1] - fr[-1]
    q[0, -1] = fl[-1] - ft[0]
    return q


def solve_neumann_with_flux(grid: Grid, source: np.ndarray, flux: np.ndarray,
                            solver: NeumannPoisson | None = None,
                            rtol: float = 1e-10) -> np.ndarray:
    """Solve lap(u) = source with per-node outward normal flux integrals.

    ``flux`` holds the integral of du/dnu over each node's boundary share.
    Raises CompatibilityError if total source and flux do not balance.
    """
    V = grid.node_weights()
    total = float((V * source).sum() - flux.sum())
    scale = float((V * np.abs(source)).sum() + np.abs(flux).sum())
    if abs(total) > rtol * max(scale, 1e-300) and scale > 0:
        raise CompatibilityError(f"Neumann data do not balance: net {total:.3e}")
    solver = solver or NeumannPoisson(grid.nx, grid.ny, grid.h)
    rhs = source - flux / V
    rhs = rhs - solver.mean(rhs)
    u = solver.solve(rhs)
    return u - solver.mean(u)


def solve_phin(domain: DomainSpec, grid: Grid, J: CurrentProfile,
               rtol: float = 1e-10, Bn: np.ndarray | None = None) -> np.ndarray:
    """Zero-mean potential with outward normal derivative -J.

    With ``Bn`` given, the per-node boundary flux is taken from the trace of
    B_n (see ``trace_flux``); otherwise J is integrated directly.
    """
    q = contact_flux(grid, J)
    jmax = np.abs(q).max() / grid.h if q.any() else 0.0
    net = q.sum()
    if abs(net) > rtol * max(jmax, 1e-300) * domain.contact_length:
        raise CompatibilityError(f"current does not integrate to zero: {net:.3e}")
    if Bn is not None:
        q = trace_flux(grid, Bn)
    solver = NeumannPoisson(grid.nx, grid.ny, grid.h)
    V = grid.node_weights()
    rhs = q / V  # -(-J) integrated, moved to the right-hand side
    rhs = rhs - solver.mean(rhs)
    phi = solver.solve(rhs)
    phi -= solver.mean(phi)
    res = np.abs(laplacian_neumann(phi, grid.h) - rhs).max() * grid.h ** 2
    check_residual(res, np.abs(phi).max(), SOLVE_TOL, "phi_n Neumann solve")
    return phi


# ---------------------------------------------------------------- A_n

def stream_links(grid: Grid, chi: np.ndarray):
    """Links of the perpendicular gradient (-d_y chi, d_x chi) of a cell field.

    The cell field vanishes on the boundary (odd ghosts), so the result is
    weighted-divergence free with no flux through the boundary.
    """
    h = grid.h
    p = np.pad(chi, 1, mode="constant")
    p[0, :], p[-1, :] = -p[1, :], -p[-2, :]
    p[:, 0], p[:, -1] = -p[:, 1], -p[:, -2]
    ax = -(p[1:-1, 1:] - p[1:-1, :-1]) / h
    ay = (p[1:, 1:-1] - p[:-1, 1:-1]) / h
    return ax, ay


def recover_An(grid: Grid, Bn: np.ndarray):
    """Divergence-free links whose plaquette curl equals B_n at the centres."""
    Bp = grid.to_plaquettes_from_nodes(Bn)
    solver = CellDirichletPoisson(grid.nx - 1, grid.ny - 1, grid.h)
    chi = solver.solve(Bp)
    res = np.abs(laplacian_cells(chi, grid.h) - Bp).max()
    check_residual(res, np.abs(Bp).max(), SOLVE_TOL, "stream function solve")
    return stream_links(grid, chi)


# ------------------------------------------------------- discrete calculus

def curl(grid: Grid, ax: np.ndarray, ay: np.ndarray) -> np.ndarray:
    """Plaquette circulation divided by the plaquette area."""
    return (ay[1:, :] - ay[:-1, :] - ax[:, 1:] + ax[:, :-1]) / grid.h


def divergence(grid: Grid, ax: np.ndarray, ay: np.ndarray) -> np.ndarray:
    """Finite-volume divergence on dual cells, assuming no boundary flux.

    On boundary nodes this measures the normal trace of the field.
    """
    Wx, Wy = grid.link_weights()
    V = grid.node_weights()
    fx = Wx * ax / grid.h
    fy = Wy * ay / grid.h
    out = np.zeros(grid.shape)
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out / V


def gradient(grid: Grid, f: np.ndarray):
    return (f[1:, :] - f[:-1, :]) / grid.h, (f[:, 1:] - f[:, :-1]) / grid.h


def compute_normal_fields(domain: DomainSpec, grid: Grid, J: CurrentProfile,
                          h_ex: float) -> NormalFields:
    Bn = solve_Bn(domain, grid, J, h_ex)
    phin = solve_phin(domain, grid, J, Bn=Bn)
    ax, ay = recover_An(grid, Bn)
    h1, h2 = trace_hj(domain, grid, Bn)
    return NormalFields(Bn, phin, ax, ay, grid.to_plaquettes_from_nodes(Bn), h1, h2, float(h_ex))


# ------------------------------------------------------------------ h_j

def trace_hj(domain: DomainSpec, grid: Grid, Bn: np.ndarray, frac: float = 0.5):
    """B_n read off the insulating sides at fraction ``frac`` of their height."""
    yq = frac * domain.Ly
    return (float(np.interp(yq, grid.y, Bn[0, :])),
            float(np.interp(yq, grid.y, Bn[-1, :])))


def hj_formula(domain: DomainSpec, J: CurrentProfile, h_ex: float, s_j: float) -> float:
    """Boundary constant at arclength s_j from the weighted current integral.

    The weight is the length of the boundary arc running counterclockwise
    from the integration point to s_j.
    """
    P = domain.perimeter

    def integrand(s):
        return boundary_portion_length(domain, s % P, s_j) * float(J.at_arclength(domain, s))

    total = 0.0
    for seg in domain.contact_segments:
        val, _ = integrate.quad(integrand, seg.s_start, seg.s_end * (1 - 1e-15),
                                epsabs=1e-14, epsrel=1e-13, limit=400)
        total += val
    return h_ex - total / P


@dataclass
class HjReport:
    formula: tuple
    trace: tuple | None
    spread: tuple  # max deviation across sample points on each side
    h: float
    sign_condition: bool
    samples: dict = field(default_factory=dict)

    @property
    def discrepancy(self) -> float | None:
        if self.trace is None:
            return None
        return max(abs(a - b) for a, b in zip(self.formula, self.trace))


def compute_hj(domain: DomainSpec, J: CurrentProfile, h_ex: float,
               grid: Grid | None = None, Bn: np.ndarray | None = None) -> HjReport:
    """Contact constants from the integral formula, and from B_n if a grid is given.

    The formula is evaluated at the midpoint of each insulating side and at
    the quarter points; ``spread`` records how far those disagree.
    """
    formula, spread, samples = [], [], {}
    for comp in (1, 2):
        seg = [g for g in domain.insulator_segments if g.component == comp][0]
        pts = [seg.s_start + f * seg.length for f in (0.25, 0.5, 0.75)]
        vals = [hj_formula(domain, J, h_ex, s) for s in pts]
        samples[comp] = vals
        formula.append(vals[1])
        spread.append(max(vals) - min(vals))
    trace = None
    if grid is not None:
        if Bn is None:
            Bn = solve_Bn(domain, grid, J, h_ex)
        trace = trace_hj(domain, grid, Bn)
    h = max(abs(formula[0]), abs(formula[1]))
    return HjReport(tuple(formula), trace, tuple(spread), h,
                    formula[0] * formula[1] < 0, samples)


def conjugacy_residual(Bn: np.ndarray, phin: np.ndarray, h: float = 1.0) -> float:
    """Max over interior nodes of the Cauchy-Riemann defect of (phi_n, B_n).

    The curl-curl relation (d_y B, -d_x B) = -grad phi gives the pair
    d_x phi + d_y B = 0 and d_y phi - d_x B = 0.
    """
    dxp = (phin[2:, 1:-1] - phin[:-2, 1:-1]) / (2 * h)
    dyp = (phin[1:-1, 2:] - phin[1:-1, :-2]) / (2 * h)
    dxb = (Bn[2:, 1:-1] - Bn[:-2, 1:-1]) / (2 * h)
    dyb = (Bn[1:-1, 2:] - Bn[1:-1, :-2]) / (2 * h)
    r = np.abs(dxp + dyb) + np.abs(dyp - dxb)
    return float(r.max()) if r.size else 0.0


def min_grad_Bn(Bn: np.ndarray, h: float = 1.0) -> float:
    gx, gy = np.gradient(Bn, h)
    return float(np.hypot(gx, gy).min())


# -------------------------------------------------------------- regions

@dataclass
class RegionMasks:
    delta: float
    omega: dict
    S_delta: np.ndarray
    S_delta_j: dict
    omega_delta: dict
    C_delta: dict
    Gamma_delta: dict
    dist_to_C: dict
    dist_to_Gamma: dict
    n_components_S: int

    def empty(self, name: str, j: int | None = None) -> bool:
        m = getattr(self, name)
        if j is not None:
            m = m[j]
        return not np.any(m) if isinstance(m, np.ndarray) and m.dtype == bool else len(m) == 0


def _contour_points(field_: np.ndarray, level: float, h: float) -> np.ndarray:
    if not (field_.min() < level < field_.max()):
        return np.zeros((0, 2))
    lines = measure.find_contours(field_, level)
    if not lines:
        return np.zeros((0, 2))
    return np.vstack(lines) * h


def _distance_to(points: np.ndarray, grid: Grid) -> np.ndarray:
    if len(points) == 0:
        return np.full(grid.shape, np.inf)
    X, Y = grid.mesh()
    d, _ = cKDTree(points).query(np.column_stack([X.ravel(), Y.ravel()]))
    return d.reshape(grid.shape)


def insulator_distance(grid: Grid) -> np.ndarray:
    X, _ = grid.mesh()
    return np.minimum(X, grid.x[-1] - X)


def extract_regions(Bn: np.ndarray, delta: float, grid: Grid) -> RegionMasks:
    """Threshold regions of B_n and distances to their interior boundaries."""
    level = 1.0 + delta
    omega = {1: -Bn > 1.0, 2: Bn > 1.0}
    S1 = -Bn >= level
    S2 = Bn >= level
    S = S1 | S2
    dins = insulator_distance(grid)
    omega_d = {1: S1 & (dins > delta), 2: S2 & (dins > delta)}
    C, G, dC, dG = {}, {}, {}, {}
    for j, sgn in ((1, -1.0), (2, 1.0)):
        C[j] = _contour_points(sgn * Bn, level, grid.h)
        g = np.minimum(sgn * Bn - level, dins - delta)
        G[j] = _contour_points(g, 0.0, grid.h)
        dC[j] = _distance_to(C[j], grid)
        dG[j] = _distance_to(G[j], grid)
    _, ncomp = ndimage.label(S)
    return RegionMasks(delta, omega, S, {1: S1, 2: S2}, omega_d, C, G, dC, dG, int(ncomp))


def field_region_mask(B_nodes: np.ndarray, kappa: float, delta: float) -> np.ndarray:
    """Nodes where |B| exceeds (1 + delta) * kappa."""
    return np.abs(B_nodes) > (1.0 + delta) * kappa
