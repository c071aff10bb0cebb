"""Post-processing of converged or recorded states: decay fits, sweeps and bounds.

Everything here is deterministic given its inputs.  Masks and distance
fields come from ``normal_fields.extract_regions`` or are built from a
solved field; psi is never evaluated off the grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage, stats
from scipy.spatial import cKDTree

from .domain import Grid
from .errors import DegenerateFit, EmptyRegion, InsufficientHorizon, LinearSolveError, ZeroOrderParameter
from .normal_fields import NormalFields, RegionMasks, field_region_mask

MIN_FIT_POINTS = 20
LOG_FLOOR = 1e-300


# ---------------------------------------------------------------- fitting

@dataclass
class DecayFit:
    slope: float  # |psi| ~ exp(-slope * d)
    intercept: float
    r_squared: float
    region_id: object
    n_points: int
    distance_range: tuple
    agmon_integral: float = float("nan")
    scaled_integral: float = float("nan")  # agmon_integral * delta^(3/2)
    predicted: float = float("nan")
    ratio: float = float("nan")  # fitted |psi|^2 rate over predicted
    within_tolerance: bool | None = None


def fit_log_decay(rho2: np.ndarray, d: np.ndarray, region_id=None,
                  min_points: int = MIN_FIT_POINTS) -> DecayFit:
    """Least squares of log|psi|^2 against -2 d over the given samples."""
    rho2 = np.asarray(rho2, dtype=float).ravel()
    d = np.asarray(d, dtype=float).ravel()
    keep = (rho2 > LOG_FLOOR) & np.isfinite(d)
    rho2, d = rho2[keep], d[keep]
    if rho2.size < min_points:
        raise EmptyRegion(f"region {region_id}: {rho2.size} usable nodes, need {min_points}")
    if np.ptp(d) == 0.0:
        raise DegenerateFit(f"region {region_id}: all distances equal")
    X = -2.0 * d
    Y = np.log(rho2)
    Xm, Ym = X.mean(), Y.mean()
    sxx = ((X - Xm) ** 2).sum()
    slope = float(((X - Xm) * (Y - Ym)).sum() / sxx)
    intercept = float(Ym - slope * Xm)
    ss_tot = float(((Y - Ym) ** 2).sum())
    ss_res = float(((Y - intercept - slope * X) ** 2).sum())
    # a constant log|psi|^2 has no variance to explain
    r2 = float("nan") if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return DecayFit(slope, intercept, r2, region_id, int(rho2.size), (float(d.min()), float(d.max())))


def agmon_fit(psi: np.ndarray, masks: RegionMasks, region_id: int, kappa: float, delta: float,
              grid: Grid, distance: str = "Gamma") -> DecayFit:
    """Decay of |psi| inside the strong-field region j away from its inner boundary.

    ``distance="Gamma"`` fits over omega_{delta,j} against the distance to
    Gamma_{delta,j}; ``distance="C"`` fits over S_{delta,j} against the
    distance to C_{delta,j}.  The weighted integral of
    exp(delta^(1/2) kappa d) |psi|^2 over the region is returned alongside.
    """
    if distance == "Gamma":
        region, dist = masks.omega_delta[region_id], masks.dist_to_Gamma[region_id]
    elif distance == "C":
        region, dist = masks.S_delta_j[region_id], masks.dist_to_C[region_id]
    else:
        raise ValueError("distance must be 'Gamma' or 'C'")
    if not region.any():
        raise EmptyRegion(f"region {region_id} is empty at delta={delta}")
    rho2 = np.abs(psi) ** 2
    sel = region & (dist > 2.0 * grid.h)
    fit = fit_log_decay(rho2[sel], dist[sel], region_id)
    V = grid.node_weights()
    w = np.where(region, np.exp(np.minimum(math.sqrt(delta) * kappa * dist, 700.0)), 0.0)
    fit.agmon_integral = float((V * w * rho2).sum())
    fit.scaled_integral = fit.agmon_integral * delta ** 1.5
    return fit


def region_mass(psi: np.ndarray, mask: np.ndarray, V: np.ndarray) -> float:
    """Integral of |psi|^2 over a node mask."""
    return float((V * mask * np.abs(psi) ** 2).sum())


def localization_ratio(psi: np.ndarray, mask: np.ndarray, V: np.ndarray) -> float:
    tot = region_mass(psi, np.ones(psi.shape, bool), V)
    if tot == 0.0:
        raise ZeroOrderParameter("psi vanishes identically")
    return region_mass(psi, mask, V) / tot


# ------------------------------------------------------------------ sweeps

@dataclass
class SweepResult:
    parameter: str
    rows: list  # dicts, sorted by the parameter
    exponent: float
    exponent_ci: tuple
    calibration: float
    bound_ok: bool
    monotone_ok: bool
    degenerate: bool
    checks: dict = field(default_factory=dict)

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows], dtype=float)


def loglog_exponent(x, y, level: float = 0.95) -> tuple:
    """Slope of log y against log x with a two-sided confidence interval."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 4:
        return float("nan"), (float("nan"), float("nan"))
    res = stats.linregress(np.log(x[ok]), np.log(y[ok]))
    t = stats.t.ppf(0.5 + level / 2, ok.sum() - 2)
    return float(res.slope), (float(res.slope - t * res.stderr), float(res.slope + t * res.stderr))


def envelope(kappa, c: float) -> np.ndarray:
    """(1 + c^(-1/2))^(1/3) kappa^(-1/6)."""
    return (1.0 + c ** -0.5) ** (1.0 / 3.0) * np.asarray(kappa, float) ** (-1.0 / 6.0)


def kappa_sweep(kappa_list, runner, c: float = 1.0, normal_threshold: float = 0.0,
                rtol: float = 1e-12) -> SweepResult:
    """Run ``runner(kappa) -> dict`` per kappa and test the kappa^(-1/6) bound.

    Each row must carry ``norm2``.  The constant C is calibrated at the
    smallest kappa; the bound then requires norm2 <= C * envelope for every
    larger kappa.  Rows whose norm2 is at or below ``normal_threshold`` are
    normal-like; a sweep made only of such rows is flagged degenerate.
    """
    kappas = sorted(float(k) for k in kappa_list)
    if len(kappas) < 4:
        raise ValueError("a kappa sweep needs at least 4 values")
    rows = []
    for k in kappas:
        row = dict(runner(k))
        row["kappa"] = k
        rows.append(row)
    return summarize_sweep(rows, c, normal_threshold, rtol)


def summarize_sweep(rows: list, c: float = 1.0, normal_threshold: float = 0.0,
                    rtol: float = 1e-12) -> SweepResult:
    rows = sorted(rows, key=lambda r: r["kappa"])
    k = np.array([r["kappa"] for r in rows])
    n2 = np.array([r.get("norm2", np.nan) for r in rows], float)
    good = np.isfinite(n2)
    p, ci = loglog_exponent(k[good], n2[good])
    env = envelope(k, c)
    C = float(n2[0] / env[0]) if good[0] else float("nan")
    bound = bool(np.all(n2[1:][good[1:]] <= C * env[1:][good[1:]] * (1 + rtol))) and good[0]
    mono = bool(np.all(np.diff(n2[good]) <= rtol * np.maximum(n2[good][:-1], 1e-300)))
    degenerate = bool(np.all(n2[good] <= normal_threshold))
    for r, e in zip(rows, env):
        r["bound"] = C * e
    return SweepResult("kappa", rows, p, ci, C, bound, mono, degenerate,
                       {"bound": bound, "monotone": mono})


# ------------------------------------------------------------ time series

@dataclass
class TimeTrack:
    t: np.ndarray
    m: np.ndarray
    limsup: float
    drift: float
    window: tuple


def time_decay_track(t, m, window: float = 0.2, max_drift: float = 0.01,
                     atol: float = 1e-12) -> TimeTrack:
    """Trailing-window maximum of m(t) as a limsup estimate.

    The drift is the spread of m over the trailing ``window`` fraction of
    the samples relative to its maximum there (or to ``atol`` when m has
    decayed below it).  Raises InsufficientHorizon when the drift is at
    least ``max_drift``.
    """
    t = np.asarray(t, float)
    m = np.asarray(m, float)
    if t.size < 5:
        raise InsufficientHorizon("need at least 5 samples")
    start = int(math.floor((1.0 - window) * t.size))
    tail = m[start:]
    top = float(tail.max())
    drift = float(np.ptp(tail)) / max(top, atol)
    if drift >= max_drift:
        raise InsufficientHorizon(f"trailing-window drift {drift:.3g} >= {max_drift}")
    return TimeTrack(t, m, top, drift, (float(t[start]), float(t[-1])))


class MassRecorder:
    """Observer collecting (t, integral of |psi|^2 over a mask) every ``every`` steps."""

    def __init__(self, mask: np.ndarray, V: np.ndarray, every: int = 100):
        self.w = V * mask
        self.every = int(every)
        self.t: list = []
        self.m: list = []

    def record(self, state) -> None:
        self.t.append(state.t)
        self.m.append(float((self.w * (state.psi.real ** 2 + state.psi.imag ** 2)).sum()))

    def __call__(self, state, report) -> None:
        if state.step % self.every == 0:
            self.record(state)


def spread_factor(values) -> float:
    """max/min of a set of positive values (inf if any is zero)."""
    v = np.asarray(values, float)
    if np.any(v <= 0):
        return float("inf")
    return float(v.max() / v.min())


# ---------------------------------------------------------- field on nodes

def node_field(model, state) -> np.ndarray:
    """curl A averaged from plaquettes to nodes; boundary nodes take the
    prescribed trace kappa*B_n."""
    Be = model.extended_curl(state.ax, state.ay)
    B = 0.25 * (Be[:-1, :-1] + Be[1:, :-1] + Be[:-1, 1:] + Be[1:, 1:])
    edge = ~model.grid.interior
    B[edge] = model.kappa * model.nf.Bn[edge]
    return B


def inclusion_check(model, state, delta: float, alpha: float = 0.5) -> dict:
    """Node-wise test of S_{delta + kappa^-alpha} inside D_delta(kappa)."""
    k = model.kappa
    B = node_field(model, state)
    D = field_region_mask(B, k, delta)
    level = 1.0 + delta + k ** -alpha
    S = np.abs(model.nf.Bn) >= level
    bad = S & ~D
    return {"holds": bool(not bad.any()), "violations": int(bad.sum()), "S_nodes": int(S.sum()),
            "level": level}


# ------------------------------------------------------------ large domain

@dataclass
class LargeDomainRun:
    eps: float
    gamma: float
    model: object
    state: object
    report: object
    B_eps: np.ndarray
    delta: float
    D_delta_mask: np.ndarray
    d_delta: float
    d_delta_j: tuple
    w_field: np.ndarray | None = None

    @property
    def grid(self) -> Grid:
        return self.model.grid


def large_domain_params(eps: float, gamma: float, h_ex: float = 0.0):
    """Parameters of the rescaled steady problem on the fixed domain.

    With kappa = 1/eps the rescaled system is the standard discrete system
    with c = 1, supercurrent coupling kappa^2, current -eps^(-gamma) J and
    boundary average field eps^(-gamma) h_ex.  The model's link field is
    A_eps/eps, so B_eps = curl A / kappa.
    """
    from .tdgl import PhysicsParams
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    k = 1.0 / eps
    f = eps ** -gamma
    return PhysicsParams(kappa=k, c=1.0, h_ex=f * h_ex, J_amplitude=-f, coupling=k * k)


def d_delta_from_mask(D: np.ndarray, grid: Grid) -> tuple:
    """Distances of the mask to the two insulating sides and their maximum."""
    if not D.any():
        return float("inf"), (float("inf"), float("inf"))
    xs = grid.x[np.nonzero(D.any(axis=1))[0]]
    d1 = float(xs.min())
    d2 = float(grid.x[-1] - xs.max())
    return max(d1, d2), (d1, d2)


def d_delta_checks(eps, d, slack: float = 0.5) -> dict:
    """Lower bounds on d_delta(eps) with one constant shared by all eps.

    The constant is ``slack`` times the distance at the largest eps; the
    eps-proportional form scales it by eps/eps_max.
    """
    eps, d = np.asarray(eps, float), np.asarray(d, float)
    ok = bool(d.size and np.all(d > 0) and np.isfinite(d).all())
    if not ok:
        return {"d_delta_ge_C_eps": False, "d_delta_ge_C": False, "C": float("nan")}
    C = slack * float(d[np.argmax(eps)])
    return {"d_delta_ge_C_eps": bool(np.all(d >= C * eps / eps.max())),
            "d_delta_ge_C": bool(np.all(d >= C)), "C": C}


def large_domain_run(eps: float, gamma: float, domain, grid, J, delta: float,
                     h_ex: float = 0.0, t_max: float = 2.0, tol: float = 1e-6,
                     initial: str = "taper", dt_factor: float = 0.8, observer=None) -> LargeDomainRun:
    """Solve the rescaled steady system and extract D_delta(eps), d_delta(eps)."""
    from .tdgl import TDGLModel
    params = large_domain_params(eps, gamma, h_ex)
    model = TDGLModel(domain, grid, params, J, dt_factor=dt_factor)
    st0 = model.initial_state(initial)
    st, rep = model.run_to_steady(st0, tol=tol, t_max=t_max, modulus_stop=True, observer=observer)
    return large_domain_from_state(eps, gamma, model, st, rep, delta)


def large_domain_from_state(eps, gamma, model, st, rep, delta) -> LargeDomainRun:
    B_eps = node_field(model, st) / model.kappa
    D = np.abs(B_eps) < delta * eps ** -gamma
    d, dj = d_delta_from_mask(D, model.grid)
    return LargeDomainRun(eps, gamma, model, st, rep, B_eps, delta, D, d, dj)


def _dirichlet_operator(grid: Grid, potential: np.ndarray):
    """-Laplacian + potential on interior nodes (5-point), as CSR."""
    mx, my = grid.nx - 2, grid.ny - 2
    h2 = grid.h ** 2

    def lap1(n):
        return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h2

    K = sp.kron(lap1(mx), sp.identity(my)) + sp.kron(sp.identity(mx), lap1(my))
    return (K + sp.diags(potential[1:-1, 1:-1].ravel())).tocsr()


def w_comparison(run: LargeDomainRun, rtol: float = 1e-10) -> dict:
    """Solve Delta w - |psi|^2 w / eps^2 = 0 with w = B_eps - 1 on the boundary.

    Returns the sup-norm defect ||B_eps - 1 - w||, which should not exceed
    1/2 up to an O(h) mesh allowance.
    """
    g = run.grid
    rho2 = np.abs(run.state.psi) ** 2
    pot = rho2 / run.eps ** 2
    data = run.B_eps - 1.0
    w = data.copy()
    w[1:-1, 1:-1] = 0.0
    K = _dirichlet_operator(g, pot)
    # with zero interior values the 5-point sum picks out the boundary data
    rhs = _apply_laplacian(w, g.h)[1:-1, 1:-1].ravel()
    x = spla.spsolve(K.tocsc(), rhs)
    res = np.linalg.norm(K @ x - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not res <= rtol:
        raise LinearSolveError(f"comparison problem residual {res:.2e} > {rtol:.0e}")
    w[1:-1, 1:-1] = x.reshape(g.nx - 2, g.ny - 2)
    run.w_field = w
    defect = float(np.abs(run.B_eps - 1.0 - w).max())
    allowance = 0.5 + 2.0 * g.h
    return {"defect": defect, "allowance": allowance, "ok": defect <= allowance,
            "residual": float(res)}


def _apply_laplacian(u: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
                       - 4 * u[1:-1, 1:-1]) / (h * h)
    return out


def mask_boundary(mask: np.ndarray) -> np.ndarray:
    """Nodes of the mask with at least one of their 8 neighbours outside it."""
    inner = ndimage.binary_erosion(mask, structure=np.ones((3, 3), bool), border_value=1)
    return mask & ~inner


def distance_to_mask(mask: np.ndarray, grid: Grid) -> np.ndarray:
    """Euclidean distance from every node to the boundary nodes of a mask."""
    b = mask_boundary(mask)
    if not b.any():
        return np.full(grid.shape, np.inf)
    X, Y = grid.mesh()
    pts = np.column_stack([X[b], Y[b]])
    d, _ = cKDTree(pts).query(np.column_stack([X.ravel(), Y.ravel()]))
    d = d.reshape(grid.shape)
    d[mask] = 0.0
    return d


def predicted_large_domain_rate(eps: float, gamma: float, delta: float, theta0: float) -> float:
    """Rate of the exponential weight on |psi|^2 outside D_delta(eps)."""
    return math.sqrt(delta * theta0 * eps ** -gamma / 2.0) / (2.0 * eps)


def agmon_large_domain(run: LargeDomainRun, theta0: float, tolerance_factor: float = 4.0) -> DecayFit:
    """Decay of |psi_eps| away from D_delta(eps), compared with the predicted rate.

    The fitted slope is the rate of |psi|; twice the slope (the |psi|^2
    rate) is compared with the predicted weight rate.
    """
    D = run.D_delta_mask
    if not D.any():
        raise EmptyRegion("D_delta(eps) is empty")
    g = run.grid
    d = distance_to_mask(D, g)
    rho2 = np.abs(run.state.psi) ** 2
    sel = ~D & (d > 2.0 * g.h)
    fit = fit_log_decay(rho2[sel], d[sel], "outside D_delta")
    pred = predicted_large_domain_rate(run.eps, run.gamma, run.delta, theta0)
    V = g.node_weights()
    wt = np.where(~D, np.exp(np.minimum(pred * d, 700.0)), 0.0)
    fit.agmon_integral = float((V * wt * rho2).sum())
    fit.scaled_integral = fit.agmon_integral * run.delta ** 1.5
    fit.predicted = pred
    fit.ratio = 2.0 * fit.slope / pred
    fit.within_tolerance = bool(1.0 / tolerance_factor <= fit.ratio <= tolerance_factor)
    return fit


# ------------------------------------------------------ shifted potential

@dataclass
class PhiNView:
    C: float
    Phi_n: np.ndarray
    orthogonality_defect: float
    bound_ok: bool


def Phi_n_view(nf: NormalFields, psi: np.ndarray, V: np.ndarray) -> PhiNView:
    """phi_n shifted so that it is orthogonal to |psi|^2."""
    rho2 = np.abs(psi) ** 2
    mass = float((V * rho2).sum())
    if mass == 0.0:
        raise ZeroOrderParameter("||psi||_2 = 0")
    C = -float((V * rho2 * nf.phin).sum()) / mass
    Phi = nf.phin + C
    scale = mass * max(float(np.abs(nf.phin).max()), 1e-300)
    defect = abs(float((V * rho2 * Phi).sum())) / scale
    return PhiNView(C, Phi, defect, bool(abs(C) <= np.abs(nf.phin).max() * (1 + 1e-12)))
