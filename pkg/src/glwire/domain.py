"""Wire geometry, boundary bookkeeping, current profiles and the uniform mesh.

The sample is the rectangle [0, Lx] x [0, Ly].  Current enters and leaves
through the horizontal edges (contacts); the vertical edges are insulating.
Arclength runs counterclockwise from the corner (0, 0).

Node arrays are indexed ``[i, j]`` with ``x = i*h`` and ``y = j*h``.
Links carry the tangential component of a vector field at their midpoints:
``ax[i, j]`` sits between nodes (i, j) and (i+1, j), ``ay[i, j]`` between
(i, j) and (i, j+1).  Plaquette ``(i, j)`` has lower-left node (i, j).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CurrentError, DomainError, GeometryError, MeshAspectError

ASPECT_RTOL = 1e-12
J2_RTOL = 1e-10


@dataclass(frozen=True)
class Segment:
    name: str
    kind: str  # "contact" or "insulator"
    component: int  # 1 or 2
    s_start: float
    s_end: float

    @property
    def length(self) -> float:
        return self.s_end - self.s_start


@dataclass(frozen=True)
class DomainSpec:
    Lx: float
    Ly: float
    contact_segments: tuple
    insulator_segments: tuple
    orientation: str = "counterclockwise"

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.Lx + self.Ly)

    @property
    def segments(self) -> tuple:
        return tuple(sorted(self.contact_segments + self.insulator_segments,
                            key=lambda seg: seg.s_start))

    @property
    def contact_length(self) -> float:
        return sum(seg.length for seg in self.contact_segments)

    def point_at(self, s):
        """Cartesian coordinates of the boundary point(s) at arclength s."""
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        Lx, Ly = self.Lx, self.Ly
        x = np.empty_like(s)
        y = np.empty_like(s)
        b = s <= Lx
        r = (s > Lx) & (s <= Lx + Ly)
        t = (s > Lx + Ly) & (s <= 2 * Lx + Ly)
        l = s > 2 * Lx + Ly
        x[b], y[b] = s[b], 0.0
        x[r], y[r] = Lx, s[r] - Lx
        x[t], y[t] = 2 * Lx + Ly - s[t], Ly
        x[l], y[l] = 0.0, self.perimeter - s[l]
        return x, y

    def insulator_midpoint_s(self, component: int) -> float:
        seg = [g for g in self.insulator_segments if g.component == component][0]
        return 0.5 * (seg.s_start + seg.s_end)


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    h: float
    x: np.ndarray
    y: np.ndarray
    node_kind: np.ndarray  # 0 interior, 1 insulator, 2 contact (corners included)
    # counterclockwise walk over boundary nodes
    bnd_i: np.ndarray
    bnd_j: np.ndarray
    bnd_s: np.ndarray

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return self.nx * self.ny

    @property
    def n_links(self) -> int:
        return (self.nx - 1) * self.ny + self.nx * (self.ny - 1)

    @property
    def n_plaquettes(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    @property
    def contact(self) -> np.ndarray:
        return self.node_kind == 2

    @property
    def insulator(self) -> np.ndarray:
        return self.node_kind == 1

    @property
    def interior(self) -> np.ndarray:
        return self.node_kind == 0

    @property
    def corner(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[[0, 0, -1, -1], [0, -1, 0, -1]] = True
        return m

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def node_weights(self) -> np.ndarray:
        """Dual-cell areas (trapezoid weights) of the nodes."""
        wx = np.ones(self.nx)
        wx[[0, -1]] = 0.5
        wy = np.ones(self.ny)
        wy[[0, -1]] = 0.5
        return self.h * self.h * np.outer(wx, wy)

    def link_weights(self):
        """Dual areas of x- and y-links (halved on boundary links)."""
        wx = np.full((self.nx - 1, self.ny), self.h * self.h)
        wx[:, [0, -1]] *= 0.5
        wy = np.full((self.nx, self.ny - 1), self.h * self.h)
        wy[[0, -1], :] *= 0.5
        return wx, wy

    def plaquette_centers(self):
        xc = 0.5 * (self.x[:-1] + self.x[1:])
        yc = 0.5 * (self.y[:-1] + self.y[1:])
        return np.meshgrid(xc, yc, indexing="ij")

    def ring_mask(self) -> np.ndarray:
        """Plaquettes touching the domain boundary."""
        m = np.zeros((self.nx - 1, self.ny - 1), dtype=bool)
        m[[0, -1], :] = True
        m[:, [0, -1]] = True
        return m

    def to_nodes_from_plaquettes(self, p: np.ndarray) -> np.ndarray:
        """Average plaquette values onto nodes (edge-padded)."""
        q = np.pad(p, 1, mode="edge")
        return 0.25 * (q[:-1, :-1] + q[1:, :-1] + q[:-1, 1:] + q[1:, 1:])

    def to_plaquettes_from_nodes(self, f: np.ndarray) -> np.ndarray:
        return 0.25 * (f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:])


def build_wire_domain(Lx: float, Ly: float, nx: int, ny: int):
    """Rectangle with contacts on y=0 and y=Ly and a square-cell node grid."""
    if not (np.isfinite(Lx) and np.isfinite(Ly)) or Lx <= 0 or Ly <= 0:
        raise GeometryError(f"side lengths must be positive, got {Lx}, {Ly}")
    if int(nx) != nx or int(ny) != ny or nx < 8 or ny < 8:
        raise GeometryError(f"need at least 8 nodes per side, got {nx} x {ny}")
    nx, ny = int(nx), int(ny)
    hx = Lx / (nx - 1)
    hy = Ly / (ny - 1)
    if abs(hx - hy) > ASPECT_RTOL * max(hx, hy):
        raise MeshAspectError(f"cells are not square: hx={hx!r}, hy={hy!r}")
    h = hx
    P = 2.0 * (Lx + Ly)
    contacts = (
        Segment("bottom", "contact", 1, 0.0, Lx),
        Segment("top", "contact", 2, Lx + Ly, 2 * Lx + Ly),
    )
    insulators = (
        Segment("right", "insulator", 2, Lx, Lx + Ly),
        Segment("left", "insulator", 1, 2 * Lx + Ly, P),
    )
    dom = DomainSpec(float(Lx), float(Ly), contacts, insulators)

    kind = np.zeros((nx, ny), dtype=np.int8)
    kind[[0, -1], :] = 1
    kind[:, [0, -1]] = 2
    x = np.arange(nx) * h
    y = np.arange(ny) * h
    x[-1], y[-1] = Lx, Ly

    ib = np.arange(nx)
    jr = np.arange(1, ny)
    it = np.arange(nx - 2, -1, -1)
    jl = np.arange(ny - 2, 0, -1)
    bnd_i = np.concatenate([ib, np.full(ny - 1, nx - 1), it, np.zeros(ny - 2, int)])
    bnd_j = np.concatenate([np.zeros(nx, int), jr, np.full(nx - 1, ny - 1), jl])
    bnd_s = np.concatenate([x[ib], Lx + y[jr], Lx + Ly + (Lx - x[it]),
                            2 * Lx + Ly + (Ly - y[jl])])
    grid = Grid(nx, ny, h, x, y, kind, bnd_i, bnd_j, bnd_s)
    return dom, grid


def boundary_portion_length(domain: DomainSpec, s_from: float, s_to: float) -> float:
    """Length of the boundary arc running counterclockwise from s_from to s_to.

    The result lies in [0, P]; P itself only appears through rounding when
    s_from sits an ulp past s_to.
    """
    P = domain.perimeter
    for s in (s_from, s_to):
        if not (0.0 <= s < P):
            raise DomainError(f"arclength {s} outside [0, {P})")
    return (s_to - s_from) % P


# ---------------------------------------------------------------- currents

@dataclass(frozen=True)
class CurrentProfile:
    """Current density on the two contacts, as functions of x.

    ``inlet`` is the density on the bottom contact, ``outlet`` on the top
    one.  The density is zero on the insulating edges.
    """
    inlet: Callable[[np.ndarray], np.ndarray]
    outlet: Callable[[np.ndarray], np.ndarray]
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def on_grid(self, grid: Grid):
        """Nodal samples (bottom, top) over the contact nodes, corners included."""
        jb = np.broadcast_to(np.asarray(self.inlet(grid.x), dtype=float), grid.x.shape)
        jt = np.broadcast_to(np.asarray(self.outlet(grid.x), dtype=float), grid.x.shape)
        return np.array(jb), np.array(jt)

    def at_arclength(self, domain: DomainSpec, s) -> np.ndarray:
        s = np.mod(np.asarray(s, dtype=float), domain.perimeter)
        x, _ = domain.point_at(s)
        out = np.zeros_like(s)
        on_b = s <= domain.Lx
        on_t = (s >= domain.Lx + domain.Ly) & (s <= 2 * domain.Lx + domain.Ly)
        out[on_b] = np.broadcast_to(self.inlet(x[on_b]), x[on_b].shape)
        out[on_t] = np.broadcast_to(self.outlet(x[on_t]), x[on_t].shape)
        return out

    def scaled(self, factor: float) -> "CurrentProfile":
        fi, fo = self.inlet, self.outlet
        params = dict(self.params)
        params["scale"] = params.get("scale", 1.0) * factor
        return CurrentProfile(lambda x: factor * fi(x), lambda x: factor * fo(x),
                              self.label, params)


def zero_current() -> CurrentProfile:
    return CurrentProfile(lambda x: np.zeros_like(x), lambda x: np.zeros_like(x), "zero", {})


def constant_current(j_in: float, j_out: float | None = None) -> CurrentProfile:
    """Constant density on each contact; by default j_out = -j_in."""
    j_out = -j_in if j_out is None else j_out
    return CurrentProfile(lambda x: np.full_like(x, float(j_in)),
                          lambda x: np.full_like(x, float(j_out)),
                          "constant", {"j_in": float(j_in), "j_out": float(j_out)})


def bump_current(amplitude: float, Lx: float) -> CurrentProfile:
    """Smooth profile amplitude*(1 - cos(2 pi x / Lx)), leaving through the top.

    Its mean over a contact equals ``amplitude`` and it vanishes to second
    order at the corners.
    """
    k = 2.0 * np.pi / Lx

    def g(x):
        return amplitude * (1.0 - np.cos(k * np.asarray(x, dtype=float)))

    return CurrentProfile(g, lambda x: -g(x), "bump",
                          {"amplitude": float(amplitude), "Lx": float(Lx)})


def skew_bump_current(amplitude: float, Lx: float) -> CurrentProfile:
    """Asymmetric smooth profile proportional to (1 - cos(2 pi x/Lx))(1 + x/Lx).

    Normalised to mean ``amplitude`` over a contact; it leaves through the
    top with the same shape.  Unlike the symmetric profiles it gives a
    nontrivial discretisation error in the insulator field values.
    """
    k = 2.0 * np.pi / Lx
    norm = amplitude / 1.5

    def g(x):
        x = np.asarray(x, dtype=float)
        return norm * (1.0 - np.cos(k * x)) * (1.0 + x / Lx)

    return CurrentProfile(g, lambda x: -g(x), "skewbump",
                          {"amplitude": float(amplitude), "Lx": float(Lx)})


def make_current(family: str, amplitude: float, Lx: float) -> CurrentProfile:
    """Current profile by family name: zero, constant, bump or skewbump."""
    if family == "zero":
        return zero_current()
    if family == "constant":
        return constant_current(amplitude)
    if family == "bump":
        return bump_current(amplitude, Lx)
    if family == "skewbump":
        return skew_bump_current(amplitude, Lx)
    raise CurrentError(f"unknown current profile {family!r}")


def sampled_current(grid: Grid, bottom: np.ndarray, top: np.ndarray) -> CurrentProfile:
    """Profile from nodal samples on the two contacts (linear in between)."""
    xb = grid.x.copy()
    bottom = np.asarray(bottom, dtype=float).copy()
    top = np.asarray(top, dtype=float).copy()
    if bottom.shape != xb.shape or top.shape != xb.shape:
        raise DomainError("samples must cover every contact node")
    return CurrentProfile(lambda x: np.interp(x, xb, bottom),
                          lambda x: np.interp(x, xb, top), "samples", {})


@dataclass(frozen=True)
class ValidationReport:
    zero_total: bool
    sign_constant: bool
    finite: bool
    totals: tuple
    residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.zero_total and self.sign_constant and self.finite


def _trapz(f, h):
    return h * (f.sum() - 0.5 * (f[0] + f[-1]))


def validate_current(profile: CurrentProfile, domain: DomainSpec,
                     grid: Grid | None = None) -> ValidationReport:
    """Zero-total and per-contact sign checks on nodal samples.

    Without a grid the contacts are sampled at 1025 points each.
    """
    if grid is None:
        xs = np.linspace(0.0, domain.Lx, 1025)
    else:
        xs = grid.x
    h = xs[1] - xs[0]
    jb = np.broadcast_to(np.asarray(profile.inlet(xs), dtype=float), xs.shape)
    jt = np.broadcast_to(np.asarray(profile.outlet(xs), dtype=float), xs.shape)
    finite = bool(np.all(np.isfinite(jb)) and np.all(np.isfinite(jt)))
    tb, tt = float(_trapz(jb, h)), float(_trapz(jt, h))
    jmax = float(max(np.max(np.abs(jb)), np.max(np.abs(jt)))) if finite else np.inf
    tol = J2_RTOL * jmax * domain.contact_length
    residual = abs(tb + tt)
    zero_total = finite and residual <= tol

    def one_sign(v):
        return bool(np.all(v >= 0) or np.all(v <= 0))

    return ValidationReport(zero_total, one_sign(jb) and one_sign(jt), finite,
                            (tb, tt), residual, tol)
