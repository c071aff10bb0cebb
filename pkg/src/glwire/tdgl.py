"""Gauge-invariant time stepping of the current-driven Ginzburg-Landau system.

Unknowns: order parameter ``psi`` at nodes, magnetic potential on links
(``ax``, ``ay``) and electric potential ``phi`` at nodes.  The covariant
derivative along a link uses the phase exp(-i*kappa*h*a), so every discrete
operator commutes exactly with discrete gauge transformations.

Each step
  1. solves the Neumann problem for phi (divergence of the field equation
     in Coulomb gauge, with the injected current as boundary flux),
  2. advances psi explicitly,
  3. advances every link explicitly; ghost plaquettes outside the domain
     make the mean of each boundary plaquette and its ghost equal to the
     normal-state field kappa*B_n at the boundary face,
  4. every ``n_proj`` steps projects A back onto Coulomb gauge.

The psi update rotates the explicit Euler increment by a unit complex
factor so that (a) fixed points of the map are exact discrete steady states
and (b) sup|psi| <= 1 is preserved (see ``_kernels.psi_pass``).
The discrete divergence of step 3 is exactly the equation solved in step 1,
so steps preserve the Coulomb gauge up to rounding.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .domain import CurrentProfile, DomainSpec, Grid
from .errors import BlowupError, CompatibilityError, DomainError
from .normal_fields import (NormalFields, compute_normal_fields, curl, divergence,
                            face_values, trace_flux)
from . import _kernels as _k
from .solvers import NeumannPoisson, laplacian_neumann


@dataclass(frozen=True)
class PhysicsParams:
    kappa: float
    c: float = 1.0
    h_ex: float = 0.0
    J_amplitude: float = 1.0
    # multiplies the supercurrent in the field equation; 1 for the standard
    # system, kappa**2 for the rescaled large-domain problem
    coupling: float = 1.0

    def __post_init__(self):
        if not self.kappa >= 1.0:
            raise DomainError(f"kappa must be >= 1, got {self.kappa}")
        if not self.c > 0.0:
            raise DomainError(f"c must be positive, got {self.c}")
        if not self.coupling > 0.0:
            raise DomainError("coupling must be positive")


@dataclass
class GLState:
    psi: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    phi: np.ndarray
    t: float = 0.0
    step: int = 0

    @property
    def A(self):
        return self.ax, self.ay

    def copy(self) -> "GLState":
        return GLState(self.psi.copy(), self.ax.copy(), self.ay.copy(), self.phi.copy(),
                       self.t, self.step)


@dataclass
class StepReport:
    dt_used: float
    rate: float  # max(|dpsi|, |dA|) / dt
    norm2: float
    norm4: float
    sup: float
    kinetic: float
    cut_current: float
    div_drift: float
    residual: dict | None = None


@dataclass
class ResidualReport:
    psi_eq: float
    field_eq: float
    contact_dirichlet: float
    insulator_neumann: float
    contact_flux: float
    insulator_flux: float
    circulation: float
    circulation_continuum: float
    scales: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def total(self) -> float:
        return math.sqrt(self.psi_eq ** 2 + self.field_eq ** 2 + self.contact_dirichlet ** 2
                         + self.insulator_neumann ** 2 + self.contact_flux ** 2
                         + self.insulator_flux ** 2)

    @property
    def relative(self) -> float:
        """Largest equation residual divided by the size of its terms."""
        out = 0.0
        for key, val in (("psi_eq", self.psi_eq), ("field_eq", self.field_eq),
                         ("contact_flux", self.contact_flux)):
            s = self.scales.get(key, 0.0)
            if s > 0:
                out = max(out, val / s)
        return out


@dataclass
class IdentityReport:
    energy_defect: float
    potential_defect: float
    charge_defect: float
    reference: float  # kappa^2 * ||psi||_2^2
    kappa: float = 1.0

    def relative(self) -> dict:
        """Energy and charge defects over kappa^2 ||psi||^2 and kappa ||psi||^2.

        The potential defect is already normalised by the size of its terms.
        """
        ref = self.reference if self.reference > 0 else 1.0
        return {"energy": self.energy_defect / ref,
                "potential": self.potential_defect,
                "charge": self.charge_defect * self.kappa / ref}


@dataclass
class ConvergenceReport:
    status: str  # "converged", "stationary-modulus" or "max_time"
    fixed_point: str  # "normal-like" or "mixed"
    t: float
    steps: int
    rate: float
    residual: ResidualReport
    history: list = field(default_factory=list)
    modulus_rate: float = float("nan")


class TDGLModel:
    """Discrete system on a fixed wire, current profile and parameter set."""

    def __init__(self, domain: DomainSpec, grid: Grid, params: PhysicsParams,
                 J: CurrentProfile, n_proj: int = 10, dt_factor: float = 0.8,
                 phi_gauge: str = "mean"):
        self.domain = domain
        self.grid = grid
        self.params = params
        self.J = J.scaled(params.J_amplitude) if params.J_amplitude != 1.0 else J
        self.n_proj = int(n_proj)
        self.dt_factor = float(dt_factor)
        if phi_gauge not in ("mean", "charge"):
            raise ValueError("phi_gauge must be 'mean' or 'charge'")
        # "mean": zero-mean potential (time-dependent normalisation);
        # "charge": constant chosen so that sum |psi|^2 phi = 0, which turns
        # uniformly rotating states into fixed points
        self.phi_gauge = phi_gauge
        self.nf: NormalFields = compute_normal_fields(domain, grid, self.J, params.h_ex)
        self.V = grid.node_weights()
        self.Wx, self.Wy = grid.link_weights()
        self.neumann = NeumannPoisson(grid.nx, grid.ny, grid.h)
        # boundary source of the potential: increment of kappa*B_n per node
        self.q_contact = trace_flux(grid, self.nf.Bn)
        self.contact = grid.contact
        faces = face_values(grid, self.nf.Bn)
        self.faces = {k: params.kappa * v for k, v in faces.items()}
        # boundary-face length of each ring plaquette, for the circulation mean
        rw = np.zeros((grid.nx - 1, grid.ny - 1))
        rw[:, 0] += grid.h
        rw[:, -1] += grid.h
        rw[0, :] += grid.h
        rw[-1, :] += grid.h
        self.ring_w = rw
        # insulator rows as used by the mirror ghosts
        self.h2 = grid.h * grid.h

    # ------------------------------------------------------------ helpers
    @property
    def kappa(self) -> float:
        return self.params.kappa

    def default_dt(self, state: GLState | None = None) -> float:
        """dt_factor times the largest step with a guaranteed discrete max principle.

        4 dt/h^2 + 2 dt kappa^2 <= 1 keeps sup|psi| <= 1; the link update needs
        dt*c*(8/h^2 + coupling) <= 2 and the potential enters through
        dt*kappa*|phi|, with |phi| estimated from the normal state and, if
        given, from ``state``.  The factor 4 on the potential leaves room for
        the constant shift of the "charge" normalisation.
        """
        p, h = self.params, self.grid.h
        phi_max = p.c * p.kappa * float(np.abs(self.nf.phin).max())
        if state is not None:
            phi_max = max(phi_max, float(np.abs(state.phi).max()))
        phi_scale = 4.0 * max(phi_max, 1e-12)
        bound = min(1.0 / (4.0 / (h * h) + 2.0 * p.kappa ** 2),
                    h * h / (4.0 * p.c), 1.0 / (p.c * p.coupling),
                    1.0 / (p.kappa * phi_scale))
        return self.dt_factor * bound

    def phases(self, ax, ay):
        kh = self.kappa * self.grid.h
        return np.exp(-1j * kh * ax), np.exp(-1j * kh * ay)

    def supercurrent(self, psi, Ux, Uy):
        kh = self.kappa * self.grid.h
        g = self.params.coupling
        jx = g * (np.conj(psi[:-1, :]) * Ux * psi[1:, :]).imag / kh
        jy = g * (np.conj(psi[:, :-1]) * Uy * psi[:, 1:]).imag / kh
        return jx, jy

    def neighbour_sum(self, psi, Ux, Uy):
        """Covariant sum of neighbours divided by h^2 (mirror ghosts on insulators)."""
        L = np.zeros_like(psi)
        fwd = Ux * psi[1:, :]
        bwd = np.conj(Ux) * psi[:-1, :]
        L[:-1, :] += fwd
        L[1:, :] += bwd
        L[0, :] += fwd[0, :]
        L[-1, :] += bwd[-1, :]
        L[:, :-1] += Uy * psi[:, 1:]
        L[:, 1:] += np.conj(Uy) * psi[:, :-1]
        return L / self.h2

    def covariant_laplacian(self, psi, ax, ay):
        Ux, Uy = self.phases(ax, ay)
        out = self.neighbour_sum(psi, Ux, Uy) - 4.0 * psi / self.h2
        out[self.contact] = 0.0
        return out

    def solve_potential(self, psi, Ux, Uy) -> np.ndarray:
        """Electric potential from the divergence of the field equation."""
        p = self.params
        jx, jy = self.supercurrent(psi, Ux, Uy)
        rhs = p.c * divergence(self.grid, jx, jy) + p.c * p.kappa * self.q_contact / self.V
        rhs -= self.neumann.mean(rhs)
        phi = self.neumann.solve(rhs)
        return phi - self.neumann.mean(phi)

    def extended_curl(self, ax, ay) -> np.ndarray:
        """Plaquette fields with ghosts carrying the boundary condition."""
        g = self.grid
        out = np.zeros((g.nx + 1, g.ny + 1))
        f = self.faces
        _k.curl_pass(ax, ay, g.h, f["bottom"], f["top"], f["left"], f["right"], out)
        return out

    # ------------------------------------------------------------- states
    def normal_state(self) -> GLState:
        p = self.params
        psi = np.zeros(self.grid.shape, dtype=complex)
        return GLState(psi, p.kappa * self.nf.ax, p.kappa * self.nf.ay,
                       p.c * p.kappa * self.nf.phin, 0.0, 0)

    def initial_state(self, kind: str = "taper", seed: int = 0) -> GLState:
        """Default start: psi = 1 tapered to 0 at the contacts over two cells."""
        g = self.grid
        st = self.normal_state()
        if kind == "normal":
            return st
        j = np.arange(g.ny)
        dist = np.minimum(j, g.ny - 1 - j).astype(float)
        taper = np.minimum(dist / 2.0, 1.0)[None, :] * np.ones((g.nx, 1))
        if kind == "taper":
            psi = taper.astype(complex)
        elif kind == "random":
            rng = np.random.default_rng(seed)
            mod = rng.uniform(0.0, 1.0, g.shape)
            ang = rng.uniform(0.0, 2 * np.pi, g.shape)
            psi = mod * np.exp(1j * ang)
        elif kind == "ones":
            psi = np.ones(g.shape, dtype=complex)
        else:
            raise ValueError(f"unknown initial state {kind!r}")
        psi[self.contact] = 0.0
        st.psi = psi
        Ux, Uy = self.phases(st.ax, st.ay)
        st.phi = self.solve_potential(psi, Ux, Uy)
        return st

    # --------------------------------------------------------------- step
    def _buffers(self):
        if not hasattr(self, "_buf"):
            g = self.grid
            self._buf = {
                "Ux": np.empty((g.nx - 1, g.ny), complex), "Uy": np.empty((g.nx, g.ny - 1), complex),
                "jx": np.empty((g.nx - 1, g.ny)), "jy": np.empty((g.nx, g.ny - 1)),
                "divj": np.empty(g.shape), "lsum": np.empty(g.shape, complex),
                "B": np.zeros((g.nx + 1, g.ny + 1)),
            }
        return self._buf

    def step(self, state: GLState, dt: float, observe: bool = False,
             with_residual: bool = False):
        """Advance one explicit step; returns the new state and a StepReport.

        Observables are only evaluated when ``observe`` is set.
        """
        p, g = self.params, self.grid
        h = g.h
        bf = self._buffers()
        psi, ax, ay = state.psi, state.ax, state.ay
        _k.link_pass(psi, ax, ay, p.kappa * h, p.coupling, h, bf["Ux"], bf["Uy"],
                     bf["jx"], bf["jy"], bf["divj"], bf["lsum"])
        rhs = p.c * bf["divj"] + p.c * p.kappa * self.q_contact / self.V
        rhs -= self.neumann.mean(rhs)
        phi = self.neumann.solve(rhs)
        phi -= self.neumann.mean(phi)
        if self.phi_gauge == "charge":
            w = self.V * (psi.real ** 2 + psi.imag ** 2)
            if w.sum() > 1e-300:
                phi -= (w * phi).sum() / w.sum()

        psi_new = np.empty_like(psi)
        zmax, dpsi = _k.psi_pass(psi, bf["lsum"], phi, self.contact, dt, self.h2, p.kappa, psi_new)
        if zmax > 1.0:
            raise BlowupError(f"time step {dt:.3e} too large at step {state.step + 1}: "
                              f"local rate factor {zmax:.3f} > 1", step=state.step + 1)
        f = self.faces
        _k.curl_pass(ax, ay, h, f["bottom"], f["top"], f["left"], f["right"], bf["B"])
        ax_new = np.empty_like(ax)
        ay_new = np.empty_like(ay)
        dA = _k.field_pass(ax, ay, bf["jx"], bf["jy"], phi, bf["B"], dt, p.c, h, ax_new, ay_new)
        rate = max(dpsi, dA) / dt
        if not (np.isfinite(rate) and np.isfinite(psi_new).all()):
            raise BlowupError(f"non-finite values at step {state.step + 1}", step=state.step + 1)
        new = GLState(psi_new, ax_new, ay_new, phi, state.t + dt, state.step + 1)
        drift = 0.0
        if self.n_proj > 0 and new.step % self.n_proj == 0:
            drift = float(np.abs(divergence(g, ax_new, ay_new)).max())
            new = self.project_coulomb(new)
        if observe or with_residual:
            rep = self.observe(new, dt, rate, drift)
        else:
            rep = StepReport(dt, float(rate), np.nan, np.nan, np.nan, np.nan, np.nan, drift)
        if with_residual:
            rep.residual = self.residual(new).as_dict()
        return new, rep

    def observe(self, st: GLState, dt: float = 0.0, rate: float = 0.0, drift: float = 0.0) -> StepReport:
        rho2 = np.abs(st.psi) ** 2
        Ux, Uy = self.phases(st.ax, st.ay)
        jx, jy = self.supercurrent(st.psi, Ux, Uy)
        mid = self.grid.ny // 2
        w = np.full(self.grid.nx, self.grid.h)
        w[[0, -1]] *= 0.5
        return StepReport(dt, float(rate), float(np.sqrt((self.V * rho2).sum())),
                          float(((self.V * rho2 ** 2).sum()) ** 0.25),
                          float(np.sqrt(rho2.max())), self.kinetic_energy(st.psi, Ux, Uy),
                          float((w * jy[:, mid]).sum()), float(drift))

    def kinetic_energy(self, psi, Ux, Uy) -> float:
        dx = (Ux * psi[1:, :] - psi[:-1, :]) / self.grid.h
        dy = (Uy * psi[:, 1:] - psi[:, :-1]) / self.grid.h
        return float((self.Wx * np.abs(dx) ** 2).sum() + (self.Wy * np.abs(dy) ** 2).sum())

    # -------------------------------------------------------------- gauge
    def gauge_transform(self, state: GLState, omega: np.ndarray,
                        domega_dt: np.ndarray | None = None) -> GLState:
        """A + grad(omega), phi - d(omega)/dt, psi * exp(i kappa omega)."""
        gx = (omega[1:, :] - omega[:-1, :]) / self.grid.h
        gy = (omega[:, 1:] - omega[:, :-1]) / self.grid.h
        phi = state.phi if domega_dt is None else state.phi - domega_dt
        return GLState(state.psi * np.exp(1j * self.kappa * omega), state.ax + gx,
                       state.ay + gy, phi.copy(), state.t, state.step)

    def project_coulomb(self, state: GLState) -> GLState:
        """Remove the gradient part of A (weighted Helmholtz split)."""
        d = divergence(self.grid, state.ax, state.ay)
        d -= self.neumann.mean(d)
        omega = self.neumann.solve(d)
        return self.gauge_transform(state, -omega)

    # ----------------------------------------------------------- residual
    def residual(self, state: GLState) -> ResidualReport:
        p, g = self.params, self.grid
        h, k = g.h, p.kappa
        psi, phi = state.psi, state.phi
        Ux, Uy = self.phases(state.ax, state.ay)
        lap = self.neighbour_sum(psi, Ux, Uy) - 4.0 * psi / self.h2
        rho2 = np.abs(psi) ** 2
        Ra = -lap + 1j * k * phi * psi - k * k * (1 - rho2) * psi
        nc = ~self.contact
        Va = self.V * nc
        psi_eq = float(np.sqrt((Va * np.abs(Ra) ** 2).sum()))
        scale_a = float(np.sqrt((Va * np.abs(lap) ** 2).sum())
                        + np.sqrt((Va * np.abs(k * phi * psi) ** 2).sum())
                        + np.sqrt((Va * np.abs(k * k * (1 - rho2) * psi) ** 2).sum()))

        jx, jy = self.supercurrent(psi, Ux, Uy)
        B = curl(g, state.ax, state.ay)
        gx = (phi[1:, 1:-1] - phi[:-1, 1:-1]) / h / p.c
        gy = (phi[1:-1, 1:] - phi[1:-1, :-1]) / h / p.c
        cx = (B[:, 1:] - B[:, :-1]) / h
        cy = -(B[1:, :] - B[:-1, :]) / h
        rx = gx + cx - jx[:, 1:-1]
        ry = gy + cy - jy[1:-1, :]
        Wx, Wy = self.Wx[:, 1:-1], self.Wy[1:-1, :]

        def l2(wx, ux, wy, uy):
            return float(np.sqrt((wx * ux ** 2).sum() + (wy * uy ** 2).sum()))

        field_eq = l2(Wx, rx, Wy, ry)
        scale_b = l2(Wx, gx, Wy, gy) + l2(Wx, cx, Wy, cy) + l2(Wx, jx[:, 1:-1], Wy, jy[1:-1, :])

        ds = np.full(g.nx, h)
        ds[[0, -1]] *= 0.5
        dsy = np.full(g.ny, h)
        dsy[[0, -1]] *= 0.5
        cd = float(np.sqrt((ds * (np.abs(psi[:, 0]) ** 2 + np.abs(psi[:, -1]) ** 2)).sum()))
        # one-sided second-order covariant normal derivative on the insulators
        dl = (-3 * psi[0, :] + 4 * Ux[0, :] * psi[1, :]
              - Ux[0, :] * Ux[1, :] * psi[2, :]) / (2 * h)
        dr = (-3 * psi[-1, :] + 4 * np.conj(Ux[-1, :]) * psi[-2, :]
              - np.conj(Ux[-1, :] * Ux[-2, :]) * psi[-3, :]) / (2 * h)
        inn = float(np.sqrt((dsy * (np.abs(dl) ** 2 + np.abs(dr) ** 2)).sum()))
        # outward normal derivative of phi
        jb, jt = self.J.on_grid(g)
        dnb = (3 * phi[:, 0] - 4 * phi[:, 1] + phi[:, 2]) / (2 * h)
        dnt = (3 * phi[:, -1] - 4 * phi[:, -2] + phi[:, -3]) / (2 * h)
        fb = dnb + p.c * k * jb
        ft = dnt + p.c * k * jt
        cflux = float(np.sqrt((ds * (fb ** 2 + ft ** 2)).sum()))
        scale_e = float(p.c * k * np.sqrt((ds * (jb ** 2 + jt ** 2)).sum()))
        dnl = (3 * phi[0, :] - 4 * phi[1, :] + phi[2, :]) / (2 * h)
        dnr = (3 * phi[-1, :] - 4 * phi[-2, :] + phi[-3, :]) / (2 * h)
        iflux = float(np.sqrt((dsy * (dnl ** 2 + dnr ** 2)).sum()))
        # boundary-face field: mean of each boundary plaquette and its ghost
        Be = self.extended_curl(state.ax, state.ay)
        faces = np.concatenate([0.5 * (Be[1:-1, 0] + Be[1:-1, 1]), 0.5 * (Be[1:-1, -1] + Be[1:-1, -2]),
                                0.5 * (Be[0, 1:-1] + Be[1, 1:-1]), 0.5 * (Be[-1, 1:-1] + Be[-2, 1:-1])])
        circ = float(abs(faces.mean() - k * p.h_ex))
        rw = self.ring_w
        circ_c = float(abs((rw * B).sum() / rw.sum() - k * p.h_ex))
        return ResidualReport(psi_eq, field_eq, cd, inn, cflux, iflux, circ, circ_c,
                              {"psi_eq": scale_a, "field_eq": scale_b, "contact_flux": scale_e})

    def steady_identities(self, state: GLState) -> IdentityReport:
        """Defects of the energy, potential and charge identities of a steady state."""
        p, k = self.params, self.kappa
        psi, phi = state.psi, state.phi
        Ux, Uy = self.phases(state.ax, state.ay)
        rho2 = np.abs(psi) ** 2
        n2 = float((self.V * rho2).sum())
        n4 = float((self.V * rho2 ** 2).sum())
        kin = self.kinetic_energy(psi, Ux, Uy)
        energy = abs(kin + k * k * n4 - k * k * n2)
        # -lap(phi) + c*coupling*|psi|^2 phi = 0 with the contact flux
        lap = laplacian_neumann(phi, self.grid.h)
        src = p.c * k * self.q_contact / self.V
        r = -(lap - src) + p.c * p.coupling * rho2 * phi
        scale = (np.sqrt((self.V * lap ** 2).sum()) + np.sqrt((self.V * src ** 2).sum())
                 + np.sqrt((self.V * (p.c * p.coupling * rho2 * phi) ** 2).sum()))
        pot = float(np.sqrt((self.V * r ** 2).sum()) / max(scale, 1e-300))
        charge = abs(float((self.V * rho2 * phi).sum()))
        return IdentityReport(energy, pot, charge, k * k * n2, k)

    # ---------------------------------------------------------- integrate
    def modulus_snapshot(self, st: GLState) -> tuple:
        """Gauge-invariant part of a state: |psi| at nodes, curl A on plaquettes."""
        return np.abs(st.psi), curl(self.grid, st.ax, st.ay)

    def run_to_steady(self, state0: GLState, dt: float | None = None, tol: float = 1e-6,
                      t_max: float = 10.0, record_every: int = 0, observer=None,
                      gauge: str = "charge", modulus_stop: bool = False,
                      probe_every: int = 50) -> tuple:
        """Integrate until the update rate falls below ``tol`` or t_max is hit.

        By default the additive constant of phi is fixed by sum |psi|^2 phi = 0
        during the run, so that steady states that merely rotate in phase
        under the zero-mean normalisation are detected as fixed points.
        With ``modulus_stop`` the run also ends once |psi| and curl A stop
        changing (rate below ``tol``, probed every ``probe_every`` steps)
        even if the phase keeps rotating; the status is then
        "stationary-modulus".  ``observer(state, report)`` is called after
        every step.
        """
        dt = self.default_dt(state0) if dt is None else dt
        saved, self.phi_gauge = self.phi_gauge, gauge
        st = state0
        history = []
        rate = np.inf
        mod_rate = np.inf
        status = "max_time"
        snap, snap_t = self.modulus_snapshot(st), st.t
        nmax = int(math.ceil((t_max - state0.t) / dt - 1e-9))
        try:
            for _ in range(nmax):
                obs = bool(record_every) and (st.step + 1) % record_every == 0
                st, rep = self.step(st, dt, observe=obs)
                rate = rep.rate
                if obs:
                    history.append((st.t, rep.norm2, rep.sup, rate))
                if observer is not None:
                    observer(st, rep)
                if rate < tol:
                    status = "converged"
                    break
                if modulus_stop and st.step % probe_every == 0:
                    new = self.modulus_snapshot(st)
                    el = st.t - snap_t
                    mod_rate = max(float(np.abs(new[0] - snap[0]).max()),
                                   self.grid.h * float(np.abs(new[1] - snap[1]).max())) / el
                    snap, snap_t = new, st.t
                    if mod_rate < tol:
                        status = "stationary-modulus"
                        break
        finally:
            self.phi_gauge = saved
        st = self.project_coulomb(st)
        res = self.residual(st)
        area = self.domain.Lx * self.domain.Ly
        n2 = float(np.sqrt((self.V * np.abs(st.psi) ** 2).sum()))
        kind = "normal-like" if n2 <= 1e-4 * math.sqrt(area) else "mixed"
        return st, ConvergenceReport(status, kind, st.t, st.step, float(rate), res, history,
                                     float(mod_rate))


# ----------------------------------------------------------- checkpoints

def save_checkpoint(path, state: GLState, model: TDGLModel, extra: dict | None = None) -> None:
    """Binary dump of the fields plus a JSON header next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = np.concatenate([state.psi.real.ravel(), state.psi.imag.ravel(), state.ax.ravel(),
                           state.ay.ravel(), state.phi.ravel()]).astype("<f8")
    path.with_suffix(".bin").write_bytes(blob.tobytes())
    g = model.grid
    header = {"t": state.t.hex() if isinstance(state.t, float) else float(state.t).hex(),
              "step": state.step, "nx": g.nx, "ny": g.ny, "h": g.h,
              "Lx": model.domain.Lx, "Ly": model.domain.Ly,
              "params": asdict(model.params), "layout": ["psi.re", "psi.im", "ax", "ay", "phi"],
              "dtype": "<f8", "order": "C"}
    if extra:
        header.update(extra)
    path.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True))


def load_checkpoint(path) -> tuple:
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    nx, ny = header["nx"], header["ny"]
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    sizes = [nx * ny, nx * ny, (nx - 1) * ny, nx * (ny - 1), nx * ny]
    parts = np.split(raw, np.cumsum(sizes)[:-1])
    psi = (parts[0] + 1j * parts[1]).reshape(nx, ny)
    st = GLState(psi, parts[2].reshape(nx - 1, ny).copy(), parts[3].reshape(nx, ny - 1).copy(),
                 parts[4].reshape(nx, ny).copy(), float.fromhex(header["t"]), int(header["step"]))
    return st, header
