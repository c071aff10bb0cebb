"""Config-driven runs: normal fields, time integration and the per-run analysis."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import RunConfig
from .domain import build_wire_domain, make_current, validate_current
from .errors import CurrentError, EmptyRegion, DegenerateFit, GlwireError, ZeroOrderParameter
from .io import rle_encode, write_csv, write_field, write_json
from .normal_fields import compute_hj, conjugacy_residual, extract_regions, min_grad_Bn
from .tdgl import PhysicsParams, TDGLModel, save_checkpoint


class StageError(GlwireError):
    """Wraps a failure together with the name of the stage it came from."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class CaseResult:
    config: RunConfig
    model: TDGLModel
    state: object
    report: object
    wall: float
    regions: object


def build_model(cfg: RunConfig, large_domain_eps: float | None = None) -> TDGLModel:
    """Domain, current and discrete model for a configuration.

    With ``large_domain_eps`` the rescaled large-domain parameters replace
    the [physics] section (kappa = 1/eps, exponent from [analysis] gamma).
    """
    d = cfg.domain
    domain, grid = build_wire_domain(d.Lx, d.Ly, d.nx, d.ny)
    J = make_current(cfg.current.profile, cfg.current.amplitude, d.Lx)
    rep = validate_current(J, domain, grid)
    if not rep.ok:
        raise CurrentError(f"current profile fails validation: {rep}")
    if large_domain_eps is None:
        p = cfg.physics
        params = PhysicsParams(kappa=p.kappa, c=p.c, h_ex=p.h_ex)
    else:
        params = an.large_domain_params(large_domain_eps, cfg.analysis.gamma, cfg.physics.h_ex)
    return TDGLModel(domain, grid, params, J, n_proj=cfg.run.n_proj, dt_factor=cfg.run.dt_factor)


class _Dumper:
    def __init__(self, model, out: Path, every: int):
        self.model, self.out, self.every = model, out, every

    def __call__(self, state, report):
        if self.every and state.step % self.every == 0:
            save_checkpoint(self.out / f"state_{state.step:08d}", state, self.model)


def run_case(cfg: RunConfig, out: Path | None = None, observer=None,
             large_domain_eps: float | None = None) -> CaseResult:
    """Normal-field solve then integration to a steady state (or t_max)."""
    try:
        model = build_model(cfg, large_domain_eps)
    except GlwireError as exc:
        raise StageError("normal_fields", exc) from exc
    r = cfg.run
    try:
        st0 = model.initial_state(r.initial, seed=r.seed)
        obs = [o for o in (observer,) if o is not None]
        if out is not None and cfg.output.dump_every:
            obs.append(_Dumper(model, out, cfg.output.dump_every))

        def chain(s, rep):
            for o in obs:
                o(s, rep)

        t0 = time.perf_counter()
        st, rep = model.run_to_steady(st0, tol=r.tol, t_max=r.t_max, record_every=r.record_every,
                                      observer=chain if obs else None, modulus_stop=True)
        wall = time.perf_counter() - t0
    except GlwireError as exc:
        raise StageError("tdgl", exc) from exc
    regions = extract_regions(model.nf.Bn, cfg.analysis.delta, model.grid)
    return CaseResult(cfg, model, st, rep, wall, regions)


def _safe_fit(fn, *args, **kw):
    try:
        f = fn(*args, **kw)
        return {"slope": f.slope, "r_squared": f.r_squared, "n_points": f.n_points,
                "agmon_integral": f.agmon_integral, "scaled_integral": f.scaled_integral}
    except (EmptyRegion, DegenerateFit) as exc:
        return {"error": f"{type(exc).__name__}: {exc}"}


def summarize_case(res: CaseResult) -> dict:
    """Numbers for the run report; all deterministic given the run."""
    m, st, rep, masks = res.model, res.state, res.report, res.regions
    V = m.V
    k, delta = m.kappa, masks.delta
    rho2 = np.abs(st.psi) ** 2
    total = float((V * rho2).sum())
    ids = m.steady_identities(st)
    out = {
        "status": rep.status, "fixed_point": rep.fixed_point, "t": st.t, "steps": st.step,
        "rate": rep.rate, "modulus_rate": rep.modulus_rate,
        "norm2": math.sqrt(total), "sup": float(np.sqrt(rho2.max())),
        "residual": rep.residual.as_dict(), "residual_relative": rep.residual.relative,
        "identities": asdict(ids), "identities_relative": ids.relative(),
        "h1": m.nf.h1, "h2": m.nf.h2, "min_grad_Bn": min_grad_Bn(m.nf.Bn, m.grid.h),
        "conjugacy_residual": conjugacy_residual(m.nf.Bn, m.nf.phin, m.grid.h),
        "S_components": masks.n_components_S,
    }
    for j in (1, 2):
        out[f"mass_omega_delta_{j}"] = an.region_mass(st.psi, masks.omega_delta[j], V)
        out[f"mass_S_delta_{j}"] = an.region_mass(st.psi, masks.S_delta_j[j], V)
        out[f"ratio_omega_delta_{j}"] = out[f"mass_omega_delta_{j}"] / total if total > 0 else 0.0
        out[f"fit_Gamma_{j}"] = _safe_fit(an.agmon_fit, st.psi, masks, j, k, delta, m.grid, "Gamma")
        out[f"fit_C_{j}"] = _safe_fit(an.agmon_fit, st.psi, masks, j, k, delta, m.grid, "C")
    try:
        pv = an.Phi_n_view(m.nf, st.psi, V)
        out["Phi_n_shift"] = pv.C
        out["Phi_n_orthogonality"] = pv.orthogonality_defect
    except ZeroOrderParameter:
        out["Phi_n_shift"] = None
    out["inclusion"] = an.inclusion_check(m, st, delta)
    return out


def centerline_rows(res: CaseResult) -> list:
    """|psi| along the wire axis x = Lx/2 (nearest node column)."""
    g = res.model.grid
    i = int(round(0.5 * (g.nx - 1)))
    a = np.abs(res.state.psi[i, :])
    return [(float(y), float(v)) for y, v in zip(g.y, a)]


def contour_rows(res: CaseResult, levels=None) -> list:
    """Points of B_n level lines as (level, x, y) triples."""
    from skimage import measure
    g = res.model.grid
    Bn = res.model.nf.Bn
    delta = res.regions.delta
    if levels is None:
        levels = (-1.0 - delta, -1.0, 0.0, 1.0, 1.0 + delta)
    rows = []
    for lev in levels:
        if not (Bn.min() < lev < Bn.max()):
            continue
        for line in measure.find_contours(Bn, lev):
            for px, py in line:
                rows.append((float(lev), float(px * g.h), float(py * g.h)))
            rows.append((float(lev), float("nan"), float("nan")))
    return rows


def write_case(res: CaseResult, out: Path) -> dict:
    """Checkpoint, fields, masks, CSVs and the JSON report of one run."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = res.config.as_dict()
    m = res.model
    save_checkpoint(out / "state_final", res.state, m)
    meta = {"nx": m.grid.nx, "ny": m.grid.ny, "h": m.grid.h}
    write_field(out / "Bn.f8", m.nf.Bn, dict(meta, name="Bn", units="dimensionless"))
    write_field(out / "phin.f8", m.nf.phin, dict(meta, name="phin", units="dimensionless"))
    masks = res.regions
    write_json(out / "regions.json", {
        "delta": masks.delta,
        "omega_1": rle_encode(masks.omega[1]), "omega_2": rle_encode(masks.omega[2]),
        "S_delta_1": rle_encode(masks.S_delta_j[1]), "S_delta_2": rle_encode(masks.S_delta_j[2]),
        "omega_delta_1": rle_encode(masks.omega_delta[1]),
        "omega_delta_2": rle_encode(masks.omega_delta[2]),
    }, cfg)
    write_csv(out / "centerline.csv", ["y", "abs_psi"], centerline_rows(res), cfg)
    write_csv(out / "bn_contours.csv", ["level", "x", "y"], contour_rows(res), cfg)
    summary = summarize_case(res)
    hj = compute_hj(m.domain, m.J, m.params.h_ex, grid=m.grid, Bn=m.nf.Bn)
    summary["hj_formula"] = [hj.formula[0], hj.formula[1]]
    summary["wall_seconds"] = res.wall
    write_json(out / "report.json", summary, cfg)
    return summary
