"""Experiment runners behind the command line.

Each runner takes a validated :class:`ExperimentConfig` and returns the
report together with the CSV tables to write, as
``(suffix, schema, header, rows)`` tuples.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ExperimentConfig
from .dn_map import assemble_dn
from .errors import ConfigError
from .fem import assemble, solve_dirichlet
from .gconv_lab import GCONV_COLUMNS, LaminateSequence, run_laminate_cases, gconv_dn_study, gconv_solution_study, gconv_table
from .mesh import build_rect_mesh
from .pushforward import BoundaryFixingBump, form_invariance_residual, identity_map, twisted_div_residual, uniqueness_demo
from .reconstruct import direct_mean_tensor, lipschitz_check, recover_mean_difference, recover_network_profiles, recover_traction
from .report import CaseRecord, ExperimentReport
from .tensor_field import DiagonalProfileField, boundary_traction_direct

__all__ = ["RUNNERS", "DESCRIPTIONS", "run_experiment", "dn_invariants", "rate_fit", "decreasing_or_floor"]

# errors at or below this are treated as exact
ROUNDOFF_FLOOR = 1e-10

DESCRIPTIONS = {
    "dn": "D-N operator invariants: symmetry, constant kernel, semidefiniteness, linear reproduction",
    "traction": "boundary traction from the D-N map against sigma.nu",
    "mean": "mean tensor difference from linear-trace pairings against dense quadrature",
    "lipschitz": "mean difference bounded by (1 + diam^2) times the D-N distance",
    "network": "string-network profiles read off two boundary edges",
    "pushforward": "same D-N map, different tensor: push-forward by a boundary-fixing map",
    "gconv": "laminate sequence against its G-limit: solutions, energies, averages",
}


def map_levels(fn, levels, jobs: int = 1) -> list:
    """``[fn(n) for n in levels]``, optionally threaded, in input order."""
    if jobs and jobs > 1 and len(levels) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, levels))
    return [fn(n) for n in levels]


def rate_fit(h, err) -> float:
    """Least-squares slope of log(err) against log(h)."""
    h, err = np.asarray(h, float), np.asarray(err, float)
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def decreasing_or_floor(err, floor: float = ROUNDOFF_FLOOR) -> bool:
    """Each value below the previous one, unless it is already at ``floor``."""
    err = list(err)
    return all(b < a or b <= floor for a, b in zip(err, err[1:]))


def dn_invariants(dn, rng, count: int = 100) -> dict:
    """Relative symmetry and constant-kernel defects, smallest Rayleigh quotient."""
    L = dn.L
    scale = np.abs(L).max()
    V = rng.standard_normal((L.shape[0], count))
    q = np.einsum("ij,ij->j", V, L @ V) / np.einsum("ij,ij->j", V, V)
    return {
        "symmetry_defect": float(np.abs(L - L.T).max() / scale),
        "kernel_defect": float(np.abs(L @ np.ones(L.shape[0])).max() / scale),
        "min_rayleigh": float(q.min() / scale),
    }


def _run_dn(cfg: ExperimentConfig, rep: ExperimentReport, jobs: int):
    field, tol = cfg.field(), cfg.tolerances
    a, b = cfg.domain

    def work(n):
        mesh = build_rect_mesh(a, b, n)
        system = assemble(mesh, field)
        dn = assemble_dn(mesh, field)
        inv = dn_invariants(dn, np.random.default_rng([cfg.seed, n]), cfg.probe_count)
        lin = 0.0
        for xi in ((1.0, 0.0), (0.0, 1.0), (0.6, -0.8)):
            g = lambda x, y, xi=xi: xi[0] * x + xi[1] * y
            u = np.asarray(solve_dirichlet(mesh, field, g, system))
            lin = max(lin, float(np.abs(u - g(mesh.nodes[:, 0], mesh.nodes[:, 1])).max()))
        inv["linear_error"] = lin
        inv["schur_residual"] = dn.residual
        return inv

    rows = []
    for n, r in zip(cfg.mesh, map_levels(work, cfg.mesh, jobs)):
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n}))
        case.scalars.update(r)
        case.check("symmetric", r["symmetry_defect"] < tol["symmetry"])
        case.check("constant_kernel", r["kernel_defect"] < tol["constant_kernel"])
        case.check("positive_semidefinite", r["min_rayleigh"] >= -1e-12)
        case.check("linear_reproduction", r["linear_error"] < tol["linear_reproduction"])
        rows.append([n, r["symmetry_defect"], r["kernel_defect"], r["min_rayleigh"], r["linear_error"]])
    return [("invariants", "dn_invariants v1", ["n", "symmetry_defect", "kernel_defect", "min_rayleigh", "linear_error"], rows)]


def _run_traction(cfg, rep, jobs):
    field, tol = cfg.field(), cfg.tolerances
    a, b = cfg.domain

    def work(n):
        mesh = build_rect_mesh(a, b, n)
        rec = recover_traction(assemble_dn(mesh, field))
        ref = boundary_traction_direct(field, mesh, at="nodes")
        err = np.linalg.norm(rec.traction - ref.traction, axis=1)[~rec.corner]
        return mesh.h, float(err.max())

    res = map_levels(work, cfg.mesh, jobs)
    rows = []
    for n, (h, e) in zip(cfg.mesh, res):
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n}))
        case.scalars.update(h=h, max_error=e)
        rows.append([n, h, e])
    errs = [e for _, e in res]
    rep.check("finest_within_tolerance", errs[-1] < tol["traction_max"], value=errs[-1])
    if len(res) > 1:
        exact = max(errs) <= ROUNDOFF_FLOOR
        rate = float("nan") if exact else rate_fit([h for h, _ in res], errs)
        rep.check("rate_at_least_first_order", exact or rate >= 1.0, rate=rate, at_roundoff=exact)
    return [("traction", "traction_error v1", ["n", "h", "max_error"], rows)]


def _run_mean(cfg, rep, jobs):
    f, g, tol = cfg.field("sigma"), cfg.field("sigma_prime"), cfg.tolerances
    a, b = cfg.domain
    oracle = direct_mean_tensor(f, (a, b), cfg.oracle_grid) - direct_mean_tensor(g, (a, b), cfg.oracle_grid)

    def work(n):
        mesh = build_rect_mesh(a, b, n)
        return recover_mean_difference(assemble_dn(mesh, f), assemble_dn(mesh, g)).matrix

    rows, errs = [], []
    for n, M in zip(cfg.mesh, map_levels(work, cfg.mesh, jobs)):
        e = float(np.linalg.norm(M - oracle))
        errs.append(e)
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n}))
        case.scalars.update(matrix=M, oracle=oracle, error=e)
        case.check("within_tolerance", e < tol["mean_abs"])
        rows.append([n, M[0, 0], M[0, 1], M[1, 1], e])
    rep.check("error_decreasing", decreasing_or_floor(errs), values=errs)
    return [("mean", "mean_difference v1", ["n", "m11", "m12", "m22", "error"], rows)]


def _run_lipschitz(cfg, rep, jobs):
    f, g = cfg.field("sigma"), cfg.field("sigma_prime")
    a, b = cfg.domain

    def work(n):
        mesh = build_rect_mesh(a, b, n)
        return lipschitz_check(assemble_dn(mesh, f), assemble_dn(mesh, g), mesh, cfg.slack)

    rows = []
    for n, r in zip(cfg.mesh, map_levels(work, cfg.mesh, jobs)):
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n, "slack": cfg.slack}))
        case.scalars.update(
            lhs=r.lhs, lhs_spectral=r.lhs_spectral, op_norm=r.op_norm, prefactor=r.prefactor, rhs=r.rhs, ratio=r.ratio
        )
        case.check("bound_holds", r.holds)
        rows.append([n, r.lhs, r.lhs_spectral, r.op_norm, r.prefactor, r.rhs, r.ratio])
    return [("lipschitz", "lipschitz v1", ["n", "lhs", "lhs_spectral", "op_norm", "prefactor", "rhs", "ratio"], rows)]


def _run_network(cfg, rep, jobs):
    field, tol = cfg.field(), cfg.tolerances
    if not isinstance(field, DiagonalProfileField):
        raise ConfigError("network experiment needs a diagonal field")
    a, b = cfg.domain

    def work(n):
        mesh = build_rect_mesh(a, b, n)
        return recover_network_profiles(assemble_dn(mesh, field), mesh)

    res = map_levels(work, cfg.mesh, jobs)
    rows, e1s = [], []
    for n, pp in zip(cfg.mesh, res):
        e1, e2 = pp.max_errors(field.f1, field.f2)
        e1s.append(e1)
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n}))
        case.scalars.update(sigma1_error=e1, sigma2_error=e2)
        rows.append([n, e1, e2])
    rep.check("sigma1_error_decreasing", decreasing_or_floor(e1s), values=e1s)
    ratios = [p / q if q > ROUNDOFF_FLOOR else float("inf") for p, q in zip(e1s, e1s[1:])]
    rep.check(
        "sigma1_ratio_per_doubling",
        all(r >= tol["profile_ratio"] or q <= ROUNDOFF_FLOOR for r, q in zip(ratios, e1s[1:])),
        ratios=ratios,
    )
    rep.check("sigma2_finest_within_tolerance", rows[-1][2] < tol["sigma2_abs"], value=rows[-1][2])

    fine = res[-1]
    prof = lambda s, c, fn: [[x, v, float(fn(np.array([x]))[0]), abs(v - float(fn(np.array([x]))[0])), int(k)]
                             for (x, v), k in zip(s, c)]
    header = ["abscissa", "recovered", "true", "abs_error", "corner"]
    return [
        ("errors", "network_errors v1", ["n", "sigma1_error", "sigma2_error"], rows),
        ("sigma1", "network_profile v1", header, prof(fine.sigma1, fine.corner1, field.f1)),
        ("sigma2", "network_profile v1", header, prof(fine.sigma2, fine.corner2, field.f2)),
    ]


def _run_pushforward(cfg, rep, jobs):
    field, pmap, tol = cfg.field(), cfg.pmap(), cfg.tolerances
    if not isinstance(pmap, BoundaryFixingBump):
        raise ConfigError("pushforward experiment needs a boundary-fixing (bump) map")
    u = lambda x, y: x * x + y
    v = lambda x, y: x * y

    def work(n):
        mesh = build_rect_mesh(1.0, 1.0, n)
        demo = uniqueness_demo(mesh, field, pmap.t, pmap.c)
        return (
            demo,
            max(twisted_div_residual(mesh, field, pmap)),
            form_invariance_residual(mesh, field, identity_map(), u, v),
            form_invariance_residual(mesh, field, pmap, u, v),
        )

    res = map_levels(work, cfg.mesh, jobs)
    rows = []
    for n, (d, tw, fid, fmap) in zip(cfg.mesh, res):
        case = rep.add_case(CaseRecord(f"n={n}", {"n": n, "t": pmap.t}))
        case.scalars.update(d.to_dict(), twisted_residual=tw, form_identity=fid, form_map=fmap)
        envelope = max(d.base_residual, 1e-12)
        case.check("field_distance_above_min", d.field_distance > tol["field_distance_min"])
        case.check("pushed_residual_above_envelope", d.pushed_residual > tol["plateau_factor"] * envelope,
                   envelope=envelope)
        case.check("identity_form_exact", fid < tol["identity_form"])
        rows.append([n, d.dn_norm_diff, d.dn_norm_diff_same_mesh, d.field_distance, d.pushed_residual,
                     d.base_residual, tw, fid, fmap])
    dn = [r[1] for r in rows]
    rep.check("dn_norm_diff_decreasing", all(q < p for p, q in zip(dn, dn[1:])), values=dn)
    if len(rows) > 1:
        pushed = [r[4] for r in rows]
        # a plateau: the residual does not decay between the two finest levels
        rep.check("pushed_residual_plateaus", pushed[-1] >= 0.5 * pushed[-2], values=pushed)
        hs = [1.0 / n for n in cfg.mesh]
        tw = [r[6] for r in rows]
        tw_exact = max(tw) <= ROUNDOFF_FLOOR
        rate = float("nan") if tw_exact else rate_fit(hs, tw)
        rep.check("twisted_residual_rate", tw_exact or rate >= 1.0, rate=rate)
        fm = [r[8] for r in rows]
        rep.check("form_residual_decreasing", decreasing_or_floor(fm, 1e-12), values=fm)
    header = ["n", "dn_norm_diff", "dn_norm_diff_same_mesh", "field_distance", "pushed_residual",
              "base_residual", "twisted_residual", "form_identity", "form_map"]
    return [("pushforward", "pushforward v1", header, rows)]


def _run_gconv(cfg, rep, jobs):
    lam = cfg.raw["laminate"]
    seq = LaminateSequence(
        tuple(lam["frequencies"]), lam["alpha"], lam["beta"], lam.get("theta", 0.5), lam.get("c", 1.0)
    )
    factor = int(lam.get("mesh_factor", 8))
    rows = run_laminate_cases(seq, cfg.domain, factor, None, None, jobs)
    dnr = gconv_dn_study(seq, cfg.domain, factor, rows=rows)
    sol = gconv_solution_study(seq, domain=cfg.domain, factor=factor, rows=rows)
    for c_dn, c_sol in zip(dnr.cases, sol.cases):
        case = rep.add_case(CaseRecord(c_dn.name, c_dn.inputs))
        case.scalars.update(c_dn.scalars, **c_sol.scalars)
        for k, ok in c_dn.assertions.items():
            case.check(k, ok, **c_dn.details.get(k, {}))
    for src in (dnr, sol):
        for k, ok in src.assertions.items():
            rep.check(k, ok, **src.details.get(k, {}))
    rep.details.update({k: v for k, v in dnr.details.items() if k not in dnr.assertions})
    return [("gconv", "gconv v1", GCONV_COLUMNS, gconv_table(rows))]


RUNNERS = {
    "dn": _run_dn,
    "traction": _run_traction,
    "mean": _run_mean,
    "lipschitz": _run_lipschitz,
    "network": _run_network,
    "pushforward": _run_pushforward,
    "gconv": _run_gconv,
}


def run_experiment(cfg: ExperimentConfig, jobs: int = 1):
    """Run ``cfg``; return ``(report, tables)``. Exceptions propagate."""
    rep = ExperimentReport(cfg.kind, config=cfg.raw)
    tables = RUNNERS[cfg.kind](cfg, rep, jobs)
    return rep, tables
