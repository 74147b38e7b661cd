"""Refinement studies: discrete norms, observed orders, reports and plots."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from pdwg2d.assembly import (
    WeakDofMap,
    assemble_B,
    assemble_S,
    assemble_rhs,
    build_system,
    dump_system,
)
from pdwg2d.cases import ManufacturedCase, get_case, interpolate_Ih
from pdwg2d.mesh import Mesh, coarse_mesh, refine_uniform
from pdwg2d.solver import solve

CSV_COLUMNS = [
    "level",
    "one_over_h",
    "ndof_lambda",
    "ndof_u",
    "nl0",
    "order_nl0",
    "nl1",
    "order_nl1",
    "e0",
    "order_e0",
    "residual",
    "seconds",
]


# -- discrete norms ----------------------------------------------------------

def norm_e0(dofmap: WeakDofMap, u_h: np.ndarray, ref: np.ndarray) -> float:
    """Elementwise L2 norm of the primal difference u_h - ref (dof vectors)."""
    t = dofmap.tables
    d = (u_h - ref).reshape(dofmap.mesh.num_triangles, t.ps_dim)
    vals = np.einsum("nqd,nd->nq", t.ps_q, d)
    return float(np.sqrt(np.einsum("nq,nq->", t.w_q, vals**2)))


def norm_lambda0(dofmap: WeakDofMap, lam_full: np.ndarray) -> float:
    """L2 norm of the interior component of the multiplier."""
    t = dofmap.tables
    loc = lam_full[dofmap.local_lambda_dofs()[:, 0:6]]  # (nt, 6)
    vals = np.einsum("qd,nd->nq", t.phi_q, loc)
    return float(np.sqrt(np.einsum("nq,nq->", t.w_q, vals**2)))


def norm_lambda1(dofmap: WeakDofMap, lam_full: np.ndarray) -> float:
    """Semi-norm (sum_T h_T int_{dT} lambda_n^2)^(1/2) of the flux component,
    integrated per element-edge incidence."""
    t = dofmap.tables
    loc = lam_full[dofmap.local_lambda_dofs()[:, 6:12]].reshape(-1, 3, 2)
    vals = np.einsum("nlqj,nlj->nlq", t.fluxb_e, loc)
    h = t.geom["diam"]
    return float(np.sqrt(np.einsum("n,nlq,nlq->", h, t.w_e, vals**2)))


# -- report types ------------------------------------------------------------

@dataclass
class LevelRecord:
    level: int
    one_over_h: int
    ndof_lambda: int
    ndof_u: int
    nl0: float
    nl1: float
    e0: Optional[float]
    residual: float
    seconds: float


@dataclass
class ConvergenceReport:
    case_id: str
    s: int
    gamma: float
    levels: list = field(default_factory=list)

    def orders(self, key: str) -> list:
        """log2 ratios of successive values of ``key``; None where undefined."""
        vals = [getattr(r, key) for r in self.levels]
        out = [None]
        for prev, cur in zip(vals, vals[1:]):
            if prev is None or cur is None or prev <= 0.0 or cur <= 0.0:
                out.append(None)
            else:
                out.append(math.log2(prev / cur))
        return out if vals else []


@dataclass
class RunConfig:
    case_id: str
    s: int
    gamma: Optional[float] = None
    levels: int = 4
    out_format: str = "csv"
    plot: Optional[str] = None  # "surface" | "contour"
    plot_out: Optional[str] = None
    dump_path: Optional[str] = None


@dataclass
class RunResult:
    report: ConvergenceReport
    mesh: Mesh
    dofmap: WeakDofMap
    u: np.ndarray
    lam_full: np.ndarray


def run_convergence(config: RunConfig) -> RunResult:
    """Solve the configured case on levels 0 .. levels-1 of uniform
    refinement and collect norms; level l has 1/h = 2^l unit-cell spacing."""
    case = get_case(config.case_id)
    gamma = case.coeffs.gamma if config.gamma is None else config.gamma
    coeffs = replace(case.coeffs, gamma=gamma)
    report = ConvergenceReport(case_id=case.id, s=config.s, gamma=gamma)

    mesh = coarse_mesh(case.domain).with_tags(case.bc)
    last = None
    for level in range(config.levels):
        dofmap = WeakDofMap(mesh, config.s)
        S = assemble_S(mesh, dofmap, coeffs)
        B = assemble_B(mesh, dofmap, coeffs)
        F = assemble_rhs(mesh, dofmap, case)
        system = build_system(S, B, F)
        if config.dump_path and level == config.levels - 1:
            with open(config.dump_path, "w") as fh:
                dump_system(system, fh)
        rep = solve(system)
        lam_full = dofmap.expand_lambda(rep.lam)

        e0 = None
        if not case.driven:
            e0 = norm_e0(dofmap, rep.u, interpolate_Ih(case, mesh, config.s))
        report.levels.append(
            LevelRecord(
                level=level,
                one_over_h=2**level,
                ndof_lambda=dofmap.n_free_lambda,
                ndof_u=dofmap.n_u,
                nl0=norm_lambda0(dofmap, lam_full),
                nl1=norm_lambda1(dofmap, lam_full),
                e0=e0,
                residual=rep.residual,
                seconds=rep.seconds,
            )
        )
        last = RunResult(report=report, mesh=mesh, dofmap=dofmap, u=rep.u, lam_full=lam_full)
        if level < config.levels - 1:
            mesh = refine_uniform(mesh)
    return last


# -- report emission ---------------------------------------------------------

def _fmt_order(v) -> str:
    return "" if v is None else f"{v:.3f}"


def report_rows(report: ConvergenceReport) -> list:
    o_nl0 = report.orders("nl0")
    o_nl1 = report.orders("nl1")
    o_e0 = report.orders("e0")
    rows = []
    for i, r in enumerate(report.levels):
        rows.append(
            {
                "level": r.level,
                "one_over_h": r.one_over_h,
                "ndof_lambda": r.ndof_lambda,
                "ndof_u": r.ndof_u,
                "nl0": r.nl0,
                "order_nl0": o_nl0[i],
                "nl1": r.nl1,
                "order_nl1": o_nl1[i],
                "e0": r.e0,
                "order_e0": o_e0[i],
                "residual": r.residual,
                "seconds": r.seconds,
            }
        )
    return rows


def emit_report(report: ConvergenceReport, fmt: str = "csv") -> str:
    """Render the report as a CSV or JSON string.

    CSV prints orders to 3 decimals as in the reference tables; JSON keeps
    full precision and round-trips through ``json.loads``.
    """
    rows = report_rows(report)
    if fmt == "json":
        return json.dumps(
            {
                "case": report.case_id,
                "s": report.s,
                "gamma": report.gamma,
                "rows": rows,
            },
            indent=2,
        )
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(
            [
                row["level"],
                row["one_over_h"],
                row["ndof_lambda"],
                row["ndof_u"],
                "" if row["nl0"] is None else f"{row['nl0']:.6e}",
                _fmt_order(row["order_nl0"]),
                f"{row['nl1']:.6e}",
                _fmt_order(row["order_nl1"]),
                "" if row["e0"] is None else f"{row['e0']:.6e}",
                _fmt_order(row["order_e0"]),
                f"{row['residual']:.3e}",
                f"{row['seconds']:.3f}",
            ]
        )
    return buf.getvalue()


# -- plots -------------------------------------------------------------------

def _vertex_averaged_u(result: RunResult) -> np.ndarray:
    """Average the (discontinuous) primal field over elements at each vertex."""
    mesh, t = result.mesh, result.dofmap.tables
    coeff = result.u.reshape(mesh.num_triangles, t.ps_dim)
    q = (t.geom["verts"] - t.geom["centroid"][:, None, :]) / t.geom["diam"][:, None, None]
    vand = np.concatenate([np.ones_like(q[:, :, :1]), q[:, :, : t.ps_dim - 1]], axis=2)
    vert_vals = np.einsum("nvd,nd->nv", vand, coeff)
    acc = np.zeros(mesh.num_vertices)
    cnt = np.zeros(mesh.num_vertices)
    np.add.at(acc, mesh.triangles, vert_vals)
    np.add.at(cnt, mesh.triangles, 1.0)
    return acc / np.maximum(cnt, 1.0)


def emit_plot(result: RunResult, kind: str, path: str) -> None:
    """Static SVG rendering of the primal solution.

    ``surface``: per-element color fill (viridis) of the element value;
    ``contour``: filled contours of the vertex-averaged field with 20 levels.
    Color map and level count are artifact choices, not part of the method.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import matplotlib.tri as mtri
    from matplotlib.collections import PolyCollection

    mesh = result.mesh
    fig, ax = plt.subplots(figsize=(5.0, 4.4))
    if kind == "surface":
        # Centroid-centered basis: coefficient 0 is the centroid value.
        vals = result.u.reshape(mesh.num_triangles, result.dofmap.tables.ps_dim)[:, 0]
        pc = PolyCollection(
            mesh.vertices[mesh.triangles], array=vals, cmap="viridis", edgecolors="none"
        )
        ax.add_collection(pc)
        ax.autoscale()
        fig.colorbar(pc, ax=ax)
    elif kind == "contour":
        tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
        vv = _vertex_averaged_u(result)
        cs = ax.tricontourf(tri, vv, levels=20, cmap="viridis")
        ax.tricontour(tri, vv, levels=20, colors="k", linewidths=0.3)
        fig.colorbar(cs, ax=ax)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    ax.set_aspect("equal")
    ax.set_title(f"u_h, case {result.report.case_id}, s={result.report.s}")
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
