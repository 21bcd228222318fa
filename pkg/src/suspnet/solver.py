"""Equality-constrained minimization of the dissipation form.

The KKT saddle system [[H, A^T], [A, 0]] is solved densely with symmetric
Jacobi equilibration; H is positive definite on the whole free space, so the
bordered system is nonsingular whenever the selected constraint rows are
independent.  Dropped (dependent) rows are reported with zero multipliers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InconsistentConstraints, SingularKKT
from .network_qp import (BoundaryData, ConstraintSystem, QuadraticModel,
                         assemble_Q, assemble_constraints, build_index,
                         evaluate_Q, unpack_state)


@dataclass
class SolveResult:
    state: object                 # DiscreteState
    x: np.ndarray                 # packed minimizer
    multipliers: np.ndarray       # per face; zero for dropped rows
    dropped_rows: list
    I_total: float
    I_split: tuple                # (I1, I2, I3): delta^-5/2, -3/2, -1/2
    residuals: dict
    groups: dict = field(default_factory=dict)

    @property
    def max_beta(self):
        return float(np.max(np.abs(self.state.beta))) if len(
            self.state.beta) else 0.0

    @property
    def max_omega(self):
        return float(np.max(np.abs(self.state.omega))) if len(
            self.state.omega) else 0.0


def _equilibrated_solve(K, rhs):
    norms = np.sqrt(np.maximum(np.abs(np.diag(K)),
                               np.max(np.abs(K), axis=0)))
    norms[norms == 0.0] = 1.0
    S = 1.0 / norms
    Ks = K * S[:, None] * S[None, :]
    try:
        y = scipy.linalg.solve(Ks, rhs * S, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise SingularKKT(str(exc)) from exc
    if not np.all(np.isfinite(y)):
        raise SingularKKT("non-finite KKT solution")
    return y * S


def solve(model: QuadraticModel, constraints: ConstraintSystem,
          net=None, A: BoundaryData | None = None,
          tol=1e-10) -> SolveResult:
    """Minimize Q subject to the independent constraint rows."""
    n = model.index.n
    H, g = model.H, model.g
    sel = constraints.independent
    Asel = constraints.A[sel] if len(sel) else np.zeros((0, n))
    bsel = constraints.b[sel] if len(sel) else np.zeros(0)
    m = len(bsel)
    if n == 0:
        x = np.zeros(0)
        lam_sel = np.zeros(0)
    else:
        K = np.zeros((n + m, n + m))
        K[:n, :n] = H
        if m:
            K[:n, n:] = Asel.T
            K[n:, :n] = Asel
        rhs = np.concatenate([-g, bsel])
        y = _equilibrated_solve(K, rhs)
        x, lam_sel = y[:n], y[n:]

    scale = max(1.0, float(np.linalg.norm(x)))
    if constraints.A.size:
        res_full = constraints.A @ x - constraints.b
        con_scale = max(scale, float(np.max(np.abs(constraints.b)))
                        if constraints.b.size else 0.0,
                        float(np.max(np.abs(constraints.A))) * scale)
        if float(np.max(np.abs(res_full))) > 1e3 * tol * con_scale:
            raise InconsistentConstraints(
                f"constraint residual {np.max(np.abs(res_full)):.3e} "
                f"exceeds tolerance (rhs not in range?)")
        con_res = float(np.max(np.abs(res_full))) / con_scale
    else:
        con_res = 0.0
    if n:
        stat = H @ x + g + (Asel.T @ lam_sel if m else 0.0)
        stat_scale = max(float(np.max(np.abs(H))) * scale,
                         float(np.max(np.abs(g))), 1e-300)
        stat_res = float(np.max(np.abs(stat))) / stat_scale
    else:
        stat_res = 0.0
    residuals = {"constraint": con_res, "stationarity": stat_res}

    multipliers = np.zeros(len(constraints.face_rows))
    dropped = [i for i in range(len(constraints.face_rows)) if i not in sel]
    multipliers[sel] = lam_sel

    if net is not None:
        state = unpack_state(net, model.index, x, A or BoundaryData())
        total, groups, powers = evaluate_Q(net, model.mu, A or BoundaryData(),
                                           state)
        split = (powers[2.5], powers[1.5], powers[0.5])
    else:
        state, groups = None, {}
        total = model.value(x)
        split = (np.nan, np.nan, np.nan)
    return SolveResult(state, x, multipliers, dropped, total, split,
                       residuals, groups)


def solve_network(net, mu, A: BoundaryData, dirichlet=None, fixed_beta=None,
                  wall_flux=None, tol=1e-10) -> SolveResult:
    """Assemble and solve in one call (shared unknown layout)."""
    idx = build_index(net, A, dirichlet, fixed_beta, wall_flux)
    model = assemble_Q(net, mu, A, index=idx)
    cons = assemble_constraints(net, A, wall_flux=wall_flux, index=idx)
    return solve(model, cons, net=net, A=A, tol=tol)


def pinned_solve(net, mu, A: BoundaryData, pinned=None, imposed_beta=None,
                 wall_flux=None, tol=1e-10) -> SolveResult:
    """Solve with extra frozen vertices and prescribed neck fluxes.

    ``pinned`` maps vertex index to (U, omega) (default zeros), and
    ``imposed_beta`` maps edge index to a beta value.  With everything
    frozen this reduces to a consistency check plus a form evaluation.
    """
    dirichlet = {}
    for v, val in (pinned or {}).items():
        if val is None:
            dirichlet[v] = (np.zeros(2), 0.0)
        else:
            dirichlet[v] = (np.asarray(val[0], float), float(val[1]))
    return solve_network(net, mu, A, dirichlet=dirichlet,
                         fixed_beta=imposed_beta, wall_flux=wall_flux,
                         tol=tol)


@dataclass
class DefinitenessReport:
    positive_definite: bool
    smallest_pivot: float
    semidefinite: bool = False
    offending_edge: int | None = None
    offending_eigenvalue: float | None = None


def check_positive_definite(model: QuadraticModel,
                            net=None) -> DefinitenessReport:
    """Cholesky-based definiteness diagnosis of the assembled Hessian."""
    H = model.H
    if H.size == 0:
        return DefinitenessReport(True, np.inf)
    if not np.any(H):
        return DefinitenessReport(False, 0.0, semidefinite=True)
    try:
        L = scipy.linalg.cholesky(H, lower=True)
        return DefinitenessReport(True, float(np.min(np.diag(L)) ** 2))
    except scipy.linalg.LinAlgError:
        pass
    worst_edge, worst_eig = None, np.inf
    if net is not None:
        for k, prov_edge in enumerate(net.edges):
            cols = _edge_columns(model.index, prov_edge, k)
            if not cols:
                continue
            sub = H[np.ix_(cols, cols)]
            lo = float(np.min(scipy.linalg.eigvalsh(sub)))
            if lo < worst_eig:
                worst_eig, worst_edge = lo, k
    else:
        worst_eig = float(np.min(scipy.linalg.eigvalsh(H)))
    return DefinitenessReport(False, worst_eig, offending_edge=worst_edge,
                              offending_eigenvalue=worst_eig)


def _edge_columns(idx, e, k):
    cols = []
    for v in (e.i, e.j):
        if v in idx.u_col:
            cols.extend([idx.u_col[v], idx.u_col[v] + 1])
        if v in idx.w_col:
            cols.append(idx.w_col[v])
    if k in idx.b_col:
        cols.append(idx.b_col[k])
    return cols
