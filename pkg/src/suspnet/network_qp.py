"""Assembly of the discrete dissipation form and its flux constraints.

The unknowns are the interior translational velocities, interior angular
velocities and per-neck permeation constants beta (positive flux along the
canonical +p direction).  Quasidisk vertices carry boundary data; wall
(quasidisk-quasidisk) edges carry prescribed fluxes of the boundary field.

Per clockwise face, weak incompressibility reads

    sum_e sigma_e beta*_e + sum_e sigma_e (U_m + U_n).p_e  = 0

over the fluid edges, plus the prescribed outward flux through the wall
portion; beta* is eliminated in favor of the Galilean-invariant beta via the
per-kind flux transform, which moves data to the right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import coefficients as coef
from .errors import (DimensionMismatch, NotBoundarySegment, NotQuasidisk,
                     RankToleranceAmbiguous)
from .geometry import (EDGE_BOUNDARY, EDGE_INTERIOR, EDGE_WALL, INTERIOR,
                       QUASIDISK, DiskNetwork)


@dataclass(frozen=True)
class BoundaryData:
    """Strain-rate entries of the traceless boundary matrix A = [[a,b],[c,-a]]."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    @property
    def matrix(self):
        return np.array([[self.a, self.b], [self.c, -self.a]])

    def velocity(self, x):
        return self.matrix @ np.asarray(x, float)


@dataclass
class DiscreteState:
    """Full per-vertex/per-edge state (including fixed entries)."""

    U: np.ndarray          # (nv, 2)
    omega: np.ndarray      # (nv,)
    beta: np.ndarray       # (ne,)

    def check(self, net: DiskNetwork):
        if (self.U.shape != (len(net.vertices), 2)
                or self.omega.shape != (len(net.vertices),)
                or self.beta.shape != (len(net.edges),)):
            raise DimensionMismatch("state arrays do not match the network")


def boundary_values(vertex, A: BoundaryData):
    """Boundary data (U, omega) carried by a quasidisk.

    U follows the linear data evaluated with the wall-constant convention
    ((a x, c x) on lateral walls, (b y, -a y) on horizontal walls); omega is
    the tangential slope of the wall-normal velocity in the wall's own frame.
    """
    if vertex.kind != QUASIDISK:
        raise NotQuasidisk(f"vertex {vertex.index} is not a quasidisk")
    x, y = vertex.center
    side = vertex.boundary_side
    if side in ("left", "right"):
        U = np.array([A.a * x, A.c * x])
        om = A.b if side == "left" else -A.b
    else:
        U = np.array([A.b * y, -A.a * y])
        om = A.c if side == "bottom" else -A.c
    return U, om


def wall_profile(edge, A: BoundaryData, net: DiskNetwork):
    """(omega_eff, stretch) of the wall data in the neck's local frame.

    omega_eff is the slope of the wall-normal velocity along +p, stretch the
    tangential strain rate p.A p; both enter the boundary-neck amplitudes.
    """
    v = net.vertices[edge.j]
    if v.kind != QUASIDISK:
        raise NotQuasidisk("edge does not end on a quasidisk")
    n_in = {"left": np.array([1.0, 0.0]), "right": np.array([-1.0, 0.0]),
            "bottom": np.array([0.0, 1.0]), "top": np.array([0.0, -1.0])}
    nin = n_in[v.boundary_side]
    Am = A.matrix
    return float(nin @ Am @ edge.p), float(edge.p @ Am @ edge.p)


def boundary_flux(edge, A: BoundaryData):
    """Outward flux of the boundary data through a wall edge, divided by R.

    The edge must join two quasidisks; its stored path follows the wall so
    the integral of (A x).n_out is exact for the linear data (midpoint rule
    per straight piece).
    """
    if edge.kind != EDGE_WALL or edge.wall_path is None:
        raise NotBoundarySegment("edge is not a wall segment")
    total = 0.0
    for P1, P2 in zip(edge.wall_path[:-1], edge.wall_path[1:]):
        seg = P2 - P1
        ln = float(np.hypot(*seg))
        if ln == 0.0:
            continue
        t = seg / ln
        n_out = np.array([t[1], -t[0]])
        # the wall path is stored in the boundary's counterclockwise sense
        # for the lower-index endpoint first; flip so n points out of the
        # domain (away from the origin side of the wall)
        mid = 0.5 * (P1 + P2)
        if n_out @ mid < 0:
            n_out = -n_out
        total += ln * float(A.velocity(mid) @ n_out)
    return total


def beta_transform(beta_star, Ui, Uj, omega_i, omega_j, delta, R, p):
    """Galilean-invariant beta from the raw mid-segment flux (interior neck)."""
    p = np.asarray(p, float)
    return (beta_star - (delta / (2.0 * R)) * float((np.asarray(Ui) +
                                                     np.asarray(Uj)) @ p)
            - (omega_i - omega_j) * (delta / 2.0) * (1.0 + delta / (4.0 * R)))


def beta_transform_inverse(beta, Ui, Uj, omega_i, omega_j, delta, R, p):
    p = np.asarray(p, float)
    return (beta + (delta / (2.0 * R)) * float((np.asarray(Ui) +
                                                np.asarray(Uj)) @ p)
            + (omega_i - omega_j) * (delta / 2.0) * (1.0 + delta / (4.0 * R)))


def beta_transform_boundary(beta_star, Ui, omega_i, gap, R, p):
    """Boundary-neck version; gap is the physical wall clearance."""
    p = np.asarray(p, float)
    return (beta_star - (gap / R) * float(np.asarray(Ui) @ p)
            - 0.5 * omega_i * (gap + gap**2 / (2.0 * R)))


# ---------------------------------------------------------------------------
# unknown bookkeeping
# ---------------------------------------------------------------------------

@dataclass
class UnknownIndex:
    u_col: dict = field(default_factory=dict)      # vertex -> column of U_x
    w_col: dict = field(default_factory=dict)      # vertex -> column of omega
    b_col: dict = field(default_factory=dict)      # edge index -> column
    n: int = 0
    dirichlet: dict = field(default_factory=dict)  # vertex -> (U, omega)
    fixed_beta: dict = field(default_factory=dict)
    wall_flux: dict = field(default_factory=dict)  # edge index -> flux data


def build_index(net: DiskNetwork, A: BoundaryData, dirichlet=None,
                fixed_beta=None, wall_flux=None) -> UnknownIndex:
    """Deterministic unknown layout: interior U pairs, interior omegas, betas."""
    idx = UnknownIndex()
    idx.dirichlet = dict(dirichlet or {})
    idx.fixed_beta = dict(fixed_beta or {})
    for v in net.vertices:
        if v.kind == QUASIDISK and v.index not in idx.dirichlet:
            U, om = boundary_values(v, A)
            idx.dirichlet[v.index] = (U, om)
    col = 0
    for v in net.vertices:
        if v.index in idx.dirichlet:
            continue
        idx.u_col[v.index] = col
        col += 2
    for v in net.vertices:
        if v.index in idx.dirichlet:
            continue
        idx.w_col[v.index] = col
        col += 1
    for k, e in enumerate(net.edges):
        if e.kind == EDGE_WALL or k in idx.fixed_beta:
            continue
        idx.b_col[k] = col
        col += 1
    idx.n = col
    for k, e in enumerate(net.edges):
        if e.kind == EDGE_WALL:
            idx.wall_flux[k] = (wall_flux or {}).get(k)
    return idx


class _Affine:
    """Sparse affine functional a.x + b over the unknown vector."""

    __slots__ = ("cols", "vals", "b")

    def __init__(self, b=0.0):
        self.cols = []
        self.vals = []
        self.b = b

    def add(self, col, val):
        if col is not None:
            self.cols.append(col)
            self.vals.append(val)
        return self

    def dense(self, n):
        a = np.zeros(n)
        for c, v in zip(self.cols, self.vals):
            a[c] += v
        return a


def _vertex_terms(idx: UnknownIndex, v, coeffU, coeffW, fn: _Affine,
                  direction=None):
    """Accumulate coeffU*(U_v . direction) + coeffW*omega_v into fn."""
    if v in idx.dirichlet:
        U, om = idx.dirichlet[v]
        if direction is not None:
            fn.b += coeffU * float(np.asarray(U) @ direction)
        fn.b += coeffW * om
    else:
        if direction is not None and coeffU != 0.0:
            c = idx.u_col[v]
            fn.add(c, coeffU * direction[0])
            fn.add(c + 1, coeffU * direction[1])
        if coeffW != 0.0:
            fn.add(idx.w_col[v], coeffW)


def _edge_amplitudes(net, idx, k, A: BoundaryData, R):
    """Affine amplitude functionals of edge k, keyed as in `coefficients`."""
    e = net.edges[k]
    amps = {}

    def beta_fn():
        fn = _Affine()
        if k in idx.fixed_beta:
            fn.b = idx.fixed_beta[k]
        else:
            fn.add(idx.b_col[k], 1.0)
        return fn

    if e.kind == EDGE_INTERIOR:
        xi = _Affine()
        _vertex_terms(idx, e.i, 1.0, R, xi, e.p)
        _vertex_terms(idx, e.j, -1.0, R, xi, e.p)
        s = _Affine()
        _vertex_terms(idx, e.i, 1.0, 0.0, s, e.q)
        _vertex_terms(idx, e.j, -1.0, 0.0, s, e.q)
        w = _Affine()
        _vertex_terms(idx, e.i, 0.0, R, w)
        _vertex_terms(idx, e.j, 0.0, -R, w)
        amps.update(xi=xi, s=s, w=w, g=beta_fn())
    elif e.kind == EDGE_BOUNDARY:
        om_eff, stretch = wall_profile(e, A, net)
        Uj = A.velocity(net.vertices[e.j].center)
        t = _Affine(-float(Uj @ e.p))
        _vertex_terms(idx, e.i, 1.0, R, t, e.p)
        w = _Affine(-R * om_eff)
        _vertex_terms(idx, e.i, 0.0, R, w)
        r = _Affine()
        _vertex_terms(idx, e.i, 0.0, R, r)
        s = _Affine(-float(Uj @ e.q))
        _vertex_terms(idx, e.i, 1.0, 0.0, s, e.q)
        amps.update(t=t, w=w, r=r, g=beta_fn(), s=s, Ra=_Affine(R * stretch))
    return amps


@dataclass
class QuadraticModel:
    """Q(x) = 1/2 x.H x + g.x + c over the free unknowns."""

    H: np.ndarray
    g: np.ndarray
    c: float
    index: UnknownIndex
    provenance: list
    mu: float
    R: float

    def value(self, x):
        return 0.5 * float(x @ self.H @ x) + float(self.g @ x) + self.c


def assemble_Q(net: DiskNetwork, mu, A: BoundaryData, dirichlet=None,
               fixed_beta=None, index: UnknownIndex | None = None):
    """Assemble the dissipation form over the free unknowns.

    Interior necks use the per-edge gap; boundary necks the symmetrized
    (doubled) wall gap, matching the closed-form coefficient normalization.
    """
    idx = index or build_index(net, A, dirichlet, fixed_beta)
    n = idx.n
    R = net.config.radius
    H = np.zeros((n, n))
    g = np.zeros(n)
    c = 0.0
    provenance = []
    for k, e in enumerate(net.edges):
        if e.kind == EDGE_WALL:
            continue
        amps = _edge_amplitudes(net, idx, k, A, R)
        if e.kind == EDGE_INTERIOR:
            layout, table, pw, delta = (coef.INTERIOR_TERMS, coef.coeff_C,
                                        coef.power_C, e.gap)
        else:
            layout, table, pw, delta = (coef.BOUNDARY_TERMS, coef.coeff_B,
                                        coef.power_B, 2.0 * e.gap)
        for name, indices, (n1, n2) in layout:
            a1, a2 = amps[n1], amps[n2]
            for kk in indices:
                val = table(kk, 1.0, R, mu) * delta ** (-pw(kk))
                provenance.append((k, name, pw(kk), val))
                v1 = a1.dense(n)
                v2 = v1 if a2 is a1 else a2.dense(n)
                H += val * (np.outer(v1, v2) + np.outer(v2, v1))
                g += val * (a1.b * v2 + a2.b * v1)
                c += val * a1.b * a2.b
    return QuadraticModel(H, g, c, idx, provenance, mu, R)


@dataclass
class ConstraintSystem:
    A: np.ndarray
    b: np.ndarray
    face_rows: list
    independent: np.ndarray
    rank: int
    index: UnknownIndex


def assemble_constraints(net: DiskNetwork, A: BoundaryData, dirichlet=None,
                         fixed_beta=None, wall_flux=None,
                         index: UnknownIndex | None = None,
                         rank_tol_factor=1e-12) -> ConstraintSystem:
    """One weak-incompressibility row per face, in the free unknowns."""
    idx = index or build_index(net, A, dirichlet, fixed_beta, wall_flux)
    n = idx.n
    R = net.config.radius
    rows = []
    rhs = []
    for f in net.faces:
        fn = _Affine()
        for (k, sg) in f.edges:
            e = net.edges[k]
            if e.kind == EDGE_WALL:
                data = idx.wall_flux.get(k)
                if data is None:
                    data = boundary_flux(e, A) / R
                fn.b += data          # outward flux, orientation-free
                continue
            # sigma * beta*_e via the transform
            if k in idx.fixed_beta:
                fn.b += sg * idx.fixed_beta[k]
            else:
                fn.add(idx.b_col[k], sg)
            if e.kind == EDGE_INTERIOR:
                half = e.gap / (2.0 * R)
                rot = (e.gap / 2.0) * (1.0 + e.gap / (4.0 * R))
                _vertex_terms(idx, e.i, sg * half, sg * rot, fn, e.p)
                _vertex_terms(idx, e.j, sg * half, -sg * rot, fn, e.p)
                # arc terms sigma (U_i + U_j) . p
                _vertex_terms(idx, e.i, sg, 0.0, fn, e.p)
                _vertex_terms(idx, e.j, sg, 0.0, fn, e.p)
            else:
                rot = 0.5 * (e.gap + e.gap**2 / (2.0 * R))
                _vertex_terms(idx, e.i, sg * e.gap / R, sg * rot, fn, e.p)
                # arc term of the disk side only
                _vertex_terms(idx, e.i, sg, 0.0, fn, e.p)
        rows.append(fn.dense(n))
        rhs.append(-fn.b)
    Am = np.array(rows) if rows else np.zeros((0, n))
    bv = np.array(rhs) if rhs else np.zeros(0)
    independent, rank = _independent_rows(Am, rank_tol_factor)
    return ConstraintSystem(Am, bv, list(range(len(net.faces))),
                            independent, rank, idx)


def _independent_rows(Am, tol_factor):
    if Am.size == 0:
        return np.zeros(0, dtype=int), 0
    q, r, piv = scipy.linalg.qr(Am.T, pivoting=True, mode="economic")
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return np.zeros(0, dtype=int), 0
    tol = tol_factor * diag[0]
    rank = int(np.sum(diag > tol))
    gray = np.sum((diag > tol) & (diag < 1e3 * tol))
    if gray:
        raise RankToleranceAmbiguous(
            f"{gray} pivots within 1e3x of the rank tolerance")
    sel = np.sort(piv[:rank])
    return sel, rank


# ---------------------------------------------------------------------------
# state evaluation (independent of the packed model)
# ---------------------------------------------------------------------------

def state_amplitudes(net: DiskNetwork, A: BoundaryData, state: DiscreteState,
                     k):
    """Amplitude values of edge k at a full state."""
    e = net.edges[k]
    R = net.config.radius
    Ui, Uj = state.U[e.i], state.U[e.j]
    oi, oj = state.omega[e.i], state.omega[e.j]
    if e.kind == EDGE_INTERIOR:
        return {
            "xi": float((Ui - Uj) @ e.p) + R * (oi + oj),
            "s": float((Ui - Uj) @ e.q),
            "w": R * (oi - oj),
            "g": state.beta[k],
        }
    om_eff, stretch = wall_profile(e, A, net)
    return {
        "t": float((Ui - Uj) @ e.p) + R * oi,
        "w": R * (oi - om_eff),
        "r": R * oi,
        "g": state.beta[k],
        "s": float((Ui - Uj) @ e.q),
        "Ra": R * stretch,
    }


def evaluate_Q(net: DiskNetwork, mu, A: BoundaryData, state: DiscreteState):
    """Total dissipation of a full state, split by group and by delta power.

    Returns (total, groups, powers) where groups has the five microflow
    classes and powers maps the delta_ref exponent to its coefficient.
    """
    state.check(net)
    R = net.config.radius
    dref = net.delta_ref
    groups = {"Q_sh_in": 0.0, "Q_sq_in": 0.0, "Q_per_in": 0.0,
              "Q_per_b": 0.0, "Q_sq_b": 0.0}
    powers = {2.5: 0.0, 1.5: 0.0, 0.5: 0.0}
    group_of = {
        "shear": "Q_sh_in", "squeeze": "Q_sq_in",
        "permeation_g2": "Q_per_in", "permeation_wg": "Q_per_in",
        "permeation_w2": "Q_per_in",
        "b_perm_g2": "Q_per_b", "b_shear_t2": "Q_per_b",
        "b_rot_w2": "Q_per_b", "b_cross_gt": "Q_per_b",
        "b_cross_gw": "Q_per_b", "b_cross_gr": "Q_per_b",
        "b_cross_tw": "Q_per_b", "b_roll_r2": "Q_per_b",
        "b_cross_tr": "Q_per_b", "b_cross_wr": "Q_per_b",
        "b_squeeze_s2": "Q_sq_b", "b_stretch_sa": "Q_sq_b",
    }
    for k, e in enumerate(net.edges):
        if e.kind == EDGE_WALL:
            continue
        amps = state_amplitudes(net, A, state, k)
        if e.kind == EDGE_INTERIOR:
            layout, table, pw = coef.INTERIOR_TERMS, coef.coeff_C, coef.power_C
            d_scaled = e.gap / dref
        else:
            layout, table, pw = coef.BOUNDARY_TERMS, coef.coeff_B, coef.power_B
            d_scaled = 2.0 * e.gap / dref
        for name, indices, (n1, n2) in layout:
            prod = amps[n1] * amps[n2]
            if prod == 0.0:
                continue
            for kk in indices:
                p = pw(kk)
                contrib = table(kk, d_scaled, R, mu) * prod
                powers[p] += contrib
                groups[group_of[name]] += contrib * dref ** (-p)
    total = sum(cp * dref ** (-p) for p, cp in powers.items())
    return total, groups, powers


def microflow_split(state: DiscreteState, net: DiskNetwork, mu,
                    A: BoundaryData | None = None):
    """Five-way microflow decomposition of Q at a state."""
    _, groups, _ = evaluate_Q(net, mu, A or BoundaryData(), state)
    return groups


def unpack_state(net: DiskNetwork, idx: UnknownIndex, x,
                 A: BoundaryData) -> DiscreteState:
    """Expand a free-unknown vector into a full network state."""
    nv, ne = len(net.vertices), len(net.edges)
    U = np.zeros((nv, 2))
    om = np.zeros(nv)
    beta = np.zeros(ne)
    for v in net.vertices:
        if v.index in idx.dirichlet:
            Ud, omd = idx.dirichlet[v.index]
            U[v.index] = np.asarray(Ud, float)
            om[v.index] = omd
        else:
            c = idx.u_col[v.index]
            U[v.index] = x[c:c + 2]
            om[v.index] = x[idx.w_col[v.index]]
    for k, e in enumerate(net.edges):
        if k in idx.b_col:
            beta[k] = x[idx.b_col[k]]
        elif k in idx.fixed_beta:
            beta[k] = idx.fixed_beta[k]
    return DiscreteState(U, om, beta)
