"""Built-in experiment scenarios, delta sweeps and blow-up exponent fits.

Each generator returns a `Scenario` bundling a network with its boundary
data, Dirichlet overrides and prescribed fluxes, ready for the solver.  The
hexagonal family realizes the periodic-array picture on a finite cluster by
pinning the outermost ring to the linear data (a rectangle cannot be
close-packed by a hexagonal lattice, so wall quasidisks would break the
uniform-gap assumption; the pinned ring reproduces the bulk behavior
exactly, with the zero-permeation minimizer).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import BadGeometry, DisconnectedNetwork, DoesNotFit
from .geometry import (EDGE_BOUNDARY, EDGE_INTERIOR, EDGE_WALL, QUASIDISK,
                       ConstraintFace, DiskConfig, DiskNetwork, DomainRect,
                       NeckEdge, Vertex, build_network, local_frame,
                       validate_close_packing)
from .network_qp import BoundaryData
from .solver import SolveResult, pinned_solve

EXTENSIONAL = BoundaryData(a=1.0, b=0.0, c=0.0)


@dataclass
class Scenario:
    name: str
    net: DiskNetwork
    A: BoundaryData
    mu: float = 1.0
    dirichlet: dict = field(default_factory=dict)   # vertex -> (U, omega)
    imposed_beta: dict = field(default_factory=dict)
    wall_flux: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def solve(self, tol=1e-10) -> SolveResult:
        return pinned_solve(self.net, self.mu, self.A, pinned=self.dirichlet,
                            imposed_beta=self.imposed_beta,
                            wall_flux=self.wall_flux, tol=tol)


def _hex_lattice(rings, spacing):
    """Axial-coordinate hexagonal disk of the given ring count."""
    pts, ring_of = [], []
    for m in range(-rings, rings + 1):
        for n in range(-rings, rings + 1):
            if abs(m + n) > rings:
                continue
            pts.append([spacing * (m + 0.5 * n),
                        spacing * (np.sqrt(3.0) / 2.0) * n])
            ring_of.append(max(abs(m), abs(n), abs(m + n)))
    return np.array(pts), np.array(ring_of)


def gen_hexagonal(rings, R, delta, mu=1.0, jitter=0.0, seed=0) -> Scenario:
    """Hexagonal cluster under extensional data, outer ring following it.

    The lattice constant is 2R + delta; the outermost ring is constrained to
    U = A x, omega = 0 (the role the periodic continuation plays in the
    reference configuration).
    """
    if rings < 1:
        raise BadGeometry("need at least one ring")
    a = 2.0 * R + delta
    centers, ring_of = _hex_lattice(rings, a)
    if jitter:
        rng = np.random.default_rng(seed)
        ang = rng.uniform(0.0, 2.0 * np.pi, len(centers))
        rad = jitter * delta * np.sqrt(rng.uniform(0.0, 1.0, len(centers)))
        centers = centers + np.stack([rad * np.cos(ang),
                                      rad * np.sin(ang)], axis=1)
    half = rings * a + 50.0 * R
    config = DiskConfig(centers, R, mu)
    net = build_network(config, DomainRect(half, half), delta,
                        quasidisk_gap_max=0.0)
    A = EXTENSIONAL
    dirichlet = {}
    for k in np.flatnonzero(ring_of == rings):
        dirichlet[int(k)] = (A.velocity(centers[k]), 0.0)
    if jitter:
        bad = validate_close_packing(net, 0.5, 2.0)
        if bad:
            raise BadGeometry(f"jitter breaks close packing on {len(bad)} edges")
    return Scenario("hexagonal", net, A, mu, dirichlet=dirichlet,
                    meta={"rings": rings, "n_disks": len(centers),
                          "pinned": sorted(dirichlet)})


def gen_jittered_hex(rings, R, delta, jitter, seed) -> Scenario:
    """Seeded jittered hexagonal cluster（offsets bounded by jitter*delta)."""
    sc = gen_hexagonal(rings, R, delta, jitter=jitter, seed=seed)
    sc.name = "jittered-hex"
    sc.meta.update(jitter=jitter, seed=seed)
    return sc


def gen_single_disk_boundary_layer(delta, R, mu=1.0) -> Scenario:
    """One disk centered in the unit square, four wall necks of gap delta.

    The corner faces carry the alternating fluxes of the boundary-layer
    experiment: beta0 = (2/R)(-1 + d) with d = delta + R(1 - 1/sqrt(2)).
    The network is built directly at the schematic's combinatorics, with the
    declared neck gap delta.
    """
    d = delta + R * (1.0 - 1.0 / np.sqrt(2.0))
    if not d < 1.0:
        raise BadGeometry("corner parameter d must stay below 1")
    beta0 = (2.0 / R) * (-1.0 + d)
    phi = -beta0          # outward flux magnitude per corner
    centers = {"T": np.array([0.0, 1.0]), "R": np.array([1.0, 0.0]),
               "B": np.array([0.0, -1.0]), "L": np.array([-1.0, 0.0])}
    sides = {"T": "top", "R": "right", "B": "bottom", "L": "left"}
    vertices = [Vertex(0, "interior", np.zeros(2))]
    for k, key in enumerate("TRBL"):
        vertices.append(Vertex(k + 1, QUASIDISK, centers[key],
                               boundary_side=sides[key], source_disk=0))
    gamma = R / np.sqrt(2.0)
    edges = []
    for k in range(4):
        xq = vertices[k + 1].center
        p, q = local_frame(np.zeros(2), xq)
        edges.append(NeckEdge(0, k + 1, EDGE_BOUNDARY, delta, 1.0, p, q,
                              gamma, gamma))
    corners = {"TR": np.array([1.0, 1.0]), "RB": np.array([1.0, -1.0]),
               "BL": np.array([-1.0, -1.0]), "LT": np.array([-1.0, 1.0])}
    wall_pairs = [("TR", 1, 2), ("RB", 2, 3), ("BL", 3, 4), ("LT", 1, 4)]
    for name, i, j in wall_pairs:
        xi, xj = vertices[i].center, vertices[j].center
        p, q = local_frame(xi, xj)
        dist = float(np.hypot(*(xj - xi)))
        edges.append(NeckEdge(i, j, EDGE_WALL, dist, dist / delta, p, q,
                              wall_path=[xi.copy(), corners[name].copy(),
                                         xj.copy()]))
    faces = [
        ConstraintFace((0, 1, 2), [(0, 1), (4, 1), (1, -1)]),   # TR corner
        ConstraintFace((0, 2, 3), [(1, 1), (5, 1), (2, -1)]),   # BR corner
        ConstraintFace((0, 3, 4), [(2, 1), (6, 1), (3, -1)]),   # BL corner
        ConstraintFace((0, 4, 1), [(3, 1), (7, -1), (0, -1)]),  # TL corner
    ]
    config = DiskConfig(np.zeros((1, 2)), R, mu)
    net = DiskNetwork(vertices, edges, faces, delta, config, DomainRect(1, 1))
    # outward fluxes: exits at the TL and BR corners, entries at TR and BL
    wall_flux = {4: -phi, 5: phi, 6: -phi, 7: phi}
    return Scenario("boundary-layer", net, BoundaryData(), mu,
                    wall_flux=wall_flux,
                    meta={"beta0": beta0, "d": d, "phi": phi})


def gen_pinning_strip(N, R, delta, mu=1.0) -> Scenario:
    """N motionless disk pairs; unit flux R*beta = 1 through each horizontal
    neck, zero through vertical necks."""
    if N < 1:
        raise BadGeometry("need N >= 1")
    L = 2.0 * R + delta
    centers = [[0.0, k * L] for k in range(N)] + [[L, k * L] for k in range(N)]
    vertices = [Vertex(k, "interior", np.array(c, float))
                for k, c in enumerate(centers)]
    edges = []
    for k in range(N):                      # horizontal flux carriers
        p, q = local_frame(vertices[k].center, vertices[N + k].center)
        edges.append(NeckEdge(k, N + k, EDGE_INTERIOR, delta, 1.0, p, q,
                              R / 2, R / 2))
    for k in range(N - 1):                  # vertical necks, both columns
        for base in (0, N):
            i, j = base + k, base + k + 1
            p, q = local_frame(vertices[i].center, vertices[j].center)
            edges.append(NeckEdge(i, j, EDGE_INTERIOR, delta, 1.0, p, q,
                                  R / 2, R / 2))
    faces = []
    for k in range(N - 1):
        vl = N + 2 * k          # left vertical edge index
        vr = vl + 1
        faces.append(ConstraintFace(
            (k, k + 1, N + k + 1, N + k),
            [(vl, 1), (k + 1, 1), (vr, -1), (k, -1)]))
    config = DiskConfig(np.array(centers), R, mu)
    net = DiskNetwork(vertices, edges, faces, delta, config,
                      DomainRect(100 * R + N * L, 100 * R + N * L))
    pinned = {v.index: (np.zeros(2), 0.0) for v in vertices}
    imposed = {k: (1.0 / R if k < N else 0.0) for k in range(len(edges))}
    return Scenario("pinning-strip", net, BoundaryData(), mu, pinned,
                    imposed, meta={"N": N})


BUILTIN = {
    "hexagonal": lambda delta, R=1.0, mu=1.0, rings=3, **kw: gen_hexagonal(
        rings, R, delta, mu),
    "jittered-hex": lambda delta, R=1.0, mu=1.0, rings=3, jitter=0.1,
    seed=0, **kw: gen_jittered_hex(rings, R, delta, jitter, seed),
    "boundary-layer": lambda delta, R=0.5, mu=1.0, **kw:
        gen_single_disk_boundary_layer(delta, R, mu),
    "pinning-strip": lambda delta, R=1.0, mu=1.0, N=3, **kw:
        gen_pinning_strip(N, R, delta, mu),
}


# ---------------------------------------------------------------------------
# sweeps and fits
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    delta: float
    I_total: float
    I1: float
    I2: float
    I3: float
    max_beta: float
    max_omega: float
    share_sh: float
    share_sq: float
    share_per: float


@dataclass
class SweepTable:
    rows: list

    @property
    def deltas(self):
        return np.array([r.delta for r in self.rows])

    @property
    def I(self):
        return np.array([r.I_total for r in self.rows])

    def to_csv(self):
        head = ("delta,I_total,I1,I2,I3,max_beta,max_omega,"
                "share_sh,share_sq,share_per")
        lines = [head]
        for r in self.rows:
            lines.append(",".join(f"{v:.17g}" for v in (
                r.delta, r.I_total, r.I1, r.I2, r.I3, r.max_beta,
                r.max_omega, r.share_sh, r.share_sq, r.share_per)))
        return "\n".join(lines) + "\n"


def run_sweep(factory, deltas, tol=1e-10) -> SweepTable:
    """Solve `factory(delta)` for each delta (descending) and tabulate."""
    rows = []
    for d in sorted(deltas, reverse=True):
        sc = factory(d)
        res = sc.solve(tol=tol)
        tot = res.I_total if res.I_total != 0.0 else 1.0
        gr = res.groups
        rows.append(SweepRow(
            d, res.I_total, *res.I_split, res.max_beta, res.max_omega,
            gr.get("Q_sh_in", 0.0) / tot,
            (gr.get("Q_sq_in", 0.0) + gr.get("Q_sq_b", 0.0)) / tot,
            (gr.get("Q_per_in", 0.0) + gr.get("Q_per_b", 0.0)) / tot))
    return SweepTable(rows)


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    window: tuple


def fit_exponent(table: SweepTable, window=None) -> ExponentFit:
    """Least-squares slope of log I against log delta on the window."""
    d, I = table.deltas, table.I
    if window is None:
        window = (d.min(), d.max())
    m = (d >= window[0]) & (d <= window[1]) & (I > 0)
    if m.sum() < 4:
        raise BadGeometry("exponent fit needs at least 4 points in window")
    x, y = np.log(d[m]), np.log(I[m])
    Amat = np.stack([x, np.ones_like(x)], axis=1)
    (slope, intercept), res, *_ = np.linalg.lstsq(Amat, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(res[0]) if len(res) else float(
        np.sum((y - Amat @ [slope, intercept]) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(intercept), r2,
                       (float(window[0]), float(window[1])))


# ---------------------------------------------------------------------------
# discrete Korn property
# ---------------------------------------------------------------------------

def korn_check(net: DiskNetwork, fixed=None):
    """Minimum of sum[(dU.q)^2] / sum[dU^2] over states vanishing on `fixed`.

    Returns (C, mode, flag); `mode` is the minimizing free-vertex velocity
    field, and flag marks degenerate networks (no fixed vertices reachable,
    or too little connectivity for a positive constant).
    """
    fixed = set(fixed or []) | {v.index for v in net.vertices
                                if v.kind == QUASIDISK}
    free = [v.index for v in net.vertices if v.index not in fixed]
    if not free:
        return np.inf, np.zeros(0), "all-fixed"
    col = {v: 2 * k for k, v in enumerate(free)}
    n = 2 * len(free)
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    for e in net.edges:
        if e.kind == EDGE_WALL:
            continue
        rowq = np.zeros(n)
        rows = [np.zeros(n), np.zeros(n)]
        for v, sgn in ((e.i, 1.0), (e.j, -1.0)):
            if v in col:
                c = col[v]
                rowq[c:c + 2] += sgn * e.q
                rows[0][c] += sgn
                rows[1][c + 1] += sgn
        S += np.outer(rowq, rowq)
        T += np.outer(rows[0], rows[0]) + np.outer(rows[1], rows[1])
    if not np.any(T):
        raise DisconnectedNetwork("no edges touch the free vertices")
    tiny = 1e-14 * float(np.max(np.diag(T)))
    if float(np.min(scipy.linalg.eigvalsh(T))) <= tiny:
        return 0.0, np.zeros(n), "rigid-motion-kernel"
    vals, vecs = scipy.linalg.eigh(S, T)
    C = float(vals[0])
    flag = "degenerate" if C <= 1e-12 else "ok"
    return C, vecs[:, 0], flag
