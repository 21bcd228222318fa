"""Discrete network construction from a disk configuration.

Disks inside a rectangular domain are connected to their Voronoi neighbors;
near-wall disks additionally connect to *quasidisks* (wall segments created
by reflecting the disk across the wall, represented by the foot point of the
disk center).  Edges carry the local frame and gap data consumed by the
dissipation assembly; faces are the cells of the induced planar graph and
carry the incidences used by the weak incompressibility constraints.

Local frame convention: for the canonical edge (i < j), q points from x_i to
x_j and p = rotate(q, +90deg), so a clockwise cyclic face traversal makes
p the outward normal on each mid-segment it crosses in canonical direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi

from .errors import (BadGeometry, CoincidentCenters, DisconnectedNetwork,
                     NegativeGap, OverlappingDisks)

INTERIOR = "interior"
QUASIDISK = "quasidisk"

EDGE_INTERIOR = "interior-interior"
EDGE_BOUNDARY = "interior-boundary"
EDGE_WALL = "boundary-boundary"

WALLS = ("right", "top", "left", "bottom")   # counterclockwise order


@dataclass(frozen=True)
class DomainRect:
    half_width: float
    half_height: float

    def __post_init__(self):
        if self.half_width <= 0 or self.half_height <= 0:
            raise BadGeometry("domain half sizes must be positive")


@dataclass
class DiskConfig:
    centers: np.ndarray          # (N, 2)
    radius: float
    mu: float

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if self.radius <= 0 or self.mu <= 0:
            raise BadGeometry("radius and viscosity must be positive")


@dataclass
class Vertex:
    index: int
    kind: str
    center: np.ndarray
    boundary_side: str | None = None   # quasidisks only
    source_disk: int | None = None     # disk whose reflection created it


@dataclass
class NeckEdge:
    i: int
    j: int
    kind: str
    gap: float                   # delta_ij
    d: float                     # delta_ij / delta_ref
    p: np.ndarray
    q: np.ndarray
    gamma_minus: float = 0.0
    gamma_plus: float = 0.0
    wall_path: list | None = None   # polyline for wall (quasidisk) edges


@dataclass
class ConstraintFace:
    vertices: tuple              # clockwise cyclic order
    edges: list                  # [(edge index, sigma)], sigma=+1 canonical
    nvertices: int = field(init=False)

    def __post_init__(self):
        self.nvertices = len(self.vertices)


@dataclass
class DiskNetwork:
    vertices: list
    edges: list
    faces: list
    delta_ref: float
    config: DiskConfig
    domain: DomainRect
    jitter_eps: float = 0.0

    @property
    def interior_indices(self):
        return [v.index for v in self.vertices if v.kind == INTERIOR]

    @property
    def quasidisk_indices(self):
        return [v.index for v in self.vertices if v.kind == QUASIDISK]

    def edges_of(self, kind):
        return [e for e in self.edges if e.kind == kind]


def interparticle_gap(kind, dist, R):
    """Gap between two neighbors given their center distance."""
    if dist <= 0:
        raise BadGeometry("center distance must be positive")
    if kind == EDGE_INTERIOR:
        gap = dist - 2.0 * R
    elif kind == EDGE_BOUNDARY:
        gap = dist - R
    elif kind == EDGE_WALL:
        gap = dist
    else:
        raise BadGeometry(f"unknown edge kind {kind!r}")
    if gap <= 0:
        raise NegativeGap(f"nonpositive gap {gap} for {kind} at distance {dist}")
    return gap


def local_frame(xi, xj):
    """Unit vectors (p, q): q from x_i toward x_j, p = rotate(q, +90deg).

    With this orientation the per-neck forms and the weak incompressibility
    constraint hold with their natural signs for clockwise faces (positive
    beta flux along +p).
    """
    xi = np.asarray(xi, float)
    xj = np.asarray(xj, float)
    dv = xj - xi
    n = np.hypot(dv[0], dv[1])
    if n == 0.0:
        raise CoincidentCenters("coincident centers")
    q = dv / n
    p = np.array([-q[1], q[0]])
    return p, q


def _wall_lines(domain):
    W, H = domain.half_width, domain.half_height
    return {
        "right": (np.array([1.0, 0.0]), W),
        "left": (np.array([-1.0, 0.0]), W),
        "top": (np.array([0.0, 1.0]), H),
        "bottom": (np.array([0.0, -1.0]), H),
    }


def _reflect(point, normal, offset):
    # wall line: normal . x = offset
    d = point @ normal - offset
    return point - 2.0 * d * normal


def _foot(point, normal, offset):
    d = point @ normal - offset
    return point - d * normal


def _det_jitter(n, eps):
    """Deterministic per-site jitter directions (breaks cocircular ties)."""
    k = np.arange(n)
    ang = 2.0 * np.pi * ((k * 0.6180339887498949) % 1.0)
    r = eps * (1.0 + (k % 7))
    return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)


def _central_projection_extents(ridge_pts, center, p, R):
    """gamma-, gamma+ from projecting ridge endpoints onto the disk."""
    gm = gp = 0.0
    for v in ridge_pts:
        dv = v - center
        nv = np.hypot(dv[0], dv[1])
        if nv == 0.0:
            continue
        t = R * (dv @ p) / nv
        if t >= 0:
            gp = max(gp, min(t, R))
        else:
            gm = max(gm, min(-t, R))
    gm = gm if gm > 0 else min(R / 2, R)
    gp = gp if gp > 0 else min(R / 2, R)
    return gm, gp


def build_network(config: DiskConfig, domain: DomainRect, delta_ref,
                  quasidisk_gap_max=None) -> DiskNetwork:
    """Build the neck/cell network of a disk configuration.

    Quasidisks are created wherever a disk's Voronoi cell reaches a wall
    (restricted to wall gaps <= quasidisk_gap_max when given).  Faces are the
    bounded cells of the resulting planar graph, stored clockwise.
    """
    centers = config.centers
    R = config.radius
    N = len(centers)
    if delta_ref <= 0:
        raise BadGeometry("delta_ref must be positive")
    W, H = domain.half_width, domain.half_height
    if np.any(np.abs(centers[:, 0]) > W - R) or np.any(
            np.abs(centers[:, 1]) > H - R):
        raise BadGeometry("disks must lie inside the domain")
    if N >= 2:
        from scipy.spatial.distance import pdist
        dmin = pdist(centers).min()
        if dmin < 2.0 * R - 1e-12 * R:
            raise OverlappingDisks(f"minimal center distance {dmin} < 2R")

    eps = 1e-12 * R
    jit = _det_jitter(N, eps)
    sites = [centers + jit]
    labels = [(INTERIOR, i, None) for i in range(N)]
    walls = _wall_lines(domain)
    for wname in WALLS:
        nrm, off = walls[wname]
        refl = np.array([_reflect(c, nrm, off) for c in centers + jit])
        sites.append(refl)
        labels.extend((QUASIDISK, i, wname) for i in range(N))
    allsites = np.vstack(sites)

    vertices = [Vertex(i, INTERIOR, centers[i].copy()) for i in range(N)]
    edge_map = {}
    foot_map = {}

    def quasidisk_vertex(disk, wname):
        key = (disk, wname)
        if key not in foot_map:
            nrm, off = walls[wname]
            pos = _foot(centers[disk], nrm, off)
            v = Vertex(len(vertices), QUASIDISK, pos, boundary_side=wname,
                       source_disk=disk)
            vertices.append(v)
            foot_map[key] = v.index
        return foot_map[key]

    vor = Voronoi(allsites)
    pending = []
    for (a, b), rv in zip(vor.ridge_points, vor.ridge_vertices):
        la, lb = labels[a], labels[b]
        if la[0] == QUASIDISK and lb[0] == QUASIDISK:
            continue
        if la[0] == QUASIDISK:
            la, lb = lb, la
        ridge_pts = [vor.vertices[k] for k in rv if k >= 0]
        if lb[0] == INTERIOR:
            i, j = min(la[1], lb[1]), max(la[1], lb[1])
            if i == j:
                continue
            pending.append((("ii", i, j), ridge_pts))
        else:
            disk, (_, src, wname) = la[1], lb
            nrm, off = walls[wname]
            foot = _foot(centers[src], nrm, off)
            neck_gap = float(np.hypot(*(foot - centers[disk]))) - R
            if quasidisk_gap_max is not None and neck_gap > quasidisk_gap_max:
                continue
            qv = quasidisk_vertex(src, wname)
            pending.append((("ib", disk, qv), ridge_pts))

    for key, ridge_pts in pending:
        tag, i, j = key
        if (i, j) in edge_map:
            continue
        xi, xj = vertices[i].center, vertices[j].center
        p, q = local_frame(xi, xj)
        dist = float(np.hypot(*(xj - xi)))
        kind = EDGE_INTERIOR if tag == "ii" else EDGE_BOUNDARY
        gap = interparticle_gap(kind, dist, R)
        gm, gp = _central_projection_extents(ridge_pts, xi, p, R)
        edge_map[(i, j)] = NeckEdge(i, j, kind, gap, gap / delta_ref,
                                    p, q, gm, gp)

    _add_wall_edges(vertices, edge_map, domain, delta_ref)
    edges = [edge_map[k] for k in sorted(edge_map)]
    faces = _enumerate_faces(vertices, edges)
    net = DiskNetwork(vertices, edges, faces, delta_ref, config, domain,
                      jitter_eps=eps)
    _check_connected(net)
    return net


def _wall_gap(center, wall, R):
    nrm, off = wall
    return off - center @ nrm - R


def _add_wall_edges(vertices, edge_map, domain, delta_ref):
    """Connect consecutive quasidisks along the boundary (and across
    corners) with known-flux wall edges."""
    W, H = domain.half_width, domain.half_height
    boundary = []
    # parametrize the boundary counterclockwise starting at (W, -H)
    def arc_pos(v):
        x, y = v.center
        side = v.boundary_side
        if side == "right":
            return 0 * (W + H) * 2 + (y + H)
        if side == "top":
            return 2 * H + (W - x)
        if side == "left":
            return 2 * H + 2 * W + (H - y)
        return 4 * H + 2 * W + (x + W)

    total = 4 * W + 4 * H
    corner_arcs = [(2 * H, np.array([W, H])), (2 * H + 2 * W, np.array([-W, H])),
                   (4 * H + 2 * W, np.array([-W, -H])),
                   (4 * H + 4 * W, np.array([W, -H]))]
    qs = [v for v in vertices if v.kind == QUASIDISK]
    if len(qs) < 2:
        return
    qs.sort(key=arc_pos)
    for a, b in zip(qs, qs[1:] + qs[:1]):
        i, j = min(a.index, b.index), max(a.index, b.index)
        if (i, j) in edge_map or i == j:
            continue
        # boundary arc from a counterclockwise to b, through any corners
        sa, sb = arc_pos(a), arc_pos(b)
        if sb <= sa:
            sb += total
        path = [a.center.copy()]
        for s, c in corner_arcs:
            if sa < s < sb or sa < s + total < sb:
                path.append(c.copy())
        path.append(b.center.copy())
        if a.index != i:
            path = path[::-1]    # store oriented from vertex i to vertex j
        va, vb = vertices[i], vertices[j]
        dist = float(np.hypot(*(vb.center - va.center)))
        p, q = local_frame(va.center, vb.center)
        edge_map[(i, j)] = NeckEdge(i, j, EDGE_WALL, interparticle_gap(
            EDGE_WALL, dist, 1.0), dist / delta_ref, p, q,
            wall_path=[np.asarray(pt) for pt in path])


def _enumerate_faces(vertices, edges):
    """Bounded cells of the planar graph, clockwise, with incidences."""
    if not edges:
        return []
    adj = {v.index: [] for v in vertices}
    eidx = {}
    for k, e in enumerate(edges):
        adj[e.i].append(e.j)
        adj[e.j].append(e.i)
        eidx[(e.i, e.j)] = k
    pos = {v.index: v.center for v in vertices}
    order = {}
    for v, nbrs in adj.items():
        nbrs = sorted(set(nbrs),
                      key=lambda u: np.arctan2(*(pos[u] - pos[v])[::-1]))
        order[v] = nbrs
    nxt = {}
    for v, nbrs in order.items():
        for k, u in enumerate(nbrs):
            # arriving u->v, continue to the neighbor clockwise from u
            nxt[(u, v)] = nbrs[(k - 1) % len(nbrs)]
    faces = []
    seen = set()
    for start in list(nxt):
        if start in seen:
            continue
        cycle = []
        cur = start
        while cur not in seen:
            seen.add(cur)
            cycle.append(cur)
            cur = (cur[1], nxt[cur])
        if cur != start:
            continue   # merged into an earlier walk
        area = 0.0
        for (u, v) in cycle:
            xu, xv = pos[u], pos[v]
            area += xu[0] * xv[1] - xv[0] * xu[1]
        if area <= 0:
            continue   # the walk traverses inner cells counterclockwise;
                       # a non-positive area marks the outer face
        # store clockwise: reverse the cycle (darts flip)
        rcycle = [(v, u) for (u, v) in cycle[::-1]]
        verts = [u for u, _ in rcycle]
        incid = []
        for (u, v) in rcycle:
            i, j = min(u, v), max(u, v)
            incid.append((eidx[(i, j)], 1 if (u, v) == (i, j) else -1))
        faces.append(ConstraintFace(tuple(verts), incid))
    return faces


def _check_connected(net):
    n = len(net.vertices)
    if n <= 1:
        return
    adj = {k: set() for k in range(n)}
    for e in net.edges:
        adj[e.i].add(e.j)
        adj[e.j].add(e.i)
    seen = {0}
    stack = [0]
    while stack:
        for u in adj[stack.pop()]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    if len(seen) != n:
        raise DisconnectedNetwork(
            f"network has {n - len(seen)} unreachable vertices")


def validate_close_packing(net: DiskNetwork, c1, c2):
    """Report edges whose scaled gap d leaves the (c1, c2) window."""
    bad = []
    for k, e in enumerate(net.edges):
        if e.kind == EDGE_WALL:
            continue
        if not c1 < e.d < c2:
            bad.append((k, e.i, e.j, e.d))
    return bad


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def config_to_json(config: DiskConfig, domain: DomainRect, delta_ref):
    return json.dumps({
        "domain": {"w": domain.half_width, "h": domain.half_height},
        "radius": config.radius,
        "mu": config.mu,
        "delta_ref": delta_ref,
        "centers": [[float(x), float(y)] for x, y in config.centers],
    }, indent=1)


def config_from_json(text):
    data = json.loads(text)
    domain = DomainRect(float(data["domain"]["w"]), float(data["domain"]["h"]))
    config = DiskConfig(np.array(data["centers"], dtype=float),
                        float(data["radius"]), float(data["mu"]))
    return config, domain, float(data["delta_ref"])


def network_to_csv(net: DiskNetwork):
    """One row per edge: i,j,kind,delta_ij,d_ij,px,py,qx,qy,gm,gp."""
    lines = ["i,j,kind,delta_ij,d_ij,px,py,qx,qy,gm,gp"]
    for e in net.edges:
        lines.append(",".join([
            str(e.i), str(e.j), e.kind,
            *(f"{v:.17g}" for v in (e.gap, e.d, e.p[0], e.p[1],
                                    e.q[0], e.q[1],
                                    e.gamma_minus, e.gamma_plus))]))
    return "\n".join(lines) + "\n"
