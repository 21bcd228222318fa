"""Per-neck lubrication kernels: trial velocity fields, quadrature oracles,
closed-form dissipation coefficients and dual lower bounds.

Geometry of a single neck, in its local frame:

* interior neck (two disks of radius R): the gap spans ``|y| < H(x)/2`` with
  ``H(x) = delta + 2R - 2*sqrt(R^2 - x^2)``, the upper surface belonging to
  disk i and the lower one to disk j.  ``delta`` is the surface-to-surface
  gap on the center line.
* boundary neck (disk above a flat wall): the fluid occupies
  ``0 < y < H(x)/2`` with the wall at ``y = 0``.  Here ``delta`` is the
  *symmetrized* gap, i.e. twice the physical disk-wall distance; this is the
  normalization in which the closed-form boundary coefficients below are
  polynomial in ``delta**-0.5``.

All trial fields are divergence-free and satisfy their rigid-surface boundary
conditions exactly; they are built symbolically once per family and cached as
vectorized numpy callables.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import BadSpec, OutOfNeck, QuadratureNotConverged

INTERIOR = "interior"
BOUNDARY = "boundary"

SHEAR = "shear"
SQUEEZE = "squeeze"
PERMEATION = "permeation"
BOUNDARY_PERMEATION = "boundary_permeation"
BOUNDARY_SQUEEZE = "boundary_squeeze"

_INTERIOR_KINDS = (SHEAR, SQUEEZE, PERMEATION)
_BOUNDARY_KINDS = (BOUNDARY_PERMEATION, BOUNDARY_SQUEEZE)
ALL_KINDS = _INTERIOR_KINDS + _BOUNDARY_KINDS


@dataclass(frozen=True)
class GapFunction:
    """Surface-to-surface distance profile of a neck."""

    delta: float
    R: float
    kind: str = INTERIOR

    def __post_init__(self):
        if self.kind not in (INTERIOR, BOUNDARY):
            raise BadSpec(f"unknown neck kind {self.kind!r}")


def gap(x, g: GapFunction):
    """Evaluate the gap profile H(x).

    Interior necks: ``delta + 2R - 2*sqrt(R^2 - x^2)``; disk-wall necks:
    ``delta + R - sqrt(R^2 - x^2)`` (flat wall).  Raises OutOfNeck for
    ``|x| >= R``.
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) >= g.R):
        raise OutOfNeck(f"|x| must be < R = {g.R}")
    root = np.sqrt(g.R**2 - x**2)
    if g.kind == INTERIOR:
        out = g.delta + 2.0 * g.R - 2.0 * root
    else:
        out = g.delta + g.R - root
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TrialFieldSpec:
    """Amplitudes of one elementary neck microflow.

    Fields not relevant to ``kind`` are ignored.  ``du_p``/``du_q`` are the
    components of U^i - U^j along the local x/y axes, ``rot_sum``/``rot_diff``
    are R*(omega_i +- omega_j) for interior necks, and boundary necks carry
    the disk and wall angular velocities plus the tangential stretch rate of
    the wall data.
    """

    kind: str
    du_p: float = 0.0
    du_q: float = 0.0
    rot_sum: float = 0.0
    rot_diff: float = 0.0
    beta: float = 0.0
    omega_i: float = 0.0
    omega_j: float = 0.0
    stretch: float = 0.0
    u_wall_p: float = 0.0
    u_wall_q: float = 0.0

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise BadSpec(f"unknown trial field kind {self.kind!r}")

    @property
    def neck_kind(self) -> str:
        return INTERIOR if self.kind in _INTERIOR_KINDS else BOUNDARY

    def amplitudes(self) -> tuple:
        """Amplitude tuple in the argument order of the compiled fields."""
        if self.kind == SHEAR:
            return (self.du_p + self.rot_sum, self.rot_sum)
        if self.kind == SQUEEZE:
            return (self.du_q,)
        if self.kind == PERMEATION:
            return (self.rot_diff, self.beta)
        if self.kind == BOUNDARY_PERMEATION:
            return (self.du_p, self.omega_i, self.omega_j, self.beta,
                    self.u_wall_p)
        return (self.du_q, self.stretch, self.u_wall_q)


def _lamb(args, expr):
    return sp.lambdify(args, expr, modules="numpy")


def _wdensity(u1, u2, x, y):
    # mu * [ (du1/dx)^2 + 1/2 (du1/dy + du2/dx)^2 + (du2/dy)^2 ]; mu applied
    # numerically by the callers.
    return (sp.diff(u1, x) ** 2
            + sp.Rational(1, 2) * (sp.diff(u1, y) + sp.diff(u2, x)) ** 2
            + sp.diff(u2, y) ** 2)


@lru_cache(maxsize=None)
def _family(kind: str):
    """Symbolically build one trial-field family and compile it.

    Returns a dict of vectorized callables; every callable takes
    ``(x, y, *amps, delta, R)``.
    """
    x, y = sp.symbols("x y", real=True)
    d, R = sp.symbols("delta R", positive=True)
    s = sp.sqrt(R**2 - x**2)
    H = d + 2 * R - 2 * s

    if kind == SHEAR:
        xi, ze = sp.symbols("xi zeta", real=True)
        amps = (xi, ze)
        G = 1 / H
        F = -sp.diff(H, x) / 8
        K = (s / R - 1) / H
        M = x / (2 * R) - x * d / (8 * R * s)
        u1 = xi * y * G + ze * y * K
        u2 = (xi * (F - y**2 / 2 * sp.diff(G, x))
              + ze * (M - y**2 / 2 * sp.diff(K, x)))
    elif kind == SQUEEZE:
        sq = sp.symbols("s_q", real=True)
        amps = (sq,)
        G = -3 * x / (2 * H)
        F = 2 * x / H**3
        u1 = sq * (G + 3 * y**2 * F)
        u2 = sq * (-y * sp.diff(G, x) - y**3 * sp.diff(F, x))
    elif kind == PERMEATION:
        w, g = sp.symbols("w g", real=True)
        amps = (w, g)
        P = -3 * x**2 / (4 * R * H) + 3 * H / (16 * R) + s / (2 * R)
        Q = x**2 / (R * H**3) - 1 / (4 * R * H)
        K = 3 / (2 * H)
        M = -2 / H**3
        u1 = w * (P + 3 * y**2 * Q) + g * R * (K + 3 * y**2 * M)
        u2 = (w * (-y * sp.diff(P, x) - y**3 * sp.diff(Q, x))
              + g * R * (-y * sp.diff(K, x) - y**3 * sp.diff(M, x)))
    elif kind == BOUNDARY_PERMEATION:
        # wall at y = 0, disk surface at y = h(x) = H(x)/2; delta is the
        # symmetrized gap (twice the physical wall clearance).
        du1, wi, wj, g, uw = sp.symbols("du1 w_i w_j g u_w", real=True)
        amps = (du1, wi, wj, g, uw)
        h = H / 2
        c0 = -6 * R * g
        M = (c0 + 3 * (wi - wj) * x**2 - 3 * du1 * h
             - sp.Rational(3, 2) * wi * (h**2 + x**2)) / h**3
        K = (du1 + wi * s) / h - h * M
        u1 = uw + y * K + y**2 * M
        u2 = wj * x - y**2 / 2 * sp.diff(K, x) - y**3 / 3 * sp.diff(M, x)
    elif kind == BOUNDARY_SQUEEZE:
        du2, a, uw = sp.symbols("du2 a u_w", real=True)
        amps = (du2, a, uw)
        h = H / 2
        F = -4 * a * x / h - 6 * du2 * x / h**2
        G = 3 * a * x / h**2 + 6 * du2 * x / h**3
        u1 = a * x + y * F + y**2 * G
        u2 = uw - a * y - y**2 / 2 * sp.diff(F, x) - y**3 / 3 * sp.diff(G, x)
    else:
        raise BadSpec(f"unknown trial field kind {kind!r}")

    args = (x, y, *amps, d, R)
    div = sp.diff(u1, x) + sp.diff(u2, y)
    out = {
        "amps": tuple(str(a) for a in amps),
        "u1": _lamb(args, u1),
        "u2": _lamb(args, u2),
        "wdens": _lamb(args, _wdensity(u1, u2, x, y)),
        "div": _lamb(args, div),
        # first derivatives, for the stress of the dual tensors
        "du1x": _lamb(args, sp.diff(u1, x)),
        "du1y": _lamb(args, sp.diff(u1, y)),
        "du2x": _lamb(args, sp.diff(u2, x)),
        "du2y": _lamb(args, sp.diff(u2, y)),
    }
    return out


def _half_height(x, delta, R, kind):
    root = np.sqrt(R**2 - np.asarray(x, dtype=float) ** 2)
    return (delta + 2.0 * R - 2.0 * root) / 2.0


def _y_limits(x, delta, R, neck_kind):
    h2 = _half_height(x, delta, R, neck_kind)
    if neck_kind == INTERIOR:
        return -h2, h2
    return np.zeros_like(h2), h2


def _x_breakpoints(gamma, delta, R):
    """Panel endpoints graded toward the lubrication peak at x = 0."""
    w = min(np.sqrt(R * delta), gamma)
    pts = [0.0]
    t = w
    while t < gamma:
        pts.append(t)
        t *= 2.0
    pts.append(gamma)
    pos = np.array(pts)
    return np.concatenate([-pos[::-1][:-1], pos])


_GAUSS_CACHE: dict = {}


def _gauss(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GAUSS_CACHE[n]


def _area_integral(f2d, delta, R, gamma, neck_kind, nsub, nx=16, ny=10):
    """Tensorized Gauss integral of f2d(x, y) over the neck cross-section."""
    xb = _x_breakpoints(gamma, delta, R)
    tx, wx = _gauss(nx)
    ty, wy = _gauss(ny)
    total = 0.0
    for a, b in zip(xb[:-1], xb[1:]):
        edges = np.linspace(a, b, nsub + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        xs = (mid + half * tx[None, :]).ravel()
        wxs = (half * wx[None, :]).ravel()
        ylo, yhi = _y_limits(xs, delta, R, neck_kind)
        ymid = 0.5 * (ylo + yhi)
        yhalf = 0.5 * (yhi - ylo)
        X = xs[:, None]
        Y = ymid[:, None] + yhalf[:, None] * ty[None, :]
        vals = f2d(X, Y)
        total += np.sum(wxs[:, None] * yhalf[:, None] * wy[None, :] * vals)
    return total


def _adaptive_area(f2d, delta, R, gamma, neck_kind, rel_tol):
    prev = None
    for nsub in (1, 2, 4, 8, 16, 32, 64, 128):
        cur = _area_integral(f2d, delta, R, gamma, neck_kind, nsub)
        if prev is not None:
            scale = max(abs(cur), abs(prev), 1e-300)
            if abs(cur - prev) <= rel_tol * scale:
                return cur
        prev = cur
    raise QuadratureNotConverged(
        f"area quadrature did not reach rel_tol={rel_tol}")


def _check_spec(spec: TrialFieldSpec, delta, R, gamma):
    if delta <= 0 or R <= 0:
        raise BadSpec("delta and R must be positive")
    if not 0 < gamma <= R / 2:
        raise BadSpec("need 0 < gamma <= R/2")


def trial_dissipation_quadrature(spec: TrialFieldSpec, delta, R, mu,
                                 gamma=None, rel_tol=1e-10):
    """Viscous dissipation rate of the trial field on the neck, by quadrature.

    Integrates ``mu * D(v):D(v)`` over the neck cross-section with a graded
    tensorized Gauss rule, refined until two consecutive refinements agree to
    ``rel_tol`` relative.
    """
    if gamma is None:
        gamma = R / 2
    _check_spec(spec, delta, R, gamma)
    fam = _family(spec.kind)
    amps = spec.amplitudes()
    if all(a == 0.0 for a in amps) or mu == 0.0:
        return 0.0

    def f2d(X, Y):
        return fam["wdens"](X, Y, *amps, delta, R)

    return mu * _adaptive_area(f2d, delta, R, gamma, spec.neck_kind, rel_tol)


def divergence_residual(spec: TrialFieldSpec, delta, R, gamma=None, n=100):
    """Max |div v| of the trial field on an n-by-n sample grid of the neck."""
    if gamma is None:
        gamma = R / 2
    fam = _family(spec.kind)
    amps = spec.amplitudes()
    xs = np.linspace(-0.999 * gamma, 0.999 * gamma, n)
    ylo, yhi = _y_limits(xs, delta, R, spec.neck_kind)
    t = np.linspace(0.005, 0.995, n)
    X = np.repeat(xs[:, None], n, axis=1)
    Y = ylo[:, None] + (yhi - ylo)[:, None] * t[None, :]
    vals = fam["div"](X, Y, *amps, delta, R)
    return float(np.max(np.abs(np.asarray(vals))))


def _surface_targets(spec: TrialFieldSpec, xs, delta, R):
    """Exact rigid-surface velocities on each neck surface.

    Returns a list of (y(x) curve, (target_u1, target_u2)) pairs ordered as
    the sides used by `boundary_condition_residual`.
    """
    s = np.sqrt(R**2 - xs**2)
    h2 = _half_height(xs, delta, R, spec.neck_kind)
    out = []
    if spec.neck_kind == INTERIOR:
        if spec.kind == SHEAR:
            xi = spec.du_p + spec.rot_sum
            ze = spec.rot_sum
            top = (xi / 2 + ze * (s / R - 1) / 2, ze * xs / (2 * R))
            bot = (-xi / 2 - ze * (s / R - 1) / 2, ze * xs / (2 * R))
        elif spec.kind == SQUEEZE:
            top = (np.zeros_like(xs), np.full_like(xs, spec.du_q / 2))
            bot = (np.zeros_like(xs), np.full_like(xs, -spec.du_q / 2))
        else:
            w = spec.rot_diff
            top = (w * s / (2 * R), w * xs / (2 * R))
            bot = (w * s / (2 * R), -w * xs / (2 * R))
        out.append((h2, top))
        out.append((-h2, bot))
    else:
        if spec.kind == BOUNDARY_PERMEATION:
            disk = (spec.u_wall_p + spec.du_p + spec.omega_i * s,
                    spec.omega_i * xs)
            wall = (np.full_like(xs, spec.u_wall_p), spec.omega_j * xs)
        else:
            disk = (np.zeros_like(xs), np.full_like(xs, spec.u_wall_q + spec.du_q))
            wall = (spec.stretch * xs, np.full_like(xs, spec.u_wall_q))
        out.append((h2, disk))
        out.append((np.zeros_like(xs), wall))
    return out


def boundary_condition_residual(spec: TrialFieldSpec, delta, R, gamma=None,
                                n=200):
    """Max deviation of the trial field from its rigid-surface data."""
    if gamma is None:
        gamma = R / 2
    fam = _family(spec.kind)
    amps = spec.amplitudes()
    xs = np.linspace(-gamma, gamma, n)
    worst = 0.0
    for ycurve, (t1, t2) in _surface_targets(spec, xs, delta, R):
        v1 = fam["u1"](xs, ycurve, *amps, delta, R)
        v2 = fam["u2"](xs, ycurve, *amps, delta, R)
        worst = max(worst,
                    float(np.max(np.abs(v1 - t1))),
                    float(np.max(np.abs(v2 - t2))))
    return worst


def neck_flux(spec: TrialFieldSpec, delta, R, n=64):
    """Flux of the trial field through the mid-segment x = 0 (units u*length)."""
    fam = _family(spec.kind)
    amps = spec.amplitudes()
    ylo, yhi = _y_limits(np.array([0.0]), delta, R, spec.neck_kind)
    t, w = _gauss(n)
    mid = 0.5 * (ylo[0] + yhi[0])
    half = 0.5 * (yhi[0] - ylo[0])
    ys = mid + half * t
    vals = fam["u1"](np.zeros_like(ys), ys, *amps, delta, R)
    return float(half * np.sum(w * vals))


# ---------------------------------------------------------------------------
# dual lower bounds
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _dual_family(kind: str):
    """Compile the x-profile functions entering the dual stress tensors.

    For each family this returns callables for the stream-profile pair
    (G, F) driving the dual tensor, their derivatives up to third order, and
    the kernel whose cumulative integral appears in the diagonal components.
    All callables take ``(x, *amps, delta, R)``.
    """
    x = sp.symbols("x", real=True)
    d, R = sp.symbols("delta R", positive=True)
    s = sp.sqrt(R**2 - x**2)
    H = d + 2 * R - 2 * s

    if kind == SHEAR:
        xi, ze = sp.symbols("xi zeta", real=True)
        amps = (xi, ze)
        G = xi / H          # dual uses the leading shear profile only
        F = sp.Integer(0)
    elif kind == SQUEEZE:
        sq = sp.symbols("s_q", real=True)
        amps = (sq,)
        G = sq * (-3 * x / (2 * H))
        F = sq * (2 * x / H**3)
    elif kind == PERMEATION:
        w, g = sp.symbols("w g", real=True)
        amps = (w, g)
        P = -3 * x**2 / (4 * R * H) + 3 * H / (16 * R) + s / (2 * R)
        Q = x**2 / (R * H**3) - 1 / (4 * R * H)
        G = w * P + g * R * (3 / (2 * H))
        F = w * Q + g * R * (-2 / H**3)
    elif kind == BOUNDARY_PERMEATION:
        du1, wi, wj, g, uw = sp.symbols("du1 w_i w_j g u_w", real=True)
        amps = (du1, wi, wj, g, uw)
        h = H / 2
        c0 = -6 * R * g
        M = (c0 + 3 * (wi - wj) * x**2 - 3 * du1 * h
             - sp.Rational(3, 2) * wi * (h**2 + x**2)) / h**3
        K = (du1 + wi * s) / h - h * M
        G = K
        F = M
    elif kind == BOUNDARY_SQUEEZE:
        du2, a, uw = sp.symbols("du2 a u_w", real=True)
        amps = (du2, a, uw)
        h = H / 2
        G = -4 * a * x / h - 6 * du2 * x / h**2   # profile F of the field
        F = 3 * a * x / h**2 + 6 * du2 * x / h**3  # profile G of the field
    else:
        raise BadSpec(f"unknown trial field kind {kind!r}")

    args = (x, *amps, d, R)
    out = {"amps": tuple(str(a) for a in amps)}
    for name, expr in (("G", G), ("F", F)):
        cur = expr
        for order in range(4):
            out[f"{name}{order}"] = _lamb(args, cur)
            cur = sp.diff(cur, x)
    return out


def _cumulative(kernel, xs, peak_width, n=24):
    """``int_0^x kernel`` at each x in xs.

    The kernel is assumed smooth but concentrated on a scale ``peak_width``
    around x = 0 (the lubrication peak); every integration segment is
    subdivided accordingly before applying an n-point Gauss rule.
    """
    xs = np.asarray(xs, dtype=float)
    t, w = _gauss(n)

    def seg(a, b):
        # resolution scale grows away from the peak
        loc = max(peak_width, 0.25 * min(abs(a), abs(b)))
        m = min(256, max(1, int(np.ceil(abs(b - a) / loc))))
        edges = np.linspace(a, b, m + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        return float(np.sum(half * w[None, :] * kernel(mid + half * t[None, :])))

    order = np.argsort(xs)
    sx = xs[order]
    vals = np.empty_like(sx)
    for sign in (1.0, -1.0):
        sel = sx >= 0.0 if sign > 0 else sx < 0.0
        pts = sx[sel] if sign > 0 else sx[sel][::-1]
        acc, prev, res = 0.0, 0.0, []
        for b in pts:
            if b != prev:
                acc += seg(prev, b)
            res.append(acc)
            prev = b
        vals[sel] = res if sign > 0 else res[::-1]
    out = np.empty_like(vals)
    out[order] = vals
    return out


class _DualTensor:
    """Divergence-free dual stress (without the mu factor) for one spec.

    Component layout follows the squeeze-type template

        S11 = G' + 9 y^2 F' - 6 IF(x) - C1 x^2/2 - 3/2 C2 x^2 y^2 + C3
              + C4 y^2 - a0 x - 3 y^2 (b0 x + b2 x^3 / 3)
        S12 = 6 y F - y G'' - 3 y^3 F'' + C1 x y + C2 x y^3
              + a0 y + (b0 + b2 x^2) y^3
        S22 = -3 G' - 3 y^2 F' - 6 IF(x) + y^2/2 G''' + 3/4 y^4 F'''
              - C1 y^2/2 - C2 y^4/4 - b2 x y^4 / 2

    with the constants chosen so that the lateral traction is zero (odd
    profiles, Cs active) or normal-only (even profiles, a/b correctors
    active).  The boundary-permeation tensor uses its own 2-term layout.
    """

    def __init__(self, kind, amps, delta, R, gamma):
        self.kind = kind
        self.amps = amps
        self.delta = delta
        self.R = R
        self.gamma = gamma
        fam = _dual_family(kind)
        self._f = fam
        a = (gamma, *amps, delta, R)
        self.C1 = self.C2 = self.C3 = self.C4 = 0.0
        self.a0 = self.b0 = self.b2 = 0.0
        if kind == SHEAR:
            self.Cshear = fam["G0"](*a)
        elif kind == SQUEEZE:
            # odd profiles: the template constants
            G2g, F0g, F2g, F1g = (fam["G2"](*a), fam["F0"](*a),
                                  fam["F2"](*a), fam["F1"](*a))
            self.C1 = (G2g - 6 * F0g) / gamma
            self.C2 = 3 * F2g / gamma
            IFg = _cumulative(self._kernelF, np.array([gamma]),
                              np.sqrt(R * delta))[0]
            self.C3 = -fam["G1"](*a) + 6 * IFg + self.C1 * gamma**2 / 2
            self.C4 = -9 * F1g + 1.5 * self.C2 * gamma**2
        elif kind == PERMEATION:
            # even profiles: polynomial correctors, lateral traction normal
            G2g, F0g, F2g, F1g = (fam["G2"](*a), fam["F0"](*a),
                                  fam["F2"](*a), fam["F1"](*a))
            self.a0 = G2g - 6 * F0g
            self.b2 = 4.5 * (F2g * gamma - F1g) / gamma**3
            self.b0 = 3 * F2g - self.b2 * gamma**2
        elif kind in (BOUNDARY_PERMEATION, BOUNDARY_SQUEEZE):
            self._init_boundary(fam, a)
        else:
            raise BadSpec(kind)

    def _init_boundary(self, fam, a):
        """Correctors for the wall-neck dual built on the (yK + y^2 M)
        profile family; K is in the G slot and M in the F slot.

        The correctors A..D (quadratic polynomials in x) cancel the lateral
        shear traction; f0..f2 flatten the lateral normal traction, which
        must vanish for the Dirichlet class and merely be constant for the
        flux class.
        """
        gamma = self.gamma
        K0, K1, K2 = fam["G0"](*a), fam["G1"](*a), fam["G2"](*a)
        M0, M1, M2 = fam["F0"](*a), fam["F1"](*a), fam["F2"](*a)
        IMg = _cumulative(self._kernelF, np.array([gamma]),
                          np.sqrt(self.R * self.delta))[0]
        self.stretch = self.amps[1] if self.kind == BOUNDARY_SQUEEZE else 0.0
        if self.kind == BOUNDARY_PERMEATION:
            # even K, M; chi stays free
            c2 = 0.75 * (gamma * K2 - K1) / gamma**3
            d2 = (M2 * gamma - M1) / (2 * gamma**3)
            self.bA = (-K0, 0.0, 0.0)
            self.bB = (-2 * M0, 0.0, 0.0)
            self.bC = (K2 / 2 - c2 * gamma**2, 0.0, c2)
            self.bD = (M2 / 3 - d2 * gamma**2, 0.0, d2)
            self.f0 = self.f1 = self.f2 = 0.0
        else:
            # odd K, M; zero lateral traction
            a1 = -K0 / gamma
            b1 = -2 * M0 / gamma
            c1 = K2 / (2 * gamma)
            d1 = M2 / (3 * gamma)
            self.bA = (0.0, a1, 0.0)
            self.bB = (0.0, b1, 0.0)
            self.bC = (0.0, c1, 0.0)
            self.bD = (0.0, d1, 0.0)
            self.f0 = 2 * IMg + b1 * gamma**2 / 2 - 2 * self.stretch
            self.f1 = c1 * gamma**2 - K1
            self.f2 = 1.5 * d1 * gamma**2 - M1

    def _kernelF(self, xs):
        return self._f["F0"](xs, *self.amps, self.delta, self.R)

    def components(self, X, Y):
        f = self._f
        args = (X, *self.amps, self.delta, self.R)
        if self.kind == SHEAR:
            G0, G1 = f["G0"](*args), f["G1"](*args)
            S11 = np.zeros_like(X * Y)
            S12 = (G0 - self.Cshear) * np.ones_like(Y)
            S22 = -Y * G1
            return S11, S12, S22
        if self.kind in (BOUNDARY_PERMEATION, BOUNDARY_SQUEEZE):
            return self._boundary_components(X, Y)
        G1, G2, G3 = f["G1"](*args), f["G2"](*args), f["G3"](*args)
        F0, F1, F2, F3 = (f["F0"](*args), f["F1"](*args), f["F2"](*args),
                          f["F3"](*args))
        IF = _cumulative(self._kernelF, X.ravel(),
                         np.sqrt(self.R * self.delta)).reshape(X.shape)
        C1, C2, C3, C4 = self.C1, self.C2, self.C3, self.C4
        a0, b0, b2 = self.a0, self.b0, self.b2
        S11 = (G1 + 9 * Y**2 * F1 - 6 * IF - C1 * X**2 / 2
               - 1.5 * C2 * X**2 * Y**2 + C3 + C4 * Y**2
               - a0 * X - 3 * Y**2 * (b0 * X + b2 * X**3 / 3))
        S12 = (6 * Y * F0 - Y * G2 - 3 * Y**3 * F2 + C1 * X * Y
               + C2 * X * Y**3 + a0 * Y + (b0 + b2 * X**2) * Y**3)
        S22 = (-3 * G1 - 3 * Y**2 * F1 - 6 * IF + Y**2 / 2 * G3
               + 0.75 * Y**4 * F3 - C1 * Y**2 / 2 - C2 * Y**4 / 4
               - b2 * X * Y**4 / 2 + C3)
        return S11, S12, S22

    def _boundary_components(self, X, Y):
        f = self._f
        args = (X, *self.amps, self.delta, self.R)
        K0, K1, K3 = f["G0"](*args), f["G1"](*args), f["G3"](*args)
        K2 = f["G2"](*args)
        M0, M1, M2, M3 = (f["F0"](*args), f["F1"](*args), f["F2"](*args),
                          f["F3"](*args))
        IM = _cumulative(self._kernelF, X.ravel(),
                         np.sqrt(self.R * self.delta)).reshape(X.shape)

        def pv(p):
            return p[0] + p[1] * X + p[2] * X**2

        def pint(p):
            return p[0] * X + p[1] * X**2 / 2 + p[2] * X**3 / 3

        def pd(p):
            return p[1] + 2 * p[2] * X

        sa = self.stretch
        S12 = (K0 + 2 * Y * M0 - Y**2 * K2 / 2 - Y**3 * M2 / 3
               + pv(self.bA) + pv(self.bB) * Y + pv(self.bC) * Y**2
               + pv(self.bD) * Y**3)
        press = -2 * IM - pint(self.bB) + self.f0
        S11 = (press + Y * K1 + Y**2 * M1 - 2 * Y * pint(self.bC)
               - 3 * Y**2 * pint(self.bD) + self.f1 * Y + self.f2 * Y**2
               + 2 * sa)
        S22 = (press - Y * K1 - Y**2 * M1 + Y**3 * K3 / 6 + Y**4 * M3 / 12
               - pd(self.bA) * Y - pd(self.bB) * Y**2 / 2
               - pd(self.bC) * Y**3 / 3 - pd(self.bD) * Y**4 / 4 - 2 * sa)
        return S11, S12, S22


def _dual_area(dt: _DualTensor, neck_kind, rel_tol):
    def f2d(X, Y):
        S11, S12, S22 = dt.components(X, Y)
        return 0.5 * (S11 - S22) ** 2 + 2.0 * S12**2
    return _adaptive_area(f2d, dt.delta, dt.R, dt.gamma, neck_kind, rel_tol)


def _dual_surface_linear(dt: _DualTensor, spec, nsub):
    """sum over rigid surfaces of int g . (S n) ds, by panelwise Gauss in x."""
    delta, R, gamma = dt.delta, dt.R, dt.gamma
    xb = _x_breakpoints(gamma, delta, R)
    t, w = _gauss(20)
    total = 0.0
    for a, b in zip(xb[:-1], xb[1:]):
        edges = np.linspace(a, b, nsub + 1)
        mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
        half = 0.5 * (edges[1:] - edges[:-1])[:, None]
        xs = (mid + half * t[None, :]).ravel()
        wxs = (half * w[None, :]).ravel()
        s = np.sqrt(R**2 - xs**2)
        dh2 = xs / s   # d/dx of the upper curve y = H(x)/2, both kinds
        h2 = _half_height(xs, delta, R, spec.neck_kind)
        targets = _surface_targets(spec, xs, delta, R)
        for side, (ycurve, (t1, t2)) in enumerate(targets):
            S11, S12, S22 = dt.components(xs, ycurve)
            if side == 0:       # upper curve: n ds = (-y', 1) dx
                yp = dh2
                n1, n2 = -yp, np.ones_like(xs)
            else:               # lower curve: n ds = (y', -1) dx
                yp = -dh2 if spec.neck_kind == INTERIOR else np.zeros_like(xs)
                n1, n2 = yp, -np.ones_like(xs)
            tr1 = S11 * n1 + S12 * n2
            tr2 = S12 * n1 + S22 * n2
            total += np.sum(wxs * (t1 * tr1 + t2 * tr2))
    return total


def _data_flux_halves(spec, delta, R, gamma, n=400):
    """Outward flux of the rigid surface data over 0 < x < gamma (right) and
    -gamma < x < 0 (left) halves of the data surfaces."""
    t, w = _gauss(32)
    out = []
    for a, b in ((0.0, gamma), (-gamma, 0.0)):
        # graded panels toward the peak
        edges = np.unique(np.clip(np.concatenate(
            [[a, b], np.sign(a + b) * np.sqrt(R * delta) * 2.0 **
             np.arange(0, 14)]), min(a, b), max(a, b)))
        acc = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            xs = mid + half * t
            s = np.sqrt(R**2 - xs**2)
            dh2 = xs / s
            targets = _surface_targets(spec, xs, delta, R)
            for side, (ycurve, (t1, t2)) in enumerate(targets):
                if side == 0:
                    n1, n2 = -dh2, np.ones_like(xs)
                else:
                    yp = -dh2 if spec.neck_kind == INTERIOR else np.zeros_like(xs)
                    n1, n2 = yp, -np.ones_like(xs)
                acc += half * np.sum(w * (t1 * n1 + t2 * n2))
        out.append(acc)
    return out  # [right, left]


def _dual_lateral_term(dt: _DualTensor, spec):
    """Work of the lateral normal traction against the class's lateral fluxes.

    The flux out of the right lateral equals the mid-segment flux R*beta*
    minus the data flux entering through the right halves of the rigid
    surfaces (and symmetrically on the left), so the term is
    chi+ * (R beta* - Phi_r) + chi- * (-R beta* - Phi_l).  Dirichlet families
    have zero lateral traction and contribute nothing.
    """
    if spec.kind not in (PERMEATION, BOUNDARY_PERMEATION):
        return 0.0
    delta, R, gamma = dt.delta, dt.R, dt.gamma
    beta_star = neck_flux(spec, delta, R) / R
    t, w = _gauss(24)
    chi = []
    for xg in (gamma, -gamma):
        ylo, yhi = _y_limits(np.array([xg]), delta, R, spec.neck_kind)
        mid, half = 0.5 * (ylo[0] + yhi[0]), 0.5 * (yhi[0] - ylo[0])
        ys = mid + half * t
        S11, _, _ = dt.components(np.full_like(ys, xg), ys)
        chi.append(np.sum(w * S11) / np.sum(w))
    phi_r, phi_l = _data_flux_halves(spec, delta, R, gamma)
    return (chi[0] * (R * beta_star - phi_r)
            + chi[1] * (-R * beta_star - phi_l))


def dual_bound_quadrature(spec: TrialFieldSpec, delta, R, mu,
                          gamma=None, rel_tol=1e-10):
    """Lower bound on the neck dissipation from an admissible dual stress.

    Evaluates the dual functional (surface work of the rigid data against the
    dual traction, plus the flux term against the lateral normal traction,
    minus the dual energy) for the family's explicit divergence-free tensor.
    The result never exceeds the corresponding trial dissipation.
    """
    if gamma is None:
        gamma = R / 2
    _check_spec(spec, delta, R, gamma)
    amps = spec.amplitudes()
    if all(a == 0.0 for a in amps) or mu == 0.0:
        return 0.0
    dt = _DualTensor(spec.kind, amps, delta, R, gamma)
    area = _dual_area(dt, spec.neck_kind, rel_tol)
    prev = None
    for nsub in (1, 2, 4, 8, 16, 32):
        lin = _dual_surface_linear(dt, spec, nsub)
        if prev is not None and abs(lin - prev) <= rel_tol * max(
                abs(lin), 1e-300):
            break
        prev = lin
    lat = _dual_lateral_term(dt, spec)
    return mu * (lin + lat - 0.25 * area)


def dual_lateral_residual(spec: TrialFieldSpec, delta, R, gamma=None, n=50):
    """Max |tangential lateral traction| of the dual tensor (admissibility)."""
    if gamma is None:
        gamma = R / 2
    dt = _DualTensor(spec.kind, spec.amplitudes(), delta, R, gamma)
    worst = 0.0
    for xg in (gamma, -gamma):
        ylo, yhi = _y_limits(np.array([xg]), delta, R, spec.neck_kind)
        ys = np.linspace(ylo[0], yhi[0], n)
        S11, S12, S22 = dt.components(np.full_like(ys, xg), ys)
        worst = max(worst, float(np.max(np.abs(S12))))
        if spec.kind not in (PERMEATION, BOUNDARY_PERMEATION):
            worst = max(worst, float(np.max(np.abs(S11))))
        else:
            worst = max(worst, float(np.ptp(S11)))
    return worst


# ---------------------------------------------------------------------------
# coefficient extraction and verification
# ---------------------------------------------------------------------------

from . import coefficients as _coef  # noqa: E402  (cycle-free)

VERIFY_DELTAS = (1e-2, 10**-2.5, 1e-3, 10**-3.5, 1e-4, 10**-4.5)
_FIT_POWERS = (2.5, 1.5, 0.5, 0.0, -0.5, -1.0)


def fit_power_coefficients(deltas, values, powers=_FIT_POWERS):
    """Least-squares fit of ``values ~ sum c_p * delta**-p``.

    Rows are weighted by 1/|value| so each decade of the blow-up constrains
    the power it dominates; returns {power: coefficient}.
    """
    deltas = np.asarray(deltas, float)
    values = np.asarray(values, float)
    A = np.stack([deltas**-p for p in powers], axis=1)
    w = 1.0 / np.maximum(np.abs(values), 1e-300)
    Aw, vw = A * w[:, None], values * w
    sc = np.linalg.norm(Aw, axis=0)
    sc[sc == 0.0] = 1.0
    c, *_ = np.linalg.lstsq(Aw / sc, vw, rcond=None)
    return dict(zip(powers, c / sc))


def closed_form_W(spec: TrialFieldSpec, delta, R, mu):
    """Closed-form singular coefficients of the trial dissipation.

    Returns {power: coefficient of delta**-power}; the dissipation is their
    weighted sum up to an O(1) remainder.  For boundary specs ``delta`` is
    the symmetrized gap.
    """
    amps = _q_amplitudes(spec, R)
    out = {2.5: 0.0, 1.5: 0.0, 0.5: 0.0}
    d = 1.0  # per-edge form: coefficient of delta_ij**-pow is num*pi*mu*R**pow
    if spec.neck_kind == INTERIOR:
        layout, table, pw = _coef.INTERIOR_TERMS, _coef.coeff_C, _coef.power_C
    else:
        layout, table, pw = _coef.BOUNDARY_TERMS, _coef.coeff_B, _coef.power_B
    for _, indices, (a1, a2) in layout:
        prod = amps[a1] * amps[a2]
        if prod == 0.0:
            continue
        for k in indices:
            out[pw(k)] += table(k, d, R, mu) * prod
    return out


def _q_amplitudes(spec: TrialFieldSpec, R):
    """Map a trial spec to the quadratic-form amplitude dictionary."""
    if spec.neck_kind == INTERIOR:
        return {
            "xi": spec.du_p + spec.rot_sum,
            "s": spec.du_q,
            "w": spec.rot_diff,
            "g": spec.beta,
        }
    return {
        "t": spec.du_p + R * spec.omega_i,
        "w": R * (spec.omega_i - spec.omega_j),
        "r": R * spec.omega_i,
        "g": spec.beta,
        "s": spec.du_q,
        "Ra": R * spec.stretch,
    }


_PROBE_SPECS = {
    # amplitude name -> TrialFieldSpec kwargs producing a unit amplitude
    INTERIOR: {
        "xi": dict(du_p=1.0),
        "s": dict(du_q=1.0),
        "w": dict(rot_diff=1.0),
        "g": dict(beta=1.0),
    },
    BOUNDARY: {
        "t": dict(du_p=1.0),
        "w": dict(omega_j=-1.0),
        "r": dict(du_p=-1.0, omega_i=1.0, omega_j=1.0),
        "g": dict(beta=1.0),
        "s": dict(du_q=1.0),
        "Ra": dict(stretch=1.0),
    },
}


def _probe_kind(neck_kind, amp):
    if neck_kind == INTERIOR:
        return PERMEATION if amp in ("w", "g") else (
            SHEAR if amp == "xi" else SQUEEZE)
    return BOUNDARY_SQUEEZE if amp in ("s", "Ra") else BOUNDARY_PERMEATION


def _combine(neck_kind, a1, a2, R):
    kw = dict(_PROBE_SPECS[neck_kind][a1])
    if a2 != a1:
        for k, v in _PROBE_SPECS[neck_kind][a2].items():
            kw[k] = kw.get(k, 0.0) + v
    # omega-probes assume R = 1 in the table above; rescale
    if R != 1.0:
        for k in ("omega_i", "omega_j"):
            if k in kw:
                kw[k] = kw[k] / R
        if "stretch" in kw:
            kw["stretch"] = kw["stretch"] / R
    return TrialFieldSpec(_probe_kind(neck_kind, a1), **kw)


def verify_coefficients(R=1.0, mu=1.0, deltas=VERIFY_DELTAS, rel_tol=1e-11):
    """Re-derive every dissipation coefficient by quadrature.

    Returns a list of rows ``(term, delta_power, closed_form,
    quadrature_fit, rel_error)`` covering each singular coefficient of the
    interior and boundary neck forms at d = 1.
    """
    rows = []
    cache = {}

    def wvals(neck_kind, a1, a2=None):
        key = (neck_kind, a1, a2)
        if key not in cache:
            spec = _combine(neck_kind, a1, a2 or a1, R)
            cache[key] = np.array([
                trial_dissipation_quadrature(spec, d, R, mu, rel_tol=rel_tol)
                for d in deltas])
        return cache[key]

    for neck_kind, layout, table, pw in (
            (INTERIOR, _coef.INTERIOR_TERMS, _coef.coeff_C, _coef.power_C),
            (BOUNDARY, _coef.BOUNDARY_TERMS, _coef.coeff_B, _coef.power_B)):
        for name, indices, (a1, a2) in layout:
            if a1 == a2:
                vals = wvals(neck_kind, a1)
            else:
                vals = (wvals(neck_kind, a1, a2) - wvals(neck_kind, a1)
                        - wvals(neck_kind, a2))
            fit = fit_power_coefficients(deltas, vals)
            for k in indices:
                ref = table(k, 1.0, R, mu)
                got = fit[pw(k)]
                rows.append((name, -pw(k), ref, got,
                             abs(got - ref) / max(abs(ref), 1e-300)))
    return rows
