"""Closed-form lubrication coefficients of the per-neck dissipation forms.

Every neck contributes a quadratic form in its microflow amplitudes whose
coefficients are ``num * pi * mu * (R/d)**pow`` multiplying ``delta**-pow``,
i.e. ``num * pi * mu * (R/delta_ij)**pow`` in per-edge form.  The numbers
below were obtained by high-accuracy quadrature of the explicit trial fields
(see `lubrication`), cross-checked against dual lower bounds; rationals are
exact fits (resolved to ~1e-7 relative).

Interior necks, amplitudes (xi, s, w, g) with

    xi = (U_i - U_j).p + R*(omega_i + omega_j)     [shear]
    s  = (U_i - U_j).q                             [squeeze]
    w  = R*(omega_i - omega_j)                     [counter-rotation]
    g  = beta                                      [permeation flux]

carry C1*xi^2, (C2, C3)*s^2, (C4, C5, C6)*g^2, (C7, C8)*w*g, C9*w^2.

Boundary (disk-wall) necks use the symmetrized gap (twice the physical wall
clearance) and amplitudes (t, w, r, g, s, a):

    t = (U_i - U_j).p + R*omega_i,   w = R*(omega_i - omega_j),
    r = R*omega_i,                   g = beta,
    s = (U_i - U_j).q,               a = wall stretch rate.

All cross coefficients below are *product* coefficients: the full factor of
``amp1*amp2`` in the form.  Several differ from their source-table printings
(which list half-products, or garble the r-sector); the quadrature oracle in
`lubrication` is authoritative and `verify-coefficients` reproduces every
entry.
"""

from fractions import Fraction
from math import pi

from .errors import BadIndex

# interior coefficients: index -> (numerator as Fraction, power of (R/d))
C_TABLE = {
    1: (Fraction(1, 2), 0.5),
    2: (Fraction(3, 4), 1.5),
    3: (Fraction(207, 160), 0.5),
    4: (Fraction(9, 4), 2.5),
    5: (Fraction(99, 160), 1.5),
    6: (Fraction(29241, 17920), 0.5),
    7: (Fraction(-3, 4), 1.5),
    8: (Fraction(45, 32), 0.5),
    9: (Fraction(9, 16), 0.5),
}

# boundary coefficients (product convention; m = 1..14 follows the source
# numbering, 15..18 are the rolling-sector terms absent from the source)
B_TABLE = {
    1: (Fraction(18), 2.5),       # g^2
    2: (Fraction(51, 20), 1.5),   # g^2
    3: (Fraction(20889, 2240), 0.5),  # g^2
    4: (Fraction(4), 0.5),        # t^2
    5: (Fraction(9, 2), 0.5),     # w^2
    6: (Fraction(6), 1.5),        # s^2
    7: (Fraction(63, 20), 0.5),   # s^2
    8: (Fraction(12), 1.5),       # g*t
    9: (Fraction(19, 10), 0.5),   # g*t
    10: (Fraction(-6), 1.5),      # g*w
    11: (Fraction(-3, 4), 0.5),   # g*w
    12: (Fraction(99, 40), 0.5),  # g*r   (source prints -3; see module doc)
    13: (Fraction(-6), 0.5),      # t*w
    14: (Fraction(12), 0.5),      # s*R*a
    15: (Fraction(9, 8), 0.5),    # r^2
    16: (Fraction(-3), 0.5),      # t*r
    17: (Fraction(3, 2), 0.5),    # w*r
    18: (Fraction(-9), 1.5),      # g*r
}


def coeff_C(k, d, R, mu):
    """Interior coefficient C_k = num * pi * mu * (R/d)**pow."""
    if k not in C_TABLE:
        raise BadIndex(f"interior coefficient index {k} not in 1..9")
    num, p = C_TABLE[k]
    return float(num) * pi * mu * (R / d) ** p


def coeff_B(m, d, R, mu):
    """Boundary coefficient B_m = num * pi * mu * (R/d)**pow.

    ``d`` is the scaled symmetrized gap (2x wall clearance over the
    reference distance).
    """
    if m not in B_TABLE:
        raise BadIndex(f"boundary coefficient index {m} not in 1..18")
    num, p = B_TABLE[m]
    return float(num) * pi * mu * (R / d) ** p


def power_C(k):
    return C_TABLE[k][1]


def power_B(m):
    return B_TABLE[m][1]


class CoefficientTable:
    """All per-neck coefficients for one (mu, R, d) combination."""

    def __init__(self, mu, R, d_interior=1.0, d_boundary=1.0):
        self.mu = mu
        self.R = R
        self.C = {k: coeff_C(k, d_interior, R, mu) for k in C_TABLE}
        self.B = {m: coeff_B(m, d_boundary, R, mu) for m in B_TABLE}

    def __repr__(self):
        return (f"CoefficientTable(mu={self.mu}, R={self.R}, "
                f"C1={self.C[1]:.6g}, B1={self.B[1]:.6g})")


# term layout used by the assembler and the verification report:
# (name, coefficient index list, amplitude pair)
INTERIOR_TERMS = (
    ("shear", (1,), ("xi", "xi")),
    ("squeeze", (2, 3), ("s", "s")),
    ("permeation_g2", (4, 5, 6), ("g", "g")),
    ("permeation_wg", (7, 8), ("w", "g")),
    ("permeation_w2", (9,), ("w", "w")),
)

BOUNDARY_TERMS = (
    ("b_perm_g2", (1, 2, 3), ("g", "g")),
    ("b_shear_t2", (4,), ("t", "t")),
    ("b_rot_w2", (5,), ("w", "w")),
    ("b_squeeze_s2", (6, 7), ("s", "s")),
    ("b_cross_gt", (8, 9), ("g", "t")),
    ("b_cross_gw", (10, 11), ("g", "w")),
    ("b_cross_gr", (18, 12), ("g", "r")),
    ("b_cross_tw", (13,), ("t", "w")),
    ("b_stretch_sa", (14,), ("s", "Ra")),
    ("b_roll_r2", (15,), ("r", "r")),
    ("b_cross_tr", (16,), ("t", "r")),
    ("b_cross_wr", (17,), ("w", "r")),
)
