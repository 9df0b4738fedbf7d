"""Elliptic units at the 12th-power level.

The fundamental theta function of a lattice is

    theta(z; L) = Delta(L) exp(-6 eta(z; L) z) sigma(z; L)^12,

with Delta the lattice discriminant (see THETA_DELTA_TWO_PI below), eta the
R-linear quasi-period form and sigma the Weierstrass function; it is elliptic
in z up to nothing (exactly periodic) thanks to the Legendre relation.  For
an auxiliary ideal a coprime to 6 the quotient

    theta12(z) = theta(z; L)^(N a) / theta(z; a^(-1) L)

is the 12th power of the canonical a-theta function: elliptic, with divisor
12 (N a (0) - E_a) on C/L.  Units attached to a conductor f != (1) are its
values at z = 1 on the lattices c^(-1) f; Galois conjugation is lattice
replacement f -> c^(-1) f indexed by ray classes.  Everything exported works
at the value12 / log|.| level; no 12th roots are ever taken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .errors import DivisorPointError, EkzetaError
from .numerics import eta_linear_form, ramanujan_delta, sigma_and_quasiperiods
from .quadfield import (
    IdealHNF,
    QuadField,
    coords_in_ideal,
    ideal_divides,
    ideal_inverse,
    ideal_is_coprime,
    ideal_mul,
    ideal_scale,
    oriented_basis,
    principal_ideal,
    unit_ideal,
)
from .rayclass import RayClassGroup, class_rep_coprime, ray_class_group, w_f

GUARD = 24

# The discriminant entering theta: the q-product Delta is weight -12 but the
# norm compatibility N_b(theta12) = theta12 holds only for the full lattice
# discriminant (2 pi)^12 eta(tau)^24 / v^12; a constant c on theta shifts
# value12 by c^(Na - 1), and the b-norm then mismatches by c^((Na-1)(b^2-1)).
# Pinned by tests/test_units.py::test_norm_property_fixes_delta_normalization.
THETA_DELTA_TWO_PI = True


@dataclass
class ThetaValue:
    """value12 = the 12th power; log_abs = (1/12) log |value12|."""

    value12: object
    log_abs: object


@dataclass
class EllipticUnit:
    aux: IdealHNF
    conductor: IdealHNF
    class_label: tuple
    theta: ThetaValue

    @property
    def log_abs(self):
        return self.theta.log_abs


def _theta_fundamental(z, lat, prec: int):
    """theta(z; L) = Delta(L) exp(-6 eta(z) z) sigma(z)^12."""
    with mp.workprec(prec + GUARD):
        sig, eu, ev = sigma_and_quasiperiods(z, lat, prec + GUARD)
        eta_z = eta_linear_form(z, lat, eu, ev, prec + GUARD)
        delta = ramanujan_delta(lat, prec + GUARD)
        if THETA_DELTA_TWO_PI:
            delta = delta * (2 * mp.pi) ** 12
        val = delta * mp.exp(-6 * eta_z * z) * sig ** 12
    with mp.workprec(prec):
        return +val


def theta12(field: QuadField, z, lat_ideal: IdealHNF, a_ideal: IdealHNF,
            prec: int = 128, z_coords=None):
    """The 12th power of the a-theta function of C / lat_ideal at z.

    a_ideal must be integral and coprime to 6.  When exact lattice-basis
    coordinates of z are supplied, membership in the divisor (the 0- and
    a-torsion points) is tested exactly and raises DivisorPointError.
    """
    if not a_ideal.is_integral():
        raise EkzetaError("auxiliary ideal must be integral")
    if math.gcd(int(a_ideal.norm()), 6) != 1:
        raise EkzetaError("auxiliary ideal must be coprime to 6")
    na = int(a_ideal.norm())
    inv_lat_ideal = ideal_mul(ideal_inverse(a_ideal), lat_ideal)
    lat = oriented_basis(lat_ideal, prec + GUARD)
    lat_a = oriented_basis(inv_lat_ideal, prec + GUARD)
    if z_coords is not None:
        c1, c2 = Fraction(z_coords[0]), Fraction(z_coords[1])
        if c1.denominator == 1 and c2.denominator == 1:
            raise DivisorPointError("z is a lattice point (zero of theta12)")
        eu, ev = lat_ideal.basis_elements()
        z_elt = eu * c1 + ev * c2
        ca, cb = coords_in_ideal(z_elt, inv_lat_ideal)
        if ca.denominator == 1 and cb.denominator == 1:
            raise DivisorPointError("z is a nonzero a-torsion point (pole)")
        z = z_elt.embed(prec + GUARD)
    with mp.workprec(prec + GUARD):
        t1 = _theta_fundamental(z, lat, prec + GUARD)
        t2 = _theta_fundamental(z, lat_a, prec + GUARD)
        val = t1 ** na / t2
        la = mp.log(mp.fabs(val)) / 12
    with mp.workprec(prec):
        return ThetaValue(+val, +la)


def elliptic_unit_z(a_ideal: IdealHNF, f_ideal: IdealHNF, class_vec,
                    G: RayClassGroup | None = None, prec: int = 128) -> EllipticUnit:
    """The conjugate of the elliptic unit of conductor f labeled by a ray
    class: theta12 at z = 1 on the lattice rep(class)^(-1) * f.

    Requires f != (1) (use u_of_a for the trivial conductor) and the
    auxiliary ideal coprime to 6 f.
    """
    field = f_ideal.field
    if f_ideal.key() == unit_ideal(field).key():
        raise EkzetaError("conductor (1) has no elliptic unit; use u_of_a")
    if not ideal_is_coprime(a_ideal, f_ideal):
        raise EkzetaError("auxiliary ideal must be coprime to the conductor")
    if G is None:
        G = ray_class_group(field, f_ideal)
    class_vec = tuple(class_vec)
    extra = ideal_mul(principal_ideal(field.elt(6)), a_ideal)
    rep = class_rep_coprime(G, class_vec, extra)
    lat_ideal = ideal_mul(ideal_inverse(rep), f_ideal)
    one = field.elt(1)
    coords = coords_in_ideal(one, lat_ideal)
    tv = theta12(field, None, lat_ideal, a_ideal, prec, z_coords=coords)
    return EllipticUnit(a_ideal, f_ideal, class_vec, tv)


def u_of_a(a_ideal: IdealHNF, prec: int = 128):
    """u(a) = Delta(O_K) / Delta(a^(-1)), as a ThetaValue-like pair.

    Conjugates are u(a)^Art(c) = u(a c) / u(c) at the class-group level.
    """
    field = a_ideal.field
    with mp.workprec(prec + GUARD):
        d_top = ramanujan_delta(oriented_basis(unit_ideal(field), prec + GUARD),
                                prec + GUARD)
        d_bot = ramanujan_delta(oriented_basis(ideal_inverse(a_ideal), prec + GUARD),
                                prec + GUARD)
        val = d_top / d_bot
        la = mp.log(mp.fabs(val))
    with mp.workprec(prec):
        return ThetaValue(+val, +(la / 12))


def u_of_a_conjugate_log_abs(a_ideal: IdealHNF, c_ideal: IdealHNF, prec: int = 128):
    """log |u(a)^Art(c)| = log |u(a c)| - log |u(c)| (12 * log_abs scale)."""
    with mp.workprec(prec + GUARD):
        top = u_of_a(ideal_mul(a_ideal, c_ideal), prec + GUARD)
        bot = u_of_a(c_ideal, prec + GUARD)
        val = 12 * (top.log_abs - bot.log_abs)
    with mp.workprec(prec):
        return +val


def conjugate_log_abs_table(a_ideal: IdealHNF, f_ideal: IdealHNF,
                            G: RayClassGroup | None = None, prec: int = 128):
    """log_abs of every Galois conjugate, keyed by ray class vector."""
    field = f_ideal.field
    if G is None:
        G = ray_class_group(field, f_ideal)
    out = {}
    for v in G.all_classes():
        out[tuple(v)] = elliptic_unit_z(a_ideal, f_ideal, v, G, prec).log_abs
    return out


def norm_compat_check(a_ideal: IdealHNF, f_ideal: IdealHNF, P: IdealHNF,
                      prec: int = 128) -> dict:
    """Evaluate both sides of the norm-compatibility relation

        N_{K(Pf)/K(f)}(az_{Pf})^(w_f / w_{Pf}) =
            az_f                      if P | f != 1
            az_f^(1(-) Frob_P^(-1))  if P not | f != 1
            u(P)^((Art(a) - N a)/12)  if f = (1)

    at the log-absolute-value level; returns {case, lhs, rhs}.
    """
    field = f_ideal.field
    pf = ideal_mul(P, f_ideal)
    if not ideal_is_coprime(a_ideal, ideal_mul(pf, principal_ideal(field.elt(6)))):
        raise EkzetaError("auxiliary ideal must be coprime to 6 P f")
    Gpf = ray_class_group(field, pf)
    wf = w_f(field, f_ideal)
    wpf = w_f(field, pf)
    if wf % wpf != 0:
        raise EkzetaError("w_f / w_Pf is not integral (unexpected)")
    expo = wf // wpf

    is_trivial_f = f_ideal.key() == unit_ideal(field).key()
    Gf = ray_class_group(field, f_ideal)

    # kernel of Cl_Pf -> Cl_f indexes Gal(K(Pf)/K(f))
    kernel = []
    for v in Gpf.all_classes():
        R = Gpf.rep(v)
        if Gf.artin_class(R) == Gf.identity():
            kernel.append(v)

    with mp.workprec(prec + GUARD):
        lhs = mp.mpf(0)
        for v in kernel:
            lhs += elliptic_unit_z(a_ideal, pf, v, Gpf, prec + GUARD).log_abs
        lhs *= expo

        if is_trivial_f:
            case = "conductor-one"
            na = int(a_ideal.norm())
            t1 = u_of_a_conjugate_log_abs(P, a_ideal, prec + GUARD)
            t2 = 12 * u_of_a(P, prec + GUARD).log_abs
            rhs = (t1 - na * t2) / 12
        elif ideal_divides(P, f_ideal):
            case = "dividing"
            rhs = elliptic_unit_z(a_ideal, f_ideal, Gf.identity(), Gf,
                                  prec + GUARD).log_abs
        else:
            case = "coprime"
            z0 = elliptic_unit_z(a_ideal, f_ideal, Gf.identity(), Gf,
                                 prec + GUARD).log_abs
            frob_inv = Gf.neg(Gf.artin_class(P))
            z1 = elliptic_unit_z(a_ideal, f_ideal, frob_inv, Gf,
                                 prec + GUARD).log_abs
            rhs = z0 - z1
    with mp.workprec(prec):
        return {"case": case, "lhs": +lhs, "rhs": +rhs}
