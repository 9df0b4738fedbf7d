"""Arbitrary-precision numerics and special functions.

Complex numbers are mpmath mpc/mpf values ("BigComplex").  Every routine
takes an explicit precision in bits (>= 64) and computes inside an
mp.workprec block, so there is no ambient precision state to configure.
Exact objects (Bernoulli polynomials) use Fraction coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from mpmath import mp

from .errors import PrecisionLossError
from .lattice import OrientedLattice

MIN_PREC = 64
GUARD = 16


def check_prec(prec: int) -> int:
    if prec < MIN_PREC:
        raise ValueError(f"precision {prec} below minimum {MIN_PREC} bits")
    return int(prec)


# ----------------------------------------------------------------------
# Bernoulli polynomials, exact

@dataclass(frozen=True)
class RationalPoly:
    """Polynomial with exact rational coefficients, ascending degree."""

    coeffs: tuple

    @staticmethod
    def make(coeffs) -> "RationalPoly":
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        return RationalPoly(tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [Fraction(0)] * (n - len(self.coeffs))
        b = list(other.coeffs) + [Fraction(0)] * (n - len(other.coeffs))
        return RationalPoly.make([x + y for x, y in zip(a, b)])

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "RationalPoly":
        c = Fraction(c)
        return RationalPoly.make([c * x for x in self.coeffs])

    def eval(self, x):
        """Exact at Fraction/int x (Horner)."""
        x = Fraction(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def compose_linear(self, alpha, beta) -> "RationalPoly":
        """p(alpha*x + beta), exact."""
        alpha, beta = Fraction(alpha), Fraction(beta)
        out = [Fraction(0)] * (len(self.coeffs) or 1)
        # powers of (alpha x + beta) by iterated multiplication
        pw = [Fraction(1)]
        for k, c in enumerate(self.coeffs):
            if c:
                for i, p in enumerate(pw):
                    out[i] += c * p
            nxt = [Fraction(0)] * (len(pw) + 1)
            for i, p in enumerate(pw):
                nxt[i] += p * beta
                nxt[i + 1] += p * alpha
            pw = nxt
        return RationalPoly.make(out)


@lru_cache(maxsize=None)
def bernoulli_number(n: int) -> Fraction:
    """B_n with the B_1 = -1/2 convention."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return Fraction(1)
    if n > 1 and n % 2 == 1:
        return Fraction(0)
    acc = Fraction(0)
    for k in range(n):
        acc += math.comb(n + 1, k) * bernoulli_number(k)
    return -acc / (n + 1)


@lru_cache(maxsize=None)
def bernoulli_poly(k: int) -> RationalPoly:
    """The Bernoulli polynomial B_k(x), exact rational coefficients."""
    if k < 0:
        raise ValueError("k must be >= 0")
    coeffs = [math.comb(k, i) * bernoulli_number(k - i) for i in range(k + 1)]
    return RationalPoly.make(coeffs)


# ----------------------------------------------------------------------
# Upper incomplete gamma

def upper_incomplete_gamma(s, x, prec: int = 160):
    """Gamma(s, x) = int_x^oo t^(s-1) e^(-t) dt for x > 0, complex s.

    Evaluated twice at staggered precisions; disagreement beyond the
    requested precision raises PrecisionLossError.
    """
    check_prec(prec)
    x = mp.mpf(x) if not isinstance(x, mp.mpf) else x
    if not x > 0:
        raise ValueError("x must be positive")
    with mp.workprec(prec + GUARD):
        v1 = mp.gammainc(s, x, mp.inf)
    with mp.workprec(prec + 3 * GUARD):
        v2 = mp.gammainc(s, x, mp.inf)
        scale = max(mp.fabs(v2), mp.mpf(2) ** (-2 * prec))
        if mp.fabs(v1 - v2) / scale > mp.mpf(2) ** (-prec):
            raise PrecisionLossError(
                f"incomplete gamma unstable at s={s}, x={x}, prec={prec}")
    with mp.workprec(prec):
        return +v2


def _gammainc_fast(s, x):
    """Internal single-shot incomplete gamma at ambient precision."""
    return mp.gammainc(s, x, mp.inf)


# ----------------------------------------------------------------------
# Ramanujan Delta

def _delta_modular_qseries(tau, prec: int):
    """Delta(tau) = qbar * prod (1 - qbar^n)^24 by direct q-product.

    No basis reduction: converges for any Im(tau) > 0, used both as the
    engine (on reduced bases) and raw for modularity cross-checks.
    """
    with mp.workprec(prec + 2 * GUARD):
        tau = mp.mpc(tau)
        y = mp.im(tau)
        if not y > 0:
            raise ValueError("Im(tau) must be positive")
        qbar = mp.exp(2j * mp.pi * tau)
        nmax = int(math.ceil((prec + 48) * math.log(2) / (2 * math.pi * float(y)))) + 2
        prod = mp.mpc(1)
        for n in range(1, nmax + 1):
            prod *= (1 - qbar ** n) ** 24
        val = qbar * prod
    with mp.workprec(prec):
        return +val


def ramanujan_delta(lat: OrientedLattice, prec: int = 160):
    """Weight -12 homogeneous Delta on lattices: Delta(Z*tau + Z) is the
    q-product and Delta(lam*L) = lam^-12 Delta(L)."""
    check_prec(prec)
    red, _ = lat.reduced()
    with mp.workprec(prec + 2 * GUARD):
        val = _delta_modular_qseries(red.u / red.v, prec + GUARD) / red.v ** 12
    with mp.workprec(prec):
        return +val


# ----------------------------------------------------------------------
# Weierstrass sigma and quasi-periods

def _theta1_data(tau, prec: int):
    """(theta1'(0,q), theta1'''(0,q), q) at the given tau."""
    with mp.workprec(prec):
        q = mp.exp(1j * mp.pi * tau)
        d1 = mp.jtheta(1, 0, q, 1)
        d3 = mp.jtheta(1, 0, q, 3)
        return d1, d3, q


def sigma_and_quasiperiods(z, lat: OrientedLattice, prec: int = 160):
    """Weierstrass sigma(z; L) and the quasi-period pair (eta_u, eta_v)
    for the full periods (u, v): sigma(z + w) = -sigma(z) exp(eta_w (z + w/2))
    for w in {u, v}, and eta_v * u - eta_u * v = 2 pi i under Im(u/v) > 0.

    Raises PrecisionLossError if z is within 2^(-prec/2) of a lattice
    point (relative to |v|), where relative accuracy collapses.
    """
    check_prec(prec)
    wp = prec + 4 * GUARD
    red, M = lat.reduced()
    with mp.workprec(wp):
        z = mp.mpc(z)
        if lat.nearest_point_distance(z) < mp.mpf(2) ** (-prec // 2) * mp.fabs(lat.v):
            raise PrecisionLossError("z within 2^(-prec/2) of a lattice point")
        ur, vr = red.u, red.v
        tau = ur / vr
        d1, d3, q = _theta1_data(tau, wp)
        eta_vr = -(mp.pi ** 2 / (3 * vr)) * (d3 / d1)
        # Legendre relation: with Im(u/v) > 0, eta_v * u - eta_u * v = 2 pi i
        eta_ur = (eta_vr * ur - 2j * mp.pi) / vr
        # sigma from theta1 on the reduced basis
        tval = mp.jtheta(1, mp.pi * z / vr, q)
        sig = (vr / mp.pi) * mp.exp(eta_vr * z ** 2 / (2 * vr)) * tval / d1
        # quasi-periods for the original basis: (u_r, v_r) = M (u, v)
        (a, b), (c, d) = M
        eta_u = d * eta_ur - b * eta_vr
        eta_v = -c * eta_ur + a * eta_vr
    with mp.workprec(prec):
        return +sig, +eta_u, +eta_v


def eta_linear_form(z, lat: OrientedLattice, eta_u, eta_v, prec: int = 160):
    """R-linear quasi-period form: eta(x*u + y*v) = x*eta_u + y*eta_v."""
    with mp.workprec(prec + 2 * GUARD):
        x, y = lat.real_coords(z)
        val = x * eta_u + y * eta_v
    with mp.workprec(prec):
        return +val
