"""Oriented rank-2 lattices in C.

A lattice carries an ordered basis (u, v) with Im(u/v) > 0.  The covolume
V = Im(u * conj(v)) is positive under that orientation, and the area
invariant used by the lattice sums is A = V / pi (taken positive; see
kronecker.PAIRING_SIGN for the conjugation convention that goes with it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp

from .errors import DegenerateLatticeError

# Extra working bits used when constructing derived quantities.
BASIS_GUARD = 16


@dataclass(frozen=True)
class OrientedLattice:
    """Lattice Z*u + Z*v with Im(u/v) > 0.

    exact_basis optionally carries the basis as exact field elements
    (quadfield.FieldElement pairs) so that torsion points get exact
    rational coordinates.
    """

    u: object
    v: object
    prec: int
    exact_basis: tuple | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        with mp.workprec(self.prec):
            t = mp.im(self.u / self.v)
            if not t > 0:
                raise DegenerateLatticeError(
                    f"basis not positively oriented: Im(u/v) = {t}")

    @property
    def covolume(self):
        """V = Im(u * conj(v)) > 0."""
        if "V" not in self._cache:
            with mp.workprec(self.prec):
                self._cache["V"] = mp.im(self.u * mp.conj(self.v))
        return self._cache["V"]

    @property
    def tau(self):
        with mp.workprec(self.prec):
            return self.u / self.v

    def scaled(self, lam) -> "OrientedLattice":
        with mp.workprec(self.prec):
            return OrientedLattice(lam * self.u, lam * self.v, self.prec)

    def transformed(self, M) -> "OrientedLattice":
        """Basis change by M = ((a, b), (c, d)) in SL2(Z)."""
        (a, b), (c, d) = M
        with mp.workprec(self.prec):
            return OrientedLattice(a * self.u + b * self.v,
                                   c * self.u + d * self.v, self.prec)

    def reduced(self):
        """Gauss-reduced basis with tau in |Re| <= 1/2, |tau| >= 1.

        Returns (lattice, M) where M in SL2(Z) maps this basis to the
        reduced one: (u', v') = (a u + b v, c u + d v).
        """
        if "reduced" in self._cache:
            return self._cache["reduced"]
        with mp.workprec(self.prec + BASIS_GUARD):
            a, b, c, d = 1, 0, 0, 1
            u, v = mp.mpc(self.u), mp.mpc(self.v)
            for _ in range(10000):
                t = u / v
                k = int(mp.nint(mp.re(t)))
                if k:
                    u -= k * v
                    a, b = a - k * c, b - k * d
                    t = u / v
                if mp.fabs(t) < 1 - mp.mpf(2) ** (-self.prec // 2):
                    u, v = -v, u
                    a, b, c, d = -c, -d, a, b
                else:
                    break
            else:
                raise DegenerateLatticeError("basis reduction did not terminate")
            out = (OrientedLattice(u, v, self.prec), ((a, b), (c, d)))
        self._cache["reduced"] = out
        return out

    def embed(self, coords):
        """Complex point c1*u + c2*v for rational or real coords."""
        c1, c2 = coords
        with mp.workprec(self.prec):
            return _to_mpf(c1) * self.u + _to_mpf(c2) * self.v

    def real_coords(self, z):
        """Solve z = x*u + y*v for real x, y."""
        with mp.workprec(self.prec + BASIS_GUARD):
            det = self.covolume  # Im(u conj(v))
            # z = x u + y v  =>  x = Im(z conj(v))/V, y = -Im(z conj(u))/V
            x = mp.im(z * mp.conj(self.v)) / det
            y = -mp.im(z * mp.conj(self.u)) / det
            return x, y

    def nearest_point_distance(self, z):
        """Distance from z to the nearest lattice point."""
        x, y = self.real_coords(z)
        with mp.workprec(self.prec + BASIS_GUARD):
            best = None
            for dm in (0, 1):
                for dn in (0, 1):
                    m = mp.floor(x) + dm
                    n = mp.floor(y) + dn
                    d = mp.fabs(z - (m * self.u + n * self.v))
                    best = d if best is None else min(best, d)
            return best

    def contains(self, z, tol_bits=None):
        """Exact-ish membership: both coordinates within 2^-tol of integers."""
        tol_bits = tol_bits if tol_bits is not None else self.prec // 2
        x, y = self.real_coords(z)
        with mp.workprec(self.prec + BASIS_GUARD):
            eps = mp.mpf(2) ** (-tol_bits)
            return mp.fabs(x - mp.nint(x)) < eps and mp.fabs(y - mp.nint(y)) < eps

    def points_in_disk(self, R, center_coords=(0, 0)):
        """Integer pairs (m, n) with |(m+c1) u + (n+c2) v| <= R.

        Deterministic order: n ascending, then m ascending.
        """
        c1, c2 = center_coords
        with mp.workprec(self.prec + BASIS_GUARD):
            g11 = mp.fabs(self.u) ** 2
            g12 = mp.re(self.u * mp.conj(self.v))
            V = self.covolume
            c1f, c2f = _to_mpf(c1), _to_mpf(c2)
            R = mp.mpf(R)
            nrad = R * mp.sqrt(g11) / V
            n_lo = int(mp.floor(-c2f - nrad))
            n_hi = int(mp.ceil(-c2f + nrad))
            out = []
            for n in range(n_lo, n_hi + 1):
                nn = n + c2f
                rest = R ** 2 - nn ** 2 * V ** 2 / g11
                if rest < 0:
                    continue
                mrad = mp.sqrt(rest / g11)
                mc = -g12 * nn / g11 - c1f
                m_lo = int(mp.floor(mc - mrad))
                m_hi = int(mp.ceil(mc + mrad))
                for m in range(m_lo, m_hi + 1):
                    w = (m + c1f) * self.u + (n + c2f) * self.v
                    if mp.fabs(w) <= R:
                        out.append((m, n))
            return out


def _to_mpf(c):
    if isinstance(c, Fraction):
        return mp.mpf(c.numerator) / c.denominator
    return mp.mpf(c) if not isinstance(c, (type(mp.mpf(1)), type(mp.mpc(1)))) else c
