"""Exact arithmetic in Q(zeta_m), used for machine-exact character identities.

Elements are coefficient vectors in the basis 1, z, ..., z^(phi(m)-1) of
Q[x]/Phi_m(x).  Only small m arise (ray class group exponents), so dense
Fraction vectors are plenty.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache


@lru_cache(maxsize=None)
def cyclotomic_poly(m: int) -> tuple:
    """Coefficients (ascending) of the m-th cyclotomic polynomial, exact."""
    # x^m - 1 divided by the product of Phi_d for proper divisors d
    num = [Fraction(-1)] + [Fraction(0)] * (m - 1) + [Fraction(1)]
    for d in range(1, m):
        if m % d == 0:
            num = _polydiv_exact(num, [Fraction(c) for c in cyclotomic_poly(d)])
    return tuple(int(c) for c in num)


def _polydiv_exact(num, den):
    num = list(num)
    q = [Fraction(0)] * (len(num) - len(den) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = num[i + len(den) - 1] / den[-1]
        q[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    assert all(c == 0 for c in num[len(q) + len(den) - 2:]) or all(c == 0 for c in num)
    return q


class CycElt:
    """An element of Q(zeta_m) as a vector over the power basis."""

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs):
        deg = len(cyclotomic_poly(m)) - 1
        v = list(coeffs) + [Fraction(0)] * (deg - len(coeffs))
        self.m = m
        self.coeffs = tuple(Fraction(c) for c in v[:deg])

    @classmethod
    def zero(cls, m):
        return cls(m, [])

    @classmethod
    def one(cls, m):
        return cls(m, [Fraction(1)])

    @classmethod
    def root_power(cls, m: int, k: int):
        """zeta_m^k, reduced into the power basis."""
        return cls(m, _reduce_power(m, k % m))

    def __add__(self, other):
        return CycElt(self.m, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        return CycElt(self.m, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycElt(self.m, [a * other for a in self.coeffs])
        deg = len(self.coeffs)
        prod = [Fraction(0)] * (2 * deg - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                if b:
                    prod[i + j] += a * b
        out = [Fraction(0)] * deg
        for i, c in enumerate(prod):
            if c == 0:
                continue
            if i < deg:
                out[i] += c
            else:
                for j, r in enumerate(_reduce_power(self.m, i)):
                    out[j] += c * r
        return CycElt(self.m, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        return self.m == other.m and self.coeffs == other.coeffs

    def is_zero(self):
        return all(c == 0 for c in self.coeffs)

    def __repr__(self):
        return f"CycElt(m={self.m}, {self.coeffs})"


@lru_cache(maxsize=None)
def _reduce_power(m: int, k: int) -> tuple:
    """Coefficients of x^k reduced mod Phi_m(x)."""
    phi = [Fraction(c) for c in cyclotomic_poly(m)]
    deg = len(phi) - 1
    if k < deg:
        v = [Fraction(0)] * deg
        v[k] = Fraction(1)
        return tuple(v)
    # x^deg = -(phi[0] + phi[1] x + ...)/phi[deg]  (phi is monic: phi[deg]=1)
    prev = _reduce_power(m, k - 1)
    shifted = [Fraction(0)] + list(prev)
    out = shifted[:deg]
    top = shifted[deg] if len(shifted) > deg else Fraction(0)
    if top:
        for j in range(deg):
            out[j] -= top * phi[j]
    return tuple(out)
