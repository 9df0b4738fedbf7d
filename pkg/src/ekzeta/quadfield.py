"""Exact arithmetic in an imaginary quadratic field K = Q(sqrt(d)).

Integers are written x + y*w with w = (d + sqrt(d))/2, so Z[w] = O_K for a
fundamental discriminant d < 0.  Ideals are stored in Hermite normal form
a*Z + (b + c*w)*Z over that basis, with a positive rational denominator for
fractional ideals.  The complex embedding is fixed once and for all:
sqrt(d) -> +i*sqrt(|d|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .errors import BoundExceededError, EkzetaError
from .groups import AbelianStructure, abelian_structure
from .lattice import OrientedLattice


def _is_squarefree(n: int) -> bool:
    n = abs(n)
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        while n % k == 0:
            n //= k
        k += 1
    return True


@dataclass(frozen=True)
class QuadField:
    """Imaginary quadratic field of fundamental discriminant d."""

    d: int

    @property
    def w_K(self) -> int:
        return 4 if self.d == -4 else 6 if self.d == -3 else 2

    # minimal polynomial of w is t^2 - d*t + d(d-1)/4
    @property
    def omega_trace(self) -> int:
        return self.d

    @property
    def omega_norm(self) -> int:
        return self.d * (self.d - 1) // 4

    def omega_complex(self, prec: int):
        with mp.workprec(prec):
            return mp.mpc(self.d, mp.sqrt(-self.d)) / 2

    def elt(self, x, y=0) -> "FieldElement":
        return FieldElement(self, Fraction(x), Fraction(y))

    def units(self):
        """The roots of unity in O_K as field elements."""
        one = self.elt(1)
        if self.d == -4:
            i = self.elt(2, 1)  # w = -2 + i, so i = 2 + w
            return [one, i, -one, -i]
        if self.d == -3:
            z6 = self.elt(2, 1)  # zeta_6 = (1 + sqrt(-3))/2 = 2 + w
            out, cur = [], one
            for _ in range(6):
                out.append(cur)
                cur = cur * z6
            return out
        return [one, -one]

    def __repr__(self):
        return f"QuadField(d={self.d})"


def make_field(d: int) -> QuadField:
    """Validate that d is a negative fundamental discriminant."""
    if d >= 0:
        raise EkzetaError(f"d = {d} is not negative")
    r = d % 4
    if r == 1:
        if not _is_squarefree(d):
            raise EkzetaError(f"d = {d} = 1 mod 4 but not squarefree")
    elif r == 0:
        m = d // 4
        if m % 4 in (0, 1):
            raise EkzetaError(f"d = {d}: d/4 = {m} must be 2 or 3 mod 4")
        if not _is_squarefree(m):
            raise EkzetaError(f"d = {d}: d/4 = {m} not squarefree")
    else:
        raise EkzetaError(f"d = {d} is 2 or 3 mod 4, not a discriminant")
    return QuadField(d)


@dataclass(frozen=True)
class FieldElement:
    """x + y*w with exact rational x, y."""

    field: QuadField
    x: Fraction
    y: Fraction

    def __add__(self, o):
        return FieldElement(self.field, self.x + o.x, self.y + o.y)

    def __sub__(self, o):
        return FieldElement(self.field, self.x - o.x, self.y - o.y)

    def __neg__(self):
        return FieldElement(self.field, -self.x, -self.y)

    def __mul__(self, o):
        if isinstance(o, (int, Fraction)):
            return FieldElement(self.field, self.x * o, self.y * o)
        d = self.field.d
        # w^2 = d(1-d)/4 + d*w
        w2_const = Fraction(d * (1 - d), 4)
        x = self.x * o.x + self.y * o.y * w2_const
        y = self.x * o.y + self.y * o.x + self.y * o.y * d
        return FieldElement(self.field, x, y)

    __rmul__ = __mul__

    def conj(self) -> "FieldElement":
        # wbar = d - w
        return FieldElement(self.field, self.x + self.y * self.field.d, -self.y)

    def norm(self) -> Fraction:
        d = self.field.d
        return self.x ** 2 + self.x * self.y * d + self.y ** 2 * Fraction(d * d - d, 4)

    def trace(self) -> Fraction:
        return 2 * self.x + self.y * self.field.d

    def inverse(self) -> "FieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        c = self.conj()
        return FieldElement(self.field, c.x / n, c.y / n)

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def is_integral(self) -> bool:
        return self.x.denominator == 1 and self.y.denominator == 1

    def embed(self, prec: int):
        with mp.workprec(prec):
            w = self.field.omega_complex(prec)
            return (mp.mpf(self.x.numerator) / self.x.denominator
                    + (mp.mpf(self.y.numerator) / self.y.denominator) * w)

    def __repr__(self):
        return f"({self.x} + {self.y}*w)"


# ----------------------------------------------------------------------
# Ideals in HNF

@dataclass(frozen=True)
class IdealHNF:
    """(1/den) * (a*Z + (b + c*w)*Z), canonical HNF, O_K-stable."""

    field: QuadField
    a: int
    b: int
    c: int
    den: int = 1

    def key(self):
        return (self.field.d, self.a, self.b, self.c, self.den)

    def norm(self) -> Fraction:
        return Fraction(self.a * self.c, self.den ** 2)

    def is_integral(self) -> bool:
        return self.den == 1

    def basis_elements(self):
        f = self.field
        den = Fraction(1, self.den)
        return (FieldElement(f, Fraction(self.b), Fraction(self.c)) * den,
                FieldElement(f, Fraction(self.a), Fraction(0)) * den)

    def smallest_rational(self) -> Fraction:
        """Positive generator of the ideal intersected with Q."""
        return Fraction(self.a, self.den)

    def __repr__(self):
        if self.den == 1:
            return f"[{self.a}, {self.b}+{self.c}w]"
        return f"[{self.a}, {self.b}+{self.c}w]/{self.den}"


def _hnf_from_rows(field: QuadField, rows) -> tuple[int, int, int]:
    """HNF basis (a, 0), (b, c) of the Z-module spanned by rows (x, y)."""
    rows = [(int(x), int(y)) for x, y in rows if x or y]
    if not rows:
        raise ZeroDivisionError("zero module")
    # gcd of y-components with Bezout tracking gives the (b, c) generator
    b, c = 0, 0
    for x, y in rows:
        if y == 0:
            continue
        if c == 0:
            b, c = x, y
        else:
            g, s, t = _xgcd(c, y)
            b, c = s * b + t * x, g
    if c < 0:
        b, c = -b, -c
    # eliminate the y-component from every row; gcd of leftovers is a
    a = 0
    for x, y in rows:
        if c:
            x = x - (y // c) * b  # c | y since c = gcd of all y's
        a = math.gcd(a, abs(x))
    if a == 0 or c == 0:
        raise ZeroDivisionError("module of rank < 2 is not an ideal")
    b %= a
    return a, b, c


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def ideal_from_generators(field: QuadField, gens, den: int = 1) -> IdealHNF:
    """Ideal from a list of FieldElements generating it as a Z-module.

    den is an extra positive denominator applied to the whole module.
    """
    lcm = den
    for g in gens:
        lcm = lcm * g.x.denominator // math.gcd(lcm, g.x.denominator)
        lcm = lcm * g.y.denominator // math.gcd(lcm, g.y.denominator)
    rows = []
    for g in gens:
        s = Fraction(lcm, den)
        gx, gy = g.x * s, g.y * s
        assert gx.denominator == 1 and gy.denominator == 1
        rows.append((int(gx), int(gy)))
    a, b, c = _hnf_from_rows(field, rows)
    g = math.gcd(math.gcd(a, math.gcd(b, c)), lcm)
    return IdealHNF(field, a // g, b // g, c // g, lcm // g)


def principal_ideal(alpha: FieldElement) -> IdealHNF:
    f = alpha.field
    w = FieldElement(f, Fraction(0), Fraction(1))
    return ideal_from_generators(f, [alpha, alpha * w])


def ideal_mul(I: IdealHNF, J: IdealHNF) -> IdealHNF:
    bi = I.basis_elements()
    bj = J.basis_elements()
    gens = [x * y for x in bi for y in bj]
    return ideal_from_generators(I.field, gens)


def ideal_conj(I: IdealHNF) -> IdealHNF:
    gens = [e.conj() for e in I.basis_elements()]
    return ideal_from_generators(I.field, gens)


def ideal_scale(I: IdealHNF, q) -> IdealHNF:
    """Ideal q*I for a positive rational q."""
    q = Fraction(q)
    gens = [e * q for e in I.basis_elements()]
    return ideal_from_generators(I.field, gens)


def ideal_inverse(I: IdealHNF) -> IdealHNF:
    return ideal_scale(ideal_conj(I), 1 / I.norm())


def ideal_div(I: IdealHNF, J: IdealHNF) -> IdealHNF:
    return ideal_mul(I, ideal_inverse(J))


def ideal_pow(I: IdealHNF, n: int) -> IdealHNF:
    f = I.field
    out = unit_ideal(f)
    base = I if n >= 0 else ideal_inverse(I)
    for _ in range(abs(n)):
        out = ideal_mul(out, base)
    return out


def unit_ideal(field: QuadField) -> IdealHNF:
    return IdealHNF(field, 1, 0, 1, 1)


def ideal_add(I: IdealHNF, J: IdealHNF) -> IdealHNF:
    """gcd ideal I + J."""
    return ideal_from_generators(I.field, list(I.basis_elements()) + list(J.basis_elements()))


def ideal_contains(I: IdealHNF, alpha: FieldElement) -> bool:
    # alpha = [m*a + n*(b + c*w)] / den
    x, y = alpha.x * I.den, alpha.y * I.den
    if y % I.c != 0:
        return False
    n = y / I.c
    rem = x - n * I.b
    return rem % I.a == 0


def ideal_divides(I: IdealHNF, J: IdealHNF) -> bool:
    """I | J, i.e. J subset of I."""
    return all(ideal_contains(I, e) for e in J.basis_elements())


def ideal_is_coprime(I: IdealHNF, J: IdealHNF) -> bool:
    return ideal_add(I, J).key() == unit_ideal(I.field).key()


def ideal_valuation(I: IdealHNF, P: IdealHNF) -> int:
    """v_P(I) for a prime ideal P and fractional I."""
    v = 0
    J = I
    # clear denominator: v(I) = v(num) - v((den))
    if J.den != 1:
        num = ideal_scale(J, J.den)
        den_ideal = principal_ideal(J.field.elt(J.den))
        return ideal_valuation(num, P) - ideal_valuation(den_ideal, P)
    Pinv = ideal_inverse(P)
    while True:
        J2 = ideal_mul(J, Pinv)
        if not J2.is_integral():
            return v
        v += 1
        J = J2


def sqrt_mod(a: int, p: int) -> int | None:
    """Tonelli-Shanks square root mod an odd prime p."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t, 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


@dataclass(frozen=True)
class PrimeSplitting:
    kind: str  # "split" | "inert" | "ramified"
    primes: tuple


def factor_rational_prime(field: QuadField, p: int) -> PrimeSplitting:
    """Splitting of the rational prime p in O_K."""
    d = field.d
    if p == 2:
        if d % 8 == 1:
            sym = 1
        elif d % 8 == 5:
            sym = -1
        else:
            sym = 0
    else:
        sym = pow(d % p, (p - 1) // 2, p)
        sym = -1 if sym == p - 1 else sym
    if sym == -1:
        return PrimeSplitting("inert", (IdealHNF(field, p, 0, p, 1),))
    # root of t^2 - d t + d(d-1)/4 mod p
    if p == 2:
        c0 = (d * (d - 1) // 4) % 2
        c1 = d % 2
        r = next(t for t in (0, 1) if (t * t - c1 * t + c0) % 2 == 0)
    else:
        s = sqrt_mod(d % p, p)
        inv2 = pow(2, p - 2, p)
        r = (d + s) * inv2 % p
    P = IdealHNF(field, p, (-r) % p, 1, 1)
    if sym == 0:
        return PrimeSplitting("ramified", (P, P))
    return PrimeSplitting("split", (P, ideal_conj(P)))


def prime_ideals_over(field: QuadField, p: int):
    """Distinct prime ideals above p."""
    sp = factor_rational_prime(field, p)
    if sp.kind == "ramified":
        return [sp.primes[0]]
    return list(sp.primes)


def factor_ideal(I: IdealHNF) -> list[tuple[IdealHNF, int]]:
    """Prime factorization of an integral ideal."""
    if not I.is_integral():
        raise EkzetaError("factor_ideal expects an integral ideal")
    out = []
    n = int(I.norm())
    for p in _prime_factors(n):
        for P in prime_ideals_over(I.field, p):
            v = ideal_valuation(I, P)
            if v:
                out.append((P, v))
    return out


def _prime_factors(n: int) -> list[int]:
    out = []
    k = 2
    while k * k <= n:
        if n % k == 0:
            out.append(k)
            while n % k == 0:
                n //= k
        k += 1
    if n > 1:
        out.append(n)
    return out


def principal_generator(I: IdealHNF, slack: int = 4) -> FieldElement | None:
    """A generator of I if principal, else None (bounded lattice search).

    Searches elements of the numerator ideal of norm exactly N(num); a
    generator exists among them iff I is principal.
    """
    f = I.field
    num = ideal_scale(I, I.den) if I.den != 1 else I
    target = int(num.norm())
    # enumerate m*a + n*(b+c*w) with N <= target; N(x+y*w) grows ~ |d| y^2 / 4
    d = abs(f.d)
    ymax = int(math.isqrt(4 * target // d)) + 1
    a, b, c = num.a, num.b, num.c
    for n in range(-ymax, ymax + 1):
        y = n * c
        # N = x^2 + x y d' + ... solve bound on x for given y
        # N(x + y w) = (x + y d/2)^2 + y^2 |d|/4 with d < 0
        half = Fraction(y * f.d, 2)
        rad = Fraction(target) - Fraction(y * y * d, 4)
        if rad < 0:
            continue
        xmax = int(math.isqrt(int(rad))) + 2
        for x in range(int(-half) - xmax - 2, int(-half) + xmax + 3):
            if (x - n * b) % a != 0:
                continue
            alpha = f.elt(x, y)
            if alpha.is_zero():
                continue
            if alpha.norm() == target and ideal_contains(num, alpha):
                if principal_ideal(alpha).key() == num.key():
                    return alpha * Fraction(1, I.den)
    return None


# ----------------------------------------------------------------------
# Class group via reduced binary quadratic forms

def _reduce_form(a: int, b: int, c: int):
    """Standard reduction of a positive definite form (a, b, c)."""
    while True:
        if b > a or b <= -a:
            r = (a - b) // (2 * a)  # b + 2ra in (-a, a]
            c = a * r * r + b * r + c
            b = b + 2 * r * a
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return a, b, c


def reduced_forms(d: int):
    """All reduced primitive positive forms of discriminant d < 0."""
    out = []
    bmax = int(math.isqrt(abs(d) // 3)) + 1
    for b in range(-bmax, bmax + 1):
        if (b - d) % 2 != 0:
            continue
        m4 = b * b - d
        if m4 % 4 != 0:
            continue
        m = m4 // 4
        a = max(1, abs(b))
        while a * a <= m:
            if a != 0 and m % a == 0:
                c = m // a
                if -a < b <= a <= c and (b >= 0 or a < c):
                    if math.gcd(math.gcd(a, abs(b)), c) == 1:
                        out.append((a, b, c))
            a += 1
    return sorted(set(out))


def class_number(field: QuadField) -> int:
    return len(reduced_forms(field.d))


def ideal_form_key(I: IdealHNF):
    """Reduced-form invariant of the ideal class of I."""
    a, b, c = I.a, I.b, I.c
    a, b = a // c, b // c
    d = I.field.d
    # norm form of (a, b + w): (a, 2b + d, N(b + w)/a)
    nb = b * b + b * d + (d * d - d) // 4
    assert nb % a == 0
    return _reduce_form(a, 2 * b + d, nb // a)


@dataclass
class ClassGroup:
    field: QuadField
    h: int
    structure: AbelianStructure
    reps: dict  # form key -> representative IdealHNF

    def class_vector(self, I: IdealHNF) -> tuple[int, ...]:
        num = ideal_scale(I, I.den) if I.den != 1 else I
        return self.structure.vector(ideal_form_key(num))

    def rep_for_vector(self, vec) -> IdealHNF:
        vec = self.structure.reduce(vec)
        for k, r in self.reps.items():
            if self.structure.vector(k) == vec:
                return r
        raise KeyError(vec)


def class_group(field: QuadField, bound: int = 10 ** 6) -> ClassGroup:
    if abs(field.d) > bound:
        raise BoundExceededError(f"|d| = {abs(field.d)} exceeds bound {bound}")
    h = class_number(field)
    one = unit_ideal(field)
    reps = {ideal_form_key(one): one}
    mink = int(2 / math.pi * math.sqrt(abs(field.d))) + 1
    gens = []
    p = 2
    while p <= mink + 1:
        if all(p % q for q in range(2, p)):
            sp = factor_rational_prime(field, p)
            if sp.kind != "inert":
                gens.append(sp.primes[0])
        p += 1
    frontier = [one]
    while frontier and len(reps) < h:
        nxt = []
        for I in frontier:
            for g in gens:
                J = ideal_mul(I, g)
                k = ideal_form_key(J)
                if k not in reps:
                    reps[k] = J
                    nxt.append(J)
        frontier = nxt
    if len(reps) != h:
        raise EkzetaError(f"class group generation incomplete: {len(reps)} of {h}")

    def op(I, J):
        return reps[ideal_form_key(ideal_mul(I, J))]

    structure = abelian_structure(list(reps.values()), op, one, key=ideal_form_key)
    return ClassGroup(field, h, structure, reps)


# ----------------------------------------------------------------------
# Embeddings

def oriented_basis(I: IdealHNF, prec: int) -> OrientedLattice:
    """Oriented lattice of the ideal under sqrt(d) -> +i sqrt(|d|).

    Basis: u = (b + c*w)/den, v = a/den; Im(u/v) = c sqrt(|d|)/(2a) > 0.
    """
    f = I.field
    eu, ev = I.basis_elements()
    with mp.workprec(prec + 16):
        lat = OrientedLattice(eu.embed(prec + 16), ev.embed(prec + 16), prec,
                              exact_basis=(eu, ev))
    return lat


def coords_in_ideal(alpha: FieldElement, I: IdealHNF) -> tuple[Fraction, Fraction]:
    """Exact rational coordinates of alpha in the oriented basis of I."""
    eu, ev = I.basis_elements()
    # alpha = c1 * eu + c2 * ev; eu = (b + c w)/den, ev = a/den
    c1 = alpha.y / eu.y
    c2 = (alpha.x - c1 * eu.x) / ev.x
    return c1, c2


# ----------------------------------------------------------------------
# Idele approximation

def idele_approximation(f_ideal: IdealHNF, slack: int = 64) -> FieldElement:
    """f in K* with v_P(f) = v_P(f_ideal) at P | f_ideal and v_Q(f) <= 0
    elsewhere.

    Construction: pick alpha in f_ideal with N(alpha)/N(f_ideal) coprime
    to N(f_ideal); then f = alpha / (N(alpha)/N(f_ideal)) works since the
    cofactor ideal A satisfies A | (N A) and N A is coprime to f_ideal.
    """
    if not f_ideal.is_integral():
        raise EkzetaError("conductor must be integral")
    f = f_ideal.field
    nf = int(f_ideal.norm())
    a, b, c = f_ideal.a, f_ideal.b, f_ideal.c
    best = None
    box = 1
    while best is None and box <= slack:
        for n in range(-box, box + 1):
            for m in range(-box, box + 1):
                alpha = f.elt(m * a + n * b, n * c)
                if alpha.is_zero():
                    continue
                na = int(alpha.norm())
                cof = na // nf
                if math.gcd(cof, nf) == 1:
                    cand = (na, (-alpha.x, -alpha.y), alpha)
                    if best is None or cand[:2] < best[:2]:
                        best = cand
        box *= 2
    if best is None:
        raise EkzetaError("no idele approximation found within search bound")
    na, _, alpha = best
    cof = na // nf
    return alpha * Fraction(1, cof)


# ----------------------------------------------------------------------
# Ideal literals:  "(g)" with g an expression in w, or "[a,b,c]"

def parse_element(field: QuadField, text: str) -> FieldElement:
    """Tiny recursive-descent parser for +,-,*,/ over integers and w."""
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("num", int(text[i:j])))
            i = j
        elif ch in "+-*/()w":
            tokens.append((ch, ch))
            i += 1
        else:
            raise EkzetaError(f"bad character {ch!r} in element literal")
    pos = [0]

    def peek():
        return tokens[pos[0]][0] if pos[0] < len(tokens) else None

    def eat(kind):
        if peek() != kind:
            raise EkzetaError(f"expected {kind} in element literal")
        tok = tokens[pos[0]]
        pos[0] += 1
        return tok

    def atom():
        k = peek()
        if k == "num":
            return field.elt(eat("num")[1])
        if k == "w":
            eat("w")
            return field.elt(0, 1)
        if k == "(":
            eat("(")
            v = expr()
            eat(")")
            return v
        if k == "-":
            eat("-")
            return -atom()
        raise EkzetaError("bad element literal")

    def term():
        v = atom()
        while peek() in ("*", "/"):
            if peek() == "*":
                eat("*")
                v = v * atom()
            else:
                eat("/")
                rhs = atom()
                v = v * rhs.inverse()
        return v

    def expr():
        v = term()
        while peek() in ("+", "-"):
            if peek() == "+":
                eat("+")
                v = v + term()
            else:
                eat("-")
                v = v - term()
        return v

    out = expr()
    if pos[0] != len(tokens):
        raise EkzetaError("trailing input in element literal")
    return out


def parse_ideal(field: QuadField, text: str) -> IdealHNF:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        g = parse_element(field, text[1:-1])
        if g.is_zero():
            raise EkzetaError("zero ideal")
        return principal_ideal(g)
    if text.startswith("[") and text.endswith("]"):
        parts = [int(t) for t in text[1:-1].split(",")]
        if len(parts) != 3:
            raise EkzetaError("HNF literal needs exactly [a,b,c]")
        a, b, c = parts
        I = IdealHNF(field, a, b % a, c, 1)
        # validate O-stability by round-tripping through the HNF builder
        J = ideal_from_generators(field, list(I.basis_elements()))
        w = field.elt(0, 1)
        for e in I.basis_elements():
            if not ideal_contains(J, e * w):
                raise EkzetaError(f"[{a},{b},{c}] is not an O_K-stable module")
        return J
    raise EkzetaError(f"cannot parse ideal literal {text!r}")
