"""Ray class groups Cl_f of an imaginary quadratic field, the Artin-symbol
discrete log (ideal -> class), the invariants Phi(f) and w_f, and the
finite-order character lattice with conductors.

Cl_f is assembled from the exact sequence

    units(O) -> (O/f)^x -> Cl_f -> Cl -> 1

with generic SNF bookkeeping on generators and relations; discrete logs
are brute force, which desk-scale moduli make cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .errors import BoundExceededError, EkzetaError
from .groups import AbelianStructure, abelian_structure, smith_normal_form
from .quadfield import (
    ClassGroup,
    FieldElement,
    IdealHNF,
    QuadField,
    class_group,
    factor_ideal,
    ideal_contains,
    ideal_is_coprime,
    ideal_mul,
    ideal_pow,
    ideal_scale,
    prime_ideals_over,
    principal_generator,
    principal_ideal,
    unit_ideal,
)

DEFAULT_BOUND = 10 ** 6


# ----------------------------------------------------------------------
# Residue arithmetic in O/f

@dataclass
class ResidueRing:
    field: QuadField
    modulus: IdealHNF

    def __post_init__(self):
        if not self.modulus.is_integral():
            raise EkzetaError("modulus must be an integral ideal")
        self.a, self.b, self.c = self.modulus.a, self.modulus.b, self.modulus.c

    def reduce_pair(self, x: int, y: int) -> tuple[int, int]:
        q = y // self.c
        y -= q * self.c
        x -= q * self.b
        return x % self.a, y

    def reduce(self, e: FieldElement) -> tuple[int, int]:
        den = math.lcm(e.x.denominator, e.y.denominator)
        if den == 1:
            return self.reduce_pair(int(e.x), int(e.y))
        if math.gcd(den, self.a) != 1:
            raise EkzetaError(f"denominator {den} not invertible mod the modulus")
        t = pow(den, -1, self.a)
        x, y = self.reduce_pair(int(e.x * den), int(e.y * den))
        return self.reduce_pair(x * t, y * t)

    def mul(self, r1, r2) -> tuple[int, int]:
        f = self.field
        e = f.elt(r1[0], r1[1]) * f.elt(r2[0], r2[1])
        return self.reduce_pair(int(e.x), int(e.y))

    def one(self):
        return self.reduce_pair(1, 0)

    def is_unit(self, r) -> bool:
        e = self.field.elt(r[0], r[1])
        if e.is_zero():
            return False
        return ideal_is_coprime(principal_ideal(e), self.modulus)

    def residues(self):
        for y in range(self.c):
            for x in range(self.a):
                yield (x, y)


def phi_f(field: QuadField, f: IdealHNF) -> int:
    """Phi(f) = |(O/f)^x| via the multiplicative prime-power formula."""
    out = 1
    for P, e in factor_ideal(f):
        np = int(P.norm())
        out *= np ** (e - 1) * (np - 1)
    return out


def w_f(field: QuadField, f: IdealHNF) -> int:
    """Number of roots of unity of K congruent to 1 mod f."""
    one = field.elt(1)
    return sum(1 for u in field.units() if ideal_contains(f, u - one))


@dataclass
class ResidueUnitGroup:
    ring: ResidueRing
    structure: AbelianStructure

    @property
    def order(self) -> int:
        return self.structure.order

    def dlog(self, e: FieldElement) -> tuple[int, ...]:
        return self.structure.vector(self.ring.reduce(e))


def units_mod(field: QuadField, f: IdealHNF, bound: int = DEFAULT_BOUND) -> ResidueUnitGroup:
    """(O/f)^x with SNF structure and discrete logs."""
    if f.norm() > bound:
        raise BoundExceededError(f"N(f) = {f.norm()} exceeds bound {bound}")
    ring = ResidueRing(field, f)
    units = [r for r in ring.residues() if ring.is_unit(r)]
    structure = abelian_structure(units, ring.mul, ring.one())
    expected = phi_f(field, f)
    if structure.order != expected:
        raise EkzetaError(
            f"unit group order {structure.order} != Phi(f) = {expected}")
    return ResidueUnitGroup(ring, structure)


# ----------------------------------------------------------------------
# Ray class groups

_RCG_CACHE: dict = {}
_CG_CACHE: dict = {}


def _class_group_cached(field: QuadField) -> ClassGroup:
    if field.d not in _CG_CACHE:
        _CG_CACHE[field.d] = class_group(field)
    return _CG_CACHE[field.d]


@dataclass
class RayClassGroup:
    field: QuadField
    modulus: IdealHNF
    invariants: tuple[int, ...]
    units: ResidueUnitGroup
    cg: ClassGroup
    _lifts: list  # ideals lifting the class-group SNF generators, coprime to f
    _V: list  # SNF column transform for (u-gens | lift-gens) -> invariants
    _keep: list
    reps: dict  # class vector -> representative integral ideal coprime to f

    @property
    def order(self) -> int:
        n = 1
        for d in self.invariants:
            n *= d
        return n

    @property
    def phi(self) -> int:
        return self.units.order

    @property
    def w_modulus(self) -> int:
        return w_f(self.field, self.modulus)

    def _raw_to_snf(self, raw) -> tuple[int, ...]:
        width = len(raw)
        out = []
        for idx, i in enumerate(self._keep):
            s = sum(raw[j] * self._V[j][i] for j in range(width))
            out.append(s % self.invariants[idx])
        return tuple(out)

    def artin_class(self, I: IdealHNF) -> tuple[int, ...]:
        """Class of an ideal coprime to the modulus (the Artin symbol)."""
        num = ideal_scale(I, I.den) if I.den != 1 else I
        coprime = ideal_is_coprime(num, self.modulus)
        if coprime and I.den != 1:
            coprime = ideal_is_coprime(
                principal_ideal(self.field.elt(I.den)), self.modulus)
        if not coprime:
            raise EkzetaError("ideal not coprime to the modulus")
        a_vec = self.cg.class_vector(I)
        J = I
        for L, aj in zip(self._lifts, a_vec):
            J = ideal_mul(J, ideal_pow(L, -aj))
        gamma = principal_generator(J)
        if gamma is None:
            raise EkzetaError("class-group discrete log failed (no generator)")
        u_vec = self.units.dlog(gamma)
        raw = list(u_vec) + list(a_vec)
        return self._raw_to_snf(raw)

    def identity(self) -> tuple[int, ...]:
        return tuple(0 for _ in self.invariants)

    def add(self, v1, v2) -> tuple[int, ...]:
        return tuple((a + b) % d for a, b, d in zip(v1, v2, self.invariants))

    def neg(self, v) -> tuple[int, ...]:
        return tuple((-a) % d for a, d in zip(v, self.invariants))

    def all_classes(self):
        out = [()]
        for d in self.invariants:
            out = [v + (k,) for v in out for k in range(d)]
        return [tuple(v) for v in out]

    def rep(self, vec) -> IdealHNF:
        return self.reps[tuple(vec)]


def ray_class_group(field: QuadField, f: IdealHNF, bound: int = DEFAULT_BOUND) -> RayClassGroup:
    key = (field.d, f.key(), bound)
    if key in _RCG_CACHE:
        return _RCG_CACHE[key]
    U = units_mod(field, f, bound)
    cg = _class_group_cached(field)

    # lifts of the class-group SNF generators, coprime to N(f) so that the
    # residue denominators met in artin_class stay invertible mod f
    nf_ideal = principal_ideal(field.elt(int(f.norm())))
    lifts = []
    for i in range(len(cg.structure.invariants)):
        target = tuple(1 if j == i else 0 for j in range(len(cg.structure.invariants)))
        lifts.append(_coprime_ideal_in_class(field, cg, target, nf_ideal))

    nu = len(U.structure.invariants)
    ns = len(cg.structure.invariants)
    width = nu + ns
    rows = []
    for i, d in enumerate(U.structure.invariants):
        row = [0] * width
        row[i] = d
        rows.append(row)
    for eps in field.units():
        vec = U.dlog(eps)
        rows.append(list(vec) + [0] * ns)
    for j, (L, n) in enumerate(zip(lifts, cg.structure.invariants)):
        Ln = ideal_pow(L, n)
        gamma = principal_generator(Ln)
        if gamma is None:
            raise EkzetaError("lifted class-group relation has no generator")
        vec = U.dlog(gamma)
        row = [-v for v in vec] + [0] * ns
        row[nu + j] = n
        rows.append(row)
    if not rows:
        rows = [[0] * max(width, 1)]
    if width == 0:
        G = RayClassGroup(field, f, (), U, cg, lifts, [], [], {})
        G.reps[()] = unit_ideal(field)
        _RCG_CACHE[key] = G
        return G

    diag, V, _vinv, _u = smith_normal_form(rows)
    keep = [i for i in range(len(diag)) if diag[i] > 1]
    invariants = tuple(diag[i] for i in keep)

    G = RayClassGroup(field, f, invariants, U, cg, lifts, V, keep, {})

    # sanity: the exact order identity |Cl_f| = h Phi(f) w_f / w_K
    expected = cg.h * U.order * w_f(field, f) // field.w_K
    if G.order != expected:
        raise EkzetaError(
            f"ray class order {G.order} != h*Phi*w_f/w_K = {expected}")

    _fill_reps(G)
    _RCG_CACHE[key] = G
    return G


def _form_key_of(I):
    from .quadfield import ideal_form_key
    return ideal_form_key(I)


def _coprime_ideal_in_class(field, cg: ClassGroup, target_vec, f: IdealHNF) -> IdealHNF:
    if all(v == 0 for v in target_vec):
        return unit_ideal(field)
    p = 2
    while p < 5000:
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            for P in prime_ideals_over(field, p):
                if ideal_is_coprime(P, f) and cg.class_vector(P) == tuple(target_vec):
                    return P
        p += 1
    # fall back to products of small primes
    prims = []
    for p in range(2, 50):
        if all(p % q for q in range(2, p)):
            for P in prime_ideals_over(field, p):
                if ideal_is_coprime(P, f):
                    prims.append(P)
    frontier = [(unit_ideal(field), cg.structure.reduce(tuple(0 for _ in target_vec)))]
    seen = {frontier[0][1]}
    while frontier:
        nxt = []
        for I, v in frontier:
            for P in prims:
                J = ideal_mul(I, P)
                vv = cg.class_vector(J)
                if vv == tuple(target_vec):
                    return J
                if vv not in seen:
                    seen.add(vv)
                    nxt.append((J, vv))
        frontier = nxt
    raise EkzetaError("no coprime ideal found in the requested ideal class")


def _fill_reps(G: RayClassGroup):
    """Small-norm integral representatives for every ray class."""
    want = set(G.all_classes())
    reps = {}
    one = unit_ideal(G.field)
    reps[G.artin_class(one)] = one
    p = 2
    budget = 0
    while len(reps) < len(want) and budget < 4000:
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            for P in prime_ideals_over(G.field, p):
                if not ideal_is_coprime(P, G.modulus):
                    continue
                v = G.artin_class(P)
                if v not in reps:
                    reps[v] = P
        p += 1
        budget += 1
    # close under products if primes alone did not cover
    while len(reps) < len(want):
        added = False
        items = list(reps.items())
        for v1, I1 in items:
            for v2, I2 in items:
                v = G.add(v1, v2)
                if v not in reps:
                    reps[v] = ideal_mul(I1, I2)
                    added = True
        if not added:
            raise EkzetaError("could not find representatives for all ray classes")
    G.reps.update(reps)


# ----------------------------------------------------------------------
# Hecke characters

@dataclass(frozen=True)
class HeckeCharacter:
    group: RayClassGroup
    exponents: tuple[int, ...]
    conductor: IdealHNF

    @property
    def is_trivial(self) -> bool:
        return all(e == 0 for e in self.exponents)

    @property
    def order(self) -> int:
        n = 1
        for e, d in zip(self.exponents, self.group.invariants):
            n = math.lcm(n, d // math.gcd(e, d))
        return n

    def value_fraction_on_vector(self, vec) -> Fraction:
        """chi(class) = exp(2 pi i r); returns r in Q/Z as a Fraction."""
        r = Fraction(0)
        for e, v, d in zip(self.exponents, vec, self.group.invariants):
            r += Fraction(e * v, d)
        return r - math.floor(r)

    def value_fraction(self, I: IdealHNF) -> Fraction | None:
        """None encodes chi(I) = 0 (ideal not coprime to the modulus)."""
        num = ideal_scale(I, I.den) if I.den != 1 else I
        if not ideal_is_coprime(num, self.group.modulus):
            return None
        return self.value_fraction_on_vector(self.group.artin_class(I))

    def value(self, I: IdealHNF, prec: int):
        r = self.value_fraction(I)
        with mp.workprec(prec):
            if r is None:
                return mp.mpc(0)
            return mp.e ** (2j * mp.pi * mp.mpf(r.numerator) / r.denominator)

    def value_on_vector(self, vec, prec: int):
        r = self.value_fraction_on_vector(vec)
        with mp.workprec(prec):
            return mp.e ** (2j * mp.pi * mp.mpf(r.numerator) / r.denominator)

    def conjugate(self) -> "HeckeCharacter":
        ex = tuple((-e) % d for e, d in zip(self.exponents, self.group.invariants))
        return HeckeCharacter(self.group, ex, self.conductor)

    def rational_orbit(self) -> list[tuple[int, ...]]:
        """Aut(C)-orbit: the exponent tuples of chi^a, gcd(a, order) = 1."""
        n = self.order
        out = []
        for a in range(1, n + 1):
            if math.gcd(a, n) == 1:
                out.append(tuple((a * e) % d for e, d in
                                 zip(self.exponents, self.group.invariants)))
        return sorted(set(out))

    @property
    def is_primitive(self) -> bool:
        return self.conductor.key() == self.group.modulus.key()


def ideal_divisors(f: IdealHNF) -> list[IdealHNF]:
    """All integral divisors of f, including (1) and f."""
    fact = factor_ideal(f)
    out = [unit_ideal(f.field)]
    for P, e in fact:
        cur = []
        for I in out:
            Pk = unit_ideal(f.field)
            for k in range(e + 1):
                cur.append(ideal_mul(I, Pk))
                Pk = ideal_mul(Pk, P)
        out = cur
    uniq = {}
    for I in out:
        uniq[I.key()] = I
    return list(uniq.values())


def characters(G: RayClassGroup, bound: int = DEFAULT_BOUND) -> list[HeckeCharacter]:
    """All |Cl_f| characters of G, with conductors."""
    divisors = ideal_divisors(G.modulus)
    # kernel classes of Cl_f -> Cl_f' for every proper divisor f'
    kernels = {}
    for D in divisors:
        if D.key() == G.modulus.key():
            continue
        GD = ray_class_group(G.field, D, bound)
        ker = [v for v in G.all_classes()
               if GD.artin_class(G.rep(v)) == GD.identity()]
        kernels[D.key()] = (D, ker)

    from .quadfield import ideal_divides

    out = []
    for exps in G.all_classes():
        chi = HeckeCharacter(G, tuple(exps), G.modulus)
        passing = [G.modulus]
        for D, ker in kernels.values():
            if all(chi.value_fraction_on_vector(v) == 0 for v in ker):
                passing.append(D)
        cond = min(passing, key=lambda D: (D.norm(), D.key()))
        # the set of moduli a character factors through is gcd-closed, so
        # the norm-minimal one must divide all others
        for D in passing:
            if not ideal_divides(cond, D):
                raise EkzetaError("conductor lattice not gcd-closed (bug)")
        out.append(HeckeCharacter(G, tuple(exps), cond))
    return out


def primitive_character(chi: HeckeCharacter, bound: int = DEFAULT_BOUND) -> HeckeCharacter:
    """The primitive character of conductor f_chi inducing chi."""
    if chi.is_primitive:
        return chi
    Gc = ray_class_group(chi.group.field, chi.conductor, bound)
    exps = []
    for gen_vec_idx, d in enumerate(Gc.invariants):
        gen_vec = tuple(1 if i == gen_vec_idx else 0 for i in range(len(Gc.invariants)))
        R = Gc.rep(gen_vec)
        # find an ideal coprime to the big modulus in the same Cl_{f_chi} class
        B = _same_class_coprime(Gc, R, chi.group.modulus)
        r = chi.value_fraction(B)
        assert r is not None
        e = r * d
        if e.denominator != 1:
            raise EkzetaError("character does not factor through its conductor")
        exps.append(int(e) % d)
    return HeckeCharacter(Gc, tuple(exps), chi.conductor)


def class_rep_coprime(G: RayClassGroup, vec, extra: IdealHNF) -> IdealHNF:
    """An integral representative of the ray class `vec` coprime to both the
    modulus and `extra` (used when auxiliary ideals impose coprimality)."""
    R = G.rep(vec)
    return _same_class_coprime(G, R, extra)


def _same_class_coprime(G: RayClassGroup, I: IdealHNF, other: IdealHNF) -> IdealHNF:
    if ideal_is_coprime(I, other):
        return I
    target = G.artin_class(I)
    p = 2
    while p < 5000:
        if all(p % q for q in range(2, int(math.isqrt(p)) + 1)):
            for P in prime_ideals_over(G.field, p):
                if ideal_is_coprime(P, G.modulus) and ideal_is_coprime(P, other):
                    if G.artin_class(P) == target:
                        return P
        p += 1
    # products of two primes as a fallback
    prims = []
    for p in range(2, 200):
        if all(p % q for q in range(2, p)):
            for P in prime_ideals_over(G.field, p):
                if ideal_is_coprime(P, G.modulus) and ideal_is_coprime(P, other):
                    prims.append(P)
    for P1 in prims:
        for P2 in prims:
            J = ideal_mul(P1, P2)
            if G.artin_class(J) == target:
                return J
    raise EkzetaError("no coprime ideal in the required ray class")
