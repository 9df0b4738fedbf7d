"""Finite abelian group plumbing: integer Smith normal form and a generic
structure algorithm for groups given by enumerable elements with a
multiplication callable.

Everything here is exact integer arithmetic; sizes are desk scale (the
callers enforce norm bounds before building residue or class groups).
"""

from __future__ import annotations

from dataclasses import dataclass


def smith_normal_form(rows: list[list[int]]):
    """Smith normal form of an integer matrix.

    Returns (diag, V, Vinv, U) with U*M*V = D diagonal, V and U unimodular,
    Vinv the integer inverse of V.  Column operations are mirrored on Vinv
    so that coordinate vectors transform by x -> x*V.
    """
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if nrows else 0
    V = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]
    Vinv = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]
    U = [[1 if i == j else 0 for j in range(nrows)] for i in range(nrows)]

    def swap_cols(i, j):
        for r in m:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vinv[i], Vinv[j] = Vinv[j], Vinv[i]

    def add_col(i, j, k):
        # col_i += k * col_j ; inverse op on Vinv rows
        for r in m:
            r[i] += k * r[j]
        for r in V:
            r[i] += k * r[j]
        for c in range(ncols):
            Vinv[j][c] -= k * Vinv[i][c]

    def neg_col(i):
        for r in m:
            r[i] = -r[i]
        for r in V:
            r[i] = -r[i]
        for c in range(ncols):
            Vinv[i][c] = -Vinv[i][c]

    def swap_rows(i, j):
        m[i], m[j] = m[j], m[i]
        U[i], U[j] = U[j], U[i]

    def add_row(i, j, k):
        for c in range(ncols):
            m[i][c] += k * m[j][c]
        for c in range(nrows):
            U[i][c] += k * U[j][c]

    t = 0
    while t < min(nrows, ncols):
        # find a pivot
        piv = None
        for i in range(t, nrows):
            for j in range(t, ncols):
                if m[i][j] != 0:
                    piv = (i, j)
                    break
            if piv:
                break
        if piv is None:
            break
        swap_rows(t, piv[0])
        if piv[1] != t:
            swap_cols(t, piv[1])
        # clear row and column t by gcd reduction
        while True:
            # reduce column entries below pivot
            for i in range(t + 1, nrows):
                if m[i][t]:
                    q = m[i][t] // m[t][t]
                    add_row(i, t, -q)
            # reduce row entries right of pivot
            for j in range(t + 1, ncols):
                if m[t][j]:
                    q = m[t][j] // m[t][t]
                    add_col(j, t, -q)
            col_clear = all(m[i][t] == 0 for i in range(t + 1, nrows))
            row_clear = all(m[t][j] == 0 for j in range(t + 1, ncols))
            if col_clear and row_clear:
                break
            # a remainder became the new, smaller pivot candidate
            for i in range(t + 1, nrows):
                if m[i][t]:
                    swap_rows(t, i)
                    break
            else:
                for j in range(t + 1, ncols):
                    if m[t][j]:
                        swap_cols(t, j)
                        break
        if m[t][t] < 0:
            neg_col(t)
        t += 1

    # enforce divisibility d1 | d2 | ...
    r = t
    changed = True
    while changed:
        changed = False
        for i in range(r - 1):
            a, b = m[i][i], m[i + 1][i + 1]
            if a and b % a != 0:
                # standard trick: col_i += col_{i+1}, then re-reduce the 2x2 block
                add_col(i, i + 1, 1)
                # now row i has entries (a, b') ... redo local reduction
                while m[i + 1][i] or m[i][i + 1]:
                    if m[i + 1][i]:
                        q = m[i + 1][i] // m[i][i]
                        add_row(i + 1, i, -q)
                        if m[i + 1][i]:
                            swap_rows(i, i + 1)
                    if m[i][i + 1]:
                        q = m[i][i + 1] // m[i][i]
                        add_col(i + 1, i, -q)
                        if m[i][i + 1]:
                            swap_cols(i, i + 1)
                if m[i][i] < 0:
                    neg_col(i)
                if m[i + 1][i + 1] < 0:
                    neg_col(i + 1)
                changed = True
    diag = [m[i][i] for i in range(min(nrows, ncols))]
    return diag, V, Vinv, U


@dataclass
class AbelianStructure:
    """A finite abelian group in SNF coordinates.

    invariants: the cyclic orders d1 | d2 | ... (all > 1)
    gens: group elements generating the cyclic factors
    dlog: element key -> exponent tuple modulo the invariants
    """

    invariants: tuple[int, ...]
    gens: tuple
    dlog: dict

    @property
    def order(self) -> int:
        n = 1
        for d in self.invariants:
            n *= d
        return n

    def exponent(self) -> int:
        return self.invariants[-1] if self.invariants else 1

    def vector(self, key) -> tuple[int, ...]:
        return self.dlog[key]

    def reduce(self, vec) -> tuple[int, ...]:
        return tuple(v % d for v, d in zip(vec, self.invariants))

    def elements(self):
        return self.dlog.keys()


def abelian_structure(elements, op, identity, key=None) -> AbelianStructure:
    """Compute the SNF structure of a finite abelian group.

    elements: iterable of all group elements; op: binary operation;
    identity: neutral element; key: hashable canonical form (defaults to
    the element itself).  Returns an AbelianStructure whose dlog covers
    every element.
    """
    if key is None:
        key = lambda x: x

    elems = list(elements)
    known = {key(identity): ()}  # element key -> exponent vector over raw gens
    gens: list = []
    raw_orders: list[int] = []
    relations: list[list[int]] = []

    for x in elems:
        kx = key(x)
        if kx in known:
            continue
        # order of x relative to the known subgroup, and the expression of x^k
        y = x
        k = 1
        while key(y) not in known:
            y = op(y, x)
            k += 1
        rel_tail = known[key(y)]
        gens.append(x)
        raw_orders.append(k)
        row = [0] * len(gens)
        row[-1] = k
        relations.append(row)
        # fold the tail expression into the relation: x^k = prod gens^tail
        for i, e in enumerate(rel_tail):
            relations[-1][i] -= e
        # extend previously recorded relations with a zero column
        for r in relations[:-1]:
            r.append(0)
        # enlarge the known subgroup (rebuilt from scratch; desk scale)
        known = _span(gens, raw_orders, op, identity, key)

    if not gens:
        return AbelianStructure((), (), {key(identity): ()})

    # pad relation rows to full width
    width = len(gens)
    rel_rows = [r + [0] * (width - len(r)) for r in relations]
    diag, V, Vinv, _u = smith_normal_form(rel_rows)
    # new generator i = prod_j gens[j] ^ Vinv[i][j]; an old exponent vector e
    # has new coordinates e * V.
    keep = [i for i in range(width) if i < len(diag) and diag[i] > 1]
    invariants = tuple(diag[i] for i in keep)

    def to_snf(vec):
        out = []
        for i in keep:
            s = sum(vec[j] * V[j][i] for j in range(width))
            out.append(s % diag[i])
        return tuple(out)

    new_gens = []
    for i in keep:
        g = identity
        for j in range(width):
            e = Vinv[i][j] % raw_orders[j]
            for _ in range(e):
                g = op(g, gens[j])
        new_gens.append(g)

    dlog = {k: to_snf(v) for k, v in known.items()}
    return AbelianStructure(invariants, tuple(new_gens), dlog)


def _span(gens, orders, op, identity, key):
    """All products of the given generators, as key -> exponent vector."""
    known = {key(identity): ((), identity)}
    for idx, (g, n) in enumerate(zip(gens, orders)):
        cur = list(known.items())
        p = identity
        for j in range(1, n):
            p = op(p, g)
            for _, (vec, el) in cur:
                el2 = op(el, p)
                vec2 = list(vec) + [0] * (idx + 1 - len(vec))
                vec2[idx] = j
                k2 = key(el2)
                if k2 not in known:
                    known[k2] = (tuple(vec2), el2)
    return {k: tuple(list(v[0]) + [0] * (len(gens) - len(v[0]))) for k, v in known.items()}
