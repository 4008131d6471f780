"""Boundary data of a signature-(n+1,1) lattice at a primitive isotropic line.

From (L, h) and a primitive isotropic e we compute the positive definite
quotient M = J^perp/J by elimination over O_k (gcds via minimal vectors of
rank-2 ideals, valid for every class-number-one field), the translation
scale r_J, the subgroup H_J of the discriminant group with its arrow map
to M^v/M, and the cycle-correction coefficients assembled from the
decomposition table of M.
"""

from __future__ import annotations

from fractions import Fraction

from . import linalg
from .extfield import ext
from .hlattice import GramTarget, HermLattice, enumerate_shifted, enumerate_tuples
from .qfield import FieldElem, QuadField
from .torcoh import CohRing
from .cycles import decompose_cycle_function

Rat = Fraction

CLASS_NUMBER_ONE = (1, 2, 3, 7, 11, 19, 43, 67, 163)


# --- O_k arithmetic: gcd via minimal vectors -------------------------------------------------


def ok_gcd_bezout(a: FieldElem, b: FieldElem):
    """(g, alpha, beta) with g = alpha a + beta b generating the ideal (a, b).

    Works in any class-number-one field: the Z-span of {a, wa, b, wb} is
    the ideal (a, b); its minimal-norm nonzero vector generates it when the
    ideal is principal, and the divisibility check certifies the result.
    """
    f = a.field
    if a.is_zero() and b.is_zero():
        return f.zero(), f.zero(), f.zero()
    if b.is_zero():
        return a, f.one(), f.zero()
    if a.is_zero():
        return b, f.zero(), f.one()
    w = f.omega()
    gens = [a, a * w, b, b * w]
    cols = [[int(x.a), int(x.b)] for x in gens]
    # column HNF of the 2x4 integer matrix, with transform
    M = [[cols[j][i] for j in range(4)] for i in range(2)]
    V = linalg.identity(4)

    def col_op(src, dst, fmul):
        for r in range(2):
            M[r][dst] += fmul * M[r][src]
        for r in range(4):
            V[r][dst] += fmul * V[r][src]

    def col_swap(i, j):
        for r in range(2):
            M[r][i], M[r][j] = M[r][j], M[r][i]
        for r in range(4):
            V[r][i], V[r][j] = V[r][j], V[r][i]

    # clear row 0 to a single pivot, then row 1
    for row in range(2):
        piv = row
        while True:
            nz = [j for j in range(piv, 4) if M[row][j] != 0]
            if not nz:
                break
            jmin = min(nz, key=lambda j: abs(M[row][j]))
            col_swap(piv, jmin)
            done = True
            for j in range(piv + 1, 4):
                if M[row][j] != 0:
                    q = M[row][j] // M[row][piv]
                    col_op(piv, j, -q)
                    if M[row][j] != 0:
                        done = False
            if done:
                break
    basis_cols = [j for j in range(4) if any(M[r][j] != 0 for r in range(2))]
    if len(basis_cols) == 1:
        vecs = [basis_cols[0]]
    else:
        vecs = basis_cols[:2]
    # norm form on the Z-span of the remaining basis columns
    belems = []
    for j in vecs:
        belems.append(FieldElem(f, M[0][j], M[1][j]))
    k = len(belems)
    Q = [[Rat(0)] * k for _ in range(k)]
    for i in range(k):
        Q[i][i] = belems[i].norm()
        for j in range(i + 1, k):
            tr = (belems[i] * belems[j].conj()).trace() / 2
            Q[i][j] = Q[j][i] = tr
    bound = min(Q[i][i] for i in range(k))
    best = None
    for u in enumerate_shifted(Q, [0] * k, bound):
        if all(x == 0 for x in u):
            continue
        g = belems[0] * u[0]
        for t in range(1, k):
            g = g + belems[t] * u[t]
        n = g.norm()
        if best is None or n < best[0]:
            best = (n, g, u)
    if best is None:
        raise ValueError("gcd search failed")
    _, g, u = best
    # combination coefficients back through the transform
    z = [0, 0, 0, 0]
    for t, j in enumerate(vecs):
        for r in range(4):
            z[r] += V[r][j] * u[t]
    alpha = FieldElem(f, z[0], 0) + f.omega() * z[1]
    beta = FieldElem(f, z[2], 0) + f.omega() * z[3]
    # certify: g divides a and b, and g = alpha a + beta b
    for x in (a / g, b / g):
        if not x.is_integral():
            raise ValueError("class number > 1 unsupported (ideal not principal)")
    if alpha * a + beta * b != g:
        raise ValueError("internal error in gcd combination")
    return g, alpha, beta


def ok_row_reduce(row):
    """Unimodular W over O_k with row . W = (g, 0, ..., 0); returns (g, W)."""
    f = row[0].field
    k = len(row)
    r = list(row)
    W = [[f.one() if i == j else f.zero() for j in range(k)] for i in range(k)]

    def apply_cols(i, j, m00, m01, m10, m11):
        # columns (i, j) -> (m00 ci + m10 cj, m01 ci + m11 cj)
        for t in range(k):
            a, b = W[t][i], W[t][j]
            W[t][i] = a * m00 + b * m10
            W[t][j] = a * m01 + b * m11
        a, b = r[i], r[j]
        r[i] = a * m00 + b * m10
        r[j] = a * m01 + b * m11

    for j in range(1, k):
        if r[j].is_zero():
            continue
        if r[0].is_zero():
            apply_cols(0, j, f.zero(), -f.one(), f.one(), f.zero())
            continue
        g, alpha, beta = ok_gcd_bezout(r[0], r[j])
        # [[alpha, -r_j/g], [beta, r_0/g]] has determinant 1
        apply_cols(0, j, alpha, -(r[j] / g), beta, r[0] / g)
    return r[0], W


def ok_complete_primitive(t):
    """Unimodular matrix over O_k whose first column is the primitive vector t."""
    f = t[0].field
    k = len(t)
    # bring t to e_1 by left-multiplications, then invert
    U = [[f.one() if i == j else f.zero() for j in range(k)] for i in range(k)]
    v = list(t)
    for i in range(1, k):
        if v[i].is_zero():
            continue
        if v[0].is_zero():
            for col in range(k):
                U[0][col], U[i][col] = U[i][col], U[0][col]
            v[0], v[i] = v[i], v[0]
        g, alpha, beta = ok_gcd_bezout(v[0], v[i])
        a00, a01 = alpha, beta
        a10, a11 = -(v[i] / g), v[0] / g
        for col in range(k):
            x, y = U[0][col], U[i][col]
            U[0][col] = a00 * x + a01 * y
            U[i][col] = a10 * x + a11 * y
        v[0], v[i] = g, f.zero()
    if not v[0].is_unit():
        raise ValueError("vector is not primitive")
    inv = v[0].inverse()
    for col in range(len(U)):
        U[0][col] = U[0][col] * inv
    return linalg.inverse(U)


# --- isotropic vectors --------------------------------------------------------------------


def find_isotropic(L: HermLattice, search_bound: int = 1):
    """Primitive isotropic vectors with omega-coordinates bounded by search_bound.

    Deduplicated up to unit scaling, deterministic order.  The box search is
    exponential in the rank; bounds beyond 2 are only sensible for small L.
    """
    p, q = L.signature
    if q == 0:
        raise ValueError("positive definite lattices have no isotropic vectors")
    f = L.field
    n = L.rank
    from itertools import product as iproduct

    units = f.units()
    seen = set()
    out = []
    rng = range(-search_bound, search_bound + 1)
    for coords in iproduct(rng, repeat=2 * n):
        if all(c == 0 for c in coords):
            continue
        x = tuple(FieldElem(f, coords[2 * i], coords[2 * i + 1]) for i in range(n))
        if not L.h(x, x).is_zero():
            continue
        if not _is_primitive(x):
            continue
        # canonical representative of the unit orbit: sort-key minimal
        best = min((tuple((u * c) for c in x) for u in units),
                   key=lambda v: tuple(c.sort_key() for c in v))
        key = tuple(c.sort_key() for c in best)
        if key in seen:
            continue
        seen.add(key)
        out.append(best)
    out.sort(key=lambda x: tuple(c.sort_key() for c in x))
    return out


def _is_primitive(x):
    f = x[0].field
    g = None
    for c in x:
        if c.is_zero():
            continue
        g = c if g is None else ok_gcd_bezout(g, c)[0]
    return g is not None and g.is_unit()


# --- boundary data ---------------------------------------------------------------------------


class BoundaryData:
    """M = J^perp/J plus the arrow and correction data at the cusp J = O_k e."""

    def __init__(self, L, e, M, m_lifts, e_prime, c_J, r_J, h_J, h_gens=None):
        self.L = L
        self.e = e
        self.M = M                # positive definite HermLattice of rank n
        self.m_lifts = m_lifts    # lifts of the M-basis inside J^perp (L-coords)
        self.e_prime = e_prime    # complement generator with h(e', e) = c_J
        self.c_J = c_J
        self.r_J = r_J
        self.h_J = h_J            # sorted disc-group indices of H_J
        self.h_gens = h_gens if h_gens is not None else h_J

    @property
    def field(self):
        return self.L.field

    def _basis_inverse(self):
        if not hasattr(self, "_binv"):
            n = self.L.rank
            cols = [list(self.e)] + [list(v) for v in self.m_lifts] + [list(self.e_prime)]
            A = [[cols[j][i] for j in range(len(cols))] for i in range(n)]
            self._binv = linalg.inverse(A)
        return self._binv

    def decompose_vector(self, x):
        """k-coordinates (alpha, m-coords, beta) of x over (e, Lambda-lifts, e')."""
        sol = linalg.mat_vec(self._basis_inverse(), list(x))
        return sol[0], sol[1:-1], sol[-1]

    def _support_profiles(self):
        if not hasattr(self, "_profiles"):
            disc = self.L.disc
            self._profiles = [disc.pairing_profile(j) for j in self.h_gens]
        return self._profiles

    def in_support(self, nu_index: int) -> bool:
        """True iff the L-coset pairs integrally with H_J (checked on generators)."""
        disc = self.L.disc
        for prof in self._support_profiles():
            if disc.pairing_with_profile(nu_index, prof) != 0:
                return False
        return True

    def arrow_up(self, nu_index: int):
        """Image coset in M^v/M, or None when nu is outside H_J^perp."""
        if not self.in_support(nu_index):
            return None
        disc = self.L.disc
        x = disc.reps[nu_index]
        alpha, mcoords, beta = self.decompose_vector(x)
        try:
            return self.M.disc.index_of(tuple(mcoords))
        except ValueError:
            raise ValueError("arrow image is not in M^v: unsupported splitting")

    def to_json(self):
        return {
            "d": self.field.d,
            "e": [c.to_json() for c in self.e],
            "M_gram": [[x.to_json() for x in row] for row in self.M.gram],
            "r_J": [self.r_J.numerator, self.r_J.denominator],
            "H_J_order": len(self.h_J),
            "c_J": self.c_J.to_json(),
        }


def quotient_lattice(L: HermLattice, e):
    """(M, lifts): the positive definite quotient J^perp / O_k e by PID elimination."""
    f = L.field
    if f.d not in CLASS_NUMBER_ONE:
        raise ValueError("class number > 1 unsupported")
    e = tuple(_fe(f, c) for c in e)
    if not L.h(e, e).is_zero():
        raise ValueError("e is not isotropic")
    if not _is_primitive(e):
        raise ValueError("e is not primitive")
    n = L.rank
    basis = [tuple(f.one() if i == j else f.zero() for i in range(n)) for j in range(n)]
    row = [L.h(b, e) for b in basis]
    c_J, W = ok_row_reduce(row)
    # new basis vectors b'_j = sum_i W[i][j] e_i; b'_0 pairs to c_J, the rest span J^perp
    bprime = []
    for j in range(n):
        v = [f.zero()] * n
        for i in range(n):
            if not W[i][j].is_zero():
                v[i] = v[i] + W[i][j]
        bprime.append(tuple(v))
    e_prime = bprime[0]
    kernel = bprime[1:]
    # coordinates of e in the kernel basis (exact, integral, primitive)
    t = linalg.solve_in_span([[kernel[j][i] for i in range(n)] for j in range(n - 1)],
                             list(e))
    if t is None or any(not x.is_integral() for x in t):
        raise ValueError("internal error: e not integral in its perp")
    U = ok_complete_primitive([x for x in t])
    # M-basis lifts: columns 1..n-2 of U expressed through the kernel basis
    lifts = []
    for col in range(1, n - 1):
        v = [f.zero()] * n
        for jk in range(n - 1):
            c = U[jk][col]
            if not c.is_zero():
                for i in range(n):
                    v[i] = v[i] + c * kernel[jk][i]
        lifts.append(tuple(v))
    gram = [[L.h(x, y) for y in lifts] for x in lifts]
    M = HermLattice(f, gram)
    if not M.is_positive_definite():
        raise ValueError("quotient lattice is not positive definite")
    return M, lifts, e_prime, c_J


def _fe(field, v):
    if isinstance(v, FieldElem):
        return v
    return field.elem(v)


def compute_rJ(L: HermLattice, e) -> Rat:
    """Minimal r > 0 with x -> x + (r/delta) h(x,e) e preserving L and L^v/L.

    The condition is r * h(x, e)/delta integral for every dual vector x;
    r is the common denominator clearing of those field elements.
    """
    f = L.field
    e = tuple(_fe(f, c) for c in e)
    delta = f.delta()
    denom = 1
    nums = []
    for x in L.dual.basis_vectors():
        q = L.h(x, e) / delta
        for part in (q.a, q.b):
            denom = denom * part.denominator // _igcd(denom, part.denominator)
    for x in L.dual.basis_vectors():
        q = L.h(x, e) / delta
        for part in (q.a, q.b):
            nums.append(int(part * denom))
    g = 0
    for v in nums:
        g = _igcd(g, abs(v))
    if g == 0:
        raise ValueError("e pairs trivially with the dual lattice")
    return Rat(denom, g)


def _igcd(a, b):
    while b:
        a, b = b, a % b
    return a


def gamma0_matrix_action(L: HermLattice, e, r: Rat):
    """x -> x + (r/delta) h(x, e) e on L-coordinate vectors."""
    f = L.field
    delta = f.delta()

    def act(x):
        c = L.h(x, e) * Rat(r) / delta
        return tuple(xi + c * ei for xi, ei in zip(x, e))

    return act


def boundary_data(L: HermLattice, e) -> BoundaryData:
    """Assemble all cusp data at the isotropic line spanned by e."""
    f = L.field
    e = tuple(_fe(f, c) for c in e)
    M, lifts, e_prime, c_J = quotient_lattice(L, e)
    r_J = compute_rJ(L, e)
    # H_J: the subgroup generated by (J_k cap L^v) mod L
    t0 = (f.one() / (f.delta() * c_J.conj()))
    disc = L.disc
    gens = []
    for u in (t0, t0 * f.omega()):
        vec = tuple(u * c for c in e)
        gens.append(disc.index_of(vec))
    zero = disc.index_of(tuple(f.zero() for _ in range(L.rank)))
    subgroup = {zero}
    frontier = [zero]
    while frontier:
        nxt = []
        for a in frontier:
            for b in gens:
                c = disc.add(a, b)
                if c not in subgroup:
                    subgroup.add(c)
                    nxt.append(c)
        frontier = nxt
    h_J = sorted(subgroup)
    return BoundaryData(L, e, M, lifts, e_prime, c_J, r_J, h_J, h_gens=gens)


def rJ_bruteforce(L: HermLattice, e, max_den: int = 12, max_num: int = 40):
    """Independent oracle: scan r = p/q and test gamma_0 on L and on disc reps."""
    f = L.field
    e = tuple(_fe(f, c) for c in e)
    disc = L.disc
    best = None
    for qd in range(1, max_den + 1):
        for pn in range(1, max_num + 1):
            r = Rat(pn, qd)
            if best is not None and r >= best:
                continue
            act = gamma0_matrix_action(L, e, r)
            ok = True
            for b in L.zbasis_vectors():
                y = act(b)
                if any(c.a.denominator != 1 or c.b.denominator != 1 for c in y):
                    ok = False
                    break
            if not ok:
                continue
            for rep in disc.reps:
                y = act(rep)
                diff = tuple(a - b for a, b in zip(y, rep))
                # trivial action on L^v/L means the difference lies in L itself
                if any(not c.is_integral() for c in diff):
                    ok = False
                    break
            if ok:
                best = r
    return best


# --- cycle corrections at the boundary --------------------------------------------------------


class CorrectionTerm:
    """One summand of the boundary correction: coefficient times a tagged class."""

    def __init__(self, ell, index, coefficient, power):
        self.ell = ell
        self.index = index
        self.coefficient = coefficient  # ExtElem
        self.power = power              # D-exponent g - ell - 1 in the ambient formula

    def to_json(self):
        return {
            "ell": self.ell,
            "i": self.index,
            "coefficient": self.coefficient.to_json(),
            "class": {"W": [self.ell, self.index], "D_power": self.power},
        }


def assemble_correction(bd: BoundaryData, g: int, nu_indices, N) -> list:
    """Correction coefficients (r_J/d_k) * sum over arrow-coset tuples of the
    raised decomposition polynomials, per Lefschetz level ell < g.

    Returns [] when any component of nu is outside H_J^perp.
    """
    M = bd.M
    n = M.rank
    if 2 * g > n:
        raise ValueError("correction requires 2g <= rank of the boundary lattice")
    if not isinstance(N, GramTarget):
        N = GramTarget(M.field, N)
    arrows = []
    for i in nu_indices:
        a = bd.arrow_up(i)
        if a is None:
            return []
        arrows.append(a)
    for i in range(n):
        for j in range(n):
            if i != j and not M.gram[i][j].is_zero():
                raise ValueError("boundary corrections need a diagonal quotient Gram")
    ring = CohRing(M.field, [M.gram[i][i].as_rational() for i in range(n)])
    table = decompose_cycle_function(ring, g)
    tuples = enumerate_tuples(M, N, coset=tuple(arrows))
    scale = ext(M.field, Rat(bd.r_J) / M.field.disc)
    out = []
    for (ell, i, W, P_top, P_raised) in table.entries:
        if ell >= g:
            continue
        total = None
        for lams in tuples:
            v = P_raised.evaluate(lams)
            total = v if total is None else total + v
        if total is None or total.is_zero():
            continue
        out.append(CorrectionTerm(ell, i, total * scale, g - ell - 1))
    return out
