"""Special-cycle classes on E_M and their polynomial-weighted decompositions.

The class of Z(lambda_1,...,lambda_g) is the wedge of the harmonic divisor
representatives; viewed as a function of the tuple it is a polynomial with
values in H^{g,g}, i.e. an element of H^{g,g} otimes F_{n,g}.  This module
computes that object symbolically, decomposes it over primitive rational
classes (the Lefschetz-isotypic table), and forms the corrected classes
whose pairing polynomials are pluriharmonic.
"""

from __future__ import annotations

from fractions import Fraction

from . import linalg
from .extfield import ExtElem, ext
from .fpoly import FPoly, MPoly, get_space, laplacian_total, lower, raise_
from .torcoh import CohClass, CohRing, _merge_sign, dual_lefschetz, primitive_hodge_basis

Rat = Fraction


def hermitian_pairing(ring: CohRing, x, y) -> ExtElem:
    """h(x, y) = sum a_l x_l conj(y_l) for the ring's diagonal Gram."""
    s = ExtElem(ring.field, 0)
    for l in range(ring.n):
        xl = ext(ring.field, x[l])
        yl = ext(ring.field, y[l])
        if xl.is_zero() or yl.is_zero():
            continue
        s = s + xl * yl.conj() * ring.a[l]
    return s


def gram_fspace(ring: CohRing, g: int):
    gram = [[ring.a[i] if i == j else 0 for j in range(ring.n)] for i in range(ring.n)]
    return get_space(ring.field, ring.n, g, gram)


# --- pointwise classes -------------------------------------------------------------------


def cycle_class(ring: CohRing, lams) -> CohClass:
    """wedge of f(lambda_i); vanishes for O_k-linearly dependent tuples."""
    out = ring.one()
    for lam in lams:
        out = out.wedge(ring.f_quad(lam))
    return out


def gram_det_class(ring: CohRing, lams) -> CohClass:
    """det[f_sesq(lambda_i, lambda_j)] over the commutative even subalgebra.

    Equals g! * cycle_class(lams); the naive permutation-sum determinant is
    unambiguous because all entries have even degree.
    """
    g = len(lams)
    if g == 0:
        return ring.one()
    F = [[ring.f_sesq(lams[i], lams[j]) for j in range(g)] for i in range(g)]
    return _perm_det_classes(ring, F)


def _perm_det_classes(ring: CohRing, F) -> CohClass:
    from itertools import permutations

    g = len(F)
    total = ring.zero()
    for p in permutations(range(g)):
        sgn = _sign(p)
        term = ring.one()
        for i in range(g):
            term = term.wedge(F[i][p[i]])
            if term.is_zero():
                break
        total = total + (term if sgn > 0 else -term)
    return total


def _sign(p):
    s = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                s = -s
    return s


# --- the cycle class as a polynomial-valued form ------------------------------------------


class CycleClassFn:
    """The universal class [Z(lambda_1..lambda_g)] in H^{g,g} otimes F_{n,g}.

    data maps each (g,g)-monomial (I, J) to the MPoly coefficient function
    of the tuple; specialization at an exact tuple matches cycle_class.
    """

    def __init__(self, ring: CohRing, g: int, data):
        self.ring = ring
        self.g = g
        self.data = data  # (I, J) -> MPoly in g columns

    def specialize(self, lams) -> CohClass:
        U = [[ext(self.ring.field, lams[c][r]) for c in range(self.g)]
             for r in range(self.ring.n)]
        terms = {}
        for key, p in self.data.items():
            v = p.eval(U)
            if not v.is_zero():
                terms[key] = v
        return CohClass(self.ring, terms)

    def fpoly_coefficients(self):
        sp = gram_fspace(self.ring, self.g)
        return {key: sp.from_mpoly(p) for key, p in self.data.items()}

    def apply_laplacian(self) -> "CycleClassFn":
        sp = gram_fspace(self.ring, self.g)
        out = {}
        for key, p in self.data.items():
            dp = laplacian_total(sp, p)
            if not dp.is_zero():
                out[key] = dp
        return CycleClassFn(self.ring, self.g, out)


def _f_sym(ring: CohRing, g: int, col_x: int, col_y: int):
    """f_sesq(lambda_{col_x}, lambda_{col_y}) with MPoly coefficients."""
    f = ring.field
    n = ring.n
    out = {}
    for l in range(n):
        for j in range(n):
            c = ring.c0 * (ring.a[l] * ring.a[j])
            m = MPoly.variable(f, n, g, col_x, l) * MPoly.variable(f, n, g, col_y, j, bar=True)
            out[((l,), (j,))] = m.scale(c)
    return out


def _wedge_sym(ring: CohRing, A, B, g: int):
    out = {}
    for (I1, J1), p1 in A.items():
        for (I2, J2), p2 in B.items():
            sgn = -1 if (len(J1) * len(I2)) % 2 else 1
            sI, I = _merge_sign(I1, I2)
            if sI is None:
                continue
            sJ, J = _merge_sign(J1, J2)
            if sJ is None:
                continue
            p = p1 * p2
            if sgn * sI * sJ < 0:
                p = -p
            key = (I, J)
            s = out.get(key)
            s = p if s is None else s + p
            if s.is_zero():
                out.pop(key, None)
            else:
                out[key] = s
    return out


_cyclefn_registry: dict = {}


def cycle_class_function(ring: CohRing, g: int) -> CycleClassFn:
    """Symbolic wedge f(lambda_1) ^ ... ^ f(lambda_g) as a CycleClassFn."""
    key = (ring.field.d, ring.a, g)
    cached = _cyclefn_registry.get(key)
    if cached is not None:
        return cached
    acc = {((), ()): MPoly.constant(ring.field, ring.n, g, 1)}
    for col in range(g):
        acc = _wedge_sym(ring, acc, _f_sym(ring, g, col, col), g)
    out = CycleClassFn(ring, g, acc)
    _cyclefn_registry[key] = out
    return out


def gram_det_class_function(ring: CohRing, g: int) -> CycleClassFn:
    """det[f_sesq(lambda_i, lambda_j)] symbolically; equals g! times the cycle function."""
    from itertools import permutations

    n = ring.n
    total: dict = {}
    for p in permutations(range(g)):
        sgn = _sign(p)
        acc = {((), ()): MPoly.constant(ring.field, n, g, 1)}
        for i in range(g):
            acc = _wedge_sym(ring, acc, _f_sym(ring, g, i, p[i]), g)
        for key, poly in acc.items():
            q = poly if sgn > 0 else -poly
            s = total.get(key)
            s = q if s is None else s + q
            if s.is_zero():
                total.pop(key, None)
            else:
                total[key] = s
    return CycleClassFn(ring, g, total)


# --- the u-map --------------------------------------------------------------------------


def u_map(ring: CohRing, g: int, alpha: CohClass) -> FPoly:
    """The polynomial tuple -> integrate(cycle_class(tuple) ^ alpha) in F_{n,g}."""
    if not alpha.is_zero():
        p, q = alpha.bidegree()
        if (p, q) != (ring.n - g, ring.n - g):
            raise ValueError("test class must have complementary bidegree")
    fn = cycle_class_function(ring, g)
    sp = gram_fspace(ring, g)
    total = MPoly(ring.field, ring.n, g)
    for key, poly in fn.data.items():
        pairing = ring.monomial(*key).wedge(alpha).integrate()
        if isinstance(pairing, ExtElem) and not pairing.is_zero():
            total = total + poly.scale(pairing)
    return sp.from_mpoly(total)


# --- decomposition table ------------------------------------------------------------------


class DecompositionTable:
    """Lefschetz-isotypic decomposition of the cycle-class function at genus g.

    entries: list of (ell, i, W (primitive rational CohClass), P_top in
    F_{n,ell}, P_raised in F_{n,g}); reassembly sum P_raised(tuple) *
    (W ^ D^{g-ell}) reproduces the cycle function exactly.
    """

    def __init__(self, ring, g, entries):
        self.ring = ring
        self.g = g
        self.entries = entries

    def classes(self):
        """The raised classes W ^ D^{g-ell} parallel to entries."""
        D = self.ring.class_D()
        out = []
        for (ell, i, W, P_top, P_raised) in self.entries:
            cls = W
            for _ in range(self.g - ell):
                cls = cls.wedge(D)
            out.append(cls)
        return out

    def to_json(self):
        return {
            "g": self.g,
            "entries": [
                {
                    "ell": ell,
                    "i": i,
                    "W": W.to_json(),
                    "P_top": P_top.to_json(),
                    "P_raised": P_raised.to_json(),
                }
                for (ell, i, W, P_top, P_raised) in self.entries
            ],
        }


_table_registry: dict = {}


def decompose_cycle_function(ring: CohRing, g: int) -> DecompositionTable:
    """Exact table for [Z(tuple)] = sum P^{ell,g}_i(tuple) W_i^ell ^ D^{g-ell}."""
    key = (ring.field.d, ring.a, g)
    cached = _table_registry.get(key)
    if cached is not None:
        return cached
    n = ring.n
    if g > n:
        raise ValueError("g exceeds the rank")
    fn = cycle_class_function(ring, g)
    sp = gram_fspace(ring, g)
    fcoeffs = fn.fpoly_coefficients()
    # basis of the relevant part of H^{g,g}: W_i^ell ^ D^{g-ell}
    D = ring.class_D()
    labels = []
    classes = []
    for ell in range(0, g + 1):
        if 2 * ell > n or (g - ell) > (n - 2 * ell):
            continue
        prim = primitive_hodge_basis(ring, ell)
        for i, W in enumerate(prim):
            cls = W
            for _ in range(g - ell):
                cls = cls.wedge(D)
            labels.append((ell, i, W))
            classes.append(cls)
    monos = ring.basis_of(g, g)
    M = [[cls.terms.get(m, ExtElem(ring.field, 0)) for cls in classes] for m in monos]
    # solve M x = rhs for each F-basis coordinate of the coefficient functions
    fb = sp.basis
    zero = ExtElem(ring.field, 0)
    coeff_vectors = []  # per F-basis pair: K-vector over monomials
    for pair in fb:
        coeff_vectors.append([fcoeffs.get(m, sp.zero()).coeffs.get(pair, zero)
                              for m in monos])
    cols = [[M[r][c] for r in range(len(monos))] for c in range(len(classes))]
    solved = []  # per F-basis pair: coordinates over classes
    for vec in coeff_vectors:
        coords = linalg.solve_in_span(cols, vec)
        if coords is None:
            raise ValueError("cycle function does not lie in the Hodge-primitive span")
        solved.append(coords)
    entries = []
    for cidx, (ell, i, W) in enumerate(labels):
        coeffs = {}
        for bidx, pair in enumerate(fb):
            v = solved[bidx][cidx]
            if isinstance(v, ExtElem) and not v.is_zero():
                coeffs[pair] = v
            elif not isinstance(v, ExtElem) and v != 0:
                coeffs[pair] = ext(ring.field, v)
        P_raised = FPoly(sp, coeffs)
        # extract the primitive top: lower g-ell times, divide the sl2 constant
        r = g - ell
        k = n - 2 * ell
        cur = P_raised
        for _ in range(r):
            cur = lower(cur)
        c = Rat(1)
        for s in range(1, r + 1):
            c *= s * (k - s + 1)
        P_top = cur.scale(ext(ring.field, Rat(1) / c)) if r else cur
        entries.append((ell, i, W, P_top, P_raised))
    table = DecompositionTable(ring, g, entries)
    _table_registry[key] = table
    return table


# --- corrected classes ---------------------------------------------------------------------


def corrected_class(ring: CohRing, lams) -> CohClass:
    """[Z~(tuple)]: the cycle class minus every non-top Lefschetz component."""
    g = len(lams)
    cls = cycle_class(ring, lams)
    if g == 0:
        return cls
    table = decompose_cycle_function(ring, g)
    D = ring.class_D()
    out = cls
    for (ell, i, W, P_top, P_raised) in table.entries:
        if ell == g:
            continue
        v = P_raised.evaluate(lams)
        if isinstance(v, ExtElem) and v.is_zero():
            continue
        raised = W
        for _ in range(g - ell):
            raised = raised.wedge(D)
        out = out - raised.scale(v)
    return out


def corrected_class_codim1(ring: CohRing, lam) -> CohClass:
    """[Z~(lambda)] = [Z(lambda)] - (h(lambda)/n) D."""
    h = hermitian_pairing(ring, lam, lam)
    return ring.f_quad(lam) - ring.class_D().scale(h * Rat(1, ring.n))


def corrected_pairing_polynomial(ring: CohRing, g: int, alpha: CohClass) -> FPoly:
    """The pluriharmonic polynomial tuple -> integrate(corrected_class ^ alpha)."""
    table = decompose_cycle_function(ring, g)
    sp = gram_fspace(ring, g)
    total = sp.zero()
    D = ring.class_D()
    for (ell, i, W, P_top, P_raised) in table.entries:
        if ell != g:
            continue
        pairing = W.wedge(alpha).integrate()
        if isinstance(pairing, ExtElem) and pairing.is_zero():
            continue
        total = total + P_raised.scale(pairing)
    return total


# --- the delta-adjoint identity -------------------------------------------------------------


def delta_adjoint_check(ring: CohRing, g: int, tuples) -> dict:
    """Verify F(cycle(l_1..l_{g+1})) = sum_{i,j} h(l_j, l_i) v_{ij} at exact tuples.

    v_ii drops factor i; v_ij (i != j) drops factors i and j and inserts
    -f_sesq(lambda_i, lambda_j).  Returns a report with any mismatches.
    """
    mismatches = []
    for lams in tuples:
        assert len(lams) == g + 1
        lhs = dual_lefschetz(ring, cycle_class(ring, lams))
        rhs = ring.zero()
        for i in range(g + 1):
            for j in range(g + 1):
                h = hermitian_pairing(ring, lams[j], lams[i])
                if h.is_zero():
                    continue
                if i == j:
                    v = cycle_class(ring, [lams[t] for t in range(g + 1) if t != i])
                else:
                    v = ring.f_sesq(lams[i], lams[j])
                    for t in range(g + 1):
                        if t != i and t != j:
                            v = v.wedge(ring.f_quad(lams[t]))
                    v = -v
                rhs = rhs + v.scale(h)
        if lhs != rhs:
            mismatches.append(lams)
    return {"g": g, "count": len(tuples), "mismatches": mismatches,
            "pass": not mismatches}
