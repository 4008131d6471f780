"""Theta q-expansions and numeric verification of their transformation laws.

A series is specified by a positive definite lattice M, a genus g, and a
kind: 'weighted' (scalar weights P in F_{n,g}), 'cycles' (class-valued
coefficients wedge f(lambda_i)), 'corrected' (the cycle series minus its
non-top Lefschetz components) or 'completed' (weighted series with the
exp(-Delta/4pi) completion).  q-expansion coefficients are exact; numeric
evaluation embeds them at a requested working precision, and reported
truncation tails come from explicit margin shells with a geometric-decay
cap (the margin shells are checked to contract at least by e^{-pi*lmin}).

Fourier convention: q^N with N the full Gram matrix h(lambda_i, lambda_j)
and matching full-Gram n(B) phases; this is the unique choice for which
the n(B) functional equation holds exactly (half_pairing=True selects the
halved variant for comparison, and fails that test).
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from mpmath import mp, mpc, mpf

from .extfield import ExtElem, ext
from .fpoly import FPoly, MPoly, laplacian_total
from .hlattice import GramTarget, HermLattice, enumerate_tuples, enumerate_vectors
from .qfield import FieldElem
from .torcoh import CohClass, CohRing
from .cycles import (
    CycleClassFn,
    cycle_class_function,
    decompose_cycle_function,
    gram_fspace,
)
from .weilrep import WeilRep, GroupGen, mat_vec_c

Rat = Fraction


class SeriesSpec:
    """What to sum: lattice, genus, kind and (for weighted kinds) the weight."""

    KINDS = ("weighted", "completed", "cycles", "corrected")

    def __init__(self, lattice: HermLattice, g: int, kind: str, poly: FPoly = None,
                 half_pairing: bool = False):
        if kind not in self.KINDS:
            raise ValueError(f"unknown series kind {kind!r}")
        if not lattice.is_positive_definite():
            raise ValueError("theta series require a positive definite lattice")
        self.lattice = lattice
        self.g = g
        self.kind = kind
        self.poly = poly
        self.half_pairing = half_pairing
        if kind in ("weighted", "completed"):
            if poly is None:
                raise ValueError(f"kind {kind} needs a weight polynomial")
            if poly.space.n != lattice.rank or poly.space.g != g:
                raise ValueError("weight polynomial shape mismatch")
            if poly.space.gram != lattice.gram:
                raise ValueError("weight polynomial must use the lattice Gram")
        self._ring = None

    @property
    def ring(self) -> CohRing:
        """Cohomology ring of the boundary torus; requires a diagonal Gram."""
        if self._ring is None:
            L = self.lattice
            n = L.rank
            diag = []
            for i in range(n):
                for j in range(n):
                    if i != j and not L.gram[i][j].is_zero():
                        raise ValueError("class-valued series require a diagonal Gram")
                diag.append(L.gram[i][i].as_rational())
            self._ring = CohRing(L.field, diag)
        return self._ring

    @property
    def weight(self) -> int:
        return self.lattice.rank + 2

    def weilrep(self) -> WeilRep:
        return WeilRep(self.lattice, self.g, half_pairing=self.half_pairing)


class QExpansion:
    """Truncated Fourier expansion: (coset tuple, Gram target) -> exact value."""

    def __init__(self, spec: SeriesSpec, truncation, coefficients, basis):
        self.spec = spec
        self.truncation = Rat(truncation)
        self.coefficients = coefficients  # (nu_tuple, N_key) -> value
        self.basis = basis                # coset tuples, WeilRep order
        self._nmats = {}                  # N_key -> FieldElem matrix

    def register_n(self, key, matrix):
        self._nmats.setdefault(key, matrix)

    def n_matrix(self, key):
        return self._nmats[key]

    def support(self):
        return sorted(self.coefficients, key=lambda kv: (sum(
            self._nmats[kv[1]][i][i].as_rational() for i in range(self.spec.g)), kv[1], kv[0]))

    def evaluate_at(self, tau, precision=64):
        """Numeric vector over coset tuples: sum of coeff * e^{2 pi i Tr(N tau)}.

        Only defined for scalar-valued kinds; class-valued series should be
        paired against test classes first.
        """
        g = self.spec.g
        with mp.workprec(precision):
            vals = {t: mpc(0) for t in self.basis}
            for (nu, nkey), c in self.coefficients.items():
                N = self._nmats[nkey]
                tr = mpc(0)
                for i in range(g):
                    for j in range(g):
                        if not N[i][j].is_zero():
                            tr += N[i][j].embed(precision) * tau[j][i]
                q = mp.exp(2j * mp.pi * tr)
                vals[nu] += c.embed(precision) * q
            return [vals[t] for t in self.basis]

    def check_nB_exact(self, B) -> bool:
        """Exact n(B) functional equation: e(Tr(N B)) must match the rho_n phase."""
        rep = self.spec.weilrep()
        phases = {t: ph for t, ph in zip(rep.basis, rep.rho_n_phases(B))}
        f = self.spec.lattice.field
        g = self.spec.g
        BM = [[_fe(f, B[i][j]) for j in range(g)] for i in range(g)]
        for (nu, nkey) in self.coefficients:
            N = self._nmats[nkey]
            tr = None
            for i in range(g):
                for j in range(g):
                    v = N[i][j] * BM[j][i]
                    tr = v if tr is None else tr + v
            ph = tr.as_rational()
            if self.spec.half_pairing:
                ph = ph / 2
            if (ph - phases[nu]) % 1 != 0:
                return False
        return True

    def to_json(self):
        sp = self.spec
        out = {
            "meta": {
                "d": sp.lattice.field.d,
                "gram": [[x.to_json() for x in row] for row in sp.lattice.gram],
                "g": sp.g,
                "weight": sp.weight,
                "T": [self.truncation.numerator, self.truncation.denominator],
                "kind": sp.kind,
            },
            "coefficients": [],
        }
        for (nu, nkey) in self.support():
            c = self.coefficients[(nu, nkey)]
            N = self._nmats[nkey]
            if isinstance(c, ExtElem):
                val = c.to_json()
            elif isinstance(c, CohClass):
                val = c.to_json()
            else:
                val = [x.to_json() for x in c]
            out["coefficients"].append({
                "nu": list(nu),
                "N": [[x.to_json() for x in row] for row in N],
                "value": val,
            })
        return out


def _fe(field, v):
    if isinstance(v, FieldElem):
        return v
    return field.elem(v)


# --- tuple enumeration grouped by coset and Gram -----------------------------------------


def _vectors_by_coset(L: HermLattice, bound, workers=1):
    """Per coset index: list of (vector, h-norm) with h <= bound."""
    disc = L.disc
    out = []
    for i in range(len(disc)):
        vs = enumerate_vectors(L, bound, coset=i, workers=workers)
        out.append([(v, L.hnorm(v)) for v in vs])
    return out


def iter_tuples(L: HermLattice, g: int, T, workers=1):
    """Yield (nu_tuple, lams, N) over all tuples in (M^v)^g with Tr N <= T.

    N is the exact full Gram matrix (FieldElem).  Deterministic order
    (cosets outer, h-sorted vectors inner).
    """
    T = Rat(T)
    by_coset = [sorted(lst, key=lambda vh: (vh[1], tuple(c.sort_key() for c in vh[0])))
                for lst in _vectors_by_coset(L, T, workers=workers)]
    ncos = len(by_coset)
    lams = [None] * g
    hvals = [None] * g
    cosets = [0] * g
    out = []

    def rec(col, remaining):
        for ci in range(ncos):
            cosets[col] = ci
            for (v, h) in by_coset[ci]:
                if h > remaining:
                    break  # h-sorted
                lams[col] = v
                hvals[col] = h
                if col + 1 == g:
                    out.append((tuple(cosets), tuple(lams), list(hvals)))
                else:
                    rec(col + 1, remaining - h)

    rec(0, T)
    for nu, tup, hs in out:
        N = [[None] * g for _ in range(g)]
        for i in range(g):
            N[i][i] = L.field.elem(hs[i])
            for j in range(i + 1, g):
                v = L.h(tup[i], tup[j])
                N[i][j] = v
                N[j][i] = v.conj()
        yield nu, tup, N


def _n_key(N):
    return tuple(x.sort_key() for row in N for x in row)


def qexp(spec: SeriesSpec, T, workers: int = 1) -> QExpansion:
    """Exact q-expansion up to Tr N <= T."""
    L = spec.lattice
    g = spec.g
    rep_basis = list(product(range(len(L.disc)), repeat=g))
    coeffs = {}
    nmats = {}

    if spec.kind in ("weighted", "completed"):
        P = spec.poly

        def value(lams):
            return P.evaluate(lams)

        def add(acc, v):
            return v if acc is None else acc + v

        def nonzero(v):
            return not v.is_zero()

    elif spec.kind == "cycles":
        ring = spec.ring
        fn = cycle_class_function(ring, g)

        def value(lams):
            return fn.specialize(lams)

        def add(acc, v):
            return v if acc is None else acc + v

        def nonzero(v):
            return not v.is_zero()

    elif spec.kind == "corrected":
        ring = spec.ring
        fn = cycle_class_function(ring, g)
        table = decompose_cycle_function(ring, g)
        tail_entries = [(e, cls) for e, cls in zip(table.entries, table.classes())
                        if e[0] != g]

        def value(lams):
            cls = fn.specialize(lams)
            for (ell, i, W, P_top, P_raised), raised in tail_entries:
                v = P_raised.evaluate(lams)
                if not v.is_zero():
                    cls = cls - raised.scale(v)
            return cls

        def add(acc, v):
            return v if acc is None else acc + v

        def nonzero(v):
            return not v.is_zero()

    for nu, lams, N in iter_tuples(L, g, T, workers=workers):
        key = (nu, _n_key(N))
        nmats.setdefault(key[1], N)
        v = value(lams)
        cur = coeffs.get(key)
        coeffs[key] = add(cur, v)
    coeffs = {k: v for k, v in coeffs.items() if nonzero(v)}
    out = QExpansion(spec, T, coeffs, rep_basis)
    out._nmats = nmats
    return out


def qexp_weighted_multi(L: HermLattice, polys, g: int, T, workers: int = 1):
    """One enumeration pass, many scalar weights: (nu, N_key) -> tuple of values."""
    coeffs = {}
    nmats = {}
    for nu, lams, N in iter_tuples(L, g, T, workers=workers):
        key = (nu, _n_key(N))
        nmats.setdefault(key[1], N)
        vals = tuple(P.evaluate(lams) for P in polys)
        cur = coeffs.get(key)
        if cur is None:
            coeffs[key] = vals
        else:
            coeffs[key] = tuple(a + b for a, b in zip(cur, vals))
    return coeffs, nmats


# --- numeric evaluation of completed series ------------------------------------------------


def hermitian_sqrt(Y, precision=64):
    """Positive square root of a positive definite Hermitian mpmath matrix."""
    g = len(Y)
    with mp.workprec(precision):
        M = mp.matrix(g)
        for i in range(g):
            for j in range(g):
                M[i, j] = (Y[i][j] + mp.conj(Y[j][i])) / 2
        E, Q = mp.eighe(M)
        for i in range(g):
            if E[i] <= 0:
                raise ValueError("Y is not positive definite")
        S = mp.matrix(g)
        for i in range(g):
            for j in range(g):
                S[i, j] = sum(Q[i, k] * mp.sqrt(E[k]) * mp.conj(Q[j, k]) for k in range(g))
        return [[S[i, j] for j in range(g)] for i in range(g)]


def _ymin(Y, precision=64):
    with mp.workprec(precision):
        g = len(Y)
        M = mp.matrix(g)
        for i in range(g):
            for j in range(g):
                M[i, j] = (Y[i][j] + mp.conj(Y[j][i])) / 2
        E, _ = mp.eighe(M)
        return min(E)


def _y_of(tau):
    g = len(tau)
    return [[(tau[i][j] - (tau[j][i]).conjugate()) / 2j for j in range(g)] for i in range(g)]


def _exp_terms_scalar(P: FPoly):
    """[(r, Delta^r P as MPoly)] for the total Laplacian; finite list."""
    sp = P.space
    out = []
    cur = P.to_mpoly()
    r = 0
    while not cur.is_zero():
        out.append((r, cur))
        cur = laplacian_total(sp, cur)
        r += 1
    return out


class _Num:
    """Numeric backend: native complex for precision <= 53, else mpmath."""

    def __init__(self, precision: int):
        self.prec = precision
        self.native = precision <= 53

    def embed(self, x):
        if self.native:
            return x.embed_native()
        return x.embed(self.prec)

    def exp2pii(self, z):
        import cmath

        if self.native:
            return cmath.exp(2j * cmath.pi * z)
        return mp.exp(2j * mp.pi * z)

    def pi(self):
        import cmath

        return cmath.pi if self.native else +mp.pi

    def zero(self):
        return complex(0) if self.native else mpc(0)

    def to_float(self, x):
        return abs(x)


def _compile_mpoly(poly: MPoly, num: _Num):
    """Flatten an MPoly into (coeff, z-slot list, w-slot list) triples."""
    out = []
    for (ze, we), c in poly.terms.items():
        zs = [i for i, e in enumerate(ze) for _ in range(e)]
        ws = [i for i, e in enumerate(we) for _ in range(e)]
        out.append((num.embed(c), zs, ws))
    return out


def _eval_compiled(terms, zv, wv, zero):
    tot = zero
    for c, zs, ws in terms:
        v = c
        for s in zs:
            v = v * zv[s]
        for s in ws:
            v = v * wv[s]
        tot = tot + v
    return tot


def _flat_coords(L, lams, g, num: _Num, sqY):
    """Embedded (lambda . sqrt(Y)) entries flattened by slot col*n + row."""
    n = L.rank
    U = [[num.embed(lams[c][r]) for c in range(g)] for r in range(n)]
    zv = [None] * (n * g)
    for c in range(g):
        for r in range(n):
            zv[c * n + r] = sum(U[r][k] * sqY[k][c] for k in range(g))
    wv = [x.conjugate() for x in zv]
    return zv, wv


class _NumericTuples:
    """Tuple stream for numeric summation: embedded vectors, numeric Grams.

    Vectors are embedded once per coset list; tuples carry exact column
    norms (for shell bookkeeping) and backend-embedded coordinates, with
    the numeric Gram pairing computed from the embedded Gram matrix.
    """

    def __init__(self, L: HermLattice, T, num: _Num, workers=1):
        self.L = L
        self.num = num
        self.T = Rat(T)
        G = L.gram
        n = L.rank
        self.Gn = [[num.embed(G[i][j]) for j in range(n)] for i in range(n)]
        self.by_coset = []
        for lst in _vectors_by_coset(L, self.T, workers=workers):
            lst = sorted(lst, key=lambda vh: (vh[1], tuple(c.sort_key() for c in vh[0])))
            self.by_coset.append([
                (h, tuple(num.embed(c) for c in v)) for (v, h) in lst
            ])

    def h_num(self, x, y):
        n = self.L.rank
        Gn = self.Gn
        s = self.num.zero()
        for i in range(n):
            xi = x[i]
            if xi == 0:
                continue
            for j in range(n):
                yj = y[j]
                if yj == 0:
                    continue
                s = s + xi * Gn[i][j] * yj.conjugate()
        return s

    def iter(self, g: int):
        """Yield (nu, cols, hs) with cols embedded coordinate tuples."""
        ncos = len(self.by_coset)
        cols = [None] * g
        hs = [None] * g
        cosets = [0] * g
        out = []

        def rec(col, remaining):
            for ci in range(ncos):
                cosets[col] = ci
                for (h, emb) in self.by_coset[ci]:
                    if h > remaining:
                        break
                    cols[col] = emb
                    hs[col] = h
                    if col + 1 == g:
                        out.append((tuple(cosets), tuple(cols), tuple(hs)))
                    else:
                        rec(col + 1, remaining - h)

        rec(0, self.T)
        return out

    def gram_numeric(self, cols, hs):
        g = len(cols)
        N = [[None] * g for _ in range(g)]
        for i in range(g):
            N[i][i] = float(hs[i]) if self.num.native else mpf(hs[i].numerator) / hs[i].denominator
            for j in range(i + 1, g):
                v = self.h_num(cols[i], cols[j])
                N[i][j] = v
                N[j][i] = v.conjugate()
        return N

    def trace_ntau(self, cols, hs, tau):
        g = len(cols)
        N = self.gram_numeric(cols, hs)
        tr = self.num.zero()
        for i in range(g):
            for j in range(g):
                tr = tr + N[i][j] * tau[j][i]
        return tr


def eval_completed(spec: SeriesSpec, tau, T, precision: int = 128, margin: int = 3):
    """det(Y)^{-1} sum exp(-Delta/4pi)(P)(lambda Y^{1/2}) q^{h(lambda)} per coset.

    Returns (values, tail_bound): values is a list over coset tuples in the
    WeilRep basis order.  Works for kind='completed'/'weighted' (scalar
    weights); they coincide when P is harmonic.
    """
    if spec.poly is None:
        raise ValueError("eval_completed needs a weight polynomial")
    L = spec.lattice
    g = spec.g
    num = _Num(precision)
    with mp.workprec(max(precision, 53)):
        Y = _y_of(tau)
        sqY_m = hermitian_sqrt(Y, max(precision, 53))
        detY = _det_c(Y)
        lmin = _ymin(Y, max(precision, 53))
        if num.native:
            sqY = [[complex(x) for x in row] for row in sqY_m]
            detY = complex(detY)
            tau_n = [[complex(x) for x in row] for row in tau]
        else:
            sqY = sqY_m
            tau_n = tau
        layers = [(r, _compile_mpoly(p, num)) for r, p in _exp_terms_scalar(spec.poly)]
        pi = num.pi()
        factors = [(-1 / (4 * pi)) ** r / _factorial(r) for r, _ in layers]
        basis = list(product(range(len(L.disc)), repeat=g))
        vals = {t: num.zero() for t in basis}
        shells = [0.0] * max(margin, 1)
        stream = _NumericTuples(L, Rat(T) + margin, num)
        n = L.rank
        zero = num.zero()
        for nu, cols, hs in stream.iter(g):
            tr = sum(hs, start=Rat(0))
            zv = [None] * (n * g)
            for c in range(g):
                for r_ in range(n):
                    zv[c * n + r_] = sum(cols[k][r_] * sqY[k][c] for k in range(g))
            wv = [x.conjugate() for x in zv]
            total = zero
            for (r_, terms), f in zip(layers, factors):
                total = total + _eval_compiled(terms, zv, wv, zero) * f
            trn = stream.trace_ntau(cols, hs, tau_n)
            term = total * num.exp2pii(trn) / detY
            if tr <= T:
                vals[nu] = vals[nu] + term
            else:
                shell = min(margin, max(1, -int(-float(tr - Rat(T)) // 1))) - 1
                shells[shell] += abs(term)
        tail = _tail_from_shells(shells, lmin)
        return [vals[t] for t in basis], tail


def eval_completed_classfn(ring: CohRing, L: HermLattice, fn: CycleClassFn, tau, T,
                           precision: int = 128, margin: int = 2):
    """Completed evaluation for a class-valued weight (e.g. the cycle function).

    Returns (values, tail_bound) with values a dict coset-tuple -> CohClass
    with numeric coefficients.
    """
    g = fn.g
    num = _Num(precision)
    layers = []
    cur = fn
    r = 0
    while cur.data:
        layers.append((r, [(mono, _compile_mpoly(p, num)) for mono, p in cur.data.items()]))
        cur = cur.apply_laplacian()
        r += 1
    with mp.workprec(max(precision, 53)):
        Y = _y_of(tau)
        sqY_m = hermitian_sqrt(Y, max(precision, 53))
        detY = _det_c(Y)
        lmin = _ymin(Y, max(precision, 53))
        if num.native:
            sqY = [[complex(x) for x in row] for row in sqY_m]
            detY = complex(detY)
            tau_n = [[complex(x) for x in row] for row in tau]
        else:
            sqY = sqY_m
            tau_n = tau
        pi = num.pi()
        factors = [(-1 / (4 * pi)) ** r / _factorial(r) for r, _ in layers]
        basis = list(product(range(len(L.disc)), repeat=g))
        vals = {t: {} for t in basis}
        shells = [0.0] * max(margin, 1)
        zero = num.zero()
        stream = _NumericTuples(L, Rat(T) + margin, num)
        n = L.rank
        for nu, cols, hs in stream.iter(g):
            tr = sum(hs, start=Rat(0))
            zv = [None] * (n * g)
            for c in range(g):
                for r_ in range(n):
                    zv[c * n + r_] = sum(cols[k][r_] * sqY[k][c] for k in range(g))
            wv = [x.conjugate() for x in zv]
            acc = {}
            for (r_, data), f in zip(layers, factors):
                for mono, terms in data:
                    v = _eval_compiled(terms, zv, wv, zero)
                    if v != 0:
                        acc[mono] = acc.get(mono, zero) + v * f
            trn = stream.trace_ntau(cols, hs, tau_n)
            qn = num.exp2pii(trn) / detY
            if tr <= T:
                tgt = vals[nu]
                for mono, v in acc.items():
                    tgt[mono] = tgt.get(mono, zero) + v * qn
            else:
                shell = min(margin, max(1, -int(-float(tr - Rat(T)) // 1))) - 1
                shells[shell] += sum(abs(v) for v in acc.values()) * abs(qn)
        tail = _tail_from_shells(shells, lmin)
        return {t: CohClass(ring, vals[t]) for t in basis}, tail


def _factorial(r):
    out = 1
    for k in range(2, r + 1):
        out *= k
    return out


def _det_c(Y):
    g = len(Y)
    if g == 1:
        return Y[0][0]
    if g == 2:
        return Y[0][0] * Y[1][1] - Y[0][1] * Y[1][0]
    from itertools import permutations

    total = mpc(0)
    for p in permutations(range(g)):
        sgn = 1
        pl = list(p)
        for i in range(g):
            for j in range(i + 1, g):
                if pl[i] > pl[j]:
                    sgn = -sgn
        prod = mpc(1)
        for i in range(g):
            prod *= Y[i][p[i]]
        total += sgn * prod
    return total


def _trace_ntau(N, tau, precision):
    g = len(N)
    tr = mpc(0)
    for i in range(g):
        for j in range(g):
            if not N[i][j].is_zero():
                tr += N[i][j].embed(precision) * tau[j][i]
    return tr


def _tail_from_shells(shells, lmin):
    """Margin-shell tail cap: observed shells plus a geometric continuation.

    The continuation ratio e^{-pi*lmin} is far above the true per-shell
    contraction e^{-2 pi lmin} once polynomial point growth is absorbed;
    the factor-2 safety covers the first few shells where it is not.
    """
    kappa = mp.exp(-mp.pi * lmin)
    total = mpf(0)
    for s in shells:
        total += s
    last = shells[-1] if shells else mpf(0)
    return 2 * (total + last * kappa / (1 - kappa))


# --- the phi completion ----------------------------------------------------------------------


class _PhiContext:
    """Per-(ring, tau) invariants of the phi-completion layers."""

    def __init__(self, ring: CohRing, g: int, tau, num: _Num):
        self.ring = ring
        self.g = g
        self.num = num
        with mp.workprec(max(num.prec, 53)):
            Y = _y_of(tau)
            sqY_m = hermitian_sqrt(Y, max(num.prec, 53))
            detY = _det_c(Y)
            if num.native:
                self.sqY = [[complex(x) for x in row] for row in sqY_m]
                self.detY = complex(detY)
                self.tau = [[complex(x) for x in row] for row in tau]
            else:
                self.sqY = sqY_m
                self.detY = detY
                self.tau = tau
        pi = num.pi()
        self.c0 = num.embed(ring.c0)
        if num.native:
            self.a = [float(x) for x in ring.a]
        else:
            self.a = [mpf(x.numerator) / x.denominator for x in ring.a]
        # D^ell embedded, and the layer prefactors
        D_num = {k: num.embed(v) for k, v in ring.class_D().terms.items()}
        self.D_pows = [{((), ()): num.zero() + 1}]
        for _ in range(g):
            self.D_pows.append(_wedge_numeric(self.D_pows[-1], D_num, num.zero()))
        self.factors = [None] + [
            (-1) ** ell / ((4 * pi) ** ell * _factorial(g - ell)) / self.detY
            for ell in range(1, g + 1)
        ]

    def f_matrix_from_cols(self, cols):
        """Numeric pairing-class Gram of the sqrt(Y)-transformed tuple.

        cols: embedded coordinate tuples, one per column of the tuple.
        """
        g = self.g
        n = self.ring.n
        sqY = self.sqY
        V = [[sum(cols[k][r] * sqY[k][c] for k in range(g)) for c in range(g)]
             for r in range(n)]
        F = [[None] * g for _ in range(g)]
        for i in range(g):
            for j in range(g):
                ent = {}
                for l in range(n):
                    vl = V[l][i]
                    if vl == 0:
                        continue
                    for m_ in range(n):
                        c = V[m_][j].conjugate()
                        if c == 0:
                            continue
                        ent[((l,), (m_,))] = self.c0 * (self.a[l] * self.a[m_]) * vl * c
                F[i][j] = ent
        return F

    def f_matrix(self, lams):
        cols = tuple(tuple(self.num.embed(x) for x in lam) for lam in lams)
        return self.f_matrix_from_cols(cols)

    def term(self, lams):
        """phi contribution of one tuple (all ell-layers), as a monomial dict."""
        return self.term_from_cols(tuple(tuple(self.num.embed(x) for x in lam)
                                         for lam in lams))

    def term_from_cols(self, cols):
        g = self.g
        num = self.num
        F = self.f_matrix_from_cols(cols)
        out = {}
        from itertools import combinations, permutations

        zero = num.zero()
        for ell in range(1, g + 1):
            minor_sum = {}
            for S in combinations(range(g), g - ell):
                for p in permutations(range(len(S))):
                    sgn = _perm_sign_list(p)
                    prod = {((), ()): zero + 1}
                    for a in range(len(S)):
                        prod = _wedge_numeric(prod, F[S[a]][S[p[a]]], zero)
                        if not prod:
                            break
                    for mono, c in prod.items():
                        minor_sum[mono] = minor_sum.get(mono, zero) + sgn * c
            if not minor_sum:
                continue
            layer = _wedge_numeric(minor_sum, self.D_pows[ell], zero)
            f = self.factors[ell]
            for mono, c in layer.items():
                out[mono] = out.get(mono, zero) + c * f
        return out


def _perm_sign_list(p):
    s = 1
    for a in range(len(p)):
        for b in range(a + 1, len(p)):
            if p[a] > p[b]:
                s = -s
    return s


def _wedge_numeric(A, B, zero=0):
    from .torcoh import _merge_sign

    out = {}
    for (I1, J1), c1 in A.items():
        for (I2, J2), c2 in B.items():
            sgn = -1 if (len(J1) * len(I2)) % 2 else 1
            sI, I = _merge_sign(I1, I2)
            if sI is None:
                continue
            sJ, J = _merge_sign(J1, J2)
            if sJ is None:
                continue
            c = c1 * c2 * (sgn * sI * sJ)
            key = (I, J)
            out[key] = out.get(key, zero) + c
    return {k: v for k, v in out.items() if v != 0}


def eval_phi_completion(ring: CohRing, L: HermLattice, g: int, tau, nu, N,
                        precision: int = 128) -> CohClass:
    """phi(tau, nu, N): the non-holomorphic completion layer for one cell.

    nu is a tuple of disc-group indices, N a GramTarget; the q-power is NOT
    included (it multiplies the holomorphic indexing).
    """
    if not isinstance(N, GramTarget):
        N = GramTarget(L.field, N)
    num = _Num(precision)
    ctx = _PhiContext(ring, g, tau, num)
    acc = {}
    zero = num.zero()
    for lams in enumerate_tuples(L, N, coset=nu):
        for mono, c in ctx.term(lams).items():
            acc[mono] = acc.get(mono, zero) + c
    return CohClass(ring, acc)


def phi_completion_total(ring: CohRing, L: HermLattice, g: int, tau, T,
                         precision: int = 128):
    """Sum over all tuples with Tr N <= T of phi-term * q^N, per coset tuple."""
    num = _Num(precision)
    ctx = _PhiContext(ring, g, tau, num)
    basis = list(product(range(len(L.disc)), repeat=g))
    vals = {t: {} for t in basis}
    zero = num.zero()
    stream = _NumericTuples(L, T, num)
    for nu, cols, hs in stream.iter(g):
        trn = stream.trace_ntau(cols, hs, ctx.tau)
        qn = num.exp2pii(trn)
        tgt = vals[nu]
        for mono, c in ctx.term_from_cols(cols).items():
            tgt[mono] = tgt.get(mono, zero) + c * qn
    return {t: CohClass(ring, vals[t]) for t in basis}


# --- functional equations ---------------------------------------------------------------------


class ModularityReport:
    def __init__(self, generator, tau, truncation, residual, tail_bound, tolerance,
                 passed, extra=None):
        self.generator = generator
        self.tau = tau
        self.truncation = truncation
        self.residual = residual
        self.tail_bound = tail_bound
        self.tolerance = tolerance
        self.passed = passed
        self.extra = extra or {}

    def to_json(self):
        return {
            "generator": self.generator,
            "tau": [[_c2j(x) for x in row] for row in self.tau],
            "truncation": str(self.truncation),
            "residual": float(self.residual),
            "tail_bound": float(self.tail_bound),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
            **self.extra,
        }


def _c2j(z):
    return {"re": float(z.real if hasattr(z, "real") else mp.re(z)),
            "im": float(z.imag if hasattr(z, "imag") else mp.im(z))}


def apply_generator_tau(gen: GroupGen, tau, field, precision=128):
    """Fractional-linear action of m(A), n(B), w on the upper half-space."""
    g = len(tau)
    with mp.workprec(precision):
        if gen.kind == "n":
            B = [[_fe(field, gen.matrix[i][j]).embed(precision) for j in range(g)]
                 for i in range(g)]
            return [[tau[i][j] + B[i][j] for j in range(g)] for i in range(g)]
        if gen.kind == "m":
            A = [[_fe(field, gen.matrix[i][j]).embed(precision) for j in range(g)]
                 for i in range(g)]
            Astar = [[(A[j][i]).conjugate() for j in range(g)] for i in range(g)]
            AT = [[sum(A[i][k] * tau[k][j] for k in range(g)) for j in range(g)]
                  for i in range(g)]
            return [[sum(AT[i][k] * Astar[k][j] for k in range(g)) for j in range(g)]
                    for i in range(g)]
        # w: tau -> -tau^{-1}
        M = mp.matrix(g)
        for i in range(g):
            for j in range(g):
                M[i, j] = tau[i][j]
        Minv = M**-1
        return [[-Minv[i, j] for j in range(g)] for i in range(g)]


def generator_det_factor(gen: GroupGen, tau, field, weight: int, precision=128):
    """det(C tau + D)^{weight} for the generator acting at tau."""
    g = len(tau)
    with mp.workprec(precision):
        if gen.kind == "n":
            return mpc(1)
        if gen.kind == "m":
            A = [[_fe(field, gen.matrix[i][j]) for j in range(g)] for i in range(g)]
            from . import linalg

            detA = linalg.det(A)
            # D = (A*)^{-1}: det D = 1/conj(det A)
            return (mpc(1) / detA.conj().embed(precision)) ** weight
        return _det_c(tau) ** weight


def check_functional_equation(spec: SeriesSpec, gen: GroupGen, tau, tolerance=1e-8,
                              precision: int = 128, T=10) -> ModularityReport:
    """Numeric check of f(gen.tau) = det(C tau + D)^{n+2} rho(gen) f(tau).

    n(B) on exact q-expansions short-circuits to the exact phase identity.
    For kind='corrected' the holomorphic series paired with every rational
    test class is checked (each pairing polynomial is pluriharmonic).
    """
    tau = normalize_tau(tau, spec.g)
    rep = spec.weilrep()
    with mp.workprec(precision):
        if gen.kind == "n" and spec.kind in ("weighted", "cycles", "corrected"):
            series = _scalar_expansions(spec, T)
            ok = all(q.check_nB_exact(gen.matrix) for q in series)
            return ModularityReport(
                "n", tau, T, 0.0 if ok else 1.0, 0.0, tolerance, ok,
                {"exact": True})
        tau2 = apply_generator_tau(gen, tau, spec.lattice.field, precision)
        det_factor = generator_det_factor(gen, tau, spec.lattice.field, spec.weight,
                                          precision)
        rho = rep.rho(gen, precision)
        residual = mpf(0)
        tail = mpf(0)
        if spec.kind == "completed":
            lhs, t1 = eval_completed(spec, tau2, T, precision)
            rhs_vec, t2 = eval_completed(spec, tau, T, precision)
            rhs = mat_vec_c(rho, rhs_vec)
            residual = max(abs(a - det_factor * b) for a, b in zip(lhs, rhs))
            tail = t1 + t2 * abs(det_factor)
        else:
            series = _scalar_expansions(spec, T)
            lmin1 = _ymin(_y_of(tau2), precision)
            lmin2 = _ymin(_y_of(tau), precision)
            for q in series:
                lhs = q.evaluate_at(tau2, precision)
                rhs = mat_vec_c(rho, q.evaluate_at(tau, precision))
                residual = max(residual,
                               max(abs(a - det_factor * b) for a, b in zip(lhs, rhs)))
                tail = max(tail, _holomorphic_tail(q, min(lmin1, lmin2), precision)
                           * (1 + abs(det_factor)))
        passed = bool(residual <= tolerance + tail)
        return ModularityReport(gen.kind, tau, T, residual, tail, tolerance, passed,
                                {"precision": precision,
                                 "half_pairing": spec.half_pairing})


def _scalar_expansions(spec: SeriesSpec, T):
    """The scalar vector-valued q-expansions behind a spec (pairing as needed)."""
    if spec.kind in ("weighted", "completed"):
        return [qexp(SeriesSpec(spec.lattice, spec.g, "weighted", spec.poly,
                                spec.half_pairing), T)]
    if spec.kind == "corrected":
        from .torcoh import rational_hodge_basis
        from .cycles import corrected_pairing_polynomial

        ring = spec.ring
        polys = [corrected_pairing_polynomial(ring, spec.g, alpha)
                 for alpha in rational_hodge_basis(ring, ring.n - spec.g)]
        polys = [p for p in polys if not p.is_zero()]
        coeffs, nmats = qexp_weighted_multi(spec.lattice, polys, spec.g, T)
        out = []
        for idx in range(len(polys)):
            sub = {k: v[idx] for k, v in coeffs.items() if not v[idx].is_zero()}
            q = QExpansion(spec, T, sub, list(product(range(len(spec.lattice.disc)),
                                                      repeat=spec.g)))
            q._nmats = nmats
            out.append(q)
        return out
    if spec.kind == "cycles":
        # pair the class-valued series against every rational test class
        from .torcoh import rational_hodge_basis
        from .cycles import u_map

        ring = spec.ring
        polys = [u_map(ring, spec.g, alpha)
                 for alpha in rational_hodge_basis(ring, ring.n - spec.g)]
        polys = [p for p in polys if not p.is_zero()]
        coeffs, nmats = qexp_weighted_multi(spec.lattice, polys, spec.g, T)
        out = []
        for idx in range(len(polys)):
            sub = {k: v[idx] for k, v in coeffs.items() if not v[idx].is_zero()}
            q = QExpansion(spec, T, sub, list(product(range(len(spec.lattice.disc)),
                                                      repeat=spec.g)))
            q._nmats = nmats
            out.append(q)
        return out
    raise ValueError(spec.kind)


def _holomorphic_tail(q: QExpansion, lmin, precision):
    """Geometric cap on the discarded terms of a truncated holomorphic series."""
    with mp.workprec(precision):
        T = q.truncation
        # magnitude of the last retained shell
        last = mpf(0)
        for (nu, nkey), c in q.coefficients.items():
            N = q._nmats[nkey]
            tr = sum(N[i][i].as_rational() for i in range(q.spec.g))
            if tr > T - 1:
                last += abs(c.embed(precision)) * mp.exp(-2 * mp.pi * lmin * float(tr))
        kappa = mp.exp(-mp.pi * lmin)
        return 2 * last * kappa / (1 - kappa)


def normalize_tau(tau, g):
    """Accept 'i', a scalar, or a full matrix; return a g x g mpc matrix."""
    if isinstance(tau, str):
        if tau.strip() in ("i", "1i", "I"):
            return [[mpc(0, 1) if i == j else mpc(0) for j in range(g)] for i in range(g)]
        z = mpc(complex(tau.replace("i", "j")))
        return [[z if i == j else mpc(0) for j in range(g)] for i in range(g)]
    if isinstance(tau, (int, float, complex)):
        z = mpc(tau)
        return [[z if i == j else mpc(0) for j in range(g)] for i in range(g)]
    if isinstance(tau, mpc) or hasattr(tau, "imag") and not isinstance(tau, (list, tuple)):
        z = mpc(tau)
        return [[z if i == j else mpc(0) for j in range(g)] for i in range(g)]
    return [[mpc(x) for x in row] for row in tau]
