"""Hermitian O_k-lattices: Gram matrices, duals, discriminant groups, enumeration.

A lattice of rank n over O_k is viewed as a Z-lattice of rank 2n via the
basis (e_1, w*e_1, ..., e_n, w*e_n); the trace form Tr_{k/Q}(h) drives all
integer-lattice computations (index, Smith normal form, enumeration).
Enumeration is an exact branch-and-bound on the positive definite trace
form; Hermitian cross-pairings are filtered exactly afterwards.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import isqrt

from . import linalg
from .qfield import FieldElem, QuadField, make_field

Rat = Fraction


def _as_field_elem(field: QuadField, v) -> FieldElem:
    if isinstance(v, FieldElem):
        if v.field != field:
            raise ValueError("field mismatch")
        return v
    if isinstance(v, (int, Rat)):
        return field.elem(v)
    return FieldElem.from_json(field, v)


class HermLattice:
    """A free Hermitian O_k-lattice given by its Gram matrix h(e_i, e_j).

    The pairing h is linear in the first argument and conjugate-linear in
    the second; the Gram matrix is Hermitian with rational diagonal.
    """

    def __init__(self, field: QuadField, gram):
        self.field = field
        n = len(gram)
        g = [[_as_field_elem(field, gram[i][j]) for j in range(n)] for i in range(n)]
        for i in range(n):
            if not g[i][i].is_rational():
                raise ValueError("Gram diagonal must be rational")
            for j in range(n):
                if g[j][i] != g[i][j].conj():
                    raise ValueError("Gram matrix is not Hermitian")
        self.rank = n
        self.gram = tuple(tuple(row) for row in g)

    @staticmethod
    def diagonal(field: QuadField, diag) -> "HermLattice":
        n = len(diag)
        return HermLattice(field, [[diag[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @staticmethod
    def from_json(obj) -> "HermLattice":
        field = make_field(int(obj["d"]))
        return HermLattice(field, obj["gram"])

    def to_json(self):
        return {"d": self.field.d, "gram": [[x.to_json() for x in row] for row in self.gram]}

    # --- pairing -------------------------------------------------------------

    def h(self, x, y) -> FieldElem:
        """h(x, y) = x^T G conj(y) for vectors in L-coordinates."""
        n = self.rank
        s = self.field.zero()
        for i in range(n):
            if isinstance(x[i], FieldElem) and x[i].is_zero():
                continue
            for j in range(n):
                s = s + x[i] * self.gram[i][j] * _conj_of(self.field, y[j])
        return s

    def hnorm(self, x) -> Rat:
        return self.h(x, x).as_rational()

    def gram_of_tuple(self, vs):
        """Full Hermitian Gram matrix (h(v_i, v_j))_{ij}."""
        g = len(vs)
        return tuple(tuple(self.h(vs[i], vs[j]) for j in range(g)) for i in range(g))

    # --- trace lattice ----------------------------------------------------------

    def zbasis_vectors(self):
        """Z-basis of L as L-coordinate vectors: e_1, w e_1, ..., e_n, w e_n."""
        f = self.field
        out = []
        for i in range(self.rank):
            for w in (f.one(), f.omega()):
                v = [f.zero()] * self.rank
                v[i] = w
                out.append(tuple(v))
        return out

    @cached_property
    def trace_gram(self):
        """Symmetric rational matrix Q with u^T Q u = h(x,x) in L Z-coordinates."""
        return self._sym_gram(self.zbasis_vectors())

    def _sym_gram(self, basis):
        m = len(basis)
        Q = [[Rat(0)] * m for _ in range(m)]
        for i in range(m):
            for j in range(i, m):
                v = self.h(basis[i], basis[j])
                if i == j:
                    Q[i][i] = v.as_rational()
                else:
                    Q[i][j] = Q[j][i] = v.trace() / 2
        return Q

    @cached_property
    def signature(self):
        """Hermitian signature (p, q), computed from the exact trace signature."""
        pos, neg, zero = linalg.signature_symmetric(self.trace_gram)
        if zero or pos % 2 or neg % 2:
            raise ValueError("degenerate lattice")
        return (pos // 2, neg // 2)

    @property
    def definiteness(self) -> str:
        p, q = self.signature
        return "positive" if q == 0 else f"signature({p},{q})"

    def is_positive_definite(self) -> bool:
        return self.signature == (self.rank, 0)

    # --- dual lattice ---------------------------------------------------------------

    @cached_property
    def dual(self) -> "DualLattice":
        return dual_basis(self)

    def to_zcoords(self, x):
        """Rational 2n-vector of x in the Z-basis (e_i, w e_i)."""
        out = []
        for c in x:
            out.append(c.a)
            out.append(c.b)
        return out

    def from_zcoords(self, u):
        f = self.field
        return tuple(
            FieldElem(f, u[2 * i], u[2 * i + 1]) for i in range(self.rank)
        )

    @cached_property
    def disc(self) -> "DiscGroup":
        return disc_group(self)


def _conj_of(field, y):
    if isinstance(y, FieldElem):
        return y.conj()
    return field.elem(y).conj()


class DualLattice:
    """Dual basis of L^v expressed in L-coordinates (columns of basis_matrix)."""

    def __init__(self, lattice: HermLattice, basis_matrix):
        self.lattice = lattice
        self.basis_matrix = basis_matrix  # n x n FieldElem, columns = dual basis

    def basis_vectors(self):
        n = self.lattice.rank
        B = self.basis_matrix
        return [tuple(B[i][j] for i in range(n)) for j in range(n)]

    def zbasis_vectors(self):
        """Z-basis of L^v: f_1, w f_1, ..., f_n, w f_n in L-coordinates."""
        f = self.lattice.field
        out = []
        for v in self.basis_vectors():
            out.append(v)
            out.append(tuple(f.omega() * c for c in v))
        return out

    @cached_property
    def _basis_inverse(self):
        n = self.lattice.rank
        B = self.basis_matrix
        return linalg.inverse([[B[i][j] for j in range(n)] for i in range(n)])

    def coords_of(self, x):
        """Exact k-coordinates of x (L-coords) over the dual basis."""
        return linalg.mat_vec(self._basis_inverse, list(x))

    def zcoords_of(self, x):
        """Integer 2n-vector of x over the dual Z-basis, or None if x not in L^v."""
        c = self.coords_of(x)
        out = []
        for e in c:
            if e.a.denominator != 1 or e.b.denominator != 1:
                return None
            out.append(int(e.a))
            out.append(int(e.b))
        return out

    def contains(self, x) -> bool:
        return self.zcoords_of(x) is not None

    def from_zcoords(self, u):
        f = self.lattice.field
        vecs = self.basis_vectors()
        n = self.lattice.rank
        acc = [f.zero()] * n
        for j in range(n):
            c = FieldElem(f, u[2 * j], u[2 * j + 1])
            if not c.is_zero():
                for i in range(n):
                    acc[i] = acc[i] + c * vecs[j][i]
        return tuple(acc)


def dual_basis(L: HermLattice) -> DualLattice:
    """Basis of L^v: columns of (1/delta_k) * G^{-T}; h(f_j, e_l) = delta_{jl}/delta_k."""
    n = L.rank
    G = [list(row) for row in L.gram]
    try:
        Ginv = linalg.inverse(G)
    except ValueError:
        raise ValueError("singular Gram matrix")
    dinv = L.field.delta().inverse()
    B = [[Ginv[j][i] * dinv for j in range(n)] for i in range(n)]
    return DualLattice(L, B)


class DiscGroup:
    """The finite quotient L^v / L with its Q/Z-valued norm form."""

    def __init__(self, lattice, invariant_factors, reps_zcoords, U, diag):
        self.lattice = lattice
        self.invariant_factors = invariant_factors
        self._reps_z = reps_zcoords  # integer dual-basis coords per element
        self._U = U                  # SNF row transform for canonical reduction
        self._diag = diag            # full SNF diagonal (length 2n)
        self.reps = [lattice.dual.from_zcoords(u) for u in reps_zcoords]
        self._index = {self._key(u): i for i, u in enumerate(reps_zcoords)}

    def __len__(self):
        return len(self.reps)

    @property
    def order(self):
        return len(self.reps)

    def _key(self, u):
        w = linalg.mat_vec(self._U, list(u))
        return tuple(int(w[i]) % self._diag[i] for i in range(len(self._diag)))

    def index_of_zcoords(self, u) -> int:
        return self._index[self._key(u)]

    def index_of(self, x) -> int:
        """Canonical coset index of x in L^v (L-coordinates)."""
        u = self.lattice.dual.zcoords_of(x)
        if u is None:
            raise ValueError("vector is not in the dual lattice")
        return self.index_of_zcoords(u)

    def rep(self, i):
        return self.reps[i]

    def neg(self, i) -> int:
        u = self._reps_z[i]
        return self.index_of_zcoords([-x for x in u])

    def add(self, i, j) -> int:
        u = self._reps_z[i]
        v = self._reps_z[j]
        return self.index_of_zcoords([a + b for a, b in zip(u, v)])

    def scale(self, u: FieldElem, i: int) -> int:
        """Index of u * (rep i) for u in O_k."""
        if not u.is_integral():
            raise ValueError("scalar must be integral")
        x = self.reps[i]
        return self.index_of(tuple(u * c for c in x))

    def qform(self, i) -> Rat:
        """h(nu, nu) mod 1 for the canonical representative."""
        return self.lattice.hnorm(self.reps[i]) % 1

    @cached_property
    def _pairing_form(self):
        """Integer matrix B with Tr h(x, y) = u^T B v / m on dual Z-coords."""
        Q = self.lattice._sym_gram(self.lattice.dual.zbasis_vectors())
        m = 1
        for row in Q:
            for x in row:
                d = (2 * x).denominator
                m = m * d // _gcd(m, d)
        B = [[int(2 * x * m) for x in row] for row in Q]
        return B, m

    def pairing(self, i, j) -> Rat:
        """Tr_{k/Q} h(nu_i, nu_j) mod 1 (the discriminant bilinear form)."""
        B, m = self._pairing_form
        u = self._reps_z[i]
        v = self._reps_z[j]
        tot = 0
        for r, ur in enumerate(u):
            if ur:
                Br = B[r]
                tot += ur * sum(Br[c] * v[c] for c in range(len(v)) if v[c])
        return Rat(tot, m) % 1

    def pairing_profile(self, j):
        """Precomputed row for fast pairings against coset j."""
        B, m = self._pairing_form
        v = self._reps_z[j]
        w = [sum(B[r][c] * v[c] for c in range(len(v)) if v[c]) for r in range(len(v))]
        return w, m

    def pairing_with_profile(self, i, profile) -> Rat:
        w, m = profile
        u = self._reps_z[i]
        return Rat(sum(ur * wr for ur, wr in zip(u, w) if ur), m) % 1


def disc_group(L: HermLattice) -> DiscGroup:
    """Structure of L^v/L via Smith normal form on the rank-2n trace lattice."""
    try:
        dual = L.dual
    except ValueError:
        raise ValueError("degenerate lattice")
    # S expresses the Z-basis of L in the Z-basis of L^v (integer, det = index)
    S_cols = []
    for v in L.zbasis_vectors():
        u = dual.zcoords_of(v)
        if u is None:
            raise ValueError("internal error: L not contained in its dual")
        S_cols.append(u)
    m = len(S_cols)
    S = [[S_cols[j][i] for j in range(m)] for i in range(m)]
    D, U, V = linalg.snf_with_transform(S)
    diag = [D[i][i] for i in range(m)]
    if any(x == 0 for x in diag):
        raise ValueError("degenerate lattice")
    Uinv = linalg.inverse([[Rat(x) for x in row] for row in U])
    reps = []
    idx = [0] * m
    while True:
        w = list(idx)
        u = [int(x) for x in linalg.mat_vec(Uinv, w)]
        reps.append(u)
        # odometer over the SNF boxes
        k = 0
        while k < m:
            idx[k] += 1
            if idx[k] < diag[k]:
                break
            idx[k] = 0
            k += 1
        if k == m:
            break
    invariant_factors = [d for d in diag if d > 1]
    return DiscGroup(L, invariant_factors, reps, U, diag)


def coset_of(L: HermLattice, x) -> int:
    """Canonical coset index of x modulo L; x given in L-coordinates."""
    return L.disc.index_of(tuple(_as_field_elem(L.field, c) for c in x))


# --- Gram targets ---------------------------------------------------------------------


class GramTarget:
    """A g x g Hermitian positive semidefinite target Gram matrix."""

    def __init__(self, field: QuadField, N):
        g = len(N)
        M = [[_as_field_elem(field, N[i][j]) for j in range(g)] for i in range(g)]
        for i in range(g):
            for j in range(g):
                if M[j][i] != M[i][j].conj():
                    raise ValueError("target Gram is not Hermitian")
        for i in range(g):
            if not M[i][i].is_rational() or M[i][i].as_rational() < 0:
                raise ValueError("target Gram has negative diagonal")
        if not _is_psd_hermitian(M):
            raise ValueError("target Gram is not positive semidefinite")
        self.field = field
        self.g = g
        self.N = tuple(tuple(row) for row in M)

    def trace(self) -> Rat:
        return sum((self.N[i][i].as_rational() for i in range(self.g)), start=Rat(0))

    def key(self):
        return tuple(e.sort_key() for row in self.N for e in row)

    def to_json(self):
        return [[x.to_json() for x in row] for row in self.N]

    def __eq__(self, other):
        return isinstance(other, GramTarget) and self.N == other.N

    def __hash__(self):
        return hash(self.key())


def _is_psd_hermitian(M) -> bool:
    """Exact PSD test: all principal minors (real rationals) nonnegative."""
    g = len(M)
    for size in range(1, g + 1):
        for subset in combinations(range(g), size):
            sub = [[M[i][j] for j in subset] for i in subset]
            d = linalg.det(sub)
            if d.b != 0:
                return False
            if d.as_rational() < 0:
                return False
    return True


# --- exact ellipsoid enumeration --------------------------------------------------------


def _cholesky_rational(Q):
    """Q = sum_i q_i (x_i + sum_{j>i} c_ij x_j)^2 with exact rationals; Q must be PD."""
    m = len(Q)
    A = [[Rat(Q[i][j]) for j in range(m)] for i in range(m)]
    q = [Rat(0)] * m
    c = [[Rat(0)] * m for _ in range(m)]
    for i in range(m):
        q[i] = A[i][i]
        if q[i] <= 0:
            raise ValueError("form is not positive definite")
        for j in range(i + 1, m):
            c[i][j] = A[i][j] / q[i]
        for r in range(i + 1, m):
            for s in range(r, m):
                A[r][s] -= q[i] * c[i][r] * c[i][s]
                A[s][r] = A[r][s]
    return q, c


def _floor_sqrt_ratio(x: Rat) -> int:
    """floor(sqrt(x)) for a nonnegative rational, exactly."""
    if x < 0:
        return -1
    n, d = x.numerator, x.denominator
    return isqrt(n * d) // d


def enumerate_shifted(Q, shift, bound, outer_values=None):
    """All integer u with (u+shift)^T Q (u+shift) <= bound, exact arithmetic.

    Q positive definite rational; returns integer tuples in no particular
    order.  outer_values optionally pins the last coordinate's candidate
    list (used to partition work across processes).
    """
    m = len(Q)
    bound = Rat(bound)
    if bound < 0:
        return []
    q, c = _cholesky_rational(Q)
    shift = [Rat(s) for s in shift]
    out = []
    u = [0] * m

    def descend(level, remaining, centers):
        # centers[level] = shift + sum of c-contributions from fixed outer coords
        mu = centers[level]
        # q[level] * (u_level + mu)^2 <= remaining
        r2 = remaining / q[level]
        rt = _floor_sqrt_ratio(r2)
        lo = -mu - rt - 1
        lo_int = int(lo) - 1
        hi_int = int(-mu + rt) + 1
        if level == m - 1 and outer_values is not None:
            candidates = outer_values
        else:
            candidates = range(lo_int, hi_int + 1)
        for v in candidates:
            t = v + mu
            used = q[level] * t * t
            if used > remaining:
                continue
            u[level] = v
            if level == 0:
                out.append(tuple(u))
            else:
                rem2 = remaining - used
                new_centers = [
                    centers[j] + c[j][level] * v if c[j][level] else centers[j]
                    for j in range(level)
                ]
                descend(level - 1, rem2, new_centers)

    init_centers = []
    for i in range(m):
        mu = shift[i]
        for j in range(i + 1, m):
            if c[i][j]:
                mu += c[i][j] * shift[j]
        init_centers.append(mu)
    descend(m - 1, bound, init_centers)
    return out


def _enum_worker(args):
    Q, shift, bound, chunk = args
    return enumerate_shifted(Q, shift, bound, outer_values=chunk)


def _enumerate_maybe_parallel(Q, shift, bound, workers=1):
    if workers <= 1:
        return enumerate_shifted(Q, shift, bound)
    m = len(Q)
    q, c = _cholesky_rational(Q)
    shift_r = [Rat(s) for s in shift]
    mu = shift_r[m - 1]
    rt = _floor_sqrt_ratio(Rat(bound) / q[m - 1])
    lo = int(-mu - rt) - 1
    hi = int(-mu + rt) + 1
    values = list(range(lo, hi + 1))
    chunks = [values[i::workers] for i in range(workers)]
    results = []
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_enum_worker, [(Q, shift, bound, ch) for ch in chunks if ch]):
            results.extend(part)
    return results


def enumerate_vectors(L: HermLattice, bound, *, domain="dual", coset=None, workers=1):
    """All vectors x with h(x,x) <= bound, in canonical (lexicographic) order.

    domain="dual" enumerates L^v, domain="lattice" enumerates L itself;
    coset (a DiscGroup index) restricts to the coset rep + L.  Vectors are
    returned in L-coordinates; ordering is lexicographic on the integer
    coordinates of the underlying trace lattice.
    """
    if not L.is_positive_definite():
        raise ValueError("enumeration requires a positive definite lattice")
    bound = Rat(bound)
    if bound < 0:
        return []
    if coset is not None:
        disc = L.disc
        rep = disc.rep(coset)
        Q = L.trace_gram
        shift = L.to_zcoords(rep)
        sols = _enumerate_maybe_parallel(Q, shift, bound, workers)
        sols.sort()
        out = []
        for u in sols:
            x = tuple(
                FieldElem(L.field, rep[i].a + u[2 * i], rep[i].b + u[2 * i + 1])
                for i in range(L.rank)
            )
            out.append(x)
        return out
    if domain == "lattice":
        Q = L.trace_gram
        sols = _enumerate_maybe_parallel(Q, [0] * (2 * L.rank), bound, workers)
        sols.sort()
        return [L.from_zcoords(u) for u in sols]
    if domain != "dual":
        raise ValueError(f"unknown domain {domain!r}")
    dual = L.dual
    Qd = L._sym_gram(dual.zbasis_vectors())
    sols = _enumerate_maybe_parallel(Qd, [0] * (2 * L.rank), bound, workers)
    sols.sort()
    return [dual.from_zcoords(u) for u in sols]


def enumerate_tuples(L: HermLattice, target: GramTarget, coset=None, *, domain="dual", workers=1):
    """All g-tuples in (L^v)^g (or coset tuples) with exact Gram matrix N.

    coset: optional tuple of DiscGroup indices fixing the class of each
    column.  Cross-pairings are filtered exactly; the result is sorted in
    canonical order (lexicographic on concatenated trace coordinates).
    """
    if not isinstance(target, GramTarget):
        target = GramTarget(L.field, target)
    g = target.g
    N = target.N
    # cheap necessary condition: entries must lie in (1/e) * different^{-1},
    # where e is the exponent of L^v/L
    e = 1
    for f in L.disc.invariant_factors:
        e = e * f // _gcd(e, f)
    delta = L.field.delta()
    for i in range(g):
        for j in range(g):
            v = delta * N[i][j] * e
            if not v.is_integral():
                return []
    per_column = []
    for i in range(g):
        nii = N[i][i].as_rational()
        if coset is not None:
            cands = enumerate_vectors(L, nii, coset=coset[i], workers=workers)
        elif domain == "lattice":
            cands = enumerate_vectors(L, nii, domain="lattice", workers=workers)
        else:
            cands = enumerate_vectors(L, nii, workers=workers)
        per_column.append([x for x in cands if L.hnorm(x) == nii])
    results = []
    chosen = [None] * g

    def place(i):
        for x in per_column[i]:
            ok = True
            for j in range(i):
                if L.h(chosen[j], x) != N[j][i]:
                    ok = False
                    break
            if ok:
                chosen[i] = x
                if i == g - 1:
                    results.append(tuple(chosen))
                else:
                    place(i + 1)
        chosen[i] = None

    if all(per_column):
        place(0)

    def keyfn(tup):
        key = []
        dual = L.dual
        for x in tup:
            u = dual.zcoords_of(x)
            key.extend(u if u is not None else [10**9])
        return key

    results.sort(key=keyfn)
    return results


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a
