"""Finite Weil representation matrices on C[(L^v/L)^g].

Generator actions: m(A) permutes coset tuples with a unit-determinant
scalar, n(B) is diagonal with exact rational phases, and w is the
discrete-Fourier matrix scaled by the Weil index over sqrt(|D|^g).  Phases
are kept as exact rationals mod 1 and embedded only when a numeric matrix
is requested.  The Fourier/pairing normalizations follow the convention
that makes the theta functional equations hold (half_pairing=True switches
to the halved Gram variant, which fails the exact n(B) test and exists for
comparison).
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from itertools import product

from mpmath import mp, mpc, mpf

from . import linalg
from .hlattice import HermLattice
from .qfield import FieldElem

Rat = Fraction


def _e(phase: Rat, prec: int) -> mpc:
    """e^{2 pi i phase} for an exact rational phase."""
    with mp.workprec(prec):
        return mp.expjpi(2 * mpf(phase.numerator) / phase.denominator) if phase else mpc(1)


class GroupGen:
    """A generator of U(g,g)(Z): kind 'm' (A), 'n' (B) or 'w'."""

    def __init__(self, kind: str, matrix=None):
        if kind not in ("m", "n", "w"):
            raise ValueError(f"unknown generator kind {kind!r}")
        self.kind = kind
        self.matrix = matrix

    @staticmethod
    def m(A) -> "GroupGen":
        return GroupGen("m", A)

    @staticmethod
    def n(B) -> "GroupGen":
        return GroupGen("n", B)

    @staticmethod
    def w() -> "GroupGen":
        return GroupGen("w")


class WeilRep:
    """The representation rho_{L,g} on the |D|^g coset tuples of a lattice."""

    def __init__(self, lattice: HermLattice, g: int, half_pairing: bool = False):
        if g < 1:
            raise ValueError("genus must be positive")
        self.lattice = lattice
        self.g = g
        self.half_pairing = half_pairing
        self.disc = lattice.disc
        self.signature = lattice.signature
        self.basis = list(product(range(len(self.disc)), repeat=g))
        self._tuple_index = {t: i for i, t in enumerate(self.basis)}

    @property
    def dim(self) -> int:
        return len(self.basis)

    # --- exact pairing data --------------------------------------------------------

    @cached_property
    def _pair_h(self):
        """h(nu_i, nu_j) for all coset rep pairs, as FieldElem."""
        reps = self.disc.reps
        m = len(reps)
        L = self.lattice
        return [[L.h(reps[i], reps[j]) for j in range(m)] for i in range(m)]

    def tuple_gram(self, t):
        """Full Gram matrix (h(nu_i, nu_j)) of a coset tuple of indices."""
        return [[self._pair_h[a][b] for b in t] for a in t]

    def nB_phase(self, t, B) -> Rat:
        """Exact phase of rho(n(B)) on e_t: Tr(N_t B) mod 1 (full-Gram convention)."""
        N = self.tuple_gram(t)
        g = self.g
        total = None
        for i in range(g):
            for j in range(g):
                v = N[i][j] * B[j][i]
                total = v if total is None else total + v
        ph = total.as_rational()
        if self.half_pairing:
            ph = ph / 2
        return ph % 1

    def w_phase(self, t, u) -> Rat:
        """Exact kernel phase of rho(w) between tuples t, u: -Tr_{k/Q} sum h(nu_i, mu_i)."""
        total = Rat(0)
        for a, b in zip(t, u):
            total += self._pair_h[a][b].trace()
        ph = -total
        if self.half_pairing:
            ph = ph / 2
        return ph % 1

    # --- the Weil index ----------------------------------------------------------------

    def weil_index_genus1(self, precision: int = 80):
        """The 8th root of unity gamma = sum_nu e(-h(nu,nu)) / sqrt(|D|).

        Returns (k, value) with gamma = e^{2 pi i k / 8}; raises if the Gauss
        sum is numerically degenerate.
        """
        with mp.workprec(precision):
            s = mpc(0)
            for i in range(len(self.disc)):
                s += _e((-self.disc.qform(i)) % 1, precision)
            s = s / mp.sqrt(len(self.disc))
            if abs(s) < mpf(1) / 2:
                raise ValueError("Gauss sum numerically zero: inconsistent lattice data")
            best = None
            for k in range(8):
                cand = mp.expjpi(mpf(2 * k) / 8)
                err = abs(s - cand)
                if best is None or err < best[1]:
                    best = (k, err)
            k, err = best
            if err > mpf(10) ** (-9):
                raise ValueError(f"Gauss sum is not an 8th root of unity (err={err})")
            return k, mp.expjpi(mpf(2 * k) / 8)

    def weil_index(self, precision: int = 80):
        """Genus-g index: the genus-1 index raised to the g-th power."""
        k, _ = self.weil_index_genus1(precision)
        kg = (k * self.g) % 8
        with mp.workprec(precision):
            return kg, mp.expjpi(mpf(2 * kg) / 8)

    # --- generator matrices ----------------------------------------------------------------

    def rho_n(self, B, precision: int = 64):
        """Diagonal matrix of rho(n(B)); B integral Hermitian over O_k."""
        B = self._check_hermitian_integral(B)
        d = self.dim
        out = [[mpc(0)] * d for _ in range(d)]
        for idx, t in enumerate(self.basis):
            out[idx][idx] = _e(self.nB_phase(t, B), precision)
        return out

    def rho_n_phases(self, B):
        """Exact rational phases (mod 1) of the diagonal of rho(n(B))."""
        B = self._check_hermitian_integral(B)
        return [self.nB_phase(t, B) for t in self.basis]

    def rho_m(self, A, precision: int = 64):
        """Monomial matrix of rho(m(A)): conj(det A)^{p+q+2} e_{nu conj(A)^{-1}}.

        The scalar and permutation are pinned by the theta functional
        equation under tau -> A tau A*: reindexing the sum sends lambda to
        lambda.conj(A), forcing this normalization (a central det^2 twist
        against the raw det(A)^{-p-q} convention, which fails that test for
        complex-unit determinants).
        """
        perm, scalar = self.rho_m_permutation(A)
        sc = scalar.embed(precision)
        d = self.dim
        out = [[mpc(0)] * d for _ in range(d)]
        for cidx in range(d):
            out[perm[cidx]][cidx] = sc
        return out

    def rho_m_permutation(self, A):
        """The permutation (as an index map) and exact unit scalar of rho(m(A))."""
        A, Ainv, detA = self._check_unit_matrix(A)
        p, q = self.signature
        scalar = (detA.conj()) ** (p + q + 2)
        Abar_inv = [[x.conj() for x in row] for row in Ainv]
        perm = [self._tuple_index[self._tuple_times_matrix(t, Abar_inv)]
                for t in self.basis]
        return perm, scalar

    def rho_w(self, precision: int = 64):
        """The Fourier-type matrix of rho(w): gamma/|D|^{g/2} times exact-phase kernel."""
        kg, gamma = self.weil_index(max(precision, 80))
        d = self.dim
        with mp.workprec(precision):
            scale = gamma / mp.sqrt(mpf(len(self.disc)) ** self.g)
            out = [[mpc(0)] * d for _ in range(d)]
            for r, u in enumerate(self.basis):
                for c, t in enumerate(self.basis):
                    # column c = image of e_t; row r = coefficient on e_u
                    out[r][c] = scale * _e(self.w_phase(t, u), precision)
        return out

    def rho(self, gen: GroupGen, precision: int = 64):
        if gen.kind == "m":
            return self.rho_m(gen.matrix, precision)
        if gen.kind == "n":
            return self.rho_n(gen.matrix, precision)
        return self.rho_w(precision)

    def rho_word(self, gens, precision: int = 64):
        """Ordered product rho(g_1) rho(g_2) ... rho(g_k)."""
        if not gens:
            raise ValueError("empty generator word")
        out = None
        for gen in gens:
            M = self.rho(gen, precision)
            out = M if out is None else mat_mul_c(out, M)
        return out

    # --- helpers ------------------------------------------------------------------------------

    def _check_hermitian_integral(self, B):
        f = self.lattice.field
        g = self.g
        M = [[_fe(f, B[i][j]) for j in range(g)] for i in range(g)]
        for i in range(g):
            for j in range(g):
                if not M[i][j].is_integral():
                    raise ValueError("n(B) requires an integral matrix")
                if M[j][i] != M[i][j].conj():
                    raise ValueError("n(B) requires a Hermitian matrix")
        return M

    def _check_unit_matrix(self, A):
        f = self.lattice.field
        g = self.g
        M = [[_fe(f, A[i][j]) for j in range(g)] for i in range(g)]
        for row in M:
            for x in row:
                if not x.is_integral():
                    raise ValueError("m(A) requires an integral matrix")
        detA = linalg.det(M)
        if not detA.is_unit():
            raise ValueError("m(A) requires unit determinant")
        Ainv = linalg.inverse(M)
        for row in Ainv:
            for x in row:
                if not x.is_integral():
                    raise ValueError("inverse of A is not integral")
        return M, Ainv, detA

    def _tuple_times_matrix(self, t, A):
        """Coset tuple nu . A: component j = sum_i nu_i A_{ij}."""
        disc = self.disc
        g = self.g
        f = self.lattice.field
        n = self.lattice.rank
        out = []
        for j in range(g):
            acc = [f.zero()] * n
            for i in range(g):
                a = A[i][j]
                if a.is_zero():
                    continue
                rep = disc.reps[t[i]]
                for r in range(n):
                    acc[r] = acc[r] + a * rep[r]
            out.append(disc.index_of(tuple(acc)))
        return tuple(out)


def _fe(field, v):
    if isinstance(v, FieldElem):
        if v.field != field:
            raise ValueError("field mismatch")
        return v
    return field.elem(v)


# --- small complex-matrix helpers (mpmath entries) ------------------------------------------


def mat_mul_c(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = [[mpc(0)] * m for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for t in range(k):
            a = Ai[t]
            if a == 0:
                continue
            Bt = B[t]
            row = out[i]
            for j in range(m):
                row[j] += a * Bt[j]
    return out


def mat_vec_c(A, v):
    return [sum((A[i][j] * v[j] for j in range(len(v))), mpc(0)) for i in range(len(A))]


def conj_transpose_c(A):
    return [[A[j][i].conjugate() for j in range(len(A))] for i in range(len(A[0]))]


def max_abs_diff(A, B):
    return max(abs(A[i][j] - B[i][j]) for i in range(len(A)) for j in range(len(A[0])))


def identity_c(n):
    return [[mpc(1) if i == j else mpc(0) for j in range(n)] for i in range(n)]


def unitarity_defect(A):
    return max_abs_diff(mat_mul_c(A, conj_transpose_c(A)), identity_c(len(A)))
