"""Exterior-algebra model of H*(E_M) for E_M = E^n with diagonal polarization.

Generators dz_1..dz_n, dzbar_1..dzbar_n anticommute; a class is a K-linear
combination of monomials dz_I ^ dzbar_J in the canonical order (holomorphic
factors first, ascending).  Harmonic representatives of special divisors,
the polarization class, the Lefschetz sl2 triple and rational (= involution
fixed) bases all live here with exact coefficients.
"""

from __future__ import annotations

from fractions import Fraction
from functools import cached_property
from itertools import combinations

from . import linalg
from .extfield import ExtElem, ext, i_over_sqrt_disc
from .fpoly import Sl2Module, isotypic_projector
from .qfield import QuadField

Rat = Fraction


def _merge_sign(A, B):
    """Sign of sorting the concatenation of two sorted disjoint tuples; None if clash."""
    for x in B:
        if x in A:
            return None, ()
    inv = 0
    for a in A:
        for b in B:
            if b < a:
                inv += 1
    merged = tuple(sorted(A + B))
    return (-1) ** inv, merged


class CohRing:
    """The cohomology ring of E^n with polarization multipliers a_1..a_n."""

    def __init__(self, field: QuadField, a):
        self.field = field
        self.n = len(a)
        self.a = tuple(Rat(x) for x in a)
        if any(x <= 0 for x in self.a):
            raise ValueError("polarization multipliers must be positive")
        self.c0 = i_over_sqrt_disc(field)  # i/sqrt(d_k)

    # --- basic classes ---------------------------------------------------------

    def zero(self) -> "CohClass":
        return CohClass(self, {})

    def one(self) -> "CohClass":
        return CohClass(self, {((), ()): ExtElem(self.field, 1)})

    def monomial(self, I, J, coeff=1) -> "CohClass":
        return CohClass(self, {(tuple(I), tuple(J)): ext(self.field, coeff)})

    def class_Y(self, l: int) -> "CohClass":
        """Y_l = a_l^2 (i/sqrt(d_k)) dz_l ^ dzbar_l, the divisor h(lambda, e_l)=0."""
        return self.monomial((l,), (l,), self.c0 * (self.a[l] ** 2))

    def class_Y_plus(self, l: int, j: int) -> "CohClass":
        c = self.c0 * (self.a[l] * self.a[j])
        return CohClass(self, {((l,), (j,)): -c, ((j,), (l,)): -c})

    def class_Y_minus(self, l: int, j: int) -> "CohClass":
        c = ext(self.field, self.a[l] * self.a[j])
        return CohClass(self, {((l,), (j,)): c, ((j,), (l,)): -c})

    def class_D(self) -> "CohClass":
        """The polarization class D = sum (1/a_l) Y_l."""
        out = {}
        for l in range(self.n):
            out[((l,), (l,))] = self.c0 * self.a[l]
        return CohClass(self, out)

    def f_sesq(self, lam, mu) -> "CohClass":
        """(i/sqrt(d_k)) u*_lam(dz) ^ u*_mu(dzbar); sesquilinear in (lam, mu)."""
        if len(lam) != self.n or len(mu) != self.n:
            raise ValueError("vector length mismatch")
        lam = [ext(self.field, x) for x in lam]
        mu = [ext(self.field, x) for x in mu]
        out = {}
        for l in range(self.n):
            if lam[l].is_zero():
                continue
            for j in range(self.n):
                cj = mu[j].conj()
                if cj.is_zero():
                    continue
                c = self.c0 * (self.a[l] * self.a[j]) * lam[l] * cj
                if not c.is_zero():
                    out[((l,), (j,))] = c
        return CohClass(self, out)

    def f_quad(self, lam) -> "CohClass":
        """Poincare dual of the divisor Z(lambda); equals f_sesq(lam, lam)."""
        return self.f_sesq(lam, lam)

    # --- monomial bases ------------------------------------------------------------

    @cached_property
    def _bidegree_bases(self):
        out = {}
        idx = list(range(self.n))
        for p in range(self.n + 1):
            for q in range(self.n + 1):
                out[(p, q)] = [(I, J) for I in combinations(idx, p)
                               for J in combinations(idx, q)]
        return out

    def basis_of(self, p: int, q: int):
        return self._bidegree_bases[(p, q)]

    def degree_basis(self, k: int):
        out = []
        for p in range(max(0, k - self.n), min(self.n, k) + 1):
            out.extend(self.basis_of(p, k - p))
        return out

    @cached_property
    def volume_coeff(self) -> ExtElem:
        """Coefficient of the full monomial in the normalized volume form.

        The volume is the n-fold wedge of (i/sqrt(d_k)) dz_l ^ dzbar_l, which
        integrates to 1; its coefficient on dz_{1..n} ^ dzbar_{1..n} carries
        the reordering sign.
        """
        vol = self.one()
        for l in range(self.n):
            vol = vol.wedge(self.monomial((l,), (l,), self.c0))
        full = (tuple(range(self.n)), tuple(range(self.n)))
        return vol.terms[full]


class CohClass:
    """Exterior-algebra class: map (I, J) -> coefficient (exact or numeric)."""

    __slots__ = ("ring", "terms")

    def __init__(self, ring: CohRing, terms):
        self.ring = ring
        self.terms = {k: v for k, v in terms.items() if not _czero(v)}

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if other == 0:
            return self
        if self.ring is not other.ring and self.ring.a != other.ring.a:
            raise ValueError("ring mismatch")
        out = dict(self.terms)
        for k, v in other.terms.items():
            s = out.get(k)
            s = v if s is None else s + v
            if _czero(s):
                out.pop(k, None)
            else:
                out[k] = s
        return CohClass(self.ring, out)

    __radd__ = __add__

    def __neg__(self):
        return CohClass(self.ring, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "CohClass":
        if isinstance(c, (int, Rat)):
            c = ext(self.ring.field, c)
        return CohClass(self.ring, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def wedge(self, other: "CohClass") -> "CohClass":
        if self.ring is not other.ring and self.ring.a != other.ring.a:
            raise ValueError("ring mismatch")
        out = {}
        for (I1, J1), c1 in self.terms.items():
            for (I2, J2), c2 in other.terms.items():
                # move dz_{I2} across dzbar_{J1}
                sgn = -1 if (len(J1) * len(I2)) % 2 else 1
                sI, I = _merge_sign(I1, I2)
                if sI is None:
                    continue
                sJ, J = _merge_sign(J1, J2)
                if sJ is None:
                    continue
                c = c1 * c2
                total_sign = sgn * sI * sJ
                if total_sign < 0:
                    c = -c
                key = (I, J)
                s = out.get(key)
                s = c if s is None else s + c
                if _czero(s):
                    out.pop(key, None)
                else:
                    out[key] = s
        return CohClass(self.ring, out)

    def bidegrees(self):
        return {(len(I), len(J)) for (I, J) in self.terms}

    def is_homogeneous(self):
        return len(self.bidegrees()) <= 1

    def bidegree(self):
        bs = self.bidegrees()
        if len(bs) != 1:
            raise ValueError("class is not homogeneous")
        return next(iter(bs))

    def integrate(self):
        """Pairing against the fundamental class: coefficient of the volume form.

        Returns 0 for classes with no (n,n) component.
        """
        ring = self.ring
        full = (tuple(range(ring.n)), tuple(range(ring.n)))
        c = self.terms.get(full)
        if c is None:
            return ExtElem(ring.field, 0)
        return c / ring.volume_coeff if isinstance(c, ExtElem) else c / ring.volume_coeff.embed()

    def involution(self) -> "CohClass":
        """Conjugate coefficients and swap dz_l <-> dzbar_l; fixes rational classes."""
        out = {}
        for (I, J), c in self.terms.items():
            sgn = -1 if (len(I) * len(J)) % 2 else 1
            cc = c.conj()
            out[(J, I)] = -cc if sgn < 0 else cc
        return CohClass(self.ring, out)

    def is_rational(self) -> bool:
        return self.involution() == self

    def coeff(self, I, J):
        return self.terms.get((tuple(I), tuple(J)), ExtElem(self.ring.field, 0))

    def __eq__(self, other):
        if isinstance(other, int) and other == 0:
            return self.is_zero()
        if not isinstance(other, CohClass):
            return NotImplemented
        return self.ring.a == other.ring.a and self.terms == other.terms

    def __repr__(self):
        return f"CohClass({len(self.terms)} terms, bidegrees {sorted(self.bidegrees())})"

    def to_json(self):
        return {
            "terms": [
                {"I": list(I), "J": list(J), "c": c.to_json()}
                for (I, J), c in sorted(self.terms.items())
            ]
        }

    @staticmethod
    def from_json(ring: CohRing, obj) -> "CohClass":
        terms = {}
        for t in obj["terms"]:
            terms[(tuple(t["I"]), tuple(t["J"]))] = ExtElem.from_json(ring.field, t["c"])
        return CohClass(ring, terms)


def _czero(c) -> bool:
    if isinstance(c, ExtElem):
        return c.is_zero()
    return c == 0


# --- the Lefschetz sl2 triple -----------------------------------------------------------


def pair_extraction(ring: CohRing, l: int, I, J):
    """iota_l: extract dz_l ^ dzbar_l with the move-to-front sign, or None."""
    if l not in I or l not in J:
        return None
    pi = I.index(l)
    pj = J.index(l)
    # move dz_l to the front (pi transpositions), then dzbar_l just behind it
    # ([len(I)-1] remaining dz's plus pj earlier dzbar's)
    sgn = (-1) ** (pi + len(I) - 1 + pj)
    I2 = I[:pi] + I[pi + 1:]
    J2 = J[:pj] + J[pj + 1:]
    return sgn, I2, J2


def _pair_inverses(ring: CohRing):
    if not hasattr(ring, "_pair_inv"):
        ring._pair_inv = [(ring.c0 * ring.a[l]).inverse() for l in range(ring.n)]
    return ring._pair_inv


def dual_lefschetz(ring: CohRing, cls: CohClass) -> CohClass:
    """The lowering operator F = sum_l (1/(c0 a_l)) iota_l completing (E, H)."""
    inv = _pair_inverses(ring)
    acc = {}
    for (I, J), c in cls.terms.items():
        for l in range(ring.n):
            hit = pair_extraction(ring, l, I, J)
            if hit is None:
                continue
            sgn, I2, J2 = hit
            v = c * inv[l]
            if sgn < 0:
                v = -v
            key = (I2, J2)
            s = acc.get(key)
            s = v if s is None else s + v
            if _czero(s):
                acc.pop(key, None)
            else:
                acc[key] = s
    return CohClass(ring, acc)


def lefschetz_E(ring: CohRing, cls: CohClass) -> CohClass:
    if not hasattr(ring, "_D_cache"):
        ring._D_cache = ring.class_D()
    return ring._D_cache.wedge(cls)


def weight_of_bidegree(ring: CohRing, p: int, q: int) -> int:
    return p + q - ring.n


class CohSl2:
    """Lefschetz sl2 package over H*(E_M): parity-split weight modules + bases."""

    def __init__(self, ring: CohRing):
        self.ring = ring
        self.even = self._build(0)
        self.odd = self._build(1)

    def _build(self, parity: int) -> Sl2Module:
        ring = self.ring
        n = ring.n
        degrees = [k for k in range(0, 2 * n + 1) if k % 2 == parity]
        bases = [ring.degree_basis(k) for k in degrees]
        dims = [len(b) for b in bases]
        weights = [k - n for k in degrees]
        E = []
        F = []
        for t, k in enumerate(degrees):
            basis = bases[t]
            if t + 1 < len(degrees):
                tgt = bases[t + 1]
                tgt_idx = {m: i for i, m in enumerate(tgt)}
                cols = []
                for mono in basis:
                    img = lefschetz_E(ring, ring.monomial(*mono))
                    col = [ExtElem(ring.field, 0)] * len(tgt)
                    for key, v in img.terms.items():
                        col[tgt_idx[key]] = v
                    cols.append(col)
                E.append([[cols[c][r] for c in range(len(basis))] for r in range(len(tgt))])
            else:
                E.append([])
            if t > 0:
                tgt = bases[t - 1]
                tgt_idx = {m: i for i, m in enumerate(tgt)}
                cols = []
                for mono in basis:
                    img = dual_lefschetz(ring, ring.monomial(*mono))
                    col = [ExtElem(ring.field, 0)] * len(tgt)
                    for key, v in img.terms.items():
                        col[tgt_idx[key]] = v
                    cols.append(col)
                F.append([[cols[c][r] for c in range(len(basis))] for r in range(len(tgt))])
            else:
                F.append([])
        mod = Sl2Module(weights, dims, E, F)
        mod.bases = bases  # monomial labels per piece
        return mod

    def module_for_weight(self, w: int) -> Sl2Module:
        return self.even if (w + self.ring.n) % 2 == 0 else self.odd


_sl2_registry: dict = {}


def lefschetz_sl2(ring: CohRing) -> CohSl2:
    key = (ring.field.d, ring.a)
    out = _sl2_registry.get(key)
    if out is None:
        out = CohSl2(ring)
        _sl2_registry[key] = out
    return out


# --- rational bases ---------------------------------------------------------------------


def _rational_coords(ring, cls, basis_monos):
    """Flatten a class into 4N rational coordinates over the monomial basis."""
    out = []
    for mono in basis_monos:
        c = cls.terms.get(mono)
        if c is None:
            out.extend((Rat(0),) * 4)
        else:
            out.extend(c.c)
    return out


def _row_reduce_rational(rows):
    """Deterministic row reduction over Q; returns indices of a maximal
    independent subset of the input rows (first-seen pivoting)."""
    if not rows:
        return []
    width = len(rows[0])
    echelon = []  # list of (pivot_col, normalized_row)
    chosen = []
    for ridx, row in enumerate(rows):
        r = list(row)
        for pc, er in echelon:
            if r[pc]:
                f = r[pc]
                r = [a - f * b for a, b in zip(r, er)]
        piv = next((c for c in range(width) if r[c]), None)
        if piv is None:
            continue
        inv = 1 / r[piv]
        r = [a * inv for a in r]
        echelon.append((piv, r))
        chosen.append(ridx)
    return chosen


def rational_hodge_basis(ring: CohRing, ell: int):
    """Q-basis of the rational classes in H^{ell,ell}: products of Y, Y+, Y-."""
    if ell < 0 or ell > ring.n:
        raise ValueError("ell out of range")
    if ell == 0:
        return [ring.one()]
    gens = [ring.class_Y(l) for l in range(ring.n)]
    for l in range(ring.n):
        for j in range(l + 1, ring.n):
            gens.append(ring.class_Y_plus(l, j))
            gens.append(ring.class_Y_minus(l, j))
    # all ell-fold products (with repetition), deterministic order
    from itertools import combinations_with_replacement

    candidates = []
    for combo in combinations_with_replacement(range(len(gens)), ell):
        cls = ring.one()
        for gi in combo:
            cls = cls.wedge(gens[gi])
        if not cls.is_zero():
            candidates.append(cls)
    basis_monos = ring.basis_of(ell, ell)
    rows = [_rational_coords(ring, c, basis_monos) for c in candidates]
    chosen = _row_reduce_rational(rows)
    out = [candidates[i] for i in chosen]
    return out


def primitive_hodge_basis(ring: CohRing, ell: int):
    """Rational basis of primitive (dual-Lefschetz-annihilated) H^{ell,ell} classes."""
    if 2 * ell > ring.n:
        return []
    rational = rational_hodge_basis(ring, ell)
    sl2 = lefschetz_sl2(ring)
    w = 2 * ell - ring.n
    mod = sl2.module_for_weight(w)
    t = mod.piece_of_weight(w)
    basis = mod.bases[t]
    idx = {m: i for i, m in enumerate(basis)}
    m = ring.n - 2 * ell
    proj = isotypic_projector(mod, m, m, side=-1)
    projected = []
    for cls in rational:
        vec = [ExtElem(ring.field, 0)] * len(basis)
        for key, v in cls.terms.items():
            vec[idx[key]] = v
        out = [sum((vec[c] * proj[r][c] for c in range(len(vec))
                    if not vec[c].is_zero() and proj[r][c]), start=ExtElem(ring.field, 0))
               for r in range(len(basis))]
        projected.append(CohClass(ring, {basis[r]: out[r] for r in range(len(basis))}))
    basis_monos = ring.basis_of(ell, ell)
    rows = [_rational_coords(ring, c, basis_monos) for c in projected]
    chosen = _row_reduce_rational(rows)
    return [projected[i] for i in chosen]
