import random
from fractions import Fraction
from math import comb

import pytest

from hermcycles import linalg
from hermcycles.extfield import ExtElem, ext
from hermcycles.fpoly import isotypic_projector
from hermcycles.qfield import make_field
from hermcycles.torcoh import (
    CohClass,
    CohRing,
    dual_lefschetz,
    lefschetz_E,
    lefschetz_sl2,
    primitive_hodge_basis,
    rational_hodge_basis,
)


F1 = make_field(1)
F3 = make_field(3)


def ring(d=1, a=(1, 1)):
    return CohRing(make_field(d), a)


def rand_kvec(field, n, rng, span=3):
    return [ExtElem(field, rng.randint(-span, span), rng.randint(-1, 1),
                    rng.randint(-1, 1), rng.randint(-1, 1)) for _ in range(n)]


def test_graded_commutativity():
    R = ring(1, (1, 1, 2))
    rng = random.Random(4)
    for _ in range(10):
        x = R.f_quad(rand_kvec(F1, 3, rng))
        y = R.f_quad(rand_kvec(F1, 3, rng))
        assert x.wedge(y) == y.wedge(x)  # even degrees commute
    dz0 = R.monomial((0,), ())
    dz1 = R.monomial((1,), ())
    assert dz0.wedge(dz1) == -(dz1.wedge(dz0))
    assert dz0.wedge(dz0).is_zero()


def test_f_quad_on_basis_vectors():
    R = ring(1, (1, 3))
    f = R.f_quad([1, 0])
    assert f == R.class_Y(0)
    f2 = R.f_quad([0, 1])
    assert f2 == R.class_Y(1)
    # Y_l = a_l^2 (i/sqrt(d_k)) dz_l dzbar_l
    assert f2.coeff((1,), (1,)) == R.c0 * 9


def test_f_quad_unit_scaling():
    R = ring(3, (1, 2))
    rng = random.Random(8)
    w = ext(F3, F3.omega())
    for _ in range(5):
        lam = rand_kvec(F3, 2, rng)
        scaled = [w * x for x in lam]
        assert R.f_quad(scaled) == R.f_quad(lam)  # norm(w) = 1
    two = ext(F3, 2)
    lam = rand_kvec(F3, 2, rng)
    assert R.f_quad([two * x for x in lam]) == R.f_quad(lam).scale(4)


def test_f_sesq_properties():
    R = ring(1, (1, 1, 1))
    rng = random.Random(15)
    for _ in range(8):
        lam = rand_kvec(F1, 3, rng)
        mu = rand_kvec(F1, 3, rng)
        assert R.f_sesq(lam, lam) == R.f_quad(lam)
        u = ExtElem(F1, 2, 0, 1, 0)
        assert R.f_sesq([u * x for x in lam], mu) == R.f_sesq(lam, mu).scale(u)
        assert R.f_sesq(lam, [u * x for x in mu]) == R.f_sesq(lam, mu).scale(u.conj())


def test_f_sesq_swap_identity():
    # f(l1,l2) ^ f(l2,l1) = -f(l1) ^ f(l2)
    R = ring(1, (1, 2, 1))
    rng = random.Random(23)
    for _ in range(8):
        l1 = rand_kvec(F1, 3, rng)
        l2 = rand_kvec(F1, 3, rng)
        lhs = R.f_sesq(l1, l2).wedge(R.f_sesq(l2, l1))
        rhs = -(R.f_quad(l1).wedge(R.f_quad(l2)))
        assert lhs == rhs


def test_f_quad_squares_to_zero():
    R = ring(3, (1, 1, 2))
    rng = random.Random(16)
    for _ in range(8):
        lam = rand_kvec(F3, 3, rng)
        f = R.f_quad(lam)
        assert f.wedge(f).is_zero()


def test_gl2_rule():
    # f(u l1 + v l2) ^ f(s l1 + t l2) = |ut - vs|^2 f(l1) ^ f(l2)
    R = ring(1, (1, 1, 1))
    rng = random.Random(42)
    for _ in range(6):
        l1 = rand_kvec(F1, 3, rng)
        l2 = rand_kvec(F1, 3, rng)
        u, v, s, t = (ExtElem(F1, rng.randint(-2, 2), 0, rng.randint(-2, 2), 0)
                      for _ in range(4))
        a = [u * x + v * y for x, y in zip(l1, l2)]
        b = [s * x + t * y for x, y in zip(l1, l2)]
        det = u * t - v * s
        lhs = R.f_quad(a).wedge(R.f_quad(b))
        rhs = R.f_quad(l1).wedge(R.f_quad(l2)).scale(det * det.conj())
        assert lhs == rhs


def test_cyclic_product_rule():
    # prod_l f(l_l, l_{l+1}) = (-1)^{r-1} wedge of f(l_l)
    rng = random.Random(7)
    R = ring(1, (1, 1, 1, 1))
    for r in (2, 3):
        lams = [rand_kvec(F1, 4, rng) for _ in range(r)]
        lhs = R.one()
        for i in range(r):
            lhs = lhs.wedge(R.f_sesq(lams[i], lams[(i + 1) % r]))
        rhs = R.one()
        for lam in lams:
            rhs = rhs.wedge(R.f_quad(lam))
        if (r - 1) % 2:
            rhs = -rhs
        assert lhs == rhs


def test_class_D():
    R = ring(1, (1, 1))
    D = R.class_D()
    total = R.class_Y(0).scale(Fraction(1, 1)) + R.class_Y(1)
    assert D == total  # a = (1,1): D = sum Y_l
    R2 = ring(1, (2, 3))
    D2 = R2.class_D()
    want = R2.class_Y(0).scale(Fraction(1, 2)) + R2.class_Y(1).scale(Fraction(1, 3))
    assert D2 == want
    assert D2.is_rational()


def test_integrate_volume_and_Dn():
    from math import factorial, prod
    for d in (1, 3):
        for a in ((1,), (1, 1), (1, 2), (1, 2, 3)):
            R = ring(d, a)
            n = len(a)
            # integrate(Y_1 ... Y_n) = prod a_l^2
            cls = R.one()
            for l in range(n):
                cls = cls.wedge(R.class_Y(l))
            assert cls.integrate() == prod(x * x for x in a)
            # integrate(D^n) = n! * prod a_l
            D = R.class_D()
            Dn = R.one()
            for _ in range(n):
                Dn = Dn.wedge(D)
            assert Dn.integrate() == factorial(n) * prod(a)


def test_rationality_of_generators():
    R = ring(3, (1, 2, 5))
    for l in range(3):
        assert R.class_Y(l).is_rational()
    for l in range(3):
        for j in range(l + 1, 3):
            assert R.class_Y_plus(l, j).is_rational()
            assert R.class_Y_minus(l, j).is_rational()
    assert R.one().is_rational()


def test_prop5_decomposition_of_f_quad():
    # f(lambda) = sum |l_l|^2 Y_l - sum_{l<j} [Re(l_l conj l_j) Y+ + (1/delta)(z-zbar)/2 Y-]
    rng = random.Random(12)
    for d in (1, 3):
        field = make_field(d)
        delta = ext(field, field.delta())
        half = Fraction(1, 2)
        for a in ((1,), (1, 1), (1, 2, 3)):
            R = ring(d, a)
            n = len(a)
            for _ in range(20):
                lam = rand_kvec(field, n, rng)
                out = R.zero()
                for l in range(n):
                    out = out + R.class_Y(l).scale(lam[l] * lam[l].conj())
                for l in range(n):
                    for j in range(l + 1, n):
                        z = lam[l] * lam[j].conj()
                        re = (z + z.conj()) * half
                        imhalf = (z - z.conj()) * half  # delta-normalized Im
                        out = out - (R.class_Y_plus(l, j).scale(re)
                                     + R.class_Y_minus(l, j).scale(imhalf / delta))
                assert out == R.f_quad(lam)


def test_hodge_numbers():
    R = ring(1, (1, 1, 2))
    for p in range(4):
        for q in range(4):
            assert len(R.basis_of(p, q)) == comb(3, p) * comb(3, q)


def test_sl2_relations_on_cohomology():
    # [E, F] = H exactly on every degree piece, both parities
    for d, a in [(1, (1, 1)), (3, (1, 2)), (1, (1, 1, 2))]:
        R = ring(d, a)
        n = R.n
        sl2 = lefschetz_sl2(R)
        for mod in (sl2.even, sl2.odd):
            for t, w in enumerate(mod.weights):
                dim = mod.dims[t]
                if dim == 0:
                    continue
                zero = ExtElem(R.field, 0)
                comm = [[zero] * dim for _ in range(dim)]
                if t > 0:
                    EF = linalg.mat_mul(mod.E[t - 1], mod.F[t])
                    for r in range(dim):
                        for c in range(dim):
                            comm[r][c] = comm[r][c] + EF[r][c]
                if t + 1 < len(mod.weights):
                    FE = linalg.mat_mul(mod.F[t + 1], mod.E[t])
                    for r in range(dim):
                        for c in range(dim):
                            comm[r][c] = comm[r][c] - FE[r][c]
                for r in range(dim):
                    for c in range(dim):
                        want = ext(R.field, w) if r == c else zero
                        assert comm[r][c] == want, (d, a, w, r, c)


def test_hard_lefschetz_full_rank():
    # D^{n-2g}: H^{g,g} -> H^{n-g,n-g} has full rank for 2g <= n
    for a in ((1, 1), (1, 2, 3), (1, 1, 1, 1)):
        R = ring(1, a)
        n = R.n
        for g in range(0, n // 2 + 1):
            basis = rational_hodge_basis(R, g)
            # wedge with D^(n-2g)
            D = R.class_D()
            imgs = []
            for cls in basis:
                cur = cls
                for _ in range(n - 2 * g):
                    cur = cur.wedge(D)
                imgs.append(cur)
            monos = R.basis_of(n - g, n - g)
            rows = [[c.terms.get(m, ExtElem(R.field, 0)) for m in monos] for c in imgs]
            assert linalg.rank(rows) == len(basis)


def test_dual_lefschetz_weight_eigenvalue():
    R = ring(1, (1, 1, 1))
    # H-eigenvalue on H^{1,1} for n=3 is -1
    cls = R.monomial((0,), (1,))
    lhs = lefschetz_E(R, dual_lefschetz(R, cls)) - dual_lefschetz(R, lefschetz_E(R, cls))
    assert lhs == cls.scale(Fraction(-1))


def test_rational_hodge_basis_dims():
    for d, a in [(1, (1, 1)), (3, (1, 2)), (1, (1, 1, 2))]:
        R = ring(d, a)
        n = R.n
        for ell in range(n + 1):
            basis = rational_hodge_basis(R, ell)
            assert len(basis) == comb(n, ell) ** 2, (d, a, ell)
            for cls in basis:
                assert cls.is_rational()
                assert cls.bidegree() == (ell, ell)


def test_primitive_hodge_basis():
    for d, a in [(1, (1, 1)), (1, (1, 1, 2)), (1, (1, 1, 1, 1))]:
        R = ring(d, a)
        n = R.n
        for ell in range(n + 1):
            prim = primitive_hodge_basis(R, ell)
            if 2 * ell > n:
                assert prim == []
                continue
            want = comb(n, ell) ** 2 - (comb(n, ell - 1) ** 2 if ell >= 1 else 0)
            assert len(prim) == want, (a, ell, len(prim))
            for W in prim:
                assert dual_lefschetz(R, W).is_zero()
                assert W.is_rational()


def test_fundamental_class_ell0():
    R = ring(1, (1, 1))
    assert rational_hodge_basis(R, 0) == [R.one()]
    assert primitive_hodge_basis(R, 0) == [R.one()]


def test_cohclass_json_roundtrip():
    R = ring(3, (1, 2))
    cls = R.f_quad([ext(F3, F3.omega()), ExtElem(F3, 1, 0, 1, 0)])
    cls2 = CohClass.from_json(R, cls.to_json())
    assert cls2 == cls
