import random
from fractions import Fraction
from itertools import product

import pytest

from hermcycles.hlattice import (
    GramTarget,
    HermLattice,
    coset_of,
    disc_group,
    dual_basis,
    enumerate_tuples,
    enumerate_vectors,
)
from hermcycles import linalg
from hermcycles.qfield import make_field


def unit_lattice(d, diag=(1,)):
    return HermLattice.diagonal(make_field(d), diag)


def brute_force_vectors(L, bound, domain="dual"):
    """Independent oracle: box search over integer coordinates of the trace form."""
    if domain == "dual":
        basis = L.dual.zbasis_vectors()
        conv = L.dual.from_zcoords
    else:
        basis = L.zbasis_vectors()
        conv = L.from_zcoords
    m = len(basis)
    Q = L._sym_gram(basis)
    Qinv = linalg.inverse(Q)
    # sound per-axis box: u_i^2 <= bound * (Q^{-1})_{ii}
    boxes = [int((Fraction(bound) * Qinv[i][i]) ** Fraction(1, 2)) + 1 for i in range(m)]
    den = 1
    for row in Q:
        for x in row:
            den = den * x.denominator // __import__("math").gcd(den, x.denominator)
    Qi = [[int(x * den) for x in row] for row in Q]
    bi = bound * den
    out = []
    for u in product(*[range(-b, b + 1) for b in boxes]):
        val = sum(Qi[i][j] * u[i] * u[j] for i in range(m) for j in range(m))
        if val <= bi:
            out.append(conv(u))
    return out


def test_dual_basis_gaussian():
    L = unit_lattice(1)
    B = L.dual.basis_matrix
    f = L.field
    # L^v = (1/delta) O_k
    assert B[0][0] == f.one() / f.delta()
    assert len(disc_group(L)) == 4


def test_dual_pairing_integrality():
    rng = random.Random(2)
    for d in (1, 2, 3, 7):
        f = make_field(d)
        L = HermLattice(f, [[2, f.omega()], [f.omega().conj(), 3]])
        dual = dual_basis(L)
        delta = f.delta()
        for x in dual.basis_vectors():
            for y in L.zbasis_vectors():
                assert (delta * L.h(x, y)).is_integral()


def test_double_dual_is_original():
    for d in (1, 3):
        f = make_field(d)
        L = HermLattice(f, [[2, f.omega()], [f.omega().conj(), 3]])
        dual = L.dual
        # lattice with Gram of the dual basis
        Gd = [[L.h(x, y) for y in dual.basis_vectors()] for x in dual.basis_vectors()]
        Ld = HermLattice(f, Gd)
        dd = Ld.dual.basis_matrix
        # double-dual basis, expressed back in L-coordinates
        n = L.rank
        B = dual.basis_matrix
        comp = linalg.mat_mul([[B[i][j] for j in range(n)] for i in range(n)], dd)
        # each double-dual vector must lie in L with unimodular transition
        cols = [[comp[i][j] for i in range(n)] for j in range(n)]
        for col in cols:
            assert all(c.is_integral() for c in col)
        det = linalg.det(comp)
        assert det.norm() == 1


def test_disc_group_orders():
    assert len(disc_group(unit_lattice(1))) == 4
    assert disc_group(unit_lattice(1)).invariant_factors == [2, 2]
    assert len(disc_group(unit_lattice(3))) == 3
    assert len(disc_group(unit_lattice(1, (2,)))) == 16
    assert len(disc_group(unit_lattice(1, (1, 1)))) == 16
    assert len(disc_group(unit_lattice(2))) == 8


def test_disc_group_matches_trace_det():
    # index [L^v : L] = |det Tr h(v_i, v_j)| on the rank-2n trace lattice;
    # trace_gram stores the halved form (u^T Q u = h(x,x)), so T = 2Q
    for d in (1, 2, 3, 7):
        f = make_field(d)
        for gram in ([[1]], [[2]], [[1, 0], [0, 3]],
                     [[2, f.omega()], [f.omega().conj(), 3]]):
            L = HermLattice(f, gram)
            T = [[2 * x for x in row] for row in L.trace_gram]
            assert len(disc_group(L)) == abs(linalg.det(T))


def test_unimodular_trace_lattice():
    # d=3, Gram [[1, w/(stuff)]]... simplest: check a known unimodular case:
    # hyperbolic-free: for d=3 the rank-1 lattice with gram (1) has |disc| = 3;
    # a genuinely unimodular example is E8-like and too big, so test contract
    # on the identity-disc criterion instead
    f = make_field(3)
    L = unit_lattice(3)
    assert len(disc_group(L)) == 3
    # the trivial-group contract: dual basis = identity iff index 1
    # (exercised indirectly: index > 1 here, dual not identity)
    assert L.dual.basis_matrix[0][0] != f.one()


def test_coset_of():
    L = unit_lattice(1)
    f = L.field
    disc = L.disc
    zero_idx = coset_of(L, [f.zero()])
    assert disc.qform(zero_idx) == 0
    x = f.one() / f.delta()
    i = coset_of(L, [x])
    assert i != zero_idx
    # order 2: 2x must be in L
    assert disc.add(i, i) == zero_idx
    # lattice vectors give the identity coset
    assert coset_of(L, [f.elem(3, -2)]) == zero_idx
    with pytest.raises(ValueError):
        coset_of(L, [f.elem(Fraction(1, 3))])


def test_enumerate_rank1_d1():
    L = unit_lattice(1)
    vs = enumerate_vectors(L, 0, domain="lattice")
    assert len(vs) == 1 and all(c.is_zero() for c in vs[0])
    vs = enumerate_vectors(L, 1, domain="lattice")
    assert len(vs) == 5  # 0, ±1, ±w
    norms = sorted(L.hnorm(v) for v in vs)
    assert norms == [0, 1, 1, 1, 1]


def test_enumerate_rank1_d3():
    L = unit_lattice(3)
    vs = enumerate_vectors(L, 1, domain="lattice")
    assert len(vs) == 7  # 0 and the six units


def test_enumerate_monotonicity_consistency():
    L = unit_lattice(1, (1, 2))
    big = enumerate_vectors(L, 4)
    small = enumerate_vectors(L, 2)
    refiltered = [v for v in big if L.hnorm(v) <= 2]
    assert refiltered == small


def test_enumerate_negation_symmetry():
    L = unit_lattice(3, (1, 1))
    vs = enumerate_vectors(L, 2)
    keyset = {tuple(c.sort_key() for c in v) for v in vs}
    for v in vs:
        assert tuple((-c).sort_key() for c in v) in keyset


def test_enumerate_agrees_with_brute_force():
    for d in (1, 3):
        for diag in ((1,), (2,), (1, 1), (1, 2)):
            L = unit_lattice(d, diag)
            for bound in (0, 1, 2, 3):
                fast = enumerate_vectors(L, bound)
                slow = brute_force_vectors(L, bound)
                assert sorted(tuple(c.sort_key() for c in v) for v in fast) == \
                    sorted(tuple(c.sort_key() for c in v) for v in slow)


def test_enumerate_coset():
    L = unit_lattice(1)
    disc = L.disc
    for i in range(len(disc)):
        vs = enumerate_vectors(L, 2, coset=i)
        for v in vs:
            assert disc.index_of(v) == i
    # union over cosets = full dual enumeration
    allv = enumerate_vectors(L, 2)
    total = sum(len(enumerate_vectors(L, 2, coset=i)) for i in range(len(disc)))
    assert total == len(allv)


def test_enumerate_tuples_zero_target():
    L = unit_lattice(1, (1, 1))
    N = GramTarget(L.field, [[0, 0], [0, 0]])
    tups = enumerate_tuples(L, N, domain="lattice")
    assert len(tups) == 1
    assert all(c.is_zero() for v in tups[0] for c in v)


def test_enumerate_tuples_norm1_rank2():
    L = unit_lattice(1, (1, 1))
    N = GramTarget(L.field, [[1]])
    tups = enumerate_tuples(L, N, domain="lattice")
    assert len(tups) == 8  # h-norm-1 vectors of O_k^2


def test_enumerate_tuples_identity_gram():
    L = unit_lattice(1, (1, 1))
    N = GramTarget(L.field, [[1, 0], [0, 1]])
    tups = enumerate_tuples(L, N, domain="lattice")
    # 8 norm-1 vectors (units in each slot); each admits 4 orthogonal partners
    assert len(tups) == 32
    for t in tups:
        assert L.gram_of_tuple(t) == N.N
    # and in the full dual: 24 norm-1 vectors, 96 ordered orthogonal pairs
    tups_dual = enumerate_tuples(L, N)
    assert len(tups_dual) == 96


def test_enumerate_tuples_gram_reproduced():
    L = unit_lattice(3, (1, 2))
    f = L.field
    N = GramTarget(f, [[1, 0], [0, 2]])
    for t in enumerate_tuples(L, N, domain="lattice"):
        assert L.gram_of_tuple(t) == N.N


def test_gram_target_validation():
    f = make_field(1)
    with pytest.raises(ValueError):
        GramTarget(f, [[f.omega(), 0], [0, 1]])  # non-Hermitian diagonal
    with pytest.raises(ValueError):
        GramTarget(f, [[-1]])  # negative
    with pytest.raises(ValueError):
        GramTarget(f, [[1, 2], [2, 1]])  # indefinite (det < 0)
    # PSD boundary case is fine
    GramTarget(f, [[1, 1], [1, 1]])


def test_signature_indefinite():
    f = make_field(1)
    delta = f.delta()
    # hyperbolic plane: signature (1,1)
    H = HermLattice(f, [[0, delta], [-delta, 0]])
    assert H.signature == (1, 1)
    assert H.definiteness == "signature(1,1)"
    with pytest.raises(ValueError):
        enumerate_vectors(H, 1)


def test_parallel_enumeration_deterministic():
    L = unit_lattice(1, (1, 1))
    a = enumerate_vectors(L, 3, workers=1)
    b = enumerate_vectors(L, 3, workers=2)
    assert a == b


def test_lattice_json_roundtrip():
    f = make_field(3)
    L = HermLattice(f, [[2, f.omega()], [f.omega().conj(), 3]])
    L2 = HermLattice.from_json(L.to_json())
    assert L2.gram == L.gram
