"""Exact linear algebra over Fraction / FieldElem / ExtElem entries.

All routines are generic over elements supporting +, -, *, / and == 0;
no floating point anywhere.  Integer lattice routines (HNF, SNF) and a
mod-p rank certificate for matrices with algebraic-integer entries live
here as well.
"""

from __future__ import annotations

from fractions import Fraction

Rat = Fraction


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = []
    for i in range(n):
        row = []
        Ai = A[i]
        for j in range(m):
            s = Ai[0] * B[0][j]
            for t in range(1, k):
                s = s + Ai[t] * B[t][j]
            row.append(s)
        out.append(row)
    return out


def mat_vec(A, v):
    return [sum_prod(row, v) for row in A]


def sum_prod(row, v):
    s = row[0] * v[0]
    for t in range(1, len(row)):
        s = s + row[t] * v[t]
    return s


def transpose(A):
    return [list(col) for col in zip(*A)]


def identity(n, one=1, zero=0):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _is_zero(x) -> bool:
    return x == 0


def solve(A, B):
    """Solve A X = B exactly; A square nonsingular, B a matrix (list of rows)."""
    n = len(A)
    M = [list(A[i]) + list(B[i]) for i in range(n)]
    w = len(M[0])
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not _is_zero(M[r][col]):
                piv = r
                break
        if piv is None:
            raise ValueError("singular matrix")
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and not _is_zero(M[r][col]):
                f = M[r][col]
                Mr, Mc = M[r], M[col]
                M[r] = [Mr[j] - f * Mc[j] for j in range(w)]
    return [row[n:] for row in M]


def solve_vec(A, b):
    return [row[0] for row in solve(A, [[x] for x in b])]


def inverse(A):
    n = len(A)
    zero = A[0][0] * 0
    one = zero + 1
    return solve(A, identity(n, one, zero))


def det(A):
    n = len(A)
    M = [list(row) for row in A]
    d = None
    sign = 1
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not _is_zero(M[r][col]):
                piv = r
                break
        if piv is None:
            return A[0][0] * 0
        if piv != col:
            M[col], M[piv] = M[piv], M[col]
            sign = -sign
        p = M[col][col]
        d = p if d is None else d * p
        inv = 1 / p
        for r in range(col + 1, n):
            if not _is_zero(M[r][col]):
                f = M[r][col] * inv
                M[r] = [M[r][j] - f * M[col][j] for j in range(n)]
    return d * sign if sign == 1 else -d


def row_echelon(A):
    """Reduced row echelon form; returns (R, pivot_columns, rank)."""
    if not A:
        return [], [], 0
    M = [list(row) for row in A]
    rows, cols = len(M), len(M[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = None
        for rr in range(r, rows):
            if not _is_zero(M[rr][c]):
                piv = rr
                break
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = 1 / M[r][c]
        M[r] = [x * inv for x in M[r]]
        for rr in range(rows):
            if rr != r and not _is_zero(M[rr][c]):
                f = M[rr][c]
                M[rr] = [M[rr][j] - f * M[r][j] for j in range(cols)]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return M, pivots, r


def rank(A) -> int:
    return row_echelon(A)[2]


def kernel(A):
    """Basis of the right kernel of A (list of vectors)."""
    if not A:
        return []
    R, pivots, rk = row_echelon(A)
    cols = len(A[0])
    zero = A[0][0] * 0
    one = zero + 1
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [zero] * cols
        v[fc] = one
        for r, pc in enumerate(pivots):
            v[pc] = -R[r][fc]
        basis.append(v)
    return basis


def solve_in_span(vectors, target):
    """Exact coordinates of `target` in the span of `vectors`, or None.

    vectors: list of length-N vectors; target: length-N vector.  Solves the
    (possibly overdetermined) system and verifies the residual is zero.
    """
    if not vectors:
        return None if any(not _is_zero(t) for t in target) else []
    ncols = len(vectors)
    A = [[vectors[j][i] for j in range(ncols)] for i in range(len(target))]
    M = [A[i] + [target[i]] for i in range(len(target))]
    R, pivots, rk = row_echelon(M)
    if ncols in pivots:
        return None  # inconsistent
    zero = target[0] * 0
    coords = [zero] * ncols
    for r, pc in enumerate(pivots):
        coords[pc] = R[r][ncols]
    # verify (guards against rank-deficient vector sets)
    for i in range(len(target)):
        s = zero
        for j in range(ncols):
            s = s + A[i][j] * coords[j]
        if not _is_zero(s - target[i]):
            return None
    return coords


# --- integer matrices --------------------------------------------------------------


def snf_with_transform(A):
    """Smith normal form of an integer matrix: returns (D, U, V) with U*A*V = D.

    D is diagonal with d_1 | d_2 | ..., all entries nonnegative.  Matrices
    here are small (a few dozen rows); the naive algorithm is fine.
    """
    M = [list(map(int, row)) for row in A]
    n = len(M)
    m = len(M[0]) if n else 0
    U = identity(n)
    V = identity(m)

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in range(n):
            M[r][i], M[r][j] = M[r][j], M[r][i]
        for r in range(m):
            V[r][i], V[r][j] = V[r][j], V[r][i]

    def add_row(src, dst, f):
        M[dst] = [M[dst][k] + f * M[src][k] for k in range(m)]
        U[dst] = [U[dst][k] + f * U[src][k] for k in range(n)]

    def add_col(src, dst, f):
        for r in range(n):
            M[r][dst] += f * M[r][src]
        for r in range(m):
            V[r][dst] += f * V[r][src]

    def diagonalize():
        t = 0
        while t < min(n, m):
            piv = None
            for i in range(t, n):
                for j in range(t, m):
                    if M[i][j] != 0:
                        piv = (i, j)
                        break
                if piv:
                    break
            if piv is None:
                break
            swap_rows(t, piv[0])
            swap_cols(t, piv[1])
            while True:
                dirty = False
                for i in range(t + 1, n):
                    if M[i][t] != 0:
                        q = M[i][t] // M[t][t]
                        add_row(t, i, -q)
                        if M[i][t] != 0:
                            swap_rows(t, i)
                            dirty = True
                for j in range(t + 1, m):
                    if M[t][j] != 0:
                        q = M[t][j] // M[t][t]
                        add_col(t, j, -q)
                        if M[t][j] != 0:
                            swap_cols(t, j)
                            dirty = True
                if not dirty:
                    break
            t += 1
        return t

    t = diagonalize()
    # enforce the divisibility chain; each fix shrinks a diagonal entry, so
    # rerunning the diagonalization terminates
    while True:
        bad = None
        for i in range(t - 1):
            if M[i][i] != 0 and M[i + 1][i + 1] % M[i][i] != 0:
                bad = i
                break
        if bad is None:
            break
        add_col(bad + 1, bad, 1)
        t = diagonalize()
    for i in range(t):
        if M[i][i] < 0:
            M[i] = [-x for x in M[i]]
            U[i] = [-x for x in U[i]]
    return M, U, V


def signature_symmetric(A):
    """Exact signature (n_plus, n_minus, n_zero) of a rational symmetric matrix."""
    n = len(A)
    M = [[Rat(x) for x in row] for row in A]
    pos = neg = zero = 0
    idx = list(range(n))
    k = 0
    while k < n:
        # look for a nonzero diagonal pivot
        piv = None
        for i in range(k, n):
            if M[i][i] != 0:
                piv = i
                break
        if piv is not None:
            if piv != k:
                M[k], M[piv] = M[piv], M[k]
                for row in M:
                    row[k], row[piv] = row[piv], row[k]
            d = M[k][k]
            if d > 0:
                pos += 1
            else:
                neg += 1
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    f = M[i][k] / d
                    for j in range(k, n):
                        M[i][j] -= f * M[k][j]
                    for j in range(k, n):
                        M[j][i] = M[i][j]
            k += 1
            continue
        # zero diagonal block: find nonzero off-diagonal entry
        found = None
        for i in range(k, n):
            for j in range(i + 1, n):
                if M[i][j] != 0:
                    found = (i, j)
                    break
            if found:
                break
        if found is None:
            zero += n - k
            break
        i, j = found
        # symmetric congruence e_i -> e_i + e_j; makes M[i][i] = 2*M[i][j] != 0
        for c in range(k, n):
            M[i][c] += M[j][c]
        for r in range(k, n):
            M[r][i] += M[r][j]
    return pos, neg, zero


# --- mod-p rank certificate -----------------------------------------------------------


def _sqrt_mod_p(a: int, p: int):
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    # p is small here; brute force is fine
    for x in range(1, p):
        if x * x % p == a:
            return x
    return None


def find_split_prime(d: int, start: int = 10007) -> tuple[int, int, int]:
    """A prime p where both i and omega reduce: returns (p, i mod p, omega mod p)."""
    from .qfield import make_field

    f = make_field(d)
    p = start
    while True:
        p = _next_prime(p)
        ri = _sqrt_mod_p(p - 1, p)
        rd = _sqrt_mod_p((-d) % p, p)
        if ri is None or rd is None:
            continue
        if f.omega_half:
            w = (1 + rd) * pow(2, p - 2, p) % p
        else:
            w = rd
        return p, ri, w


def _next_prime(n: int) -> int:
    n += 1
    while True:
        if n % 2 and all(n % q for q in range(3, int(n**0.5) + 1, 2)):
            return n
        n += 1


def ext_mod_p(x, p: int, ri: int, rw: int) -> int:
    """Reduce a Fraction / FieldElem / ExtElem modulo p via the chosen roots."""
    from .extfield import ExtElem
    from .qfield import FieldElem

    if isinstance(x, int):
        return x % p
    if isinstance(x, Rat):
        return x.numerator * pow(x.denominator, p - 2, p) % p
    if isinstance(x, FieldElem):
        return (ext_mod_p(x.a, p, ri, rw) + ext_mod_p(x.b, p, ri, rw) * rw) % p
    if isinstance(x, ExtElem):
        c = x.c
        return (
            ext_mod_p(c[0], p, ri, rw)
            + ext_mod_p(c[1], p, ri, rw) * rw
            + ext_mod_p(c[2], p, ri, rw) * ri
            + ext_mod_p(c[3], p, ri, rw) * ri * rw
        ) % p
    raise TypeError(f"cannot reduce {type(x)} mod p")


def rank_mod_p(A, p: int) -> int:
    M = [row[:] for row in A]
    rows, cols = len(M), len(M[0])
    r = 0
    for c in range(cols):
        piv = None
        for rr in range(r, rows):
            if M[rr][c] % p:
                piv = rr
                break
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = pow(M[r][c], p - 2, p)
        M[r] = [x * inv % p for x in M[r]]
        for rr in range(rows):
            if rr != r and M[rr][c] % p:
                f = M[rr][c]
                M[rr] = [(M[rr][j] - f * M[r][j]) % p for j in range(cols)]
        r += 1
        if r == rows:
            break
    return r


def full_rank_certificate(A, d: int) -> bool:
    """True if A (entries in K, square or tall) certifiably has full column rank.

    Reduces modulo up to three split primes; full rank mod p implies full
    rank in characteristic zero.  A False return is inconclusive.
    """
    if not A:
        return True
    ncols = len(A[0])
    p0 = 10007
    for _ in range(3):
        p, ri, rw = find_split_prime(d, p0)
        p0 = p
        try:
            Ap = [[ext_mod_p(x, p, ri, rw) for x in row] for row in A]
        except ZeroDivisionError:
            continue  # denominator divisible by p, retry
        if rank_mod_p(Ap, p) == ncols:
            return True
    return False
