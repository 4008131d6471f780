"""Exact arithmetic in an imaginary quadratic field k = Q(sqrt(-d)).

Elements are stored in the omega-basis of the ring of integers
O_k = Z[omega], where omega = sqrt(-d) for d = 1,2 mod 4 and
omega = (1 + sqrt(-d))/2 for d = 3 mod 4.  All coefficients are
arbitrary-precision rationals; the only floating arithmetic lives in
:meth:`FieldElem.embed`.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpc, mpf

Rat = Fraction


def _squarefree(d: int) -> bool:
    if d <= 0:
        return False
    p = 2
    while p * p <= d:
        if d % (p * p) == 0:
            return False
        p += 1
    return True


class QuadField:
    """Descriptor of k = Q(sqrt(-d)) with its ring of integers Z[omega].

    omega satisfies omega^2 = t*omega - m with t = trace(omega) and
    m = norm(omega); conj(omega) = t - omega.
    """

    def __init__(self, d: int):
        if not isinstance(d, int) or d <= 0 or not _squarefree(d):
            raise ValueError(f"d must be a squarefree positive integer, got {d!r}")
        self.d = d
        if d % 4 == 3:
            self.disc = d           # field discriminant is -disc
            self.omega_half = True  # omega = (1 + sqrt(-d))/2
            self.omega_trace = 1
            self.omega_norm = (1 + d) // 4
        else:
            self.disc = 4 * d
            self.omega_half = False  # omega = sqrt(-d)
            self.omega_trace = 0
            self.omega_norm = d

    # --- distinguished elements -------------------------------------------------

    def zero(self) -> "FieldElem":
        return FieldElem(self, 0, 0)

    def one(self) -> "FieldElem":
        return FieldElem(self, 1, 0)

    def omega(self) -> "FieldElem":
        return FieldElem(self, 0, 1)

    def delta(self) -> "FieldElem":
        """delta_k = sqrt(-d_k), purely imaginary with positive imaginary part."""
        if self.omega_half:
            # sqrt(-d) = 2*omega - 1
            return FieldElem(self, -1, 2)
        # sqrt(-4d) = 2*sqrt(-d) = 2*omega
        return FieldElem(self, 0, 2)

    def sqrt_minus_d(self) -> "FieldElem":
        """sqrt(-d); equals 2*omega - 1 when omega = (1+sqrt(-d))/2."""
        if self.omega_half:
            return FieldElem(self, -1, 2)
        return self.omega()

    def elem(self, a, b=0) -> "FieldElem":
        return FieldElem(self, a, b)

    def from_rational(self, a) -> "FieldElem":
        return FieldElem(self, a, 0)

    def units(self) -> list["FieldElem"]:
        """The unit group of O_k (order 4 for d=1, 6 for d=3, else 2)."""
        one = self.one()
        if self.d == 1:
            w = self.omega()
            return [one, w, -one, -w]
        if self.d == 3:
            w = self.omega()
            out = [one]
            for _ in range(5):
                out.append(out[-1] * w)
            return out
        return [one, -one]

    def __eq__(self, other):
        return isinstance(other, QuadField) and other.d == self.d

    def __hash__(self):
        return hash(("QuadField", self.d))

    def __repr__(self):
        return f"QuadField(d={self.d})"


@lru_cache(maxsize=None)
def make_field(d: int) -> QuadField:
    """Build the field descriptor for Q(sqrt(-d)); d squarefree positive."""
    return QuadField(d)


@lru_cache(maxsize=None)
def _omega_value(field: QuadField, precision: int) -> mpc:
    with mp.workprec(precision):
        sq = mp.sqrt(mpf(field.d))
        if field.omega_half:
            return mpc(mpf(1) / 2, sq / 2)
        return mpc(0, sq)


@lru_cache(maxsize=None)
def _omega_native(field: QuadField) -> complex:
    sq = field.d ** 0.5
    return complex(0.5, sq / 2) if field.omega_half else complex(0, sq)


class FieldElem:
    """An element a + b*omega of k = Q(sqrt(-d)), with exact rationals a, b."""

    __slots__ = ("field", "a", "b")

    def __init__(self, field: QuadField, a, b=0):
        self.field = field
        self.a = a if isinstance(a, Rat) else Rat(a)
        self.b = b if isinstance(b, Rat) else Rat(b)

    # --- ring structure -----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, (int, Rat)):
            return FieldElem(self.field, other, 0)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FieldElem(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.field, -self.a, -self.b)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return FieldElem(self.field, self.a - o.a, self.b - o.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        f = self.field
        # (a1 + b1 w)(a2 + b2 w), w^2 = t*w - m
        a1, b1, a2, b2 = self.a, self.b, o.a, o.b
        cross = b1 * b2
        return FieldElem(
            f,
            a1 * a2 - cross * f.omega_norm,
            a1 * b2 + b1 * a2 + cross * f.omega_trace,
        )

    __rmul__ = __mul__

    def inverse(self) -> "FieldElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero field element")
        c = self.conj()
        return FieldElem(self.field, c.a / n, c.b / n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # --- field theory ---------------------------------------------------------

    def conj(self) -> "FieldElem":
        """The nontrivial field automorphism (complex conjugation)."""
        f = self.field
        return FieldElem(f, self.a + self.b * f.omega_trace, -self.b)

    def norm(self) -> Rat:
        f = self.field
        # (a + b w)(a + b conj(w)) = a^2 + a b t + b^2 m
        return self.a * self.a + self.a * self.b * f.omega_trace + self.b * self.b * f.omega_norm

    def trace(self) -> Rat:
        return 2 * self.a + self.b * self.field.omega_trace

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_rational(self) -> bool:
        return self.b == 0

    def rational_part(self) -> Rat:
        """(x + conj x)/2, the coefficient of 1 in the (1, sqrt(-d)) basis."""
        return self.a + self.b * Rat(self.field.omega_trace, 2)

    def as_rational(self) -> Rat:
        if self.b != 0:
            raise ValueError(f"{self} is not rational")
        return self.a

    def is_integral(self) -> bool:
        """True iff the element lies in O_k = Z[omega]."""
        return self.a.denominator == 1 and self.b.denominator == 1

    def is_unit(self) -> bool:
        return self.is_integral() and self.norm() == 1

    # --- embedding --------------------------------------------------------------

    def embed(self, precision: int = 53) -> mpc:
        """Complex embedding sending omega to the root with Im > 0."""
        if precision < 53:
            raise ValueError("precision must be at least 53 bits")
        f = self.field
        with mp.workprec(precision):
            w = _omega_value(f, precision)
            a = mpf(self.a.numerator) / self.a.denominator
            b = mpf(self.b.numerator) / self.b.denominator
            return a + b * w

    def embed_native(self) -> complex:
        """Double-precision embedding (cached omega; no mpmath overhead)."""
        return float(self.a) + float(self.b) * _omega_native(self.field)

    def __complex__(self):
        return self.embed_native()

    # --- misc ---------------------------------------------------------------------

    def sort_key(self):
        return (self.a, self.b)

    def __eq__(self, other):
        if isinstance(other, (int, Rat)):
            return self.b == 0 and self.a == other
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.field == other.field and self.a == other.a and self.b == other.b

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.field.d, self.a, self.b))

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        return f"({self.a}{'+' if self.b >= 0 else '-'}{abs(self.b)}w)"

    # --- serialization ---------------------------------------------------------

    def to_json(self):
        return {
            "a": [self.a.numerator, self.a.denominator],
            "b": [self.b.numerator, self.b.denominator],
        }

    @staticmethod
    def from_json(field: QuadField, obj) -> "FieldElem":
        if isinstance(obj, (int, float, str)):
            return FieldElem(field, Rat(obj))
        if isinstance(obj, list):
            return FieldElem(field, Rat(obj[0], obj[1]))
        a = obj["a"]
        b = obj.get("b", [0, 1])
        return FieldElem(field, Rat(a[0], a[1]), Rat(b[0], b[1]))


def conj(x: FieldElem) -> FieldElem:
    return x.conj()


def norm(x: FieldElem) -> Rat:
    return x.norm()


def trace(x: FieldElem) -> Rat:
    return x.trace()


def is_integral(x: FieldElem) -> bool:
    return x.is_integral()


def embed(x: FieldElem, precision: int = 53) -> mpc:
    return x.embed(precision)
