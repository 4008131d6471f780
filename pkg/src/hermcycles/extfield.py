"""The coefficient field K = k(i) = Q(omega, i).

Polynomial weights and cohomology classes need i = sqrt(-1) adjoined to k
(factors like i/sqrt(d_k) appear in harmonic form coefficients).  Elements
are stored as c0 + c1*omega + c2*i + c3*i*omega with rational c's.  For
d = 1 the basis degenerates (omega = i) and elements are canonicalized to
the subfield Q(i) with c1 = c3 = 0.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from mpmath import mp, mpc, mpf

from .qfield import FieldElem, QuadField, _omega_native, _omega_value, make_field

Rat = Fraction


_ZERO = Rat(0)


class ExtElem:
    """Element of K = Q(omega, i), coordinates over the basis (1, omega, i, i*omega)."""

    __slots__ = ("field", "c")

    def __init__(self, field: QuadField, c0=0, c1=0, c2=0, c3=0):
        self.field = field
        c = (
            c0 if isinstance(c0, Rat) else Rat(c0),
            c1 if isinstance(c1, Rat) else Rat(c1),
            c2 if isinstance(c2, Rat) else Rat(c2),
            c3 if isinstance(c3, Rat) else Rat(c3),
        )
        if field.d == 1:
            # omega = i: fold (c1, c3) into the Q(i) coordinates
            c = (c[0] - c[3], _ZERO, c[1] + c[2], _ZERO)
        self.c = c

    @staticmethod
    def _raw(field, c):
        """Internal constructor: c already a canonical Fraction 4-tuple."""
        out = object.__new__(ExtElem)
        out.field = field
        out.c = c
        return out

    # --- constructors --------------------------------------------------------

    @staticmethod
    def from_field_elem(x: FieldElem) -> "ExtElem":
        return ExtElem(x.field, x.a, x.b, 0, 0)

    @staticmethod
    def i_unit(field: QuadField) -> "ExtElem":
        return ExtElem(field, 0, 0, 1, 0)

    def _coerce(self, other):
        if isinstance(other, ExtElem):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return other
        if isinstance(other, FieldElem):
            if other.field != self.field:
                raise ValueError("elements of different fields")
            return ExtElem.from_field_elem(other)
        if isinstance(other, (int, Rat)):
            return ExtElem(self.field, other)
        return None

    # --- ring ops -------------------------------------------------------------

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self.c, o.c
        return ExtElem._raw(self.field, (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]))

    __radd__ = __add__

    def __neg__(self):
        a = self.c
        return ExtElem._raw(self.field, (-a[0], -a[1], -a[2], -a[3]))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        f = self.field
        x0, x1, x2, x3 = self.c
        y0, y1, y2, y3 = o.c
        # fast paths: one factor rational (the common case in polynomial work)
        if not (x1 or x2 or x3):
            if not x0:
                return ExtElem._raw(f, (_ZERO, _ZERO, _ZERO, _ZERO))
            return ExtElem._raw(f, (x0 * y0, x0 * y1, x0 * y2, x0 * y3))
        if not (y1 or y2 or y3):
            if not y0:
                return ExtElem._raw(f, (_ZERO, _ZERO, _ZERO, _ZERO))
            return ExtElem._raw(f, (x0 * y0, x1 * y0, x2 * y0, x3 * y0))
        t, m = f.omega_trace, f.omega_norm
        # (x0 + x1 w + x2 i + x3 iw)(y0 + y1 w + y2 i + y3 iw)
        # w^2 = t w - m, i^2 = -1, iw commutes.
        ww = x1 * y1  # coefficient of w^2
        iw_iw = x3 * y3  # coefficient of (iw)^2 = -(t w - m)
        w_iw = x1 * y3 + x3 * y1  # coefficient of w*iw = i w^2 = i(t w - m)
        ii = x2 * y2
        c0 = x0 * y0 - ii - m * ww + m * iw_iw
        c1 = x0 * y1 + x1 * y0 + t * ww - x2 * y3 - x3 * y2 - t * iw_iw
        c2 = x0 * y2 + x2 * y0 - m * w_iw
        c3 = x0 * y3 + x3 * y0 + x1 * y2 + x2 * y1 + t * w_iw
        return ExtElem._raw(f, (c0, c1, c2, c3))

    __rmul__ = __mul__

    def inverse(self) -> "ExtElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        # product of the three nontrivial Galois conjugates, divided by the norm
        a = self.conj_i()
        b = self.conj_omega()
        if self.field.d == 1:
            # Q(i): conj_i is the only conjugation
            n = (self * a).c[0]
            return ExtElem(self.field, a.c[0] / n, 0, a.c[2] / n, 0)
        adj = a * b * a.conj_omega()
        n = (self * adj).c[0]
        return ExtElem(self.field, adj.c[0] / n, adj.c[1] / n, adj.c[2] / n, adj.c[3] / n)

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
        out = ExtElem(self.field, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # --- involutions -----------------------------------------------------------

    def conj_i(self) -> "ExtElem":
        """i -> -i, omega fixed (not complex conjugation)."""
        a = self.c
        return ExtElem(self.field, a[0], a[1], -a[2], -a[3])

    def conj_omega(self) -> "ExtElem":
        """omega -> t - omega, i fixed."""
        t = self.field.omega_trace
        a = self.c
        return ExtElem(self.field, a[0] + t * a[1], -a[1], a[2] + t * a[3], -a[3])

    def conj(self) -> "ExtElem":
        """Complex conjugation under the fixed embedding: i -> -i, omega -> conj(omega)."""
        return self.conj_i().conj_omega()

    # --- predicates --------------------------------------------------------------

    def is_zero(self) -> bool:
        c = self.c
        return not (c[0] or c[1] or c[2] or c[3])

    def is_rational(self) -> bool:
        return self.c[1] == 0 and self.c[2] == 0 and self.c[3] == 0

    def as_rational(self) -> Rat:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.c[0]

    def in_base_field(self) -> bool:
        """True iff the element lies in k = Q(omega)."""
        if self.field.d == 1:
            return True
        return self.c[2] == 0 and self.c[3] == 0

    def as_field_elem(self) -> FieldElem:
        if self.field.d == 1:
            return FieldElem(self.field, self.c[0], self.c[2])
        if not self.in_base_field():
            raise ValueError(f"{self} is not in the base field")
        return FieldElem(self.field, self.c[0], self.c[1])

    # --- numerics ------------------------------------------------------------------

    def embed(self, precision: int = 53) -> mpc:
        with mp.workprec(precision):
            vals = _ext_basis_values(self.field, precision)
            out = mpc(0)
            for coef, v in zip(self.c, vals):
                if coef:
                    out += (mpf(coef.numerator) / coef.denominator) * v
            return out

    def embed_native(self) -> complex:
        vals = _ext_basis_native(self.field)
        out = complex(0)
        for coef, v in zip(self.c, vals):
            if coef:
                out += float(coef) * v
        return out

    def __complex__(self):
        return self.embed_native()

    # --- misc -------------------------------------------------------------------------

    def sort_key(self):
        return self.c

    def __eq__(self, other):
        if isinstance(other, (int, Rat)):
            return self.c[0] == other and self.c[1] == 0 and self.c[2] == 0 and self.c[3] == 0
        if isinstance(other, FieldElem):
            return self == ExtElem.from_field_elem(other)
        if not isinstance(other, ExtElem):
            return NotImplemented
        return self.field == other.field and self.c == other.c

    def __hash__(self):
        return hash((self.field.d, self.c))

    def __repr__(self):
        names = ("", "w", "i", "iw")
        parts = [f"{c}{n}" for c, n in zip(self.c, names) if c != 0]
        return "(" + "+".join(parts).replace("+-", "-") + ")" if parts else "0"

    def to_json(self):
        return {"c": [[x.numerator, x.denominator] for x in self.c]}

    @staticmethod
    def from_json(field: QuadField, obj) -> "ExtElem":
        if isinstance(obj, (int, str)):
            return ExtElem(field, Rat(obj))
        if isinstance(obj, list):
            return ExtElem(field, Rat(obj[0], obj[1]))
        if "c" in obj:
            cs = [Rat(x[0], x[1]) for x in obj["c"]]
            return ExtElem(field, *cs)
        return ExtElem.from_field_elem(FieldElem.from_json(field, obj))


@lru_cache(maxsize=None)
def _ext_basis_values(field: QuadField, precision: int):
    with mp.workprec(precision):
        w = _omega_value(field, precision)
        i = mpc(0, 1)
        return (mpc(1), w, i, i * w)


@lru_cache(maxsize=None)
def _ext_basis_native(field: QuadField):
    w = _omega_native(field)
    return (complex(1), w, 1j, 1j * w)


def ext(field: QuadField, x) -> ExtElem:
    """Coerce x (int, Fraction, FieldElem or ExtElem) into K."""
    if isinstance(x, ExtElem):
        if x.field != field:
            raise ValueError("field mismatch")
        return x
    if isinstance(x, FieldElem):
        if x.field != field:
            raise ValueError("field mismatch")
        return ExtElem.from_field_elem(x)
    return ExtElem(field, x)


def i_over_sqrt_disc(field: QuadField) -> ExtElem:
    """i/sqrt(d_k) = delta_k/d_k, the normalization of harmonic volume forms."""
    delta = field.delta()
    return ExtElem(field, Rat(delta.a, field.disc), Rat(delta.b, field.disc))
