"""hermcycles: exact Hermitian lattice theta machinery and special-cycle series."""

from .qfield import FieldElem, QuadField, make_field
from .extfield import ExtElem, ext

__all__ = [
    "FieldElem",
    "QuadField",
    "make_field",
    "ExtElem",
    "ext",
]

__version__ = "0.1.0"
