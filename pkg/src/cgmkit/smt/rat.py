"""Exact rational arithmetic helpers for the solver core.

``Q`` is gmpy2's mpq when available (markedly faster), plain Fraction
otherwise; both expose numerator/denominator so conversion at the public
API boundary is uniform.
"""

from __future__ import annotations

from fractions import Fraction

try:  # pragma: no cover - environment dependent
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

QZERO = Q(0)
QONE = Q(1)


def to_fraction(q) -> Fraction:
    return Fraction(q.numerator, q.denominator)


class Delta:
    """Rational extended with a symbolic infinitesimal: value = a + b*delta.

    Strict bounds become non-strict delta bounds: x < c  <=>  x <= c - delta.
    Comparison is lexicographic on (a, b).
    """

    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a = Q(a)
        self.b = Q(b)

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        sign = "+" if self.b > 0 else "-"
        return f"{self.a}{sign}{abs(self.b)}d"

    def __eq__(self, other):
        return self.a == other.a and self.b == other.b

    def __lt__(self, other):
        return (self.a, self.b) < (other.a, other.b)

    def __le__(self, other):
        return (self.a, self.b) <= (other.a, other.b)

    def __gt__(self, other):
        return (self.a, self.b) > (other.a, other.b)

    def __ge__(self, other):
        return (self.a, self.b) >= (other.a, other.b)

    def __hash__(self):
        return hash((self.a, self.b))

    def __add__(self, other):
        return Delta(self.a + other.a, self.b + other.b)

    def __sub__(self, other):
        return Delta(self.a - other.a, self.b - other.b)

    def scaled(self, k):
        return Delta(self.a * k, self.b * k)

    def concretize(self, delta):
        return self.a + self.b * delta


DZERO = Delta(0)
