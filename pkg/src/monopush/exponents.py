"""Exponent data ``(A, B)`` for the map ``x**A`` and the weight ``|x**B|``."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateMapError, DomainError


def _is_integral(v: float) -> bool:
    return float(v).is_integer()


@dataclass(frozen=True)
class ExponentData:
    """Map exponents ``A`` and measure exponents ``B`` of equal length.

    Entries are nonnegative finite reals. Integer entries are stored as
    floats but ``is_integer`` reports whether every entry is integral.
    """

    A: tuple
    B: tuple

    def __post_init__(self):
        A = tuple(float(a) for a in self.A)
        B = tuple(float(b) for b in self.B)
        if len(A) == 0 or len(A) != len(B):
            raise DomainError("A and B must be nonempty and of equal length")
        for v in A + B:
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"exponents must be finite and >= 0, got {v!r}")
        if all(a == 0 for a in A):
            raise DegenerateMapError(
                "map exponents violate 'not all a_i equal to zero'; "
                "the pushforward is a point mass"
            )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def parse(cls, a_text: str, b_text: str) -> "ExponentData":
        """Build from comma-separated strings such as ``"2,4"``."""
        try:
            A = [float(t) for t in a_text.split(",")]
            B = [float(t) for t in b_text.split(",")]
        except ValueError as exc:
            raise DomainError(f"cannot parse exponents: {exc}") from None
        return cls(tuple(A), tuple(B))

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def is_integer(self) -> bool:
        return all(_is_integral(v) for v in self.A + self.B)

    def permuted(self, perm) -> "ExponentData":
        return ExponentData(tuple(self.A[i] for i in perm), tuple(self.B[i] for i in perm))

    def total_mass(self) -> float:
        """Mass of ``x**B dx`` on the unit cube."""
        return math.prod(1.0 / (b + 1.0) for b in self.B)

    def __str__(self):
        fmt = lambda seq: ",".join(f"{v:g}" for v in seq)
        return f"A=({fmt(self.A)}) B=({fmt(self.B)})"
