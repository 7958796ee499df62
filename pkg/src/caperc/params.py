"""Color intensity vectors and derived quantities."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class LambdaVector:
    """Vector of k strictly positive color intensities.

    Derived sums: lambda_I over a color subset I, lambda_uc over all colors,
    and lambda_without(i) over all colors except i.
    """

    lam: tuple[float, ...]

    def __init__(self, lam: Sequence[float]):
        lam = tuple(float(x) for x in lam)
        if len(lam) < 1:
            raise ValueError("need at least one color")
        if any(x <= 0.0 for x in lam):
            raise ValueError("all intensities must be strictly positive")
        object.__setattr__(self, "lam", lam)

    @property
    def k(self) -> int:
        return len(self.lam)

    def __len__(self) -> int:
        return len(self.lam)

    def __getitem__(self, i: int) -> float:
        return self.lam[i]

    def __iter__(self):
        return iter(self.lam)

    @property
    def lambda_uc(self) -> float:
        """Total intensity over all colors."""
        return sum(self.lam)

    def lambda_subset(self, colors: Iterable[int]) -> float:
        """Sum of intensities over a color subset."""
        cs = set(colors)
        if any(c < 0 or c >= self.k for c in cs):
            raise ValueError("color index out of range")
        return sum(self.lam[c] for c in cs)

    def lambda_mask(self, mask: int) -> float:
        """Sum of intensities over a subset given as a k-bit mask."""
        if mask < 0 or mask >= (1 << self.k):
            raise ValueError("mask out of range")
        return sum(self.lam[i] for i in range(self.k) if (mask >> i) & 1)

    def lambda_without(self, i: int) -> float:
        """Sum of intensities over all colors except i."""
        if i < 0 or i >= self.k:
            raise ValueError("color index out of range")
        return self.lambda_uc - self.lam[i]


def as_lambda(lam) -> LambdaVector:
    """Coerce a sequence (or LambdaVector) to a LambdaVector."""
    if isinstance(lam, LambdaVector):
        return lam
    return LambdaVector(lam)
