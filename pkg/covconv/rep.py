"""SO(3) multiplicities in tensor powers of the vector representation."""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson


@dataclass(frozen=True)
class MultiplicityTable:
    n: int
    entries: dict[int, int]

    def __post_init__(self):
        dim = sum((2 * j + 1) * m for j, m in self.entries.items())
        if dim != 3**self.n:
            raise ValueError(f"Multiplicities for n={self.n} span dimension {dim}, expected {3 ** self.n}")
        if any(j > self.n for j, m in self.entries.items() if m):
            raise ValueError(f"Spin above {self.n} in the n={self.n} table")

    def multiplicity(self, j: int) -> int:
        return self.entries.get(j, 0)

    def to_dict(self) -> dict:
        return {"n": self.n, "multiplicities": {str(j): m for j, m in sorted(self.entries.items())}}


def so3_tensor_multiplicities(n: int) -> MultiplicityTable:
    """Decompose V^{(x)n}, V the spin-1 representation, by j (x) 1 = (j-1) + j + (j+1)."""
    if n < 0:
        raise ValueError(f"Tensor power must be nonnegative, got {n}")
    counts = Counter({0: 1})
    for _ in range(n):
        step = Counter()
        for j, m in counts.items():
            if j == 0:
                step[1] += m
            else:
                step[j - 1] += m
                step[j] += m
                step[j + 1] += m
        counts = step
    return MultiplicityTable(n, {j: m for j, m in sorted(counts.items()) if m})


def character_multiplicities(n: int, samples: int = 8001) -> dict[int, float]:
    """Multiplicities from characters, before rounding.

    m_j = (1/pi) int_0^pi chi_1(t)^n (cos jt - cos (j+1)t) dt, which is the
    Weyl-measure pairing of chi_1^n with chi_j.
    """
    if n < 0:
        raise ValueError(f"Tensor power must be nonnegative, got {n}")
    t = np.linspace(0.0, math.pi, samples)
    chi = (1.0 + 2.0 * np.cos(t)) ** n
    return {j: float(simpson(chi * (np.cos(j * t) - np.cos((j + 1) * t)), x=t) / math.pi) for j in range(n + 1)}
