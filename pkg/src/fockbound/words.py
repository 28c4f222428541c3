"""Words over the alphabet {1..n}, weight systems, and the truncated Fock basis.

A word is a plain tuple of ints; the empty tuple indexes the vacuum.  Basis
vectors of the depth-``d`` truncation are ordered by length, then
lexicographically, so the vacuum is index 0 and every depth-``t`` sub-block
is a leading principal block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CapacityError, ValidationError

Word = tuple

MAX_DIM = 1 << 24


def check_word(word: Sequence[int], n: int) -> Word:
    word = tuple(int(a) for a in word)
    for a in word:
        if not 1 <= a <= n:
            raise ValidationError(f"letter {a} outside 1..{n}")
    return word


def concat(I: Word, J: Word) -> Word:
    return tuple(I) + tuple(J)


def reverse(I: Word) -> Word:
    return tuple(reversed(I))


def prefix(I: Word, m: int) -> Word:
    if not 0 <= m <= len(I):
        raise IndexError(f"prefix length {m} out of range for word of length {len(I)}")
    return tuple(I[:m])


def repeat(I: Word, k: int) -> Word:
    if k < 0:
        raise ValueError("repeat count must be non-negative")
    return tuple(I) * k


def words_of_length(n: int, k: int):
    """All words of length ``k`` in lexicographic order."""
    if k == 0:
        return [()]
    out = [()]
    for _ in range(k):
        out = [w + (a,) for w in out for a in range(1, n + 1)]
    return out


def words_up_to(n: int, k: int, *, nonempty: bool = False):
    out = []
    for m in range(1 if nonempty else 0, k + 1):
        out.extend(words_of_length(n, m))
    return out


def format_word(word: Word) -> str:
    return "(" + ",".join(str(a) for a in word) + ")"


@dataclass(frozen=True)
class Weights:
    """Positive weights summing to one.

    ``exact`` holds the same values as Fractions when they were supplied
    exactly; the symbolic engine then keeps rational coefficients.
    """

    omega: tuple
    exact: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.omega) == 0:
            raise ValidationError("weights must be non-empty")
        if any(not (w > 0) for w in self.omega):
            raise ValidationError(f"weights must be strictly positive, got {self.omega}")
        if self.exact is not None:
            if sum(self.exact) != 1:
                raise ValidationError(f"exact weights sum to {sum(self.exact)}, not 1")
        elif abs(math.fsum(self.omega) - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {math.fsum(self.omega)!r}, not 1")

    @classmethod
    def of(cls, values: Sequence) -> "Weights":
        """Build from ints/Fractions (exact) or floats."""
        values = list(values)
        if all(isinstance(v, (int, Fraction)) for v in values):
            fr = tuple(Fraction(v) for v in values)
            return cls(tuple(float(v) for v in fr), fr)
        return cls(tuple(float(v) for v in values))

    @classmethod
    def uniform(cls, n: int) -> "Weights":
        return cls.of([Fraction(1, n)] * n)

    @property
    def n(self) -> int:
        return len(self.omega)

    def scalar(self, i: int):
        """Weight of letter ``i`` (1-based), exact if available."""
        if self.exact is not None:
            return self.exact[i - 1]
        return self.omega[i - 1]

    def __len__(self):
        return len(self.omega)


def weight_of_word(w: Weights, J: Word):
    """Product of the letter weights of ``J``; 1 for the empty word."""
    out = Fraction(1) if w.exact is not None else 1.0
    for j in J:
        out = out * w.scalar(j)
    return out


@dataclass(frozen=True)
class TruncationParams:
    """Alphabet size ``n`` and maximal word length ``depth``."""

    n: int
    depth: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("alphabet size must be >= 1")
        if self.depth < 1:
            raise ValidationError("depth must be >= 1")
        if self.dim_at(self.depth) > MAX_DIM:
            raise CapacityError(f"n={self.n}, d={self.depth} exceeds {MAX_DIM} basis vectors")

    def dim_at(self, t: int) -> int:
        """Number of words of length <= t (0 for t < 0)."""
        if t < 0:
            return 0
        if self.n == 1:
            return t + 1
        return (self.n ** (t + 1) - 1) // (self.n - 1)

    @property
    def dim(self) -> int:
        return self.dim_at(self.depth)

    def offset(self, k: int) -> int:
        return self.dim_at(k - 1)

    def index_of(self, I: Sequence[int]) -> int:
        I = check_word(I, self.n)
        if len(I) > self.depth:
            raise ValidationError(f"word of length {len(I)} exceeds depth {self.depth}")
        rank = 0
        for a in I:
            rank = rank * self.n + (a - 1)
        return self.offset(len(I)) + rank

    def word_at(self, k: int) -> Word:
        if not 0 <= k < self.dim:
            raise IndexError(f"basis index {k} outside 0..{self.dim - 1}")
        m = 0
        while self.dim_at(m) <= k:
            m += 1
        rank = k - self.offset(m)
        letters = []
        for _ in range(m):
            rank, r = divmod(rank, self.n)
            letters.append(r + 1)
        return tuple(reversed(letters))

    def enumerate_basis(self) -> list:
        return words_up_to(self.n, self.depth)

    @cached_property
    def lengths(self) -> np.ndarray:
        """Word length of every basis index."""
        out = np.empty(self.dim, dtype=np.int64)
        for m in range(self.depth + 1):
            out[self.offset(m):self.dim_at(m)] = m
        return out

    @cached_property
    def first_letter(self) -> np.ndarray:
        """First letter per index (0 for the vacuum)."""
        out = np.zeros(self.dim, dtype=np.int64)
        for m in range(1, self.depth + 1):
            size = self.n ** m
            out[self.offset(m):self.dim_at(m)] = np.arange(size) // self.n ** (m - 1) + 1
        return out

    @cached_property
    def tail_index(self) -> np.ndarray:
        """Index of the word with its first letter removed (-1 for the vacuum)."""
        out = np.full(self.dim, -1, dtype=np.int64)
        for m in range(1, self.depth + 1):
            size = self.n ** m
            out[self.offset(m):self.dim_at(m)] = self.offset(m - 1) + np.arange(size) % self.n ** (m - 1)
        return out


def enumerate_basis(p: TruncationParams) -> list:
    return p.enumerate_basis()


def index_of(p: TruncationParams, I: Word) -> int:
    return p.index_of(I)


def word_at(p: TruncationParams, k: int) -> Word:
    return p.word_at(k)
