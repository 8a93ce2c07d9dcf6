"""Free products of cyclic groups: letters, reduced words, jump laws, walks.

The group is generated by letters ``1..d`` with an involution ``*`` pairing
each letter with its inverse (``i* = i`` means the generator has order two).
Its Cayley graph is the ``d``-regular tree.  A walk step multiplies the
current position on the left by a generator drawn from an
:class:`AnisotropyVector`, so positions are running reduced products and
reduction is a push/cancel at the word head.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlphabetMismatch,
    DegreeTooSmall,
    NotAnInvolution,
    NotReduced,
    ParseError,
    ValidationError,
)
from .rng import rng_for

__all__ = [
    "Alphabet",
    "ReducedWord",
    "AnisotropyVector",
    "Trajectory",
    "make_alphabet",
    "identity_involution",
    "pairing_involution",
    "multiply",
    "inverse",
    "sample_trajectory",
]

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Alphabet:
    """Letters ``1..d`` with an involution pairing inverse generators.

    ``q1`` counts the fixed points of the involution (order-2 generators),
    ``q2 = (d - q1)/2`` the free pairs.  Immutable and shareable across
    workers.
    """

    d: int
    involution: tuple[int, ...]

    @property
    def q1(self) -> int:
        return sum(1 for i in range(1, self.d + 1) if self.involution[i - 1] == i)

    @property
    def q2(self) -> int:
        return (self.d - self.q1) // 2

    def star(self, i: int) -> int:
        """Inverse letter of ``i``."""
        return self.involution[i - 1]

    def letters(self) -> range:
        return range(1, self.d + 1)

    def __str__(self) -> str:
        return f"Alphabet(d={self.d}, inv={','.join(map(str, self.involution))})"


def identity_involution(d: int) -> tuple[int, ...]:
    return tuple(range(1, d + 1))


def pairing_involution(d: int) -> tuple[int, ...]:
    """Maximal fixed-point-free pairing (one fixed point when d is odd)."""
    inv = list(range(1, d + 1))
    for i in range(0, d - 1, 2):
        inv[i], inv[i + 1] = i + 2, i + 1
    return tuple(inv)


def make_alphabet(d: int, involution: Sequence[int]) -> Alphabet:
    """Validate and build an :class:`Alphabet`.

    ``involution`` maps letter i to involution[i-1] and must be its own
    inverse.  Raises ``DegreeTooSmall`` for d < 3 and ``NotAnInvolution``
    otherwise.
    """
    if d < 3:
        raise DegreeTooSmall(f"need d >= 3, got d={d}")
    inv = tuple(int(x) for x in involution)
    if len(inv) != d or sorted(inv) != list(range(1, d + 1)):
        raise NotAnInvolution(f"{inv} is not a permutation of 1..{d}")
    for i in range(1, d + 1):
        if inv[inv[i - 1] - 1] != i:
            raise NotAnInvolution(f"{inv} is not self-inverse at letter {i}")
    return Alphabet(d=d, involution=inv)


@dataclass(frozen=True)
class ReducedWord:
    """A reduced word over the alphabet: no adjacent ``(i, i*)`` pair.

    The empty word is the group unit.  ``letters[0]`` is the outermost
    (most recently applied) generator.
    """

    alphabet: Alphabet
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        inv = self.alphabet.involution
        for a, b in zip(self.letters, self.letters[1:]):
            if inv[a - 1] == b:
                raise NotReduced(f"adjacent inverse pair ({a},{b})")
        for a in self.letters:
            if not 1 <= a <= self.alphabet.d:
                raise ValidationError(f"letter {a} outside 1..{self.alphabet.d}")

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_unit(self) -> bool:
        return not self.letters

    def prepend(self, letter: int) -> "ReducedWord":
        """Left-multiply by the generator ``letter`` (one walk step)."""
        if self.letters and self.alphabet.star(letter) == self.letters[0]:
            return ReducedWord(self.alphabet, self.letters[1:])
        return ReducedWord(self.alphabet, (letter,) + self.letters)

    def __str__(self) -> str:
        return "e" if not self.letters else ".".join(f"g{a}" for a in self.letters)


def unit(alphabet: Alphabet) -> ReducedWord:
    return ReducedWord(alphabet, ())


def multiply(a: ReducedWord, b: ReducedWord) -> ReducedWord:
    """Product ``a * b`` in reduced form (cancellation at the junction)."""
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("words over different alphabets")
    inv = a.alphabet.involution
    stack = list(a.letters)
    for x in b.letters:
        if stack and inv[stack[-1] - 1] == x:
            stack.pop()
        else:
            stack.append(x)
    return ReducedWord(a.alphabet, tuple(stack))


def inverse(w: ReducedWord) -> ReducedWord:
    """Group inverse: reverse the letters and star each one."""
    inv = w.alphabet.involution
    return ReducedWord(w.alphabet, tuple(inv[a - 1] for a in reversed(w.letters)))


@dataclass(frozen=True)
class AnisotropyVector:
    """Jump law ``p`` on the letters, tied to an alphabet.

    Masses are validated (nonnegative, summing to one within 1e-12,
    ``p_i + p_{i*} > 0`` for every i) and renormalized exactly once at
    construction.  Immutable.
    """

    alphabet: Alphabet
    masses: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float)
        if m.shape != (self.alphabet.d,):
            raise ValidationError(f"need {self.alphabet.d} masses, got shape {m.shape}")
        if np.any(m < 0):
            raise ValidationError("negative mass")
        s = float(m.sum())
        if abs(s - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"masses sum to {s!r}, not 1 within {PROB_SUM_TOL}")
        m = m / s
        inv = self.alphabet.involution
        for i in range(1, self.alphabet.d + 1):
            if m[i - 1] + m[inv[i - 1] - 1] <= 0.0:
                raise ValidationError(f"p_{i} + p_{{{i}*}} = 0 (walk degenerates to a line)")
        m.flags.writeable = False
        object.__setattr__(self, "masses", m)

    def mass(self, i: int) -> float:
        return float(self.masses[i - 1])

    @property
    def d(self) -> int:
        return self.alphabet.d

    def support(self) -> tuple[int, ...]:
        return tuple(i for i in self.alphabet.letters() if self.masses[i - 1] > 0)

    def is_reversible(self, tol: float = 1e-12) -> bool:
        """True when ``p_{i*} = p_i`` for every letter."""
        inv = np.array(self.alphabet.involution) - 1
        return bool(np.all(np.abs(self.masses - self.masses[inv]) <= tol))

    def pair_products(self) -> np.ndarray:
        """The d products ``p_i * p_{i*}`` (drive all resolvent formulas)."""
        inv = np.array(self.alphabet.involution) - 1
        return self.masses * self.masses[inv]

    def serialize(self) -> str:
        inv = ",".join(map(str, self.alphabet.involution))
        mass = ",".join(repr(float(x)) for x in self.masses)
        return f"p d={self.alphabet.d} inv={inv} mass={mass}"

    def __str__(self) -> str:
        return self.serialize()


def uniform_vector(alphabet: Alphabet) -> AnisotropyVector:
    return AnisotropyVector(alphabet, np.full(alphabet.d, 1.0 / alphabet.d))


def parse_anisotropy(line: str) -> AnisotropyVector:
    """Parse the one-line text form produced by ``serialize``."""
    toks = line.split()
    if len(toks) != 4 or toks[0] != "p":
        raise ParseError(f"expected 'p d=.. inv=.. mass=..', got {line!r}", line=1)
    fields = {}
    for col, tok in enumerate(toks[1:], start=2):
        if "=" not in tok:
            raise ParseError(f"malformed field {tok!r}", line=1, column=col)
        k, v = tok.split("=", 1)
        fields[k] = v
    try:
        d = int(fields["d"])
        inv = [int(x) for x in fields["inv"].split(",")]
        mass = [float(x) for x in fields["mass"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad anisotropy line: {exc}", line=1) from exc
    return AnisotropyVector(make_alphabet(d, inv), np.array(mass))


@dataclass(frozen=True)
class Trajectory:
    """A sampled walk: i.i.d. letters with law ``p``, positions the running
    reduced products.  Only the step letters, the final reduced word and the
    distance profile are stored; intermediate positions are re-derivable.
    """

    p: AnisotropyVector
    seed: int
    steps: np.ndarray = field(repr=False)
    word: ReducedWord = field(repr=False)
    distances: np.ndarray = field(repr=False)  # |X_t| for t = 0..T

    @property
    def horizon(self) -> int:
        return len(self.steps)

    def positions(self) -> Iterable[ReducedWord]:
        """Yield X_0 = e, X_1, ..., X_T (recomputed on the fly)."""
        w = unit(self.p.alphabet)
        yield w
        for a in self.steps:
            w = w.prepend(int(a))
            yield w


def _reduce_steps(alphabet: Alphabet, steps: np.ndarray):
    """Run the push/cancel reduction; return (final letters, distances)."""
    inv = alphabet.involution
    rev: list[int] = []  # reduced word stored tail-first; rev[-1] is the head
    dist = np.empty(len(steps) + 1, dtype=np.int64)
    dist[0] = 0
    for t, a in enumerate(steps, start=1):
        a = int(a)
        if rev and rev[-1] == inv[a - 1]:
            rev.pop()
        else:
            rev.append(a)
        dist[t] = len(rev)
    return tuple(reversed(rev)), dist


def sample_trajectory(p: AnisotropyVector, t: int, seed: int) -> Trajectory:
    """Sample a horizon-``t`` walk; deterministic given the seed."""
    if t < 0:
        raise ValidationError("horizon must be >= 0")
    rng = rng_for(seed, 0x7261)
    steps = rng.choice(np.arange(1, p.d + 1), size=t, p=p.masses) if t else np.empty(0, dtype=int)
    letters, dist = _reduce_steps(p.alphabet, steps)
    return Trajectory(
        p=p,
        seed=int(seed),
        steps=np.asarray(steps, dtype=np.int64),
        word=ReducedWord(p.alphabet, letters),
        distances=dist,
    )
