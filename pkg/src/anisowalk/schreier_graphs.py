"""Finite Schreier graphs, random lifts, and matrix-free walk kernels.

A Schreier graph on ``n`` vertices is given by ``d`` permutations with
``perms[i*] = perms[i]^(-1)``.  The walk kernel follows the convention

    P(x, y) = sum_i p_i 1{x = alpha_i(y)},

fixed once and pinned by a directional unit test.  The free-product group
acts on vertices through the *inverse* permutations
(``apply_word(g_i, x) = alpha_i^(-1)(x)``): with that orientation,
projecting a tree trajectory (letters drawn from ``p``, positions the
running left products) step by step yields exactly a ``P``-chain, so tree
and graph computations couple without any relabeling.

Lifts: a base graph on ``r`` colors with one letter per directed edge is
covered by ``n``-lifts glued from per-edge permutations; walk weights are
matrix-valued (``p_g`` an r x r block per letter).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    AlphabetMismatch,
    ColorMismatch,
    InvolutionConstraintViolated,
    NotAPermutation,
    OddSizeWithMatchings,
    ParseError,
    ValidationError,
)
from .group_core import Alphabet, AnisotropyVector, ReducedWord, make_alphabet
from .rng import rng_for

__all__ = [
    "SchreierGraph",
    "FiniteKernel",
    "ColoredWeights",
    "LiftBase",
    "LiftGraph",
    "random_schreier",
    "from_permutations",
    "apply_word",
    "step_vertex",
    "kernel",
    "lift_kernel",
    "random_lift",
    "k4_base",
    "srw_weights",
    "save_graph",
    "load_graph",
    "save_lift",
    "load_lift",
    "is_simple",
]


# ---------------------------------------------------------------------------
# Schreier graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchreierGraph:
    """``n`` vertices (0-based) and ``d`` permutations with the involution
    constraint.  Immutable; inverse permutations are precomputed because the
    kernel touches both directions."""

    alphabet: Alphabet
    n: int
    perms: np.ndarray = field(repr=False)      # shape (d, n); perms[i-1][x] = alpha_i(x)
    inv_perms: np.ndarray = field(repr=False)  # alpha_i^(-1)

    def neighbors(self, x: int) -> tuple[int, ...]:
        """Images of x under the d inverse permutations (one per letter)."""
        return tuple(int(self.inv_perms[i, x]) for i in range(self.alphabet.d))

    def degree(self) -> int:
        return self.alphabet.d


def _check_permutation(arr: np.ndarray, n: int, label: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.int64)
    if a.shape != (n,) or sorted(a.tolist()) != list(range(n)):
        raise NotAPermutation(f"{label} is not a permutation of 0..{n - 1}")
    return a


def from_permutations(alphabet: Alphabet, perms: Sequence[Sequence[int]]) -> SchreierGraph:
    """Build a graph from explicit permutations; validates the involution
    constraint ``perms[i*] = perms[i]^(-1)``."""
    if len(perms) != alphabet.d:
        raise ValidationError(f"need {alphabet.d} permutations, got {len(perms)}")
    n = len(perms[0])
    mat = np.stack([_check_permutation(p, n, f"perm {i + 1}") for i, p in enumerate(perms)])
    inv_mat = np.empty_like(mat)
    for i in range(alphabet.d):
        inv_mat[i, mat[i]] = np.arange(n)
    for i in alphabet.letters():
        j = alphabet.star(i)
        if not np.array_equal(mat[j - 1], inv_mat[i - 1]):
            raise InvolutionConstraintViolated(
                f"perm {j} is not the inverse of perm {i}"
            )
    return SchreierGraph(alphabet=alphabet, n=n, perms=mat, inv_perms=inv_mat)


def random_schreier(alphabet: Alphabet, n: int, seed: int) -> SchreierGraph:
    """One independent uniform draw per involution class.

    Free pairs get a uniform permutation (the partner letter its inverse);
    fixed letters get a uniform fixed-point-free involution, built as a
    random perfect matching, which requires even ``n``.
    """
    if n < 1:
        raise ValidationError("need n >= 1")
    if alphabet.q1 > 0 and n % 2 != 0:
        raise OddSizeWithMatchings(
            f"fixed-point-free involutions need even n, got {n}"
        )
    rng = rng_for(seed, 0x5347)
    perms = np.empty((alphabet.d, n), dtype=np.int64)
    done = set()
    for i in alphabet.letters():
        if i in done:
            continue
        j = alphabet.star(i)
        if i == j:
            order = rng.permutation(n)
            invol = np.empty(n, dtype=np.int64)
            invol[order[0::2]] = order[1::2]
            invol[order[1::2]] = order[0::2]
            perms[i - 1] = invol
        else:
            sigma = rng.permutation(n)
            perms[i - 1] = sigma
            inv = np.empty(n, dtype=np.int64)
            inv[sigma] = np.arange(n)
            perms[j - 1] = inv
        done.update((i, j))
    return from_permutations(alphabet, perms)


def is_simple(graph: SchreierGraph) -> bool:
    """No loops and no multiple edges (every vertex has d distinct proper neighbors)."""
    n = graph.n
    for x in range(n):
        nbrs = graph.perms[:, x]
        if np.any(nbrs == x) or len(set(nbrs.tolist())) != graph.alphabet.d:
            return False
    return True


def apply_word(graph: SchreierGraph, w: ReducedWord, x: int) -> int:
    """Action of the word on a vertex: each letter acts by the inverse
    permutation, innermost (last) letter first, so that
    ``apply_word(multiply(a, b), x) = apply_word(a, apply_word(b, x))``."""
    if w.alphabet != graph.alphabet:
        raise AlphabetMismatch("word alphabet does not match the graph")
    if not 0 <= x < graph.n:
        raise ValidationError(f"vertex {x} outside 0..{graph.n - 1}")
    y = x
    for letter in reversed(w.letters):
        y = int(graph.inv_perms[letter - 1, y])
    return y


def step_vertex(graph: SchreierGraph, letter: int, x: int) -> int:
    """One walk step on the graph for a sampled letter (inverse permutation)."""
    return int(graph.inv_perms[letter - 1, x])


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

class FiniteKernel:
    """Matrix-free walk operator on a finite state space.

    ``apply_dist`` propagates a distribution (row convention, nu P),
    ``apply_fun`` applies P to a function, ``apply_adjoint_fun`` is the
    adjoint in l2(pi).  Scalar Schreier kernels are doubly stochastic with
    pi uniform; lifted kernels preserve ``pi(x, u) = mu(u)/n``.
    """

    def __init__(self, n_states: int, pi: np.ndarray):
        self.n_states = int(n_states)
        pi = np.asarray(pi, dtype=float)
        pi.flags.writeable = False
        self.pi = pi

    def apply_dist(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_fun(self, f: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_adjoint_fun(self, f: np.ndarray) -> np.ndarray:
        """Adjoint of apply_fun in the pi-weighted inner product."""
        return self.apply_dist(self.pi * f) / self.pi

    def to_dense(self) -> np.ndarray:
        """P as a dense row-stochastic matrix (columns via basis functions)."""
        n = self.n_states
        out = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            out[:, j] = self.apply_fun(e)
            e[j] = 0.0
        return out


class ScalarKernel(FiniteKernel):
    def __init__(self, graph: SchreierGraph, weights: AnisotropyVector):
        if weights.alphabet != graph.alphabet:
            raise AlphabetMismatch("weights alphabet does not match the graph")
        super().__init__(graph.n, np.full(graph.n, 1.0 / graph.n))
        self.graph = graph
        self.weights = weights

    def apply_dist(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros_like(v, dtype=float)
        for i, pi_ in enumerate(self.weights.masses):
            if pi_ > 0:
                out += pi_ * v[self.graph.perms[i]]
        return out

    def apply_fun(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f, dtype=float)
        for i, pi_ in enumerate(self.weights.masses):
            if pi_ > 0:
                out += pi_ * f[self.graph.inv_perms[i]]
        return out


def kernel(graph: SchreierGraph, p: AnisotropyVector) -> ScalarKernel:
    """The anisotropic walk kernel ``P = sum_i p_i S_i`` on the graph."""
    return ScalarKernel(graph, p)


# ---------------------------------------------------------------------------
# colored weights and lifts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColoredWeights:
    """Matrix-valued jump law: one r x r nonnegative block per letter.

    ``base_chain = sum_g p_g`` must be an irreducible aperiodic stochastic
    matrix; ``mu`` is its stationary law.
    """

    alphabet: Alphabet
    r: int
    blocks: tuple = field(repr=False)  # tuple of (r, r) ndarrays, one per letter
    base_chain: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)

    def block(self, letter: int) -> np.ndarray:
        return self.blocks[letter - 1]


def make_colored_weights(alphabet: Alphabet, blocks: Sequence[np.ndarray]) -> ColoredWeights:
    if len(blocks) != alphabet.d:
        raise ColorMismatch(f"need {alphabet.d} blocks, got {len(blocks)}")
    r = blocks[0].shape[0]
    blks = []
    for i, b in enumerate(blocks):
        b = np.asarray(b, dtype=float)
        if b.shape != (r, r):
            raise ColorMismatch(f"block {i + 1} has shape {b.shape}, expected {(r, r)}")
        if np.any(b < 0):
            raise ValidationError(f"block {i + 1} has negative entries")
        b.flags.writeable = False
        blks.append(b)
    p1 = np.sum(blks, axis=0)
    if np.max(np.abs(p1.sum(axis=1) - 1.0)) > 1e-12:
        raise ValidationError("base chain is not row-stochastic")
    if not _primitive(p1 > 0):
        raise ValidationError("base chain must be irreducible and aperiodic")
    mu = _stationary(p1)
    return ColoredWeights(alphabet=alphabet, r=r, blocks=tuple(blks),
                          base_chain=p1, mu=mu)


def _primitive(mask: np.ndarray) -> bool:
    # Wielandt: a nonnegative matrix is primitive iff some power <= (r-1)^2+1
    # is entrywise positive
    r = mask.shape[0]
    if r == 1:
        return bool(mask[0, 0])
    m = mask.copy()
    for _ in range((r - 1) ** 2 + 1):
        if m.all():
            return True
        m = (m @ mask) | m
    return bool(m.all())


def _stationary(p1: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(p1.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    mu = np.real(vecs[:, idx])
    mu = np.abs(mu) / np.abs(mu).sum()
    if np.max(np.abs(mu @ p1 - mu)) > 1e-12:
        raise ValidationError("stationary law of the base chain failed to verify")
    mu.flags.writeable = False
    return mu


@dataclass(frozen=True)
class LiftBase:
    """Base multigraph on ``r`` colors: one directed edge per letter, with
    ``edge(i*) = reverse(edge(i))``.  A loop may be declared self-paired
    (``i* = i``, lifted by involutions) or as a free pair of letters."""

    alphabet: Alphabet
    r: int
    edges: tuple  # tuple of (u, v) color pairs, 0-based, one per letter

    def __post_init__(self):
        if len(self.edges) != self.alphabet.d:
            raise ValidationError("one directed edge per letter required")
        for i in self.alphabet.letters():
            u, v = self.edges[i - 1]
            if not (0 <= u < self.r and 0 <= v < self.r):
                raise ColorMismatch(f"edge {i} colors outside 0..{self.r - 1}")
            ru, rv = self.edges[self.alphabet.star(i) - 1]
            if (ru, rv) != (v, u):
                raise InvolutionConstraintViolated(
                    f"edge of letter {self.alphabet.star(i)} must reverse edge {i}"
                )
            if self.alphabet.star(i) == i and u != v:
                raise ValidationError(f"self-paired letter {i} must be a loop")

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.r, dtype=int)
        for u, _ in self.edges:
            deg[u] += 1
        return deg


def k4_base() -> LiftBase:
    """The complete graph on four colors (letters 1..6 forward, 7..12 back)."""
    fwd = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    inv = tuple(list(range(7, 13)) + list(range(1, 7)))
    alphabet = make_alphabet(12, inv)
    edges = tuple(fwd + [(v, u) for (u, v) in fwd])
    return LiftBase(alphabet=alphabet, r=4, edges=edges)


def srw_weights(base: LiftBase) -> ColoredWeights:
    """Simple-random-walk blocks ``p_g = E_{u,v} / deg(u)`` for the base."""
    deg = base.degrees()
    blocks = []
    for u, v in base.edges:
        b = np.zeros((base.r, base.r))
        b[u, v] = 1.0 / deg[u]
        blocks.append(b)
    return make_colored_weights(base.alphabet, blocks)


@dataclass(frozen=True)
class LiftGraph:
    """``n``-lift of a base: one permutation of the fiber per letter, with
    the involution constraint.  States are pairs (fiber point, color)."""

    base: LiftBase
    n: int
    perms: np.ndarray = field(repr=False)
    inv_perms: np.ndarray = field(repr=False)

    @property
    def n_states(self) -> int:
        return self.n * self.base.r


def random_lift(base: LiftBase, n: int, seed: int) -> LiftGraph:
    """Uniform lift: one uniform permutation per edge pair (the reversed
    letter gets the inverse), fixed-point-free involutions for self-paired
    loops (even ``n`` required then)."""
    if n < 1:
        raise ValidationError("need n >= 1")
    alphabet = base.alphabet
    if any(alphabet.star(i) == i for i in alphabet.letters()) and n % 2 != 0:
        raise OddSizeWithMatchings("self-paired loops need even n")
    rng = rng_for(seed, 0x4c46)
    perms = np.empty((alphabet.d, n), dtype=np.int64)
    done = set()
    for i in alphabet.letters():
        if i in done:
            continue
        j = alphabet.star(i)
        if i == j:
            order = rng.permutation(n)
            invol = np.empty(n, dtype=np.int64)
            invol[order[0::2]] = order[1::2]
            invol[order[1::2]] = order[0::2]
            perms[i - 1] = invol
        else:
            sigma = rng.permutation(n)
            perms[i - 1] = sigma
            inv = np.empty(n, dtype=np.int64)
            inv[sigma] = np.arange(n)
            perms[j - 1] = inv
        done.update((i, j))
    inv_mat = np.empty_like(perms)
    for i in range(alphabet.d):
        inv_mat[i, perms[i]] = np.arange(n)
    return LiftGraph(base=base, n=n, perms=perms, inv_perms=inv_mat)


class LiftKernel(FiniteKernel):
    """Walk kernel ``sum_g p_g (x) S_g`` on fiber x colors.

    State (x, u) has flat index ``x * r + u``; the invariant law is
    ``pi(x, u) = mu(u) / n``.
    """

    def __init__(self, lift: LiftGraph, weights: ColoredWeights):
        if weights.alphabet != lift.base.alphabet:
            raise AlphabetMismatch("weights alphabet does not match the lift")
        if weights.r != lift.base.r:
            raise ColorMismatch(
                f"weights have {weights.r} colors, lift base {lift.base.r}"
            )
        n, r = lift.n, lift.base.r
        super().__init__(n * r, np.tile(weights.mu / n, n))
        self.lift = lift
        self.weights = weights

    def _blocks(self):
        for i, block in enumerate(self.weights.blocks):
            if block.any():
                yield i, block

    def apply_dist(self, v: np.ndarray) -> np.ndarray:
        n, r = self.lift.n, self.lift.base.r
        m = v.reshape(n, r)
        out = np.zeros_like(m, dtype=float)
        for i, block in self._blocks():
            out += m[self.lift.perms[i]] @ block
        return out.reshape(-1)

    def apply_fun(self, f: np.ndarray) -> np.ndarray:
        n, r = self.lift.n, self.lift.base.r
        m = f.reshape(n, r)
        out = np.zeros_like(m, dtype=float)
        for i, block in self._blocks():
            out += m[self.lift.inv_perms[i]] @ block.T
        return out.reshape(-1)


def lift_kernel(lift: LiftGraph, weights: ColoredWeights) -> LiftKernel:
    return LiftKernel(lift, weights)


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def _perm_lines(perms: np.ndarray) -> list[str]:
    return [
        f"perm {i + 1}: " + " ".join(str(int(x) + 1) for x in row)
        for i, row in enumerate(perms)
    ]


def _write(path, lines: list[str], checksum: bool) -> None:
    body = "".join(line + "\n" for line in lines)
    if checksum:
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        body += f"#sha256:{digest}\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(body)


def _read_lines(path) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.splitlines()
    if lines and lines[-1].startswith("#sha256:"):
        expected = lines[-1][len("#sha256:"):]
        body = "".join(line + "\n" for line in lines[:-1])
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        if digest != expected:
            raise ParseError("checksum mismatch", line=len(lines))
        lines = lines[:-1]
    return [ln for ln in lines if ln.strip()]


def _parse_header(line: str, kind: str) -> dict:
    toks = line.split()
    if not toks or toks[0] != kind:
        raise ParseError(f"expected {kind!r} header, got {line!r}", line=1, column=1)
    fields = {}
    for tok in toks[1:]:
        if "=" not in tok:
            raise ParseError(f"malformed header field {tok!r}", line=1)
        k, v = tok.split("=", 1)
        fields[k] = v
    return fields


def _parse_perm_line(line: str, lineno: int, n: int) -> tuple[int, np.ndarray]:
    if not line.startswith("perm "):
        raise ParseError(f"expected 'perm <i>: ...', got {line!r}", line=lineno)
    head, _, rest = line.partition(":")
    try:
        letter = int(head.split()[1])
        images = np.array([int(x) - 1 for x in rest.split()], dtype=np.int64)
    except (IndexError, ValueError) as exc:
        raise ParseError(f"bad permutation line: {exc}", line=lineno) from exc
    if len(images) != n:
        raise ParseError(f"perm {letter} has {len(images)} images, expected {n}",
                         line=lineno)
    return letter, images


def save_graph(graph: SchreierGraph, path, checksum: bool = True) -> None:
    inv = ",".join(map(str, graph.alphabet.involution))
    lines = [f"schreier n={graph.n} d={graph.alphabet.d} inv={inv}"]
    lines += _perm_lines(graph.perms)
    _write(path, lines, checksum)


def load_graph(path) -> SchreierGraph:
    lines = _read_lines(path)
    if not lines:
        raise ParseError("empty graph file", line=1)
    fields = _parse_header(lines[0], "schreier")
    try:
        n, d = int(fields["n"]), int(fields["d"])
        inv = [int(x) for x in fields["inv"].split(",")]
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", line=1) from exc
    alphabet = make_alphabet(d, inv)
    if len(lines) != 1 + d:
        raise ParseError(f"expected {d} permutation lines, found {len(lines) - 1}",
                         line=len(lines))
    perms = np.empty((d, n), dtype=np.int64)
    seen = set()
    for lineno, line in enumerate(lines[1:], start=2):
        letter, images = _parse_perm_line(line, lineno, n)
        if not 1 <= letter <= d or letter in seen:
            raise ParseError(f"unexpected perm index {letter}", line=lineno)
        seen.add(letter)
        perms[letter - 1] = images
    return from_permutations(alphabet, perms)


def save_lift(lift: LiftGraph, path, checksum: bool = True) -> None:
    base = lift.base
    inv = ",".join(map(str, base.alphabet.involution))
    lines = [f"lift n={lift.n} d={base.alphabet.d} inv={inv}", f"base r={base.r}"]
    lines += [
        f"edge {i + 1} {u + 1} {v + 1}" for i, (u, v) in enumerate(base.edges)
    ]
    lines += _perm_lines(lift.perms)
    _write(path, lines, checksum)


def load_lift(path) -> LiftGraph:
    lines = _read_lines(path)
    if len(lines) < 2:
        raise ParseError("truncated lift file", line=len(lines))
    fields = _parse_header(lines[0], "lift")
    try:
        n, d = int(fields["n"]), int(fields["d"])
        inv = [int(x) for x in fields["inv"].split(",")]
        r = int(_parse_header(lines[1], "base")["r"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {exc}", line=1) from exc
    alphabet = make_alphabet(d, inv)
    if len(lines) != 2 + 2 * d:
        raise ParseError(
            f"expected {d} edge and {d} perm lines, found {len(lines) - 2}",
            line=len(lines),
        )
    edges = [None] * d
    for lineno, line in enumerate(lines[2 : 2 + d], start=3):
        toks = line.split()
        if len(toks) != 4 or toks[0] != "edge":
            raise ParseError(f"expected 'edge <i> <u> <v>', got {line!r}", line=lineno)
        try:
            i, u, v = int(toks[1]), int(toks[2]) - 1, int(toks[3]) - 1
        except ValueError as exc:
            raise ParseError(f"bad edge line: {exc}", line=lineno) from exc
        if not 1 <= i <= d or edges[i - 1] is not None:
            raise ParseError(f"unexpected edge index {i}", line=lineno)
        edges[i - 1] = (u, v)
    base = LiftBase(alphabet=alphabet, r=r, edges=tuple(edges))
    perms = np.empty((d, n), dtype=np.int64)
    seen = set()
    for lineno, line in enumerate(lines[2 + d :], start=3 + d):
        letter, images = _parse_perm_line(line, lineno, n)
        if not 1 <= letter <= d or letter in seen:
            raise ParseError(f"unexpected perm index {letter}", line=lineno)
        seen.add(letter)
        perms[letter - 1] = images
    mat = np.stack([_check_permutation(row, n, f"perm {i+1}") for i, row in enumerate(perms)])
    inv_mat = np.empty_like(mat)
    for i in range(d):
        inv_mat[i, mat[i]] = np.arange(n)
    for i in alphabet.letters():
        j = alphabet.star(i)
        if not np.array_equal(mat[j - 1], inv_mat[i - 1]):
            raise InvolutionConstraintViolated(f"perm {j} is not the inverse of perm {i}")
    return LiftGraph(base=base, n=n, perms=mat, inv_perms=inv_mat)
