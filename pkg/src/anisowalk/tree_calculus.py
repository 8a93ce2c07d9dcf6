"""Exact analytic computations for anisotropic walks on the free-product tree.

Everything here is driven by the resolvent profile of the walk at a point
``z``: the per-letter coefficients ``gamma_i`` solving

    gamma_i = (z - sum_{j != i*} p_j p_{j*} gamma_j)^(-1)

together with ``r_i = p_i gamma_i`` and ``s_z = 1/(2 R_z(e,e))``.  The
profile has a closed form once ``s_z`` is known: ``s_z`` is the largest real
root of ``z = 2x + sum_j (sqrt(x^2 + p_j p_{j*}) - x)`` and then
``gamma_i = 1/(s + sqrt(s^2 + p_i p_{i*}))``.  The convergence radius
``rho'_p`` is the minimum of that same convex function, and the operator
norm ``rho_p`` is located by the l2 integrability criterion

    sum_i r_i^2 (1 - r_{i*}^2) / (1 - (r_i r_{i*})^2) = 1,

which is monotone along the ``s`` parametrization.  Bisecting in ``s``
rather than ``z`` keeps the computation well conditioned at the spectral
edge, where ``ds/dz`` blows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BelowConvergenceRadius,
    CriterionNeverReachesOne,
    DPBudgetExceeded,
    HorizonTooLarge,
    NoConvergence,
    NotTransient,
    NumericalError,
    RoundTripResidualTooLarge,
    SetTooLarge,
    SingularSystem,
    ValidationError,
)
from .group_core import AnisotropyVector, ReducedWord
from .rng import spawn_seeds, rng_for

__all__ = [
    "ResolventProfile",
    "SpectralSummary",
    "StoppingSet",
    "BackboneKernel",
    "TransferReport",
    "EntropyEstimate",
    "HaagerupBounds",
    "DominationReport",
    "solve_gamma",
    "rho_prime",
    "rho",
    "green_value",
    "entropy",
    "transform_p_to_pprime",
    "build_stopping_set",
    "backbone_kernel",
    "haagerup_bounds",
    "integrability",
    "domination_check",
    "word_distribution",
    "dp_horizon",
    "level_sums",
    "uniform_target_series",
    "spectral_summary",
]

RESIDUAL_TOL = 1e-12
ITER_TARGET = 1e-13
# the damped iteration contracts like 1 - c*sqrt(z - rho'); past this many
# iterations without hitting the target it cannot finish within any sane
# budget, and the closed form through s_z (exact even at the edge) takes over
STALL_ITER = 5_000
DEFAULT_WORD_CAP = 2_000_000
MEMBERSHIP_SLACK = 1e-9  # ties on u(g) = 1/k break outward, robust to rounding


# ---------------------------------------------------------------------------
# the convex edge function  f(s) = 2s + sum_j (sqrt(s^2+c_j) - s)
# ---------------------------------------------------------------------------

def _f_edge(c: np.ndarray, s: float) -> float:
    return 2.0 * s + float(np.sum(np.sqrt(s * s + c) - s))

def _f_edge_prime(c: np.ndarray, s: float) -> float:
    # derivative for s > 0; each c_j = 0 term contributes s/s = 1
    return 2.0 - len(c) + float(np.sum(s / np.sqrt(s * s + c)))

def _edge_minimum(c: np.ndarray) -> tuple[float, float]:
    """Return (argmin s_min, min value) of f; s_min = 0 on the boundary case."""
    d = len(c)
    zero_terms = int(np.sum(c == 0.0))
    if 2 - d + zero_terms >= 0:
        return 0.0, float(np.sum(np.sqrt(c)))
    lo, hi = 0.0, max(1.0, float(np.sqrt(c.max())))
    while _f_edge_prime(c, hi) <= 0.0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _f_edge_prime(c, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    smin = 0.5 * (lo + hi)
    return smin, _f_edge(c, smin)

def _solve_s(c: np.ndarray, z: float, smin: float) -> float:
    """Largest real root of f(s) = z for z >= f(smin)."""
    if z <= _f_edge(c, smin):
        return smin
    lo, hi = smin, 0.5 * z
    if _f_edge(c, hi) < z:  # guards rounding; f(z/2) >= z in exact arithmetic
        hi = z
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _f_edge(c, mid) < z:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

def _gamma_from_s(c: np.ndarray, s: float) -> np.ndarray:
    # rationalized root of  c*g^2 + 2s*g - 1 = 0; also valid at c = 0
    return 1.0 / (s + np.sqrt(s * s + c))


# ---------------------------------------------------------------------------
# resolvent profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolventProfile:
    """Per-letter resolvent data of the walk at the point ``z``."""

    p: AnisotropyVector
    z: float
    gamma: np.ndarray = field(repr=False)
    r: np.ndarray = field(repr=False)
    s: float = 0.0
    ree: float = 0.0  # R_z(e, e)
    residual: float = 0.0

    def __post_init__(self):
        inv = np.array(self.p.alphabet.involution) - 1
        rr = self.r * self.r[inv]
        if np.any(rr >= 1.0):
            raise NumericalError(f"r_i * r_(i*) >= 1 at z={self.z}")

    def r_of(self, i: int) -> float:
        return float(self.r[i - 1])


def _iteration_residual(c: np.ndarray, z: float, gamma: np.ndarray) -> float:
    total = float(np.dot(c, gamma))
    update = 1.0 / (z - (total - c * gamma))
    return float(np.max(np.abs(gamma - update)))


def _profile_closed(p: AnisotropyVector, z: float) -> ResolventProfile:
    c = p.pair_products()
    smin, rp = _edge_minimum(c)
    s = _solve_s(c, z, smin)
    gamma = _gamma_from_s(c, s)
    return ResolventProfile(
        p=p, z=float(z), gamma=gamma, r=p.masses * gamma,
        s=s, ree=1.0 / (2.0 * s), residual=_iteration_residual(c, z, gamma),
    )


def rho_prime(p: AnisotropyVector) -> float:
    """Convergence-radius parameter of the return series.

    Minimum over ``s > 0`` of ``2s + sum_i (sqrt(s^2 + p_i p_{i*}) - s)``,
    located by bisection on the derivative of this strictly convex function.
    Fully asymmetric laws (all ``p_i p_{i*} = 0``) hit the ``s = 0`` boundary
    and the one-sided limit is returned.
    """
    return _edge_minimum(p.pair_products())[1]


def solve_gamma(p: AnisotropyVector, z: float) -> ResolventProfile:
    """Solve the profile recursion at ``z``; requires ``z >= rho'_p``.

    Damped fixed-point iteration (weight 1/2, started from ``gamma = 1/z``)
    down to residual 1e-13; near the spectral edge, where the iteration
    contracts too slowly, the closed form through ``s_z`` is used instead.
    Either way the returned profile has recursion residual below 1e-12.
    """
    c = p.pair_products()
    smin, rp = _edge_minimum(c)
    if z <= 0.0 or z < rp * (1.0 - 1e-12):
        raise BelowConvergenceRadius(f"z={z} below rho'={rp}")
    gamma = np.full(p.d, 1.0 / z)
    resid = math.inf
    for _ in range(STALL_ITER):
        total = float(np.dot(c, gamma))
        denom = z - (total - c * gamma)
        if np.any(denom <= 0.0):
            break
        update = 1.0 / denom
        resid = float(np.max(np.abs(gamma - update)))
        gamma = 0.5 * gamma + 0.5 * update
        if resid < ITER_TARGET:
            break
    if resid < ITER_TARGET:
        total = float(np.dot(c, gamma))
        s = 0.5 * (z - total)
        prof = ResolventProfile(
            p=p, z=float(z), gamma=gamma, r=p.masses * gamma,
            s=s, ree=1.0 / (2.0 * s), residual=_iteration_residual(c, z, gamma),
        )
    else:
        prof = _profile_closed(p, z)
    if prof.residual > RESIDUAL_TOL:
        raise NoConvergence(
            f"profile recursion stalled at z={z}", residual=prof.residual
        )
    return prof


# ---------------------------------------------------------------------------
# spectral radius via the l2 criterion
# ---------------------------------------------------------------------------

def _criterion_l1(p: AnisotropyVector, r: np.ndarray) -> float:
    """sum_i r_i (1 - r_{i*}) / (1 - r_i r_{i*}); equals 1 iff z = 1."""
    inv = np.array(p.alphabet.involution) - 1
    rs = r[inv]
    return float(np.sum(r * (1.0 - rs) / (1.0 - r * rs)))


def _criterion_l2(p: AnisotropyVector, r: np.ndarray) -> float:
    """sum_i r_i^2 (1 - r_{i*}^2) / (1 - (r_i r_{i*})^2); equals 1 iff z = rho_p."""
    inv = np.array(p.alphabet.involution) - 1
    r2, rs2 = r * r, r[inv] * r[inv]
    return float(np.sum(r2 * (1.0 - rs2) / (1.0 - r2 * rs2)))


def _criterion_l2_at_s(p: AnisotropyVector, c: np.ndarray, s: float) -> float:
    if s <= 0.0:
        # one-sided support letters make r_i blow up as s -> 0
        if np.any((p.masses > 0) & (c == 0.0)):
            return math.inf
        r = p.masses / np.sqrt(np.where(c > 0, c, 1.0))
        r[p.masses == 0] = 0.0
    else:
        r = p.masses * _gamma_from_s(c, s)
    return _criterion_l2(p, r)


def _rho_state(p: AnisotropyVector) -> tuple[float, float]:
    """Return (s*, rho_p): the l2-criterion root in the s parametrization."""
    c = p.pair_products()
    smin, rp = _edge_minimum(c)
    if _criterion_l2_at_s(p, c, smin) <= 1.0 + 1e-12:
        return smin, rp  # reversible-like case: rho = rho'
    lo = smin
    hi = max(1.0, 2.0 * smin)
    grow = 0
    while _criterion_l2_at_s(p, c, hi) > 1.0:
        hi *= 2.0
        grow += 1
        if grow > 200:
            raise CriterionNeverReachesOne(
                f"l2 criterion stuck above 1 (value at s={hi}: "
                f"{_criterion_l2_at_s(p, c, hi)})"
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _criterion_l2_at_s(p, c, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    s_star = 0.5 * (lo + hi)
    return s_star, _f_edge(c, s_star)


def rho(p: AnisotropyVector) -> float:
    """Spectral radius (l2 operator norm) of the tree walk kernel."""
    return _rho_state(p)[1]


# ---------------------------------------------------------------------------
# Green function and word-space dynamic programming
# ---------------------------------------------------------------------------

def green_value(p: AnisotropyVector, g: ReducedWord) -> float:
    """Expected number of visits to ``g`` from the unit: R(e,e) * prod a_i."""
    if g.alphabet != p.alphabet:
        raise ValidationError("word alphabet does not match the jump law")
    prof = solve_gamma(p, 1.0)
    a = prof.r
    val = prof.ree
    for letter in g.letters:
        val *= a[letter - 1]
    return val


def word_distribution(p: AnisotropyVector, t: int, word_cap: int = DEFAULT_WORD_CAP):
    """Yield the exact law of the walk over reduced words at times 0..t.

    Words are encoded as bytes, head letter first.  Raises
    ``HorizonTooLarge`` when the reachable word count exceeds ``word_cap``.
    """
    inv = p.alphabet.involution
    support = [(i, float(p.masses[i - 1])) for i in p.alphabet.letters() if p.masses[i - 1] > 0]
    dist = {b"": 1.0}
    yield dist
    for _ in range(t):
        new: dict[bytes, float] = {}
        get = new.get
        for wb, mass in dist.items():
            head = wb[0] if wb else 0
            for i, pi in support:
                if head == inv[i - 1]:
                    nb = wb[1:]
                else:
                    nb = bytes((i,)) + wb
                new[nb] = get(nb, 0.0) + mass * pi
        if len(new) > word_cap:
            raise HorizonTooLarge(
                f"word distribution exceeds cap {word_cap} ({len(new)} words)"
            )
        dist = new
        yield dist


def dp_horizon(p: AnisotropyVector, word_cap: int = DEFAULT_WORD_CAP) -> int:
    """Largest horizon whose reachable word count stays within ``word_cap``."""
    inv = p.alphabet.involution
    support = p.support()
    counts = {i: 1 for i in support}
    total, t = 1 + len(support), 1
    if total > word_cap:
        return 0
    while True:
        new = {}
        for i in support:
            new[i] = sum(n for j, n in counts.items() if j != inv[i - 1])
        grown = sum(new.values())
        if total + grown > word_cap or grown == 0:
            return t
        total += grown
        counts = new
        t += 1
        if t > 10_000:
            return t


def uniform_target_series(
    d: int, target_len: int, horizon: int, weight: float = 1.0
) -> float:
    """sum_{t<=horizon} weight^(-t) P^t(e, g) for the uniform law, |g| = target_len.

    Independent combinatorial oracle: a dynamic program over pairs
    (distance to the root, length of the common suffix with the target),
    which is exact for the uniform jump law by symmetry of the tree.
    """
    L = target_len
    lmax = horizon + 1
    dp = np.zeros((lmax + 2, L + 1))
    dp[0, 0] = 1.0
    out = dp[L, L] if horizon >= 0 else 0.0
    total = float(out)
    wpow = 1.0
    for _ in range(horizon):
        wpow /= weight
        new = np.zeros_like(dp)
        # off-path states (l > m): cancel 1/d, extend (d-1)/d
        for m in range(L + 1):
            col = dp[:, m].copy()
            col[m] = 0.0  # on-path handled below
            new[m:-2, m] += col[m + 1 : -1] / d
            new[m + 2 :, m] += col[m + 1 : -1] * ((d - 1) / d)
        # on-path states (m, m)
        for m in range(L + 1):
            mass = dp[m, m]
            if mass == 0.0:
                continue
            if m < L:
                new[m + 1, m + 1] += mass / d  # along the geodesic
            if m > 0:
                new[m - 1, m - 1] += mass / d  # cancel toward the root
            off = (d - 1) if m in (0, L) else (d - 2)
            if m == 0 and L == 0:
                off = d  # target is the root itself: every letter leaves it
            new[m + 1, m] += mass * off / d
        dp = new
        total += wpow * float(dp[L, L])
    return total


# ---------------------------------------------------------------------------
# entropy rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    stderr: float
    method: str
    details: dict = field(default_factory=dict, repr=False)

    def __iter__(self):
        return iter((self.value, self.stderr))


def entropy(
    p: AnisotropyVector,
    method: str = "green",
    budget: int = 2000,
    walks: int = 200,
    seed: int = 0,
    word_cap: int = DEFAULT_WORD_CAP,
) -> EntropyEstimate:
    """Estimate the entropy rate of the tree walk.

    ``green``: Monte-Carlo average of -(1/t) sum log a_i over the letters of
    the reduced word at the horizon, with ``a_i = r_i`` at ``z = 1`` (the
    Green-metric weights).  ``budget`` is the horizon, ``walks`` the number
    of independent walks.

    ``dp``: exact word distribution up to ``t = budget`` and the Shannon
    entropy increment H(t) - H(t-1); the reported stderr is a convergence
    proxy from the drift of the last increments, not a sampling error.
    """
    rho_p = rho(p)
    if rho_p >= 1.0 - 1e-9:
        raise NotTransient(f"rho_p = {rho_p} is not below one")
    if method == "green":
        prof = solve_gamma(p, 1.0)
        log_a = np.zeros(p.d)
        pos = prof.r > 0
        log_a[pos] = np.log(prof.r[pos])
        t = int(budget)
        vals = np.empty(walks)
        for w, s in enumerate(spawn_seeds(seed, walks, 0x6772)):
            traj = _sample_letters_reduced(p, t, s)
            counts = np.bincount(traj, minlength=p.d + 1)[1:]
            vals[w] = -float(np.dot(counts, log_a)) / t
        stderr = float(np.std(vals, ddof=1) / math.sqrt(walks)) if walks > 1 else 0.0
        return EntropyEstimate(float(np.mean(vals)), stderr, "green",
                               {"walks": walks, "budget": t})
    if method == "dp":
        t = int(budget)
        if dp_horizon(p, word_cap) < t:
            raise HorizonTooLarge(f"dp horizon {t} exceeds word cap {word_cap}")
        ents = []
        for dist in word_distribution(p, t, word_cap):
            m = np.fromiter(dist.values(), dtype=float)
            m = m[m > 0]
            ents.append(-float(np.dot(m, np.log(m))))
        incs = np.diff(ents)
        # the increment approaches the rate like h + c/t; the Richardson
        # correction t*(inc_t - inc_{t-1}) sizes the remaining truncation bias
        drift = float(t * abs(incs[-1] - incs[-2])) if len(incs) >= 2 else math.inf
        extrap = float(incs[-1] + t * (incs[-1] - incs[-2])) if len(incs) >= 2 else None
        return EntropyEstimate(float(incs[-1]), drift, "dp",
                               {"increments": incs.tolist(), "budget": t,
                                "extrapolated": extrap})
    raise ValidationError(f"unknown entropy method {method!r}")


def _sample_letters_reduced(p: AnisotropyVector, t: int, seed: int) -> np.ndarray:
    """Letters of the reduced word after t steps (head first), as an array."""
    rng = rng_for(seed, 0x6c74)
    steps = rng.choice(np.arange(1, p.d + 1), size=t, p=p.masses)
    inv = p.alphabet.involution
    rev: list[int] = []
    for a in steps:
        a = int(a)
        if rev and rev[-1] == inv[a - 1]:
            rev.pop()
        else:
            rev.append(a)
    return np.array(rev[::-1], dtype=np.int64)


# ---------------------------------------------------------------------------
# the p -> p' transform
# ---------------------------------------------------------------------------

def transform_p_to_pprime(p: AnisotropyVector) -> AnisotropyVector:
    """The jump law ``p'`` whose edge-profile squares to the z=1 profile of p.

    ``p'_i`` is proportional to ``sqrt(a_i) / (1 - sqrt(a_i a_{i*}))`` with
    ``a_i = r_i`` at ``z = 1``.  The defining identity
    ``a_i(p) = b_i(p')^2`` (with ``b`` the profile of ``p'`` at its spectral
    radius) is re-verified numerically through the independent ``rho``
    computation; failure raises ``RoundTripResidualTooLarge``.
    """
    prof = solve_gamma(p, 1.0)
    a = prof.r
    inv = np.array(p.alphabet.involution) - 1
    ra = np.sqrt(a)
    w = ra / (1.0 - np.sqrt(a * a[inv]))
    pprime = AnisotropyVector(p.alphabet, w / w.sum())
    s_star, _ = _rho_state(pprime)
    b = pprime.masses * _gamma_from_s(pprime.pair_products(), s_star)
    resid = float(np.max(np.abs(a - b * b)))
    if resid > 1e-8:
        raise RoundTripResidualTooLarge(
            f"a_i(p) - b_i(p')^2 residual {resid:.3e} exceeds 1e-8", residual=resid
        )
    return pprime


# ---------------------------------------------------------------------------
# stopping set and backbone kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StoppingSet:
    """Super-level set U = {u(g) > 1/k} of the Green function, with boundary."""

    p: AnisotropyVector
    k: int
    members: dict = field(repr=False)   # word tuple -> u(g)
    boundary: dict = field(repr=False)  # word tuple -> u(g)
    green_at_e: float
    diameter: int
    c_fit: float  # fitted constant in #U <= C k log k

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def boundary_size(self) -> int:
        return len(self.boundary)


def build_stopping_set(
    p: AnisotropyVector, k: int, node_cap: int = 5_000_000
) -> StoppingSet:
    """Enumerate U = {g : u(g) > 1/k} by depth-first search on the prefix tree.

    Since every ``a_i < 1``, ``u`` shrinks along extensions, so the search
    prunes exactly at the boundary.  Boundary words are the one-letter
    extensions of members that fall outside U.
    """
    if k < 2:
        raise ValidationError(f"need k >= 2, got {k}")
    prof = solve_gamma(p, 1.0)
    a = prof.r
    ree = prof.ree
    inv = p.alphabet.involution
    threshold = (1.0 / k) * (1.0 + MEMBERSHIP_SLACK)
    members: dict[tuple, float] = {(): ree}
    boundary: dict[tuple, float] = {}
    stack: list[tuple[tuple, float]] = [((), ree)]
    while stack:
        word, u = stack.pop()
        head_star = inv[word[0] - 1] if word else 0
        for i in p.alphabet.letters():
            if i == head_star:
                continue
            u2 = u * a[i - 1]
            w2 = (i,) + word
            if u2 > threshold:
                members[w2] = u2
                stack.append((w2, u2))
                if len(members) > node_cap:
                    raise SetTooLarge(f"stopping set exceeds node cap {node_cap}")
            else:
                boundary[w2] = u2
    diameter = _tree_diameter(members, inv)
    c_fit = len(members) / (k * math.log(k))
    return StoppingSet(
        p=p, k=k, members=members, boundary=boundary,
        green_at_e=ree, diameter=diameter, c_fit=c_fit,
    )


def _tree_diameter(members: dict, inv: Sequence[int]) -> int:
    """Exact diameter of the (prefix-closed) member set via double BFS."""
    if len(members) <= 1:
        return 0
    children: dict[tuple, list[tuple]] = {w: [] for w in members}
    for w in members:
        if w:
            children[w[1:]].append(w)

    def bfs(start):
        depth = {start: 0}
        frontier = [start]
        far, fard = start, 0
        while frontier:
            nxt = []
            for v in frontier:
                nbrs = list(children[v])
                if v:
                    nbrs.append(v[1:])
                for u in nbrs:
                    if u not in depth:
                        depth[u] = depth[v] + 1
                        if depth[u] > fard:
                            far, fard = u, depth[u]
                        nxt.append(u)
            frontier = nxt
        return far, fard

    far, _ = bfs(())
    _, diam = bfs(far)
    return diam


@dataclass(frozen=True)
class BackboneKernel:
    """Exit law of the walk from U: q on the boundary, mean exit time."""

    k: int
    q: dict = field(repr=False)  # boundary word tuple -> probability
    mean_exit: float

    @property
    def max_q(self) -> float:
        return max(self.q.values()) if self.q else 0.0

    def total(self) -> float:
        return float(sum(self.q.values()))


def backbone_kernel(p: AnisotropyVector, stopping: StoppingSet) -> BackboneKernel:
    """Exact absorbing-chain solve for the exit law from the stopping set.

    Interior states are the members of U, absorbing states its boundary;
    one sparse solve gives the hitting distribution from the unit, a second
    the expected absorption time.  Verifies ``q_g <= 1/k`` for every g.
    """
    interior = list(stopping.members.keys())
    idx = {w: i for i, w in enumerate(interior)}
    bwords = list(stopping.boundary.keys())
    bidx = {w: i for i, w in enumerate(bwords)}
    inv = p.alphabet.involution
    n, m = len(interior), len(bwords)
    rows_a, cols_a, vals_a = [], [], []
    rows_b, cols_b, vals_b = [], [], []
    for w, i0 in idx.items():
        head_star = inv[w[0] - 1] if w else 0
        for i in p.alphabet.letters():
            pi = p.masses[i - 1]
            if pi == 0.0:
                continue
            w2 = w[1:] if i == head_star else (i,) + w
            j = idx.get(w2)
            if j is not None:
                rows_a.append(i0); cols_a.append(j); vals_a.append(pi)
            else:
                rows_b.append(i0); cols_b.append(bidx[w2]); vals_b.append(pi)
    A = sp.csr_matrix((vals_a, (rows_a, cols_a)), shape=(n, n))
    B = sp.csr_matrix((vals_b, (rows_b, cols_b)), shape=(n, m))
    M = sp.identity(n, format="csr") - A
    e0 = np.zeros(n)
    e0[idx[()]] = 1.0
    try:
        y = spla.spsolve(M.T.tocsr(), e0)
        texp = spla.spsolve(M, np.ones(n))
    except Exception as exc:  # pragma: no cover - SuperLU failure
        raise SingularSystem(str(exc)) from exc
    q = B.T @ y
    total = float(q.sum())
    if not np.isfinite(total) or abs(total - 1.0) > 1e-9:
        raise SingularSystem(f"exit law mass {total} (conditioning failure)")
    cap = 1.0 / stopping.k + 1e-12
    if float(q.max(initial=0.0)) > cap:
        raise NumericalError(
            f"exit mass {q.max():.3e} exceeds 1/k = {1.0 / stopping.k:.3e}"
        )
    return BackboneKernel(
        k=stopping.k,
        q={w: float(q[j]) for w, j in bidx.items()},
        mean_exit=float(texp[idx[()]]),
    )


def exit_time_ladder(
    p: AnisotropyVector, ks: Iterable[int], entropy_rate: float
) -> list[tuple[int, float, float]]:
    """Report E[exit time from U_k] against the entropic reference log(k)/h.

    Returns (k, mean exit, mean_exit * h / log k) rows; the ratio tends to one
    as k grows but carries finite-k slack, so it is reported, not asserted.
    """
    out = []
    for k in ks:
        bk = backbone_kernel(p, build_stopping_set(p, k))
        out.append((int(k), bk.mean_exit, bk.mean_exit * entropy_rate / math.log(k)))
    return out


# ---------------------------------------------------------------------------
# Haagerup bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HaagerupBounds:
    t: int
    lower: float  # rho_p
    upper: float  # min(1, (t+1)^(2/t) rho_p)
    l2_delta: float | None  # exact || P^t delta_e ||_2 when the DP fits

    def __iter__(self):
        return iter((self.lower, self.upper))


def haagerup_bounds(
    p: AnisotropyVector, t: int, word_cap: int = DEFAULT_WORD_CAP
) -> HaagerupBounds:
    """Sandwich for the t-th singular radius of the tree kernel.

    ``rho_p <= sigma_p(t) <= (t+1)^(2/t) rho_p`` (capped at one).  As a
    diagnostic, the exact l2 norm of ``P^t delta_e`` is computed by the word
    DP when feasible; it must not exceed ``rho_p^t``.
    """
    if t < 1:
        raise ValidationError("need t >= 1")
    rho_p = rho(p)
    upper = min(1.0, (t + 1) ** (2.0 / t) * rho_p)
    l2 = None
    if dp_horizon(p, word_cap) >= t:
        for step, dist in enumerate(word_distribution(p, t, word_cap)):
            if step == t:
                m = np.fromiter(dist.values(), dtype=float)
                l2 = float(np.sqrt(np.sum(m * m)))
    return HaagerupBounds(t=t, lower=rho_p, upper=upper, l2_delta=l2)


# ---------------------------------------------------------------------------
# word-integrability criterion and its transfer-operator twin
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferReport:
    criterion: float
    perron: float
    converges: bool
    class_weights: tuple

    def agree(self) -> bool:
        return (self.criterion < 1.0) == (self.perron < 1.0)


def integrability(alpha: Sequence[float], involution: Sequence[int]) -> TransferReport:
    """Decide summability of prod alpha_i over all reduced words.

    The direct criterion is ``sum_i alpha_i (1 - alpha_{i*}) /
    (1 - alpha_i alpha_{i*}) < 1``.  Independently, words are encoded as
    repetition-free words over the involution classes (a pair {i, i*}
    carries weight ``alpha_i/(1-alpha_i) + alpha_{i*}/(1-alpha_{i*})``, a
    fixed point just ``alpha_i``), and the Perron root of the class transfer
    matrix ``T[j, j'] = weight_{j'} (j != j')`` decides convergence.
    """
    alpha = np.asarray(alpha, dtype=float)
    d = len(alpha)
    inv = [int(x) for x in involution]
    if sorted(inv) != list(range(1, d + 1)) or any(inv[inv[i] - 1] != i + 1 for i in range(d)):
        raise ValidationError(f"{involution} is not an involution of 1..{d}")
    if np.any(alpha < 0) or np.any(alpha >= 1):
        raise ValidationError("alphas must lie in [0, 1)")
    astar = alpha[np.array(inv) - 1]
    criterion = float(np.sum(alpha * (1.0 - astar) / (1.0 - alpha * astar)))
    weights = []
    seen = set()
    for i in range(1, d + 1):
        if i in seen:
            continue
        j = inv[i - 1]
        seen.update((i, j))
        if i == j:
            weights.append(float(alpha[i - 1]))
        else:
            weights.append(float(alpha[i - 1] / (1 - alpha[i - 1])
                                 + alpha[j - 1] / (1 - alpha[j - 1])))
    g = np.array(weights)
    T = np.tile(g, (len(g), 1))
    np.fill_diagonal(T, 0.0)
    perron = float(np.max(np.abs(np.linalg.eigvals(T)))) if len(g) > 1 else 0.0
    return TransferReport(
        criterion=criterion, perron=perron,
        converges=criterion < 1.0, class_weights=tuple(weights),
    )


def level_sums(alpha: Sequence[float], involution: Sequence[int], max_len: int) -> np.ndarray:
    """Exact sums of prod alpha over reduced words of each length <= max_len."""
    alpha = np.asarray(alpha, dtype=float)
    d = len(alpha)
    inv = np.array([int(x) for x in involution]) - 1
    per_head = alpha.copy()
    out = [1.0, float(per_head.sum())]
    for _ in range(max_len - 1):
        total = per_head.sum()
        per_head = alpha * (total - per_head[inv])
        out.append(float(per_head.sum()))
    return np.array(out[: max_len + 1])


# ---------------------------------------------------------------------------
# domination of the backbone by the normalized resolvent series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DominationReport:
    k: int
    horizon: int
    c_hat: float
    min_rhs: float
    max_q: float
    per_boundary: dict = field(repr=False)  # word -> (q_g, rhs_g)


def domination_check(
    p: AnisotropyVector, k: int, word_cap: int = DEFAULT_WORD_CAP
) -> DominationReport:
    """Fitted constant for q_g <= C * k^(-1/2) sum_{t<=H} (P'/rho')^t (e,g).

    ``H = floor(log2 k)^4`` (base-2 so that small k already reach the
    boundary), the series runs over the transformed law ``p'``.  Exact fast
    paths cover non-backtracking laws and the uniform law; otherwise the
    word DP is used and ``DPBudgetExceeded`` signals an infeasible horizon.
    """
    ss = build_stopping_set(p, k)
    bk = backbone_kernel(p, ss)
    pp = transform_p_to_pprime(p)
    rho_pp = rho(pp)
    horizon = int(math.floor(math.log2(k))) ** 4
    series = _normalized_series(pp, rho_pp, list(ss.boundary.keys()), horizon, word_cap)
    per = {}
    c_hat = 0.0
    min_rhs = math.inf
    for w, qg in bk.q.items():
        rhs = series[w] / math.sqrt(k)
        per[w] = (qg, rhs)
        if rhs < min_rhs:
            min_rhs = rhs
        if qg > 0:
            c_hat = max(c_hat, qg / rhs) if rhs > 0 else math.inf
    return DominationReport(
        k=k, horizon=horizon, c_hat=c_hat, min_rhs=min_rhs,
        max_q=bk.max_q, per_boundary=per,
    )


def _normalized_series(
    p: AnisotropyVector, rho_p: float, targets: list[tuple], horizon: int, word_cap: int
) -> dict:
    """sum_{t<=horizon} rho^(-t) P^t(e, g) for each target word."""
    c = p.pair_products()
    out: dict[tuple, float] = {}
    if float(np.max(c)) == 0.0:
        # no backtracking: the walk hits g exactly at t = |g|, never again
        for w in targets:
            if len(w) <= horizon:
                val = 1.0
                for letter in w:
                    val *= p.masses[letter - 1]
                out[w] = val / rho_p ** len(w)
            else:
                out[w] = 0.0
        return out
    if np.allclose(p.masses, 1.0 / p.d, atol=1e-14):
        by_len: dict[int, float] = {}
        for w in targets:
            L = len(w)
            if L not in by_len:
                by_len[L] = uniform_target_series(p.d, L, horizon, weight=rho_p)
            out[w] = by_len[L]
        return out
    if dp_horizon(p, word_cap) < horizon:
        raise DPBudgetExceeded(
            f"horizon {horizon} needs more than {word_cap} words for this law"
        )
    keys = {bytes(w): w for w in targets}
    out = {w: 0.0 for w in targets}
    wpow = 1.0
    for t, dist in enumerate(word_distribution(p, horizon, word_cap)):
        if t > 0:
            wpow /= rho_p
        for kb, w in keys.items():
            mass = dist.get(kb)
            if mass:
                out[w] += wpow * mass
    return out


# ---------------------------------------------------------------------------
# summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSummary:
    rho_prime: float
    rho: float
    entropy: float
    entropy_stderr: float
    avez_bound: float  # -2 log rho

    def __post_init__(self):
        if self.rho_prime > self.rho + 1e-10 or self.rho >= 1.0:
            raise NumericalError(
                f"need rho' <= rho < 1, got {self.rho_prime}, {self.rho}"
            )
        if self.entropy < self.avez_bound - 3.0 * self.entropy_stderr - 1e-9:
            raise NumericalError(
                f"entropy {self.entropy} below Avez bound {self.avez_bound}"
            )


def spectral_summary(
    p: AnisotropyVector, seed: int = 0, walks: int = 200, budget: int = 2000
) -> SpectralSummary:
    """Bundle rho', rho and the Monte-Carlo entropy with the Avez check."""
    rp = rho_prime(p)
    r = rho(p)
    est = entropy(p, method="green", budget=budget, walks=walks, seed=seed)
    return SpectralSummary(
        rho_prime=rp, rho=r, entropy=est.value,
        entropy_stderr=est.stderr, avez_bound=-2.0 * math.log(r),
    )
