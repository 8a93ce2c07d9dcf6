"""Mixing measurement on finite graphs: exact TV curves, singular radii,
non-backtracking operators, stopping-time bounds, and cutoff experiments.

All distribution propagation is exact (dense vectors, matrix-free kernel
applies), which removes estimator bias near the cutoff at O(t n d) cost.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    DominationViolated,
    NotMixedByHorizon,
    NotSimpleGraph,
    NotUniformWeights,
    StopSpecUnbounded,
    TooLargeForDense,
    ValidationError,
)
from .group_core import AnisotropyVector, make_alphabet, identity_involution, uniform_vector
from .rng import rng_for
from .schreier_graphs import (
    FiniteKernel,
    ScalarKernel,
    SchreierGraph,
    is_simple,
    k4_base,
    kernel,
    lift_kernel,
    random_lift,
    random_schreier,
    srw_weights,
)
from . import tree_calculus

__all__ = [
    "DistributionVector",
    "MixingCurve",
    "SpectrumReport",
    "SingularRadiusResult",
    "StopSpec",
    "StoppingBoundReport",
    "KappaReport",
    "CutoffConfig",
    "CellResult",
    "propagate",
    "tv_distance",
    "mixing_time",
    "tv_curve",
    "singular_radius_t",
    "geronimus",
    "geronimus_value",
    "nonbacktracking_dist",
    "nonbacktracking_counts_bruteforce",
    "nb_spectral_radius_bound",
    "stopping_bound_check",
    "kappa_bound_check",
    "spectrum_report",
    "cutoff_experiment",
    "gaussian_tail_quantile",
    "phi_profile",
    "srw_entropy_rate",
]


# ---------------------------------------------------------------------------
# exact propagation and total variation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistributionVector:
    """A distribution over the state space at a given time."""

    masses: np.ndarray = field(repr=False)
    time: int

    def __post_init__(self):
        s = float(self.masses.sum())
        if abs(s - 1.0) > 1e-10:
            raise ValidationError(f"distribution mass {s} drifted from 1")


def propagate(k: FiniteKernel, x0: int, t: int) -> DistributionVector:
    """Exact law of the walk after ``t`` steps from the point mass at x0."""
    if t < 0:
        raise ValidationError("need t >= 0")
    v = np.zeros(k.n_states)
    v[x0] = 1.0
    for _ in range(t):
        v = k.apply_dist(v)
    return DistributionVector(masses=v, time=t)


def tv_distance(dist: np.ndarray | DistributionVector, stationary: np.ndarray) -> float:
    m = dist.masses if isinstance(dist, DistributionVector) else dist
    return 0.5 * float(np.sum(np.abs(m - stationary)))


def tv_curve(
    k: FiniteKernel,
    x0: int,
    t_max: int,
    stop_below: float | None = None,
) -> np.ndarray:
    """TV distance to stationarity for t = 0..t_max (stops early once the
    curve falls below ``stop_below``, if given)."""
    v = np.zeros(k.n_states)
    v[x0] = 1.0
    out = [tv_distance(v, k.pi)]
    for _ in range(t_max):
        v = k.apply_dist(v)
        out.append(tv_distance(v, k.pi))
        if stop_below is not None and out[-1] < stop_below:
            break
    return np.array(out)


def _parity_suspected(k: FiniteKernel, x0: int, probes: int = 8) -> bool:
    """Support-parity alternation test over a few steps (bipartite signal)."""
    v = np.zeros(k.n_states)
    v[x0] = 1.0
    prev = v > 1e-15
    for _ in range(probes):
        v = k.apply_dist(v)
        cur = v > 1e-15
        if np.any(prev & cur):
            return False
        prev = cur
    return True


def mixing_time(k: FiniteKernel, x0: int, eps: float, t_max: int) -> int:
    """First t with d(x0, t) < eps; raises ``NotMixedByHorizon`` otherwise,
    flagging support-parity alternation (periodicity) when detected."""
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")
    v = np.zeros(k.n_states)
    v[x0] = 1.0
    tv = tv_distance(v, k.pi)
    if tv < eps:
        return 0
    for t in range(1, t_max + 1):
        v = k.apply_dist(v)
        tv = tv_distance(v, k.pi)
        if tv < eps:
            return t
    raise NotMixedByHorizon(
        f"d(x, t) = {tv:.4f} >= {eps} for all t <= {t_max}",
        horizon=t_max,
        parity_suspected=_parity_suspected(k, x0),
        last_tv=tv,
    )


# ---------------------------------------------------------------------------
# singular radii by matrix-free power iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SingularRadiusResult:
    value: float
    t: int
    converged: bool
    iterations: int

    def __float__(self):
        return self.value


def _project_out_ones(f: np.ndarray, pi: np.ndarray) -> np.ndarray:
    return f - float(np.dot(pi, f))


def singular_radius_t(
    k: FiniteKernel, t: int, iters: int = 5000, seed: int = 0, tol: float = 1e-9
) -> SingularRadiusResult:
    """t-th singular radius ``||(P^t)|_{1^perp}||^(1/t)`` in l2(pi).

    Power iteration on ``f -> (P^t)* (P^t) f`` with re-orthogonalization
    against the constants at every application, and a convergence
    certificate on the last two Rayleigh quotients.  On a stall the best
    estimate is returned with ``converged = False``.
    """
    if t < 1:
        raise ValidationError("need t >= 1")
    rng = rng_for(seed, 0x7372, t)
    pi = k.pi
    f = _project_out_ones(rng.standard_normal(k.n_states), pi)
    f /= math.sqrt(float(np.dot(pi, f * f)))
    last = math.inf
    lam = 0.0
    its = 0
    for its in range(1, iters + 1):
        g = f
        for _ in range(t):
            g = _project_out_ones(k.apply_fun(g), pi)
        lam = float(np.dot(pi, g * g))  # ||P^t f||^2 in l2(pi)
        h = g
        for _ in range(t):
            h = _project_out_ones(k.apply_adjoint_fun(h), pi)
        nrm = math.sqrt(float(np.dot(pi, h * h)))
        if nrm == 0.0 or lam == 0.0:
            return SingularRadiusResult(0.0, t, True, its)
        f = h / nrm
        if abs(lam - last) <= tol * max(1.0, lam):
            return SingularRadiusResult(lam ** (0.5 / t), t, True, its)
        last = lam
    return SingularRadiusResult(lam ** (0.5 / t), t, False, its)


# ---------------------------------------------------------------------------
# non-backtracking operators and their polynomials
# ---------------------------------------------------------------------------

def geronimus(d: int, k: int) -> list[Fraction]:
    """Exact coefficients (ascending degree) of the degree-k polynomial
    mapping the SRW kernel to the k-step non-backtracking kernel.

    Recursion: p_0 = 1, p_1 = x,
    p_{k+1} = (d/(d-1)) x p_k - (1/(d-1)) p_{k-1}.
    """
    if d < 3 or k < 0:
        raise ValidationError("need d >= 3 and k >= 0")
    p_prev = [Fraction(1)]
    if k == 0:
        return p_prev
    p_cur = [Fraction(0), Fraction(1)]
    a, b = Fraction(d, d - 1), Fraction(1, d - 1)
    for _ in range(k - 1):
        shifted = [Fraction(0)] + p_cur
        nxt = [a * c for c in shifted]
        for i, c in enumerate(p_prev):
            nxt[i] -= b * c
        p_prev, p_cur = p_cur, nxt
    return p_cur


def geronimus_value(d: int, k: int, x: float) -> float:
    """Evaluate the non-backtracking polynomial at a point (float)."""
    coeffs = geronimus(d, k)
    out = 0.0
    for c in reversed(coeffs):
        out = out * x + float(c)
    return out


def _require_srw(k: FiniteKernel) -> SchreierGraph:
    if not isinstance(k, ScalarKernel):
        raise NotUniformWeights("non-backtracking operators need a scalar SRW kernel")
    d = k.graph.alphabet.d
    if not np.allclose(k.weights.masses, 1.0 / d, atol=1e-14):
        raise NotUniformWeights("non-backtracking operators require uniform weights")
    if not is_simple(k.graph):
        raise NotSimpleGraph("non-backtracking operators require a simple graph")
    return k.graph


def nonbacktracking_dist(k: FiniteKernel, x0: int, steps: int, exact: bool = False):
    """Law of the k-step non-backtracking walk from x0, matrix-free.

    Uses the three-term vector recursion
    ``q_{j+1} = (d/(d-1)) q_j P - (1/(d-1)) q_{j-1}``; never forms dense
    polynomials of P.  With ``exact=True`` the recursion runs in rational
    arithmetic and a list of Fractions is returned.
    """
    graph = _require_srw(k)
    if steps < 0:
        raise ValidationError("need k >= 0")
    d = graph.alphabet.d
    if exact:
        n = graph.n
        prev = [Fraction(0)] * n
        prev[x0] = Fraction(1)
        if steps == 0:
            return prev
        cur = _apply_dist_exact(graph, prev)
        a, b = Fraction(d, d - 1), Fraction(1, d - 1)
        for _ in range(steps - 1):
            stepped = _apply_dist_exact(graph, cur)
            nxt = [a * s - b * p for s, p in zip(stepped, prev)]
            prev, cur = cur, nxt
        return cur
    prev = np.zeros(k.n_states)
    prev[x0] = 1.0
    if steps == 0:
        return DistributionVector(masses=prev, time=0)
    cur = k.apply_dist(prev)
    a, b = d / (d - 1.0), 1.0 / (d - 1.0)
    for _ in range(steps - 1):
        nxt = a * k.apply_dist(cur) - b * prev
        prev, cur = cur, nxt
    return DistributionVector(masses=cur, time=steps)


def _apply_dist_exact(graph: SchreierGraph, v: list[Fraction]) -> list[Fraction]:
    d, n = graph.alphabet.d, graph.n
    out = [Fraction(0)] * n
    w = Fraction(1, d)
    for i in range(d):
        perm = graph.perms[i]
        for y in range(n):
            out[y] += w * v[perm[y]]
    return out


def nonbacktracking_counts_bruteforce(graph: SchreierGraph, steps: int) -> np.ndarray:
    """Integer counts of non-backtracking paths of length ``steps`` between
    all vertex pairs, by direct enumeration (simple graphs only)."""
    if not is_simple(graph):
        raise NotSimpleGraph("brute-force path counting requires a simple graph")
    n = graph.n
    nbrs = [graph.neighbors(x) for x in range(n)]
    counts = np.zeros((n, n), dtype=np.int64)
    for x in range(n):
        if steps == 0:
            counts[x, x] = 1
            continue
        stack = [(x, None, 0)]
        while stack:
            v, prev, depth = stack.pop()
            if depth == steps:
                counts[x, v] += 1
                continue
            for w in nbrs[v]:
                if prev is not None and w == prev:
                    continue
                stack.append((w, v, depth + 1))
    return counts


def nb_spectral_radius_bound(d: int, k: int, eta: float) -> float:
    """The bound ``(d-1)^(-k/2) U_k(1 + eta)`` on the non-trivial spectrum of
    the k-step non-backtracking operator (Chebyshev second kind; cosh branch
    for arguments above one, ``U_k(1) = k + 1`` at the edge)."""
    if eta < 0:
        raise ValidationError("need eta >= 0")
    x = 1.0 + eta
    if x > 1.0:
        theta = math.acosh(x)
        u = math.sinh((k + 1) * theta) / math.sinh(theta)
    else:
        u = k + 1.0
    return (d - 1) ** (-k / 2.0) * u


# ---------------------------------------------------------------------------
# stopping-time mixing bound (exact small-instance verifier)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StopSpec:
    """Either the exit time from a declared vertex subset or a fixed time."""

    kind: str  # "exit_set" | "deterministic"
    subset: tuple = ()
    time: int = 0

    @staticmethod
    def exit_from(subset) -> "StopSpec":
        return StopSpec(kind="exit_set", subset=tuple(sorted(set(subset))))

    @staticmethod
    def at_time(t: int) -> "StopSpec":
        return StopSpec(kind="deterministic", time=int(t))


@dataclass(frozen=True)
class StoppingBoundReport:
    t: int
    s: int
    lhs: float
    nu_term: float
    tail_prob: float
    sigma_s: float
    bound_general: float
    bound_reversible: float | None
    holds_general: bool
    holds_reversible: bool | None


def _stationary_of(P: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.abs(np.real(vecs[:, idx]))
    return pi / pi.sum()


def _sigma_dense(P: np.ndarray, pi: np.ndarray, s: int) -> float:
    """s-th singular radius of a dense chain in l2(pi)."""
    rt = np.sqrt(pi)
    Ps = np.linalg.matrix_power(P, s)
    M = (rt[:, None] * Ps) / rt[None, :]
    proj = np.eye(len(pi)) - np.outer(rt, rt)
    sv = np.linalg.svd(proj @ M @ proj, compute_uv=False)
    return float(sv[0]) ** (1.0 / s)


def stopping_bound_check(
    P: np.ndarray, x0: int, spec: StopSpec, t: int, s: int
) -> StoppingBoundReport:
    """Exact check of the stopping-time mixing bound on a small dense chain.

    LHS is ``||P^(t+s)(x,.) - pi||_TV``; the RHS adds the TV gap of the law
    of the stopped state, the tail probability of the stopping time, and the
    singular-radius term ``2 (1 - sigma(s))^(-1/3) sigma(s)^(2s/3)`` (the
    reversible variant uses ``3 rho^(2s/3)``).
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    if n > 200:
        raise ValidationError("dense verifier is limited to n <= 200")
    if t < 1 or s < 1:
        raise ValidationError("need t, s >= 1")
    pi = _stationary_of(P)
    delta = np.zeros(n)
    delta[x0] = 1.0
    lhs_vec = delta @ np.linalg.matrix_power(P, t + s)
    lhs = 0.5 * float(np.abs(lhs_vec - pi).sum())

    if spec.kind == "deterministic":
        nu = delta @ np.linalg.matrix_power(P, spec.time)
        tail = 1.0 if spec.time > t else 0.0
    elif spec.kind == "exit_set":
        inside = np.zeros(n, dtype=bool)
        inside[list(spec.subset)] = True
        if inside.all():
            raise StopSpecUnbounded("exit set equals the whole space")
        if not inside[x0]:
            nu = delta.copy()
            tail = 0.0
        else:
            W = np.flatnonzero(inside)
            comp = np.flatnonzero(~inside)
            A = P[np.ix_(W, W)]
            B = P[np.ix_(W, comp)]
            solve = np.linalg.solve(np.eye(len(W)) - A, np.eye(len(W)))
            start = np.zeros(len(W))
            start[list(W).index(x0)] = 1.0
            hit = (start @ solve) @ B
            nu = np.zeros(n)
            nu[comp] = hit
            surv = start.copy()
            for _ in range(t):
                surv = surv @ A
            tail = float(surv.sum())
    else:
        raise ValidationError(f"unknown stop spec kind {spec.kind!r}")

    nu_term = 0.5 * float(np.abs(nu - pi).sum())
    sig = _sigma_dense(P, pi, s)
    sig = min(sig, 1.0 - 1e-15)
    bound = nu_term + tail + 2.0 * (1.0 - sig) ** (-1.0 / 3.0) * sig ** (2.0 * s / 3.0)
    reversible = bool(np.max(np.abs(pi[:, None] * P - (pi[:, None] * P).T)) < 1e-12)
    bound_rev = None
    holds_rev = None
    if reversible:
        rho1 = _sigma_dense(P, pi, 1)
        bound_rev = nu_term + tail + 3.0 * rho1 ** (2.0 * s / 3.0)
        holds_rev = lhs <= bound_rev + 1e-12
    return StoppingBoundReport(
        t=t, s=s, lhs=lhs, nu_term=nu_term, tail_prob=tail, sigma_s=sig,
        bound_general=bound, bound_reversible=bound_rev,
        holds_general=lhs <= bound + 1e-12, holds_reversible=holds_rev,
    )


# ---------------------------------------------------------------------------
# contraction of spread-out functions under a dominated kernel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KappaReport:
    c: float
    u: float
    sigma_b: float
    bound: float
    max_ratio: float
    trials_run: int
    holds: bool


def kappa_bound_check(
    A: np.ndarray, B: np.ndarray, c: float, u: float, trials: int, seed: int,
    extra_vectors: Sequence[np.ndarray] = (),
) -> KappaReport:
    """Randomized falsification of ``kappa_u(A) <= c sigma(B) + c/u``.

    Requires the entrywise domination ``|A| <= c B`` (checked first, raising
    ``DominationViolated`` with the offending entry) and bistochastic ``B``.
    Test vectors f are sparse Gaussian draws with
    ``||f||_2 >= (u/sqrt(n)) ||f||_1``; rows of A satisfying the constraint
    can be supplied through ``extra_vectors``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if not (1.0 <= u <= math.sqrt(n) + 1e-9):
        raise ValidationError("need 1 <= u <= sqrt(n)")
    bad = np.abs(A) - c * B
    if bad.max() > 1e-12:
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        raise DominationViolated(
            f"|A| <= c B fails at ({i},{j}): {abs(A[i, j])} > {c * B[i, j]}",
            entry=(int(i), int(j)),
        )
    if np.max(np.abs(B.sum(axis=0) - 1)) > 1e-10 or np.max(np.abs(B.sum(axis=1) - 1)) > 1e-10:
        raise ValidationError("B is not bistochastic")
    pi = np.full(n, 1.0 / n)
    sigma_b = _sigma_dense(B, pi, 1)
    bound = c * sigma_b + c / u
    rng = rng_for(seed, 0x6b70)
    m = max(1, int(n / (u * u)))
    max_ratio = 0.0
    ran = 0
    vectors = list(extra_vectors)
    while ran < trials:
        f = np.zeros(n)
        supp = rng.choice(n, size=m, replace=False)
        f[supp] = rng.standard_normal(m)
        l1, l2 = float(np.abs(f).sum()), float(np.sqrt(np.dot(f, f)))
        if l2 == 0.0 or l2 < (u / math.sqrt(n)) * l1:
            continue
        vectors.append(f)
        ran += 1
    for f in vectors:
        l1, l2 = float(np.abs(f).sum()), float(np.sqrt(np.dot(f, f)))
        if l2 == 0.0 or l2 < (u / math.sqrt(n)) * l1 - 1e-12:
            continue
        ratio = float(np.linalg.norm(A @ f)) / l2
        max_ratio = max(max_ratio, ratio)
    return KappaReport(
        c=c, u=u, sigma_b=sigma_b, bound=bound, max_ratio=max_ratio,
        trials_run=ran, holds=max_ratio <= bound + 1e-9,
    )


# ---------------------------------------------------------------------------
# dense spectrum report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    n_states: int
    reversible: bool
    rho_reference: float | None
    delta: float
    spectrum: np.ndarray = field(repr=False)  # eigenvalues or singular values
    rho_n: float | None = None  # largest nontrivial |eigenvalue| (reversible path)
    sigma_t: dict = field(default_factory=dict)  # t -> t-th singular radius
    outliers: tuple = ()
    outlier_bounds: tuple = ()  # log-log density bound evaluated at each outlier
    i_hat: tuple = ()  # (u, value or None) pairs on a grid

    @property
    def outlier_count(self) -> int:
        return len(self.outliers)


def spectrum_report(
    k: FiniteKernel, delta: float = 0.05, rho: float | None = None,
    dense_cap: int = 4000, sigma_ts: Sequence[int] = (),
) -> SpectrumReport:
    """Dense spectral diagnostic for small kernels.

    Reversible kernels get a full eigendecomposition; otherwise singular
    values are reported.  Eigenvalues outside ``[-rho-delta, rho+delta]``
    (one trivial top value removed) are flagged as outliers, each with the
    log-log eigenvalue-density bound evaluated at its magnitude.
    """
    n = k.n_states
    if n > dense_cap:
        raise TooLargeForDense(f"n = {n} exceeds the dense cap {dense_cap}")
    if rho is None:
        if isinstance(k, ScalarKernel):
            rho = tree_calculus.rho(k.weights)
        else:
            raise ValidationError("rho reference required for non-scalar kernels")
    P = k.to_dense()
    pi = k.pi
    rt = np.sqrt(pi)
    M = (rt[:, None] * P) / rt[None, :]
    reversible = bool(np.max(np.abs(M - M.T)) < 1e-10)
    if reversible:
        spec = np.linalg.eigvalsh(M)
    else:
        spec = np.linalg.svd(M, compute_uv=False)
    spec = np.sort(spec)[::-1]
    nontrivial = np.delete(spec, int(np.argmin(np.abs(spec - 1.0))))
    mask = np.abs(nontrivial) > rho + delta
    outliers = tuple(float(x) for x in nontrivial[mask])
    d = k.graph.alphabet.d if isinstance(k, ScalarKernel) else None
    bounds = []
    for lam in outliers:
        ratio = abs(lam) / rho
        if d is not None and ratio > 1.0:
            bounds.append(1.0 - 2.0 * math.log(ratio + math.sqrt(ratio * ratio - 1.0))
                          / math.log(d - 1))
        else:
            bounds.append(None)
    grid = []
    eps = 0.02
    for u in np.arange(0.0, 1.0001, 0.02):
        cnt = int(np.sum(np.abs(np.abs(nontrivial) - u) < eps))
        grid.append((float(u), math.log(cnt) / math.log(n) if cnt else None))
    rho_n = float(np.max(np.abs(nontrivial))) if (reversible and len(nontrivial)) else None
    sig = {int(t): _sigma_dense(P, pi, int(t)) for t in sigma_ts}
    return SpectrumReport(
        n_states=n, reversible=reversible, rho_reference=float(rho), delta=delta,
        spectrum=spec, rho_n=rho_n, sigma_t=sig,
        outliers=outliers, outlier_bounds=tuple(bounds), i_hat=tuple(grid),
    )


# ---------------------------------------------------------------------------
# cutoff experiments
# ---------------------------------------------------------------------------

def srw_entropy_rate(d: int) -> float:
    """Entropy rate of the simple random walk on the d-regular tree."""
    return (d - 2) * math.log(d - 1) / d


def gaussian_tail_quantile(eps: float) -> float:
    """q with P[Z >= q] = eps, by bisection on the erfc tail."""
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie in (0, 1)")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 0.5 * math.erfc(mid / math.sqrt(2.0)) > eps:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phi_profile(eps: float, d: int) -> float:
    """Second-order profile coefficient: inverse of
    s -> P[Z >= (d-2)^(3/2) s / (2 sqrt(d(d-1)))]."""
    c = (d - 2) ** 1.5 / (2.0 * math.sqrt(d * (d - 1)))
    return gaussian_tail_quantile(eps) / c


@dataclass(frozen=True)
class MixingCurve:
    """Sampled TV curve from one start, with mixing times and predictions."""

    start: int
    tvs: np.ndarray = field(repr=False)
    mix_times: dict = field(default_factory=dict)  # eps -> t or None
    prediction: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.tvs < -1e-12) or np.any(self.tvs > 1.0 + 1e-12):
            raise ValidationError("TV values must lie in [0, 1]")
        eps_sorted = sorted(self.mix_times)
        ts = [self.mix_times[e] for e in eps_sorted if self.mix_times[e] is not None]
        if any(b > a for a, b in zip(ts, ts[1:])):
            raise ValidationError("mixing time must be non-increasing in eps")


def _mix_times_from_curve(tvs: np.ndarray, eps_list: Sequence[float]) -> dict:
    out = {}
    for eps in eps_list:
        idx = np.flatnonzero(tvs < eps)
        out[float(eps)] = int(idx[0]) if len(idx) else None
    return out


@dataclass(frozen=True)
class CutoffConfig:
    family: str  # "schreier" | "lift" | "explicit-file"
    sizes: tuple
    seeds: tuple
    eps: tuple = (0.25, 0.1, 0.9)
    d: int = 3
    involution: tuple | None = None  # None means identity
    p_masses: tuple | None = None    # None means uniform
    worst_of: int = 16
    horizon_factor: float = 3.0
    root_seed: int = 0
    entropy_rate: float | None = None  # None: closed form for SRW, MC otherwise
    entropy_walks: int = 256
    entropy_budget: int = 1500
    graph_file: str | None = None  # explicit-file family only

    def __post_init__(self):
        if self.family not in ("schreier", "lift", "explicit-file"):
            raise ValidationError(f"unknown family {self.family!r}")
        if self.family == "explicit-file":
            import os
            if not self.graph_file or not os.path.exists(self.graph_file):
                raise ValidationError(
                    f"explicit-file family needs an existing graph file, "
                    f"got {self.graph_file!r}"
                )
        if list(self.sizes) != sorted(self.sizes):
            raise ValidationError("sizes must be ascending")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValidationError("seeds must be distinct")


@dataclass(frozen=True)
class CellResult:
    n: int
    seed: int
    n_states: int
    entropy_rate: float
    entropic_time: float
    starts: tuple
    curves: dict = field(repr=False)      # start -> MixingCurve
    mix_times: dict = field(repr=False)   # start -> {eps: t or None}
    worst_mix: dict = field(repr=False)   # eps -> t or None (max over starts)
    prediction: dict = field(default_factory=dict)

    def ratio(self, eps: float) -> float | None:
        t = self.worst_mix.get(eps)
        if t is None:
            return None
        return t / math.log(self.n_states)

    def width(self, lo_eps: float = 0.1, hi_eps: float = 0.9) -> float | None:
        tlo, thi = self.worst_mix.get(lo_eps), self.worst_mix.get(hi_eps)
        if tlo is None or thi is None or tlo == 0:
            return None
        return (tlo - thi) / tlo


def _resolve_entropy_rate(cfg: CutoffConfig) -> tuple[float, AnisotropyVector | None]:
    if cfg.family == "lift":
        base = k4_base()
        deg = base.degrees()
        if cfg.entropy_rate is not None:
            return cfg.entropy_rate, None
        if np.all(deg == deg[0]):
            return srw_entropy_rate(int(deg[0])), None
        raise ValidationError("entropy_rate must be given for irregular lift bases")
    if cfg.family == "explicit-file":
        from .schreier_graphs import load_graph
        graph = load_graph(cfg.graph_file)
        alphabet = graph.alphabet
    else:
        inv = cfg.involution if cfg.involution is not None else identity_involution(cfg.d)
        alphabet = make_alphabet(cfg.d, inv)
    if cfg.p_masses is None:
        p = uniform_vector(alphabet)
    else:
        p = AnisotropyVector(alphabet, np.asarray(cfg.p_masses, dtype=float))
    if cfg.entropy_rate is not None:
        return cfg.entropy_rate, p
    if np.allclose(p.masses, 1.0 / alphabet.d, atol=1e-14):
        return srw_entropy_rate(alphabet.d), p
    est = tree_calculus.entropy(
        p, method="green", budget=cfg.entropy_budget, walks=cfg.entropy_walks,
        seed=cfg.root_seed,
    )
    return est.value, p


def _build_kernel(cfg: CutoffConfig, p: AnisotropyVector | None, n: int, seed: int):
    if cfg.family == "lift":
        base = k4_base()
        lift = random_lift(base, n, seed)
        return lift_kernel(lift, srw_weights(base)), lift.n_states
    if cfg.family == "explicit-file":
        from .schreier_graphs import load_graph
        graph = load_graph(cfg.graph_file)
        return kernel(graph, p), graph.n
    graph = random_schreier(p.alphabet, n, seed)
    return kernel(graph, p), n


def _run_cell(cfg: CutoffConfig, h: float, p, n: int, seed: int) -> CellResult:
    k, n_states = _build_kernel(cfg, p, n, seed)
    t_entropic = math.log(n_states) / h
    t_max = int(math.ceil(cfg.horizon_factor * t_entropic)) + 10
    rng = rng_for(cfg.root_seed, 0xce11, n, seed)
    pool = rng.choice(n_states, size=min(cfg.worst_of, n_states), replace=False)
    starts = tuple(dict.fromkeys([0] + [int(x) for x in pool]))
    eps_list = tuple(float(e) for e in cfg.eps)
    floor_eps = 0.5 * min(eps_list)
    prediction = {
        "entropy_rate": h,
        "entropic_time": t_entropic,
        "log_states": math.log(n_states),
    }
    if cfg.family == "lift" or cfg.p_masses is None:
        d = 3 if cfg.family == "lift" else cfg.d
        prediction["srw_leading"] = d / ((d - 2) * math.log(d - 1)) * math.log(n_states)
        prediction["srw_profile"] = {
            float(e): prediction["srw_leading"]
            + phi_profile(e, d) * math.sqrt(math.log(n_states))
            for e in eps_list
        }
    curves, mixes = {}, {}
    for x0 in starts:
        tvs = tv_curve(k, x0, t_max, stop_below=floor_eps)
        mt = _mix_times_from_curve(tvs, eps_list)
        curves[x0] = MixingCurve(start=x0, tvs=tvs, mix_times=mt,
                                 prediction=prediction)
        mixes[x0] = mt
    worst = {}
    for eps in eps_list:
        vals = [mixes[x][eps] for x in starts]
        worst[eps] = None if any(v is None for v in vals) else max(vals)
    return CellResult(
        n=n, seed=seed, n_states=n_states, entropy_rate=h,
        entropic_time=t_entropic, starts=starts, curves=curves,
        mix_times=mixes, worst_mix=worst, prediction=prediction,
    )


def cutoff_experiment(cfg: CutoffConfig, threads: int = 1) -> list[CellResult]:
    """Run every (size, seed) cell of the experiment; deterministic given the
    config (results are keyed by cell, never by execution order)."""
    h, p = _resolve_entropy_rate(cfg)
    cells = [(n, seed) for n in cfg.sizes for seed in cfg.seeds]
    if threads <= 1:
        results = [_run_cell(cfg, h, p, n, seed) for n, seed in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {(n, seed): pool.submit(_run_cell, cfg, h, p, n, seed)
                       for n, seed in cells}
        results = [futures[key].result() for key in cells]
    return results
