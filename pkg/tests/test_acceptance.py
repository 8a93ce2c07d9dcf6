"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see every line.
The heavy experiments (cutoff cells) are computed once in module fixtures.
"""

import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import anisowalk as aw
from anisowalk import (
    CutoffConfig,
    StopSpec,
    cutoff_experiment,
    kernel,
    mixing_time,
    singular_radius_t,
    stopping_bound_check,
    uniform_vector,
)
from anisowalk.cli import main as cli_main
from anisowalk.mixing_lab import (
    geronimus,
    nonbacktracking_counts_bruteforce,
    nonbacktracking_dist,
)
from anisowalk.schreier_graphs import random_schreier
from anisowalk.tree_calculus import _criterion_l1, _criterion_l2

from helpers import (
    ALPHA3,
    P3_UNIFORM,
    P4_ASYM,
    k4_graph,
    seeded_laws,
    simple_random_cubic,
)


def check(name: str, ok: bool, detail: str = ""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


# --- shared experiments -------------------------------------------------

@pytest.fixture(scope="module")
def srw_cells():
    cfg = CutoffConfig(family="schreier", sizes=(1024, 4096, 16384), seeds=(1, 2, 3),
                       eps=(0.25, 0.1, 0.9), d=3, worst_of=16, root_seed=0)
    return cfg, cutoff_experiment(cfg, threads=4)


@pytest.fixture(scope="module")
def aniso_cells():
    cfg = CutoffConfig(family="schreier", sizes=(16384,), seeds=(1,),
                       eps=(0.25, 0.1, 0.9), d=4, involution=(2, 1, 4, 3),
                       p_masses=(0.35, 0.35, 0.15, 0.15), worst_of=16, root_seed=0)
    return cfg, cutoff_experiment(cfg, threads=4)


@pytest.fixture(scope="module")
def lift_cells():
    cfg = CutoffConfig(family="lift", sizes=(256, 1024, 4096), seeds=(1,),
                       eps=(0.25, 0.1, 0.9), worst_of=16, root_seed=0)
    return cfg, cutoff_experiment(cfg, threads=4)


# --- criteria -----------------------------------------------------------

def test_tree_calculus_closed_forms():
    ok = True
    for d in range(3, 9):
        p = uniform_vector(aw.make_alphabet(d, aw.identity_involution(d)))
        ok &= abs(aw.rho_prime(p) - 2 * math.sqrt(d - 1) / d) < 1e-10
    ok_rho = abs(aw.rho(P4_ASYM) - math.sqrt(0.5)) < 1e-8
    t0 = time.time()
    est = aw.entropy(P3_UNIFORM, method="green", budget=2000, walks=200, seed=0)
    green_time = time.time() - t0
    ok_green = abs(est.value - math.log(2) / 3) < 0.01 and green_time < 10
    t0 = time.time()
    dp = aw.entropy(P4_ASYM, method="dp", budget=14)
    dp_time = time.time() - t0
    ok_dp = abs(dp.value - math.log(2)) < 0.02 and dp_time < 30
    check(
        "tree-closed-forms", ok and ok_rho and ok_green and ok_dp,
        f"rho'(d=3..8) exact, rho(ta)={aw.rho(P4_ASYM):.8f}, "
        f"h_green={est.value:.5f} ({green_time:.1f}s), h_dp={dp.value:.5f} ({dp_time:.1f}s)",
    )


def test_p_pprime_round_trip():
    t0 = time.time()
    worst = 0.0
    for p in seeded_laws(20, seed=3):
        pp = aw.transform_p_to_pprime(p)
        a = aw.solve_gamma(p, 1.0).r
        b = aw.solve_gamma(pp, aw.rho(pp)).r
        worst = max(worst, float(np.max(np.abs(a - b * b))))
    pp_uni = aw.transform_p_to_pprime(P3_UNIFORM)
    pp_ta = aw.transform_p_to_pprime(P4_ASYM)
    fixed = (float(np.max(np.abs(pp_uni.masses - P3_UNIFORM.masses))) < 1e-10
             and float(np.max(np.abs(pp_ta.masses - P4_ASYM.masses))) < 1e-10)
    elapsed = time.time() - t0
    check(
        "p-pprime-round-trip",
        worst < 1e-8 and fixed and elapsed < 60,
        f"max residual {worst:.2e}, fixed points exact, {elapsed:.1f}s",
    )


def test_qnormal_identities_and_avez():
    worst1 = worst2 = 0.0
    avez_ok = True
    for p in seeded_laws(50):
        prof1 = aw.solve_gamma(p, 1.0)
        worst1 = max(worst1, abs(_criterion_l1(p, prof1.r) - 1.0))
        r = aw.rho(p)
        prof2 = aw.solve_gamma(p, r)
        worst2 = max(worst2, abs(_criterion_l2(p, prof2.r) - 1.0))
        est = aw.entropy(p, method="green", budget=800, walks=64, seed=7)
        avez_ok &= est.value >= -2.0 * math.log(r) - 3.0 * est.stderr - 1e-9
    check(
        "qnormal-identities-avez",
        worst1 < 1e-8 and worst2 < 1e-8 and avez_ok,
        f"|crit(z=1)-1| <= {worst1:.2e}, |crit(z=rho)-1| <= {worst2:.2e}, Avez holds",
    )


def test_stopping_set_and_backbone():
    ss = aw.build_stopping_set(P3_UNIFORM, 4)
    bk = aw.backbone_kernel(P3_UNIFORM, ss)
    exact_ok = (
        ss.size == 10
        and ss.boundary_size == 12
        and max(abs(v - 1.0 / 12) for v in bk.q.values()) < 1e-12
        and bk.max_q <= 0.25 + 1e-12
    )
    h = aw.entropy(P3_UNIFORM, method="green", budget=2000, walks=200, seed=1).value
    gaps = []
    ratios = []
    for j in range(6, 13):
        k = 2 ** j
        bkj = aw.backbone_kernel(P3_UNIFORM, aw.build_stopping_set(P3_UNIFORM, k))
        ratio = bkj.mean_exit * h / math.log(k)
        ratios.append(ratio)
        gaps.append(abs(ratio - 1.0))
    in_band = all(0.65 <= r <= 1.35 for r in ratios)
    trending = all(b <= a + 1e-9 for a, b in zip(gaps, gaps[1:]))
    check(
        "stopping-backbone",
        exact_ok and in_band and trending,
        f"#U=10 #dU=12 q=1/12, E[tau]*h/log k = "
        f"{ratios[0]:.3f}..{ratios[-1]:.3f} trending to 1",
    )


def test_geronimus_exactness():
    coeff_ok = all(sum(geronimus(d, k)) == 1 for d in range(3, 9) for k in range(31))
    graphs = [k4_graph()] + [g for _, g in simple_random_cubic(12, 5)]
    exact_ok = True
    for graph in graphs:
        K = kernel(graph, uniform_vector(graph.alphabet))
        d = graph.alphabet.d
        for steps in range(1, 6):
            counts = nonbacktracking_counts_bruteforce(graph, steps)
            denom = d * (d - 1) ** (steps - 1)
            for x0 in range(graph.n):
                got = nonbacktracking_dist(K, x0, steps, exact=True)
                exact_ok &= all(
                    got[y] == Fraction(int(counts[x0, y]), denom)
                    for y in range(graph.n)
                )
    check(
        "geronimus-exactness", coeff_ok and exact_ok,
        "recursion == brute-force counts on K4 + 5 random n=12 graphs, k <= 5; "
        "p_k(1) = 1 for k <= 30",
    )


def test_stopping_time_bound_verifier():
    t0 = time.time()
    rng = np.random.default_rng(818)
    violations = 0
    cases = 0
    for _ in range(50):
        M = rng.random((20, 20)) + 0.05
        S = M + M.T
        for _ in range(120):
            S /= S.sum(axis=1, keepdims=True)
            S = 0.5 * (S + S.T)
        S /= S.sum(axis=1, keepdims=True)
        x0 = int(rng.integers(20))
        subset = set([x0] + rng.choice(20, size=7, replace=False).tolist())
        spec = StopSpec.exit_from(subset)
        for t in range(1, 11):
            for s in range(1, 11):
                rep = stopping_bound_check(S, x0, spec, t, s)
                cases += 1
                if not rep.holds_general:
                    violations += 1
                if rep.holds_reversible is False:
                    violations += 1
    elapsed = time.time() - t0
    check(
        "stoop-verifier",
        violations == 0 and elapsed < 60,
        f"{cases} (chain, t, s) cases, {violations} violations, {elapsed:.1f}s",
    )


def test_cutoff_at_entropic_time(srw_cells, aniso_cells):
    _, cells = srw_cells
    pred = 3.0 / math.log(2)
    errors = {}
    widths = {}
    for c in cells:
        err = abs(c.ratio(0.25) / pred - 1.0)
        errors[c.n] = max(errors.get(c.n, 0.0), err)
        widths[c.n] = max(widths.get(c.n, 0.0), c.width())
    sizes = sorted(errors)
    err_at_largest = errors[sizes[-1]]
    err_decreasing = all(errors[b] <= errors[a] + 1e-9 for a, b in zip(sizes, sizes[1:]))
    width_decreasing = all(widths[b] <= widths[a] + 1e-9 for a, b in zip(sizes, sizes[1:]))
    _, acells = aniso_cells
    ac = acells[0]
    aniso_err = abs(ac.ratio(0.25) * ac.entropy_rate - 1.0)
    check(
        "cutoff-entropic-time",
        err_at_largest <= 0.20 and err_decreasing and width_decreasing
        and aniso_err <= 0.25,
        f"srw errors {', '.join(f'{n}:{errors[n]*100:.1f}%' for n in sizes)}; "
        f"widths {', '.join(f'{widths[n]:.3f}' for n in sizes)}; "
        f"aniso err {aniso_err*100:.1f}% (h={ac.entropy_rate:.4f})",
    )


def test_entropic_lower_bound(srw_cells, aniso_cells, lift_cells):
    # surrogate of the entropic lower bound: the time to fall below TV = 0.9
    # must reach three quarters of the entropic time log(n)/h
    offenders = []
    worst = math.inf
    for _, cells in (srw_cells, aniso_cells, lift_cells):
        for c in cells:
            if c.n < 4096:
                continue
            required = 0.75 * math.log(c.n) / c.entropy_rate
            for x, times in c.mix_times.items():
                t09 = times[0.9]
                ratio = (t09 / required) if t09 is not None else math.inf
                worst = min(worst, ratio)
                if t09 is None or t09 < required:
                    offenders.append((c.n, c.seed, x, t09, round(required, 1)))
    check(
        "entropic-lower-bound",
        not offenders,
        f"{len(offenders)} start(s) below 0.75 log(n)/h; worst T(0.9)/required = "
        f"{worst:.2f}; first offenders: {offenders[:3]}",
    )


def test_lifts_cutoff(lift_cells):
    _, cells = lift_cells
    pred = 3.0 / math.log(2)
    largest = cells[-1]
    ratio = largest.worst_mix[0.25] / math.log(largest.n)
    err = abs(ratio / pred - 1.0)
    cfg1 = CutoffConfig(family="lift", sizes=(1,), seeds=(5,), eps=(0.25,),
                        worst_of=4, root_seed=1)
    unit_cell = cutoff_experiment(cfg1)[0]
    base_mix = mixing_time(kernel(k4_graph(), P3_UNIFORM), 0, 0.25, 100)
    check(
        "lifts-entropic-time",
        err <= 0.25 and unit_cell.worst_mix[0.25] == base_mix,
        f"T(1/4)/log(n) = {ratio:.3f} vs {pred:.3f} ({err*100:.1f}%); "
        f"n=1 lift == base mixing time ({base_mix})",
    )


def test_simplelemma_equivalence():
    rng = np.random.default_rng(13)
    disagreements = 0
    for trial in range(100):
        d = (3, 4, 5)[trial % 3]
        inv = (aw.identity_involution(d) if trial % 2 == 0
               else aw.pairing_involution(d))
        alpha = rng.uniform(0.0, 0.95, size=d)
        rep = aw.integrability(alpha, inv)
        if (rep.criterion < 1.0) != (rep.perron < 1.0):
            disagreements += 1
            continue
        sums = aw.level_sums(alpha, inv, 18)
        if sums[-2] > 0:
            growth = sums[-1] / sums[-2]
            if abs(growth - 1.0) > 1e-6 and (growth < 1.0) != rep.converges:
                disagreements += 1
    check("simplelemma-equivalence", disagreements == 0,
          "criterion < 1 <=> Perron root < 1 <=> level-sum growth, 100 draws")


def test_alon_boppana_empirical(srw_cells):
    cfg, cells = srw_cells
    floor = 2.0 * math.sqrt(2.0) / 3.0 - 0.01
    values = {}
    graphs = [(2048, 21)]
    graphs += [(c.n, c.seed) for c in cells if c.n >= 2048]
    ok = True
    for n, seed in graphs:
        g = random_schreier(ALPHA3, n, seed)
        res = singular_radius_t(kernel(g, P3_UNIFORM), 1, seed=1)
        values[(n, seed)] = res.value
        ok &= res.value >= floor
    worst = min(values.values())
    check("alon-boppana", ok,
          f"min sigma(1) = {worst:.6f} >= {floor:.6f} over {len(values)} graphs")


def test_determinism_across_runs_and_threads(tmp_path):
    args = ["cutoff", "--sizes", "128,256", "--seeds", "1,2", "--d", "3",
            "--seed", "17", "--eps", "0.25,0.1,0.9"]
    dirs = []
    for name, threads in (("r1", "1"), ("r2", "1"), ("r8", "8")):
        out = tmp_path / name
        code = cli_main(args + ["--out", str(out), "--threads", threads])
        assert code == 0
        dirs.append(out)

    def stripped(path: Path) -> bytes:
        return b"".join(
            line for line in path.read_bytes().splitlines(keepends=True)
            if not line.startswith(b"#")
        )

    same = True
    for other in dirs[1:]:
        for f in sorted(dirs[0].iterdir()):
            same &= stripped(f) == stripped(other / f.name)
    check("determinism", same,
          "byte-identical summaries and curves across runs and --threads 1 vs 8")
