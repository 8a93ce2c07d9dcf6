import math

import numpy as np
import pytest

from anisowalk import (
    AnisotropyVector,
    ReducedWord,
    backbone_kernel,
    build_stopping_set,
    domination_check,
    dp_horizon,
    entropy,
    green_value,
    haagerup_bounds,
    integrability,
    level_sums,
    make_alphabet,
    identity_involution,
    rho,
    rho_prime,
    solve_gamma,
    spectral_summary,
    transform_p_to_pprime,
    uniform_target_series,
    uniform_vector,
    unit,
    word_distribution,
)
from anisowalk.errors import (
    BelowConvergenceRadius,
    HorizonTooLarge,
    ValidationError,
)
from anisowalk.tree_calculus import _criterion_l1, _criterion_l2

from helpers import ALPHA3, ALPHA4, P3_UNIFORM, P4_ASYM, seeded_laws


# --- resolvent profile ----------------------------------------------------

def test_solve_gamma_uniform_d3_closed_form():
    prof = solve_gamma(P3_UNIFORM, 1.0)
    assert np.allclose(prof.r, 0.5, atol=1e-12)
    assert np.allclose(prof.gamma, 1.5, atol=1e-12)
    assert abs(prof.ree - 2.0) < 1e-11
    assert abs(prof.s - 0.25) < 1e-11
    assert prof.residual < 1e-12


def test_solve_gamma_large_z_limit():
    prof = solve_gamma(P3_UNIFORM, 1e6)
    assert np.max(np.abs(prof.gamma * 1e6 - 1.0)) < 1e-5


def test_solve_gamma_below_radius():
    with pytest.raises(BelowConvergenceRadius):
        solve_gamma(P3_UNIFORM, 0.5)


def test_gamma_symmetric_under_involution():
    for p in seeded_laws(10):
        prof = solve_gamma(p, 1.0)
        inv = np.array(p.alphabet.involution) - 1
        assert np.max(np.abs(prof.gamma - prof.gamma[inv])) < 1e-12


def test_solve_gamma_exactly_at_spectral_edge():
    # reversible law: rho = rho', and the profile there must square back to
    # the z = 1 profile (the closed form through s is exact at the edge)
    edge = rho_prime(P3_UNIFORM)
    prof = solve_gamma(P3_UNIFORM, edge)
    assert prof.residual < 1e-12
    assert np.max(np.abs(prof.r - math.sqrt(0.5))) < 1e-12


def test_gamma_strictly_decreasing_in_z():
    for p in (P3_UNIFORM, P4_ASYM, seeded_laws(1, seed=42)[0]):
        lo = max(rho_prime(p), 1e-6)
        zs = np.linspace(lo + 1e-9, lo + 3.0, 20)
        gammas = np.array([solve_gamma(p, z).gamma for z in zs])
        assert np.all(np.diff(gammas, axis=0) < 0)


# --- spectral radii ---------------------------------------------------------

def test_rho_prime_uniform_closed_form():
    for d in range(3, 9):
        p = uniform_vector(make_alphabet(d, identity_involution(d)))
        assert abs(rho_prime(p) - 2 * math.sqrt(d - 1) / d) < 1e-10


def test_rho_prime_totally_asymmetric_is_zero():
    # the return series has infinite convergence radius when no letter can
    # backtrack, so the radius parameter collapses to zero
    assert rho_prime(P4_ASYM) == 0.0


def test_rho_totally_asymmetric():
    assert abs(rho(P4_ASYM) - math.sqrt(0.5)) < 1e-8


def test_rho_uniform_equals_rho_prime():
    assert abs(rho(P3_UNIFORM) - rho_prime(P3_UNIFORM)) < 1e-12


def test_rho_matches_rho_prime_for_reversible_laws():
    rng = np.random.default_rng(17)
    for _ in range(20):
        half = rng.exponential(size=3)
        m = np.concatenate([half, half[:2][::-1], half[2:]])  # d=5 pairing-ish
        inv = (2, 1, 4, 3, 5)
        m = rng.exponential(size=5)
        m = m + m[np.array(inv) - 1]
        p = AnisotropyVector(make_alphabet(5, inv), m / m.sum())
        assert p.is_reversible(tol=1e-12)
        assert abs(rho(p) - rho_prime(p)) < 1e-8


def test_rho_at_least_rho_prime():
    for p in seeded_laws(30):
        assert rho(p) >= rho_prime(p) - 1e-12
        assert rho(p) < 1.0


def test_qnormal_identities_on_seeded_laws():
    for p in seeded_laws(50):
        prof1 = solve_gamma(p, 1.0)
        assert abs(_criterion_l1(p, prof1.r) - 1.0) < 1e-8
        prof2 = solve_gamma(p, rho(p))
        assert abs(_criterion_l2(p, prof2.r) - 1.0) < 1e-8


# --- green function ---------------------------------------------------------

def test_green_values_uniform_d3():
    assert abs(green_value(P3_UNIFORM, unit(ALPHA3)) - 2.0) < 1e-10
    assert abs(green_value(P3_UNIFORM, ReducedWord(ALPHA3, (1,))) - 1.0) < 1e-10
    assert abs(green_value(P3_UNIFORM, ReducedWord(ALPHA3, (1, 2, 3))) - 0.25) < 1e-10


def test_green_against_independent_series_oracle():
    # combinatorial target DP vs the resolvent product formula
    for d in (3, 4, 5):
        p = uniform_vector(make_alphabet(d, identity_involution(d)))
        r = rho(p)
        horizon = int(math.ceil(math.log(1e-9 * (1 - r)) / math.log(r)))
        for length in range(5):
            word = ReducedWord(p.alphabet, tuple((1, 2, 3, 1)[:length]))
            series = uniform_target_series(d, length, horizon)
            assert abs(series - green_value(p, word)) < 1e-8


def test_green_totally_asymmetric_exact():
    # no backtracking: u(g) = prod p_i exactly, R(e,e) = 1
    w = ReducedWord(ALPHA4, (1, 3, 3))
    assert abs(green_value(P4_ASYM, w) - 0.125) < 1e-12


def test_green_general_law_sandwiched_by_partial_sums():
    for p in seeded_laws(6, seed=31, dims=(3, 4)):
        horizon = min(dp_horizon(p, 200_000), 18)
        r = rho(p)
        words = [(), (1,), (1, 1) if p.alphabet.star(1) != 1 else (1, 2)]
        partial = {w: 0.0 for w in words}
        for dist in word_distribution(p, horizon, 200_000):
            for w in words:
                partial[w] += dist.get(bytes(w), 0.0)
        tail = r ** (horizon + 1) / (1 - r)
        for w in words:
            u = green_value(p, ReducedWord(p.alphabet, w))
            assert partial[w] - 1e-10 <= u <= partial[w] + tail + 1e-10


# --- entropy ----------------------------------------------------------------

def test_entropy_green_uniform_d3():
    est = entropy(P3_UNIFORM, method="green", budget=2000, walks=200, seed=11)
    assert abs(est.value - math.log(2) / 3) < 0.01


def test_entropy_dp_totally_asymmetric():
    est = entropy(P4_ASYM, method="dp", budget=14)
    assert abs(est.value - math.log(2)) < 0.02
    assert est.stderr < 1e-10


def test_entropy_cross_oracle_agreement():
    g = entropy(P3_UNIFORM, method="green", budget=2000, walks=200, seed=4)
    d = entropy(P3_UNIFORM, method="dp", budget=15)
    joint = math.sqrt(g.stderr ** 2 + d.stderr ** 2)
    assert abs(g.value - d.value) <= 2 * joint


def test_entropy_dp_horizon_guard():
    with pytest.raises(HorizonTooLarge):
        entropy(P3_UNIFORM, method="dp", budget=14, word_cap=1000)


def test_avez_inequality_on_seeded_laws():
    for p in seeded_laws(50, seed=77):
        s = spectral_summary(p, seed=5, walks=48, budget=600)
        assert s.entropy >= s.avez_bound - 3 * s.entropy_stderr - 1e-9


# --- transform --------------------------------------------------------------

def test_transform_fixed_points():
    pp = transform_p_to_pprime(P3_UNIFORM)
    assert np.max(np.abs(pp.masses - P3_UNIFORM.masses)) < 1e-10
    pp4 = transform_p_to_pprime(P4_ASYM)
    assert np.max(np.abs(pp4.masses - P4_ASYM.masses)) < 1e-10


def test_transform_round_trip_on_seeded_laws():
    for p in seeded_laws(20, seed=3):
        pp = transform_p_to_pprime(p)
        assert pp.support() == p.support()
        a = solve_gamma(p, 1.0).r
        b = solve_gamma(pp, rho(pp)).r
        assert np.max(np.abs(a - b * b)) < 1e-8


def test_transform_preserves_reversibility():
    rng = np.random.default_rng(2)
    m = rng.exponential(size=4)
    inv = (2, 1, 4, 3)
    m = m + m[np.array(inv) - 1]
    p = AnisotropyVector(make_alphabet(4, inv), m / m.sum())
    pp = transform_p_to_pprime(p)
    assert pp.is_reversible(tol=1e-10)


# --- stopping set and backbone ----------------------------------------------

def test_stopping_set_uniform_k4():
    ss = build_stopping_set(P3_UNIFORM, 4)
    assert ss.size == 10
    assert ss.boundary_size == 12
    assert all(len(w) == 3 for w in ss.boundary)
    assert ss.boundary_size <= (ss.p.alphabet.d - 1) * ss.size


def test_stopping_set_uniform_k2():
    ss = build_stopping_set(P3_UNIFORM, 2)
    assert ss.size == 4
    assert ss.boundary_size == 6


def test_stopping_set_k1_rejected():
    with pytest.raises(ValidationError):
        build_stopping_set(P3_UNIFORM, 1)


def test_stopping_set_prefix_closed():
    for p in seeded_laws(6, seed=12):
        ss = build_stopping_set(p, 8)
        assert () in ss.members
        for w in ss.members:
            if w:
                assert w[:-1] in ss.members
                assert w[1:] in ss.members


def test_backbone_uniform_k4():
    ss = build_stopping_set(P3_UNIFORM, 4)
    bk = backbone_kernel(P3_UNIFORM, ss)
    assert abs(bk.total() - 1.0) < 1e-12
    assert max(abs(v - 1.0 / 12) for v in bk.q.values()) < 1e-12
    assert bk.max_q <= 0.25 + 1e-12
    assert bk.mean_exit >= 2.0
    assert abs(bk.mean_exit - 5.5) < 1e-9


def test_backbone_uniform_k2():
    ss = build_stopping_set(P3_UNIFORM, 2)
    bk = backbone_kernel(P3_UNIFORM, ss)
    assert max(abs(v - 1.0 / 6) for v in bk.q.values()) < 1e-12


def test_backbone_cap_on_seeded_laws():
    for p in seeded_laws(6, seed=21):
        ss = build_stopping_set(p, 16)
        bk = backbone_kernel(p, ss)
        assert bk.max_q <= 1.0 / 16 + 1e-12
        assert abs(bk.total() - 1.0) < 1e-10


# --- haagerup ---------------------------------------------------------------

def test_haagerup_bounds_arithmetic():
    hb1 = haagerup_bounds(P3_UNIFORM, 1)
    assert abs(hb1.lower - 2 * math.sqrt(2) / 3) < 1e-10
    assert hb1.upper == 1.0  # 4 rho > 1, capped
    hb50 = haagerup_bounds(P3_UNIFORM, 50, word_cap=10)  # skip the DP
    assert hb50.upper <= hb50.lower * 51 ** 0.04 + 1e-12
    assert hb50.l2_delta is None


def test_haagerup_l2_diagnostic():
    hb = haagerup_bounds(P3_UNIFORM, 10)
    assert hb.l2_delta is not None
    assert hb.l2_delta <= hb.lower ** 10 + 1e-12


# --- integrability ----------------------------------------------------------

def test_integrability_identity_involution_closed_form():
    for alpha in (0.2, 0.45, 0.55, 0.8):
        rep = integrability([alpha] * 3, (1, 2, 3))
        assert abs(rep.criterion - 3 * alpha / (1 + alpha)) < 1e-12
        assert rep.converges == (alpha < 0.5)
        assert rep.agree()


def test_integrability_single_free_pair():
    # d=2 with a swap: only powers of one letter survive, always summable
    for alpha in (0.3, 0.9, 0.99):
        rep = integrability([alpha] * 2, (2, 1))
        assert abs(rep.criterion - 2 * alpha / (1 + alpha)) < 1e-12
        assert rep.converges
        sums = level_sums([alpha] * 2, (2, 1), 40)
        assert sums.sum() < 2.0 / (1.0 - alpha) + 1.0


def test_integrability_zero_weights():
    rep = integrability([0.0] * 4, (2, 1, 4, 3))
    assert rep.criterion == 0.0
    assert rep.perron == 0.0
    assert rep.converges


def test_integrability_perron_and_sums_agree():
    rng = np.random.default_rng(13)
    from anisowalk import pairing_involution
    for trial in range(100):
        d = (3, 4, 5)[trial % 3]
        inv = identity_involution(d) if trial % 2 == 0 else pairing_involution(d)
        alpha = rng.uniform(0.0, 0.95, size=d)
        rep = integrability(alpha, inv)
        assert rep.agree()
        sums = level_sums(alpha, inv, 18)
        if sums[-2] > 0:
            growth = sums[-1] / sums[-2]
            if abs(growth - 1.0) > 1e-6:
                assert (growth < 1.0) == rep.converges


# --- domination -------------------------------------------------------------

def test_domination_uniform_small_k_positive():
    rep = domination_check(P3_UNIFORM, 4)
    assert rep.horizon == 16
    assert math.isfinite(rep.c_hat) and rep.c_hat > 0
    assert rep.min_rhs > 0


def test_domination_uniform_curve_not_explosive():
    chats = [domination_check(P3_UNIFORM, k).c_hat for k in (4, 16, 64)]
    assert all(math.isfinite(c) for c in chats)
    assert max(chats) < 10 * min(c for c in chats if c > 0)


def test_domination_totally_asymmetric():
    rep = domination_check(P4_ASYM, 8)
    assert rep.horizon == 81
    assert math.isfinite(rep.c_hat)


def test_domination_general_law_word_dp_path():
    p = seeded_laws(1, seed=6)[0]  # d=3 identity involution, generic masses
    rep = domination_check(p, 4)
    assert rep.horizon == 16
    assert math.isfinite(rep.c_hat) and rep.c_hat > 0


def test_exit_time_ladder_reports_ratios():
    from anisowalk import exit_time_ladder
    rows = exit_time_ladder(P3_UNIFORM, (64, 256), math.log(2) / 3)
    assert [k for k, _, _ in rows] == [64, 256]
    assert all(0.65 < ratio < 1.35 for _, _, ratio in rows)
