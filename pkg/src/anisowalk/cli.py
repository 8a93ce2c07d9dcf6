"""Command-line front end.

Subcommands wrap the public operations; all randomness flows from one root
seed recorded in every output file, and outputs are byte-identical across
runs and thread counts (modulo the version-string comment header).

Exit codes: 0 success, 1 usage, 2 validation failure, 3 numerical failure.
Errors are printed as single-line JSON on standard error.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnisowalkError, ConfigError, NumericalError, ValidationError
from .group_core import (
    AnisotropyVector,
    ReducedWord,
    identity_involution,
    make_alphabet,
    pairing_involution,
    uniform_vector,
)
from . import tree_calculus, schreier_graphs, mixing_lab
from .schreier_graphs import (
    k4_base,
    kernel,
    lift_kernel,
    load_graph,
    load_lift,
    random_lift,
    random_schreier,
    save_graph,
    save_lift,
    srw_weights,
)

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _involution_spec(d: int, spec: str):
    if spec == "id":
        return identity_involution(d)
    if spec == "pair":
        return pairing_involution(d)
    return tuple(int(x) for x in spec.split(","))


def _p_spec(alphabet, spec: str) -> AnisotropyVector:
    if spec == "uniform":
        return uniform_vector(alphabet)
    return AnisotropyVector(alphabet, np.array([float(x) for x in spec.split(",")]))


def _emit(obj, args, default_name: str):
    text = json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"
    header = f"# anisowalk-{__version__}\n# seed: {getattr(args, 'seed', 0)}\n"
    if getattr(args, "out", None):
        out = Path(args.out)
        if out.is_dir() or not out.suffix:
            out.mkdir(parents=True, exist_ok=True)
            out = out / default_name
        out.write_text(header + text, encoding="utf-8")
        print(str(out))
    else:
        sys.stdout.write(text)


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_tree_calc(args) -> int:
    alphabet = make_alphabet(args.d, _involution_spec(args.d, args.inv))
    p = _p_spec(alphabet, args.p)
    est = tree_calculus.entropy(
        p, method="green", budget=args.entropy_budget, walks=args.entropy_walks,
        seed=args.seed,
    )
    dp_val = None
    dp_t = min(args.dp_budget, tree_calculus.dp_horizon(p, args.word_cap))
    if dp_t >= 4:
        dp_val = tree_calculus.entropy(p, method="dp", budget=dp_t,
                                       word_cap=args.word_cap).value
    pprime = tree_calculus.transform_p_to_pprime(p)
    ss = tree_calculus.build_stopping_set(p, args.k)
    bk = tree_calculus.backbone_kernel(p, ss)
    out = {
        "rho_prime": tree_calculus.rho_prime(p),
        "rho": tree_calculus.rho(p),
        "entropy": {"green": est.value, "dp": dp_val, "stderr": est.stderr},
        "p_prime": [float(x) for x in pprime.masses],
        "stopping_set": {
            "k": args.k, "size": ss.size, "diameter": ss.diameter,
            "boundary_size": ss.boundary_size,
        },
        "backbone": {"max_q": bk.max_q, "mean_exit": bk.mean_exit},
    }
    _emit(out, args, "tree-calc.json")
    return EXIT_OK


def _cmd_gen(args) -> int:
    if not args.out:
        raise ConfigError("gen requires --out")
    if args.family == "schreier":
        alphabet = make_alphabet(args.d, _involution_spec(args.d, args.inv))
        graph = random_schreier(alphabet, args.n, args.seed)
        save_graph(graph, args.out)
    elif args.family == "lift":
        if args.base != "k4":
            raise ConfigError(f"unknown base {args.base!r} (only 'k4' is built in)")
        lift = random_lift(k4_base(), args.n, args.seed)
        save_lift(lift, args.out)
    else:
        raise ConfigError(f"unknown family {args.family!r}")
    print(args.out)
    return EXIT_OK


def _load_kernel(args):
    if args.lift:
        lift = load_lift(args.lift)
        return lift_kernel(lift, srw_weights(lift.base))
    graph = load_graph(args.file)
    p = _p_spec(graph.alphabet, args.p)
    return kernel(graph, p)


def _cmd_mix(args) -> int:
    k = _load_kernel(args)
    eps_list = [float(e) for e in args.eps.split(",")]
    t_max = args.t_max
    tvs = mixing_lab.tv_curve(k, args.start, t_max, stop_below=0.5 * min(eps_list))
    mix = mixing_lab._mix_times_from_curve(tvs, eps_list)
    out = {
        "start": args.start,
        "n_states": k.n_states,
        "t_mix": {str(e): mix[e] for e in eps_list},
        "curve": [float(v) for v in tvs],
    }
    mixed = all(v is not None for v in mix.values())
    if not mixed:
        out["parity_suspected"] = mixing_lab._parity_suspected(k, args.start)
    if getattr(args, "format", "json") == "csv":
        lines = [f"# anisowalk-{__version__}", "t,tv"]
        lines += [f"{t},{float(v)!r}" for t, v in enumerate(tvs)]
        text = "\n".join(lines) + "\n"
        if getattr(args, "out", None):
            Path(args.out).write_text(text, encoding="utf-8")
            print(args.out)
        else:
            sys.stdout.write(text)
    else:
        _emit(out, args, "mix.json")
    return EXIT_OK if mixed else EXIT_NUMERICAL


def _cmd_spectra(args) -> int:
    k = _load_kernel(args)
    ts = [int(t) for t in args.t.split(",")]
    sig = {}
    for t in ts:
        res = mixing_lab.singular_radius_t(k, t, seed=args.seed)
        sig[str(t)] = {"value": res.value, "converged": res.converged}
    out = {"n_states": k.n_states, "sigma_t": sig}
    if args.dense:
        rho_ref = None
        if args.lift:
            deg = k.lift.base.degrees()
            if not np.all(deg == deg[0]):
                raise ConfigError("dense lift report needs a regular base")
            d = int(deg[0])
            rho_ref = 2.0 * math.sqrt(d - 1) / d  # SRW on the covering tree
        rep = mixing_lab.spectrum_report(k, delta=args.delta, rho=rho_ref)
        out["dense"] = {
            "reversible": rep.reversible,
            "rho_reference": rep.rho_reference,
            "outliers": list(rep.outliers),
            "outlier_bounds": [_clean(b) for b in rep.outlier_bounds],
            "spectrum_extremes": [float(rep.spectrum[0]), float(rep.spectrum[-1])],
        }
    _emit(out, args, "spectra.json")
    return EXIT_OK


def _cmd_nb(args) -> int:
    graph = load_graph(args.file)
    p = uniform_vector(graph.alphabet)
    k = kernel(graph, p)
    dist = mixing_lab.nonbacktracking_dist(k, args.x0, args.k)
    coeffs = mixing_lab.geronimus(graph.alphabet.d, args.k)
    out = {
        "k": args.k,
        "x0": args.x0,
        "coefficients": [str(c) for c in coeffs],
        "distribution": [float(v) for v in dist.masses],
        "bound_eta0": mixing_lab.nb_spectral_radius_bound(graph.alphabet.d, args.k, 0.0),
    }
    _emit(out, args, "nb.json")
    return EXIT_OK


def _cmd_cutoff(args) -> int:
    cfg, out_dir = _experiment_config(args)
    cells = mixing_lab.cutoff_experiment(cfg, threads=args.threads)
    summary = {
        "config": _config_dict(cfg),
        "root_seed": cfg.root_seed,
        "cells": [
            {
                "n": c.n,
                "seed": c.seed,
                "n_states": c.n_states,
                "entropy_rate": c.entropy_rate,
                "entropic_time": c.entropic_time,
                "t_mix_worst": {str(e): t for e, t in sorted(c.worst_mix.items())},
                "t_mix_by_start": {
                    str(x): {str(e): t for e, t in sorted(mt.items())}
                    for x, mt in sorted(c.mix_times.items())
                },
                "ratio_quarter": c.ratio(0.25),
                "width": c.width(),
                "prediction": c.prediction,
            }
            for c in cells
        ],
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    header = (
        f"# anisowalk-{__version__}\n# seed: {cfg.root_seed}\n"
        f"# config: {json.dumps(_config_dict(cfg), sort_keys=True)}\n"
    )
    body = json.dumps(summary, sort_keys=True, indent=2, allow_nan=False) + "\n"
    (out_dir / "summary.json").write_text(header + body, encoding="utf-8")
    for c in cells:
        for x0, curve in c.curves.items():
            tvs = curve.tvs
            name = f"curve_n{c.n}_seed{c.seed}_x{x0}.csv"
            lines = [header.rstrip("\n"), "t,tv"]
            lines += [f"{t},{float(v)!r}" for t, v in enumerate(tvs)]
            (out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
            if args.emit_plotdata:
                pname = f"plot_n{c.n}_seed{c.seed}_x{x0}.dat"
                plines = [header.rstrip("\n")]
                plines += [f"{t} {float(v)!r}" for t, v in enumerate(tvs)]
                (out_dir / pname).write_text("\n".join(plines) + "\n", encoding="utf-8")
    print(str(out_dir / "summary.json"))
    return EXIT_OK


def _config_dict(cfg: mixing_lab.CutoffConfig) -> dict:
    return {
        "family": cfg.family,
        "sizes": list(cfg.sizes),
        "seeds": list(cfg.seeds),
        "eps": list(cfg.eps),
        "d": cfg.d,
        "involution": list(cfg.involution) if cfg.involution else None,
        "p": list(cfg.p_masses) if cfg.p_masses else None,
        "worst_of": cfg.worst_of,
        "horizon_factor": cfg.horizon_factor,
        "entropy_rate": cfg.entropy_rate,
        "file": cfg.graph_file,
    }


def _experiment_config(args) -> tuple[mixing_lab.CutoffConfig, Path]:
    raw: dict = {}
    out_dir = None
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        ini = configparser.ConfigParser()
        ini.read(path)
        if "experiment" not in ini:
            raise ConfigError("config file needs an [experiment] section")
        raw = dict(ini["experiment"])
        if "out" in raw:
            out_dir = Path(raw.pop("out"))
    # flags win over the file
    for key in ("family", "sizes", "seeds", "eps", "d", "involution", "p",
                "worst_of", "horizon_factor", "entropy_rate"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            raw[key] = val
    if args.out:
        out_dir = Path(args.out)
    if out_dir is None:
        raise ConfigError("an output directory is required (out= or --out)")
    family = raw.get("family", "schreier")
    graph_file = raw.get("file")
    d = int(raw.get("d", 3))
    inv_spec = raw.get("involution", "id")
    involution = (None if family in ("lift", "explicit-file")
                  else _involution_spec(d, str(inv_spec)))
    p_spec = str(raw.get("p", "uniform"))
    p_masses = None if p_spec == "uniform" else tuple(float(x) for x in p_spec.split(","))
    def _ints(key, default):
        v = raw.get(key, default)
        if isinstance(v, str):
            return tuple(int(x) for x in v.split(","))
        return tuple(int(x) for x in v)
    def _floats(key, default):
        v = raw.get(key, default)
        if isinstance(v, str):
            return tuple(float(x) for x in v.split(","))
        return tuple(float(x) for x in v)
    h = raw.get("entropy_rate")
    cfg = mixing_lab.CutoffConfig(
        family=family,
        sizes=_ints("sizes", "1024"),
        seeds=_ints("seeds", "1"),
        eps=_floats("eps", "0.25,0.1,0.9"),
        d=d,
        involution=involution,
        p_masses=p_masses,
        worst_of=int(raw.get("worst_of", 16)),
        horizon_factor=float(raw.get("horizon_factor", 3.0)),
        root_seed=args.seed,
        entropy_rate=float(h) if h not in (None, "", "auto") else None,
        graph_file=graph_file,
    )
    return cfg, out_dir


# ---------------------------------------------------------------------------
# invariant verification suites
# ---------------------------------------------------------------------------

def _seeded_laws(count: int, seed: int = 2024):
    rng = np.random.default_rng(seed)
    for trial in range(count):
        d = (3, 4, 5)[trial % 3]
        inv = identity_involution(d) if trial % 2 == 0 else pairing_involution(d)
        alphabet = make_alphabet(d, inv)
        m = rng.exponential(size=d)
        yield AnisotropyVector(alphabet, m / m.sum())


def _suite_qnormal():
    from .tree_calculus import _criterion_l1, _criterion_l2
    worst1 = worst2 = 0.0
    for p in _seeded_laws(50):
        prof1 = tree_calculus.solve_gamma(p, 1.0)
        worst1 = max(worst1, abs(_criterion_l1(p, prof1.r) - 1.0))
        r = tree_calculus.rho(p)
        prof2 = tree_calculus.solve_gamma(p, r)
        worst2 = max(worst2, abs(_criterion_l2(p, prof2.r) - 1.0))
    yield ("qnormal.z1", worst1 < 1e-8, f"max |criterion - 1| = {worst1:.2e}")
    yield ("qnormal.zrho", worst2 < 1e-8, f"max |criterion - 1| = {worst2:.2e}")
    bad = 0
    for p in _seeded_laws(50, seed=77):
        s = tree_calculus.spectral_summary(p, seed=5, walks=48, budget=600)
        if s.entropy < s.avez_bound - 3 * s.entropy_stderr - 1e-9:
            bad += 1
    yield ("qnormal.avez", bad == 0, f"{bad} Avez violations")


def _suite_roundtrip():
    worst = 0.0
    for p in _seeded_laws(20, seed=3):
        pp = tree_calculus.transform_p_to_pprime(p)
        a = tree_calculus.solve_gamma(p, 1.0).r
        b = tree_calculus.solve_gamma(pp, tree_calculus.rho(pp)).r
        worst = max(worst, float(np.max(np.abs(a - b * b))))
    yield ("roundtrip.identity", worst < 1e-8, f"max residual {worst:.2e}")
    alphabet = make_alphabet(3, identity_involution(3))
    p = uniform_vector(alphabet)
    pp = tree_calculus.transform_p_to_pprime(p)
    fixed1 = float(np.max(np.abs(pp.masses - p.masses))) < 1e-10
    A4 = make_alphabet(4, (2, 1, 4, 3))
    pta = AnisotropyVector(A4, np.array([0.5, 0.0, 0.5, 0.0]))
    ppta = tree_calculus.transform_p_to_pprime(pta)
    fixed2 = float(np.max(np.abs(ppta.masses - pta.masses))) < 1e-10
    yield ("roundtrip.fixed_points", fixed1 and fixed2, "uniform and totally asymmetric")


def _suite_greenseries():
    worst = 0.0
    for d in (3, 4):
        alphabet = make_alphabet(d, identity_involution(d))
        p = uniform_vector(alphabet)
        r = tree_calculus.rho(p)
        T = int(math.ceil(math.log(1e-9 * (1 - r)) / math.log(r)))
        for L in range(5):
            series = tree_calculus.uniform_target_series(d, L, T)
            letters = tuple((1, 2, 3, 1)[:L])
            gv = tree_calculus.green_value(p, ReducedWord(alphabet, letters))
            worst = max(worst, abs(series - gv))
    yield ("greenseries.uniform", worst < 1e-8, f"max gap {worst:.2e}")


def _suite_stopping():
    alphabet = make_alphabet(3, identity_involution(3))
    p = uniform_vector(alphabet)
    ss = tree_calculus.build_stopping_set(p, 4)
    bk = tree_calculus.backbone_kernel(p, ss)
    ok = (ss.size == 10 and ss.boundary_size == 12
          and max(abs(v - 1.0 / 12) for v in bk.q.values()) < 1e-12)
    yield ("stopping.k4", ok, f"#U={ss.size} #dU={ss.boundary_size}")
    closed = all(w[1:] in ss.members and w[:-1] in ss.members for w in ss.members if w)
    yield ("stopping.prefix_closed", closed, "drop-first and drop-last closure")


def _suite_geronimus():
    coeff_ok = all(sum(mixing_lab.geronimus(d, k)) == 1
                   for d in range(3, 9) for k in range(31))
    yield ("geronimus.pk_at_1", coeff_ok, "p_k(1) = 1 for k <= 30")
    alphabet = make_alphabet(3, identity_involution(3))
    k4 = schreier_graphs.from_permutations(
        alphabet, [[1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
    )
    K = kernel(k4, uniform_vector(alphabet))
    from fractions import Fraction
    ok = True
    for steps in range(1, 6):
        counts = mixing_lab.nonbacktracking_counts_bruteforce(k4, steps)
        denom = 3 * 2 ** (steps - 1)
        for x0 in range(4):
            exact = mixing_lab.nonbacktracking_dist(K, x0, steps, exact=True)
            ok &= all(exact[y] == Fraction(int(counts[x0, y]), denom) for y in range(4))
    yield ("geronimus.bruteforce_k4", ok, "exact rational equality, k <= 5")


def _suite_stoop():
    rng = np.random.default_rng(99)
    violations = 0
    for _ in range(10):
        M = rng.random((20, 20)) + 0.05
        S = M + M.T
        for _ in range(200):
            S /= S.sum(axis=1, keepdims=True)
            S = 0.5 * (S + S.T)
        S /= S.sum(axis=1, keepdims=True)
        x0 = int(rng.integers(20))
        subset = set([x0] + rng.choice(20, size=6, replace=False).tolist())
        spec = mixing_lab.StopSpec.exit_from(subset)
        for t in (1, 5, 9):
            for s in (1, 5, 9):
                rep = mixing_lab.stopping_bound_check(S, x0, spec, t, s)
                if not rep.holds_general or rep.holds_reversible is False:
                    violations += 1
    yield ("stoop.exact", violations == 0, f"{violations} violations")


def _suite_simplelemma():
    rng = np.random.default_rng(13)
    disagreements = 0
    for trial in range(100):
        d = (3, 4, 5)[trial % 3]
        inv = identity_involution(d) if trial % 2 == 0 else pairing_involution(d)
        alpha = rng.uniform(0.0, 0.95, size=d)
        rep = tree_calculus.integrability(alpha, inv)
        sums = tree_calculus.level_sums(alpha, inv, 18)
        growth = sums[-1] / sums[-2] if sums[-2] > 0 else 0.0
        if not rep.agree():
            disagreements += 1
        elif abs(growth - 1.0) > 1e-6 and (growth < 1.0) != rep.converges:
            disagreements += 1
    yield ("simplelemma.agreement", disagreements == 0, f"{disagreements} disagreements")


def _suite_kernel():
    alphabet = make_alphabet(3, identity_involution(3))
    p = uniform_vector(alphabet)
    g = random_schreier(alphabet, 64, seed=5)
    K = kernel(g, p)
    ones = np.ones(64)
    ok1 = (float(np.max(np.abs(K.apply_dist(ones) - ones))) < 1e-12
           and float(np.max(np.abs(K.apply_fun(ones) - ones))) < 1e-12)
    yield ("kernel.doubly_stochastic", ok1, "both one-vectors preserved")
    yield ("kernel.action", _check_action(alphabet, g), "homomorphism on 1000 triples")


def _check_action(alphabet, g) -> bool:
    rng = np.random.default_rng(11)
    from .group_core import multiply
    for _ in range(1000):
        a = _random_word(alphabet, rng)
        b = _random_word(alphabet, rng)
        x = int(rng.integers(g.n))
        lhs = schreier_graphs.apply_word(g, multiply(a, b), x)
        rhs = schreier_graphs.apply_word(g, a, schreier_graphs.apply_word(g, b, x))
        if lhs != rhs:
            return False
    return True


def _random_word(alphabet, rng, max_len: int = 8):
    letters = []
    for _ in range(int(rng.integers(0, max_len + 1))):
        choices = [i for i in alphabet.letters()
                   if not letters or i != alphabet.star(letters[-1])]
        letters.append(int(rng.choice(choices)))
    return ReducedWord(alphabet, tuple(letters))


_SUITES = {
    "qnormal": _suite_qnormal,
    "roundtrip": _suite_roundtrip,
    "greenseries": _suite_greenseries,
    "stopping": _suite_stopping,
    "geronimus": _suite_geronimus,
    "stoop": _suite_stoop,
    "simplelemma": _suite_simplelemma,
    "kernel": _suite_kernel,
}


def _cmd_verify(args) -> int:
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    for name in names:
        if name not in _SUITES:
            raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(_SUITES)}")
    failures = 0
    for name in names:
        for check, ok, detail in _SUITES[name]():
            print(f"{'PASS' if ok else 'FAIL'} {check}: {detail}")
            failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anisowalk", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="root seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", type=str, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    tc = sub.add_parser("tree-calc", parents=[common],
                        help="tree-side spectral and entropy summary")
    tc.add_argument("--d", type=int, required=True)
    tc.add_argument("--inv", type=str, default="id")
    tc.add_argument("--p", type=str, default="uniform")
    tc.add_argument("--k", type=int, default=16)
    tc.add_argument("--entropy-walks", type=int, default=200)
    tc.add_argument("--entropy-budget", type=int, default=2000)
    tc.add_argument("--dp-budget", type=int, default=12)
    tc.add_argument("--word-cap", type=int, default=tree_calculus.DEFAULT_WORD_CAP)
    tc.set_defaults(func=_cmd_tree_calc)

    gen = sub.add_parser("gen", parents=[common], help="generate a random graph or lift to a file")
    gen.add_argument("--family", choices=("schreier", "lift"), default="schreier")
    gen.add_argument("--d", type=int, default=3)
    gen.add_argument("--inv", type=str, default="id")
    gen.add_argument("--base", type=str, default="k4")
    gen.add_argument("--n", type=int, required=True)
    gen.set_defaults(func=_cmd_gen)

    mix = sub.add_parser("mix", parents=[common], help="TV curve and mixing times on a graph file")
    mix.add_argument("--file", type=str)
    mix.add_argument("--lift", type=str)
    mix.add_argument("--p", type=str, default="uniform")
    mix.add_argument("--start", type=int, default=0)
    mix.add_argument("--eps", type=str, default="0.25")
    mix.add_argument("--t-max", type=int, default=2000)
    mix.set_defaults(func=_cmd_mix)

    spectra = sub.add_parser("spectra", parents=[common], help="singular radii and dense spectrum")
    spectra.add_argument("--file", type=str)
    spectra.add_argument("--lift", type=str)
    spectra.add_argument("--p", type=str, default="uniform")
    spectra.add_argument("--t", type=str, default="1")
    spectra.add_argument("--dense", action="store_true")
    spectra.add_argument("--delta", type=float, default=0.05)
    spectra.set_defaults(func=_cmd_spectra)

    nb = sub.add_parser("nb", parents=[common], help="non-backtracking polynomials and distributions")
    nb.add_argument("--file", type=str, required=True)
    nb.add_argument("--k", type=int, required=True)
    nb.add_argument("--x0", type=int, default=0)
    nb.set_defaults(func=_cmd_nb)

    verify = sub.add_parser("verify", parents=[common], help="run invariant suites; nonzero exit on failure")
    verify.add_argument("--suite", type=str, default="all")
    verify.set_defaults(func=_cmd_verify)

    cutoff = sub.add_parser("cutoff", parents=[common], help="multi-size mixing experiment")
    cutoff.add_argument("--config", type=str, default=None)
    cutoff.add_argument("--family", type=str, default=None)
    cutoff.add_argument("--d", type=int, default=None)
    cutoff.add_argument("--involution", type=str, default=None)
    cutoff.add_argument("--p", type=str, default=None)
    cutoff.add_argument("--sizes", type=str, default=None)
    cutoff.add_argument("--seeds", type=str, default=None)
    cutoff.add_argument("--eps", type=str, default=None)
    cutoff.add_argument("--worst-of", dest="worst_of", type=int, default=None)
    cutoff.add_argument("--horizon-factor", dest="horizon_factor", type=float, default=None)
    cutoff.add_argument("--entropy-rate", dest="entropy_rate", type=str, default=None)
    cutoff.add_argument("--emit-plotdata", action="store_true")
    cutoff.set_defaults(func=_cmd_cutoff)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_NUMERICAL
    except AnisowalkError as exc:  # pragma: no cover - catch-all
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return EXIT_VALIDATION
    except BrokenPipeError:  # downstream consumer closed the stream
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
