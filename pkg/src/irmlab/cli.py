"""Configuration-driven experiment runner and command-line interface.

Scenarios mirror the application families: Gaussian baseline self-test,
generalized-Wigner, band, sparse, block, heavy-tailed, 2-lifts, Wishart,
the block-diagonal negative control, the exact diagram and path-expansion
suites, and a mixing audit.  Reports are machine-readable JSON with fully
deterministic bytes for a fixed (config, seed); wall-clock metadata goes to
a sidecar file.  Exit codes: 0 pass, 2 check failed, 3 inconclusive
(horizon-limited / low power), 64 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from irmlab import chebyshev, diagrams, edgestats, ensembles, markov, profiles

EXIT_PASS = 0
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# scenario registry
# ---------------------------------------------------------------------------

SCENARIOS = {
    "goe-baseline": {"N": 150, "replicas": 300, "k": 2, "beta": 1, "level": 0.01},
    "gw": {"N": 150, "replicas": 300, "k": 2, "c": 0.5, "C": 2.0, "level": 0.01},
    "band": {"N": 150, "W": 0, "replicas": 300, "k": 2, "density": "gaussian",
             "level": 0.01},
    "sparse": {"N": 150, "theta": 4.0, "replicas": 300, "k": 2, "level": 0.01,
               "entry_law": "theta_rademacher"},
    "block": {"D": 4, "M": 40, "lam": 0.5, "replicas": 300, "k": 2, "level": 0.01},
    "heavy": {"N": 150, "df": 9.0, "zeta": 0.25, "replicas": 300, "k": 2,
              "level": 0.01},
    "lift2": {"N": 32, "d": 4, "trials": 20, "tol": 1e-8},
    "wishart": {"M": 100, "N": 150, "theta": 2.0, "replicas": 300, "k": 2,
                "level": 0.01, "builder": "banded"},
    "counterexample-blockdiag": {"N": 150, "replicas": 300, "k": 1, "level": 1e-3},
    "diagrams-exact": {"N": 3, "max_m": 6, "betas": [1, 2], "spike": 0.0,
                       "tol": 1e-9},
    "nbpath-exact": {"N": 6, "n": 8, "seeds": 20, "wishart_M": 3, "wishart_N": 5,
                     "wishart_n": 4, "tol": 1e-8},
    "mixing-audit": {"preset": "uniform", "N": 64, "t": 1, "gamma": 1.0,
                     "delta": 0.05, "horizon": 64},
}


def list_presets():
    """Scenario names with their default parameters."""
    return {name: dict(params) for name, params in SCENARIOS.items()}


def load_config(path):
    with open(path) as fh:
        text = fh.read()
    if path.endswith(".toml"):
        try:
            import tomllib
        except ImportError as exc:  # python 3.10 without tomllib
            raise ConfigError("TOML configs need Python >= 3.11") from exc
        doc = tomllib.loads(text)
    else:
        if not text.strip():
            raise ConfigError("empty config file")
        doc = json.loads(text)
    return parse_config(doc)


def parse_config(doc):
    if not isinstance(doc, dict) or not doc:
        raise ConfigError("config must be a non-empty object")
    allowed_top = {"scenario", "seed", "out", "params", "svg", "csv", "threads"}
    unknown = set(doc) - allowed_top
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scenario = doc.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    params = dict(SCENARIOS[scenario])
    for key, val in (doc.get("params") or {}).items():
        if key not in params:
            raise ConfigError(f"unknown parameter {key!r} for scenario {scenario}")
        params[key] = val
    _range_check(scenario, params)
    return {
        "scenario": scenario,
        "seed": int(doc.get("seed", 0)),
        "out": doc.get("out", "."),
        "params": params,
        "svg": bool(doc.get("svg", False)),
        "csv": bool(doc.get("csv", False)),
    }


def _range_check(scenario, p):
    def need(cond, msg):
        if not cond:
            raise ConfigError(f"{scenario}: {msg}")

    if "replicas" in p:
        need(p["replicas"] >= 100, "replicas must be >= 100")
    if "N" in p:
        need(p["N"] >= 2, "N must be >= 2")
    if scenario == "gw":
        need(0 < p["c"] <= 1 <= p["C"], "need 0 < c <= 1 <= C")
    if scenario == "sparse":
        need(p["theta"] >= 1, "theta must be >= 1")
    if scenario == "block":
        need(0 <= p["lam"] <= 1, "lambda must lie in [0,1]")
    if scenario == "heavy":
        need(0 < p["zeta"] < 1 / 3, "zeta must lie in (0, 1/3)")
        need(p["df"] > 4, "df must exceed 4")
    if scenario == "lift2":
        need(p["d"] in (2, 4, 8), "d must be one of 2, 4, 8")
        need(p["N"] <= 64, "lift check capped at N = 64")
    if scenario == "wishart":
        need(p["M"] <= p["N"], "need M <= N")
    if scenario == "mixing-audit":
        need(0 < p["delta"] < 0.1, "delta must lie in (0, 0.1)")
        need(1 <= p["t"] <= p["horizon"], "need 1 <= t <= horizon")


# ---------------------------------------------------------------------------
# scenario runners
# ---------------------------------------------------------------------------

def _edge_scenario(test_spec, baseline_spec, p, seed, expect_rejection=False):
    rep = edgestats.universality_test(
        test_spec, baseline_spec, k=p["k"], replicas=p["replicas"],
        seed=seed, level=p["level"], keep_samples=True)
    observed = rep.rejected
    status = "rejection expected and observed" if expect_rejection and observed else (
        "no rejection (as expected)" if not expect_rejection and not observed else
        "unexpected outcome")
    code = EXIT_PASS if (observed == expect_rejection) else EXIT_FAIL
    payload = {"edge_report": rep.to_json(), "status": status,
               "criteria": {"level": p["level"], "bonferroni_k": p["k"],
                            "expect_rejection": expect_rejection},
               # raw rescaled samples: popped by the writer (CSV/SVG), kept
               # out of the deterministic report body
               "_samples": {"test": rep.rescaled_test,
                            "baseline": rep.rescaled_baseline}}
    return code, payload, rep


def run_scenario(scenario, params, seed):
    p = params
    if scenario == "goe-baseline":
        base = ensembles.goe_reference_spec(p["N"], beta=p["beta"])
        return _edge_scenario(base, base, p, seed)[:2]

    if scenario == "gw":
        prof = profiles.generalized_wigner_profile(p["N"], p["c"], p["C"], seed=seed)
        test = ensembles.EnsembleSpec(profile=prof)
        return _edge_scenario(test, ensembles.goe_reference_spec(p["N"]), p, seed)[:2]

    if scenario == "band":
        N = p["N"]
        W = p["W"] or int(math.ceil(N ** 0.8))
        prof = profiles.band_profile(1, N, W, p["density"])
        test = ensembles.EnsembleSpec(profile=prof)
        return _edge_scenario(test, ensembles.goe_reference_spec(N), p, seed)[:2]

    if scenario == "sparse":
        prof = profiles.uniform_profile(p["N"])
        test = ensembles.EnsembleSpec(entry_law=p["entry_law"], theta=p["theta"],
                                      profile=prof)
        return _edge_scenario(test, ensembles.goe_reference_spec(p["N"]), p, seed)[:2]

    if scenario == "block":
        prof = profiles.block_wegner_profile(p["D"], p["M"], p["lam"])
        test = ensembles.EnsembleSpec(profile=prof)
        N = p["D"] * p["M"]
        return _edge_scenario(test, ensembles.goe_reference_spec(N), p, seed)[:2]

    if scenario == "heavy":
        prof = profiles.uniform_profile(p["N"])
        test = ensembles.EnsembleSpec(entry_law="heavy_tailed", tail_df=p["df"],
                                      zeta=p["zeta"], profile=prof)
        return _edge_scenario(test, ensembles.goe_reference_spec(p["N"]), p, seed)[:2]

    if scenario == "counterexample-blockdiag":
        N = p["N"]
        if N % 2:
            raise ConfigError("blockdiag control needs even N")
        prof = profiles.block_wegner_profile(2, N // 2, 0.0)
        test = ensembles.EnsembleSpec(profile=prof)
        code, payload, rep = _edge_scenario(
            test, ensembles.goe_reference_spec(N), p, seed, expect_rejection=True)
        payload["criteria"]["p_threshold"] = p["level"]
        if code == EXIT_PASS and rep.p_values[0] >= p["level"]:
            code = EXIT_FAIL
        return code, payload

    if scenario == "lift2":
        rng = np.random.default_rng(seed)
        results = []
        worst = 0.0
        for t in range(p["trials"]):
            g_seed, s_seed = int(rng.integers(2 ** 31)), int(rng.integers(2 ** 31))
            G = profiles.random_regular_adjacency(p["N"], p["d"], seed=g_seed)
            S = edgestats.random_edge_signs(G, seed=s_seed)
            res = edgestats.lift_spectrum_check(G, S, tol=p["tol"])
            worst = max(worst, res["defect"])
            results.append(res["pass"])
        ok = all(results)
        return (EXIT_PASS if ok else EXIT_FAIL), {
            "trials": p["trials"], "worst_defect": worst, "all_pass": ok,
            "criteria": {"tol": p["tol"]}}

    if scenario == "wishart":
        prof_t = profiles.wishart_profile(p["M"], p["N"], builder=p["builder"])
        prof_b = profiles.wishart_profile(p["M"], p["N"], builder="uniform")
        test = ensembles.EnsembleSpec(model="wishart", profile=prof_t,
                                      entry_law="theta_goe", theta=p["theta"])
        base = ensembles.EnsembleSpec(model="wishart", profile=prof_b)
        return _edge_scenario(test, base, p, seed)[:2]

    if scenario == "diagrams-exact":
        prof = profiles.uniform_profile(p["N"])
        rng = np.random.default_rng(seed)
        M0 = rng.uniform(0.5, 1.5, (p["N"], p["N"]))
        prof2 = profiles.VarianceProfile(
            profiles.sinkhorn_symmetric(0.5 * (M0 + M0.T)), kind="square").validate()
        A = None
        if p["spike"]:
            A = np.zeros((p["N"], p["N"]))
            A[0, 0] = p["spike"]
        checks = []
        for beta in p["betas"]:
            for pr in (prof, prof2):
                for m in range(1, p["max_m"] + 1):
                    checks.append(diagrams.verify_expansions([m], pr, A, beta, tol=p["tol"]))
                checks.append(diagrams.verify_expansions([2, 2], pr, A, beta, tol=p["tol"]))
        ok = all(c["pass"] for c in checks)
        return (EXIT_PASS if ok else EXIT_FAIL), {
            "n_checks": len(checks), "all_pass": ok,
            "failures": [c for c in checks if not c["pass"]],
            "criteria": {"tol": p["tol"]}}

    if scenario == "nbpath-exact":
        prof = profiles.uniform_profile(p["N"])
        worst_w = 0.0
        for s in range(p["seeds"]):
            W = ensembles.sample_wigner(p["N"], 1, seed + s)
            H = np.sqrt(prof.variances) * W
            u = np.zeros(p["N"]); u[0] = 1.0
            A = 0.8 * np.outer(u, u)
            from irmlab import nonbacktracking as nb
            worst_w = max(worst_w,
                          nb.verify_wigner_path_expansion(H, prof, p["n"]),
                          nb.verify_wigner_path_expansion(H, prof, p["n"], A))
        wprof = profiles.wishart_profile(p["wishart_M"], p["wishart_N"])
        worst_q = 0.0
        from irmlab import nonbacktracking as nb
        for s in range(p["seeds"]):
            rng = ensembles.rng_for(seed, s, 3)
            Hb = np.sqrt(wprof.variances) * rng.standard_normal(
                (p["wishart_M"], p["wishart_N"]))
            worst_q = max(worst_q, nb.verify_wishart_path_expansion(
                Hb, wprof, p["wishart_n"]))
        ok = worst_w <= p["tol"] and worst_q <= p["tol"]
        return (EXIT_PASS if ok else EXIT_FAIL), {
            "worst_wigner_residual": worst_w, "worst_wishart_residual": worst_q,
            "criteria": {"tol": p["tol"]}, "seeds": p["seeds"]}

    if scenario == "mixing-audit":
        prof = _profile_preset(p["preset"], p["N"], seed)
        report = markov.check_mixing(prof, p["t"], p["gamma"], p["delta"], p["horizon"])
        if report.refuted:
            code = EXIT_FAIL
        elif report.horizon_limited:
            code = EXIT_INCONCLUSIVE
        else:
            code = EXIT_PASS if report.passed else EXIT_FAIL
        return code, {"mixing_report": report.to_json(),
                      "criteria": {"gamma": p["gamma"], "delta": p["delta"]}}

    raise ConfigError(f"unhandled scenario {scenario}")


def _profile_preset(name, N, seed):
    if name == "uniform":
        return profiles.uniform_profile(N)
    if name == "band":
        return profiles.band_profile(1, N, max(2, N // 8), "gaussian")
    if name == "gw":
        return profiles.generalized_wigner_profile(N, 0.5, 2.0, seed=seed)
    if name == "sparse":
        theta = 4.0
        p = np.full((N, N), 1.0 / theta)
        w = np.full((N, N), theta)
        return profiles.sparse_profile(p, w, d=float(N))
    if name == "block":
        return profiles.block_wegner_profile(2, N // 2, 0.5)
    if name == "blockdiag":
        return profiles.block_wegner_profile(2, N // 2, 0.0)
    if name == "regular":
        d = 4 if N > 4 else 2
        return profiles.regular_graph_profile(
            profiles.random_regular_adjacency(N, d, seed=seed), d)
    if name == "wishart":
        return profiles.wishart_profile(max(2, N // 2), N, builder="banded")
    raise ConfigError(f"unknown profile preset {name!r}")


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

def emit_svg(sample_sets, bins, path):
    """Histogram overlay as a standalone SVG with deterministic bytes."""
    if not sample_sets or any(len(v) == 0 for v in sample_sets.values()):
        raise ConfigError("refusing to plot empty sample sets")
    lo = min(float(np.min(v)) for v in sample_sets.values())
    hi = max(float(np.max(v)) for v in sample_sets.values())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    width, height, pad = 640, 360, 40
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    max_h = 0.0
    hists = {}
    for label, v in sample_sets.items():
        h, _ = np.histogram(np.asarray(v, dtype=float), bins=edges, density=True)
        hists[label] = h
        max_h = max(max_h, float(h.max()) if h.size else 0.0)
    if max_h <= 0:
        max_h = 1.0
    for ci, (label, h) in enumerate(sorted(hists.items())):
        color = colors[ci % len(colors)]
        pts = []
        for i, val in enumerate(h):
            x0 = pad + (width - 2 * pad) * i / bins
            x1 = pad + (width - 2 * pad) * (i + 1) / bins
            y = height - pad - (height - 2 * pad) * val / max_h
            pts.append(f"{x0:.2f},{y:.2f} {x1:.2f},{y:.2f}")
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{" ".join(pts)}"/>')
        parts.append(f'<text x="{pad + 8}" y="{pad + 16 * (ci + 1)}" fill="{color}" '
                     f'font-size="12">{label}</text>')
    parts.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
                 f'y2="{height - pad}" stroke="black"/>')
    parts.append("</svg>")
    data = "\n".join(parts).encode()
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def run(config):
    """Execute a parsed config; write report.json (+ sidecar); return exit code."""
    scenario = config["scenario"]
    seed = config["seed"]
    outdir = config["out"]
    os.makedirs(outdir, exist_ok=True)
    t0 = time.time()
    try:
        code, payload = run_scenario(scenario, config["params"], seed)
    except (ConfigError, profiles.ProfileError, ensembles.EnsembleError) as exc:
        sys.stderr.write(f"invalid configuration: {exc}\n")
        return EXIT_USAGE
    samples = payload.pop("_samples", None) if isinstance(payload, dict) else None
    report = {
        "scenario": scenario,
        "seed": seed,
        "params": config["params"],
        "exit_code": code,
        "payload": payload,
    }
    rpath = os.path.join(outdir, "report.json")
    with open(rpath, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(outdir, "report.meta.json"), "w") as fh:
        json.dump({"elapsed_seconds": time.time() - t0,
                   "written_at": time.strftime("%Y-%m-%dT%H:%M:%S")}, fh)
    if samples and samples.get("test") is not None:
        rt = np.asarray(samples["test"])
        rb = np.asarray(samples["baseline"])
        if config.get("csv"):
            with open(os.path.join(outdir, "samples.csv"), "w") as fh:
                fh.write("which,coordinate,value\n")
                for which, rows in (("test", rt), ("baseline", rb)):
                    for row in rows:
                        for i, v in enumerate(row):
                            fh.write(f"{which},{i},{float(v)!r}\n")
        if config.get("svg"):
            for i in range(rt.shape[1]):
                emit_svg({"test": rt[:, i], "baseline": rb[:, i]}, 40,
                         os.path.join(outdir, f"hist_coord{i}.svg"))
    return code


# ---------------------------------------------------------------------------
# argparse front end
# ---------------------------------------------------------------------------

def main(argv=None):
    ap = argparse.ArgumentParser(prog="irmlab")
    ap.add_argument("--threads", type=int,
                    default=int(os.environ.get("IRMLAB_THREADS", "1")),
                    help="accepted for interface compatibility; execution is "
                         "sequential and results do not depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)

    p_presets = sub.add_parser("presets", help="list scenarios and defaults")

    p_sample = sub.add_parser("sample", help="draw ensemble replicas")
    p_sample.add_argument("--spec", required=True, help="EnsembleSpec JSON file")
    p_sample.add_argument("--replicas", type=int, default=1)
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--out", default=".")
    p_sample.add_argument("--eigs-only", action="store_true")

    p_mix = sub.add_parser("mixing", help="mixing certificates")
    p_mix.add_argument("action", choices=["check"])
    p_mix.add_argument("--profile", help="profile JSON file")
    p_mix.add_argument("--profile-preset", dest="preset")
    p_mix.add_argument("--N", type=int, default=64)
    p_mix.add_argument("--t", type=int, required=True)
    p_mix.add_argument("--gamma", type=float, required=True)
    p_mix.add_argument("--delta", type=float, required=True)
    p_mix.add_argument("--horizon", type=int, required=True)
    p_mix.add_argument("--fourier", action="store_true")
    p_mix.add_argument("--seed", type=int, default=0)

    p_cheb = sub.add_parser("cheb", help="exact polynomial verification suites")
    p_cheb.add_argument("action", choices=["verify"])
    p_cheb.add_argument("--suite", choices=["orthogonality", "product", "wishart-poly"],
                        required=True)
    p_cheb.add_argument("--max", type=int, default=20)
    p_cheb.add_argument("--seed", type=int, default=0)

    p_diag = sub.add_parser("diagrams", help="exact diagram-identity verification")
    p_diag.add_argument("action", choices=["verify"])
    p_diag.add_argument("--s", type=int, default=1)
    p_diag.add_argument("--n", type=int, default=4)
    p_diag.add_argument("--N", type=int, default=3)
    p_diag.add_argument("--beta", type=int, default=1)
    p_diag.add_argument("--spike", type=float, default=0.0)

    p_nb = sub.add_parser("nbpath", help="path-expansion verification")
    p_nb.add_argument("action", choices=["verify"])
    p_nb.add_argument("--model", choices=["wigner", "wishart"], default="wigner")
    p_nb.add_argument("--n", type=int, default=6)
    p_nb.add_argument("--N", type=int, default=6)
    p_nb.add_argument("--seeds", type=int, default=10)

    p_edge = sub.add_parser("edge", help="edge-statistics comparison")
    p_edge.add_argument("action", choices=["compare"])
    p_edge.add_argument("--test", required=True, help="EnsembleSpec JSON")
    p_edge.add_argument("--baseline", required=True, help="EnsembleSpec JSON")
    p_edge.add_argument("--k", type=int, default=2)
    p_edge.add_argument("--replicas", type=int, default=300)
    p_edge.add_argument("--seed", type=int, default=0)
    p_edge.add_argument("--out", default="report.json")
    p_edge.add_argument("--svg", default=None)

    args = ap.parse_args(argv)

    if args.command == "run":
        try:
            config = load_config(args.config)
        except (ConfigError, json.JSONDecodeError, OSError) as exc:
            sys.stderr.write(f"invalid configuration: {exc}\n")
            return EXIT_USAGE
        if args.seed is not None:
            config["seed"] = args.seed
        if args.out is not None:
            config["out"] = args.out
        return run(config)

    if args.command == "presets":
        print(json.dumps(list_presets(), sort_keys=True, indent=1))
        return EXIT_PASS

    if args.command == "sample":
        with open(args.spec) as fh:
            spec = ensembles.EnsembleSpec.from_json(json.load(fh))
        spec.seed = args.seed
        os.makedirs(args.out, exist_ok=True)
        for r in range(args.replicas):
            X = ensembles.sample(spec, replica=r)
            if args.eigs_only:
                np.savetxt(os.path.join(args.out, f"eigs_{r:05d}.csv"),
                           np.sort(np.linalg.eigvalsh(X))[::-1], delimiter=",")
            else:
                np.savetxt(os.path.join(args.out, f"matrix_{r:05d}.csv"),
                           np.asarray(X, dtype=float), delimiter=",")
        return EXIT_PASS

    if args.command == "mixing":
        if args.profile:
            prof = profiles.VarianceProfile.load(args.profile)
        elif args.preset:
            prof = _profile_preset(args.preset, args.N, args.seed)
        else:
            sys.stderr.write("need --profile or --profile-preset\n")
            return EXIT_USAGE
        if prof.kind == "bipartite":
            rep = markov.bipartite_check_mixing(prof, args.t, args.gamma,
                                                args.delta, args.horizon)
        else:
            rep = markov.check_mixing(prof, args.t, args.gamma, args.delta,
                                      args.horizon)
        print(rep.dumps())
        if rep.refuted:
            return EXIT_FAIL
        if rep.horizon_limited:
            return EXIT_INCONCLUSIVE
        return EXIT_PASS if rep.passed else EXIT_FAIL

    if args.command == "cheb":
        if args.suite == "orthogonality":
            rep = chebyshev.orthogonality_check(args.max)
        elif args.suite == "product":
            rng = np.random.default_rng(args.seed)
            worst = None
            ok = True
            for _ in range(200):
                ms = rng.integers(1, 16, size=int(rng.integers(1, 5)))
                good, lhs, rhs = chebyshev.product_coeff_identity(list(ms))
                if not good:
                    ok = False
                    worst = {"m_list": ms.tolist(), "lhs": lhs, "rhs": rhs}
                    break
            rep = {"passed": ok, "worst": worst}
        else:
            worst = 0.0
            for alpha in (0.25, 0.5, 1.0):
                for n in range(1, args.max + 1):
                    worst = max(worst, chebyshev.q_vs_chebyshev_grid(n, alpha))
            exact = all(chebyshev.un_pn_identity_exact(n, 0.5) for n in range(1, min(args.max, 12) + 1))
            rep = {"passed": bool(worst <= 1e-10 and exact), "worst_rel_error": worst,
                   "exact_un_pn": exact}
        print(json.dumps(rep, sort_keys=True))
        return EXIT_PASS if rep["passed"] else EXIT_FAIL

    if args.command == "diagrams":
        prof = profiles.uniform_profile(args.N)
        A = None
        if args.spike:
            A = np.zeros((args.N, args.N))
            A[0, 0] = args.spike
        ms = [args.n] * args.s
        rep = diagrams.verify_expansions(ms, prof, A, args.beta)
        print(json.dumps(rep, sort_keys=True))
        return EXIT_PASS if rep["pass"] else EXIT_FAIL

    if args.command == "nbpath":
        from irmlab import nonbacktracking as nb
        worst = 0.0
        if args.model == "wigner":
            prof = profiles.uniform_profile(args.N)
            for s in range(args.seeds):
                W = ensembles.sample_wigner(args.N, 1, s)
                H = np.sqrt(prof.variances) * W
                worst = max(worst, nb.verify_wigner_path_expansion(H, prof, args.n))
        else:
            M = max(2, args.N - 2)
            prof = profiles.wishart_profile(M, args.N)
            for s in range(args.seeds):
                rng = ensembles.rng_for(s, 0, 0)
                H = np.sqrt(prof.variances) * rng.standard_normal((M, args.N))
                worst = max(worst, nb.verify_wishart_path_expansion(H, prof, args.n))
        print(json.dumps({"worst_residual": worst, "passed": worst <= 1e-8},
                         sort_keys=True))
        return EXIT_PASS if worst <= 1e-8 else EXIT_FAIL

    if args.command == "edge":
        with open(args.test) as fh:
            t_spec = ensembles.EnsembleSpec.from_json(json.load(fh))
        with open(args.baseline) as fh:
            b_spec = ensembles.EnsembleSpec.from_json(json.load(fh))
        rep = edgestats.universality_test(t_spec, b_spec, k=args.k,
                                          replicas=args.replicas, seed=args.seed,
                                          keep_samples=True)
        with open(args.out, "w") as fh:
            json.dump(rep.to_json(), fh, sort_keys=True)
        rt = np.asarray(rep.rescaled_test)
        rb = np.asarray(rep.rescaled_baseline)
        csv_path = os.path.splitext(args.out)[0] + "_samples.csv"
        with open(csv_path, "w") as fh:
            fh.write("which,coordinate,value\n")
            for which, arr in (("test", rt), ("baseline", rb)):
                for row in arr:
                    for i, v in enumerate(row):
                        fh.write(f"{which},{i},{float(v)!r}\n")
        if args.svg:
            emit_svg({"test": rt[:, 0], "baseline": rb[:, 0]}, 40, args.svg)
        return EXIT_FAIL if rep.rejected else EXIT_PASS

    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
