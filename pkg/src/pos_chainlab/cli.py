"""Experiment driver.

Each experiment writes plain CSV plus a manifest.json recording the config,
seed, and a content hash of the outputs; identical invocations produce
byte-identical files.  Plotting is left to external tools.

    pos-chainlab <experiment> [--config PATH] [--out DIR] [--runs N]
                 [--seed S] [--assert]
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import adversary, analyzer, brw_numerics, simnet
from .lottery import MASK64, splitmix64

EXPERIMENTS = {}


def experiment(name):
    def deco(fn):
        EXPERIMENTS[name] = fn
        return fn
    return deco


def run_seed(seed: int, run_index: int) -> int:
    """Per-run seed derivation: stable under changes to the run count."""
    return splitmix64((seed ^ run_index) & MASK64)


def _pool():
    workers = int(os.environ.get("CHAINLAB_THREADS", "0")) or (os.cpu_count() or 1)
    return ThreadPoolExecutor(max_workers=workers)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(str(x) for x in row) + "\n")


class AssertionTracker:
    def __init__(self):
        self.failures = []

    def check(self, ok: bool, message: str) -> None:
        if not ok:
            self.failures.append(message)


@experiment("phi-table")
def exp_phi_table(cfg, out, runs, seed, tracker):
    sols = brw_numerics.phi_table(range(1, 11))
    rows = [(s.c, f"{s.phi_c:.6f}", f"{s.psi_c:.6f}", f"{s.theta_star:.6f}",
             f"{s.beta_c:.6f}") for s in sols]
    _write_csv(out / "phi_table.csv", "c,phi,psi,theta_star,beta_c", rows)
    golden_phi = [math.e, 2.22547, 2.01030, 1.88255, 1.79545,
                  1.73110, 1.68103, 1.64060, 1.60705, 1.57860]
    golden_beta = [1 / (1 + math.e), 0.31003, 0.33219, 0.34691, 0.35772,
                   0.36615, 0.37299, 0.37870, 0.38358, 0.38780]
    for s, gp, gb in zip(sols, golden_phi, golden_beta):
        tracker.check(abs(s.phi_c - gp) <= 5e-5, f"phi_{s.c} off: {s.phi_c} vs {gp}")
        tracker.check(abs(s.beta_c - gb) <= 5e-5, f"beta_{s.c} off: {s.beta_c} vs {gb}")


@experiment("nas-growth")
def exp_nas_growth(cfg, out, runs, seed, tracker):
    cs = cfg.get("c_list", [1, 2, 4, 8, 16, 32, 64])
    lam = cfg.get("lambda_a", 0.1)
    rows = []
    for i, c in enumerate(cs):
        lam_t = max(200.0, cfg.get("lam_t_per_c", 40.0) * c)
        rate = adversary.nas_growth_rate(c, lam, lam_t, runs=runs,
                                         seed=run_seed(seed, i))
        phi = brw_numerics.solve_phi_psi(c).phi_c
        rows.append((c, f"{rate:.6f}", f"{phi:.6f}", f"{rate / phi - 1:+.4f}"))
        tracker.check(abs(rate - phi) / phi <= 0.10,
                      f"nas growth c={c}: {rate:.4f} vs phi={phi:.4f}")
    _write_csv(out / "nas_growth.csv", "c,empirical_rate,phi_c,rel_err", rows)


@experiment("tail-bound")
def exp_tail_bound(cfg, out, runs, seed, tracker):
    lam = cfg.get("lambda_a", 0.5)
    horizon = cfg.get("t", 20.0)
    n_runs = cfg.get("n_runs", max(runs, 10000))
    base = math.ceil(math.e * lam * horizon)
    max_depth = base + 3
    exceed = np.zeros(3, dtype=np.int64)
    for r in range(n_runs):
        rng = np.random.default_rng(run_seed(seed, r))
        mins = adversary.sample_godfather_levels(1, lam, max_depth, keep=500,
                                                 rng=rng, margin_arrivals=10.0)
        for xi, x in enumerate((1, 2, 3)):
            if mins[base + x] <= horizon:
                exceed[xi] += 1
    rows = []
    for xi, x in enumerate((1, 2, 3)):
        p_emp = exceed[xi] / n_runs
        bound = math.exp(-x)
        se = math.sqrt(max(p_emp * (1 - p_emp), 1e-12) / n_runs)
        rows.append((x, f"{p_emp:.6f}", f"{bound:.6f}", f"{se:.6f}"))
        tracker.check(p_emp <= bound + 2 * se,
                      f"tail x={x}: {p_emp:.4f} > {bound:.4f} + 2se")
    _write_csv(out / "tail_bound.csv", "x,empirical,bound,se", rows)


@experiment("rg-table")
def exp_rg_table(cfg, out, runs, seed, tracker):
    flawed_golden = [1, 1.7071, 2.1072, 2.3428, 2.4905,
                     2.5883, 2.6562, 2.7051, 2.7414]
    corrected_golden = [1, 1.6531, 2.0447, 2.2708, 2.4084,
                        2.4952, 2.5472, 2.5805, 2.6048]
    rows = []
    prev = 0.0
    for g in range(0, 9):
        rf = brw_numerics.r_g_flawed(g)
        kw = {k: cfg[k] for k in ('replicas', 'periods') if k in cfg}
        rc = brw_numerics.r_g_front_speed(g, seed=seed + g, **kw)
        rows.append((g, f"{rf:.4f}", f"{rc:.4f}"))
        tracker.check(abs(rf - flawed_golden[g]) <= 5e-4,
                      f"flawed R_{g}: {rf:.5f} vs {flawed_golden[g]}")
        tracker.check(abs(rc - corrected_golden[g]) <= 5e-3,
                      f"corrected R_{g}: {rc:.4f} vs {corrected_golden[g]}")
        tracker.check(rc <= math.e + 1e-9, f"corrected R_{g} exceeds e")
        tracker.check(rc >= prev - 5e-3, f"corrected R_{g} not monotone")
        prev = rc
    tracker.check(brw_numerics.r_g_flawed(8) > math.e,
                  "flawed R_8 does not exceed e")
    _write_csv(out / "rg_table.csv", "g,flawed,corrected", rows)


@experiment("d1-rates")
def exp_d1_rates(cfg, out, runs, seed, tracker):
    a1 = brw_numerics.a1()
    a1t = brw_numerics.a1_tilde()
    plain = brw_numerics.ctmc_tip_sim("plain_d1", horizon=3e4, seed=seed)
    bal = brw_numerics.ctmc_tip_sim("balanced_d1", horizon=3e4, seed=seed + 1)
    rows = [("a1", f"{a1:.6f}", "1/(e-2)"),
            ("a1_tilde", f"{a1t:.6f}", "4/(3e^2-19)"),
            ("ctmc_plain", f"{plain:.6f}", ""),
            ("ctmc_balanced", f"{bal:.6f}", "")]
    _write_csv(out / "d1_rates.csv", "quantity,value,form", rows)
    tracker.check(abs(a1 - 1.392211) <= 1e-6, "a1 constant off")
    tracker.check(abs(plain - a1) / a1 <= 0.03, f"plain ctmc {plain:.4f} vs {a1:.4f}")
    tracker.check(abs(bal - a1t) / a1t <= 0.03, f"balanced ctmc {bal:.4f} vs {a1t:.4f}")


@experiment("balance-attack")
def exp_balance_attack(cfg, out, runs, seed, tracker):
    g = cfg.get("g", 2)
    beta = cfg.get("beta", 0.38)
    fd = cfg.get("f_delta", 0.1)
    horizon = cfg.get("horizon_slots", 2000)
    n_runs = max(runs, cfg.get("min_runs", 200))
    bal = adversary.run_balance_g(g, beta, fd, horizon, n_runs, seed=seed)
    priv = adversary.run_private_attack_g(g, beta, fd, horizon, n_runs, seed=seed + 1)
    max_len = int(max(bal["fork_lengths"].max(), priv["fork_lengths"].max(), 100))
    ls, pb = adversary.fork_cdf(bal["fork_lengths"], max_len)
    _, pp = adversary.fork_cdf(priv["fork_lengths"], max_len)
    rows = [(int(l), f"{b:.4f}", f"{p:.4f}") for l, b, p in zip(ls, pb, pp)]
    _write_csv(out / f"balance_g{g}_beta{beta}.csv",
               "fork_len,balance_prob,private_prob", rows)
    _write_csv(out / "fork_cdf_balance.csv", "fork_len,prob",
               [(int(l), f"{b:.4f}") for l, b in zip(ls, pb)])
    _write_csv(out / "fork_cdf_private.csv", "fork_len,prob",
               [(int(l), f"{p:.4f}") for l, p in zip(ls, pp)])
    p100_b = float((bal["fork_lengths"] >= 100).mean())
    p100_p = float((priv["fork_lengths"] >= 100).mean())
    summary = [("balance_p100", f"{p100_b:.4f}"), ("private_p100", f"{p100_p:.4f}")]
    _write_csv(out / "summary.csv", "stat,value", summary)
    tracker.check(p100_b - p100_p >= 0.05,
                  f"dominance at (g={g}, beta={beta}): {p100_b:.3f} vs {p100_p:.3f}")
    if (g, beta) == (2, 0.38):
        tracker.check(0.08 <= p100_b <= 0.40,
                      f"balance P(fork>=100)={p100_b:.3f} outside [0.08, 0.40]")


@experiment("threshold-sweep")
def exp_threshold_sweep(cfg, out, runs, seed, tracker):
    lam_h_delta = cfg.get("lambda_h_delta", [0.0, 0.05, 0.1, 0.2, 0.5])
    cs = cfg.get("c_list", [1, 2, 5, 10, 50, 100])
    rows = []
    for c in cs:
        for x in lam_h_delta:
            th = brw_numerics.beta_star(c, x)
            rows.append((c, x, f"{th.g_factor:.6f}", f"{th.beta_star:.6f}"))
    _write_csv(out / "threshold_sweep.csv", "c,lambda_h_delta,g_factor,beta_star", rows)


@experiment("convergence-freq")
def exp_convergence_freq(cfg, out, runs, seed, tracker):
    beta = cfg.get("beta", 0.2)
    horizon = cfg.get("horizon_time", 500.0)
    lam_h = 1.0
    lam_a = beta / (1.0 - beta) * lam_h
    n_runs = cfg.get("n_runs", max(runs, 20))
    freqs = []
    for r in range(n_runs):
        trace = simnet.run_continuous(lam_a, lam_h, horizon,
                                      adversary="nas_per_honest",
                                      seed=run_seed(seed, r))
        rep = analyzer.detect_convergence_zero_delay(trace)
        if not analyzer.verify_regen_prefix(trace, rep):
            tracker.check(False, f"run {r}: regen cross-check failed")
        freqs.append(rep.empirical_frequency)
    rows = [(r, f"{f:.6f}") for r, f in enumerate(freqs)]
    _write_csv(out / "convergence_freq.csv", "run,frequency", rows)
    mean_freq = float(np.mean(freqs))
    _write_csv(out / "summary.csv", "stat,value",
               [("mean_frequency", f"{mean_freq:.6f}")])
    tracker.check(mean_freq > 0.05, f"convergence frequency {mean_freq:.4f} <= 0.05")
    # supercritical side: the private tree outruns the honest chain
    beats = 0
    n_super = cfg.get("n_super", 20)
    for r in range(n_super):
        rng_seed = run_seed(seed ^ 0xBEEF, r)
        lam_a2 = 0.35
        lam_h2 = 0.65
        tr = simnet.run_continuous(lam_a2, lam_h2, horizon,
                                   adversary="private_nas", seed=rng_seed)
        depth = tr.tree_depth_times[0].size
        if depth > tr.honest_times.size:
            beats += 1
    tracker.check(beats >= 0.8 * n_super,
                  f"beta=0.35 private tree won only {beats}/{n_super}")


@experiment("coin-grind-demo")
def exp_coin_grind(cfg, out, runs, seed, tracker):
    s = cfg.get("s", 50)
    beta = cfg.get("beta", 0.1)
    horizon = cfg.get("horizon_slots", 5000)
    fd = cfg.get("f_delta", 1.0)
    n_runs = cfg.get("n_runs", max(runs, 20))
    kappa = cfg.get("kappa", 50)
    results = []
    for rule in ("longest_chain", "s_trunc"):
        overtakes = 0
        violations = 0
        for r in range(n_runs):
            config = simnet.SimConfig.from_dict({
                "beta": beta, "f_delta": fd, "horizon_slots": horizon,
                "honest_rule": rule, "s": s if rule == "s_trunc" else "inf",
                "seed": run_seed(seed, r), "dynamic_stake": True,
                "attack": "coin_grind", "attack_params": {"s": s},
                "kappa": kappa,
            })
            trace = simnet.run(config)
            tree = trace.final_tree
            tip = trace.per_view_tips[-1][0]
            adv_tip_chain = tree.path_to_genesis(tip)
            overtaken = any(not tree.blocks[b].honest for b in adv_tip_chain[1:])
            overtakes += overtaken
            violations += len(analyzer.check_common_prefix(trace, kappa,
                                                           max_violations=1))
        results.append((rule, overtakes / n_runs, violations))
    _write_csv(out / "coin_grind.csv", "rule,overtake_frac,kappa_violations",
               [(r, f"{o:.3f}", v) for r, o, v in results])
    by_rule = {r: (o, v) for r, o, v in results}
    tracker.check(by_rule["longest_chain"][0] >= 0.9,
                  f"longest-chain overtake fraction {by_rule['longest_chain'][0]:.2f} < 0.9")
    tracker.check(by_rule["s_trunc"][1] == 0,
                  f"s_trunc saw {by_rule['s_trunc'][1]} kappa-deep reversions")


def _hash_outputs(out: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(out.glob("*.csv")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pos-chainlab",
                                     description="longest-chain PoS simulation lab")
    parser.add_argument("experiment", choices=sorted(EXPERIMENTS))
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--runs", type=int, default=1)
    parser.add_argument("--seed", type=lambda s: int(s, 0), default=2024)
    parser.add_argument("--assert", dest="assert_", action="store_true",
                        help="exit 3 when an acceptance threshold fails")
    args = parser.parse_args(argv)

    cfg = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        if not isinstance(cfg, dict):
            print("config error: top-level JSON object required", file=sys.stderr)
            return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output dir: {exc}", file=sys.stderr)
        return 2

    tracker = AssertionTracker()
    try:
        EXPERIMENTS[args.experiment](cfg, out, args.runs, args.seed, tracker)
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    manifest = {
        "experiment": args.experiment,
        "config": cfg,
        "runs": args.runs,
        "seed": args.seed,
        "content_sha256": _hash_outputs(out),
        "assert_failures": tracker.failures,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for msg in tracker.failures:
        print(f"ASSERT FAIL: {msg}", file=sys.stderr)
    if args.assert_ and tracker.failures:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
