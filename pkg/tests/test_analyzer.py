import math

import numpy as np
import pytest

from pos_chainlab import adversary, analyzer, brw_numerics, simnet
from pos_chainlab.simnet import ContinuousTrace, SimConfig


def test_zero_adversary_every_block_converges():
    tr = simnet.run_continuous(0.0, 1.0, 200.0, adversary="nas_per_honest", seed=1)
    # lambda_a = 0 gives empty trees; patch mode for the detector
    tr.tree_depth_times = [np.empty(0) for _ in range(tr.honest_times.size + 1)]
    rep = analyzer.detect_convergence_zero_delay(tr)
    margin = 10.0
    eligible = [j for j in range(1, tr.honest_times.size + 1)
                if tr.horizon - tr.honest_times[j - 1] >= margin]
    assert len(rep.events) == len(eligible)
    assert rep.horizon_caveat


def test_subcritical_frequency_positive():
    tr = simnet.run_continuous(0.25, 1.0, 300.0, seed=3)
    rep = analyzer.detect_convergence_zero_delay(tr)
    assert rep.empirical_frequency > 0.05
    assert analyzer.verify_regen_prefix(tr, rep)


def test_detector_requires_tree_records():
    tr = simnet.run_continuous(0.2, 1.0, 50.0, adversary="private_nas", seed=1)
    with pytest.raises(ValueError):
        analyzer.detect_convergence_zero_delay(tr)


def test_delay_detector_degenerates_at_zero_delta():
    tr = simnet.run_continuous(0.25, 1.0, 300.0, seed=9)
    rep0 = analyzer.detect_convergence_zero_delay(tr)
    repd = analyzer.detect_convergence_delay(tr, delta=0.0)
    # with delta = 0 every block is a loner and the lead counts all blocks
    assert [j for j, _ in repd.events] == [j for j, _ in rep0.events]


def test_delay_detector_no_loners_when_gaps_small():
    taus = np.arange(1, 51) * 0.1          # uniform 0.1 gaps
    tr = ContinuousTrace(horizon=10.0, lambda_a=0.1, lambda_h=10.0,
                         honest_times=taus,
                         tree_depth_times=[np.empty(0)] * 51,
                         mode="nas_per_honest")
    rep = analyzer.detect_convergence_delay(tr, delta=0.5)
    assert rep.events == []


def test_delay_detector_positive_frequency_under_threshold():
    # beta = 0.15 with small delay: comfortably subcritical
    lam_h = 1.0
    lam_a = 0.15 / 0.85
    freqs = []
    for seed in range(3):
        tr = simnet.run_continuous(lam_a, lam_h, 300.0, seed=seed)
        rep = analyzer.detect_convergence_delay(tr, delta=0.1)
        freqs.append(rep.empirical_frequency)
    assert np.mean(freqs) > 0.0


def _run_slotted(attack="null", horizon=400, beta=0.2, seed=3, **kw):
    cfg = {"beta": beta, "f_delta": 0.1, "horizon_slots": horizon,
           "seed": seed, "attack": attack}
    cfg.update(kw)
    return simnet.run(SimConfig.from_dict(cfg))


def test_window_stats_honest_only():
    tr = _run_slotted(beta=0.0)
    ws = analyzer.window_stats(tr, (1, 400))
    assert ws.v_count == 0
    assert ws.y_count <= ws.x_count <= 400
    per_slot = {}
    for slot, _ in tr.honest_arrivals:
        per_slot[slot] = per_slot.get(slot, 0) + 1
    assert ws.x_count == len(per_slot)
    assert ws.y_count == sum(1 for v in per_slot.values() if v == 1)


def test_window_stats_single_slot():
    tr = _run_slotted(beta=0.0, horizon=300)
    slots = [s for s, _ in tr.honest_arrivals]
    lone = next(s for s in slots if slots.count(s) == 1)
    ws = analyzer.window_stats(tr, (lone, lone))
    assert ws.x_count == 1 and ws.y_count == 1


def test_window_stats_v_monotone_in_start():
    tr = _run_slotted(attack="private_nas",
                      attack_params={"reveal": "on_overtake"}, beta=0.3,
                      horizon=300, seed=11)
    end = 300
    vs = [analyzer.window_stats(tr, (s, end)).v_count for s in (1, 100, 200)]
    assert vs[0] >= vs[1] >= vs[2]


def test_window_stats_private_view_merge():
    tr = _run_slotted(beta=0.0, horizon=100)
    ws = analyzer.window_stats(tr, (1, 100), private_advance_slots=[5, 9, 50])
    assert ws.v_count >= 3
    assert ws.view == "adversarial"


def test_typical_execution_bound_mostly_holds():
    """Disjoint windows satisfy the in-sequence bound nearly always at a
    comfortable stake margin (epsilon = 0.5)."""
    eps = 0.5
    beta, fd, c = 0.2, 0.1, 1
    phi = brw_numerics.solve_phi_psi(c).phi_c
    bound_per_slot = (1 + eps) * phi * beta * fd
    window = 80
    ok = total = 0
    for seed in range(4):
        tr = _run_slotted(attack="private_nas",
                          attack_params={"reveal": "on_overtake",
                                         "max_lineages": 256},
                          beta=beta, horizon=1600, seed=100 + seed)
        for start in range(1, 1600 - window + 2, window):
            ws = analyzer.window_stats(tr, (start, start + window - 1))
            total += 1
            ok += ws.v_count <= bound_per_slot * window
    assert total >= 50
    assert ok / total >= 0.95


def test_common_prefix_clean_run_no_violations():
    tr = _run_slotted(beta=0.0, horizon=600)
    assert analyzer.check_common_prefix(tr, 1) == []
    assert analyzer.check_common_prefix(tr, math.inf) == []


def test_common_prefix_detects_deep_reorg():
    """A revealed private chain that overtakes a long public chain reorgs
    deeper than kappa (fork at genesis around height 150)."""
    cfg = SimConfig.from_dict({
        "beta": 0.3, "f_delta": 1.0, "horizon_slots": 1500, "seed": 21,
        "dynamic_stake": True, "attack": "coin_grind",
        "attack_params": {"s": 60},
    })
    tr = simnet.run(cfg)
    violations = analyzer.check_common_prefix(tr, 50)
    assert violations
    assert max(v[4] for v in violations) > 50


def test_chain_quality_and_growth():
    tr = _run_slotted(beta=0.0, horizon=2000)
    assert analyzer.chain_quality(tr, 50) == 1.0
    growth = analyzer.chain_growth(tr, 500)
    p_hit = 1 - math.exp(-0.1)
    assert growth == pytest.approx(p_hit, abs=3 * math.sqrt(p_hit / 500) + 0.01)


def test_chain_quality_sees_adversarial_blocks():
    cfg = SimConfig.from_dict({
        "beta": 0.4, "f_delta": 1.0, "horizon_slots": 800, "seed": 2,
        "dynamic_stake": True, "attack": "coin_grind",
        "attack_params": {"s": 10},
    })
    tr = simnet.run(cfg)
    assert analyzer.chain_quality(tr, 40) < 1.0


def test_convergence_report_json():
    tr = simnet.run_continuous(0.25, 1.0, 120.0, seed=15)
    rep = analyzer.detect_convergence_zero_delay(tr)
    import json
    data = json.loads(rep.to_json())
    assert data["kind"] == "F"
    assert data["horizon_caveat"] is True
    assert len(data["events"]) == len(rep.events)
