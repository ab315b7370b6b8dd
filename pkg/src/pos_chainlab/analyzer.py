"""Post-hoc trace analysis.

Convergence-event detection asks, for each honest block, whether any
adversarial tree rooted at an earlier honest block ever catches back up
with the (fictitious purely-honest) chain.  With the trees recorded as
first-passage times this reduces to interval bookkeeping: every depth
advance of tree i opens a violation interval that closes at the honest
arrival restoring the lead, and block j is an event iff no interval
reaches past its birth time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocktree import BlockTree, fork_block
from .simnet import ContinuousTrace, SimTrace


@dataclass
class ConvergenceReport:
    events: list                      # (honest index j, kind)
    empirical_frequency: float
    horizon_caveat: bool = True       # finite horizon truncates the check
    honest_count: int = 0
    kind: str = "F"

    def to_json(self) -> str:
        import json
        return json.dumps({
            "kind": self.kind,
            "events": [{"j": j, "kind": k} for j, k in self.events],
            "empirical_frequency": self.empirical_frequency,
            "horizon_caveat": self.horizon_caveat,
            "honest_count": self.honest_count,
        }, indent=2, sort_keys=True)


@dataclass
class WindowStats:
    interval: tuple
    x_count: int                      # slots with at least one honest block
    y_count: int                      # slots with exactly one honest block
    v_count: int                      # longest in-sequence adversarial run
    view: str = "public"              # which view v_count was computed from


def _last_violation_end(depth_times: np.ndarray, root_index: int,
                        honest_times: np.ndarray, horizon: float) -> float:
    """Latest time any depth of this tree still matched the honest lead.

    depth_times[d-1] is when the tree reached depth d.  Depth d is violating
    while the number of honest arrivals since the root is <= d; the
    violation closes at arrival root_index + d (0-based into honest_times),
    or never closes within the horizon.
    """
    if depth_times.size == 0:
        # depth 0 is matched until the next honest arrival
        nxt = root_index
        return honest_times[nxt] if nxt < honest_times.size else math.inf
    d = np.arange(1, depth_times.size + 1)
    arrivals_since_root = np.searchsorted(honest_times, depth_times, side="right") - root_index
    violating = arrivals_since_root <= d
    end = honest_times[root_index] if root_index < honest_times.size else math.inf
    if violating.any():
        worst = int(np.max(d[violating]))
        idx = root_index + worst
        end_worst = honest_times[idx] if idx < honest_times.size else math.inf
        end = max(end, end_worst)
    return float(end)


def detect_convergence_zero_delay(trace: ContinuousTrace,
                                  margin: float | None = None) -> ConvergenceReport:
    """Adversary-proof convergence events of a zero-delay continuous run.

    Requires per-honest-block adversarial tree depth records.  An honest
    block j is reported when every earlier tree's depth stays strictly
    below the honest arrival count gap for the whole recorded horizon, and
    the horizon extends at least `margin` past the block (default 10 mean
    inter-arrival times).  The quantifier over infinite time cannot be
    checked, so the caveat flag is always set.
    """
    if trace.mode != "nas_per_honest" or not trace.tree_depth_times:
        raise ValueError("trace lacks per-honest-block adversarial tree records")
    if margin is None:
        margin = 10.0 / trace.lambda_h
    taus = trace.honest_times
    ends = np.empty(len(trace.tree_depth_times))
    for i, times in enumerate(trace.tree_depth_times):
        ends[i] = _last_violation_end(times, i, taus, trace.horizon)
    events = []
    running = -math.inf
    for j in range(1, taus.size + 1):
        running = max(running, ends[j - 1])   # trees rooted at blocks < j
        tau_j = taus[j - 1]
        if trace.horizon - tau_j < margin:
            break
        if tau_j >= running:
            events.append((j, "F"))
    freq = len(events) / taus.size if taus.size else 0.0
    return ConvergenceReport(events=events, empirical_frequency=freq,
                             horizon_caveat=True, honest_count=int(taus.size),
                             kind="F")


def verify_regen_prefix(trace: ContinuousTrace, report: ConvergenceReport) -> bool:
    """Independent replay of the detection condition for every reported event.

    Re-walks the raw first-passage records pairwise (no interval shortcuts)
    and confirms each detected block's defining inequality; in this model
    the public chain is the honest chain, so a verified event's prefix is
    by construction permanent.
    """
    taus = trace.honest_times
    for j, _ in report.events:
        tau_j = taus[j - 1]
        for i in range(j):
            root_time = 0.0 if i == 0 else taus[i - 1]
            times = trace.tree_depth_times[i]
            for d_idx in range(times.size):
                t = times[d_idx]
                depth = d_idx + 1
                gap = int(np.searchsorted(taus, t, side="right")) - i
                if t > tau_j and depth >= gap:
                    return False
    return True


def detect_convergence_delay(trace: ContinuousTrace, delta: float,
                             margin: float | None = None) -> ConvergenceReport:
    """Convergence events under network delay: the honest lead only counts
    non-tailgaters (gap to the previous honest block above delta), the
    check shifts by delta, and the block itself must be a loner (isolated
    on both sides)."""
    if trace.mode != "nas_per_honest" or not trace.tree_depth_times:
        raise ValueError("trace lacks per-honest-block adversarial tree records")
    if margin is None:
        margin = 10.0 / trace.lambda_h
    taus = trace.honest_times
    gaps_prev = np.diff(np.concatenate([[0.0], taus]))
    non_tail = gaps_prev > delta
    nt_times = taus[non_tail]

    def h_count(t):
        return np.searchsorted(nt_times, t, side="right")

    ends = np.empty(len(trace.tree_depth_times))
    for i, times in enumerate(trace.tree_depth_times):
        root_time = 0.0 if i == 0 else taus[i - 1]
        base = h_count(root_time)
        if times.size == 0:
            idx = base
            ends[i] = (nt_times[idx] + delta) if idx < nt_times.size else math.inf
            continue
        d = np.arange(1, times.size + 1)
        lead = h_count(times - delta) - base
        violating = lead <= d
        end = (nt_times[base] + delta) if base < nt_times.size else math.inf
        if violating.any():
            worst = int(np.max(d[violating]))
            idx = base + worst
            end = max(end, (nt_times[idx] + delta) if idx < nt_times.size else math.inf)
        ends[i] = end
    gaps_next = np.diff(np.concatenate([taus, [math.inf]]))
    loner = non_tail & (gaps_next > delta)
    events = []
    running = -math.inf
    for j in range(1, taus.size + 1):
        running = max(running, ends[j - 1])
        tau_j = taus[j - 1]
        if trace.horizon - tau_j < margin:
            break
        if loner[j - 1] and tau_j + delta >= running:
            events.append((j, "U_hat"))
    freq = len(events) / taus.size if taus.size else 0.0
    return ConvergenceReport(events=events, empirical_frequency=freq,
                             horizon_caveat=True, honest_count=int(taus.size),
                             kind="U_hat")


# ---------------------------------------------------------------------------
# slotted-trace statistics
# ---------------------------------------------------------------------------


def _reference_chain_ids(tree: BlockTree, tip: int) -> set[int]:
    return set(tree.path_to_genesis(tip))


def window_stats(trace: SimTrace, interval: tuple[int, int],
                 private_advance_slots=None) -> WindowStats:
    """Honest success counts and the longest in-sequence adversarial run.

    X counts slots in [start, end] with at least one honest block, Y those
    with exactly one.  V scans the final tree for the longest run of
    adversarial blocks mined inside the interval, along any path that
    diverged from the reference chain (the view-0 adopted chain at the
    window's right endpoint) after the interval start.  Unrevealed private
    depth records can be merged in via `private_advance_slots`, otherwise
    the public view is a lower bound.
    """
    start, end = interval
    if not (1 <= start <= end <= len(trace.per_view_tips)):
        raise ValueError("interval outside the recorded horizon")
    per_slot = {}
    for slot, _bid in trace.honest_arrivals:
        per_slot[slot] = per_slot.get(slot, 0) + 1
    counts = [per_slot.get(s, 0) for s in range(start, end + 1)]
    x = sum(1 for c in counts if c >= 1)
    y = sum(1 for c in counts if c == 1)

    tree = trace.final_tree
    ref_tip = trace.per_view_tips[end - 1][0]
    on_ref = _reference_chain_ids(tree, ref_tip)
    run: dict[int, int] = {}
    fork_after: dict[int, bool] = {}
    v = 0
    for bid in sorted(tree.blocks):
        b = tree.blocks[bid]
        if b.parent is None or bid in on_ref:
            continue
        if b.parent in on_ref:
            fork_after[bid] = b.slot > start
            run[bid] = 0
        else:
            fork_after[bid] = fork_after.get(b.parent, False)
            run[bid] = run.get(b.parent, 0)
        if not b.honest and start <= b.slot <= end:
            run[bid] += 1
        if fork_after[bid]:
            v = max(v, run[bid])
    view = "public"
    if private_advance_slots is not None:
        v_priv = _longest_in_window(private_advance_slots, start, end)
        v = max(v, v_priv)
        view = "adversarial"
    return WindowStats(interval=(start, end), x_count=x, y_count=y,
                       v_count=v, view=view)


def _longest_in_window(advance_slots, start: int, end: int) -> int:
    return sum(1 for s in advance_slots if start <= s <= end)


def check_common_prefix(trace: SimTrace, kappa: float,
                        max_violations: float = math.inf) -> list:
    """Pruned-prefix violations across all recorded adopted chains.

    For every ordered pair of adoption events (earlier, later, any views),
    the earlier chain pruned by kappa must prefix the later chain.  A later
    chain extending an earlier one forks at the earlier tip (depth zero),
    so only reorg events (an adopted tip that does not descend from some
    view's previous tip) need pairing against all earlier events.  Returns
    (slot_a, view_a, slot_b, view_b, reorg_depth) tuples for each failure,
    stopping at `max_violations` if set.
    """
    tree = trace.final_tree
    if math.isinf(kappa):
        return []
    events = []           # (slot, view, tip) at adoption changes
    last: dict[int, int] = {}
    reorg_idx = []
    for slot, tips in enumerate(trace.per_view_tips, start=1):
        for v, tip in enumerate(tips):
            if last.get(v) == tip:
                continue
            descends_all = all(tree.is_ancestor(prev, tip) for prev in last.values())
            events.append((slot, v, tip))
            if last and not descends_all:
                reorg_idx.append(len(events) - 1)
            last[v] = tip
    if not reorg_idx:
        return []
    paths: dict[int, list[int]] = {}

    def path_of(tip: int) -> list[int]:
        if tip not in paths:
            paths[tip] = tree.path_to_genesis(tip)
        return paths[tip]

    violations = []
    for bi in reorg_idx:
        slot_b, view_b, tip_b = events[bi]
        path_b = path_of(tip_b)
        for ai in range(bi):
            slot_a, view_a, tip_a = events[ai]
            if slot_a > slot_b:
                continue
            path_a = path_of(tip_a)
            top = min(len(path_a), len(path_b)) - 1
            if path_a[top] == path_b[top]:
                fork_h = top
            else:
                lo, hi = 0, top          # path[0] is genesis, always shared
                while lo < hi:
                    mid = (lo + hi + 1) // 2
                    if path_a[mid] == path_b[mid]:
                        lo = mid
                    else:
                        hi = mid - 1
                fork_h = lo
            depth = (len(path_a) - 1) - fork_h
            if depth > kappa:
                violations.append((slot_a, view_a, slot_b, view_b, depth))
                if len(violations) >= max_violations:
                    return violations
    return violations


def chain_quality(trace: SimTrace, window_blocks: int) -> float:
    """Minimum honest fraction over sliding windows of the final chain."""
    tree = trace.final_tree
    tip = trace.per_view_tips[-1][0]
    path = tree.path_to_genesis(tip)[1:]          # exclude genesis
    flags = [1 if tree.blocks[b].honest else 0 for b in path]
    if len(flags) < window_blocks:
        return float(sum(flags)) / len(flags) if flags else 1.0
    best = 1.0
    acc = sum(flags[:window_blocks])
    best = acc / window_blocks
    for i in range(window_blocks, len(flags)):
        acc += flags[i] - flags[i - window_blocks]
        best = min(best, acc / window_blocks)
    return best


def chain_growth(trace: SimTrace, window_slots: int) -> float:
    """Minimum adopted-chain growth rate (blocks per slot) over sliding
    slot windows, taken across views."""
    tree = trace.final_tree
    worst = math.inf
    for v in range(len(trace.per_view_tips[0])):
        lengths = [tree.blocks[tips[v]].height for tips in trace.per_view_tips]
        for i in range(len(lengths) - window_slots):
            worst = min(worst, (lengths[i + window_slots] - lengths[i]) / window_slots)
    return worst if worst < math.inf else 0.0
