"""Slotted simulation environment.

Honest nodes hold per-view copies of the block tree (delivery can lag by
up to `delay_slots`), apply the configured fork-choice rule, and run their
lottery elections each slot.  A single omniscient adversary hook sees
everything immediately and may mine private blocks, reveal them, and
schedule deliveries within the delay bound.

Per-slot ordering: deliveries, honest fork choice, honest elections,
adversary hook.  The ordering hands the adversary maximal information,
which is the conservative choice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import adversary as adversary_mod
from .blocktree import BlockTree, ChainRef, ProtocolParams, s_trunc_prefer
from .lottery import NodeId, elect_batch, make_nodes, prf64, splitmix64

_CONFIG_KEYS = {
    "beta", "f_delta", "delay_slots", "horizon_slots", "honest_rule",
    "seed", "honest_nodes", "n_stakers", "tie_break", "genesis_nonce",
    "dynamic_stake", "attack", "attack_params",
    "c", "s", "g", "dist_d", "kappa",
}


@dataclass
class SimConfig:
    beta: float = 0.0
    f_delta: float = 0.1
    delay_slots: int = 0
    horizon_slots: int = 1000
    honest_rule: str = "longest_chain"   # longest_chain | s_trunc | g_greedy | d_greedy
    params: ProtocolParams = field(default_factory=ProtocolParams)
    seed: int = 0
    honest_nodes: int = 1                # number of honest views
    n_stakers: int = 100                 # honest staker identities
    tie_break: str = "earliest-seen"
    genesis_nonce: int = 0
    dynamic_stake: bool = False
    attack: str = "null"
    attack_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.beta < 1.0):
            raise ValueError("beta must be in [0, 1)")
        if self.horizon_slots < 1 or self.delay_slots < 0:
            raise ValueError("bad horizon/delay")
        if self.honest_rule not in ("longest_chain", "s_trunc", "g_greedy", "d_greedy"):
            raise ValueError(f"unknown honest rule {self.honest_rule!r}")

    @classmethod
    def from_json(cls, path: str) -> "SimConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "SimConfig":
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        pp = ProtocolParams(
            c=raw.get("c", 1),
            s=math.inf if raw.get("s") in (None, "inf") else raw["s"],
            g=raw.get("g", 0),
            dist_d=raw.get("dist_d", 0),
            kappa=raw.get("kappa", 1),
        )
        kwargs = {k: v for k, v in raw.items()
                  if k in _CONFIG_KEYS - {"c", "s", "g", "dist_d", "kappa"}}
        return cls(params=pp, **kwargs)


@dataclass
class SimTrace:
    honest_arrivals: list = field(default_factory=list)    # (slot, block id)
    adversary_events: list = field(default_factory=list)   # (slot, kind, block id)
    deliveries: list = field(default_factory=list)         # (block id, view, slot)
    per_view_tips: list = field(default_factory=list)      # per slot: [tip per view]
    final_tree: BlockTree | None = None
    config: SimConfig | None = None

    def tips_csv(self, fh) -> None:
        n_views = len(self.per_view_tips[0]) if self.per_view_tips else 0
        fh.write("slot," + ",".join(f"view{v}_tip" for v in range(n_views)) + "\n")
        for slot, tips in enumerate(self.per_view_tips, start=1):
            fh.write(f"{slot}," + ",".join(str(t) for t in tips) + "\n")

    def arrivals_csv(self, fh) -> None:
        fh.write("slot,block\n")
        for slot, bid in self.honest_arrivals:
            fh.write(f"{slot},{bid}\n")

    def adversary_csv(self, fh) -> None:
        fh.write("slot,kind,block\n")
        for slot, kind, bid in self.adversary_events:
            fh.write(f"{slot},{kind},{bid}\n")

    def deliveries_csv(self, fh) -> None:
        fh.write("block,view,slot\n")
        for bid, view, slot in self.deliveries:
            fh.write(f"{bid},{view},{slot}\n")


class View:
    """One honest node group's picture of the tree."""

    def __init__(self, index: int, sim: "SlottedSim"):
        self.index = index
        self.sim = sim
        self.seen: set[int] = {sim.tree.genesis}
        self.seen_order: dict[int, int] = {sim.tree.genesis: 0}
        self.adopted: ChainRef = sim.tree.chain_ref(sim.tree.genesis)

    def receive(self, block_id: int, slot: int) -> None:
        tree = self.sim.tree
        if block_id in self.seen:
            return
        # ancestors travel with the block
        chain = []
        b = tree.blocks[block_id]
        while b.id not in self.seen:
            chain.append(b.id)
            b = tree.blocks[b.parent]
        for bid in reversed(chain):
            self.seen.add(bid)
            self.seen_order[bid] = len(self.seen_order)
            self._consider(tree.chain_ref(bid), slot)

    def _consider(self, cand: ChainRef, slot: int) -> None:
        tree = self.sim.tree
        cur = self.adopted
        rule = self.sim.config.honest_rule
        if rule == "s_trunc":
            self.adopted = s_trunc_prefer(tree, cur, cand, self.sim.config.params.s)
            return
        # longest-chain style adoption for the remaining rules; g/d-greedy
        # target sets are derived from the adopted view at election time
        if cand.length > cur.length:
            self.adopted = cand
        elif cand.length == cur.length and cand.tip != cur.tip:
            # ties are sticky by default (earliest seen wins); with the
            # split rule, views other than 0 adopt the newcomer so tied
            # tips divide the honest groups between them
            if self.sim.config.tie_break == "split" and self.index > 0:
                self.adopted = cand

    def mining_targets(self) -> list[int]:
        tree = self.sim.tree
        cfg = self.sim.config
        rule = cfg.honest_rule
        if rule in ("longest_chain", "s_trunc"):
            return [self.adopted.tip]
        # greedy rules mine sets; restrict to blocks this view has seen
        ell = self.adopted.length
        if rule == "g_greedy":
            cut = ell - cfg.params.g
            return [bid for bid in self.seen if tree.blocks[bid].height >= cut]
        # d_greedy: tip's group = tip, its parent, the parent's children
        tip = tree.blocks[self.adopted.tip]
        if tip.parent is None:
            return [tip.id]
        if cfg.params.dist_d == 0:
            return [tip.id]
        group = {tip.id, tip.parent}
        group.update(b for b in tree.children[tip.parent] if b in self.seen)
        return sorted(group)


class SlottedSim:
    def __init__(self, config: SimConfig, adversary=None):
        self.config = config
        self.tree = BlockTree(config.params, genesis_nonce=config.genesis_nonce)
        self.rho_norm = config.f_delta
        self.rng = np.random.default_rng(config.seed)
        n = config.n_stakers
        self.honest_nodes_list = make_nodes(n, total_stake=1.0 - config.beta)
        self.honest_keys = np.array([nd.secret_key for nd in self.honest_nodes_list],
                                    dtype=np.uint64)
        self.honest_stakes = np.array([nd.stake for nd in self.honest_nodes_list])
        self.adversary_node = NodeId(index=n, secret_key=splitmix64(n ^ 0xADA),
                                     stake=config.beta)
        self.views = [View(v, self) for v in range(config.honest_nodes)]
        self.trace = SimTrace(config=config)
        self.adversary = adversary if adversary is not None else \
            adversary_mod.make_adversary(config.attack, config.attack_params)
        self.attack_state = self.adversary.setup(self)
        self._pending: dict[int, list[tuple[int, int]]] = {}  # slot -> [(block, view)]

    # -- delivery ------------------------------------------------------

    def schedule_delivery(self, block_id: int, view: int, slot: int,
                          now: int | None = None) -> None:
        if slot - self.tree.blocks[block_id].slot > self.config.delay_slots:
            raise ValueError("delivery beyond the delay bound")
        if now is not None and slot <= now:
            self.views[view].receive(block_id, now)
            self.trace.deliveries.append((block_id, view, now))
        else:
            self._pending.setdefault(slot, []).append((block_id, view))

    def deliver_chain(self, tip_id: int, slot: int, delay: int = 0) -> None:
        """Adversary reveal: the chain ending at tip reaches every view
        after `delay` slots (0 = this slot)."""
        if delay > self.config.delay_slots:
            raise ValueError("reveal delay exceeds the network bound")
        for v in range(len(self.views)):
            if delay == 0:
                self.views[v].receive(tip_id, slot)
                self.trace.deliveries.append((tip_id, v, slot))
            else:
                self._pending.setdefault(slot + delay, []).append((tip_id, v))

    # -- main loop -----------------------------------------------------

    def run(self) -> SimTrace:
        cfg = self.config
        for slot in range(1, cfg.horizon_slots + 1):
            for block_id, v in self._pending.pop(slot, ()):
                self.views[v].receive(block_id, slot)
                self.trace.deliveries.append((block_id, v, slot))
            new_blocks = []
            for view in self.views:
                new_blocks.extend(self._honest_elections(view, slot))
            for bid in new_blocks:
                b = self.tree.blocks[bid]
                self.trace.honest_arrivals.append((slot, bid))
                miner_view = b.miner % len(self.views) if cfg.honest_nodes > 1 else 0
                self.views[miner_view].receive(bid, slot)
                for view in self.views:
                    if view.index != miner_view:
                        self.schedule_delivery(bid, view.index,
                                               slot + cfg.delay_slots, now=slot)
            self.adversary.on_slot(self, self.attack_state, slot)
            self.trace.per_view_tips.append([v.adopted.tip for v in self.views])
        self.trace.final_tree = self.tree
        return self.trace

    def _honest_elections(self, view: View, slot: int) -> list[int]:
        """Run the per-node lottery for every mining target of this view.

        Nodes are partitioned across views; targets sharing a randomness
        source share one election outcome per node (the correlation rule),
        realized by electing per distinct source.
        """
        cfg = self.config
        n_views = len(self.views)
        keys = self.honest_keys[view.index::n_views]
        stakes = self.honest_stakes[view.index::n_views]
        node_idx = np.arange(len(self.honest_keys))[view.index::n_views]
        out = []
        by_source: dict[int, list[int]] = {}
        for t in view.mining_targets():
            by_source.setdefault(self.tree.blocks[t].rand_source, []).append(t)
        for source, targets in by_source.items():
            wins = elect_batch(keys, stakes, source, slot, self.rho_norm)
            if not wins.any():
                continue
            for i in np.nonzero(wins)[0]:
                h = prf64(source, slot, int(keys[i]))
                # one election win may be placed on every target sharing the
                # source; honest nodes place one block, on their adopted target
                target = targets[0]
                bid = self.tree.append(target, slot, int(node_idx[i]), True, h)
                out.append(bid)
        return out


def run(config: SimConfig, adversary=None) -> SimTrace:
    """Run one slotted simulation; deterministic for a given config seed."""
    return SlottedSim(config, adversary).run()


# ---------------------------------------------------------------------------
# continuous-time runs for the convergence-event experiments
# ---------------------------------------------------------------------------


@dataclass
class ContinuousTrace:
    """Timed record of a continuous run: honest arrivals on a single public
    chain plus the depth-advance times of adversarial trees."""

    horizon: float
    lambda_a: float
    lambda_h: float
    honest_times: np.ndarray                  # tau_i, i >= 1
    tree_depth_times: list = field(default_factory=list)
    # entry i: array of first-passage times (absolute) of the adversarial
    # tree rooted at the i-th honest block (i = 0 -> genesis); entry d is
    # the time its depth reached d+1
    mode: str = "nas_per_honest"


def run_continuous(lambda_a: float, lambda_h: float, horizon_time: float,
                   adversary: str = "nas_per_honest", seed: int = 0,
                   keep: int = 1000) -> ContinuousTrace:
    """Continuous-time run: honest chain as a Poisson process, adversarial
    private trees grown at rate lambda_a per active lineage.

    adversary 'nas_per_honest' grows an independent private tree at every
    honest block (the resource picture behind convergence detection);
    'private_nas' grows a single tree from genesis; 'none' grows nothing.
    """
    if lambda_h < 0 or lambda_a < 0:
        raise ValueError("rates must be non-negative")
    rng = np.random.default_rng(seed)
    if lambda_h > 0:
        n_est = int(lambda_h * horizon_time + 6 * math.sqrt(lambda_h * horizon_time) + 10)
        gaps = rng.exponential(1.0 / lambda_h, size=n_est)
        times = np.cumsum(gaps)
        while times.size and times[-1] < horizon_time:
            more = np.cumsum(rng.exponential(1.0 / lambda_h, size=16)) + times[-1]
            times = np.concatenate([times, more])
        honest = times[times <= horizon_time]
    else:
        honest = np.empty(0)
    trace = ContinuousTrace(horizon=horizon_time, lambda_a=lambda_a,
                            lambda_h=lambda_h, honest_times=honest,
                            mode=adversary)
    if adversary == "none" or lambda_a == 0.0:
        trace.tree_depth_times = [np.empty(0) for _ in range(honest.size + 1)]
        return trace
    if adversary not in ("nas_per_honest", "private_nas"):
        raise ValueError(f"unknown continuous adversary {adversary!r}")
    roots = np.concatenate([[0.0], honest]) if adversary == "nas_per_honest" \
        else np.array([0.0])
    depth_times = []
    for i, t0 in enumerate(roots):
        span = horizon_time - t0
        max_depth = int(math.e * lambda_a * span + 8 * math.sqrt(lambda_a * span + 1) + 8)
        sub = np.random.default_rng(rng.integers(0, 2**63))

        def hopeless(k: int, t: float, _i=i, _t0=t0) -> bool:
            # a tree 50+ blocks behind the honest arrival count can no
            # longer influence convergence detection (tail bound e^-50)
            lead = int(np.searchsorted(honest, _t0 + t, side="right")) - _i
            return lead - k >= 50

        mins = adversary_mod.sample_godfather_levels(
            1, lambda_a, max_depth, keep=keep, rng=sub,
            horizon=span, stop_fn=hopeless, margin_arrivals=6.0)
        mins = mins[1:]                      # drop genesis level 0
        depth_times.append(t0 + mins[t0 + mins <= horizon_time])
    trace.tree_depth_times = depth_times
    return trace
