"""Attack strategies.

Two simulation granularities coexist here.  Identity-level hooks plug into
the slotted network simulator and manipulate real Block objects; they are
exact but only viable while the adversary's block population stays small.
Count-level engines track block counts per height (all that the balance
and growth measurements need) and survive the exponential blowup of
nothing-at-stake mining, at the cost of not materializing every block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .blocktree import BlockTree
from .lottery import MASK64, _splitmix64_np, prf64


def prf64_batch_by_source(sources: np.ndarray, slot: int, secret_key: int) -> np.ndarray:
    """prf64 vectorized over randomness sources for one (slot, key)."""
    with np.errstate(over="ignore"):
        h = _splitmix64_np(np.full(sources.shape, secret_key, dtype=np.uint64))
        h = _splitmix64_np(np.uint64(slot & MASK64) ^ h)
        return _splitmix64_np(sources.astype(np.uint64) ^ h)

# ---------------------------------------------------------------------------
# continuous-time private tree: exact level sampler
# ---------------------------------------------------------------------------


def sample_godfather_levels(c: int, lam: float, n_levels: int, keep: int = 2000,
                            rng=None, seed: int = 0,
                            horizon: float | None = None,
                            stop_fn=None, margin_arrivals: float = 30.0) -> np.ndarray:
    """Earliest birth time of each godfather level of the private tree.

    Under correlated randomness the optimal private tree forks only at the
    parents of godfather blocks, so each godfather runs one Poisson(lam)
    election process: its first child godfather appears after c arrivals
    (a Gamma(c) wait) and every later arrival founds another child.  Levels
    are sampled exactly, generation by generation, keeping the `keep`
    earliest births per level (laggards this far behind the front no longer
    influence it).

    Returns an array whose entry k is the first time the tree reaches
    godfather depth c*k (entry 0 is 0 for genesis), ending at n_levels or
    at the first level past `horizon` or where `stop_fn(k, t)` fires.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    births = np.zeros(1)
    mins = [0.0]
    margin = (c + margin_arrivals) / lam
    for k in range(1, n_levels + 1):
        t_h = births.min() + margin
        while True:
            starts = births + rng.gamma(c, 1.0 / lam, size=births.size)
            keep_first = starts <= t_h
            span = np.maximum(t_h - starts, 0.0)
            counts = rng.poisson(lam * span)
            if counts.sum() + keep_first.sum() >= min(keep, 50):
                break
            t_h += margin
        par = np.repeat(np.arange(births.size), counts)
        extra = starts[par] + rng.random(par.size) * span[par]
        ch = np.concatenate([starts[keep_first], extra])
        if ch.size > keep:
            ch = np.partition(ch, keep)[:keep]
        births = ch
        t = float(births.min())
        mins.append(t)
        if horizon is not None and t > horizon:
            break
        if stop_fn is not None and stop_fn(k, t):
            break
    return np.array(mins)


def nas_growth_rate(c: int, lam: float, lam_t: float, runs: int = 10,
                    keep: int = 2000, seed: int = 0) -> float:
    """Monte Carlo growth ratio depth/(lam*t) of the optimal private tree.

    Measured at the last completed godfather level within the horizon, so
    the estimate is depth-resolution exact up to one segment.  Averaged
    over `runs` independent trees; approaches the amplification constant
    phi_c from below (finite-time logarithmic corrections).
    """
    n_levels = max(3, int(math.ceil(2.8 * lam_t / c)))
    ratios = []
    for r in range(runs):
        rng = np.random.default_rng((seed * 0x9E3779B9 + r) & MASK64)
        mins = sample_godfather_levels(c, lam, n_levels, keep=keep, rng=rng)
        k = np.searchsorted(mins, lam_t / lam, side="right") - 1
        if k < 1:
            raise ValueError("horizon too short to complete a godfather level")
        ratios.append(c * k / (lam * mins[k]))
    return float(np.mean(ratios))


def nas_depth_exceeds(c: int, lam: float, horizon: float, target_depth: int,
                      keep: int = 2000, seed: int = 0) -> bool:
    """Whether the private tree reaches `target_depth` blocks by `horizon`."""
    levels = int(math.ceil(target_depth / c)) + 1
    mins = sample_godfather_levels(c, lam, levels, keep=keep,
                                   rng=np.random.default_rng(seed))
    k = int(np.searchsorted(mins, horizon, side="right")) - 1
    return c * k >= target_depth


def nas_depth_advance_times(lam: float, horizon: float, max_depth: int,
                            keep: int = 2000, rng=None, seed: int = 0) -> np.ndarray:
    """First-passage times to each depth of a plain (c=1) private tree,
    truncated at the horizon.  Entry d is the birth time of depth d."""
    mins = sample_godfather_levels(1, lam, max_depth, keep=keep, rng=rng, seed=seed)
    return mins[mins <= horizon]


# ---------------------------------------------------------------------------
# slotted count-level private tree (c-correlated, Bernoulli elections)
# ---------------------------------------------------------------------------


class SlottedNasTree:
    """Depth tracker for a private tree mined at `p_win` per lineage-slot.

    One lineage is one independent election process: the chain being built
    from a godfather, then that godfather's parent spawning more children.
    Lineage count is capped; only the deepest survive, which can only
    understate the adversary.
    """

    def __init__(self, c: int | float, p_win: float, cap: int = 4096,
                 root_depth: int = 0):
        self.c = c
        self.p = p_win
        self.cap = cap
        self.root_depth = root_depth
        self.gen = np.zeros(1, dtype=np.int64)       # godfather level
        self.arrivals = np.zeros(1, dtype=np.int64)  # wins of each lineage
        self.depth = root_depth
        self.advance_slots: list[int] = []           # slot of each depth gain

    def step(self, slot: int, rng) -> None:
        wins = rng.random(self.gen.size) < self.p
        if not wins.any():
            return
        c = self.c
        if math.isinf(c):
            self.arrivals[0] += int(wins[0])
        else:
            fertile = wins & (self.arrivals >= c - 1)
            self.arrivals = self.arrivals + wins
            n_new = int(fertile.sum())
            if n_new:
                self.gen = np.concatenate([self.gen, self.gen[fertile] + 1])
                self.arrivals = np.concatenate(
                    [self.arrivals, np.zeros(n_new, dtype=np.int64)])
            if self.gen.size > self.cap:
                d = self._depths()
                idx = np.argpartition(d, self.gen.size - self.cap)[self.gen.size - self.cap:]
                self.gen, self.arrivals = self.gen[idx], self.arrivals[idx]
        new_depth = int(self._depths().max())
        while self.depth < new_depth:
            self.depth += 1
            self.advance_slots.append(slot)

    def _depths(self) -> np.ndarray:
        if math.isinf(self.c):
            return self.root_depth + self.arrivals
        return (self.root_depth + self.c * self.gen
                + np.minimum(self.arrivals, self.c - 1))


# ---------------------------------------------------------------------------
# identity-level hooks for the slotted simulator
# ---------------------------------------------------------------------------


@dataclass
class AttackState:
    strategy: str
    private_tree: BlockTree | None = None
    bookkeeping: dict = field(default_factory=dict)


class NullAdversary:
    """Takes no action; the run degenerates to the honest protocol."""

    name = "null"

    def setup(self, sim) -> AttackState:
        return AttackState(strategy="null")

    def on_slot(self, sim, state: AttackState, slot: int) -> None:
        return None


class PrivateNasAdversary:
    """Identity-level private tree under the optimal forking strategy.

    Maintains one chain per randomness segment and forks only at godfather
    parents; elections are deduplicated per (randomness source, slot), so
    the correlation structure is bit-exact with the lottery.  Population
    explodes exponentially for long runs: `max_lineages` guards by keeping
    the deepest, and `reveal` picks the disclosure policy.
    """

    name = "private_nas"

    def __init__(self, c: int | None = None, reveal: str = "never",
                 max_lineages: int = 4096):
        self.c = c
        self.reveal = reveal
        self.max_lineages = max_lineages

    def setup(self, sim) -> AttackState:
        state = AttackState(strategy="private_nas")
        # lineages: list of dicts with segment tip id and godfather parent id
        state.bookkeeping = {
            "lineages": [{"tip": sim.tree.genesis, "count": 0}],
            "revealed": False,
        }
        return state

    def on_slot(self, sim, state: AttackState, slot: int) -> None:
        tree = sim.tree
        c = self.c if self.c is not None else tree.params.c
        adv = sim.adversary_node
        lineages = state.bookkeeping["lineages"]
        sources = np.array([tree.blocks[lin["tip"]].rand_source
                            for lin in lineages], dtype=np.uint64)
        uniq, inv = np.unique(sources, return_inverse=True)
        hashes = prf64_batch_by_source(uniq, slot, adv.secret_key)
        thresh = min(sim.rho_norm * adv.stake * 2.0**64, 2.0**64 - 1)
        won = hashes.astype(np.float64) < thresh
        if not won.any():
            return self._post_mine(sim, state, slot)
        new_lineages = []
        for li in np.nonzero(won[inv])[0]:
            lin = lineages[li]
            h = int(hashes[inv[li]])
            bid = tree.append(lin["tip"], slot, adv.index, False, h)
            sim.trace.adversary_events.append((slot, "mine", bid))
            child = tree.blocks[bid]
            if not math.isinf(c) and child.height % c == 0:
                # a fresh godfather: its own lineage; the parent keeps
                # spawning siblings for it
                new_lineages.append({"tip": bid, "count": 0})
            else:
                lin["tip"] = bid
        lineages.extend(new_lineages)
        if len(lineages) > self.max_lineages:
            lineages.sort(key=lambda L: tree.blocks[L["tip"]].height)
            del lineages[:len(lineages) - self.max_lineages]
        return self._post_mine(sim, state, slot)

    def _post_mine(self, sim, state: AttackState, slot: int) -> None:
        if self.reveal == "on_overtake":
            self._maybe_reveal(sim, state, slot)

    def _maybe_reveal(self, sim, state: AttackState, slot: int) -> None:
        tree = sim.tree
        lineages = state.bookkeeping["lineages"]
        if not lineages:
            return
        deepest = max(lineages, key=lambda L: tree.blocks[L["tip"]].height)
        tip = tree.blocks[deepest["tip"]]
        public_len = max(v.adopted.length for v in sim.views)
        if tip.height > public_len:
            sim.deliver_chain(tip.id, slot)
            sim.trace.adversary_events.append((slot, "reveal", tip.id))


class CoinGrindAdversary:
    """Long-range attacker made possible by immediate stake lookback.

    Grows a private chain at its honest election rate for the first s
    blocks, then wins every slot (an idealization of rewriting its own
    first block's stake transfer and grinding keys).  Publishes whenever
    the private chain is longer than the public one.
    """

    name = "coin_grind"

    def __init__(self, s: int):
        if math.isinf(s):
            raise ValueError("coin grinding requires finite s")
        self.s = int(s)

    def setup(self, sim) -> AttackState:
        if not sim.config.dynamic_stake:
            raise ValueError("coin_grind needs dynamic-stake mode")
        state = AttackState(strategy="coin_grind")
        state.bookkeeping = {"tip": sim.tree.genesis, "length": 0, "revealed_to": 0}
        return state

    def on_slot(self, sim, state: AttackState, slot: int) -> None:
        tree = sim.tree
        adv = sim.adversary_node
        book = state.bookkeeping
        tip = tree.blocks[book["tip"]]
        if book["length"] < self.s:
            h = prf64(tip.rand_source, slot, adv.secret_key)
            win = h < sim.rho_norm * adv.stake * 2.0**64
        else:
            h = prf64(tip.rand_source, slot, adv.secret_key)
            win = True  # grinding found a winning key for this slot
        if win:
            bid = tree.append(tip.id, slot, adv.index, False, h)
            sim.trace.adversary_events.append((slot, "mine", bid))
            book["tip"] = bid
            book["length"] += 1
        public_len = max(v.adopted.length for v in sim.views)
        if book["length"] > public_len and book["length"] > book["revealed_to"]:
            sim.deliver_chain(book["tip"], slot)
            sim.trace.adversary_events.append((slot, "reveal", book["tip"]))
            book["revealed_to"] = book["length"]


def make_adversary(name: str, params: dict | None = None):
    params = dict(params or {})
    if name in ("null", "none"):
        return NullAdversary()
    if name == "private_nas":
        return PrivateNasAdversary(c=params.get("c"),
                                   reveal=params.get("reveal", "never"),
                                   max_lineages=params.get("max_lineages", 4096))
    if name == "coin_grind":
        return CoinGrindAdversary(s=params["s"])
    raise ValueError(f"unknown adversary {name!r}")


# ---------------------------------------------------------------------------
# count-level attack engines (balance attacks, private-attack baseline)
# ---------------------------------------------------------------------------


class _HeightCounts:
    """Per-height block counts for a set of parallel runs, windowed near the
    front (per-run base).  Counts cap at 2^40 per height; only the fronts
    feed the statistics."""

    CAP = 1 << 40

    def __init__(self, runs: int, width: int = 160, init_front: int = 0):
        self.w = width
        self.runs = runs
        self.counts = np.zeros((runs, width), dtype=np.int64)
        self.base = np.zeros(runs, dtype=np.int64)
        self.front = np.full(runs, init_front, dtype=np.int64)
        self.counts[:, :init_front + 1] = 1

    def col(self, heights: np.ndarray) -> np.ndarray:
        return heights - self.base

    def mine_window(self, lo: np.ndarray, hi: np.ndarray, p: float, rng) -> None:
        """One slot of mining: every block at heights [lo, hi] independently
        wins with probability p; children land one height up."""
        if p <= 0.0:
            return
        cols = np.arange(self.w)
        mask = (cols[None, :] >= self.col(lo)[:, None]) & \
               (cols[None, :] <= self.col(hi)[:, None])
        n = np.where(mask, self.counts, 0)
        births = rng.binomial(np.minimum(n, self.CAP), p)
        self.counts[:, 1:] += births[:, :-1]
        np.minimum(self.counts, self.CAP, out=self.counts)
        self._advance_front()

    def _advance_front(self) -> None:
        idx = np.arange(self.runs)
        nxt = self.col(self.front + 1)
        nz = self.counts[idx, np.clip(nxt, 0, self.w - 1)] > 0
        while nz.any():
            self.front[nz] += 1
            nxt = self.col(self.front + 1)
            valid = nxt < self.w
            nz = np.zeros_like(nz)
            nz[valid] = self.counts[idx[valid], nxt[valid]] > 0
        lead = self.front - self.base
        need = lead > self.w - 64
        if need.any():
            shift = np.where(need, lead - 48, 0)
            cols = np.arange(self.w)
            src_idx = np.minimum(cols[None, :] + shift[:, None], self.w - 1)
            in_range = cols[None, :] + shift[:, None] < self.w
            shifted = np.take_along_axis(self.counts, src_idx, axis=1)
            self.counts = np.where(in_range, shifted, 0)
            self.base += shift


class _BalanceSide:
    """One side of a balance attack: the public tree plus the adversary's
    hidden extension of it.

    The adversary mines nothing-at-stake on its whole view of this side
    (public and hidden blocks alike), so the hidden overhang rides on top
    of the public front.  Window bases are tracked per run since fronts
    drift apart across runs.
    """

    def __init__(self, runs: int, width: int = 160, init_front: int = 0):
        self.w = width
        self.runs = runs
        self.pub = np.zeros((runs, width), dtype=np.int64)
        self.hid = np.zeros((runs, width), dtype=np.int64)
        self.base = np.zeros(runs, dtype=np.int64)
        self.pub_front = np.full(runs, init_front, dtype=np.int64)
        self.all_front = np.full(runs, init_front, dtype=np.int64)
        self.pub[:, :init_front + 1] = 1

    def col(self, heights):
        return heights - self.base

    def _window_mask(self, lo, hi):
        cols = np.arange(self.w)
        return (cols[None, :] >= self.col(lo)[:, None]) & \
               (cols[None, :] <= self.col(hi)[:, None])

    def honest_mine(self, lo: np.ndarray, p: float, rng) -> np.ndarray:
        """Honest elections on public blocks at heights [lo, pub_front];
        returns per-run number of new public blocks."""
        mask = self._window_mask(lo, self.pub_front)
        n = np.where(mask, self.pub, 0)
        births = rng.binomial(np.minimum(n, _HeightCounts.CAP), p)
        self.pub[:, 1:] += births[:, :-1]
        self._advance_fronts()
        return births.sum(axis=1)

    def adversary_mine(self, p: float, rng) -> None:
        """Nothing-at-stake elections on every block in the adversary's view
        of this side; children are hidden until revealed."""
        total = self.pub + self.hid
        births = rng.binomial(np.minimum(total, _HeightCounts.CAP), p)
        self.hid[:, 1:] += births[:, :-1]
        self._advance_fronts()

    def reveal_to(self, target: np.ndarray, whole_tree: bool = True) -> None:
        """Publish hidden blocks at heights up to `target` (clipped to what
        exists).  `whole_tree` discloses the full hidden slice; otherwise a
        single chain (one block per height above the public front)."""
        upto = np.minimum(target, self.all_front)
        if whole_tree:
            mask = self._window_mask(self.base, upto)
            moved = np.where(mask, self.hid, 0)
            self.hid -= moved
            self.pub += moved
        else:
            mask = self._window_mask(self.pub_front + 1, upto)
            take = np.minimum(self.hid, mask.astype(np.int64))
            self.hid -= take
            self.pub += take
        self.pub_front = np.maximum(self.pub_front, upto)

    def _advance_fronts(self) -> None:
        idx = np.arange(self.runs)
        for front, which in ((self.pub_front, "pub"), (self.all_front, "all")):
            src = self.pub if which == "pub" else self.pub + self.hid
            nxt = self.col(front + 1)
            nz = src[idx, np.clip(nxt, 0, self.w - 1)] > 0
            while nz.any():
                front[nz] += 1
                nxt = self.col(front + 1)
                valid = nxt < self.w
                nz = np.zeros_like(nz)
                nz[valid] = src[idx[valid], nxt[valid]] > 0
        # per-run shift keeping ~48 heights of history behind the front
        lead = self.all_front - self.base
        need = lead > self.w - 64
        if need.any():
            shift = np.where(need, lead - 48, 0)
            cols = np.arange(self.w)
            src_idx = np.minimum(cols[None, :] + shift[:, None], self.w - 1)
            in_range = cols[None, :] + shift[:, None] < self.w
            for name in ("pub", "hid"):
                arr = getattr(self, name)
                shifted = np.take_along_axis(arr, src_idx, axis=1)
                setattr(self, name, np.where(in_range, shifted, 0))
            self.base += shift


def run_balance_g(g: int, beta: float, f_delta: float, horizon: int,
                  runs: int, seed: int = 0, stale_slots: int = 2) -> dict:
    """Balance attack on the g-greedy rule, vectorized across runs.

    Two public trees seeded one block above genesis; honest nodes mine on
    every public block within g of the tallest public front; the adversary
    mines nothing-at-stake on everything it sees on each side and reveals
    hidden chains (one block per height) to pull the shorter public tree
    level with the taller.  `stale_slots` models the adversary exercising
    its delivery-delay power: honest mining decisions see the public fronts
    with that much lag, which keeps a briefly-lagging tree eligible longer.
    Returns the per-run longest balanced fork (height at the last slot
    where the public fronts matched).
    """
    rng = np.random.default_rng(seed)
    p_h = (1.0 - beta) * f_delta
    p_a = beta * f_delta
    side1 = _BalanceSide(runs, init_front=1)
    side2 = _BalanceSide(runs, init_front=1)
    last_balanced = np.ones(runs, dtype=np.int64)   # fork length 1 at start
    ell_hist: list[np.ndarray] = []
    for slot in range(1, horizon + 1):
        ell_hist.append(np.maximum(side1.pub_front, side2.pub_front))
        ell_seen = ell_hist[max(0, len(ell_hist) - 1 - stale_slots)]
        lo = np.maximum(ell_seen - g, 0)
        side1.honest_mine(lo, p_h, rng)
        side2.honest_mine(lo, p_h, rng)
        side1.adversary_mine(p_a, rng)
        side2.adversary_mine(p_a, rng)
        d = side1.pub_front - side2.pub_front
        if (d > 0).any():
            side2.reveal_to(np.where(d > 0, side1.pub_front, side2.pub_front),
                            whole_tree=False)
        if (d < 0).any():
            side1.reveal_to(np.where(d < 0, side2.pub_front, side1.pub_front),
                            whole_tree=False)
        balanced = side1.pub_front == side2.pub_front
        last_balanced = np.where(balanced, side1.pub_front, last_balanced)
    return {
        "fork_lengths": last_balanced.copy(),
        "final_height": np.maximum(side1.pub_front, side2.pub_front).copy(),
    }


def run_private_attack_g(g: int, beta: float, f_delta: float, horizon: int,
                         runs: int, seed: int = 0) -> dict:
    """Private-attack baseline at matched parameters: a single public tree
    grown with g-greedy honest mining against one isolated private NaS tree
    rooted at genesis.  The achievable fork is the public height at the
    last slot where the private tree was at least as deep."""
    rng = np.random.default_rng(seed)
    p_h = (1.0 - beta) * f_delta
    p_a = beta * f_delta
    pub = _HeightCounts(runs, init_front=1)
    priv = _HeightCounts(runs, init_front=1)
    fork = np.ones(runs, dtype=np.int64)
    zero = np.zeros(runs, dtype=np.int64)
    for slot in range(1, horizon + 1):
        lo = np.maximum(pub.front - g, 0)
        pub.mine_window(lo, pub.front, p_h, rng)
        priv.mine_window(zero, priv.front, p_a, rng)
        can = priv.front >= pub.front
        fork = np.where(can, pub.front, fork)
    return {"fork_lengths": fork.copy(), "final_height": pub.front.copy()}


def run_balance_d1(beta: float, f_delta: float, horizon: int, runs: int,
                   seed: int = 0, track_growth: bool = False) -> dict:
    """Balance attack on the distance-1 rule with honest view splitting.

    While the two public trees are level, the honest power splits evenly
    and each tree evolves by the tip-group dynamics (tip blocks advance the
    height, the tip's parent widens the group); when one tree is taller all
    honest mining moves to it.  The adversary reveals whole private chains
    to re-level the trees.
    """
    rng = np.random.default_rng(seed)
    p_a = beta * f_delta
    sides = [_BalanceSide(runs, init_front=2), _BalanceSide(runs, init_front=2)]
    tips = np.ones((2, runs), dtype=np.int64)     # tip-group sizes
    idx = np.arange(runs)
    last_balanced = np.full(runs, 2, dtype=np.int64)
    balanced_slots = 0
    balanced_growth = 0
    for slot in range(1, horizon + 1):
        f0, f1 = sides[0].pub_front, sides[1].pub_front
        balanced = f0 == f1
        taller = (f0 < f1).astype(np.int64)
        if track_growth:
            balanced_slots += int(balanced.sum())
        any_grew = np.zeros(runs, dtype=bool)
        for s in (0, 1):
            side = sides[s]
            # per-tree honest rate: split while balanced, all-in when taller
            rate = np.where(balanced, 0.5, np.where(taller == s, 1.0, 0.0))
            p = (1.0 - beta) * f_delta * rate
            tip_births = rng.binomial(tips[s], np.minimum(p, 1.0))
            par_births = rng.binomial(1, np.minimum(p, 1.0))
            grew = tip_births > 0
            any_grew |= grew
            # children of tip blocks land one above the front, children of
            # the tip group's parent are new siblings at the front
            side.pub[idx, side.col(side.pub_front + 1)] += tip_births
            side.pub[idx, side.col(side.pub_front)] += par_births
            side._advance_fronts()
            tips[s] = np.where(grew, 1, tips[s] + par_births)
        if track_growth:
            balanced_growth += int((any_grew & balanced).sum())
        sides[0].adversary_mine(p_a, rng)
        sides[1].adversary_mine(p_a, rng)
        d = sides[0].pub_front - sides[1].pub_front
        for lag, lead in ((1, 0), (0, 1)):
            behind = d > 0 if lag == 1 else d < 0
            if behind.any():
                before = sides[lag].pub_front.copy()
                target = np.where(behind, sides[lead].pub_front, before)
                sides[lag].reveal_to(target, whole_tree=False)
                raised = sides[lag].pub_front > before
                tips[lag] = np.where(raised, 1, tips[lag])
        balanced = sides[0].pub_front == sides[1].pub_front
        last_balanced = np.where(balanced, sides[0].pub_front, last_balanced)
    out = {
        "fork_lengths": last_balanced.copy(),
        "final_height": np.maximum(sides[0].pub_front, sides[1].pub_front).copy(),
    }
    if track_growth:
        # combined-tree height gain per balanced slot, both trees pooled
        out["balanced_slots"] = balanced_slots
        out["balanced_growth"] = balanced_growth
    return out


def run_private_attack_d1(beta: float, f_delta: float, horizon: int,
                          runs: int, seed: int = 0) -> dict:
    """Private-attack baseline against the distance-1 rule (no splitting)."""
    rng = np.random.default_rng(seed)
    p_h = (1.0 - beta) * f_delta
    p_a = beta * f_delta
    front = np.full(runs, 2, dtype=np.int64)
    tips = np.ones(runs, dtype=np.int64)
    priv = _HeightCounts(runs, init_front=2)
    fork = np.full(runs, 2, dtype=np.int64)
    zero = np.zeros(runs, dtype=np.int64)
    for slot in range(1, horizon + 1):
        tip_births = rng.binomial(tips, p_h)
        par_births = rng.binomial(1, p_h, size=runs)
        grew = tip_births > 0
        front += grew
        tips = np.where(grew, 1, tips + par_births)
        priv.mine_window(zero, priv.front, p_a, rng)
        can = priv.front >= front
        fork = np.where(can, front, fork)
    return {"fork_lengths": fork.copy(), "final_height": front.copy()}


def fork_cdf(fork_lengths: np.ndarray, max_len: int | None = None):
    """Survival curve P(fork >= L) for L = 0..max_len."""
    if max_len is None:
        max_len = int(fork_lengths.max())
    ls = np.arange(max_len + 1)
    probs = (fork_lengths[None, :] >= ls[:, None]).mean(axis=1)
    return ls, probs
