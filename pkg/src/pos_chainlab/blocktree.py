"""Block and block-tree structures plus the fork-choice and mining-set rules.

Blocks carry the correlated randomness source: a chain's lottery seed
refreshes only at heights that are a multiple of the correlation parameter
c ("godfather" blocks); every other block inherits its parent's source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

GENESIS_ID = 0


@dataclass
class ProtocolParams:
    c: int = 1                    # randomness correlation period
    s: float = math.inf           # truncation / stake-lookback parameter
    g: int = 0                    # greedy window (g-greedy rule only)
    dist_d: int = 0               # distance parameter (d-greedy rule only)
    kappa: int = 1                # confirmation depth

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if not (self.s >= 1):
            raise ValueError("s must be >= 1 (or math.inf)")
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if self.g < 0 or self.dist_d < 0:
            raise ValueError("g and dist_d must be non-negative")


@dataclass
class Block:
    id: int
    parent: Optional[int]         # None only for genesis
    height: int
    slot: int
    miner: int
    honest: bool
    rand_source: int
    lottery_hash: int


@dataclass
class ChainRef:
    """A chain identified by its tip; length equals the tip height."""

    tip: int
    length: int


class BlockTree:
    """Append-only tree of blocks, single genesis, c-correlated randomness."""

    def __init__(self, params: ProtocolParams | None = None, genesis_nonce: int = 0):
        self.params = params or ProtocolParams()
        genesis = Block(id=GENESIS_ID, parent=None, height=0, slot=0, miner=-1,
                        honest=True, rand_source=genesis_nonce, lottery_hash=0)
        self.blocks: dict[int, Block] = {GENESIS_ID: genesis}
        self.children: dict[int, list[int]] = {GENESIS_ID: []}
        self.genesis = GENESIS_ID
        self._next_id = 1
        # insertion-ordered max-height tracking for longest_chain
        self._best_height = 0

    def __len__(self) -> int:
        return len(self.blocks)

    def append(self, parent: int, slot: int, miner: int, honest: bool,
               lottery_hash: int) -> int:
        """Insert a block under `parent`; returns the new block id.

        The randomness source follows the c-correlation rule: a block whose
        height is a multiple of c seeds from its own lottery hash, everyone
        else inherits the parent source.
        """
        if parent not in self.blocks:
            raise KeyError(f"unknown parent id {parent}")
        pb = self.blocks[parent]
        if slot <= pb.slot:
            raise ValueError(f"slot {slot} does not exceed parent slot {pb.slot}")
        height = pb.height + 1
        if height % self.params.c == 0:
            rand_source = lottery_hash
        else:
            rand_source = pb.rand_source
        bid = self._next_id
        self._next_id += 1
        blk = Block(id=bid, parent=parent, height=height, slot=slot, miner=miner,
                    honest=honest, rand_source=rand_source, lottery_hash=lottery_hash)
        self.blocks[bid] = blk
        self.children[bid] = []
        self.children[parent].append(bid)
        if height > self._best_height:
            self._best_height = height
        return bid

    # -- chain walks ---------------------------------------------------

    def chain_ref(self, tip: int) -> ChainRef:
        return ChainRef(tip=tip, length=self.blocks[tip].height)

    def ancestor_at(self, block_id: int, height: int) -> int:
        blk = self.blocks[block_id]
        while blk.height > height:
            blk = self.blocks[blk.parent]
        if blk.height != height:
            raise ValueError("height above block")
        return blk.id

    def path_to_genesis(self, tip: int) -> list[int]:
        out = []
        blk = self.blocks[tip]
        while True:
            out.append(blk.id)
            if blk.parent is None:
                break
            blk = self.blocks[blk.parent]
        out.reverse()
        return out

    def is_ancestor(self, anc: int, desc: int) -> bool:
        a = self.blocks[anc]
        blk = self.blocks[desc]
        while blk.height > a.height:
            blk = self.blocks[blk.parent]
        return blk.id == anc

    def tips_at_max_height(self) -> list[int]:
        h = self._best_height
        return [b.id for b in self.blocks.values() if b.height == h]

    # -- serialization --------------------------------------------------

    def dump_csv(self, fh) -> None:
        """One block per line: id,parent,height,slot,miner,honest,rand_source,lottery_hash.

        64-bit fields in hex, genesis first, then insertion order.
        """
        fh.write("id,parent,height,slot,miner,honest,rand_source,lottery_hash\n")
        for bid in sorted(self.blocks):
            b = self.blocks[bid]
            parent = "" if b.parent is None else str(b.parent)
            fh.write(f"{b.id},{parent},{b.height},{b.slot},{b.miner},"
                     f"{int(b.honest)},{b.rand_source:016x},{b.lottery_hash:016x}\n")


# -- fork choice ---------------------------------------------------------

def longest_chain(tree: BlockTree, tie_break: str = "lowest-id",
                  adversary_choice: Optional[int] = None,
                  seen_order: Optional[dict[int, int]] = None) -> ChainRef:
    """Return a maximal-length chain; ties resolved by `tie_break`.

    tie_break: 'lowest-id' (deterministic), 'earliest-seen' (needs
    seen_order), or 'adversarial' (the adversary designates one of the
    tied tips via adversary_choice).
    """
    tips = tree.tips_at_max_height()
    if len(tips) == 1:
        return tree.chain_ref(tips[0])
    if tie_break == "adversarial":
        if adversary_choice is not None and adversary_choice in tips:
            return tree.chain_ref(adversary_choice)
        return tree.chain_ref(min(tips))
    if tie_break == "earliest-seen":
        if seen_order is None:
            raise ValueError("earliest-seen tie break requires seen_order")
        return tree.chain_ref(min(tips, key=lambda t: (seen_order.get(t, t), t)))
    if tie_break == "lowest-id":
        return tree.chain_ref(min(tips))
    raise ValueError(f"unknown tie_break {tie_break!r}")


def fork_block(tree: BlockTree, chain_a: ChainRef, chain_b: ChainRef) -> int:
    """Deepest common ancestor of the two tips (genesis is always common)."""
    a = tree.blocks[chain_a.tip]
    b = tree.blocks[chain_b.tip]
    while a.height > b.height:
        a = tree.blocks[a.parent]
    while b.height > a.height:
        b = tree.blocks[b.parent]
    while a.id != b.id:
        a = tree.blocks[a.parent]
        b = tree.blocks[b.parent]
    return a.id


def chain_distance(tree: BlockTree, chain_a: ChainRef, chain_b: ChainRef) -> int:
    f = tree.blocks[fork_block(tree, chain_a, chain_b)]
    return max(chain_a.length - f.height, chain_b.length - f.height)


def _post_fork_block_slot(tree: BlockTree, tip: int, fork_height: int, k: int) -> int:
    """Slot of the k-th block after the fork on the chain ending at tip."""
    blk = tree.blocks[tree.ancestor_at(tip, fork_height + k)]
    return blk.slot


def s_trunc_prefer(tree: BlockTree, current: ChainRef, candidate: ChainRef,
                   s: float) -> ChainRef:
    """Truncated longest-chain preference between the adopted chain and a rival.

    With fewer than s post-fork blocks on either side the plain longest
    chain wins (current retained on ties).  Otherwise the chain whose s-th
    post-fork block was created in the strictly earlier slot wins: denser
    beats longer.  s = inf degenerates to pure longest chain.
    """
    if math.isinf(s):
        return candidate if candidate.length > current.length else current
    fork_h = tree.blocks[fork_block(tree, current, candidate)].height
    n_cur = current.length - fork_h
    n_cand = candidate.length - fork_h
    if min(n_cur, n_cand) < s:
        return candidate if candidate.length > current.length else current
    k = int(s)
    cur_slot = _post_fork_block_slot(tree, current.tip, fork_h, k)
    cand_slot = _post_fork_block_slot(tree, candidate.tip, fork_h, k)
    return candidate if cand_slot < cur_slot else current


# -- mining sets ----------------------------------------------------------

def g_greedy_set(tree: BlockTree, g: float) -> set[int]:
    """All blocks within g of the longest-chain height (inclusive boundary)."""
    ell = longest_chain(tree).length
    cut = -math.inf if math.isinf(g) else ell - g
    return {b.id for b in tree.blocks.values() if b.height >= cut}


def d_greedy_set(tree: BlockTree, dist_d: int, tie_break: str = "lowest-id",
                 rng=None) -> set[int]:
    """End blocks of every chain within tree-distance dist_d of a chosen
    longest chain.

    tie_break 'random' picks the reference chain uniformly (needs rng);
    'no-slow-down' picks the tied tip backed by the largest sibling group;
    'lowest-id' is the deterministic default.
    """
    tips = tree.tips_at_max_height()
    if tie_break == "random":
        if rng is None:
            raise ValueError("random tie break requires rng")
        star = tips[int(rng.integers(len(tips)))]
    elif tie_break == "no-slow-down":
        def group_size(t: int) -> int:
            return len(tree.children[tree.blocks[t].parent])
        star = max(tips, key=lambda t: (group_size(t), -t))
    else:
        star = min(tips)
    ref = tree.chain_ref(star)
    ell = ref.length
    out = set()
    for b in tree.blocks.values():
        # chain ending at b vs reference: distance touches only blocks with
        # height >= ell - dist_d, prune the rest early
        if b.height < ell - dist_d:
            continue
        cand = tree.chain_ref(b.id)
        if chain_distance(tree, cand, ref) <= dist_d:
            out.add(b.id)
    return out


def prune_to(tree: BlockTree, chain: ChainRef, k: int) -> ChainRef:
    """Drop the last min(k, length) blocks; the result prefixes the input."""
    if k < 0:
        raise ValueError("k must be >= 0")
    keep = max(chain.length - k, 0)
    return tree.chain_ref(tree.ancestor_at(chain.tip, keep))


def verify_rand_sources(tree: BlockTree) -> bool:
    """Re-derive every block's randomness source from scratch (invariant check)."""
    c = tree.params.c
    for b in tree.blocks.values():
        if b.parent is None:
            continue
        expect = b.lottery_hash if b.height % c == 0 else tree.blocks[b.parent].rand_source
        if b.rand_source != expect:
            return False
    return True
