"""Leader election lottery.

The real protocol elects slot leaders with a verifiable random function
keyed by each node's secret key, seeded by a common randomness source
carried in the block headers.  Here the VRF is replaced by a deterministic
64-bit PRF (splitmix64 finalizer chain), which keeps the statistical
structure that matters for the simulations: elections are uniform,
deterministic per (seed, slot, key), and fully correlated across parents
that share a randomness source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """One step of the splitmix64 sequence: advance by gamma and finalize."""
    x = (x + _GAMMA) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def prf64(rand_source: int, slot: int, secret_key: int) -> int:
    """Deterministic 64-bit PRF standing in for the VRF output.

    Defined bit-exactly as
    splitmix64(rand_source XOR splitmix64(slot XOR splitmix64(secret_key))).
    """
    h = splitmix64(secret_key & MASK64)
    h = splitmix64((slot & MASK64) ^ h)
    return splitmix64((rand_source & MASK64) ^ h)


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(_GAMMA)).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MUL1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MUL2)
    return x ^ (x >> np.uint64(31))


def prf64_batch(rand_source: int, slot: int, secret_keys: np.ndarray) -> np.ndarray:
    """Vectorized prf64 over an array of secret keys (uint64)."""
    with np.errstate(over="ignore"):
        h = _splitmix64_np(secret_keys.astype(np.uint64))
        h = _splitmix64_np(np.uint64(slot & MASK64) ^ h)
        return _splitmix64_np(np.uint64(rand_source & MASK64) ^ h)


@dataclass
class NodeId:
    """A staked node: dense index, PRF secret key, stake fraction."""

    index: int
    secret_key: int
    stake: float

    @classmethod
    def from_index(cls, index: int, stake: float, secret_key: int | None = None) -> "NodeId":
        if secret_key is None:
            secret_key = splitmix64(index)
        return cls(index=index, secret_key=secret_key & MASK64, stake=stake)


@dataclass
class LotteryParams:
    """Election threshold configuration.

    rho_norm is the normalized election threshold: a node with stake sigma
    wins a slot iff prf64(...)/2^64 < rho_norm * sigma.  In slotted mode
    rho_norm doubles as the expected number of blocks per slot (f*Delta)
    when the stakes sum to one.
    """

    rho_norm: float = 0.1
    f_delta: float = field(default=None)  # type: ignore[assignment]
    mode: str = "slotted"

    def __post_init__(self):
        if self.f_delta is None:
            self.f_delta = self.rho_norm
        if self.mode == "slotted" and abs(self.f_delta - self.rho_norm) > 1e-12:
            raise ValueError("slotted mode requires f_delta == rho_norm")
        if not (0.0 < self.rho_norm <= 1.0):
            raise ValueError("rho_norm must lie in (0, 1]")


def elect(node: NodeId, parent, slot: int, params: LotteryParams,
          stake: float | None = None):
    """Run the slot-leader lottery for `node` mining on `parent`.

    Returns the winning 64-bit lottery hash, or None on a loss.  The hash
    depends only on the parent's randomness source, so parents sharing a
    source yield bitwise-identical outcomes for the same (node, slot) --
    the correlation a nothing-at-stake adversary grinds on.
    """
    if slot <= parent.slot:
        raise ValueError(f"slot {slot} not after parent slot {parent.slot}")
    sigma = node.stake if stake is None else stake
    h = prf64(parent.rand_source, slot, node.secret_key)
    if h < params.rho_norm * sigma * 2.0**64:
        return h
    return None


def elect_batch(nodes_keys: np.ndarray, stakes: np.ndarray, rand_source: int,
                slot: int, rho_norm: float) -> np.ndarray:
    """Vectorized election: boolean win mask over nodes."""
    h = prf64_batch(rand_source, slot, nodes_keys)
    thresh = np.minimum(rho_norm * stakes * 2.0**64, 2.0**64 - 1)
    return h.astype(np.float64) < thresh


class StakeLedger:
    """Scalar stake table with per-block snapshots (dynamic-stake mode).

    There are no transactions; a `transfer` event moves stake between node
    indices when a given block is created.  Snapshots are immutable: each
    block id maps to the table in force at that block.
    """

    def __init__(self, genesis_stakes: dict[int, float]):
        total = sum(genesis_stakes.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"stakes must sum to 1, got {total}")
        self._tables: dict[int, dict[int, float]] = {0: dict(genesis_stakes)}

    def snapshot(self, block_id: int) -> dict[int, float]:
        return self._tables[block_id]

    def inherit(self, block_id: int, parent_id: int) -> None:
        self._tables[block_id] = self._tables[parent_id]

    def transfer(self, block_id: int, parent_id: int,
                 src: int, dst: int, amount: float) -> None:
        table = dict(self._tables[parent_id])
        if table.get(src, 0.0) + 1e-15 < amount:
            raise ValueError("transfer exceeds source stake")
        table[src] = table.get(src, 0.0) - amount
        table[dst] = table.get(dst, 0.0) + amount
        self._tables[block_id] = table


def stake_at(tree, node: NodeId, parent, s, ledger: StakeLedger | None = None) -> float:
    """Stake of `node` usable for an election on top of `parent`.

    Static mode (no ledger): the node's configured stake.  Dynamic mode:
    the stake recorded in the snapshot at the ancestor s-1 blocks above
    `parent`, falling back to the genesis table when the chain is shorter.
    """
    if ledger is None:
        return node.stake
    back = s - 1
    blk = parent
    while back > 0 and blk.parent is not None:
        blk = tree.blocks[blk.parent]
        back -= 1
    return ledger.snapshot(blk.id).get(node.index, 0.0)


def load_stake_table(path: str) -> list[NodeId]:
    """Read the stake table config: JSON array of {index, stake, secret_key}."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = json.load(fh)
    nodes = []
    for row in rows:
        nodes.append(NodeId.from_index(row["index"], row["stake"], row.get("secret_key")))
    total = sum(n.stake for n in nodes)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"stake table must sum to 1, got {total}")
    return nodes


def make_nodes(n: int, total_stake: float = 1.0, offset: int = 0) -> list[NodeId]:
    """n equal-stake nodes splitting total_stake, keys derived from indices."""
    return [NodeId.from_index(offset + i, total_stake / n) for i in range(n)]
