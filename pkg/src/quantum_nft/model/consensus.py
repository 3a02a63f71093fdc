import logging
from dataclasses import dataclass, field

import numpy as np
from dataclasses_json import dataclass_json

from quantum_nft.errors import ConsensusError, PolicyError

logger = logging.getLogger(__name__)


@dataclass_json
@dataclass
class StakePolicy:
    """
    Genesis-configured staking rules.

    A reward must stay below `min_stake` so that losing the stake always
    outweighs what a dishonest validator could gain.
    """
    min_stake: float = 10.0
    reward: float = 1.0
    slash_fraction: float = 0.5
    quorum: float = 1.0          # fraction of honest peers that must pass
    reset_on_win: bool = True    # coin age restarts when a peer wins a round


@dataclass
class StakeAccount:
    coins: float
    holding_time: float = 0.0

    @property
    def stake(self) -> float:
        return self.coins * self.holding_time


@dataclass
class StakeLedger:
    """
    Per-peer coin-age stakes: stake = coins x holding time.

    Stakes are always recomputed from coins and holding time.
    Peers keep their insertion order, which fixes the selection order.
    """
    policy: StakePolicy = field(default_factory=StakePolicy)
    accounts: dict[str, StakeAccount] = field(default_factory=dict)

    def add_peer(self, peer: str, coins: float, holding_time: float = 0.0) -> "StakeLedger":
        if coins < 0 or holding_time < 0:
            raise ConsensusError(f"Peer {peer} needs non-negative coins and holding time")
        self.accounts[peer] = StakeAccount(coins, holding_time)
        return self

    def _account(self, peer: str) -> StakeAccount:
        try:
            return self.accounts[peer]
        except KeyError:
            raise ConsensusError(f"Unknown peer '{peer}'") from None

    def stake(self, peer: str) -> float:
        return self._account(peer).stake

    def stakes(self) -> dict[str, float]:
        return {peer: account.stake for peer, account in self.accounts.items()}

    def total_stake(self) -> float:
        return float(sum(self.stakes().values()))

    def select_validator(self, rng: np.random.Generator) -> str:
        """
        Samples a peer with probability stake_i / sum(stake).

        Raises:
            ConsensusError: If the total stake is zero
        """
        peers = list(self.accounts)
        weights = np.array([self.accounts[p].stake for p in peers], dtype=float)
        total = weights.sum()
        if not total > 0:
            raise ConsensusError("No stake in the ledger, cannot select a validator")
        winner = peers[int(rng.choice(len(peers), p=weights / total))]
        logger.debug(f"Selected validator {winner} with stake {self.accounts[winner].stake}")
        return winner

    def settle_win(self, peer: str) -> "StakeLedger":
        if self.policy.reset_on_win:
            self._account(peer).holding_time = 0.0
        return self

    def slash(self, peer: str, fraction: float | None = None) -> "StakeLedger":
        """
        Burns `fraction` of a peer's coins and resets its coin age.

        Raises:
            ConsensusError: If the peer is unknown
            PolicyError: If fraction is outside (0, 1]
        """
        fraction = self.policy.slash_fraction if fraction is None else fraction
        if not 0 < fraction <= 1:
            raise PolicyError(f"Slash fraction must be in (0, 1], got {fraction}")
        account = self._account(peer)
        account.coins *= 1 - fraction
        account.holding_time = 0.0
        logger.info(f"Slashed {peer} by {fraction:.2%}: coins now {account.coins}")
        return self

    def reward(self, peer: str, amount: float | None = None) -> "StakeLedger":
        """
        Credits coins to a peer.

        Raises:
            PolicyError: If amount is negative or not below min_stake
        """
        amount = self.policy.reward if amount is None else amount
        if amount < 0:
            raise PolicyError(f"Reward must be non-negative, got {amount}")
        if amount >= self.policy.min_stake:
            raise PolicyError(
                f"Reward {amount} must stay below the minimum stake {self.policy.min_stake}"
            )
        self._account(peer).coins += amount
        return self

    def advance_time(self, ticks: float) -> "StakeLedger":
        if ticks < 0:
            raise ConsensusError(f"Time only moves forward, got {ticks} ticks")
        for account in self.accounts.values():
            account.holding_time += ticks
        return self
