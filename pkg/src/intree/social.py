"""Per-node social awareness: community density and social tie.

Both quantities are contact counts smoothed per time window with an
evaporating EWMA::

    predicted <- (1 - w) * predicted * gamma**k + w * count

where ``w`` is ``alpha`` for densities and ``beta`` for ties and ``k`` is
the number of windows since the record was last folded.  A record is
only folded at the close of a window in which it was counted; idle
windows are accounted for by ``k`` at the next fold, so skipping them is
exact.  Reads fold the open window transiently without mutating state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .interest_tree import InterestTree


@dataclass(frozen=True)
class SocialParams:
    alpha: float = 0.7
    beta: float = 0.1
    gamma: float = 0.9
    window_T: float = 30.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not self.window_T > 0:
            raise ValueError(f"window_T must be positive, got {self.window_T}")

    def window_of(self, now: float) -> int:
        return int(math.floor(now / self.window_T))


def ewma_fold(predicted: float, count: float, weight: float, gamma: float, k: int) -> float:
    return (1.0 - weight) * predicted * gamma**k + weight * count


@dataclass
class Record:
    """One EWMA-smoothed counter (a density or a tie)."""

    current_count: int = 0
    predicted: float = 0.0
    last_update_window: int = 0


@dataclass
class SocialState:
    owner: int
    params: SocialParams = field(default_factory=SocialParams)
    density: dict[int, Record] = field(default_factory=dict)
    ties: dict[int, Record] = field(default_factory=dict)
    # index of the open window; every nonzero current_count belongs to it
    window: int = 0

    def __post_init__(self):
        self._dirty_density: set[int] = {c for c, r in self.density.items() if r.current_count}
        self._dirty_ties: set[int] = {n for n, r in self.ties.items() if r.current_count}

    # -- updates -----------------------------------------------------------

    def on_contact(self, peer: int, peer_community: int, tree: "InterestTree", now: float) -> None:
        """Count a link-up with ``peer``.

        The tie to ``peer`` is counted only when both share a major
        interest; every community on the path from the peer's community to
        the root gains one density count.
        """
        if peer == self.owner:
            raise ValueError(f"node {peer} cannot contact itself")
        w = self.params.window_of(now)
        if w > self.window:
            self.evaporate(w)
        own_community = tree.major_interest.get(self.owner)
        if own_community is not None and own_community == peer_community:
            rec = self.ties.get(peer)
            if rec is None:
                rec = self.ties[peer] = Record(last_update_window=self.window)
            rec.current_count += 1
            self._dirty_ties.add(peer)
        for c in tree.path_to_root(peer_community):
            rec = self.density.get(c)
            if rec is None:
                rec = self.density[c] = Record(last_update_window=self.window)
            rec.current_count += 1
            self._dirty_density.add(c)

    def evaporate(self, window_index: int) -> None:
        """Close every window before ``window_index`` and fold their counts."""
        if window_index < self.window:
            raise ValueError(
                f"node {self.owner}: window {window_index} precedes open window {self.window}"
            )
        if window_index == self.window:
            return
        gamma = self.params.gamma
        # counts belong to self.window, which closes at boundary self.window + 1
        closing = self.window + 1
        for table, dirty, weight in (
            (self.density, self._dirty_density, self.params.alpha),
            (self.ties, self._dirty_ties, self.params.beta),
        ):
            for key in dirty:
                rec = table[key]
                rec.predicted = ewma_fold(
                    rec.predicted, rec.current_count, weight, gamma, closing - rec.last_update_window
                )
                rec.current_count = 0
                rec.last_update_window = closing
            dirty.clear()
        self.window = window_index

    # -- reads -------------------------------------------------------------

    def _read(self, rec: Record | None, weight: float, window: int | None) -> float:
        if rec is None:
            return 0.0
        gamma = self.params.gamma
        predicted, last, count = rec.predicted, rec.last_update_window, rec.current_count
        open_window = self.window
        if window is not None and window > open_window:
            # queried past the open window: its counts have already closed
            if count:
                predicted = ewma_fold(predicted, count, weight, gamma, open_window + 1 - last)
                last = open_window + 1
                count = 0
            open_window = window
        return ewma_fold(predicted, count, weight, gamma, open_window + 1 - last)

    def density_of(self, c: int, now: float | None = None) -> float:
        """Density of community ``c`` as it would stand if the open window closed now."""
        w = None if now is None else self.params.window_of(now)
        return self._read(self.density.get(c), self.params.alpha, w)

    def tie_of(self, peer: int, now: float | None = None) -> float:
        w = None if now is None else self.params.window_of(now)
        return self._read(self.ties.get(peer), self.params.beta, w)

    # -- debugging ---------------------------------------------------------

    def dump_rows(self) -> list[tuple]:
        rows = []
        for kind, table in (("density", self.density), ("tie", self.ties)):
            for key in sorted(table):
                r = table[key]
                rows.append((self.owner, kind, key, r.predicted, r.current_count, r.last_update_window))
        return rows


def dump_social_states(states) -> str:
    lines = ["owner,kind,key,predicted,current_count,last_update_window"]
    for st in states:
        lines += [",".join(map(str, row)) for row in st.dump_rows()]
    return "\n".join(lines) + "\n"
