"""Within-group ordering, group scoring, and presentation sort."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grouping import ValidationReport

DEFAULT_W = 0.5


@dataclass(frozen=True)
class CandidateGroup:
    """One ordered, validated, scored propagation candidate."""

    ordered_member_ids: tuple[str, ...]
    score: float
    validation: ValidationReport
    per_position_gamma: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(set(self.ordered_member_ids)) != len(self.ordered_member_ids):
            raise ValueError("ordered_member_ids must be distinct")


def order_group(members: Sequence[int], s_rd: np.ndarray) -> tuple[int, ...]:
    """Arrange group members onto reference positions, best match first.

    Greedy bijection: repeatedly take the highest s_rd entry over unassigned
    (position, member) pairs; ties prefer the smaller position, then the
    smaller member index.
    """
    k = s_rd.shape[0]
    if len(members) != k:
        raise ValueError(f"group of {len(members)} cannot be ordered against {k} references")
    open_positions = list(range(k))
    open_members = list(members)
    placed: dict[int, int] = {}
    while open_positions:
        best_val = -1.0
        best = (open_positions[0], open_members[0])
        for pos in open_positions:
            for mem in open_members:
                if s_rd[pos, mem] > best_val:
                    best_val = float(s_rd[pos, mem])
                    best = (pos, mem)
        placed[best[0]] = best[1]
        open_positions.remove(best[0])
        open_members.remove(best[1])
    return tuple(placed[pos] for pos in range(k))


def score_group(
    ordered_members: Sequence[int], s_rd: np.ndarray, s_dd: np.ndarray, w: float = DEFAULT_W
) -> float:
    """Blend of mean reference similarity and mean intra-group similarity.

    S(G) = (W/k)·Σ γ_i + (2(1−W)/(k(k−1)))·Σ_{i<j} λ_ij. A singleton group
    has no pairwise term; its score is its γ alone.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"W={w} outside [0, 1]")
    k = len(ordered_members)
    gammas = [float(s_rd[pos, mem]) for pos, mem in enumerate(ordered_members)]
    if k == 1:
        return gammas[0]
    pair_sum = 0.0
    for i, a in enumerate(ordered_members):
        for b in list(ordered_members)[i + 1 :]:
            pair_sum += float(s_dd[a, b])
    return (w / k) * sum(gammas) + (2.0 * (1.0 - w) / (k * (k - 1))) * pair_sum


def sort_groups(groups: Sequence[CandidateGroup]) -> list[CandidateGroup]:
    """Descending score; equal scores fall back to member-id lexicographic order."""
    return sorted(groups, key=lambda g: (-g.score, g.ordered_member_ids))
