"""Simulated chooser behaviors for autonomous benchmarking."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MissingTruth

KINDS = ("expert", "adversarial", "trusting", "pbest")


@dataclass(frozen=True)
class ChoicePolicy:
    """How a simulated human picks from an alternative set."""

    kind: str
    prob: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError("prob must lie in [0, 1]")

    @classmethod
    def parse(cls, label: str) -> "ChoicePolicy":
        """Parse config labels: 'expert', 'adversarial', 'trusting', 'pbest:0.25'."""
        label = label.strip().lower()
        if label.startswith("pbest"):
            _, _, tail = label.partition(":")
            return cls("pbest", float(tail) if tail else 1.0)
        return cls(label)

    @property
    def label(self) -> str:
        if self.kind == "pbest":
            return f"pbest:{self.prob:g}"
        return self.kind

    @property
    def needs_truth(self) -> bool:
        return self.kind in ("expert", "adversarial", "pbest")


def select(policy: ChoicePolicy, alt_set, true_values, seed: int) -> int:
    """Index of the chosen candidate; argmax/argmin ties go to the lowest index."""
    p = len(alt_set.candidates)
    if policy.kind == "trusting":
        return next(i for i, c in enumerate(alt_set.candidates) if c.is_utility_optimum)
    if true_values is None:
        raise MissingTruth(f"policy {policy.label!r} needs true candidate values")
    tv = np.asarray(true_values, dtype=float).ravel()
    if tv.size != p:
        raise LengthMismatch(f"expected {p} true values, got {tv.size}")
    expert_index = int(np.argmax(tv))
    if policy.kind == "expert":
        return expert_index
    if policy.kind == "adversarial":
        return int(np.argmin(tv))
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    if rng.uniform() < policy.prob:
        return expert_index
    return int(rng.integers(p))
