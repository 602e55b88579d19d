"""Seed-chain genomes: compact encoding of a policy as its mutation history.

An individual is stored as the ordered list of actions that produced it: one
initialization action (a seed) followed by mutation actions (seed, magnitude).
Replaying the list reconstructs the exact parameter vector, so persistence
cost is O(depth) regardless of network size.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .policy_net import NetworkShape, ParameterVector, init_from_seed
from .rng import standard_normals

GENOME_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MutationAction:
    """One evolution step: initialize from `seed`, or step `magnitude` along
    the unit direction derived from `seed`."""

    seed: int
    magnitude: float = 0.0
    is_init: bool = False

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if not self.is_init:
            if not np.isfinite(self.magnitude) or self.magnitude < 0:
                raise ValueError("mutation magnitude must be finite and >= 0")

    @classmethod
    def init(cls, seed: int) -> "MutationAction":
        return cls(seed=seed, magnitude=0.0, is_init=True)

    @classmethod
    def mutation(cls, seed: int, magnitude: float) -> "MutationAction":
        return cls(seed=seed, magnitude=float(magnitude), is_init=False)


@dataclass(frozen=True)
class Genome:
    shape: NetworkShape
    actions: tuple[MutationAction, ...]

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise ValueError("genome needs at least the initialization action")
        if not self.actions[0].is_init:
            raise ValueError("first genome action must be an initialization")
        if any(a.is_init for a in self.actions[1:]):
            raise ValueError("only the first genome action may be an initialization")

    def __len__(self) -> int:
        return len(self.actions)

    def extended(self, action: MutationAction) -> "Genome":
        return Genome(self.shape, self.actions + (action,))


def direction_from_seed(seed: int, dim: int) -> np.ndarray:
    """Unit-norm mutation direction for `seed` in a `dim`-dimensional space.

    Entries are standard-normal from the portable stream, then normalized so
    a mutation's magnitude is exactly its Euclidean step size.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    d = standard_normals(seed, dim)
    return d / np.linalg.norm(d)


def apply_mutation(params: ParameterVector, action: MutationAction) -> ParameterVector:
    """params + magnitude * direction(seed). Input is left untouched."""
    if action.is_init:
        raise ValueError("apply_mutation expects a mutation action, not an init")
    delta = direction_from_seed(action.seed, len(params))
    return ParameterVector(params.values + action.magnitude * delta, params.shape)


def materialize(genome: Genome) -> ParameterVector:
    """Replay the genome's action chain into a parameter vector."""
    params = init_from_seed(genome.shape, genome.actions[0].seed)
    for action in genome.actions[1:]:
        params = apply_mutation(params, action)
    return params


def genome_to_dict(genome: Genome) -> dict:
    return {
        "format_version": GENOME_FORMAT_VERSION,
        "shape": genome.shape.to_dict(),
        "actions": [{"seed": a.seed, "magnitude": a.magnitude} for a in genome.actions],
    }


def genome_from_dict(d: dict) -> Genome:
    version = d.get("format_version")
    if version != GENOME_FORMAT_VERSION:
        raise ValueError(f"unsupported genome format_version: {version!r}")
    shape = NetworkShape.from_dict(d["shape"])
    raw = d["actions"]
    if not raw:
        raise ValueError("genome file contains no actions")
    actions = [MutationAction.init(int(raw[0]["seed"]))]
    actions += [
        MutationAction.mutation(int(a["seed"]), float(a["magnitude"])) for a in raw[1:]
    ]
    return Genome(shape, tuple(actions))


def save_genome(genome: Genome, path: str | Path) -> None:
    Path(path).write_text(json.dumps(genome_to_dict(genome), indent=2) + "\n")


def load_genome(path: str | Path) -> Genome:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"cannot parse genome file {path}: {e}") from e
    if not isinstance(d, dict):
        raise ValueError(f"genome file {path} does not contain an object")
    try:
        return genome_from_dict(d)
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed genome file {path}: {e}") from e
