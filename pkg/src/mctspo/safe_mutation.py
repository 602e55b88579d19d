"""Divergence-bounded mutation magnitudes.

A mutation direction is scaled so the mean squared change in policy outputs
over a stored trajectory stays within a budget. The curvature of that
divergence at the unmutated parameters is a Gauss-Newton form (the residuals
vanish there, so the form is exact), evaluated matrix-free through
jacobian-vector products; a backtracking line search then guards the actual,
non-quadratic divergence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .envs import Trajectory
from .genome import MutationAction, direction_from_seed
from .policy_net import ParameterVector, forward_batch, jvp_batch
from .rng import MasterRng

log = logging.getLogger(__name__)

# Below this curvature the direction is numerically in the output null-space
# and the magnitude formula is meaningless; callers redraw the seed.
Q_FLOOR = 1e-12

_MAX_SEED_RETRIES = 16


class DegenerateDirection(RuntimeError):
    """Direction has (numerically) no effect on the policy outputs."""


class CandidateGenerationFailed(RuntimeError):
    """Could not find enough non-degenerate mutation seeds."""


@dataclass(frozen=True)
class DivergenceBudget:
    d_max: float = 1.0
    shrink_factor: float = 0.5
    max_iterations: int = 20
    magnitude_cap: float = 1e3  # largest step the line search will ever try

    def __post_init__(self):
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if not (0.0 < self.shrink_factor < 1.0):
            raise ValueError("shrink factor must be in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.magnitude_cap <= 0:
            raise ValueError("magnitude cap must be positive")

    def to_dict(self) -> dict:
        return {"d_max": self.d_max, "shrink_factor": self.shrink_factor,
                "max_iterations": self.max_iterations,
                "magnitude_cap": self.magnitude_cap}

    @classmethod
    def from_dict(cls, d: dict) -> "DivergenceBudget":
        return cls(d_max=float(d.get("d_max", 1.0)),
                   shrink_factor=float(d.get("shrink_factor", 0.5)),
                   max_iterations=int(d.get("max_iterations", 20)),
                   magnitude_cap=float(d.get("magnitude_cap", 1e3)))


def _mean_sq_diff(new_outputs: np.ndarray, old_outputs: np.ndarray) -> float:
    d = new_outputs - old_outputs
    return float(np.mean(np.sum(d * d, axis=1)))


def divergence(new_params: ParameterVector, old_params: ParameterVector,
               traj: Trajectory) -> float:
    """Mean over the trajectory's observations of the squared output change."""
    if len(traj) == 0:
        raise ValueError("divergence needs a non-empty trajectory")
    return _mean_sq_diff(forward_batch(new_params, traj.observations),
                         forward_batch(old_params, traj.observations))


def quadratic_form(old_params: ParameterVector, traj: Trajectory,
                   direction: np.ndarray) -> float:
    """Curvature of the divergence along `direction` at the old parameters."""
    if len(traj) == 0:
        raise ValueError("quadratic_form needs a non-empty trajectory")
    j = jvp_batch(old_params, traj.observations, direction)
    return float(2.0 * np.mean(np.sum(j * j, axis=1)))


def solve_magnitude(q: float, budget: DivergenceBudget) -> float:
    """Magnitude at which the quadratic divergence model hits the budget."""
    if q <= Q_FLOOR:
        raise DegenerateDirection(f"curvature {q:.3e} below floor {Q_FLOOR:.0e}")
    return float(np.sqrt(2.0 * budget.d_max / q))


def _backtrack(old_params: ParameterVector, traj: Trajectory, seed: int,
               budget: DivergenceBudget, v0: float, strict: bool) -> MutationAction:
    delta = direction_from_seed(seed, len(old_params))
    old_out = forward_batch(old_params, traj.observations)
    v = v0
    for i in range(budget.max_iterations):
        candidate = ParameterVector(old_params.values + v * delta, old_params.shape)
        d = _mean_sq_diff(forward_batch(candidate, traj.observations), old_out)
        if d <= budget.d_max:
            return MutationAction.mutation(seed, v)
        if i < budget.max_iterations - 1:
            v *= budget.shrink_factor
    if strict:
        raise CandidateGenerationFailed(
            f"divergence {d:.3e} > {budget.d_max:.3e} after "
            f"{budget.max_iterations} capped line-search steps")
    log.warning("line search hit its iteration cap at magnitude %.3e "
                "(divergence %.3e > %.3e)", v, d, budget.d_max)
    return MutationAction.mutation(seed, v)


def line_search_magnitude(old_params: ParameterVector, traj: Trajectory,
                          seed: int, budget: DivergenceBudget) -> MutationAction:
    """Backtrack from the quadratic-model magnitude until the true divergence
    fits the budget; at most `max_iterations` divergence evaluations."""
    delta = direction_from_seed(seed, len(old_params))
    v0 = solve_magnitude(quadratic_form(old_params, traj, delta), budget)
    return _backtrack(old_params, traj, seed, budget,
                      min(v0, budget.magnitude_cap), strict=False)


def get_candidate_actions(params: ParameterVector, traj: Trajectory, n_ca: int,
                          budget: DivergenceBudget, rng: MasterRng) -> list[MutationAction]:
    """Draw n_ca fresh mutation seeds and solve each magnitude.

    Degenerate seeds are redrawn a bounded number of times. When every
    redraw is degenerate the policy's outputs are insensitive to any
    parameter direction over this trajectory (saturated activations); the
    quadratic model then says nothing, so the magnitude backtracks from the
    cap against the true divergence rather than abandoning the node.
    """
    if n_ca < 1:
        raise ValueError("n_ca must be >= 1")
    if len(traj) == 0:
        raise ValueError("candidate actions need a non-empty trajectory")
    actions = []
    for _ in range(n_ca):
        seed = None
        for _ in range(_MAX_SEED_RETRIES):
            seed = rng.next_uint64()
            try:
                actions.append(line_search_magnitude(params, traj, seed, budget))
                break
            except DegenerateDirection:
                continue
        else:
            actions.append(_backtrack(params, traj, seed, budget,
                                      budget.magnitude_cap, strict=True))
    return actions
