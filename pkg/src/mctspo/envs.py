"""Deterministic sparse-reward control tasks and the rollout engine.

Both tasks pay 1.0 on reaching the goal and a small control penalty
otherwise, which plants a zero-effort local optimum at return 0. Dynamics,
start states and horizons are fixed, so a parameter vector maps to exactly
one trajectory and one return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .policy_net import NetworkShape, ParameterVector, forward

SPARSE_MOUNTAIN_CAR = "sparse-mountain-car"
SPARSE_ACROBOT = "sparse-acrobot"
ENV_KINDS = (SPARSE_MOUNTAIN_CAR, SPARSE_ACROBOT)


class BudgetExhausted(RuntimeError):
    """Raised when an environment step would exceed the call budget."""


class CallBudget:
    """Hard counter of task-environment steps; the budget unit of every run."""

    def __init__(self, limit: int | None = None):
        if limit is not None and limit <= 0:
            raise ValueError("budget limit must be positive")
        self.limit = limit
        self.used = 0

    def charge(self, n: int = 1) -> None:
        if self.limit is not None and self.used + n > self.limit:
            raise BudgetExhausted(f"environment-call budget of {self.limit} exhausted")
        self.used += n

    @property
    def exhausted(self) -> bool:
        return self.limit is not None and self.used >= self.limit


@dataclass(frozen=True)
class EnvSpec:
    """Task parameters. `power` applies to the mountain car, `goal_height`
    to the acrobot; the inapplicable field is ignored."""

    kind: str
    horizon: int = 100
    power: float = 0.0015
    goal_position: float = 0.5
    goal_height: float = 1.999
    control_penalty: float = 0.001

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ValueError(f"unknown environment kind {self.kind!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")
        if self.control_penalty < 0:
            raise ValueError("control penalty must be non-negative")

    @property
    def obs_dim(self) -> int:
        return 2 if self.kind == SPARSE_MOUNTAIN_CAR else 4

    @property
    def action_dim(self) -> int:
        return 1

    @property
    def action_bounds(self) -> tuple[float, ...]:
        return (1.0,)

    def network_shape(self, hidden_dims: tuple[int, ...],
                      squash_output: bool = True) -> NetworkShape:
        return NetworkShape(self.obs_dim, tuple(hidden_dims), self.action_dim,
                            self.action_bounds, squash_output)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "horizon": self.horizon,
            "power": self.power,
            "goal_position": self.goal_position,
            "goal_height": self.goal_height,
            "control_penalty": self.control_penalty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvSpec":
        return cls(
            kind=d["kind"],
            horizon=int(d.get("horizon", 100)),
            power=float(d.get("power", 0.0015)),
            goal_position=float(d.get("goal_position", 0.5)),
            goal_height=float(d.get("goal_height", 1.999)),
            control_penalty=float(d.get("control_penalty", 0.001)),
        )


@dataclass(frozen=True)
class TaskState:
    vector: tuple[float, ...]
    step_index: int = 0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One deterministic episode: per-step arrays plus the cached return."""

    observations: np.ndarray       # (n, obs_dim) inputs fed to the policy
    actions: np.ndarray            # (n, action_dim) executed actions
    rewards: np.ndarray            # (n,)
    next_observations: np.ndarray  # (n, obs_dim)
    total_return: float
    reached_goal: bool

    def __len__(self) -> int:
        return self.rewards.shape[0]

    @property
    def transitions(self):
        return list(zip(self.observations, self.actions, self.rewards,
                        self.next_observations))


def reset(spec: EnvSpec) -> TaskState:
    """Canonical start state with all reset randomness removed."""
    if spec.kind == SPARSE_MOUNTAIN_CAR:
        return TaskState(vector=(-0.5, 0.0), step_index=0)
    return TaskState(vector=(0.0, 0.0, 0.0, 0.0), step_index=0)


def _mountain_car_goal(vector: tuple[float, ...], spec: EnvSpec) -> bool:
    return vector[0] >= spec.goal_position


def _acrobot_goal(vector: tuple[float, ...], spec: EnvSpec) -> bool:
    th1, th2 = vector[0], vector[1]
    return -math.cos(th1) - math.cos(th1 + th2) >= spec.goal_height


def goal_reached(spec: EnvSpec, state: TaskState) -> bool:
    if spec.kind == SPARSE_MOUNTAIN_CAR:
        return _mountain_car_goal(state.vector, spec)
    return _acrobot_goal(state.vector, spec)


# Acrobot physical constants (two unit links, torque on the elbow joint).
_M1 = _M2 = 1.0
_L1 = 1.0
_LC1 = _LC2 = 0.5
_I1 = _I2 = 1.0
_G = 9.8
_DT = 0.2
_MAX_VEL1 = 4.0 * math.pi
_MAX_VEL2 = 9.0 * math.pi


def _acrobot_dsdt(s: tuple[float, float, float, float], tau: float):
    th1, th2, dth1, dth2 = s
    cos2, sin2 = math.cos(th2), math.sin(th2)
    d1 = _M1 * _LC1**2 + _M2 * (_L1**2 + _LC2**2 + 2.0 * _L1 * _LC2 * cos2) + _I1 + _I2
    d2 = _M2 * (_LC2**2 + _L1 * _LC2 * cos2) + _I2
    phi2 = _M2 * _LC2 * _G * math.cos(th1 + th2 - math.pi / 2.0)
    phi1 = (-_M2 * _L1 * _LC2 * dth2**2 * sin2
            - 2.0 * _M2 * _L1 * _LC2 * dth2 * dth1 * sin2
            + (_M1 * _LC1 + _M2 * _L1) * _G * math.cos(th1 - math.pi / 2.0)
            + phi2)
    ddth2 = ((tau + (d2 / d1) * phi1 - _M2 * _L1 * _LC2 * dth1**2 * sin2 - phi2)
             / (_M2 * _LC2**2 + _I2 - d2**2 / d1))
    ddth1 = -(d2 * ddth2 + phi1) / d1
    return (dth1, dth2, ddth1, ddth2)


def _wrap_pi(x: float) -> float:
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _acrobot_step(vector: tuple[float, ...], torque: float) -> tuple[float, ...]:
    """One fixed-step RK4 integration of the two-link dynamics."""
    s = vector
    k1 = _acrobot_dsdt(s, torque)
    k2 = _acrobot_dsdt(tuple(s[i] + 0.5 * _DT * k1[i] for i in range(4)), torque)
    k3 = _acrobot_dsdt(tuple(s[i] + 0.5 * _DT * k2[i] for i in range(4)), torque)
    k4 = _acrobot_dsdt(tuple(s[i] + _DT * k3[i] for i in range(4)), torque)
    ns = tuple(s[i] + (_DT / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
               for i in range(4))
    th1 = _wrap_pi(ns[0])
    th2 = _wrap_pi(ns[1])
    dth1 = min(max(ns[2], -_MAX_VEL1), _MAX_VEL1)
    dth2 = min(max(ns[3], -_MAX_VEL2), _MAX_VEL2)
    return (th1, th2, dth1, dth2)


def step(spec: EnvSpec, state: TaskState, action) -> tuple[TaskState, float, bool]:
    """Advance one step; actions outside the bounds are clamped first."""
    if state.step_index >= spec.horizon:
        raise ValueError("step() called past the horizon")
    if goal_reached(spec, state):
        raise ValueError("step() called on a terminal (goal) state")
    a = float(action[0]) if np.ndim(action) else float(action)
    a = min(max(a, -1.0), 1.0)

    if spec.kind == SPARSE_MOUNTAIN_CAR:
        x, v = state.vector
        v = v + a * spec.power - 0.0025 * math.cos(3.0 * x)
        v = min(max(v, -0.07), 0.07)
        x = x + v
        x = min(max(x, -1.2), 0.6)
        if x <= -1.2 and v < 0.0:
            v = 0.0
        new_vector = (x, v)
        at_goal = _mountain_car_goal(new_vector, spec)
    else:
        new_vector = _acrobot_step(state.vector, a)
        at_goal = _acrobot_goal(new_vector, spec)

    new_state = TaskState(vector=new_vector, step_index=state.step_index + 1)
    if at_goal:
        return new_state, 1.0, True
    reward = -spec.control_penalty * abs(a)
    return new_state, reward, new_state.step_index >= spec.horizon


def rollout(spec: EnvSpec, params: ParameterVector,
            budget: CallBudget | None = None) -> Trajectory:
    """Deploy the policy from reset until done; one trajectory per call.

    Each executed step charges `budget` by one; a charge that would exceed
    the limit raises BudgetExhausted before the step runs.
    """
    shape = params.shape
    if shape.input_dim != spec.obs_dim or shape.output_dim != spec.action_dim:
        raise ValueError(
            f"network shape ({shape.input_dim}->{shape.output_dim}) does not match "
            f"environment dims ({spec.obs_dim}->{spec.action_dim})")

    state = reset(spec)
    n_max = spec.horizon
    observations = np.empty((n_max, spec.obs_dim))
    actions = np.empty((n_max, spec.action_dim))
    rewards = np.empty(n_max)
    next_observations = np.empty((n_max, spec.obs_dim))

    n = 0
    reached = False
    done = False
    while not done:
        if budget is not None:
            budget.charge(1)
        obs = np.asarray(state.vector)
        action = forward(params, obs)
        state, reward, done = step(spec, state, action)
        observations[n] = obs
        actions[n] = action
        rewards[n] = reward
        next_observations[n] = state.vector
        n += 1
        if reward == 1.0:
            reached = True

    rewards = rewards[:n].copy()
    return Trajectory(
        observations=observations[:n].copy(),
        actions=actions[:n].copy(),
        rewards=rewards,
        next_observations=next_observations[:n].copy(),
        total_return=float(rewards.sum()),
        reached_goal=reached,
    )


class RolloutEnv:
    """Adapter binding an EnvSpec to the sampling interface the optimizers
    use: `rollout(params, budget) -> Trajectory`."""

    def __init__(self, spec: EnvSpec):
        self.spec = spec

    @property
    def obs_dim(self) -> int:
        return self.spec.obs_dim

    @property
    def action_dim(self) -> int:
        return self.spec.action_dim

    def rollout(self, params: ParameterVector, budget: CallBudget | None = None) -> Trajectory:
        return rollout(self.spec, params, budget)
