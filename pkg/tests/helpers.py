"""Shared test utilities: a cheap stub environment and tree-audit helpers."""

from __future__ import annotations

import math

import numpy as np

from mctspo import NetworkShape, Trajectory, forward_batch

STUB_OBSERVATIONS = np.array([
    [0.3, -0.6],
    [-0.8, 0.2],
    [0.1, 0.9],
    [-0.4, -0.3],
    [0.7, 0.5],
])


class StubEnv:
    """Deterministic 5-step environment whose reward is the policy output.

    Return = 0.2 * sum of outputs over five fixed observations, so it varies
    smoothly with the parameters, lies in [-1, 1], and costs five env calls
    per rollout. Useful for exercising the tree machinery quickly.
    """

    def __init__(self, shape: NetworkShape | None = None):
        self.shape = shape or NetworkShape(2, (4,), 1)

    @property
    def obs_dim(self) -> int:
        return self.shape.input_dim

    @property
    def action_dim(self) -> int:
        return self.shape.output_dim

    def rollout(self, params, budget=None) -> Trajectory:
        obs = STUB_OBSERVATIONS
        if budget is not None:
            budget.charge(len(obs))
        actions = forward_batch(params, obs)
        rewards = 0.2 * actions[:, 0]
        total = float(rewards.sum())
        return Trajectory(
            observations=obs,
            actions=actions,
            rewards=rewards,
            next_observations=np.roll(obs, -1, axis=0),
            total_return=total,
            reached_goal=total > 0.8,
        )


def make_traj(observations: np.ndarray) -> Trajectory:
    """Wrap raw observations into a Trajectory for divergence math tests."""
    obs = np.asarray(observations, dtype=np.float64)
    n = obs.shape[0]
    rewards = np.zeros(n)
    return Trajectory(
        observations=obs,
        actions=np.zeros((n, 1)),
        rewards=rewards,
        next_observations=obs,
        total_return=0.0,
        reached_goal=False,
    )


def tree_nodes(root):
    """All nodes reachable from `root` (in-tree or not), preorder."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        for edge in node.edges:
            stack.append(edge.child)


def subtree_stats(node):
    """(in-tree node count, terminal visit count, max rollout return) below
    and including `node`."""
    count = 0
    terminal = 0
    best = -math.inf
    for n in tree_nodes(node):
        if n.in_tree:
            count += 1
            terminal += n.terminal_visits
            best = max(best, n.rollout_return)
    return count, terminal, best


def audit_tree(search):
    """Assert the structural invariants of a finished (or interrupted) search:
    widening bound, max-backup correctness, and visit-count consistency."""
    cfg = search.config
    for node in tree_nodes(search.root):
        if not node.in_tree:
            assert node.visit_count == 0 and not node.edges
            continue
        bound = math.ceil(cfg.widening_k * node.visit_count**cfg.widening_alpha)
        assert len(node.edges) <= max(bound, 1 if node.visit_count else 0), (
            f"widening bound violated: {len(node.edges)} children, "
            f"N={node.visit_count}")
        edge_visits = 0
        for edge in node.edges:
            size, terminal, best = subtree_stats(edge.child)
            assert edge.visit_count == size + terminal, (
                f"edge visits {edge.visit_count} != subtree sims {size + terminal}")
            if edge.visit_count:
                assert edge.q == best, f"Q {edge.q} != subtree max {best}"
            edge_visits += edge.visit_count
        assert node.visit_count == edge_visits + node.terminal_visits, (
            f"N(s) {node.visit_count} != sum_a N(s,a) {edge_visits} "
            f"+ terminal {node.terminal_visits}")
