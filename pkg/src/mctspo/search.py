"""Monte-Carlo tree search in policy-parameter space.

States are parameter vectors, actions are seeded mutations, and the tree
grows under progressive widening. Child values back up the maximum (not the
average) simulation return, value estimates come from rolling out a node's
own policy with no further mutation, and each node precomputes a buffer of
divergence-safe candidate actions from its rollout trajectory so expansion
never resamples the environment needlessly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .envs import BudgetExhausted, CallBudget, Trajectory
from .genome import Genome, MutationAction, apply_mutation
from .policy_net import NetworkShape, ParameterVector, init_from_seed
from .rng import MasterRng
from .safe_mutation import DivergenceBudget, get_candidate_actions


@dataclass
class SearchConfig:
    exploration_c: float = math.sqrt(2.0)
    widening_k: float = 0.5
    widening_alpha: float = 0.5
    n_iterations: int = 10**9
    n_ca: int = 4
    divergence: DivergenceBudget = field(default_factory=DivergenceBudget)
    max_depth: int | None = None

    def __post_init__(self):
        if self.exploration_c <= 0 or self.widening_k <= 0:
            raise ValueError("exploration constant and widening k must be positive")
        if not (0.0 < self.widening_alpha <= 1.0):
            raise ValueError("widening alpha must be in (0, 1]")
        if self.n_iterations < 1 or self.n_ca < 1:
            raise ValueError("n_iterations and n_ca must be positive")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive when set")

    def to_dict(self) -> dict:
        return {
            "exploration_c": self.exploration_c,
            "widening_k": self.widening_k,
            "widening_alpha": self.widening_alpha,
            "n_iterations": self.n_iterations,
            "n_ca": self.n_ca,
            "divergence": self.divergence.to_dict(),
            "max_depth": self.max_depth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SearchConfig":
        kwargs = dict(d)
        if "divergence" in kwargs:
            kwargs["divergence"] = DivergenceBudget.from_dict(kwargs["divergence"])
        return cls(**kwargs)


class TreeNode:
    """Search bookkeeping for one policy. Parameters are not stored; they are
    recomputed along the descent path and recoverable via the genome."""

    __slots__ = ("parent", "action", "depth", "creation_index", "in_tree",
                 "visit_count", "edges", "candidates", "rollout_return",
                 "reached_goal", "terminal_visits")

    def __init__(self, parent: "TreeNode | None", action: MutationAction | None,
                 depth: int):
        self.parent = parent
        self.action = action            # edge action that produced this node
        self.depth = depth
        self.creation_index = -1        # set when first rolled out
        self.in_tree = False
        self.visit_count = 0
        self.edges: list[ChildEdge] = []
        self.candidates: list[MutationAction] = []
        self.rollout_return: float | None = None
        self.reached_goal = False
        self.terminal_visits = 0        # visits that ended here (depth cap)

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def genome(self, shape: NetworkShape) -> Genome | None:
        """Action chain from the root; None for the root itself."""
        if self.is_root:
            return None
        actions = []
        node = self
        while node.parent is not None:
            actions.append(node.action)
            node = node.parent
        return Genome(shape, tuple(reversed(actions)))


class ChildEdge:
    __slots__ = ("action", "child", "visit_count", "q")

    def __init__(self, action: MutationAction, child: TreeNode):
        self.action = action
        self.child = child
        self.visit_count = 0
        self.q: float | None = None  # set by the creating simulation's backup


def may_widen(node: TreeNode, k: float, alpha: float) -> bool:
    """True while the node may still add distinct actions: |A(s)| < k*N(s)^alpha."""
    return len(node.edges) < k * node.visit_count**alpha


def select_ucb(node: TreeNode, c: float) -> ChildEdge:
    """Edge with maximal Q(s,a) + c*sqrt(log N(s) / N(s,a)); first-created wins ties."""
    if not node.edges:
        raise ValueError("select_ucb on a node with no children")
    log_n = math.log(node.visit_count)
    best = None
    best_score = -math.inf
    for edge in node.edges:
        if edge.visit_count < 1 or edge.q is None:
            raise ValueError("select_ucb saw an unvisited child")
        score = edge.q + c * math.sqrt(log_n / edge.visit_count)
        if score > best_score:
            best = edge
            best_score = score
    return best


@dataclass
class RunResult:
    best_genome: Genome | None     # None when the zero-policy root stayed best
    best_return: float
    curve: list[tuple[int, float]]  # (env_calls, best_return_so_far)
    env_calls: int
    first_goal_env_calls: int | None
    iterations: int


class CurveRecorder:
    """Best-so-far curve, sampled on improvement and at budget checkpoints."""

    def __init__(self, call_limit: int | None):
        self.points: list[tuple[int, float]] = []
        self._best = -math.inf
        self._every = max(1, call_limit // 100) if call_limit else None
        self._next_checkpoint = self._every

    def update(self, env_calls: int, best: float) -> None:
        emit = best > self._best
        self._best = max(self._best, best)
        if self._every is not None and env_calls >= self._next_checkpoint:
            emit = True
            while env_calls >= self._next_checkpoint:
                self._next_checkpoint += self._every
        if emit:
            self._append(env_calls, self._best)

    def finish(self, env_calls: int, best: float) -> None:
        self._best = max(self._best, best)
        self._append(env_calls, self._best)

    def _append(self, env_calls: int, best: float) -> None:
        if self.points and self.points[-1][0] == env_calls:
            self.points[-1] = (env_calls, best)
        else:
            self.points.append((env_calls, best))


class MctspoSearch:
    """One single-threaded search instance over a task environment.

    `env` needs only `rollout(params, budget) -> Trajectory`; any object with
    that surface (including test stubs) works.
    """

    def __init__(self, env, shape: NetworkShape, config: SearchConfig,
                 master_seed: int, call_limit: int | None = None):
        self.env = env
        self.shape = shape
        self.config = config
        self.rng = MasterRng(master_seed)
        self.budget = CallBudget(call_limit)
        self.root = TreeNode(parent=None, action=None, depth=0)
        self.root_params = ParameterVector(
            np.zeros(shape.parameter_count), shape)
        self.nodes: list[TreeNode] = []   # creation order
        self.best_node: TreeNode | None = None
        self.best_return = -math.inf
        self.first_goal_env_calls: int | None = None

    # -- tree steps ---------------------------------------------------------

    def _transition(self, params: ParameterVector,
                    action: MutationAction) -> ParameterVector:
        if action.is_init:
            return init_from_seed(self.shape, action.seed)
        return apply_mutation(params, action)

    def _refill_candidates(self, node: TreeNode, params: ParameterVector,
                           traj: Trajectory | None = None) -> None:
        if node.is_root:
            # first-generation actions are fresh initializations; no
            # trajectory or magnitude is involved
            node.candidates = [MutationAction.init(self.rng.next_uint64())
                               for _ in range(self.config.n_ca)]
            return
        if traj is None:
            traj = self.env.rollout(params, self.budget)
        node.candidates = get_candidate_actions(
            params, traj, self.config.n_ca, self.config.divergence, self.rng)

    def rollout_no_mutation(self, node: TreeNode, params: ParameterVector) -> float:
        """First-visit evaluation: deploy the node's own policy once, record
        its return, and precompute the candidate-action buffer from the same
        trajectory (which is then discarded)."""
        traj = self.env.rollout(params, self.budget)
        node.rollout_return = traj.total_return
        node.reached_goal = traj.reached_goal
        node.in_tree = True
        node.creation_index = len(self.nodes)
        self.nodes.append(node)
        self._refill_candidates(node, params, traj)
        if traj.reached_goal and self.first_goal_env_calls is None:
            self.first_goal_env_calls = self.budget.used
        if traj.total_return > self.best_return:
            self.best_return = traj.total_return
            self.best_node = node
        return traj.total_return

    def simulate(self) -> float:
        """One simulation from the root; returns the backed-up value.

        On BudgetExhausted every statistic touched by the partial simulation
        is rolled back before the exception propagates.
        """
        cfg = self.config
        node = self.root
        params = self.root_params
        path: list[tuple[TreeNode, ChildEdge, bool]] = []
        try:
            while True:
                if not node.in_tree:
                    q = self.rollout_no_mutation(node, params)
                    break
                node.visit_count += 1
                created = None
                if ((cfg.max_depth is None or node.depth < cfg.max_depth)
                        and may_widen(node, cfg.widening_k, cfg.widening_alpha)):
                    if not node.candidates:
                        self._refill_candidates(node, params)
                    action = node.candidates.pop(0)
                    child = TreeNode(parent=node, action=action, depth=node.depth + 1)
                    created = ChildEdge(action, child)
                    node.edges.append(created)
                if not node.edges:
                    # depth-capped leaf: the visit terminates here and its
                    # stored (deterministic) return backs up
                    node.terminal_visits += 1
                    q = node.rollout_return
                    break
                edge = created if created is not None else select_ucb(node, cfg.exploration_c)
                edge.visit_count += 1
                path.append((node, edge, created is not None))
                params = self._transition(params, edge.action)
                node = edge.child
        except BudgetExhausted:
            if node.in_tree:
                node.visit_count -= 1   # increment from this frame
            for parent, edge, was_created in reversed(path):
                edge.visit_count -= 1
                parent.visit_count -= 1
                if was_created:
                    parent.edges.pop()
                    parent.candidates.insert(0, edge.action)
            raise
        for _, edge, _ in reversed(path):
            if edge.q is None or q > edge.q:
                edge.q = q
            q = edge.q
        return q

    def iter_nodes(self):
        """All in-tree nodes, creation order (root first)."""
        return iter(self.nodes)

    def result(self, iterations: int, curve: list[tuple[int, float]]) -> RunResult:
        return RunResult(
            best_genome=self.best_node.genome(self.shape),
            best_return=self.best_return,
            curve=curve,
            env_calls=self.budget.used,
            first_goal_env_calls=self.first_goal_env_calls,
            iterations=iterations,
        )


def run_mctspo(env, shape: NetworkShape, config: SearchConfig, master_seed: int,
               call_limit: int | None = None) -> RunResult:
    """Run the search for n_iterations or until the env-call budget is spent;
    the best node is the one with the highest recorded rollout return."""
    search = MctspoSearch(env, shape, config, master_seed, call_limit)
    recorder = CurveRecorder(call_limit)
    iterations = 0
    for _ in range(config.n_iterations):
        if search.budget.exhausted:
            break
        try:
            search.simulate()
        except BudgetExhausted:
            break
        iterations += 1
        recorder.update(search.budget.used, search.best_return)
    recorder.finish(search.budget.used, search.best_return)
    return search.result(iterations, recorder.points)
