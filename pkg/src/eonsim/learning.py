"""Tabular learners for path selection plus an information-gain decision tree.

Path selection framing: the state is the request's (source, destination)
pair, the action is an index into that pair's candidate paths, and the
reward is ``reward_success`` when the request is provisioned on the chosen
path and ``reward_block`` otherwise.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

import numpy as np

State = Hashable


@dataclass
class QTable:
    n_actions: int
    alpha: float = 0.1
    gamma: float = 0.9
    values: dict[tuple[State, int], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_actions < 1:
            raise ValueError("n_actions must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")

    def get(self, s: State, a: int) -> float:
        return self.values.get((s, a), 0.0)

    def row(self, s: State) -> list[float]:
        return [self.values.get((s, a), 0.0) for a in range(self.n_actions)]

    def best_value(self, s: State | None) -> float:
        return 0.0 if s is None else max(self.row(s))


@dataclass
class BanditTable:
    n_actions: int
    epsilon: float = 0.1
    c: float = 1.0
    mean: dict[tuple[State, int], float] = field(default_factory=dict)
    count: dict[tuple[State, int], int] = field(default_factory=dict)
    total_pulls: dict[State, int] = field(default_factory=lambda: defaultdict(int))

    def __post_init__(self) -> None:
        if self.n_actions < 1:
            raise ValueError("n_actions must be >= 1")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.c < 0:
            raise ValueError("c must be >= 0")

    def row(self, s: State) -> list[float]:
        return [self.mean.get((s, a), 0.0) for a in range(self.n_actions)]

    def counts(self, s: State) -> list[int]:
        return [self.count.get((s, a), 0) for a in range(self.n_actions)]


def q_update(table: QTable, s: State, a: int, r: float, s_next: State | None) -> QTable:
    """One temporal-difference step on ``Q(s, a)``; ``s_next=None`` marks a terminal transition."""
    q = table.get(s, a)
    target = r + table.gamma * table.best_value(s_next)
    table.values[(s, a)] = q + table.alpha * (target - q)
    return table


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def epsilon_greedy_select(table: QTable | BanditTable, s: State, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform random action with probability ``epsilon``, else the greedy one (lowest index on ties)."""
    if table.n_actions < 1:
        raise ValueError("empty action set")
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(table.n_actions))
    return _argmax(table.row(s))


def ucb_scores(table: BanditTable, s: State, c: float, t: int) -> list[float]:
    means, counts = table.row(s), table.counts(s)
    return [
        math.inf if n == 0 else mu + c * math.sqrt(2.0 * math.log(t) / n)
        for mu, n in zip(means, counts)
    ]


def ucb_select(table: BanditTable, s: State, c: float, t: int) -> int:
    """Upper-confidence action; untried actions come first, lowest index first."""
    if table.n_actions < 1:
        raise ValueError("empty action set")
    if t < 1:
        raise ValueError("t must be >= 1")
    return _argmax(ucb_scores(table, s, c, t))


def update_bandit(table: BanditTable, s: State, a: int, reward: float) -> BanditTable:
    n = table.count.get((s, a), 0) + 1
    mu = table.mean.get((s, a), 0.0)
    table.count[(s, a)] = n
    table.mean[(s, a)] = mu + (reward - mu) / n
    table.total_pulls[s] += 1
    return table


# --- information gain / decision tree -------------------------------------------------


@dataclass(frozen=True)
class LabeledDataset:
    attributes: tuple[str, ...]
    rows: tuple[tuple[tuple[Any, ...], Any], ...]

    def __post_init__(self) -> None:
        for values, _ in self.rows:
            if len(values) != len(self.attributes):
                raise ValueError("row arity does not match the attribute list")

    def __len__(self) -> int:
        return len(self.rows)

    @classmethod
    def from_rows(cls, attributes: Sequence[str], rows) -> LabeledDataset:
        return cls(tuple(attributes), tuple((tuple(v), y) for v, y in rows))


def _label_entropy(labels) -> float:
    counts = Counter(labels)
    n = sum(counts.values())
    return -sum((k / n) * math.log2(k / n) for k in counts.values() if k)


def entropy(dataset: LabeledDataset) -> float:
    """Shannon entropy of the class labels, in bits."""
    if not len(dataset):
        raise ValueError("entropy of an empty dataset is undefined")
    return _label_entropy(y for _, y in dataset.rows)


def info_gain(dataset: LabeledDataset, attribute: int | str) -> float:
    if not len(dataset):
        raise ValueError("information gain of an empty dataset is undefined")
    col = dataset.attributes.index(attribute) if isinstance(attribute, str) else attribute
    groups: dict[Any, list] = defaultdict(list)
    for values, y in dataset.rows:
        groups[values[col]].append(y)
    n = len(dataset)
    remainder = sum(len(g) / n * _label_entropy(g) for g in groups.values())
    return entropy(dataset) - remainder


@dataclass
class DecisionTree:
    label: Any
    attribute: int | None = None
    children: dict[Any, DecisionTree] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.attribute is None

    def depth(self) -> int:
        return 0 if self.is_leaf else 1 + max(c.depth() for c in self.children.values())


def _majority(labels) -> Any:
    counts = Counter(labels)
    top = max(counts.values())
    return min((y for y, k in counts.items() if k == top), key=lambda y: (str(type(y)), y))


def train_tree(dataset: LabeledDataset, max_depth: int = 5) -> DecisionTree:
    """Greedy ID3: split on the highest-gain attribute until pure, capped, or gainless."""
    if not len(dataset):
        raise ValueError("cannot train on an empty dataset")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    return _grow(dataset, max_depth)


def _grow(data: LabeledDataset, depth_left: int) -> DecisionTree:
    labels = [y for _, y in data.rows]
    node = DecisionTree(_majority(labels))
    if depth_left == 0 or len(set(labels)) == 1:
        return node
    gains = [info_gain(data, i) for i in range(len(data.attributes))]
    best = _argmax(gains)
    if gains[best] <= 1e-12:
        return node
    node.attribute = best
    parts: dict[Any, list] = defaultdict(list)
    for values, y in data.rows:
        parts[values[best]].append((values, y))
    for value, rows in parts.items():
        node.children[value] = _grow(LabeledDataset(data.attributes, tuple(rows)), depth_left - 1)
    return node


def classify(tree: DecisionTree, row: Sequence[Any]) -> Any:
    node = tree
    while not node.is_leaf:
        child = node.children.get(row[node.attribute])
        if child is None:
            break
        node = child
    return node.label


# --- path-selection agents -------------------------------------------------------------


@dataclass(frozen=True)
class AgentConfig:
    kind: str = "none"
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    ucb_c: float = 1.0
    episodes: int = 1
    reward_success: float = 1.0
    reward_block: float = -1.0
    max_depth: int = 5

    KINDS = ("none", "q_learning", "egreedy", "ucb", "tree")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ValueError(f"agent kind must be one of {self.KINDS}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.ucb_c < 0:
            raise ValueError("ucb_c must be >= 0")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


class PathAgent:
    """Chooses one candidate path per request and learns from the outcome."""

    def __init__(self, cfg: AgentConfig, n_actions: int, rng: np.random.Generator):
        self.cfg = cfg
        self.n_actions = n_actions
        self.rng = rng

    def select(self, state: State, n_available: int, request=None) -> int:
        raise NotImplementedError

    def feedback(self, state: State, action: int, success: bool, next_state: State | None, request=None) -> None:
        raise NotImplementedError

    def end_episode(self) -> None:
        pass

    def reward(self, success: bool) -> float:
        return self.cfg.reward_success if success else self.cfg.reward_block

    def snapshot(self) -> dict:
        raise NotImplementedError


def _clip(action: int, n_available: int) -> int:
    # Pairs with fewer than k loopless paths: out-of-range picks fall back to the last one.
    return min(action, n_available - 1)


def _state_key(state: State) -> str:
    return "|".join(map(str, state)) if isinstance(state, tuple) else str(state)


class QLearningAgent(PathAgent):
    def __init__(self, cfg: AgentConfig, n_actions: int, rng: np.random.Generator):
        super().__init__(cfg, n_actions, rng)
        self.table = QTable(n_actions, cfg.alpha, cfg.gamma)

    def select(self, state, n_available, request=None):
        return _clip(epsilon_greedy_select(self.table, state, self.cfg.epsilon, self.rng), n_available)

    def feedback(self, state, action, success, next_state, request=None):
        q_update(self.table, state, action, self.reward(success), next_state)

    def snapshot(self):
        states = sorted({s for s, _ in self.table.values}, key=_state_key)
        return {"kind": "q_learning", "q": {_state_key(s): self.table.row(s) for s in states}}


class EpsilonGreedyAgent(PathAgent):
    def __init__(self, cfg: AgentConfig, n_actions: int, rng: np.random.Generator):
        super().__init__(cfg, n_actions, rng)
        self.table = BanditTable(n_actions, cfg.epsilon, cfg.ucb_c)

    def select(self, state, n_available, request=None):
        return _clip(epsilon_greedy_select(self.table, state, self.cfg.epsilon, self.rng), n_available)

    def feedback(self, state, action, success, next_state, request=None):
        update_bandit(self.table, state, action, self.reward(success))

    def snapshot(self):
        states = sorted({s for s, _ in self.table.count}, key=_state_key)
        return {
            "kind": self.cfg.kind,
            "mean": {_state_key(s): self.table.row(s) for s in states},
            "count": {_state_key(s): self.table.counts(s) for s in states},
        }


class UCBAgent(EpsilonGreedyAgent):
    def select(self, state, n_available, request=None):
        t = max(1, self.table.total_pulls[state])
        scores = ucb_scores(self.table, state, self.cfg.ucb_c, t)[:n_available]
        return _argmax(scores)


class TreeAgent(PathAgent):
    """Supervised path chooser retrained after every episode.

    Features are (source, destination, bandwidth); labels are the path
    indices that led to successful provisioning. Until the first tree exists
    the agent acts like shortest-path with epsilon exploration.
    """

    ATTRIBUTES = ("src", "dst", "bandwidth")

    def __init__(self, cfg: AgentConfig, n_actions: int, rng: np.random.Generator):
        super().__init__(cfg, n_actions, rng)
        self.rows: list[tuple[tuple, int]] = []
        self.tree: DecisionTree | None = None

    @staticmethod
    def _features(state, request) -> tuple:
        src, dst = state
        return (src, dst, getattr(request, "bandwidth_gbps", None))

    def select(self, state, n_available, request=None):
        if self.cfg.epsilon > 0 and self.rng.random() < self.cfg.epsilon:
            return int(self.rng.integers(n_available))
        if self.tree is None:
            return 0
        return _clip(int(classify(self.tree, self._features(state, request))), n_available)

    def feedback(self, state, action, success, next_state, request=None):
        if success:
            self.rows.append((self._features(state, request), action))

    def end_episode(self) -> None:
        if self.rows:
            self.tree = train_tree(LabeledDataset.from_rows(self.ATTRIBUTES, self.rows), self.cfg.max_depth)

    def snapshot(self):
        return {"kind": "tree", "training_rows": len(self.rows), "depth": self.tree.depth() if self.tree else 0}


def make_agent(cfg: AgentConfig, n_actions: int, rng: np.random.Generator) -> PathAgent | None:
    if cfg.kind == "none":
        return None
    cls = {
        "q_learning": QLearningAgent,
        "egreedy": EpsilonGreedyAgent,
        "ucb": UCBAgent,
        "tree": TreeAgent,
    }[cfg.kind]
    return cls(cfg, n_actions, rng)
