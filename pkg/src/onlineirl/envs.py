"""Benchmark environments: gridworld, objectworld and a home-cleaning grid.

All three share the same grid dynamics: four actions (up, down, left,
right), a configurable chance that a uniformly random action replaces the
chosen one, and bump-into-wall-stays-put borders.  States are indexed
row-major with row 0 at the bottom, so the upper-right corner is the last
state.

Each generator returns an :class:`EnvBundle`: the MDP, the ground-truth
reward table, a per-state feature matrix, and the set of reachable (free)
states.  ``generate_observations`` simulates an agent that acts greedily
against the true reward and emits the stream of (state, chosen action)
pairs the learner consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .learner import Observation
from .mdp import (
    TabularMDP,
    exact_value_iteration,
    greedy_policy,
    mdp_to_json,
    sample_next_state,
    validate_mdp,
)

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
MOVES = ((0, 1), (0, -1), (-1, 0), (1, 0))  # (dx, dy) per action
N_ACTIONS = 4

DEFAULT_DISCOUNT = 0.9
DEFAULT_NOISE = 0.3


@dataclass(frozen=True)
class GridSpec:
    """Square grid layout: side length, action noise, blocked cells."""

    width: int
    noise: float = DEFAULT_NOISE
    walls: frozenset = field(default_factory=frozenset)
    discount: float = DEFAULT_DISCOUNT

    def __post_init__(self):
        if self.width < 2:
            raise ValidationError("grid width must be at least 2")
        if not 0.0 <= self.noise <= 1.0:
            raise ValidationError("noise must lie in [0, 1]")
        object.__setattr__(self, "walls", frozenset(self.walls))
        for x, y in self.walls:
            if not (0 <= x < self.width and 0 <= y < self.width):
                raise ValidationError(f"wall cell {(x, y)} outside the grid")


@dataclass(frozen=True)
class ObjectworldSpec:
    """Grid with randomly placed two-colored objects driving the reward."""

    width: int
    n_objects: int = 2
    n_colors: int = 2
    seed: int = 0
    noise: float = DEFAULT_NOISE
    discount: float = DEFAULT_DISCOUNT

    def __post_init__(self):
        if self.width < 2:
            raise ValidationError("grid width must be at least 2")
        if self.n_objects < 1 or self.n_objects > self.width * self.width:
            raise ValidationError("n_objects must fit on the grid")
        if self.n_colors < 1:
            raise ValidationError("n_colors must be positive")


@dataclass(frozen=True)
class EnvBundle:
    """An environment ready for learning and evaluation."""

    name: str
    mdp: TabularMDP
    true_reward: np.ndarray
    features: np.ndarray
    free_states: np.ndarray

    def to_json(self) -> dict:
        doc = mdp_to_json(self.mdp)
        doc["name"] = self.name
        doc["true_reward"] = self.true_reward.tolist()
        doc["features"] = self.features.tolist()
        doc["free_states"] = self.free_states.tolist()
        return doc


def bundle_from_json(doc: dict) -> EnvBundle:
    from .mdp import mdp_from_json

    mdp = mdp_from_json(doc)
    return EnvBundle(
        name=doc.get("name", "custom"),
        mdp=mdp,
        true_reward=np.asarray(doc["true_reward"], dtype=np.float64),
        features=np.asarray(doc["features"], dtype=np.float64),
        free_states=np.asarray(
            doc.get("free_states", list(range(mdp.n_states))), dtype=np.int64
        ),
    )


def _state_index(x: int, y: int, n: int) -> int:
    return y * n + x


def _grid_transitions(n: int, noise: float, walls: frozenset) -> np.ndarray:
    """Dense transition tensor for the shared grid dynamics.

    The chosen action's move executes with probability 1 - noise + noise/4
    and each other move with noise/4.  Moves off the grid or into a wall
    leave the agent in place; wall cells themselves only self-loop.
    """
    n_states = n * n
    p = np.zeros((n_states, N_ACTIONS, n_states))
    for y in range(n):
        for x in range(n):
            s = _state_index(x, y, n)
            if (x, y) in walls:
                p[s, :, s] = 1.0
                continue
            destinations = []
            for dx, dy in MOVES:
                nx, ny = x + dx, y + dy
                blocked = not (0 <= nx < n and 0 <= ny < n) or (nx, ny) in walls
                destinations.append(s if blocked else _state_index(nx, ny, n))
            for a in range(N_ACTIONS):
                p[s, a, destinations[a]] += 1.0 - noise
                for dest in destinations:
                    p[s, a, dest] += noise / N_ACTIONS
    return p


def make_gridworld(spec: GridSpec) -> EnvBundle:
    """Corner-goal gridworld: reward 1 at the upper-right corner, 0 elsewhere.

    Features are the one-hot state indicators (an identity matrix), so a
    linear model can represent any reward table.
    """
    if spec.walls:
        raise ValidationError("gridworld takes no walls; use make_cleaning_home")
    n_states = spec.width * spec.width
    mdp = TabularMDP(
        n_states=n_states,
        n_actions=N_ACTIONS,
        transitions=_grid_transitions(spec.width, spec.noise, frozenset()),
        discount=spec.discount,
    )
    reward = np.zeros(n_states)
    reward[_state_index(spec.width - 1, spec.width - 1, spec.width)] = 1.0
    return EnvBundle(
        name="gridworld",
        mdp=validate_mdp(mdp),
        true_reward=reward,
        features=np.eye(n_states),
        free_states=np.arange(n_states),
    )


def make_objectworld(spec: ObjectworldSpec) -> EnvBundle:
    """Objectworld: reward driven by proximity to randomly placed objects.

    Each object carries an inner and an outer color from ``n_colors``
    choices.  A state earns +1 when it lies within 3 cells of an object with
    outer color 0 and within 2 cells of one with outer color 1, -1 when only
    the first condition holds, and 0 otherwise.  Distances are Chebyshev
    (king moves).  Features are, per color, the distance to the nearest
    object with that inner color and with that outer color (2 * n_colors
    columns), capped at the grid width when no such object exists.
    """
    n = spec.width
    n_states = n * n
    rng = np.random.default_rng(spec.seed)
    cells = rng.choice(n_states, size=spec.n_objects, replace=False)
    inner = rng.integers(0, spec.n_colors, size=spec.n_objects)
    outer = rng.integers(0, spec.n_colors, size=spec.n_objects)

    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    xs, ys = xs.ravel(), ys.ravel()  # state s sits at (xs[s], ys[s])

    def nearest(mask: np.ndarray) -> np.ndarray:
        """Chebyshev distance from every state to the nearest masked object."""
        if not np.any(mask):
            return np.full(n_states, float(n))
        ox, oy = xs[cells[mask]], ys[cells[mask]]
        d = np.maximum(
            np.abs(xs[:, None] - ox[None, :]), np.abs(ys[:, None] - oy[None, :])
        )
        return d.min(axis=1).astype(np.float64)

    features = np.empty((n_states, 2 * spec.n_colors))
    for c in range(spec.n_colors):
        features[:, 2 * c] = nearest(inner == c)
        features[:, 2 * c + 1] = nearest(outer == c)

    d_outer0 = nearest(outer == 0)
    d_outer1 = nearest(outer == 1) if spec.n_colors > 1 else np.full(n_states, float(n))
    reward = np.where(
        (d_outer0 <= 3) & (d_outer1 <= 2), 1.0, np.where(d_outer0 <= 3, -1.0, 0.0)
    )

    mdp = TabularMDP(
        n_states=n_states,
        n_actions=N_ACTIONS,
        transitions=_grid_transitions(n, spec.noise, frozenset()),
        discount=spec.discount,
    )
    return EnvBundle(
        name="objectworld",
        mdp=validate_mdp(mdp),
        true_reward=reward,
        features=features,
        free_states=np.arange(n_states),
    )


#: Default 16x16 home layout: '#' walls, '.' free space, digits mark
#: furniture hotspots whose weight is the digit value.  Row order is top to
#: bottom.  Any layout in this format can be passed to make_cleaning_home.
#: Hotspots are kept sparse so most of the floor is genuinely preference-free.
DEFAULT_HOME_MAP = """\
################
#......#.......#
#......#.......#
#..33..#.......#
#..33..#.......#
#......##.######
#..............#
#......#.......#
####.###.......#
#......#.......#
#......#.......#
#..2...#...33..#
#......#...33..#
#......#.......#
#......#.......#
################
"""


def parse_home_map(text: str) -> tuple[int, frozenset, dict]:
    """Parse a text layout into (width, walls, hotspot weights).

    Rows are given top to bottom; internally row 0 is the bottom of the
    grid.  Digits 1-9 mark free hotspot cells with that weight.
    """
    rows = [line for line in text.splitlines() if line]
    n = len(rows)
    if n < 2 or any(len(row) != n for row in rows):
        raise ValidationError("home map must be a square of at least 2x2 characters")
    walls, hotspots = set(), {}
    for top_row, line in enumerate(rows):
        y = n - 1 - top_row
        for x, ch in enumerate(line):
            if ch == "#":
                walls.add((x, y))
            elif ch == ".":
                continue
            elif ch.isdigit() and ch != "0":
                hotspots[(x, y)] = float(ch)
            else:
                raise ValidationError(f"unexpected map character {ch!r} at {(x, y)}")
    return n, frozenset(walls), hotspots


def make_cleaning_home(
    text_map: str = DEFAULT_HOME_MAP,
    noise: float = DEFAULT_NOISE,
    discount: float = DEFAULT_DISCOUNT,
    hotspot_radius: int = 0,
) -> EnvBundle:
    """Home grid with walls; reward encodes how much each spot is visited.

    Each hotspot of weight w contributes w * (R + 1 - d) / (R + 1) to every
    free cell within Chebyshev distance d <= R of it (R = ``hotspot_radius``),
    contributions add up, and the table is normalized to a max of 1.
    Raises when the free space is disconnected, listing the unreachable
    cells.  Features are one-hot state indicators.
    """
    n, walls, hotspots = parse_home_map(text_map)
    spec = GridSpec(width=n, noise=noise, walls=walls, discount=discount)
    n_states = n * n

    free = [(x, y) for y in range(n) for x in range(n) if (x, y) not in walls]
    if not free:
        raise ValidationError("home map has no free cells")
    _check_connected(free, walls, n)

    reward = np.zeros(n_states)
    for (hx, hy), weight in hotspots.items():
        if (hx, hy) in walls:
            raise ValidationError(f"hotspot {(hx, hy)} sits inside a wall")
        for x, y in free:
            d = max(abs(x - hx), abs(y - hy))
            if d <= hotspot_radius:
                reward[_state_index(x, y, n)] += weight * (hotspot_radius + 1 - d) / (
                    hotspot_radius + 1
                )
    if reward.max() > 0:
        reward /= reward.max()

    mdp = TabularMDP(
        n_states=n_states,
        n_actions=N_ACTIONS,
        transitions=_grid_transitions(n, spec.noise, walls),
        discount=spec.discount,
    )
    return EnvBundle(
        name="cleaning",
        mdp=validate_mdp(mdp),
        true_reward=reward,
        features=np.eye(n_states),
        free_states=np.array(sorted(_state_index(x, y, n) for x, y in free)),
    )


def _check_connected(free: list, walls: frozenset, n: int) -> None:
    """Breadth-first reachability over the free cells."""
    free_set = set(free)
    seen = {free[0]}
    queue = [free[0]]
    while queue:
        x, y = queue.pop()
        for dx, dy in MOVES:
            nxt = (x + dx, y + dy)
            if nxt in free_set and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    unreachable = sorted(free_set - seen)
    if unreachable:
        raise ValidationError(f"free space is disconnected; unreachable cells: {unreachable}")


def generate_observations(
    env: EnvBundle,
    count: int,
    teleport_every: int = 3,
    seed: int = 0,
    vi_threshold: float = 1e-8,
):
    """Yield ``count`` observations of a greedy agent on the true reward.

    The agent's policy is the greedy policy of the exact hard-max solve on
    ``env.true_reward``; the emitted action is the agent's *chosen* one, and
    transition noise resolves inside the MDP when the next state is drawn.
    Every ``teleport_every`` observations the agent is dropped on a uniform
    random free state, which keeps the stream exploring.
    """
    if count < 1 or teleport_every < 1:
        raise ValidationError("count and teleport_every must be positive")
    policy = greedy_policy(exact_value_iteration(env.mdp, env.true_reward, vi_threshold).q)
    rng = np.random.default_rng(seed)
    s = 0
    for t in range(count):
        if t % teleport_every == 0:
            s = int(env.free_states[rng.integers(len(env.free_states))])
        a = int(policy[s])
        yield Observation(s=s, a=a, t=t)
        s = sample_next_state(env.mdp, s, a, rng)


def make_env(name: str, **kwargs) -> EnvBundle:
    """Build a benchmark environment by name (CLI and config entry point)."""
    if name == "gridworld":
        spec = GridSpec(
            width=kwargs.get("width", 10),
            noise=kwargs.get("noise", DEFAULT_NOISE),
            discount=kwargs.get("discount", DEFAULT_DISCOUNT),
        )
        return make_gridworld(spec)
    if name == "objectworld":
        spec = ObjectworldSpec(
            width=kwargs.get("width", 10),
            n_objects=kwargs.get("n_objects", 2),
            n_colors=kwargs.get("n_colors", 2),
            seed=kwargs.get("env_seed", 0),
            noise=kwargs.get("noise", DEFAULT_NOISE),
            discount=kwargs.get("discount", DEFAULT_DISCOUNT),
        )
        return make_objectworld(spec)
    if name == "cleaning":
        return make_cleaning_home(
            text_map=kwargs.get("text_map", DEFAULT_HOME_MAP),
            noise=kwargs.get("noise", DEFAULT_NOISE),
            discount=kwargs.get("discount", DEFAULT_DISCOUNT),
            hotspot_radius=kwargs.get("hotspot_radius", 2),
        )
    raise ValidationError(f"unknown environment {name!r}")
