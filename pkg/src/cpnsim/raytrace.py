"""Timed CPN model of a demand-driven parallel raytracing cluster.

The cluster renders one scene at a time.  A master node (type 1) ships
the scene to every client node (type 2), cuts the output image into a
list of tiles, and hands tiles out on demand: whenever a node is free
and tiles remain, the next tile is assigned, raytraced, and sent back.
The master itself also renders, at a reduced performance share.  In the
``real`` scenario a client job can fail; the failure is noticed at the
next node-health check, the tile goes back into the work list, and the
failed node spends a long time recovering.  In the ``ideal`` scenario
all nodes are equal and nothing fails.

Places of the net:

- ``newScene``: complexity value of the next scene to render.
- ``nodesNo``: the configured cluster size (read, never changed).
- ``freeNodes``: one token per node currently free.
- ``scStartTime``: firing time of the current scene's ``sendScene``.
- ``preparedTiles``: the work list, a single list token (timed: it
  becomes available once scene distribution finishes).
- ``prepTile``: a tile just assigned to a node, not yet started.
- ``raytrTiles``: tiles being raytraced (timed by work + comm delay).
- ``unsrRaytrTiles``: failed tiles waiting for failure detection.
- ``computedTiles``: finished tiles.
- ``invalidNodes``: failed nodes waiting out their recovery delay.

Transitions: ``sendScene`` distributes the scene and builds the tile
list; ``selectTile`` assigns the head tile to a free node;
``sucRtrStart``/``unsucRtrStart`` start a successful/doomed raytrace;
``sendRtrTile`` returns a finished tile and frees its node;
``returnTile`` puts a failed tile back in the list and invalidates its
node; ``recoverNode`` brings a node back; ``completeScene`` fires once
every tile is computed and starts the next scene.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from cpnsim.engine import (
    All,
    INT_SET,
    Marking,
    Net,
    NetBuilder,
    OutputArc,
    SimState,
    Var,
    instance_set,
    list_set,
)
from cpnsim.stochastic import (
    RngStream,
    bernoulli,
    exponential_int,
    normal_int,
    uniform_int,
)

UNASSIGNED = 0
MASTER = 1
CLIENT = 2

IDEAL = "ideal"
REAL = "real"
SCENARIOS = (IDEAL, REAL)


class Tile(NamedTuple):
    """One rectangular image section rendered as a single job."""

    width: int
    height: int
    complexity: int
    will_succeed: bool
    node_type: int


class Node(NamedTuple):
    """A cluster node; only its type is observable."""

    node_type: int


@dataclass(frozen=True)
class SceneConfig:
    """Scene geometry plus its complexity, fixed or a uniform range."""

    width: int
    height: int
    tile_width: int
    tile_height: int
    complexity: int | tuple[int, int]

    def __post_init__(self):
        for field in ("width", "height", "tile_width", "tile_height"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")
        if self.tile_width > self.width or self.tile_height > self.height:
            raise ValueError("tile dimensions cannot exceed the scene")
        c = self.complexity
        if isinstance(c, tuple):
            if len(c) != 2 or not 0 <= c[0] <= c[1]:
                raise ValueError(f"bad complexity range {c!r}")
        elif c < 0:
            raise ValueError("complexity must be >= 0")

    @property
    def grid_cols(self) -> int:
        return math.ceil(self.width / self.tile_width)

    @property
    def grid_rows(self) -> int:
        return math.ceil(self.height / self.tile_height)

    @property
    def tile_count(self) -> int:
        return self.grid_cols * self.grid_rows

    @property
    def label(self) -> str:
        return f"{self.width}x{self.height}"

    def draw_complexity(self, rng: RngStream) -> int:
        """The configured complexity, drawing it if a range was given."""
        if isinstance(self.complexity, tuple):
            return uniform_int(rng, self.complexity[0], self.complexity[1])
        return self.complexity


@dataclass(frozen=True)
class ScenarioParams:
    """Cluster size, scenario switch, and every calibration constant."""

    node_count: int
    scenario: str
    master_perf: float = 0.7
    client_success_p: float = 0.9
    send_mean_ms: float = 20000
    send_var: float = 10000
    comm_mean_ms: float = 500
    chck_per_ms: int = 5000
    chck_max_mult: int = 6
    recovery_max_ms: int = 86_400_000
    work_ms_per_complexity: float = 50.0
    work_ms_per_kilopixel: float = 1.0
    scenes_per_run: int = 1

    def __post_init__(self):
        if self.node_count < 1:
            raise ValueError("node_count must be >= 1")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if not 0 < self.master_perf <= 1:
            raise ValueError("master_perf must be in (0, 1]")
        if not 0 <= self.client_success_p <= 1:
            raise ValueError("client_success_p must be a probability")
        for field in ("send_mean_ms", "send_var", "comm_mean_ms",
                      "work_ms_per_complexity", "work_ms_per_kilopixel"):
            if getattr(self, field) < 0:
                raise ValueError(f"{field} must be >= 0")
        for field in ("chck_per_ms", "chck_max_mult", "recovery_max_ms",
                      "scenes_per_run"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")


def tile_complexity(remaining_tiles: int, remaining_complexity: int,
                    rng: RngStream) -> int:
    """Complexity share of the next tile.

    The share is drawn around 0.8x the even split, with the last tile
    absorbing whatever remains, so iterating over a whole tile list
    conserves the scene complexity exactly.
    """
    if remaining_tiles < 0 or remaining_complexity < 0:
        raise ValueError("arguments must be non-negative")
    if remaining_tiles == 0:
        return 0
    if remaining_tiles == 1:
        return remaining_complexity
    if remaining_complexity == 0:
        return 0
    target = remaining_complexity / remaining_tiles
    share = normal_int(rng, target * 0.8, target * 0.7)
    return share if remaining_complexity > share else remaining_complexity


def make_tile_list(scene: SceneConfig, complexity: int,
                   rng: RngStream) -> tuple[Tile, ...]:
    """Cut the scene into a row-major grid of unassigned tiles.

    Interior tiles have the configured tile dimensions; the last row
    and column carry the remainders.  The scene complexity is spread
    over the tiles via :func:`tile_complexity` and sums back exactly.
    """
    cols, rows = scene.grid_cols, scene.grid_rows
    widths = [scene.tile_width] * (cols - 1)
    widths.append(scene.width - scene.tile_width * (cols - 1))
    heights = [scene.tile_height] * (rows - 1)
    heights.append(scene.height - scene.tile_height * (rows - 1))

    tiles = []
    remaining = cols * rows
    budget = complexity
    for h in heights:
        for w in widths:
            share = tile_complexity(remaining, budget, rng)
            tiles.append(Tile(w, h, share, True, UNASSIGNED))
            budget -= share
            remaining -= 1
    return tuple(tiles)


def assign_tile(tile: Tile, node: Node, params: ScenarioParams,
                rng: RngStream) -> Tile:
    """Bind a tile to a node and decide whether the attempt succeeds.

    The master never fails and the ideal scenario never fails; a client
    job in the real scenario succeeds with ``client_success_p``.
    """
    if node.node_type == MASTER or params.scenario == IDEAL:
        success = True
    else:
        success = bernoulli(rng, params.client_success_p)
    return tile._replace(will_succeed=success, node_type=node.node_type)


def raytrace_ms(tile: Tile, params: ScenarioParams) -> int:
    """Deterministic raytracing time of an assigned tile.

    Cost is linear in pixels and in complexity; in the real scenario
    the master contributes only ``master_perf`` of a full node.
    """
    if tile.node_type not in (MASTER, CLIENT):
        raise ValueError(f"tile not assigned to a node: {tile!r}")
    perf = 1.0
    if tile.node_type == MASTER and params.scenario == REAL:
        perf = params.master_perf
    work = (params.work_ms_per_kilopixel * tile.width * tile.height / 1000
            + params.work_ms_per_complexity * tile.complexity)
    return round(work / perf)


def comm_delay_ms(params: ScenarioParams, rng: RngStream) -> int:
    """Exponential delay for contacting the master and shipping a tile."""
    if params.comm_mean_ms == 0:
        return 0
    return exponential_int(rng, params.comm_mean_ms)


def failure_detect_ms(params: ScenarioParams, rng: RngStream) -> int:
    """Time until a dead node is noticed: a whole number of check periods."""
    return params.chck_per_ms * uniform_int(rng, 1, params.chck_max_mult)


def recovery_ms(params: ScenarioParams, rng: RngStream) -> int:
    """Node recovery time, uniform up to the configured bound."""
    return uniform_int(rng, 1, params.recovery_max_ms)


def _reset(tile: Tile) -> Tile:
    return tile._replace(will_succeed=True, node_type=UNASSIGNED)


def build_net(scene: SceneConfig, params: ScenarioParams,
              rng: RngStream) -> tuple[Net, Marking]:
    """The raytracing net plus its initial marking.

    The initial marking holds the first scene's complexity, the cluster
    size, one master and ``node_count - 1`` client nodes, and an empty
    work list; only ``sendScene`` is enabled at time 0.
    """
    tile_set = instance_set("TILE", Tile)
    node_set = instance_set("NODE", Node)
    tile_list_set = list_set("TILELIST", tile_set)

    b = NetBuilder()
    b.place("newScene", INT_SET)
    b.place("nodesNo", INT_SET)
    b.place("freeNodes", node_set)
    b.place("scStartTime", INT_SET)
    b.place("preparedTiles", tile_list_set, timed=True)
    b.place("prepTile", tile_set)
    b.place("raytrTiles", tile_set, timed=True)
    b.place("unsrRaytrTiles", tile_set, timed=True)
    b.place("computedTiles", tile_set)
    b.place("invalidNodes", node_set, timed=True)

    # Distribution of the scene is sequential over the client nodes, so
    # the work list only becomes available after (n - 1) transfers.
    b.transition(
        "sendScene",
        inputs=[("newScene", Var("cmpl")),
                ("nodesNo", Var("n_nodes")),
                ("preparedTiles", Var("prev"))],
        outputs=[
            OutputArc("nodesNo", lambda v, s: v["n_nodes"]),
            OutputArc("scStartTime", lambda v, s: s.now),
            OutputArc(
                "preparedTiles",
                lambda v, s: make_tile_list(scene, v["cmpl"], s.rng),
                delay=lambda v, s: (v["n_nodes"] - 1)
                * normal_int(s.rng, params.send_mean_ms, params.send_var),
            ),
        ],
    )

    b.transition(
        "selectTile",
        inputs=[("freeNodes", Var("node")),
                ("preparedTiles", Var("tiles"))],
        guard=lambda v: len(v["tiles"]) > 0,
        outputs=[
            OutputArc(
                "prepTile",
                lambda v, s: assign_tile(v["tiles"][0], v["node"], params, s.rng),
            ),
            OutputArc("preparedTiles", lambda v, s: v["tiles"][1:]),
        ],
    )

    b.transition(
        "sucRtrStart",
        inputs=[("prepTile", Var("tile"))],
        guard=lambda v: v["tile"].will_succeed,
        outputs=[
            OutputArc(
                "raytrTiles",
                lambda v, s: v["tile"],
                delay=lambda v, s: raytrace_ms(v["tile"], params)
                + comm_delay_ms(params, s.rng),
            ),
        ],
    )

    b.transition(
        "unsucRtrStart",
        inputs=[("prepTile", Var("tile"))],
        guard=lambda v: not v["tile"].will_succeed,
        outputs=[
            OutputArc(
                "unsrRaytrTiles",
                lambda v, s: v["tile"],
                delay=lambda v, s: failure_detect_ms(params, s.rng),
            ),
        ],
    )

    b.transition(
        "sendRtrTile",
        inputs=[("raytrTiles", Var("tile"))],
        outputs=[
            OutputArc("computedTiles", lambda v, s: v["tile"]),
            OutputArc("freeNodes", lambda v, s: Node(v["tile"].node_type)),
        ],
    )

    b.transition(
        "returnTile",
        inputs=[("unsrRaytrTiles", Var("tile")),
                ("preparedTiles", Var("tiles"))],
        outputs=[
            OutputArc(
                "preparedTiles",
                lambda v, s: v["tiles"] + (_reset(v["tile"]),),
            ),
            OutputArc(
                "invalidNodes",
                lambda v, s: Node(v["tile"].node_type),
                delay=lambda v, s: recovery_ms(params, s.rng),
            ),
        ],
    )

    b.transition(
        "recoverNode",
        inputs=[("invalidNodes", Var("node"))],
        outputs=[OutputArc("freeNodes", lambda v, s: v["node"])],
    )

    # The whole tile population must sit in computedTiles and the work
    # list must be empty; tile conservation then guarantees nothing is
    # still assigned, raytracing, or awaiting failure detection.
    b.transition(
        "completeScene",
        inputs=[("computedTiles", All("done", require=scene.tile_count)),
                ("preparedTiles", Var("tiles")),
                ("scStartTime", Var("started"))],
        guard=lambda v: v["tiles"] == (),
        outputs=[
            OutputArc("newScene", lambda v, s: scene.draw_complexity(s.rng)),
            OutputArc("preparedTiles", lambda v, s: v["tiles"]),
        ],
    )

    net = b.build()
    nodes = [Node(MASTER)] + [Node(CLIENT)] * (params.node_count - 1)
    marking = (
        Marking.empty(net)
        .add_tokens("newScene", [scene.draw_complexity(rng)])
        .add_tokens("nodesNo", [params.node_count])
        .add_tokens("freeNodes", nodes)
        .add_tokens("preparedTiles", [((), 0)])
    )
    return net, marking


def initial_state(scene: SceneConfig, params: ScenarioParams,
                  rng: RngStream) -> SimState:
    """Build the net and wrap it in a ready-to-run state."""
    net, marking = build_net(scene, params, rng)
    return SimState(net, marking, rng)
