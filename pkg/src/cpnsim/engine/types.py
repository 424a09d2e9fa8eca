"""Structural types for the timed coloured-Petri-net engine.

A net is a bipartite graph of places and transitions.  Places hold
multisets of typed tokens; timed places additionally stamp each token
with the earliest model time (integer milliseconds) at which it may be
consumed.  Transitions remove tokens along input arcs, subject to a
guard over the bound variables, and produce tokens along output arcs
whose expressions may draw from the run's random stream.

Everything here is plain data.  The hot operations (binding
enumeration, firing, time advancement) live in ``_kernel.py`` so they
can be compiled; see ``core.py`` for the public functional API.

Internally every token is a ``(value, timestamp)`` pair; untimed places
use timestamp 0, which is always ready.  Public accessors report
``None`` timestamps for untimed places.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, NamedTuple


class EngineError(Exception):
    """Base for all engine-raised errors."""


class ModelStructureError(EngineError):
    """The net or a marking is malformed (construction-time bug)."""


class FiringError(EngineError):
    """A client asked the engine to do something the marking forbids."""


class StepLimitExceeded(EngineError):
    """A run exceeded its step ceiling; the model is likely divergent."""

    def __init__(self, steps: int):
        super().__init__(f"run exceeded the step ceiling of {steps} steps")
        self.steps = steps


# ---------------------------------------------------------------------------
# Token values and colour sets
# ---------------------------------------------------------------------------

class Unit:
    """The single value of the unit colour set."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "()"

    def __eq__(self, other):
        return isinstance(other, Unit)

    def __lt__(self, other):  # total order with a single element
        return False

    def __hash__(self):
        return 0


UNIT = Unit()


@dataclass(frozen=True)
class ColourSet:
    """A named token type: a membership predicate over values.

    Token values must be hashable, and mutually orderable within one
    place (the engine sorts candidate tokens for deterministic binding
    enumeration).  ``contains`` is the exact membership test, applied
    wherever tokens enter from outside the net (add_tokens).  ``quick``
    is an O(1) spot check applied to every token a firing produces; for
    scalar sets it equals ``contains``, for container sets it only
    checks the container shape so firing cost stays independent of the
    value size.
    """

    name: str
    contains: Callable[[Any], bool]
    quick: Callable[[Any], bool] | None = None

    def __post_init__(self):
        if self.quick is None:
            object.__setattr__(self, "quick", self.contains)

    def __repr__(self):
        return f"ColourSet({self.name})"


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


UNIT_SET = ColourSet("UNIT", lambda v: isinstance(v, Unit))
INT_SET = ColourSet("INT", _is_int)
BOOL_SET = ColourSet("BOOL", lambda v: isinstance(v, bool))


def instance_set(name: str, cls: type) -> ColourSet:
    """Colour set of all instances of a (hashable, orderable) class."""
    return ColourSet(name, lambda v: isinstance(v, cls))


def list_set(name: str, element: ColourSet) -> ColourSet:
    """Colour set of tuples whose elements all belong to ``element``.

    Lists are represented as tuples so tokens stay hashable.  The
    per-firing spot check only verifies the tuple shape and the first
    element, keeping firing cost independent of the list length.
    """
    return ColourSet(
        name,
        lambda v: isinstance(v, tuple) and all(element.contains(e) for e in v),
        lambda v: isinstance(v, tuple) and (not v or element.contains(v[0])),
    )


# ---------------------------------------------------------------------------
# Net structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Place:
    name: str
    colour: ColourSet
    timed: bool = False


class Var(NamedTuple):
    """Input-arc pattern binding one token's value to a variable.

    When several ready tokens share the same value, firing consumes the
    one with the smallest timestamp.  The same variable may appear on
    several arcs of one transition; all occurrences must bind equal
    values backed by distinct tokens.
    """

    name: str


class All(NamedTuple):
    """Input-arc pattern binding every ready token in the place.

    The variable receives a sorted tuple of the ready token values
    (with multiplicity), and firing consumes all of them.  When
    ``require`` is non-negative, the arc only matches if the place's
    total token count equals it and all those tokens are ready - the
    cheap way to express "wait for the whole population".
    """

    name: str
    require: int = -1


InputPattern = Var | All


@dataclass(frozen=True)
class OutputArc:
    """Produces one token per firing.

    ``expr(binding, state)`` yields the token value; ``delay`` is either
    an int or ``delay(binding, state)`` yielding milliseconds.  The
    produced token's timestamp is ``state.now + delay`` on timed places;
    untimed target places require delay 0.  All randomness must live in
    ``expr``/``delay`` (via ``state.rng``), never in guards.
    """

    place: str
    expr: Callable[[dict, "SimState"], Any]
    delay: int | Callable[[dict, "SimState"], int] = 0


@dataclass(frozen=True)
class TransitionSpec:
    """Declared transition: guard plus input patterns and output arcs."""

    name: str
    inputs: tuple[tuple[str, InputPattern], ...]
    outputs: tuple[OutputArc, ...]
    guard: Callable[[dict], bool] | None = None


# Arc-kind tags used by the kernel.
ARC_VAR = 0
ARC_ALL = 1


class _CompiledTransition(NamedTuple):
    """Flattened transition record the kernel iterates over."""

    name: str
    guard: Callable[[dict], bool] | None
    # (place_idx, kind, var_name, require)
    in_arcs: tuple[tuple[int, int, str, int], ...]
    # (place_idx, timed, expr, delay)
    out_arcs: tuple[tuple[int, bool, Callable, Any], ...]


class Net:
    """Immutable net structure; build via :class:`NetBuilder`.

    Transitions are stored sorted by name, and binding enumeration
    visits them in that order, so event traces are reproducible.
    """

    def __init__(self, places: list[Place], transitions: list[TransitionSpec]):
        self.places: tuple[Place, ...] = tuple(places)
        self.place_index: dict[str, int] = {p.name: i for i, p in enumerate(places)}
        if len(self.place_index) != len(places):
            raise ModelStructureError("duplicate place names")
        self.timed_places: tuple[int, ...] = tuple(
            i for i, p in enumerate(places) if p.timed
        )
        self.colour_checks: tuple[Callable[[Any], bool], ...] = tuple(
            p.colour.quick for p in places
        )

        specs = sorted(transitions, key=lambda t: t.name)
        if len({t.name for t in specs}) != len(specs):
            raise ModelStructureError("duplicate transition names")
        self.transitions: tuple[_CompiledTransition, ...] = tuple(
            self._compile(t) for t in specs
        )
        self.transition_index: dict[str, int] = {
            t.name: i for i, t in enumerate(self.transitions)
        }
        # For every place, the transitions whose enabledness can change
        # when that place's ready tokens change (its input watchers).
        watchers: list[list[int]] = [[] for _ in places]
        for t_idx, t in enumerate(self.transitions):
            for pidx, _kind, _name, _require in t.in_arcs:
                if t_idx not in watchers[pidx]:
                    watchers[pidx].append(t_idx)
        self.place_watchers: tuple[tuple[int, ...], ...] = tuple(
            tuple(w) for w in watchers
        )

    def _compile(self, spec: TransitionSpec) -> _CompiledTransition:
        in_arcs = []
        seen_places: dict[int, int] = {}
        for place_name, pattern in spec.inputs:
            idx = self._place_idx(spec.name, place_name)
            if isinstance(pattern, Var):
                kind, require = ARC_VAR, -1
            elif isinstance(pattern, All):
                kind, require = ARC_ALL, pattern.require
            else:
                raise ModelStructureError(
                    f"transition {spec.name}: unknown input pattern {pattern!r}"
                )
            prev = seen_places.get(idx)
            if prev == ARC_ALL or (prev is not None and kind == ARC_ALL):
                raise ModelStructureError(
                    f"transition {spec.name}: an All arc cannot share place "
                    f"{place_name} with another input arc"
                )
            # An exact-count All arc is only well-defined where every
            # token is always ready; on a timed place the ready count
            # depends on the clock and the cheap count prefilter lies.
            if kind == ARC_ALL and require >= 0 and self.places[idx].timed:
                raise ModelStructureError(
                    f"transition {spec.name}: All(require=...) needs the "
                    f"untimed place, {place_name} is timed"
                )
            seen_places[idx] = kind
            in_arcs.append((idx, kind, pattern.name, require))
        names = [a[2] for a in in_arcs]
        for arc in in_arcs:
            if arc[1] == ARC_ALL and names.count(arc[2]) > 1:
                raise ModelStructureError(
                    f"transition {spec.name}: variable {arc[2]} cannot mix "
                    "All and Var arcs"
                )

        out_arcs = []
        for arc in spec.outputs:
            idx = self._place_idx(spec.name, arc.place)
            timed = self.places[idx].timed
            if not timed and arc.delay != 0 and not callable(arc.delay):
                raise ModelStructureError(
                    f"transition {spec.name}: delay on untimed place {arc.place}"
                )
            out_arcs.append((idx, timed, arc.expr, arc.delay))

        return _CompiledTransition(
            spec.name, spec.guard, tuple(in_arcs), tuple(out_arcs)
        )

    def _place_idx(self, tname: str, pname: str) -> int:
        try:
            return self.place_index[pname]
        except KeyError:
            raise ModelStructureError(
                f"transition {tname} references unknown place {pname}"
            ) from None

    def place(self, name: str) -> Place:
        return self.places[self.place_index[name]]

    @property
    def transition_names(self) -> list[str]:
        return [t.name for t in self.transitions]

    def __repr__(self):
        return (
            f"Net({len(self.places)} places, {len(self.transitions)} transitions)"
        )


class NetBuilder:
    """Incremental net construction; ``build()`` freezes the structure."""

    def __init__(self):
        self._places: list[Place] = []
        self._transitions: list[TransitionSpec] = []

    def place(self, name: str, colour: ColourSet, timed: bool = False) -> "NetBuilder":
        self._places.append(Place(name, colour, timed))
        return self

    def transition(
        self,
        name: str,
        inputs: Iterable[tuple[str, InputPattern]],
        outputs: Iterable[OutputArc],
        guard: Callable[[dict], bool] | None = None,
    ) -> "NetBuilder":
        self._transitions.append(
            TransitionSpec(name, tuple(inputs), tuple(outputs), guard)
        )
        return self

    def build(self) -> Net:
        return Net(self._places, self._transitions)


# ---------------------------------------------------------------------------
# Markings
# ---------------------------------------------------------------------------

class Multiset(dict):
    """Token multiset: maps ``(value, timestamp)`` to a positive count."""

    def add(self, token, count: int = 1):
        if count <= 0:
            raise ValueError("count must be positive")
        self[token] = self.get(token, 0) + count

    def remove(self, token, count: int = 1):
        have = self.get(token, 0)
        if have < count:
            raise ValueError(f"cannot remove {count} of {token!r}; have {have}")
        if have == count:
            del self[token]
        else:
            self[token] = have - count

    def total(self) -> int:
        return sum(self.values())


def _normalize_tokens(place: Place, tokens) -> Iterable[tuple[Any, int, int]]:
    """Yield (value, timestamp, count) triples from user-supplied tokens.

    For timed places each token must be a ``(value, timestamp)`` pair;
    for untimed places, a bare value.  ``tokens`` is either a mapping
    token -> count or an iterable of tokens (counted with multiplicity).
    """
    if isinstance(tokens, dict):
        items = tokens.items()
    else:
        items = ((t, 1) for t in tokens)
    for tok, count in items:
        if place.timed:
            if not (isinstance(tok, tuple) and len(tok) == 2 and _is_int(tok[1])):
                raise ModelStructureError(
                    f"place {place.name} is timed; tokens must be "
                    f"(value, timestamp) pairs, got {tok!r}"
                )
            value, ts = tok
            if ts < 0:
                raise ModelStructureError(
                    f"negative timestamp {ts} on place {place.name}"
                )
        else:
            value, ts = tok, 0
        if not place.colour.contains(value):
            raise ModelStructureError(
                f"value {value!r} is not in colour set {place.colour.name} "
                f"of place {place.name}"
            )
        yield value, ts, count


class Marking:
    """Assignment of a token multiset to every place of a net.

    Value semantics: ``add_tokens`` returns a new marking and never
    aliases mutable state with the original.
    """

    def __init__(self, net: Net, store: list[Multiset] | None = None):
        self.net = net
        if store is None:
            store = [Multiset() for _ in net.places]
        self._store = store

    @classmethod
    def empty(cls, net: Net) -> "Marking":
        return cls(net)

    def _copy_store(self) -> list[Multiset]:
        return [Multiset(ms) for ms in self._store]

    def add_tokens(self, place: str, tokens) -> "Marking":
        """Return a new marking with ``tokens`` added to ``place``."""
        try:
            idx = self.net.place_index[place]
        except KeyError:
            raise ModelStructureError(f"unknown place {place}") from None
        store = self._copy_store()
        for value, ts, count in _normalize_tokens(self.net.places[idx], tokens):
            if count <= 0:
                raise ModelStructureError(f"non-positive token count {count}")
            store[idx].add((value, ts), count)
        return Marking(self.net, store)

    def multiset(self, place: str) -> Multiset:
        """Copy of the multiset at ``place`` (internal token form)."""
        return Multiset(self._store[self.net.place_index[place]])

    def count(self, place: str) -> int:
        return self._store[self.net.place_index[place]].total()

    def tokens(self, place: str) -> list[tuple[Any, int | None, int]]:
        """Sorted ``(value, timestamp, count)`` list; timestamp None if untimed."""
        idx = self.net.place_index[place]
        timed = self.net.places[idx].timed
        out = []
        for (value, ts), count in sorted(self._store[idx].items()):
            out.append((value, ts if timed else None, count))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Marking)
            and other.net is self.net
            and other._store == self._store
        )

    def __repr__(self):
        parts = []
        for place, ms in zip(self.net.places, self._store):
            if ms:
                terms = "++".join(
                    f"{c}`{v!r}" + (f"@{ts}" if place.timed else "")
                    for (v, ts), c in sorted(ms.items())
                )
                parts.append(f"{place.name}: {terms}")
        return "Marking(" + "; ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Simulation state and events
# ---------------------------------------------------------------------------

class Binding(NamedTuple):
    """An enabled variable assignment plus the tokens it would consume.

    ``requirements`` holds ``(place_idx, kind, value, count)`` records;
    for an ``All`` arc the value is the bound tuple and the count its
    length.
    """

    assignment: dict
    requirements: tuple


class Fired(NamedTuple):
    transition: str
    binding: Binding
    time: int


class TimeAdvanced(NamedTuple):
    previous: int
    time: int


class DeadMarking(NamedTuple):
    time: int


StepEvent = Fired | TimeAdvanced | DeadMarking


class SimState:
    """Mutable state of one run: marking, clock, RNG, firing count.

    A state is owned by exactly one run; the engine mutates it in place.
    Arc expressions receive the state and may read ``now`` and draw from
    ``rng``.
    """

    __slots__ = ("net", "store", "counts", "now", "rng", "step_count", "cache")

    def __init__(self, net: Net, marking: Marking, rng, now: int = 0):
        if marking.net is not net:
            raise ModelStructureError("marking belongs to a different net")
        if now < 0:
            raise ModelStructureError("model time must be non-negative")
        self.net = net
        self.store: list[dict] = marking._copy_store()
        self.counts: list[int] = [ms.total() for ms in self.store]
        self.now: int = now
        self.rng = rng
        self.step_count: int = 0
        # Per-transition memo of enabled bindings; None means stale.
        # Maintained by the kernel, keyed to (store, now) mutations, so
        # states must only be mutated through the engine API.
        self.cache: list = [None] * len(net.transitions)

    def marking(self) -> Marking:
        """Snapshot of the current marking (copies token stores)."""
        return Marking(self.net, [Multiset(ms) for ms in self.store])

    def count(self, place: str) -> int:
        return self.counts[self.net.place_index[place]]

    def multiset(self, place: str) -> dict:
        """Direct reference to the internal multiset; treat as read-only."""
        return self.store[self.net.place_index[place]]

    def tokens(self, place: str) -> list[tuple[Any, int | None, int]]:
        idx = self.net.place_index[place]
        timed = self.net.places[idx].timed
        return [
            (v, ts if timed else None, c)
            for (v, ts), c in sorted(self.store[idx].items())
        ]

    def __repr__(self):
        return (
            f"SimState(now={self.now}, steps={self.step_count}, "
            f"tokens={sum(self.counts)})"
        )
