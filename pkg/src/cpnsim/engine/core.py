"""Public engine API over the selected kernel.

The kernel (binding enumeration, firing, time advance) exists twice:
``_kernel`` is the interpreted module and ``_kernel_c`` a Cython build
of the same source.  The compiled one is preferred when importable;
set ``CPNSIM_PURE_KERNEL=1`` to force the interpreted path (useful for
debugging and benchmarking).
"""

from __future__ import annotations

import os

from cpnsim.engine import _kernel as _pure_kernel
from cpnsim.engine.types import (
    Binding,
    DeadMarking,
    FiringError,
    Marking,
    Net,
    SimState,
    StepEvent,
)


def _load_kernel():
    if os.environ.get("CPNSIM_PURE_KERNEL", "0") not in ("", "0"):
        return _pure_kernel
    try:
        from cpnsim.engine import _kernel_c
    except ImportError:
        return _pure_kernel
    return _kernel_c


_kernel = _load_kernel()

DEFAULT_STEP_LIMIT = _pure_kernel.DEFAULT_STEP_LIMIT


def kernel_name() -> str:
    """'compiled' when the C extension is active, else 'pure'."""
    fname = getattr(_kernel, "__file__", "") or ""
    return "compiled" if fname.endswith((".so", ".pyd")) else "pure"


def add_tokens(marking: Marking, place: str, tokens) -> Marking:
    """New marking with ``tokens`` added to ``place``.

    Tokens are bare values for untimed places, ``(value, timestamp)``
    pairs for timed ones; pass a mapping token -> count or an iterable.
    """
    return marking.add_tokens(place, tokens)


def enabled_bindings(net: Net, state: SimState) -> list[tuple[str, Binding]]:
    """Every enabled (transition name, binding), in enumeration order."""
    raw = _kernel.enumerate_bindings(net, state.store, state.counts, state.now)
    return [
        (net.transitions[t_idx].name, Binding(assign, reqs))
        for t_idx, assign, reqs in raw
    ]


def fire(net: Net, state: SimState, transition: str, binding: Binding) -> SimState:
    """Fire a binding previously obtained from :func:`enabled_bindings`.

    Validates that the binding is still enabled and raises
    :class:`FiringError` otherwise.  Mutates and returns ``state``.
    """
    try:
        t_idx = net.transition_index[transition]
    except KeyError:
        raise FiringError(f"unknown transition {transition}") from None
    _kernel.validate_binding(
        net, state, t_idx, binding.assignment, binding.requirements
    )
    _kernel.apply_binding(
        net, state, t_idx, binding.assignment, binding.requirements
    )
    return state


def advance_time(net: Net, state: SimState) -> int | None:
    """Earliest future time with an enabled binding, or None if dead.

    Only meaningful when nothing is enabled at ``state.now``; calling it
    while a binding is enabled raises :class:`FiringError`.  The state's
    clock is not modified; use :func:`step` to actually advance.
    """
    if _kernel.any_enabled(net, state.store, state.counts, state.now):
        raise FiringError("advance_time called while a binding is enabled")
    nxt = _kernel.next_enabled_time(net, state.store, state.counts, state.now)
    return None if nxt < 0 else nxt


def step(net: Net, state: SimState) -> StepEvent:
    """Fire one enabled binding (uniform choice) or advance model time.

    Returns the resulting :class:`Fired`, :class:`TimeAdvanced` or
    :class:`DeadMarking` event.
    """
    return _kernel.step(net, state)


def run(
    net: Net,
    state: SimState,
    stop=None,
    hooks=(),
    max_steps: int = DEFAULT_STEP_LIMIT,
) -> SimState:
    """Drive ``step`` until ``stop(state, event)`` or a dead marking.

    Hooks are called after every step with ``(state, event)``.  Raises
    :class:`StepLimitExceeded` after ``max_steps`` steps as a guard
    against runaway models.
    """
    return _kernel.run(net, state, stop, tuple(hooks), max_steps)
