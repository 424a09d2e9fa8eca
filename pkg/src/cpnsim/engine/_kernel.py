"""Hot path of the engine: binding enumeration, firing, time advance.

This module is deliberately self-contained and written in plain Python:
the build compiles this exact file with Cython as
``cpnsim.engine._kernel_c`` and the engine picks whichever is available
(see ``core.py``).  Do not edit ``_kernel_c.py``; it is a generated
copy.

Determinism contract:

* transitions are visited in name order (the order ``Net`` stores them);
* candidate tokens of a ``Var`` arc are the distinct *values* with at
  least one ready token, visited in sorted order, so bindings are
  enumerated lexicographically over (transition, token values);
* firing consumes, per bound value, the ready token(s) with the
  smallest timestamps;
* ``step`` draws one choice index from the state RNG only when two or
  more bindings are enabled.
"""

from cpnsim.engine.types import (
    ARC_ALL,
    ARC_VAR,
    Binding,
    DeadMarking,
    FiringError,
    Fired,
    ModelStructureError,
    StepLimitExceeded,
    TimeAdvanced,
)

DEFAULT_STEP_LIMIT = 10_000_000

_MISSING = object()


def _ready_candidates(ms, now):
    """Distinct ready values in ``ms`` with their total ready counts."""
    ready = {}
    for tok, cnt in ms.items():
        if tok[1] <= now:
            v = tok[0]
            if v in ready:
                ready[v] += cnt
            else:
                ready[v] = cnt
    return ready


def _gather_all(ms, now):
    """All ready values (with multiplicity), sorted, plus their count."""
    vals = []
    total = 0
    for tok, cnt in ms.items():
        if tok[1] <= now:
            total += cnt
            v = tok[0]
            for _ in range(cnt):
                vals.append(v)
    vals.sort()
    return tuple(vals), total


def _expand(arcs, i, assign, used, reqs, guard, t_idx, all_reqs, out, find_any):
    """Depth-first product over Var arcs with availability bookkeeping.

    Returns True as soon as one binding is recorded when ``find_any``.
    """
    if i == len(arcs):
        if guard is not None and not guard(assign):
            return False
        merged = {}
        order = []
        for key in reqs:
            if key in merged:
                merged[key] += 1
            else:
                merged[key] = 1
                order.append(key)
        requirements = tuple(
            (pidx, ARC_VAR, value, merged[(pidx, value)]) for pidx, value in order
        ) + all_reqs
        out.append((t_idx, dict(assign), requirements))
        return find_any

    pidx, name, candidates = arcs[i]
    bound = assign.get(name, _MISSING)
    for value, avail in candidates:
        if bound is not _MISSING and value != bound:
            continue
        key = (pidx, value)
        taken = used.get(key, 0)
        if taken >= avail:
            continue
        used[key] = taken + 1
        fresh = bound is _MISSING
        if fresh:
            assign[name] = value
        reqs.append(key)
        hit = _expand(
            arcs, i + 1, assign, used, reqs, guard, t_idx, all_reqs, out, find_any
        )
        reqs.pop()
        if fresh:
            del assign[name]
        used[key] = taken
        if hit:
            return True
    return False


def _transition_bindings(net, store, counts, now, t_idx, out, find_any):
    """Append enabled bindings of one transition to ``out``."""
    t = net.transitions[t_idx]
    in_arcs = t.in_arcs

    for arc in in_arcs:
        pidx = arc[0]
        if arc[1] == ARC_ALL:
            if arc[3] >= 0 and counts[pidx] != arc[3]:
                return
        elif counts[pidx] == 0:
            return

    var_arcs = []
    all_reqs = []
    assign = {}
    for pidx, kind, name, require in in_arcs:
        if kind == ARC_ALL:
            values, total = _gather_all(store[pidx], now)
            if require >= 0 and total != require:
                return
            assign[name] = values
            all_reqs.append((pidx, ARC_ALL, values, total))
        else:
            candidates = _ready_candidates(store[pidx], now)
            if not candidates:
                return
            var_arcs.append((pidx, name, sorted(candidates.items())))

    _expand(
        var_arcs, 0, assign, {}, [], t.guard, t_idx, tuple(all_reqs), out, find_any
    )


def enumerate_bindings(net, store, counts, now):
    """Every enabled (transition index, assignment, requirements) triple."""
    out = []
    n = len(net.transitions)
    for t_idx in range(n):
        _transition_bindings(net, store, counts, now, t_idx, out, False)
    return out


def any_enabled(net, store, counts, now):
    out = []
    n = len(net.transitions)
    for t_idx in range(n):
        _transition_bindings(net, store, counts, now, t_idx, out, True)
        if out:
            return True
    return False


def _remove_value(ms, pidx, value, count, now, counts):
    """Remove ``count`` ready tokens of ``value``, oldest timestamps first."""
    ready = sorted(ts for (v, ts), c in ms.items() if v == value and ts <= now)
    assert len(ready) >= 1, "firing consumed a token that is not present"
    taken = 0
    for ts in ready:
        if taken == count:
            break
        tok = (value, ts)
        have = ms[tok]
        grab = have if have < count - taken else count - taken
        if grab == have:
            del ms[tok]
        else:
            ms[tok] = have - grab
        taken += grab
    assert taken == count, "not enough ready tokens for a bound value"
    counts[pidx] -= count


def _remove_all_ready(ms, pidx, expected, now, counts):
    """Remove every ready token; the population must match the binding."""
    removed = 0
    for tok in [tok for tok in ms if tok[1] <= now]:
        removed += ms.pop(tok)
    assert removed == expected, "ready population changed since enumeration"
    counts[pidx] -= removed


def apply_binding(net, state, t_idx, assign, requirements):
    """Fire without re-validation (caller guarantees enabledness)."""
    store = state.store
    counts = state.counts
    now = state.now
    t = net.transitions[t_idx]
    dirty = set()

    for pidx, kind, value, count in requirements:
        if kind == ARC_VAR:
            _remove_value(store[pidx], pidx, value, count, now, counts)
        else:
            _remove_all_ready(store[pidx], pidx, count, now, counts)
        dirty.add(pidx)

    checks = net.colour_checks
    for pidx, timed, expr, delay in t.out_arcs:
        value = expr(assign, state)
        if not checks[pidx](value):
            raise ModelStructureError(
                f"transition {t.name} produced {value!r}, outside the colour "
                f"set of place {net.places[pidx].name}"
            )
        if timed:
            d = delay(assign, state) if callable(delay) else delay
            if d < 0:
                raise ModelStructureError(
                    f"transition {t.name} produced a negative delay {d}"
                )
            tok = (value, now + d)
            if d == 0:
                dirty.add(pidx)
        else:
            tok = (value, 0)
            dirty.add(pidx)
        ms = store[pidx]
        if tok in ms:
            ms[tok] += 1
        else:
            ms[tok] = 1
        counts[pidx] += 1
    state.step_count += 1

    # Only places whose ready tokens changed can alter enabledness;
    # tokens produced with a future timestamp change nothing yet.
    cache = state.cache
    watchers = net.place_watchers
    for pidx in dirty:
        for w in watchers[pidx]:
            cache[w] = None


def next_enabled_time(net, store, counts, now):
    """Earliest t > now at which a binding is enabled, or -1 if none."""
    pending = set()
    for pidx in net.timed_places:
        for tok in store[pidx]:
            ts = tok[1]
            if ts > now:
                pending.add(ts)
    for t in sorted(pending):
        if any_enabled(net, store, counts, t):
            return t
    return -1


def _enumerate_cached(net, state):
    """Like enumerate_bindings but reusing per-transition memos.

    A memo stays valid until a firing changes one of the transition's
    input places or a time advance makes one of their pending tokens
    ready; rebuild order matches the stateless enumeration exactly.
    """
    cache = state.cache
    store = state.store
    counts = state.counts
    now = state.now
    out = []
    for t_idx in range(len(net.transitions)):
        memo = cache[t_idx]
        if memo is None:
            memo = []
            _transition_bindings(net, store, counts, now, t_idx, memo, False)
            cache[t_idx] = memo
        out.extend(memo)
    return out


def step(net, state):
    """Fire one randomly chosen enabled binding, or advance model time."""
    bindings = _enumerate_cached(net, state)
    if bindings:
        n = len(bindings)
        chosen = bindings[state.rng.pick(n)] if n > 1 else bindings[0]
        t_idx, assign, requirements = chosen
        apply_binding(net, state, t_idx, assign, requirements)
        return Fired(
            net.transitions[t_idx].name, Binding(assign, requirements), state.now
        )
    nxt = next_enabled_time(net, state.store, state.counts, state.now)
    if nxt < 0:
        return DeadMarking(state.now)
    previous = state.now
    state.now = nxt
    # Invalidate watchers of every place with tokens that just matured.
    cache = state.cache
    watchers = net.place_watchers
    store = state.store
    for pidx in net.timed_places:
        for _v, ts in store[pidx]:
            if previous < ts <= nxt:
                for w in watchers[pidx]:
                    cache[w] = None
                break
    return TimeAdvanced(previous, nxt)


def run(net, state, stop=None, hooks=(), max_steps=DEFAULT_STEP_LIMIT):
    """Step until ``stop(state, event)`` is true or the marking is dead.

    ``stop`` is consulted once before the first step with event ``None``
    (so a trivially-true predicate performs zero steps) and after every
    step.  Hooks observe every event, including the terminal one.
    """
    if stop is not None and stop(state, None):
        return state
    iterations = 0
    while True:
        iterations += 1
        if iterations > max_steps:
            raise StepLimitExceeded(max_steps)
        event = step(net, state)
        for hook in hooks:
            hook(state, event)
        if stop is not None and stop(state, event):
            return state
        if type(event) is DeadMarking:
            return state


def validate_binding(net, state, t_idx, assign, requirements):
    """Raise FiringError unless the binding is enabled right now."""
    t = net.transitions[t_idx]
    if t.guard is not None and not t.guard(assign):
        raise FiringError(f"guard of {t.name} rejects the binding {assign!r}")
    store = state.store
    now = state.now
    for pidx, kind, value, count in requirements:
        ms = store[pidx]
        if kind == ARC_VAR:
            have = 0
            for tok, cnt in ms.items():
                if tok[0] == value and tok[1] <= now:
                    have += cnt
            if have < count:
                raise FiringError(
                    f"firing {t.name}: needs {count} ready token(s) of "
                    f"{value!r} in {net.places[pidx].name}, found {have}"
                )
        else:
            ready, total = _gather_all(ms, now)
            if ready != value or total != count:
                raise FiringError(
                    f"firing {t.name}: ready population of "
                    f"{net.places[pidx].name} no longer matches the binding"
                )
