"""Engine behavior: token game, timed semantics, runs, multiset laws."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from cpnsim.engine import (
    All,
    BOOL_SET,
    DeadMarking,
    Fired,
    FiringError,
    INT_SET,
    Marking,
    ModelStructureError,
    Multiset,
    NetBuilder,
    OutputArc,
    SimState,
    StepLimitExceeded,
    TimeAdvanced,
    UNIT,
    UNIT_SET,
    Var,
    add_tokens,
    advance_time,
    enabled_bindings,
    fire,
    run,
    step,
)
from cpnsim.stochastic import RngStream

from helpers import TraceHook, build_delay_net, build_guard_net, guard_net_marking


def state_of(net, marking, seed=1234, now=0):
    return SimState(net, marking, RngStream(seed), now=now)


# ---------------------------------------------------------------------------
# add_tokens
# ---------------------------------------------------------------------------

class TestAddTokens:
    def test_multiset_notation_counts(self, guard_net):
        marking = add_tokens(Marking.empty(guard_net), "p1", [1] + [2] * 7)
        assert marking.count("p1") == 8
        assert marking.tokens("p1") == [(1, None, 1), (2, None, 7)]

    def test_empty_addition_is_identity(self, guard_net):
        before = add_tokens(Marking.empty(guard_net), "p1", [3])
        after = add_tokens(before, "p2", [])
        assert after == before

    def test_repeated_addition_sums_counts(self, guard_net):
        marking = Marking.empty(guard_net)
        marking = add_tokens(marking, "p1", [4])
        marking = add_tokens(marking, "p1", [4])
        assert marking.tokens("p1") == [(4, None, 2)]

    def test_unknown_place_rejected(self, guard_net):
        with pytest.raises(ModelStructureError):
            add_tokens(Marking.empty(guard_net), "nope", [1])

    def test_colour_mismatch_rejected(self, guard_net):
        with pytest.raises(ModelStructureError):
            add_tokens(Marking.empty(guard_net), "p1", ["text"])

    def test_timestamp_on_untimed_place_rejected(self, guard_net):
        with pytest.raises(ModelStructureError):
            add_tokens(Marking.empty(guard_net), "p1", [(1, 5)])

    def test_value_semantics_leaves_original_untouched(self, guard_net):
        before = add_tokens(Marking.empty(guard_net), "p1", [1])
        add_tokens(before, "p1", [9])
        assert before.tokens("p1") == [(1, None, 1)]


# ---------------------------------------------------------------------------
# enabled_bindings
# ---------------------------------------------------------------------------

class TestEnabledBindings:
    def test_guard_filters_to_unique_binding(self, guard_net):
        marking = guard_net_marking(guard_net, [1] + [2] * 7, [1] * 4)
        state = state_of(guard_net, marking)
        found = enabled_bindings(guard_net, state)
        assert len(found) == 1
        name, binding = found[0]
        assert name == "tt"
        assert binding.assignment == {"x": 2, "y": 1}

    def test_empty_marking_nothing_enabled(self, guard_net):
        state = state_of(guard_net, Marking.empty(guard_net))
        assert enabled_bindings(guard_net, state) == []

    def test_guard_false_on_single_candidate(self, guard_net):
        marking = guard_net_marking(guard_net, [1], [1])
        state = state_of(guard_net, marking)
        assert enabled_bindings(guard_net, state) == []

    def test_bindings_are_value_level(self, guard_net):
        # Seven ready tokens of value 2 still give one binding for x=2.
        marking = guard_net_marking(guard_net, [2] * 7, [1] * 4)
        state = state_of(guard_net, marking)
        assert len(enabled_bindings(guard_net, state)) == 1

    def test_enumeration_order_is_sorted_by_value(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("out", INT_SET)
        b.transition("t", inputs=[("a", Var("x"))],
                     outputs=[OutputArc("out", lambda v, s: v["x"])])
        net = b.build()
        state = state_of(net, add_tokens(Marking.empty(net), "a", [3, 1, 2]))
        values = [bd.assignment["x"] for _, bd in enabled_bindings(net, state)]
        assert values == [1, 2, 3]

    def test_pending_tokens_are_not_ready(self):
        net, marking = build_delay_net(with_consumer=True)
        marking = marking.add_tokens("tp2", [(5, 40)])
        state = state_of(net, marking)
        names = [n for n, _ in enabled_bindings(net, state)]
        assert names == ["tt1"]  # the @40 token is still pending at 0


# ---------------------------------------------------------------------------
# fire
# ---------------------------------------------------------------------------

class TestFire:
    def test_fire_consumes_and_produces(self, guard_net):
        marking = guard_net_marking(guard_net, [1] + [2] * 7, [1] * 4)
        state = state_of(guard_net, marking)
        [(name, binding)] = enabled_bindings(guard_net, state)
        fire(guard_net, state, name, binding)
        assert state.tokens("p1") == [(1, None, 1), (2, None, 6)]
        assert state.tokens("p2") == [(1, None, 3)]
        assert state.tokens("p3") == [(3, None, 1)]
        assert state.step_count == 1

    def test_fire_applies_output_delay(self):
        net, marking = build_delay_net(with_consumer=False)
        state = state_of(net, marking)
        [(name, binding)] = enabled_bindings(net, state)
        fire(net, state, name, binding)
        assert state.tokens("tp2") == [(1, 10, 1)]
        assert state.now == 0

    def test_zero_delay_token_is_immediately_ready(self):
        net, marking = build_delay_net(with_consumer=True)
        state = state_of(net, Marking.empty(net).add_tokens("tp2", [(7, 0)]))
        [(name, binding)] = enabled_bindings(net, state)
        assert name == "tt2"
        fire(net, state, name, binding)
        assert state.tokens("tp3") == [(7, 0, 1)]

    def test_refiring_a_consumed_binding_rejected(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        [(name, binding)] = enabled_bindings(guard_net, state)
        fire(guard_net, state, name, binding)
        with pytest.raises(FiringError):
            fire(guard_net, state, name, binding)

    def test_unknown_transition_rejected(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        [(_, binding)] = enabled_bindings(guard_net, state)
        with pytest.raises(FiringError):
            fire(guard_net, state, "ghost", binding)

    def test_guard_rejecting_binding_raises(self, guard_net):
        marking = guard_net_marking(guard_net, [1], [1])
        state = state_of(guard_net, marking)
        ok = guard_net_marking(guard_net, [2], [1])
        good = enabled_bindings(guard_net, state_of(guard_net, ok))[0][1]
        bad = good._replace(assignment={"x": 1, "y": 1})
        with pytest.raises(FiringError):
            fire(guard_net, state, "tt", bad)

    def test_oldest_ready_token_consumed_first(self):
        b = NetBuilder()
        b.place("src", INT_SET, timed=True)
        b.place("dst", INT_SET)
        b.transition("t", inputs=[("src", Var("x"))],
                     outputs=[OutputArc("dst", lambda v, s: v["x"])])
        net = b.build()
        marking = Marking.empty(net).add_tokens("src", [(5, 3), (5, 7)])
        state = state_of(net, marking, now=10)
        [(name, binding)] = enabled_bindings(net, state)
        fire(net, state, name, binding)
        assert state.tokens("src") == [(5, 7, 1)]  # the @3 token went first

    def test_negative_runtime_delay_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET, timed=True)
        b.place("b", INT_SET, timed=True)
        b.transition("t", inputs=[("a", Var("x"))],
                     outputs=[OutputArc("b", lambda v, s: v["x"],
                                        delay=lambda v, s: -1)])
        net = b.build()
        state = state_of(net, Marking.empty(net).add_tokens("a", [(1, 0)]))
        [(name, binding)] = enabled_bindings(net, state)
        with pytest.raises(ModelStructureError):
            fire(net, state, name, binding)


# ---------------------------------------------------------------------------
# advance_time
# ---------------------------------------------------------------------------

class TestAdvanceTime:
    def test_advance_to_pending_token(self):
        net, marking = build_delay_net(with_consumer=True)
        state = state_of(net, marking)
        [(name, binding)] = enabled_bindings(net, state)
        fire(net, state, name, binding)
        assert enabled_bindings(net, state) == []
        assert advance_time(net, state) == 10
        assert state.now == 0  # advance_time reports, never mutates

    def test_empty_marking_is_dead(self, guard_net):
        state = state_of(guard_net, Marking.empty(guard_net))
        assert advance_time(guard_net, state) is None

    def test_skips_times_that_enable_nothing(self):
        # Tokens mature at 12 and 15-but only the @15 one passes the
        # guard, so the clock must jump straight to 15.
        b = NetBuilder()
        b.place("a", INT_SET, timed=True)
        b.place("out", INT_SET)
        b.transition("t", inputs=[("a", Var("x"))],
                     guard=lambda v: v["x"] == 1,
                     outputs=[OutputArc("out", lambda v, s: v["x"])])
        net = b.build()
        marking = Marking.empty(net).add_tokens("a", [(2, 12), (1, 15)])
        state = state_of(net, marking)
        assert advance_time(net, state) == 15

    def test_rejected_while_something_enabled(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        with pytest.raises(FiringError):
            advance_time(guard_net, state)


# ---------------------------------------------------------------------------
# step and run
# ---------------------------------------------------------------------------

class TestStepAndRun:
    def test_single_enabled_binding_fires(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        event = step(guard_net, state)
        assert type(event) is Fired
        assert event.transition == "tt"
        assert event.binding.assignment == {"x": 2, "y": 1}

    def test_step_advances_time_when_nothing_enabled(self):
        net, marking = build_delay_net(with_consumer=True)
        state = state_of(net, marking)
        step(net, state)  # fires tt1
        event = step(net, state)
        assert event == TimeAdvanced(0, 10)
        assert state.now == 10

    def test_step_reports_dead_marking(self, guard_net):
        state = state_of(guard_net, Marking.empty(guard_net))
        event = step(guard_net, state)
        assert type(event) is DeadMarking
        assert state.now == 0

    def test_choice_reproducible_for_fixed_seed(self, guard_net):
        marking = guard_net_marking(guard_net, [2, 3], [1] * 4)

        def trace(seed):
            state = state_of(guard_net, marking, seed=seed)
            hook = TraceHook()
            run(guard_net, state, hooks=[hook])
            return hook.events

        assert trace(99) == trace(99)

    def test_different_seeds_can_pick_differently(self, guard_net):
        marking = guard_net_marking(guard_net, [2, 3], [1] * 4)
        first = set()
        for seed in range(12):
            state = state_of(guard_net, marking, seed=seed)
            event = step(guard_net, state)
            first.add(event.binding.assignment["x"])
        assert first == {2, 3}

    def test_run_until_dead_exhausts_guard_net(self, guard_net):
        # p2 has four 1-tokens and p1 seven 2-tokens: x=2 beats y=1
        # four times, then p2 is empty and the net is dead.
        marking = guard_net_marking(guard_net, [1] + [2] * 7, [1] * 4)
        state = state_of(guard_net, marking)
        hook = TraceHook()
        run(guard_net, state, hooks=[hook])
        fired = [e for e in hook.events if e[0] == "Fired"]
        assert len(fired) == 4
        assert state.tokens("p2") == []
        assert hook.events[-1][0] == "DeadMarking"

    def test_trivially_true_stop_runs_zero_steps(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        run(guard_net, state, stop=lambda st, ev: True)
        assert state.step_count == 0

    def test_single_firing_then_dead_without_consumer(self):
        net, marking = build_delay_net(with_consumer=False)
        state = state_of(net, marking)
        hook = TraceHook()
        run(net, state, hooks=[hook])
        fired = [e for e in hook.events if e[0] == "Fired"]
        assert len(fired) == 1
        # The pending @10 token enables nothing, so time never advances.
        assert state.now == 0

    def test_consumer_chain_advances_then_finishes(self):
        net, marking = build_delay_net(with_consumer=True)
        state = state_of(net, marking)
        hook = TraceHook()
        run(net, state, hooks=[hook])
        assert hook.events == [
            ("Fired", "tt1", 0),
            ("TimeAdvanced", None, 10),
            ("Fired", "tt2", 10),
            ("DeadMarking", None, 10),
        ]

    def test_step_limit_raises(self):
        b = NetBuilder()
        b.place("a", UNIT_SET)
        b.transition("loop", inputs=[("a", Var("x"))],
                     outputs=[OutputArc("a", lambda v, s: v["x"])])
        net = b.build()
        state = state_of(net, Marking.empty(net).add_tokens("a", [UNIT]))
        with pytest.raises(StepLimitExceeded):
            run(net, state, max_steps=50)

    def test_hooks_see_every_event(self, guard_net):
        marking = guard_net_marking(guard_net, [2], [1])
        state = state_of(guard_net, marking)
        h1, h2 = TraceHook(), TraceHook()
        run(guard_net, state, hooks=[h1, h2])
        assert h1.events == h2.events
        assert len(h1.events) == 2  # one firing, then dead

    def test_time_is_monotone_over_run(self):
        net, marking = build_delay_net(with_consumer=True)
        state = state_of(net, marking)
        times = []
        run(net, state, hooks=[lambda st, ev: times.append(st.now)])
        assert times == sorted(times)


# ---------------------------------------------------------------------------
# aggregate (All) input arcs
# ---------------------------------------------------------------------------

class TestAllArc:
    @staticmethod
    def collector_net(require):
        b = NetBuilder()
        b.place("pool", INT_SET)
        b.place("out", INT_SET)
        b.transition(
            "collect",
            inputs=[("pool", All("xs", require=require))],
            outputs=[OutputArc("out", lambda v, s: sum(v["xs"]))],
        )
        return b.build()

    def test_binds_whole_population_with_multiplicity(self):
        net = self.collector_net(require=-1)
        state = state_of(net, add_tokens(Marking.empty(net), "pool", [2, 1, 2]))
        [(_, binding)] = enabled_bindings(net, state)
        assert binding.assignment["xs"] == (1, 2, 2)
        fire(net, state, "collect", binding)
        assert state.tokens("pool") == []
        assert state.tokens("out") == [(5, None, 1)]

    def test_exact_count_gate(self):
        net = self.collector_net(require=3)
        marking = add_tokens(Marking.empty(net), "pool", [1, 2])
        state = state_of(net, marking)
        assert enabled_bindings(net, state) == []
        state = state_of(net, add_tokens(marking, "pool", [3]))
        [(_, binding)] = enabled_bindings(net, state)
        assert binding.assignment["xs"] == (1, 2, 3)

    def test_require_on_timed_place_rejected(self):
        b = NetBuilder()
        b.place("pool", INT_SET, timed=True)
        b.place("out", INT_SET)
        b.transition("collect", inputs=[("pool", All("xs", require=1))],
                     outputs=[OutputArc("out", lambda v, s: 0)])
        with pytest.raises(ModelStructureError):
            b.build()

    def test_empty_population_without_require_is_enabled(self):
        net = self.collector_net(require=-1)
        state = state_of(net, Marking.empty(net))
        [(_, binding)] = enabled_bindings(net, state)
        assert binding.assignment["xs"] == ()


# ---------------------------------------------------------------------------
# structural validation
# ---------------------------------------------------------------------------

class TestNetValidation:
    def test_duplicate_place_names_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("a", INT_SET)
        with pytest.raises(ModelStructureError):
            b.build()

    def test_duplicate_transition_names_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.transition("t", inputs=[("a", Var("x"))], outputs=[])
        b.transition("t", inputs=[("a", Var("x"))], outputs=[])
        with pytest.raises(ModelStructureError):
            b.build()

    def test_unknown_place_in_arc_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.transition("t", inputs=[("ghost", Var("x"))], outputs=[])
        with pytest.raises(ModelStructureError):
            b.build()

    def test_constant_delay_to_untimed_place_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("b", INT_SET)
        b.transition("t", inputs=[("a", Var("x"))],
                     outputs=[OutputArc("b", lambda v, s: v["x"], delay=5)])
        with pytest.raises(ModelStructureError):
            b.build()

    def test_produced_value_outside_colour_set_rejected(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("flag", BOOL_SET)
        b.transition("t", inputs=[("a", Var("x"))],
                     outputs=[OutputArc("flag", lambda v, s: v["x"])])
        net = b.build()
        state = state_of(net, add_tokens(Marking.empty(net), "a", [1]))
        [(name, binding)] = enabled_bindings(net, state)
        with pytest.raises(ModelStructureError):
            fire(net, state, name, binding)

    def test_same_variable_on_two_places_must_unify(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("b", INT_SET)
        b.place("out", INT_SET)
        b.transition("t", inputs=[("a", Var("x")), ("b", Var("x"))],
                     outputs=[OutputArc("out", lambda v, s: v["x"])])
        net = b.build()
        marking = add_tokens(Marking.empty(net), "a", [1, 2])
        state = state_of(net, add_tokens(marking, "b", [2, 3]))
        found = enabled_bindings(net, state)
        assert [bd.assignment["x"] for _, bd in found] == [2]

    def test_two_variables_same_place_need_distinct_tokens(self):
        b = NetBuilder()
        b.place("a", INT_SET)
        b.place("out", INT_SET)
        b.transition("t", inputs=[("a", Var("x")), ("a", Var("y"))],
                     outputs=[OutputArc("out", lambda v, s: 0)])
        net = b.build()
        # A single token cannot satisfy both variables.
        state = state_of(net, add_tokens(Marking.empty(net), "a", [5]))
        assert enabled_bindings(net, state) == []
        # Two tokens of one value can (x = y = 5 uses two tokens).
        state = state_of(net, add_tokens(Marking.empty(net), "a", [5, 5]))
        assignments = [bd.assignment for _, bd in enabled_bindings(net, state)]
        assert {"x": 5, "y": 5} in assignments


# ---------------------------------------------------------------------------
# multiset laws
# ---------------------------------------------------------------------------

token_lists = st.lists(st.integers(min_value=-50, max_value=50), max_size=30)


class TestMultisetLaws:
    @given(tokens=token_lists)
    def test_add_then_remove_is_identity(self, tokens):
        ms = Multiset()
        for t in tokens:
            ms.add((t, 0))
        snapshot = dict(ms)
        ms.add((99, 0), 3)
        ms.remove((99, 0), 3)
        assert dict(ms) == snapshot

    @given(tokens=token_lists)
    def test_counts_stay_positive(self, tokens):
        ms = Multiset()
        for t in tokens:
            ms.add((t, 0))
        assert all(c > 0 for c in ms.values())
        assert ms.total() == len(tokens)

    def test_removing_more_than_present_rejected(self):
        ms = Multiset()
        ms.add((1, 0), 2)
        with pytest.raises(ValueError):
            ms.remove((1, 0), 3)

    @given(tokens=token_lists)
    def test_marking_equality_is_value_based(self, tokens):
        net = build_guard_net()
        a = add_tokens(Marking.empty(net), "p1", tokens)
        b = add_tokens(Marking.empty(net), "p1", list(reversed(tokens)))
        assert a == b
