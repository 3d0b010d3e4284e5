import random

import pytest

from fdmflow.hwsynth import Controller, HwSynthError, all_pipelined, \
    delay_correct, emit_rtl_text, fsm_controller, library_entry, \
    map_rtl_library, simulate_controller, simulate_rtl_cycles, \
    simulate_rtl_functional, total_registers
from fdmflow.model.graph import Block, Endpoint, Link, Subsystem
from fdmflow.sim.trace import Stimulus

from helpers import rand_hw_subsystem, rand_pipeline_node


def _link(a, ap, b, bp):
    return Link(Endpoint(a, ap), Endpoint(b, bp))


def _chain(name, specs):
    """specs: list of (id, kind, params); single in/out chain."""
    sub = Subsystem(name, inputs=["in"], outputs=["out"])
    cur = ("self", "in")
    for bid, kind, params in specs:
        sub.blocks.append(Block(bid, kind, params))
        sub.links.append(_link(cur[0], cur[1], bid, "in"))
        cur = (bid, "out")
    sub.links.append(_link(cur[0], cur[1], "self", "out"))
    return sub


class TestLibrary:
    def test_default_latencies(self):
        assert library_entry("add", ()).latency == 0
        assert library_entry("gain", (2,)).latency == 0
        assert library_entry("mul", ()).latency == 1
        assert library_entry("quant", (2,)).latency == 1

    def test_fir_latency_log2(self):
        assert library_entry("fir", (1,)).latency == 1
        assert library_entry("fir", (1, 1)).latency == 2
        assert library_entry("fir", (1, 1, 1, 1)).latency == 3
        assert library_entry("fir", tuple([1] * 5)).latency == 4

    def test_user_entries(self):
        e = library_entry("user", ("clip",))
        assert e.latency == 2 and e.eligibility == "multicycle"
        assert library_entry("user", ("inc",), cost_override=7).latency == 7

    def test_cost_override(self):
        assert library_entry("gain", (2,), cost_override=3).latency == 3


class TestMapRtlLibrary:
    def test_fir_quant_chain(self):
        sub = _chain("HW_x", [("f", "fir", (1, 2, 3, 4)), ("q", "quant", (2,))])
        g = map_rtl_library(sub)
        assert g.nodes["f"].latency == 3
        assert g.nodes["q"].latency == 1
        real = [n for n, nd in g.nodes.items()
                if nd.kind not in ("input", "output")]
        assert real == ["f", "q"]

    def test_empty_node(self):
        sub = Subsystem("HW_e", inputs=["in"], outputs=["out"],
                        links=[_link("self", "in", "self", "out")])
        g = map_rtl_library(sub)
        assert all(nd.kind in ("input", "output") for nd in g.nodes.values())

    def test_unregistered_user_without_cost(self):
        sub = _chain("HW_u", [("mystery", "user", ("huff",))])
        with pytest.raises(HwSynthError, match="mystery"):
            map_rtl_library(sub)

    def test_cost_param_rescues_user_block(self):
        sub = _chain("HW_u", [("mystery", "user", ("huff",))])
        g = map_rtl_library(sub, costs={"mystery": 5})
        assert g.nodes["mystery"].latency == 5
        assert not all_pipelined(g)


def _diamond():
    sub = Subsystem("HW_d", inputs=["in"], outputs=["out"],
                    blocks=[Block("a", "gain", (1,)), Block("b", "gain", (1,)),
                            Block("j", "add")],
                    links=[_link("self", "in", "a", "in"),
                           _link("self", "in", "b", "in"),
                           _link("a", "out", "j", "in1"),
                           _link("b", "out", "j", "in2"),
                           _link("j", "out", "self", "out")])
    return map_rtl_library(sub, costs={"a": 3, "b": 1, "j": 0})


class TestDelayCorrect:
    def test_diamond(self):
        g, k = delay_correct(_diamond())
        assert k == 3
        assert total_registers(g) == 2
        slack = {(e.src, e.dst): e.regs for e in g.edges}
        assert slack[("b", "j")] == 2
        assert slack[("a", "j")] == 0

    def test_single_chain_no_regs(self):
        sub = _chain("HW_c", [("a", "gain", (1,)), ("b", "gain", (1,))])
        g, k = delay_correct(map_rtl_library(sub, costs={"a": 1, "b": 2}))
        assert (k, total_registers(g)) == (3, 0)

    def test_all_zero_identity(self):
        sub = _chain("HW_z", [("a", "gain", (1,)), ("b", "gain", (2,))])
        g, k = delay_correct(map_rtl_library(sub))
        assert (k, total_registers(g)) == (0, 0)

    def test_multicycle_rejected(self):
        sub = _chain("HW_u", [("c", "user", ("clip",))])
        with pytest.raises(HwSynthError, match="multicycle"):
            delay_correct(map_rtl_library(sub))

    def test_path_balance_invariant(self):
        # every input-to-node path carries equal registered latency
        for seed in range(30):
            rng = random.Random(seed)
            sub, costs = rand_pipeline_node(rng)
            g, k = delay_correct(map_rtl_library(sub, costs))
            for e in g.edges:
                need = g.levels[e.dst] - g.nodes[e.dst].latency
                assert g.levels[e.src] + e.regs == need, f"seed {seed}"


class TestController:
    def test_ii_sum(self):
        sub = _chain("HW_s", [("a", "gain", (1,)), ("b", "gain", (1,)),
                              ("c", "gain", (1,))])
        ctrl = fsm_controller(map_rtl_library(sub, {"a": 2, "b": 1, "c": 3}))
        assert ctrl.ii == 6
        assert ctrl.order == ["a", "b", "c"]

    def test_ii_floor_one(self):
        sub = _chain("HW_s", [("a", "gain", (1,))])
        assert fsm_controller(map_rtl_library(sub, {"a": 0})).ii == 1

    def test_stream_matches_functional_per_ii(self):
        for seed in range(20):
            rng = random.Random(200 + seed)
            sub = rand_hw_subsystem(rng, "c", force_controller=True)
            g = map_rtl_library(sub)
            ctrl = fsm_controller(g)
            xs = [rng.randint(-100, 100) for _ in range(20)]
            stim = Stimulus({"in": xs}, 20)
            got = simulate_controller(ctrl, stim, 20)
            ref = simulate_rtl_functional(g, stim, 20)
            assert got.values("out") == ref.values("out"), f"seed {seed}"
            assert [t for t, _ in got.ports["out"]] == \
                [(i + 1) * ctrl.ii for i in range(20)]


class TestCycleAccuracy:
    def test_shifted_by_k(self):
        # raw cycle stream equals the functional stream delayed by k
        for seed in range(40):
            rng = random.Random(seed)
            sub, costs = rand_pipeline_node(rng)
            g0 = map_rtl_library(sub, costs)
            g, k = delay_correct(g0)
            n = 30
            xs = [rng.randint(-100, 100) for _ in range(n)]
            stim = Stimulus({"in": xs}, n)
            cyc = simulate_rtl_cycles(g, stim, n + k)
            ref = simulate_rtl_functional(g0, stim, n)
            assert cyc.values("out")[k:] == ref.values("out"), f"seed {seed}"

    def test_declared_delay_is_functional(self):
        # feedback accumulator through a declared delay block
        sub = Subsystem("HW_acc", inputs=["in"], outputs=["out"],
                        blocks=[Block("a", "add"), Block("d", "delay", (1,))],
                        links=[_link("self", "in", "a", "in1"),
                               _link("d", "out", "a", "in2"),
                               _link("a", "out", "d", "in"),
                               _link("a", "out", "self", "out")])
        g, k = delay_correct(map_rtl_library(sub))
        assert k == 0
        stim = Stimulus({"in": [1, 1, 1, 1]}, 4)
        tr = simulate_rtl_cycles(g, stim, 4)
        assert tr.values("out") == [1, 2, 3, 4]


class TestEmission:
    def test_pipelined_text(self):
        g, k = delay_correct(_diamond())
        txt = emit_rtl_text(g)
        assert "latency k=3" in txt
        assert txt.count("reg ") == 2
        assert "inst a : scaler latency=3" in txt
        assert emit_rtl_text(g) == txt  # stable

    def test_controller_text(self):
        sub = _chain("HW_s", [("c", "user", ("clip",))])
        ctrl = fsm_controller(map_rtl_library(sub))
        txt = emit_rtl_text(ctrl)
        assert "controller II=2" in txt
        assert "inst c : u_clip latency=2" in txt
