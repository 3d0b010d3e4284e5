import importlib.resources as ir

from fdmflow.model.graph import Block, Endpoint, Link, ModelGraph, Subsystem
from fdmflow.model.parser import parse_model
from fdmflow.tlm import recognize_partition, validate_partition


def mini_codec():
    text = (ir.files("fdmflow") / "models" / "mini_codec.fdm").read_text()
    return parse_model(text)


class TestRecognition:
    def test_mini_codec_partition(self):
        t = recognize_partition(mini_codec())
        assert set(t.nodes) == {"SW_cpu", "HW_filter", "HW_post"}
        assert t.nodes["SW_cpu"].role == "software"
        tasks = [u for u in t.units.values() if u.kind == "task"]
        assert [u.name for u in tasks] == [
            "SW_cpu/TASK_unpack", "SW_cpu/TASK_dequant", "SW_cpu/TASK_mix"]
        assert t.testbench == ["reader", "writer"]

    def test_mini_codec_channels(self):
        t = recognize_partition(mini_codec())
        assert len(t.channels) == 8
        feed = next(c for c in t.channels if c.id == "CHAN_feed")
        assert feed.explicit and feed.fifo_depth == 2
        assert feed.topology == "point_to_point"
        assert [str(p) for p in feed.producers] == ["SW_cpu/TASK_dequant.out"]
        assert [str(c) for c in feed.consumers] == ["HW_filter.in"]
        implicit = [c for c in t.channels if not c.explicit]
        assert all(c.fifo_depth == 1 for c in implicit)

    def test_direct_sw_block_becomes_task(self):
        g = ModelGraph("m", inputs=["x"], outputs=["y"])
        sw = Subsystem("SW_a", inputs=["i"], outputs=["o"],
                       blocks=[Block("k", "gain", (2,))],
                       links=[Link(Endpoint("self", "i"), Endpoint("k", "in")),
                              Link(Endpoint("k", "out"), Endpoint("self", "o"))])
        g.subsystems.append(sw)
        g.links += [Link(Endpoint("self", "x"), Endpoint("SW_a", "i")),
                    Link(Endpoint("SW_a", "o"), Endpoint("self", "y"))]
        t = recognize_partition(g)
        assert t.units["SW_a/k"].kind == "task"
        assert t.units["SW_a/k"].block is not None

    def test_multipoint_consumer_set(self):
        g = ModelGraph("m", inputs=["x"], outputs=["y1", "y2"])
        hw = Subsystem("HW_a", inputs=["in"], outputs=["out"],
                       blocks=[Block("k", "gain", (2,))],
                       links=[Link(Endpoint("self", "in"), Endpoint("k", "in")),
                              Link(Endpoint("k", "out"), Endpoint("self", "out"))])
        g.subsystems.append(hw)
        g.links += [Link(Endpoint("self", "x"), Endpoint("HW_a", "in")),
                    Link(Endpoint("HW_a", "out"), Endpoint("self", "y1")),
                    Link(Endpoint("HW_a", "out"), Endpoint("self", "y2"))]
        t = recognize_partition(g)
        ch = next(c for c in t.channels if c.producers[0].unit == "HW_a")
        assert ch.topology == "multipoint"
        assert len(ch.consumers) == 2


class TestPartitionValidation:
    def test_mini_codec_clean(self):
        t = recognize_partition(mini_codec())
        assert validate_partition(t).ok

    def test_task_outside_sw_node(self):
        g = ModelGraph("m")
        g.subsystems.append(Subsystem("TASK_oops"))
        t = recognize_partition(g)
        rep = validate_partition(t)
        assert any("TASK_" in d.message for d in rep.errors())

    def test_hw_nested_in_sw(self):
        sw = Subsystem("SW_a", subsystems=[Subsystem("HW_bad")])
        g = ModelGraph("m", subsystems=[sw])
        rep = validate_partition(recognize_partition(g))
        assert not rep.ok

    def test_p2p_arity(self):
        # point_to_point channel with two consumers is illegal
        g = ModelGraph("m", inputs=["x"], outputs=["y1", "y2"])
        hw = Subsystem("HW_a", inputs=["in"], outputs=["out"],
                       blocks=[Block("k", "gain", (2,))],
                       links=[Link(Endpoint("self", "in"), Endpoint("k", "in")),
                              Link(Endpoint("k", "out"), Endpoint("self", "out"))])
        chan = Subsystem("CHAN_c", inputs=["in"], outputs=["out"],
                         params={"topology": "point_to_point", "depth": 1})
        g.subsystems += [hw, chan]
        g.links += [Link(Endpoint("self", "x"), Endpoint("HW_a", "in")),
                    Link(Endpoint("HW_a", "out"), Endpoint("CHAN_c", "in")),
                    Link(Endpoint("CHAN_c", "out"), Endpoint("self", "y1")),
                    Link(Endpoint("CHAN_c", "out"), Endpoint("self", "y2"))]
        t = recognize_partition(g)
        rep = validate_partition(t)
        assert any("point_to_point" in d.message for d in rep.errors())

    def test_unknown_topology(self):
        g = ModelGraph("m", inputs=["x"], outputs=["y"])
        chan = Subsystem("CHAN_c", inputs=["in"], outputs=["out"],
                         params={"topology": "rings", "depth": 1})
        g.subsystems.append(chan)
        g.links += [Link(Endpoint("self", "x"), Endpoint("CHAN_c", "in")),
                    Link(Endpoint("CHAN_c", "out"), Endpoint("self", "y"))]
        rep = validate_partition(recognize_partition(g))
        assert any("topology" in d.message for d in rep.errors())

    def test_hw_user_without_rtl_entry_warns(self):
        hw = Subsystem("HW_a", inputs=["in"], outputs=["out"],
                       blocks=[Block("u", "user", ("huff",))],
                       links=[Link(Endpoint("self", "in"), Endpoint("u", "in")),
                              Link(Endpoint("u", "out"), Endpoint("self", "out"))])
        g = ModelGraph("m", inputs=["x"], outputs=["y"], subsystems=[hw],
                       links=[Link(Endpoint("self", "x"), Endpoint("HW_a", "in")),
                              Link(Endpoint("HW_a", "out"), Endpoint("self", "y"))])
        rep = validate_partition(recognize_partition(g))
        assert rep.ok  # warning only
        assert any(d.severity == "warning" for d in rep.diagnostics)
