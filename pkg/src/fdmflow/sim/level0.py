"""Level-0 simulation: synchronous sweep of the functional model."""

from __future__ import annotations

from ..model.blocks import FunctionRegistry, default_registry, init_state, \
    port_names, step_block
from ..model.graph import FlatGraph, ModelGraph, flatten, topo_order
from .trace import Stimulus, Trace


class Level0Sim:
    """Fires blocks in topological order each tick; delays update at tick end."""

    def __init__(self, g: ModelGraph, registry: FunctionRegistry | None = None):
        self.registry = registry or default_registry()
        self.flat: FlatGraph = flatten(g, self.registry)
        if self.flat.issues:
            raise ValueError(f"model not valid: {self.flat.issues[0].message}")
        self.order = topo_order(self.flat)
        self.graph = g
        self.reset()

    def reset(self) -> None:
        self.states = {p: init_state(fb.block.kind, fb.block.params)
                       for p, fb in self.flat.blocks.items()}

    def tick(self, in_values: dict[str, int]) -> dict[str, int]:
        """Advance one global tick; returns top-level output port values."""
        pin_vals: dict = {}
        delay_inputs = []
        # delay outputs are registered: emit them before the sweep so a
        # consumer ordered ahead of its delay still sees the value
        for path, fb in self.flat.blocks.items():
            if fb.block.kind == "delay":
                pin_vals[(path, "out")] = self.states[path][0]
        def read(path, port):
            src = self.flat.drivers[(path, port)]
            if src[0] == "top":
                return in_values.get(src[1], 0)
            return pin_vals[(src[1], src[2])]

        for path in self.order:
            blk = self.flat.blocks[path].block
            if blk.kind == "delay":
                delay_inputs.append(path)
                continue
            ins, outs = port_names(blk.kind, blk.params, self.registry)
            vals = tuple(read(path, p) for p in ins)
            out_vals, self.states[path] = step_block(
                blk.kind, blk.params, vals, self.states[path], self.registry)
            for port, v in zip(outs, out_vals):
                pin_vals[(path, port)] = v
        # shift delay queues at tick end, once every driver has fired
        for path in delay_inputs:
            self.states[path] = self.states[path][1:] + (read(path, "in"),)
        result = {}
        for port, src in self.flat.top_outputs.items():
            if src[0] == "top":
                result[port] = in_values.get(src[1], 0)
            else:
                result[port] = pin_vals[(src[1], src[2])]
        return result


def simulate_level0(g: ModelGraph, stim: Stimulus, ticks: int,
                    registry: FunctionRegistry | None = None) -> Trace:
    sim = Level0Sim(g, registry)
    trace = Trace({p: [] for p in g.outputs}, level=0, design=g.name)
    for t in range(ticks):
        outs = sim.tick({p: stim.at(p, t) for p in g.inputs})
        for port, v in outs.items():
            trace.ports[port].append((t, v))
    return trace
