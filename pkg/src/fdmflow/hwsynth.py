"""Hardware refinement of functional nodes.

Each hardware node's blocks are mapped to RTL IPs with cycle latencies.
When every IP is pipelined the graph is delay-corrected by inserting
balancing registers on reconvergent paths; otherwise a multicycle FSM
controller sequences the IPs, accepting one sample per initiation
interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model.blocks import FunctionRegistry, default_registry, init_state, \
    port_names, step_block
from .model.graph import ModelGraph, Subsystem, flatten, topo_order
from .sim.trace import Stimulus, Trace


@dataclass(frozen=True)
class RtlLibraryEntry:
    rtl_name: str
    latency: int
    eligibility: str  # "pipelined" | "multicycle"


def _fir_latency(params: tuple) -> int:
    taps = len(params)
    return 1 + max(0, math.ceil(math.log2(taps))) if taps > 1 else 1


# Default latencies are repo placeholders, overridable per instance via the
# cost_cycles parameter; they are not calibrated figures.
def library_entry(kind: str, params: tuple,
                  cost_override: int | None = None) -> RtlLibraryEntry:
    if kind == "user":
        name = params[0]
        lat = cost_override if cost_override is not None \
            else RTL_USER_INDEX.get(name, 1)
        return RtlLibraryEntry(f"u_{name}", lat, "multicycle")
    if kind == "for_loop":
        lat = cost_override if cost_override is not None else params[0]
        return RtlLibraryEntry("loop_engine", lat, "multicycle")
    base = {
        "const": ("const_reg", 0, "pipelined"),
        "add": ("adder", 0, "pipelined"),
        "sub": ("subtractor", 0, "pipelined"),
        "gain": ("scaler", 0, "pipelined"),
        "mul": ("multiplier", 1, "pipelined"),
        "quant": ("quantizer", 1, "pipelined"),
        "if_else": ("selector", 0, "pipelined"),
        "mux": ("mux", 0, "pipelined"),
        "demux": ("demux", 0, "pipelined"),
        "sink": ("probe", 0, "pipelined"),
        "delay": ("delay_line", 0, "pipelined"),
    }
    if kind == "fir":
        lat = cost_override if cost_override is not None else _fir_latency(params)
        return RtlLibraryEntry("fir_core", lat, "pipelined")
    name, lat, elig = base[kind]
    if cost_override is not None:
        lat = cost_override
    return RtlLibraryEntry(name, lat, elig)


# user functions with a shipped RTL implementation (name -> latency)
RTL_USER_INDEX: dict[str, int] = {"clip": 2}


class HwSynthError(Exception):
    pass


@dataclass
class RtlNode:
    name: str
    kind: str  # block kind, or "input"/"output" pseudo nodes
    params: tuple = ()
    latency: int = 0
    eligibility: str = "pipelined"

    @property
    def is_delay(self) -> bool:
        return self.kind == "delay"


@dataclass
class RtlEdge:
    src: str
    dst: str
    dst_port: str
    regs: int = 0


@dataclass
class RtlGraph:
    name: str
    nodes: dict[str, RtlNode]
    edges: list[RtlEdge]
    inputs: list[str]   # names of input pseudo nodes ("in:<port>")
    outputs: list[str]  # names of output pseudo nodes ("out:<port>")
    levels: dict[str, int] = field(default_factory=dict)
    latency: int | None = None  # k after delay correction

    def in_port(self, port: str) -> str:
        return f"in:{port}"

    def out_port(self, port: str) -> str:
        return f"out:{port}"


@dataclass
class Controller:
    """Multicycle schedule: one IP firing per step, one sample per II cycles."""

    graph: RtlGraph
    order: list[str]
    ii: int


def _ordered_nodes(g: RtlGraph) -> list[str]:
    """Topological order ignoring edges out of declared delay blocks."""
    succ: dict[str, list[str]] = {n: [] for n in g.nodes}
    indeg = {n: 0 for n in g.nodes}
    for e in g.edges:
        if g.nodes[e.src].is_delay:
            continue
        succ[e.src].append(e.dst)
        indeg[e.dst] += 1
    decl = {n: i for i, n in enumerate(g.nodes)}
    ready = sorted((n for n in g.nodes if indeg[n] == 0), key=decl.get)
    order = []
    while ready:
        cur = ready.pop(0)
        order.append(cur)
        newly = []
        for d in succ[cur]:
            indeg[d] -= 1
            if indeg[d] == 0:
                newly.append(d)
        ready = sorted(ready + newly, key=decl.get)
    if len(order) != len(g.nodes):
        stuck = sorted(n for n in g.nodes if n not in order)
        raise HwSynthError(f"cycle without a declared delay involving {stuck}")
    return order


def map_rtl_library(node_sub: Subsystem, costs: dict[str, int] | None = None,
                    registry: FunctionRegistry | None = None) -> RtlGraph:
    """Replace each functional block of a hardware node with its RTL IP.

    Topology is preserved; costs maps block paths to designer-supplied
    cost_cycles overriding the library defaults.
    """
    registry = registry or default_registry()
    costs = costs or {}
    wrapper = ModelGraph(node_sub.id, blocks=node_sub.blocks,
                         subsystems=node_sub.subsystems, links=node_sub.links,
                         inputs=node_sub.inputs, outputs=node_sub.outputs)
    flat = flatten(wrapper, registry)
    if flat.issues:
        raise HwSynthError(
            f"{node_sub.id}: {flat.issues[0].message} ({flat.issues[0].location})")

    nodes: dict[str, RtlNode] = {}
    edges: list[RtlEdge] = []
    inputs = [f"in:{p}" for p in node_sub.inputs]
    outputs = [f"out:{p}" for p in node_sub.outputs]
    for p in node_sub.inputs:
        nodes[f"in:{p}"] = RtlNode(f"in:{p}", "input")
    for path, fb in flat.blocks.items():
        blk = fb.block
        if blk.kind == "user" and blk.params[0] not in RTL_USER_INDEX \
                and path not in costs:
            raise HwSynthError(
                f"{node_sub.id}/{path}: user function {blk.params[0]!r} has "
                "neither an RTL library entry nor a cost_cycles parameter")
        entry = library_entry(blk.kind, blk.params, costs.get(path))
        nodes[path] = RtlNode(path, blk.kind, blk.params, entry.latency,
                              entry.eligibility)
    for p in node_sub.outputs:
        nodes[f"out:{p}"] = RtlNode(f"out:{p}", "output")

    for (dst, port), src in sorted(flat.drivers.items(),
                                   key=lambda kv: (list(flat.blocks).index(kv[0][0]),
                                                   kv[0][1])):
        if src[0] == "top":
            edges.append(RtlEdge(f"in:{src[1]}", dst, port))
        else:
            edges.append(RtlEdge(src[1], dst, port))
    for p, src in flat.top_outputs.items():
        if src[0] == "top":
            edges.append(RtlEdge(f"in:{src[1]}", f"out:{p}", "in"))
        else:
            edges.append(RtlEdge(src[1], f"out:{p}", "in"))

    g = RtlGraph(node_sub.id, nodes, edges, inputs, outputs)
    _ordered_nodes(g)  # raises on undeclared cycles
    return g


def all_pipelined(g: RtlGraph) -> bool:
    return all(n.eligibility == "pipelined" for n in g.nodes.values())


def delay_correct(g: RtlGraph) -> tuple[RtlGraph, int]:
    """Balance path latencies with slack registers; returns (graph, k).

    level(v) = max over incoming edges of level(src), plus L(v); the slack
    on each edge becomes that many registers, and every output is padded to
    the common latency k.  Declared delay blocks implement functional lag,
    contribute no skew and receive no balancing.
    """
    bad = sorted(n.name for n in g.nodes.values() if n.eligibility != "pipelined")
    if bad:
        raise HwSynthError(f"multicycle-only IPs present ({bad}); "
                           "use fsm_controller instead")
    order = _ordered_nodes(g)
    incoming: dict[str, list[RtlEdge]] = {n: [] for n in g.nodes}
    for e in g.edges:
        incoming[e.dst].append(e)
    levels: dict[str, int] = {}
    for n in order:
        node = g.nodes[n]
        base = 0
        for e in incoming[n]:
            if g.nodes[e.src].is_delay:
                continue  # feedback through a declared delay carries no skew
            base = max(base, levels[e.src])
        levels[n] = base + node.latency
    k = max((levels[o] for o in g.outputs), default=0)
    for o in g.outputs:
        levels[o] = k
    new_edges = []
    for e in g.edges:
        if g.nodes[e.src].is_delay or g.nodes[e.dst].is_delay:
            slack = 0  # delay-block wiring is functional, never padded
        else:
            slack = (levels[e.dst] - g.nodes[e.dst].latency) - levels[e.src]
        new_edges.append(RtlEdge(e.src, e.dst, e.dst_port, slack))
    out = RtlGraph(g.name, dict(g.nodes), new_edges, list(g.inputs),
                   list(g.outputs), levels, latency=k)
    return out, k


def fsm_controller(g: RtlGraph) -> Controller:
    """Sequential schedule firing one IP per step; II is the latency sum."""
    order = [n for n in _ordered_nodes(g)
             if g.nodes[n].kind not in ("input", "output")]
    ii = sum(g.nodes[n].latency for n in order)
    if ii == 0:
        ii = 1
    return Controller(g, order, ii)


def total_registers(g: RtlGraph) -> int:
    return sum(e.regs for e in g.edges)


# ---------------------------------------------------------------------------
# cycle-level execution


class RtlCycleSim:
    """Cycle-accurate model of a delay-corrected graph.

    Each IP is its functional block followed by an L-stage output pipeline;
    balancing registers sit on the edges.  One input sample is consumed per
    enabled step.  ``raw`` output streams include the k priming samples;
    system simulation discards them via the valid counter.
    """

    def __init__(self, g: RtlGraph, registry: FunctionRegistry | None = None):
        if g.latency is None:
            raise HwSynthError("graph must be delay-corrected first")
        self.g = g
        self.registry = registry or default_registry()
        self.order = [n for n in _ordered_nodes(g)
                      if g.nodes[n].kind not in ("input",)]
        self.incoming: dict[str, list[RtlEdge]] = {n: [] for n in g.nodes}
        for e in g.edges:
            self.incoming[e.dst].append(e)
        self.reset()

    def reset(self) -> None:
        g = self.g
        self.pipes = {n: [0] * nd.latency for n, nd in g.nodes.items()}
        self.regs = {id(e): [0] * e.regs for e in g.edges}
        self.states = {n: init_state(nd.kind, nd.params)
                       for n, nd in g.nodes.items()
                       if nd.kind not in ("input", "output")}
        self.steps = 0

    def step(self, in_values: dict[str, int]) -> dict[str, int]:
        g = self.g
        cur: dict[str, int] = {}
        for p in g.inputs:
            cur[p] = in_values.get(p.split(":", 1)[1], 0)
        # registered outputs are visible before this cycle's computation
        for n, nd in g.nodes.items():
            if nd.latency > 0:
                cur[n] = self.pipes[n][0]
            elif nd.is_delay:
                cur[n] = self.states[n][0] if self.states[n] else 0

        def edge_val(e: RtlEdge) -> int:
            q = self.regs[id(e)]
            return q[0] if q else cur[e.src]

        computed: dict[str, int] = {}
        for n in self.order:
            nd = g.nodes[n]
            ins_e = sorted(self.incoming[n], key=lambda e: e.dst_port)
            if nd.kind == "output":
                cur[n] = edge_val(ins_e[0]) if ins_e else 0
                continue
            port_order, _ = port_names(nd.kind, nd.params, self.registry)
            by_port = {e.dst_port: edge_val(e) for e in ins_e}
            vals = tuple(by_port.get(p, 0) for p in port_order)
            if nd.is_delay:
                computed[n] = vals[0] if vals else 0
                continue
            outs, self.states[n] = step_block(nd.kind, nd.params, vals,
                                              self.states[n], self.registry)
            res = outs[0] if outs else 0
            if nd.latency > 0:
                computed[n] = res
            else:
                cur[n] = res
        # sequential update
        for n, res in computed.items():
            nd = g.nodes[n]
            if nd.is_delay:
                st = self.states[n]
                self.states[n] = st[1:] + (res,) if st else st
            else:
                self.pipes[n] = self.pipes[n][1:] + [res]
        for e in g.edges:
            q = self.regs[id(e)]
            if q:
                self.regs[id(e)] = q[1:] + [cur[e.src]]
        self.steps += 1
        return {o.split(":", 1)[1]: cur[o] for o in g.outputs}


class ControllerSim:
    """Executes the multicycle schedule: functional result, II cycles each."""

    def __init__(self, ctrl: Controller, registry: FunctionRegistry | None = None):
        self.ctrl = ctrl
        self.registry = registry or default_registry()
        g = ctrl.graph
        self.incoming: dict[str, list[RtlEdge]] = {n: [] for n in g.nodes}
        for e in g.edges:
            self.incoming[e.dst].append(e)
        self.reset()

    def reset(self) -> None:
        g = self.ctrl.graph
        self.states = {n: init_state(nd.kind, nd.params)
                       for n, nd in g.nodes.items()
                       if nd.kind not in ("input", "output")}

    def fire(self, in_values: dict[str, int]) -> dict[str, int]:
        g = self.ctrl.graph
        cur: dict[str, int] = {}
        for p in g.inputs:
            cur[p] = in_values.get(p.split(":", 1)[1], 0)
        for n, nd in g.nodes.items():
            if nd.is_delay:
                cur[n] = self.states[n][0] if self.states[n] else 0
        delay_in: dict[str, int] = {}

        def read(n, port_order):
            by_port = {e.dst_port: cur[e.src]
                       for e in sorted(self.incoming[n], key=lambda e: e.dst_port)}
            return tuple(by_port.get(p, 0) for p in port_order)

        for n in self.ctrl.order:
            nd = g.nodes[n]
            port_order, _ = port_names(nd.kind, nd.params, self.registry)
            vals = read(n, port_order)
            if nd.is_delay:
                delay_in[n] = vals[0] if vals else 0
                continue
            outs, self.states[n] = step_block(nd.kind, nd.params, vals,
                                              self.states[n], self.registry)
            cur[n] = outs[0] if outs else 0
        for n, v in delay_in.items():
            st = self.states[n]
            self.states[n] = st[1:] + (v,) if st else st
        res = {}
        for o in g.outputs:
            ins = self.incoming[o]
            res[o.split(":", 1)[1]] = cur[ins[0].src] if ins else 0
        return res


def simulate_rtl_cycles(g: RtlGraph, stim: Stimulus, cycles: int,
                        registry: FunctionRegistry | None = None) -> Trace:
    """Raw one-sample-per-cycle stream including the k priming samples."""
    sim = RtlCycleSim(g, registry)
    ports = [o.split(":", 1)[1] for o in g.outputs]
    tr = Trace({p: [] for p in ports}, level=3, design=g.name, latency=g.latency)
    for t in range(cycles):
        outs = sim.step({p.split(":", 1)[1]: stim.at(p.split(":", 1)[1], t)
                         for p in g.inputs})
        for p, v in outs.items():
            tr.ports[p].append((t, v))
    return tr


def simulate_rtl_functional(g: RtlGraph, stim: Stimulus, ticks: int,
                            registry: FunctionRegistry | None = None) -> Trace:
    """Zero-delay synchronous reference of the same graph (latencies ignored)."""
    ctrl = Controller(g, [n for n in _ordered_nodes(g)
                          if g.nodes[n].kind not in ("input", "output")], 1)
    sim = ControllerSim(ctrl, registry)
    ports = [o.split(":", 1)[1] for o in g.outputs]
    tr = Trace({p: [] for p in ports}, level=0, design=g.name)
    for t in range(ticks):
        outs = sim.fire({p.split(":", 1)[1]: stim.at(p.split(":", 1)[1], t)
                         for p in g.inputs})
        for p, v in outs.items():
            tr.ports[p].append((t, v))
    return tr


def simulate_controller(ctrl: Controller, stim: Stimulus, samples: int,
                        registry: FunctionRegistry | None = None) -> Trace:
    """Controller stream: sample i completes at cycle (i + 1) * II."""
    sim = ControllerSim(ctrl, registry)
    g = ctrl.graph
    ports = [o.split(":", 1)[1] for o in g.outputs]
    tr = Trace({p: [] for p in ports}, level=3, design=g.name, latency=ctrl.ii)
    for i in range(samples):
        outs = sim.fire({p.split(":", 1)[1]: stim.at(p.split(":", 1)[1], i)
                         for p in g.inputs})
        for p, v in outs.items():
            tr.ports[p].append(((i + 1) * ctrl.ii, v))
    return tr


# ---------------------------------------------------------------------------
# structural emission


def emit_rtl_text(obj: RtlGraph | Controller) -> str:
    """Stable structural text: instances, registers, wires, latency header."""
    if isinstance(obj, Controller):
        g = obj.graph
        header = f"controller II={obj.ii}"
    else:
        g = obj
        header = f"latency k={g.latency}"
    lines = [f"design {g.name}", header]
    for n, nd in g.nodes.items():
        if nd.kind in ("input", "output"):
            continue
        entry = library_entry(nd.kind, nd.params, nd.latency)
        lines.append(f"inst {n} : {entry.rtl_name} latency={nd.latency}")
    for e in g.edges:
        for i in range(e.regs):
            lines.append(f"reg bal_{e.src}_{e.dst}_{e.dst_port}_{i}")
    for e in g.edges:
        lines.append(f"wire {e.src} -> {e.dst}.{e.dst_port}"
                     + (f" regs={e.regs}" if e.regs else ""))
    return "\n".join(lines) + "\n"
