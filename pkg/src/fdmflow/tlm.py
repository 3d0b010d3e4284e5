"""Partition recognition: naming conventions over a validated model.

Subsystem prefixes assign architecture roles: ``SW_`` software node,
``HW_`` hardware node, ``TASK_`` task inside a software node, ``CHAN_``
declared communication channel.  Everything left at the top level is
testbench.  Recognition is total; legality is checked separately by
validate_partition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model.blocks import FunctionRegistry, default_registry, port_names
from .model.graph import Block, ModelGraph, Subsystem, is_channel_subsystem
from .model.validate import Diagnostic, ValidationReport

TOP = None  # PortRef unit value for the model boundary


@dataclass(frozen=True)
class PortRef:
    unit: str | None  # unit name, or TOP for a model boundary port
    port: str

    def __str__(self) -> str:
        return f"{self.unit or '<top>'}.{self.port}"


@dataclass
class ChannelSpec:
    id: str
    topology: str  # point_to_point | multipoint | network
    producers: list[PortRef]
    consumers: list[PortRef]
    fifo_depth: int = 1
    explicit: bool = False
    # ordered pins the connection passes through, for netlist net emission:
    # ("top"|"unit"|"nport"|"chan", owner, port)
    chain: list[tuple] = field(default_factory=list)


@dataclass
class Unit:
    """Behavioral leaf: a software task, a hardware node, or a testbench block."""

    name: str
    kind: str  # "task" | "hw_node" | "testbench"
    node: str | None
    subsystem: Subsystem | None = None
    block: Block | None = None
    in_ports: tuple[str, ...] = ()
    out_ports: tuple[str, ...] = ()


@dataclass
class NodeInfo:
    name: str
    role: str  # "software" | "hardware"
    subsystem: Subsystem
    units: list[str] = field(default_factory=list)


@dataclass
class TlmModel:
    base: ModelGraph
    nodes: dict[str, NodeInfo]
    units: dict[str, Unit]
    channels: list[ChannelSpec]
    testbench: list[str]  # unit names


def node_role(sub_id: str) -> str | None:
    if sub_id.startswith("SW_"):
        return "software"
    if sub_id.startswith("HW_"):
        return "hardware"
    return None


def _unit_ports(sub: Subsystem | None, blk: Block | None, registry):
    if sub is not None:
        return tuple(sub.inputs), tuple(sub.outputs)
    ins, outs = port_names(blk.kind, blk.params, registry)
    return tuple(ins), tuple(outs)


def recognize_partition(g: ModelGraph,
                        registry: FunctionRegistry | None = None) -> TlmModel:
    registry = registry or default_registry()
    nodes: dict[str, NodeInfo] = {}
    units: dict[str, Unit] = {}
    testbench: list[str] = []
    chan_subs: dict[str, Subsystem] = {}

    def add_unit(u: Unit):
        units[u.name] = u

    for sub in g.subsystems:
        role = node_role(sub.id)
        if role == "software":
            node = NodeInfo(sub.id, "software", sub)
            nodes[sub.id] = node
            for inner in sub.subsystems:
                # TASK_ subsystems and plain subsystems both become tasks;
                # prefixed ones nested wrongly are flagged by validation
                name = f"{sub.id}/{inner.id}"
                ins, outs = _unit_ports(inner, None, registry)
                add_unit(Unit(name, "task", sub.id, subsystem=inner,
                              in_ports=ins, out_ports=outs))
                node.units.append(name)
            for blk in sub.blocks:
                name = f"{sub.id}/{blk.id}"
                ins, outs = _unit_ports(None, blk, registry)
                add_unit(Unit(name, "task", sub.id, block=blk,
                              in_ports=ins, out_ports=outs))
                node.units.append(name)
        elif role == "hardware":
            node = NodeInfo(sub.id, "hardware", sub)
            nodes[sub.id] = node
            ins, outs = _unit_ports(sub, None, registry)
            add_unit(Unit(sub.id, "hw_node", sub.id, subsystem=sub,
                          in_ports=ins, out_ports=outs))
            node.units.append(sub.id)
        elif is_channel_subsystem(sub.id):
            chan_subs[sub.id] = sub
        else:
            ins, outs = _unit_ports(sub, None, registry)
            add_unit(Unit(sub.id, "testbench", None, subsystem=sub,
                          in_ports=ins, out_ports=outs))
            testbench.append(sub.id)
    for blk in g.blocks:
        ins, outs = _unit_ports(None, blk, registry)
        add_unit(Unit(blk.id, "testbench", None, block=blk,
                      in_ports=ins, out_ports=outs))
        testbench.append(blk.id)

    channels = _resolve_channels(g, nodes, units, chan_subs)
    return TlmModel(g, nodes, units, channels, testbench)


def _resolve_channels(g, nodes, units, chan_subs) -> list[ChannelSpec]:
    """Group links into unit-to-unit connections.

    Links are chased through software-node boundary ports down to task
    pins, stopped at hardware-node boundaries, and routed through CHAN_
    subsystems which contribute topology and depth.
    """
    adj: dict[tuple, list[tuple]] = {}

    def add_edge(src, dst):
        adj.setdefault(src, []).append(dst)

    def top_pin(ep):
        if ep.block == "self":
            return ("top", None, ep.port)
        if ep.block in chan_subs:
            return ("chan", ep.block, ep.port)
        if ep.block in nodes:
            if nodes[ep.block].role == "hardware":
                return ("unit", ep.block, ep.port)
            return ("nport", ep.block, ep.port)
        if ep.block in units:
            return ("unit", ep.block, ep.port)
        return None

    for link in g.links:
        s, d = top_pin(link.src), top_pin(link.dst)
        if s is not None and d is not None:
            add_edge(s, d)

    for node in nodes.values():
        if node.role != "software":
            continue

        def sw_pin(ep, node=node):
            if ep.block == "self":
                return ("nport", node.name, ep.port)
            name = f"{node.name}/{ep.block}"
            if name in units:
                return ("unit", name, ep.port)
            return None

        for link in node.subsystem.links:
            s, d = sw_pin(link.src), sw_pin(link.dst)
            if s is not None and d is not None:
                add_edge(s, d)

    # origins: unit output pins and top-level input ports, declaration order
    origins: list[tuple] = []
    for p in g.inputs:
        origins.append(("top", None, p))
    for u in units.values():
        for p in u.out_ports:
            origins.append(("unit", u.name, p))

    chan_out_pins = {}
    for pin in adj:
        if pin[0] == "chan":
            chan_out_pins.setdefault(pin[1], []).append(pin)

    results = []  # (origin, chan name | None, terminals, chain)
    for origin in origins:
        if origin not in adj:
            continue
        chain = [origin]
        terminals: list[tuple] = []
        chan_name = None
        frontier = list(adj.get(origin, []))
        seen = {origin}
        while frontier:
            pin = frontier.pop(0)
            if pin in seen:
                continue
            seen.add(pin)
            chain.append(pin)
            kind = pin[0]
            if kind == "unit" or (kind == "top" and pin[2] in g.outputs):
                terminals.append(pin)
            elif kind == "nport":
                frontier.extend(adj.get(pin, []))
            elif kind == "chan":
                chan_name = pin[1]
                for out_pin in chan_out_pins.get(pin[1], []):
                    if out_pin not in seen:
                        chain.append(out_pin)
                        seen.add(out_pin)
                        frontier.extend(adj.get(out_pin, []))
            elif kind == "top":
                frontier.extend(adj.get(pin, []))
        if terminals:
            results.append((origin, chan_name, terminals, chain))

    def ref(pin) -> PortRef:
        return PortRef(pin[1], pin[2])

    channels: list[ChannelSpec] = []
    by_chan: dict[str, ChannelSpec] = {}
    for origin, chan_name, terminals, chain in results:
        if chan_name is not None:
            sub = chan_subs[chan_name]
            if chan_name in by_chan:
                spec = by_chan[chan_name]
                spec.producers.append(ref(origin))
                for t in terminals:
                    if ref(t) not in spec.consumers:
                        spec.consumers.append(ref(t))
                spec.chain.extend(p for p in chain if p not in spec.chain)
                continue
            spec = ChannelSpec(chan_name,
                               str(sub.params.get("topology", "point_to_point")),
                               [ref(origin)], [ref(t) for t in terminals],
                               int(sub.params.get("depth", 1)),
                               explicit=True, chain=chain)
            by_chan[chan_name] = spec
            channels.append(spec)
        else:
            owner = origin[1] if origin[1] is not None else f"top_{origin[2]}"
            cid = f"ch_{owner.replace('/', '_')}_{origin[2]}"
            topo = "point_to_point" if len(terminals) == 1 else "multipoint"
            channels.append(ChannelSpec(cid, topo, [ref(origin)],
                                        [ref(t) for t in terminals],
                                        1, explicit=False, chain=chain))
    return channels


def _cross_node(t: TlmModel, ch: ChannelSpec) -> bool:
    def owner(r: PortRef):
        if r.unit is None:
            return "<tb>"
        u = t.units.get(r.unit)
        return u.node or "<tb>" if u else "<tb>"

    owners = {owner(r) for r in ch.producers} | {owner(r) for r in ch.consumers}
    return len(owners) > 1


def validate_partition(t: TlmModel,
                       rtl_index: set[str] | None = None) -> ValidationReport:
    """Legality of the recognized partition.

    rtl_index lists user functions with a hardware library implementation;
    hardware user blocks outside it only get a warning because an
    FSM-controller fallback exists.
    """
    if rtl_index is None:
        from .hwsynth import RTL_USER_INDEX
        rtl_index = set(RTL_USER_INDEX)
    out: list[Diagnostic] = []

    def walk_nested(sub: Subsystem, node: NodeInfo, path: str):
        for inner in sub.subsystems:
            loc = f"{path}/{inner.id}"
            role = node_role(inner.id)
            if role is not None and role != node.role:
                out.append(Diagnostic(
                    "error", loc,
                    f"{inner.id.split('_')[0]}_ subsystem nested inside a "
                    f"{node.role} node", line=inner.line))
            if inner.id.startswith("TASK_") and node.role != "software":
                out.append(Diagnostic("error", loc,
                                      "TASK_ subsystem outside a software node",
                                      line=inner.line))
            walk_nested(inner, node, loc)

    for node in t.nodes.values():
        walk_nested(node.subsystem, node, node.name)

    for sub in t.base.subsystems:
        if sub.id.startswith("TASK_"):
            out.append(Diagnostic("error", sub.id,
                                  "TASK_ subsystem outside a software node",
                                  line=sub.line))

    for ch in t.channels:
        loc = ch.id
        if ch.topology not in ("point_to_point", "multipoint", "network"):
            out.append(Diagnostic("error", loc,
                                  f"unknown channel topology {ch.topology!r}"))
        elif ch.topology == "point_to_point":
            if len(ch.producers) != 1 or len(ch.consumers) != 1:
                out.append(Diagnostic(
                    "error", loc,
                    f"point_to_point channel must have exactly one producer "
                    f"and one consumer (has {len(ch.producers)}/{len(ch.consumers)})"))
        elif not ch.producers or not ch.consumers:
            out.append(Diagnostic("error", loc,
                                  "channel must have at least one producer "
                                  "and one consumer"))
        if ch.fifo_depth < 1:
            out.append(Diagnostic("error", loc, "fifo depth must be >= 1"))

    def hw_blocks(sub: Subsystem):
        yield from sub.blocks
        for inner in sub.subsystems:
            yield from hw_blocks(inner)

    for node in t.nodes.values():
        if node.role != "hardware":
            continue
        for blk in hw_blocks(node.subsystem):
            if blk.kind == "user" and blk.params[0] not in rtl_index:
                out.append(Diagnostic(
                    "warning", f"{node.name}/{blk.id}",
                    f"user function {blk.params[0]!r} has no RTL library entry; "
                    "an FSM controller will be generated", line=blk.line))

    out.sort(key=lambda d: (d.line, d.location, d.message))
    return ValidationReport(out)
