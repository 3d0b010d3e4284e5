"""Hierarchical netlist: modules, ports and nets, plus JSON round-trip.

One module per tree node except block leaves inside tasks; implicit
channels contribute a net only, declared channel subsystems also get a
channel_adapter module so interface synthesis has an attachment point.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .tree import DesignTree, TreeNode

MODULE_KINDS = ("top", "sw_node", "hw_node", "task", "ip", "channel_adapter")

_ROLE_KIND = {
    "root": "top",
    "sw_node": "sw_node",
    "hw_node": "hw_node",
    "task": "task",
    "ip": "ip",
    # testbench leaves are plain behavioral modules under the top, same
    # shape as an IP
    "testbench": "ip",
    "channel": "channel_adapter",
}


@dataclass
class Port:
    name: str
    direction: str  # "in" | "out"
    width: int = 1
    protocol: str = ""


@dataclass
class Module:
    name: str
    kind: str
    ports: list[Port] = field(default_factory=list)
    params: dict = field(default_factory=dict)
    children: list["Module"] = field(default_factory=list)

    def port(self, name: str) -> Port | None:
        for p in self.ports:
            if p.name == name:
                return p
        return None


@dataclass
class Net:
    name: str
    endpoints: list[str]  # "module/path.port", producer first


@dataclass
class ColifNetlist:
    top: Module
    nets: list[Net]

    def modules(self) -> list[tuple[str, Module]]:
        """(path, module) pairs in hierarchy order."""
        out: list[tuple[str, Module]] = []

        def walk(m: Module, prefix: str):
            path = f"{prefix}/{m.name}" if prefix else m.name
            out.append((path, m))
            for c in m.children:
                walk(c, path)

        walk(self.top, "")
        return out

    def module_at(self, path: str) -> Module | None:
        for p, m in self.modules():
            if p == path:
                return m
        return None


class NetlistError(Exception):
    pass


def _module_of(node: TreeNode) -> Module:
    ports = [Port(p, "in") for p in node.in_ports] \
        + [Port(p, "out") for p in node.out_ports]
    params = {}
    if node.role == "channel":
        params = {"topology": node.params["topology"],
                  "depth": node.params["depth"]}
    elif node.role in ("ip", "block"):
        params = {"kind": node.params["kind"]}
    elif node.role == "testbench" and node.ref.block is not None:
        params = {"kind": node.ref.block.kind}
    return Module(node.name, _ROLE_KIND[node.role], ports, params)


def emit_netlist(d: DesignTree) -> ColifNetlist:
    def build(node: TreeNode) -> Module | None:
        if node.role == "block":
            return None  # blocks inside tasks live in the behavior, not here
        if node.role == "channel" and not node.params.get("explicit"):
            return None
        m = _module_of(node)
        for c in node.children:
            cm = build(c)
            if cm is not None:
                m.children.append(cm)
        return m

    top = build(d.root)
    root = d.root.name

    def pin_path(pin) -> str:
        kind, owner, port = pin
        if kind == "top":
            return f"{root}.{port}"
        return f"{root}/{owner}.{port}"

    nets = []
    for ch in d.tlm.channels:
        nets.append(Net(ch.id, [pin_path(p) for p in ch.chain]))
    return ColifNetlist(top, nets)


def validate_netlist(n: ColifNetlist) -> list[str]:
    """Structural checks; returns human-readable problems."""
    problems = []
    paths = {}
    for path, m in n.modules():
        if path in paths:
            problems.append(f"duplicate module path {path}")
        paths[path] = m
        if m.kind not in MODULE_KINDS:
            problems.append(f"{path}: unknown module kind {m.kind!r}")
        seen = set()
        for p in m.ports:
            if p.name in seen:
                problems.append(f"{path}: duplicate port {p.name}")
            seen.add(p.name)
            if p.direction not in ("in", "out"):
                problems.append(f"{path}.{p.name}: bad direction {p.direction!r}")
    for net in n.nets:
        if not net.endpoints:
            problems.append(f"net {net.name}: no endpoints")
            continue
        for ep in net.endpoints:
            mpath, _, port = ep.rpartition(".")
            m = paths.get(mpath)
            if m is None:
                problems.append(f"net {net.name}: no module {mpath}")
            elif m.port(port) is None:
                problems.append(f"net {net.name}: no port {ep}")
    return problems


def netlist_to_json(n: ColifNetlist) -> str:
    doc = {"top": asdict(n.top), "nets": [asdict(x) for x in n.nets]}
    return json.dumps(doc, indent=2) + "\n"


def _module_from(doc: dict) -> Module:
    return Module(doc["name"], doc["kind"],
                  [Port(**p) for p in doc["ports"]],
                  dict(doc["params"]),
                  [_module_from(c) for c in doc["children"]])


def parse_netlist_json(text: str) -> ColifNetlist:
    try:
        doc = json.loads(text)
        top = _module_from(doc["top"])
        nets = [Net(x["name"], list(x["endpoints"])) for x in doc["nets"]]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise NetlistError(f"malformed netlist file: {e}") from None
    return ColifNetlist(top, nets)
