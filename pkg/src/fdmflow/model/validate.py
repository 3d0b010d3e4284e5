"""Structural validation of a parsed model."""

from __future__ import annotations

from dataclasses import dataclass, field

from .blocks import FunctionRegistry, default_registry
from .graph import FlatGraph, ModelGraph, comb_successors, flatten


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    location: str
    message: str
    cycle: tuple[str, ...] | None = None
    line: int = 0

    def __str__(self) -> str:
        s = f"{self.severity}: {self.location}: {self.message}"
        if self.cycle:
            s += " [" + " -> ".join(self.cycle) + "]"
        return s


@dataclass
class ValidationReport:
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors()

    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]


def _param_checks(g: ModelGraph, registry: FunctionRegistry, out: list[Diagnostic]):
    def walk(scope, path):
        for b in scope.blocks:
            loc = f"{path}/{b.id}" if path else b.id
            if b.kind == "delay" and b.params[0] < 1:
                out.append(Diagnostic("error", loc, "delay parameter k must be >= 1",
                                      line=b.line))
            if b.kind == "for_loop" and b.params[0] < 1:
                out.append(Diagnostic("error", loc, "for_loop count must be >= 1",
                                      line=b.line))
            if b.kind == "quant" and b.params[0] == 0:
                out.append(Diagnostic("error", loc, "quant step must be non-zero",
                                      line=b.line))
            if b.kind in ("mux", "demux") and b.params[0] < 1:
                out.append(Diagnostic("error", loc, f"{b.kind} way count must be >= 1",
                                      line=b.line))
            if b.kind == "user" and b.params[0] not in registry:
                out.append(Diagnostic("error", loc,
                                      f"user function {b.params[0]!r} is not registered",
                                      line=b.line))
            if b.kind == "for_loop" and b.params[1] not in registry:
                out.append(Diagnostic("error", loc,
                                      f"loop body function {b.params[1]!r} is not registered",
                                      line=b.line))
            if b.width < 1:
                out.append(Diagnostic("error", loc, "width must be positive",
                                      line=b.line))
        for s in scope.subsystems:
            walk(s, f"{path}/{s.id}" if path else s.id)

    walk(g, "")


def _width_checks(flat: FlatGraph, out: list[Diagnostic]):
    for (dst, port), src in sorted(flat.drivers.items()):
        if src[0] != "block":
            continue
        sw = flat.blocks[src[1]].block.width
        dw = flat.blocks[dst].block.width
        if sw != dw:
            out.append(Diagnostic("error", dst,
                                  f"width mismatch on {port}: {sw} -> {dw}"))


def _find_loop_sccs(flat: FlatGraph):
    """Tarjan SCC over the combinational graph; yields looping components."""
    succ = comb_successors(flat)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on: set[str] = set()
    stack: list[str] = []
    counter = [0]
    sccs = []

    def strongconnect(v):
        # iterative Tarjan to dodge recursion limits on deep chains
        work = [(v, iter(succ[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                elif w in on:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                if len(comp) > 1 or node in succ[node]:
                    sccs.append(comp)

    for v in flat.blocks:
        if v not in index:
            strongconnect(v)
    return sccs, succ


def _cycle_path(comp: list[str], succ, order_key) -> tuple[str, ...]:
    members = set(comp)
    start = min(comp, key=order_key)
    path = [start]
    seen = {start}
    cur = start
    while True:
        nxts = [w for w in succ[cur] if w in members]
        nxt = min(nxts, key=order_key)
        if nxt == start:
            return tuple(path)
        if nxt in seen:
            # trim to the cycle portion
            i = path.index(nxt)
            return tuple(path[i:])
        path.append(nxt)
        seen.add(nxt)
        cur = nxt


def validate_model(g: ModelGraph,
                   registry: FunctionRegistry | None = None) -> ValidationReport:
    """Check every structural invariant of the model.

    The report is empty iff the model is accepted for downstream stages.
    Diagnostics are ordered by source position for stable golden output.
    """
    registry = registry or default_registry()
    out: list[Diagnostic] = []
    _param_checks(g, registry, out)
    flat = flatten(g, registry)
    for issue in flat.issues:
        out.append(Diagnostic("error", issue.location, issue.message, line=issue.line))
    _width_checks(flat, out)

    sccs, succ = _find_loop_sccs(flat)
    decl = {p: i for i, p in enumerate(flat.blocks)}
    for comp in sorted(sccs, key=lambda c: min(decl[p] for p in c)):
        cyc = _cycle_path(comp, succ, lambda p: decl[p])
        out.append(Diagnostic("error", cyc[0],
                              "algebraic loop: cycle without a delay block",
                              cycle=cyc))

    out.sort(key=lambda d: (d.line, d.location, d.message))
    return ValidationReport(out)
