"""Standalone single-task execution, used to check lowering soundness.

Runs one task FSM against in-memory input queues, at either API level,
without building a whole system around it.
"""

from __future__ import annotations

from collections import deque

from ..model.blocks import FunctionRegistry
from ..swsynth import ADDR_BASE, ADDR_STRIDE, AddressMap, AddrEntry, TaskFsm
from .interp import FsmRunner, SimError


class QueueIO:
    """Port bindings over plain queues; outputs are unbounded."""

    def __init__(self, inputs: dict, out_ports):
        self.inq = {p: deque(vs) for p, vs in inputs.items()}
        self.outq = {p: [] for p in out_ports}

    def can_recv(self, port: str) -> bool:
        return bool(self.inq.get(port))

    def recv(self, port: str) -> int:
        return self.inq[port].popleft()

    def can_send(self, port: str) -> bool:
        return True

    def send(self, port: str, value: int) -> None:
        self.outq[port].append(value)

    # micro level: same queues behind a register interface
    def poll_status(self, port: str, addr: int) -> int:
        bits = 2  # output space never runs out here
        if self.can_recv(port):
            bits |= 1
        return bits

    def read_data(self, port: str, addr: int, ctrl: str) -> int:
        assert ctrl == "pop"
        return self.recv(port)

    def write_data(self, port: str, addr: int, value: int, ctrl: str) -> None:
        assert ctrl == "push"
        self.send(port, value)


def standalone_address_map(fsm: TaskFsm, unit_path: str) -> AddressMap:
    entries = []
    base = ADDR_BASE
    for p in fsm.in_ports + fsm.out_ports:
        entries.append(AddrEntry("standalone", f"{unit_path}.{p}", base))
        base += ADDR_STRIDE
    return AddressMap(entries)


def run_task(fsm: TaskFsm, inputs: dict,
             registry: FunctionRegistry | None = None,
             max_steps: int = 1_000_000) -> dict:
    """Steps the FSM until it blocks on exhausted inputs; returns outputs."""
    io = QueueIO(inputs, fsm.out_ports)
    runner = FsmRunner(fsm, io, registry)
    steps = 0
    while runner.step():
        steps += 1
        if steps > max_steps:
            raise SimError("task did not quiesce; body without channel reads?")
    return {p: list(vs) for p, vs in io.outq.items()}
