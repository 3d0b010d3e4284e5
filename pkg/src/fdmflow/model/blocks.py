"""Bit-true block semantics.

Every abstraction level in the toolchain evaluates blocks through
``step_block``, so a value computed at the functional level is reproduced
bit for bit after partitioning, behavior generation, FSM synthesis and
hardware refinement.  Samples are 32-bit two's-complement integers with
wrapping arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

INT32_MIN = -(1 << 31)
INT32_MAX = (1 << 31) - 1
_MASK = (1 << 32) - 1


def wrap32(x: int) -> int:
    """Reduce an integer to 32-bit two's complement."""
    return ((x + (1 << 31)) & _MASK) - (1 << 31)


@dataclass(frozen=True)
class UserFunction:
    name: str
    n_in: int
    n_out: int
    fn: Callable[..., tuple[int, ...]]


class FunctionRegistry:
    """Named user functions referenced by ``user(name)`` blocks.

    Shipped model files only use the built-in names, so files stay
    self-contained; host programs may register more.
    """

    def __init__(self) -> None:
        self._fns: dict[str, UserFunction] = {}

    def register(self, name: str, n_in: int, n_out: int, fn) -> None:
        self._fns[name] = UserFunction(name, n_in, n_out, fn)

    def __contains__(self, name: str) -> bool:
        return name in self._fns

    def get(self, name: str) -> UserFunction:
        return self._fns[name]


def _clip(x: int) -> int:
    return max(-(1 << 20), min((1 << 20) - 1, x))


def default_registry() -> FunctionRegistry:
    reg = FunctionRegistry()
    reg.register("inc", 1, 1, lambda x: (wrap32(x + 1),))
    reg.register("dbl", 1, 1, lambda x: (wrap32(2 * x),))
    reg.register("huff", 1, 1, lambda x: (wrap32((x << 3) ^ (x >> 2) ^ 0x2B),))
    reg.register("clip", 1, 1, lambda x: (_clip(x),))
    reg.register("frame_reader", 1, 1, lambda x: (wrap32(x ^ 0x55),))
    reg.register("pcm_writer", 1, 1, lambda x: (x,))
    reg.register("mix2", 2, 1, lambda a, b: (wrap32(a + b - (b >> 1)),))
    return reg


# kind -> (param shape, fixed input ports, fixed output ports)
# Variadic kinds (fir, mux, demux, user) are resolved by port_names().
_FIXED_PORTS = {
    "const": ((), ("out",)),
    "add": (("in1", "in2"), ("out",)),
    "sub": (("in1", "in2"), ("out",)),
    "mul": (("in1", "in2"), ("out",)),
    "gain": (("in",), ("out",)),
    "delay": (("in",), ("out",)),
    "fir": (("in",), ("out",)),
    "quant": (("in",), ("out",)),
    "if_else": (("pred", "a", "b"), ("out",)),
    "for_loop": (("in",), ("out",)),
    "sink": (("in",), ()),
}

KIND_NAMES = set(_FIXED_PORTS) | {"mux", "demux", "user"}


def port_names(kind: str, params: tuple, registry: FunctionRegistry | None = None):
    """Return (input ports, output ports) for a block kind."""
    if kind == "mux":
        n = params[0]
        return ("sel",) + tuple(f"in{i}" for i in range(n)), ("out",)
    if kind == "demux":
        n = params[0]
        return ("sel", "in"), tuple(f"out{i}" for i in range(n))
    if kind == "user":
        if registry is None or params[0] not in registry:
            # Port shape for an unresolved function; validation reports it.
            return ("in",), ("out",)
        uf = registry.get(params[0])
        ins = ("in",) if uf.n_in == 1 else tuple(f"in{i + 1}" for i in range(uf.n_in))
        outs = ("out",) if uf.n_out == 1 else tuple(f"out{i + 1}" for i in range(uf.n_out))
        return ins, outs
    return _FIXED_PORTS[kind]


def init_state(kind: str, params: tuple):
    """Zero-initialized per-block state (delay queue, fir history)."""
    if kind == "delay":
        return (0,) * params[0]
    if kind == "fir":
        return (0,) * (len(params) - 1)
    return None


def _quant(v: int, step: int) -> int:
    q = abs(v) // abs(step)
    if (v < 0) != (step < 0):
        q = -q
    return wrap32(q * step)


def step_block(kind, params, inputs, state, registry=None):
    """Fire one block for one tick: pure (inputs, state) -> (outputs, state').

    All non-delay kinds have zero algorithmic delay; delay(k) emits the
    oldest queued sample and enqueues the input.
    """
    if kind == "const":
        return (wrap32(params[0]),), state
    if kind == "add":
        return (wrap32(inputs[0] + inputs[1]),), state
    if kind == "sub":
        return (wrap32(inputs[0] - inputs[1]),), state
    if kind == "mul":
        return (wrap32(inputs[0] * inputs[1]),), state
    if kind == "gain":
        return (wrap32(params[0] * inputs[0]),), state
    if kind == "delay":
        return (state[0],), state[1:] + (inputs[0],)
    if kind == "fir":
        acc = params[0] * inputs[0]
        for c, h in zip(params[1:], state):
            acc += c * h
        new = (inputs[0],) + state[:-1] if state else state
        return (wrap32(acc),), new
    if kind == "quant":
        return (_quant(inputs[0], params[0]),), state
    if kind == "if_else":
        return (inputs[1] if inputs[0] != 0 else inputs[2],), state
    if kind == "for_loop":
        n, fname = params
        fn = registry.get(fname).fn
        v = inputs[0]
        for _ in range(n):
            v = wrap32(fn(v)[0])
        return (v,), state
    if kind == "mux":
        n = params[0]
        return (inputs[1 + inputs[0] % n],), state
    if kind == "demux":
        n = params[0]
        sel = inputs[0] % n
        return tuple(inputs[1] if i == sel else 0 for i in range(n)), state
    if kind == "user":
        uf = registry.get(params[0])
        outs = uf.fn(*inputs)
        return tuple(wrap32(v) for v in outs), state
    if kind == "sink":
        return (), state
    raise ValueError(f"unknown block kind {kind!r}")
