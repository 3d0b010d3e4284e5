"""Parser for the textual model format (.fdm)."""

from __future__ import annotations

import re

from .blocks import KIND_NAMES
from .graph import Block, Endpoint, Link, ModelGraph, Subsystem

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<arrow>->)
      | (?P<num>-?\d+)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<str>"[^"\n]*")
      | (?P<punct>[{}();:,.=])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"model", "block", "subsystem", "link", "input", "output", "param"}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class _Tok:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            if kind == "arrow":
                toks.append(_Tok("punct", "->", line, col))
            elif kind == "num":
                toks.append(_Tok("num", int(value), line, col))
            elif kind == "str":
                toks.append(_Tok("str", value[1:-1], line, col))
            else:
                toks.append(_Tok(kind, value, line, col))
        nl = value.count("\n")
        if nl:
            line += nl
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    toks.append(_Tok("eof", None, line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind, value=None) -> _Tok:
        t = self.next()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {t.value!r}", t.line, t.col)
        return t

    def ident(self) -> _Tok:
        t = self.next()
        if t.kind != "ident":
            raise ParseError(f"expected identifier, found {t.value!r}", t.line, t.col)
        return t

    # ---- grammar ----

    def model(self) -> ModelGraph:
        t = self.expect("ident", "model")
        name = self.ident().value
        g = ModelGraph(name, line=t.line)
        self.expect("punct", "{")
        self._scope_items(g)
        self.expect("punct", "}")
        self.expect("eof")
        return g

    def _scope_items(self, scope):
        names: set[str] = set()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.value == "}":
                return
            if t.kind != "ident" or t.value not in _KEYWORDS:
                raise ParseError(f"expected declaration, found {t.value!r}",
                                 t.line, t.col)
            kw = self.next().value
            if kw == "block":
                b = self._block()
                self._declare(names, b.id, b.line)
                scope.blocks.append(b)
            elif kw == "subsystem":
                s = self._subsystem()
                self._declare(names, s.id, s.line)
                scope.subsystems.append(s)
            elif kw == "link":
                scope.links.append(self._link(t.line))
            elif kw == "input":
                scope.inputs.append(self._port_decl())
            elif kw == "output":
                scope.outputs.append(self._port_decl())
            elif kw == "param":
                if not isinstance(scope, Subsystem):
                    raise ParseError("param is only allowed inside a subsystem",
                                     t.line, t.col)
                k, v = self._param()
                scope.params[k] = v

    def _declare(self, names: set, name: str, line: int):
        if name in names:
            raise ParseError(f"duplicate identifier {name!r}", line, 1)
        names.add(name)

    def _block(self) -> Block:
        nt = self.ident()
        self.expect("punct", ":")
        kt = self.ident()
        if kt.value not in KIND_NAMES:
            raise ParseError(f"unknown block kind {kt.value!r}", kt.line, kt.col)
        args: list = []
        if self.peek().kind == "punct" and self.peek().value == "(":
            self.next()
            while not (self.peek().kind == "punct" and self.peek().value == ")"):
                a = self.next()
                if a.kind not in ("num", "ident", "str"):
                    raise ParseError(f"bad block argument {a.value!r}", a.line, a.col)
                args.append(a.value)
                if self.peek().kind == "punct" and self.peek().value == ",":
                    self.next()
            self.expect("punct", ")")
        self.expect("punct", ";")
        params = self._check_args(kt, args)
        return Block(nt.value, kt.value, params, line=nt.line)

    def _check_args(self, kt: _Tok, args: list) -> tuple:
        kind = kt.value

        def fail(msg):
            raise ParseError(f"{kind}: {msg}", kt.line, kt.col)

        ints = [a for a in args if isinstance(a, int)]
        if kind in ("const", "gain", "delay", "quant", "mux", "demux"):
            if len(args) != 1 or len(ints) != 1:
                fail("expected one integer parameter")
        elif kind == "fir":
            if not args or len(ints) != len(args):
                fail("expected one or more integer taps")
        elif kind == "for_loop":
            if len(args) != 2 or not isinstance(args[0], int) \
                    or not isinstance(args[1], str):
                fail("expected (count, body-function)")
        elif kind == "user":
            if len(args) != 1 or not isinstance(args[0], str):
                fail("expected a function name")
        else:  # add, sub, mul, if_else, sink
            if args:
                fail("takes no parameters")
        return tuple(args)

    def _subsystem(self) -> Subsystem:
        nt = self.ident()
        s = Subsystem(nt.value, line=nt.line)
        self.expect("punct", "{")
        self._scope_items(s)
        self.expect("punct", "}")
        return s

    def _link(self, line: int) -> Link:
        src = self._endpoint()
        self.expect("punct", "->")
        dst = self._endpoint()
        self.expect("punct", ";")
        return Link(src, dst, line=line)

    def _endpoint(self) -> Endpoint:
        blk = self.ident().value
        self.expect("punct", ".")
        port = self.ident().value
        return Endpoint(blk, port)

    def _port_decl(self) -> str:
        name = self.ident().value
        self.expect("punct", ";")
        return name

    def _param(self):
        key = self.ident().value
        self.expect("punct", "=")
        t = self.next()
        if t.kind not in ("num", "str"):
            raise ParseError(f"param value must be an integer or string", t.line, t.col)
        self.expect("punct", ";")
        return key, t.value


def parse_model(text: str) -> ModelGraph:
    """Parse a complete model file.

    Name resolution is deferred to validation; only syntax, duplicate
    identifiers and unknown block kinds are rejected here.
    """
    return _Parser(text).model()
