"""Traces, stimuli and trace comparison."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class Stimulus:
    """Finite per-input value sequences; short sequences are padded."""

    values: dict[str, list[int]]
    length: int
    pad: int = 0

    def at(self, port: str, tick: int) -> int:
        seq = self.values.get(port, [])
        return seq[tick] if tick < len(seq) else self.pad

    def save(self, path) -> None:
        ports = list(self.values)
        with open(path, "w", encoding="utf-8") as f:
            f.write(",".join(ports) + "\n")
            for t in range(self.length):
                f.write(",".join(str(self.at(p, t)) for p in ports) + "\n")

    @classmethod
    def load(cls, path) -> "Stimulus":
        with open(path, encoding="utf-8") as f:
            lines = [ln.strip() for ln in f if ln.strip()]
        ports = lines[0].split(",")
        rows = [[int(v) for v in ln.split(",")] for ln in lines[1:]]
        values = {p: [row[i] for row in rows] for i, p in enumerate(ports)}
        return cls(values, len(rows))


@dataclass
class Trace:
    """Per-port timed value records, strictly increasing in time."""

    ports: dict[str, list[tuple[int, int]]]
    level: int = 0
    design: str = ""
    latency: int | None = None

    def record(self, port: str, time: int, value: int) -> None:
        recs = self.ports.setdefault(port, [])
        if recs and time <= recs[-1][0]:
            time = recs[-1][0] + 1
        recs.append((time, value))

    def values(self, port: str) -> list[int]:
        return [v for _, v in self.ports[port]]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# level {self.level}\n")
            f.write(f"# design {self.design}\n")
            if self.latency is not None:
                f.write(f"# latency {self.latency}\n")
            for port in self.ports:
                for t, v in self.ports[port]:
                    f.write(f"{t},{port},{v}\n")

    @classmethod
    def load(cls, path) -> "Trace":
        tr = cls({})
        with open(path, encoding="utf-8") as f:
            for ln in f:
                ln = ln.strip()
                if not ln:
                    continue
                if ln.startswith("#"):
                    parts = ln[1:].split()
                    if parts[0] == "level":
                        tr.level = int(parts[1])
                    elif parts[0] == "design":
                        tr.design = parts[1] if len(parts) > 1 else ""
                    elif parts[0] == "latency":
                        tr.latency = int(parts[1])
                    continue
                t, port, v = ln.split(",")
                tr.ports.setdefault(port, []).append((int(t), int(v)))
        return tr


@dataclass
class Verdict:
    passed: bool
    mode: str
    k: int | None = None
    mismatch: tuple | None = None  # (port, index, expected, actual)
    message: str = ""

    def __str__(self) -> str:
        if self.passed:
            extra = f" k={self.k}" if self.k is not None else ""
            return f"PASS [{self.mode}]{extra}"
        return f"FAIL [{self.mode}] {self.message}"


class PortSetMismatch(ValueError):
    pass


def _first_diff(a: list, b: list):
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i, x, y
    if len(a) != len(b):
        n = min(len(a), len(b))
        return n, (a[n] if len(a) > n else None), (b[n] if len(b) > n else None)
    return None


def compare_traces(a: Trace, b: Trace, mode: str = "exact",
                   expected_k: int | None = None) -> Verdict:
    """Compare two traces over the same port set.

    exact          -- identical (time, value) records.
    modulo_latency -- one constant index shift k >= 0, shared across ports,
                      with b[n + k] == a[n] on the overlapping range.  If
                      expected_k is given only that shift is accepted,
                      otherwise the smallest feasible k is reported.
    values_only    -- identical per-port value sequences, times ignored.
    """
    if set(a.ports) != set(b.ports):
        raise PortSetMismatch(
            f"port sets differ: {sorted(a.ports)} vs {sorted(b.ports)}")

    if mode == "exact":
        for port in a.ports:
            d = _first_diff(a.ports[port], b.ports[port])
            if d is not None:
                i, x, y = d
                return Verdict(False, mode, mismatch=(port, i, x, y),
                               message=f"port {port} record {i}: {x} != {y}")
        return Verdict(True, mode, k=0)

    if mode == "values_only":
        for port in a.ports:
            d = _first_diff(a.values(port), b.values(port))
            if d is not None:
                i, x, y = d
                return Verdict(False, mode, mismatch=(port, i, x, y),
                               message=f"port {port} value {i}: {x} != {y}")
        return Verdict(True, mode)

    if mode == "modulo_latency":
        av = {p: a.values(p) for p in a.ports}
        bv = {p: b.values(p) for p in b.ports}

        def fits(k: int) -> bool:
            overlap = 0
            for p in av:
                n = min(len(av[p]), len(bv[p]) - k)
                if n < 0:
                    return False
                overlap += n
                if bv[p][k:k + n] != av[p][:n]:
                    return False
            return overlap > 0

        ks = [expected_k] if expected_k is not None else \
            range(max((len(v) for v in bv.values()), default=0) + 1)
        for k in ks:
            if fits(k):
                return Verdict(True, mode, k=k)
        return Verdict(False, mode,
                       message="no constant latency shift aligns the traces")

    raise ValueError(f"unknown comparison mode {mode!r}")
