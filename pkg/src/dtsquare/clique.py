"""Round-based congested clique simulator with cost accounting.

``n`` nodes, ids ``0..n-1``.  In a direct round every node may send one
message of at most ``budget_bits`` bits to every other node.  Routing of
up to ``n`` messages per sender and receiver, and sorting of up to ``n``
keys per node, are provided as black-box primitives: the simulator
delivers their results exactly, enforces their preconditions, and charges
a fixed number of rounds per call.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cmp_to_key
from math import ceil, log2
from typing import Callable, Optional


class ModelViolation(RuntimeError):
    """A node program broke a rule of the model."""

    def __init__(self, kind, node, detail):
        super().__init__(f"{kind} at node {node}: {detail}")
        self.kind = kind
        self.node = node


@dataclass(frozen=True)
class Message:
    src: int
    dst: int
    payload: tuple


def int_bits(v: int) -> int:
    return max(1, abs(v).bit_length()) + (v < 0)


def payload_bits(payload) -> int:
    """Size of a tuple of integers: each field's magnitude bits plus a sign bit
    for negative fields."""
    if isinstance(payload, int):
        return int_bits(payload)
    return sum(int_bits(v) for v in payload)


def log_n_bits(n: int) -> int:
    return max(1, ceil(log2(n)))


@dataclass
class PhaseCost:
    rounds: int = 0
    messages: int = 0
    bits: int = 0

    def to_dict(self):
        return {"rounds": self.rounds, "messages": self.messages, "bits": self.bits}


@dataclass
class CostLedger:
    rounds: int = 0
    messages: int = 0
    bits: int = 0
    phases: dict = field(default_factory=dict)

    def charge(self, phase, rounds, messages, bits):
        self.rounds += rounds
        self.messages += messages
        self.bits += bits
        cost = self.phases.setdefault(phase, PhaseCost())
        cost.rounds += rounds
        cost.messages += messages
        cost.bits += bits

    def snapshot(self) -> "CostLedger":
        return CostLedger(self.rounds, self.messages, self.bits,
                          {k: PhaseCost(**v.to_dict()) for k, v in self.phases.items()})


@dataclass
class RunReport:
    n: int
    rounds: int
    messages: int
    bits: int
    phases: dict
    levels_used: int = 0
    active_per_level: list = field(default_factory=list)
    resolved_per_level: list = field(default_factory=list)
    rounds_per_level: list = field(default_factory=list)
    fixed_rounds: int = 0
    max_site_degree: int = 0
    loop_rounds: int = 0
    threshold: int = 0
    active_bound_exceeded: bool = False
    trace_digest: str = ""

    def to_dict(self):
        return {
            "n": self.n,
            "rounds": self.rounds,
            "messages": self.messages,
            "bits": self.bits,
            "levels_used": self.levels_used,
            "active_per_level": list(self.active_per_level),
            "resolved_per_level": list(self.resolved_per_level),
            "rounds_per_level": list(self.rounds_per_level),
            "fixed_rounds": self.fixed_rounds,
            "max_site_degree": self.max_site_degree,
            "site_degree_exceeds_n": self.max_site_degree > self.n,
            "loop_rounds": self.loop_rounds,
            "threshold": self.threshold,
            "active_bound_exceeded": self.active_bound_exceeded,
            "phases": {k: v.to_dict() for k, v in sorted(self.phases.items())},
            "trace_digest": self.trace_digest,
        }


class CongestedClique:
    def __init__(self, n, *, cmsg=8, r_route=4, r_sort=6):
        if n < 2:
            raise ValueError("a clique needs at least two nodes")
        self.n = n
        self.cmsg = cmsg
        self.r_route = r_route
        self.r_sort = r_sort
        self.budget_bits = cmsg * log_n_bits(n)
        self.ledger = CostLedger()
        self._phase = "setup"
        self._trace = hashlib.sha256()

    # -- bookkeeping ------------------------------------------------------

    @contextmanager
    def phase(self, name):
        prev, self._phase = self._phase, name
        try:
            yield
        finally:
            self._phase = prev

    def _record(self, kind, items):
        self._trace.update(repr((kind, self._phase, items)).encode())

    @property
    def trace_digest(self) -> str:
        return self._trace.hexdigest()

    def _check_node(self, i, where):
        if not (0 <= i < self.n):
            raise ModelViolation("bad-node", i, f"no such node ({where})")

    def _check_size(self, node, payload):
        bits = payload_bits(payload)
        if bits > self.budget_bits:
            raise ModelViolation("oversize", node,
                                 f"{bits}-bit payload exceeds {self.budget_bits}-bit budget")
        return bits

    # -- primitives ---------------------------------------------------------

    def direct_round(self, outboxes):
        """One synchronous round; ``outboxes[i]`` lists node i's messages."""
        if len(outboxes) != self.n:
            raise ValueError(f"expected {self.n} outboxes, got {len(outboxes)}")
        inboxes = [[] for _ in range(self.n)]
        count = bits = 0
        for i, box in enumerate(outboxes):
            dsts = set()
            for m in box:
                if m.src != i:
                    raise ModelViolation("forged-source", i, f"message claims source {m.src}")
                self._check_node(m.dst, "destination")
                if m.dst == i:
                    raise ModelViolation("self-message", i, "message addressed to itself")
                if m.dst in dsts:
                    raise ModelViolation("duplicate-destination", i,
                                         f"second message to node {m.dst} in one round")
                dsts.add(m.dst)
                bits += self._check_size(i, m.payload)
                inboxes[m.dst].append(m)
                count += 1
        self.ledger.charge(self._phase, 1, count, bits)
        self._record("direct", [(m.src, m.dst, m.payload) for box in inboxes for m in box])
        return inboxes

    def broadcast_scalar(self, values):
        """Every node sends its value to every other node in one direct round;
        returns the list of all values, which every node now knows."""
        if len(values) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(values)}")
        outboxes = [[Message(i, j, tuple(v) if not isinstance(v, int) else (v,))
                     for j in range(self.n) if j != i] for i, v in enumerate(values)]
        self.direct_round(outboxes)
        return list(values)

    def route(self, messages):
        """Relaxed information distribution: each node sends and receives at
        most ``n`` messages; delivered exactly, charged ``r_route`` rounds."""
        msgs = list(messages)
        sent = [0] * self.n
        recv = [0] * self.n
        bits = 0
        for m in msgs:
            self._check_node(m.src, "source")
            self._check_node(m.dst, "destination")
            if m.src == m.dst:
                raise ModelViolation("self-message", m.src, "routed message addressed to itself")
            bits += self._check_size(m.src, m.payload)
            sent[m.src] += 1
            recv[m.dst] += 1
        for i in range(self.n):
            if sent[i] > self.n:
                raise ModelViolation("send-quota", i, f"sends {sent[i]} > n={self.n} messages")
            if recv[i] > self.n:
                raise ModelViolation("receive-quota", i, f"receives {recv[i]} > n={self.n} messages")
        inboxes = [[] for _ in range(self.n)]
        for m in sorted(msgs, key=lambda m: m.src):
            inboxes[m.dst].append(m)
        self.ledger.charge(self._phase, self.r_route, len(msgs), bits)
        self._record("route", [(m.src, m.dst, m.payload) for box in inboxes for m in box])
        return inboxes

    def route_batched(self, messages):
        """Deliver O(n) messages per node as several routing instances.

        Nodes first learn their receive loads (one direct round of per-pair
        counts) and everyone's loads (one broadcast), then run as many
        instances of ``route`` as a greedy split needs.
        """
        msgs = list(messages)
        pair = {}
        for m in msgs:
            pair[(m.src, m.dst)] = pair.get((m.src, m.dst), 0) + 1
        outboxes = [[] for _ in range(self.n)]
        for (s, d), c in sorted(pair.items()):
            if s == d:
                raise ModelViolation("self-message", s, "routed message addressed to itself")
            self._check_node(s, "source")
            self._check_node(d, "destination")
            outboxes[s].append(Message(s, d, (c,)))
        self.direct_round(outboxes)
        send = [0] * self.n
        recv = [0] * self.n
        for (s, d), c in pair.items():
            send[s] += c
            recv[d] += c
        self.broadcast_scalar([(send[i], recv[i]) for i in range(self.n)])

        batches = []
        for m in msgs:
            for b in batches:
                if b[1][m.src] < self.n and b[2][m.dst] < self.n:
                    break
            else:
                b = ([], [0] * self.n, [0] * self.n)
                batches.append(b)
            b[0].append(m)
            b[1][m.src] += 1
            b[2][m.dst] += 1
        inboxes = [[] for _ in range(self.n)]
        for b in batches:
            for i, box in enumerate(self.route(b[0])):
                inboxes[i].extend(box)
        return inboxes

    def sort(self, batches, key: Optional[Callable] = None, slots=1,
             cmp: Optional[Callable] = None):
        """Globally sort keys held at the nodes.

        Node i may hold at most ``slots * n`` keys and receives the keys of
        global ranks ``[i*slots*n, (i+1)*slots*n)``.  ``slots > 1`` models
        an O(n)-keys-per-node instance and is charged ``slots * r_sort``.
        Keys are integer tuples; ``key``/``cmp`` override the order.
        """
        if len(batches) != self.n:
            raise ValueError(f"expected {self.n} batches, got {len(batches)}")
        cap = slots * self.n
        allkeys = []
        bits = 0
        for i, b in enumerate(batches):
            if len(b) > cap:
                raise ModelViolation("sort-capacity", i, f"holds {len(b)} > {cap} keys")
            for k in b:
                bits += self._check_size(i, k)
                allkeys.append(k)
        if cmp is not None:
            key = cmp_to_key(cmp)
        order = sorted(allkeys, key=key)
        kf = key or (lambda k: k)
        for a, b in zip(order, order[1:]):
            if not (kf(a) < kf(b)):
                raise ModelViolation("duplicate-key", -1, f"key {a} occurs twice")
        out = [order[i * cap:(i + 1) * cap] for i in range(self.n)]
        self.ledger.charge(self._phase, slots * self.r_sort, len(allkeys), bits)
        self._record("sort", out)
        return out

    def run_report(self, ledger: Optional[CostLedger] = None) -> RunReport:
        led = ledger or self.ledger
        return RunReport(n=self.n, rounds=led.rounds, messages=led.messages, bits=led.bits,
                         phases={k: PhaseCost(**v.to_dict()) for k, v in led.phases.items()},
                         trace_digest=self.trace_digest)
