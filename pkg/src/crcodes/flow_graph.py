"""
Information flow graphs for coordinated repair and exact min-cut evaluation.

Every device is three nodes (in, coor, out).  Initial devices are fed by the
source through ``in``; a repaired device receives ``beta`` on its ``in`` node
from each of its d donors' ``out`` nodes and ``beta'`` on its ``coor`` node
from the ``in`` node of each of the other t - 1 devices repaired with it.
``in -> coor`` has infinite capacity and ``coor -> out`` carries ``alpha``.

Max-flow runs on integers: finite capacities are scaled to a common
denominator, and infinity becomes a sentinel larger than any finite cut.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Optional

from .cost_model import CodeParams, CostPoint, RecoveryScenario
from .cost_model import cut_formula  # noqa: F401  (re-exported)
from .errors import InvalidHistory

INF = None  # capacity marker for infinite edges

SOURCE, INPUT, COORD, OUTPUT, COLLECTOR = "source", "input", "coordination", "output", "collector"


@dataclass(frozen=True, order=True)
class FlowNode:
    kind: str
    repair_step: int = 0
    device_index: int = 0

    def label(self) -> str:
        if self.kind in (SOURCE, COLLECTOR):
            return self.kind if self.kind == SOURCE else f"DC{self.device_index}"
        short = {INPUT: "in", COORD: "coor", OUTPUT: "out"}[self.kind]
        return f"{short}[{self.repair_step},{self.device_index}]"


S = FlowNode(SOURCE)


@dataclass
class FlowGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (tail, head, capacity or INF)
    active_outputs: set = field(default_factory=set)
    current: dict = field(default_factory=dict)  # slot -> latest output node
    collector: Optional[FlowNode] = None

    def add_node(self, node: FlowNode) -> FlowNode:
        self.nodes.append(node)
        return node

    def add_edge(self, tail: FlowNode, head: FlowNode, capacity) -> None:
        self.edges.append((tail, head, capacity))

    def add_device(self, step: int, index: int, alpha) -> tuple:
        x_in = self.add_node(FlowNode(INPUT, step, index))
        x_coor = self.add_node(FlowNode(COORD, step, index))
        x_out = self.add_node(FlowNode(OUTPUT, step, index))
        self.add_edge(x_in, x_coor, INF)
        self.add_edge(x_coor, x_out, alpha)
        return x_in, x_coor, x_out

    def attach_collector(self, outputs, index: int = 0) -> FlowNode:
        outputs = list(outputs)
        inactive = [o for o in outputs if o not in self.active_outputs]
        if inactive:
            raise InvalidHistory(f"collector cannot contact inactive devices {inactive}")
        dc = self.add_node(FlowNode(COLLECTOR, 0, index))
        for o in outputs:
            self.add_edge(o, dc, INF)
        self.collector = dc
        return dc

    def topological_order(self) -> list:
        """Kahn's algorithm; raises ValueError if the graph has a cycle."""
        indeg = {n: 0 for n in self.nodes}
        succ = {n: [] for n in self.nodes}
        for a, b, _ in self.edges:
            indeg[b] += 1
            succ[a].append(b)
        ready = deque(n for n in self.nodes if indeg[n] == 0)
        order = []
        while ready:
            n = ready.popleft()
            order.append(n)
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    ready.append(m)
        if len(order) != len(self.nodes):
            raise ValueError("flow graph contains a cycle")
        return order

    def to_dot(self) -> str:
        lines = ["digraph G {", "  rankdir=LR;"]
        for n in self.nodes:
            lines.append(f'  "{n.label()}";')
        for a, b, cap in self.edges:
            lab = "inf" if cap is INF else str(cap)
            lines.append(f'  "{a.label()}" -> "{b.label()}" [label="{lab}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RepairHistory:
    """Sequence of repairs on n physical device slots.

    Each step is ``(repaired, donors)``: the slots replaced at that step and
    the slots they download from.
    """

    params: CodeParams
    steps: tuple = ()

    def validate(self) -> None:
        p = self.params
        for i, (repaired, donors) in enumerate(self.steps):
            repaired, donors = set(repaired), set(donors)
            if len(repaired) != p.t:
                raise InvalidHistory(f"step {i}: {len(repaired)} repaired devices, expected t={p.t}")
            if len(donors) != p.d:
                raise InvalidHistory(f"step {i}: {len(donors)} donors, expected d={p.d}")
            if repaired & donors:
                raise InvalidHistory(f"step {i}: devices {sorted(repaired & donors)} both fail and donate")
            slots = set(range(p.n))
            if not repaired <= slots or not donors <= slots:
                raise InvalidHistory(f"step {i}: device index outside 0..{p.n - 1}")


def build_graph(h: RepairHistory, c: CostPoint) -> FlowGraph:
    """Information flow graph of a repair history; step 0 holds the n initial devices."""
    h.validate()
    p = h.params
    g = FlowGraph()
    g.add_node(S)
    current = {}
    for j in range(p.n):
        x_in, _, x_out = g.add_device(0, j, c.alpha)
        g.add_edge(S, x_in, INF)
        current[j] = x_out
    for step, (repaired, donors) in enumerate(h.steps, start=1):
        repaired = sorted(repaired)
        fresh = {j: g.add_device(step, j, c.alpha) for j in repaired}
        for j in repaired:
            x_in, x_coor, _ = fresh[j]
            for donor in sorted(donors):
                g.add_edge(current[donor], x_in, c.beta)
            for peer in repaired:
                if peer != j:
                    g.add_edge(fresh[peer][0], x_coor, c.beta_prime)
        for j in repaired:
            current[j] = fresh[j][2]
    g.active_outputs = set(current.values())
    g.current = current
    return g


def build_worst_case(p: CodeParams, c: CostPoint, s: RecoveryScenario) -> FlowGraph:
    """The graph whose min-cut meets the scenario's cut bound with equality.

    The collector reads u_i devices from repair group i.  Each of the t
    devices of group i downloads beta from every collector-read device of
    earlier groups and from d - sum_{j<i} u_j devices outside the read set.
    Those outside donors are dedicated initial devices, one set per
    repaired device, so no cut through them is cheaper than alpha.
    """
    s.validate(p.k, p.t)
    g = FlowGraph()
    g.add_node(S)
    init_count = 0

    def fresh_initial():
        nonlocal init_count
        x_in, _, x_out = g.add_device(0, init_count, c.alpha)
        g.add_edge(S, x_in, INF)
        init_count += 1
        return x_out

    read = []
    for i, ui in enumerate(s.u, start=1):
        group = [g.add_device(i, j, c.alpha) for j in range(p.t)]
        outside = p.d - len(read)
        for x_in, x_coor, _ in group:
            for prev in read:
                g.add_edge(prev, x_in, c.beta)
            for _ in range(outside):
                g.add_edge(fresh_initial(), x_in, c.beta)
        for j, (_, x_coor, _) in enumerate(group):
            for jj, (peer_in, _, _) in enumerate(group):
                if jj != j:
                    g.add_edge(peer_in, x_coor, c.beta_prime)
        read.extend(dev[2] for dev in group[:ui])
    g.active_outputs = set(read)
    g.attach_collector(read)
    return g


def _scale(g: FlowGraph):
    finite = [cap for _, _, cap in g.edges if cap is not INF]
    den = 1
    for cap in finite:
        den = lcm(den, Fraction(cap).denominator)
    ints = [int(Fraction(cap) * den) for cap in finite]
    big = sum(ints) + 1
    return den, big


def max_flow(g: FlowGraph, source: FlowNode, sink: FlowNode) -> Fraction:
    """Exact max-flow value by Edmonds-Karp on integer-scaled capacities."""
    den, big = _scale(g)
    index = {n: i for i, n in enumerate(g.nodes)}
    if source not in index or sink not in index:
        raise ValueError("source or sink not in graph")
    size = len(g.nodes)
    adj = [[] for _ in range(size)]
    # residual edges stored as [head, capacity, reverse position]
    for a, b, cap in g.edges:
        u, v = index[a], index[b]
        c = big if cap is INF else int(Fraction(cap) * den)
        adj[u].append([v, c, len(adj[v])])
        adj[v].append([u, 0, len(adj[u]) - 1])
    s, t = index[source], index[sink]
    flow = 0
    while True:
        parent = [None] * size
        parent[s] = (s, -1)
        q = deque([s])
        while q and parent[t] is None:
            u = q.popleft()
            for pos, (v, c, _) in enumerate(adj[u]):
                if c > 0 and parent[v] is None:
                    parent[v] = (u, pos)
                    q.append(v)
        if parent[t] is None:
            break
        push, v = None, t
        while v != s:
            u, pos = parent[v]
            c = adj[u][pos][1]
            push = c if push is None else min(push, c)
            v = u
        v = t
        while v != s:
            u, pos = parent[v]
            edge = adj[u][pos]
            edge[1] -= push
            adj[v][edge[2]][1] += push
            v = u
        flow += push
    if flow >= big:
        return float("inf")
    return Fraction(flow, den)


def min_cut(g: FlowGraph, collector: Optional[FlowNode] = None) -> Fraction:
    """Min-cut between the source and a collector (max-flow = min-cut)."""
    dc = collector if collector is not None else g.collector
    if dc is None:
        raise ValueError("graph has no collector attached")
    return max_flow(g, S, dc)


def random_history(p: CodeParams, steps: int, seed) -> RepairHistory:
    """Seeded history: t failures uniform over the slots, d donors uniform over the rest."""
    rng = random.Random(seed)
    out = []
    for _ in range(steps):
        repaired = sorted(rng.sample(range(p.n), p.t))
        rest = [j for j in range(p.n) if j not in repaired]
        donors = sorted(rng.sample(rest, p.d))
        out.append((tuple(repaired), tuple(donors)))
    return RepairHistory(p, tuple(out))
