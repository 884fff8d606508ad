"""Full-universe transition systems and the analyses built on them.

The transition system of a program has one node per universe state, arbitrary
initial states included, because stabilization properties quantify over the
whole universe rather than a reachable fragment. On top of the raw graph this
module provides SCC condensation (bottom components are the finite-state
stand-in for eventual behavior), terminal detection, cycle search restricted
to arbitrary node and edge sets, reproducible simulation runs, and the
mapping of computations and whole systems to specification sequences and
graphs with stuttering eliminated.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from . import kernel
from .kernel import ModelError, Program, Signature, State

POLICIES = ("uniform-random", "round-robin")


class TransitionSystem:
    """The labeled transition graph over a program's full state universe.

    Nodes are state ids (the canonical mixed-radix encoding); `adj[i]` lists
    `(position, action name, target id)` triples in canonical action order.
    Distinct actions with the same source and target keep separate edges;
    self-loops are retained.
    """

    __slots__ = ("program", "signature", "states", "adj")

    def __init__(self, program: Program, states, adj):
        self.program = program
        self.signature = program.signature
        self.states = states
        self.adj = adj

    @property
    def size(self) -> int:
        return len(self.states)

    def state(self, i: int) -> State:
        return self.states[i]

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj)

    def __repr__(self):
        return "TransitionSystem(%r, %d states, %d edges)" % (
            self.program.name, self.size, self.edge_count())


def build_transition_system(program: Program,
                            cap: Optional[int] = None) -> TransitionSystem:
    """Materialize the complete transition graph, one node per universe
    state. Refuses universes above the size cap."""
    states = list(kernel.universe(program, cap))
    adj = []
    for s in states:
        row = []
        for pos, name in kernel.enabled_actions(program, s):
            t = kernel.apply(program, s, pos, name)
            row.append((pos, name, t.index))
        adj.append(tuple(row))
    return TransitionSystem(program, tuple(states), tuple(adj))


# --------------------------------------------------------------------------
# Strongly connected components.

class Condensation:
    """SCC condensation of a transition system.

    Components are emitted in reverse topological order (every edge of the
    component DAG points from a higher component id to a lower one), so
    bottom components cluster at the low ids. A singleton component is
    trivial when its state has no self-loop.
    """

    __slots__ = ("components", "comp_of", "comp_edges", "trivial", "bottoms")

    def __init__(self, components, comp_of, comp_edges, trivial, bottoms):
        self.components = components
        self.comp_of = comp_of
        self.comp_edges = comp_edges
        self.trivial = trivial
        self.bottoms = bottoms

    def __repr__(self):
        return "Condensation(%d components, %d bottom)" % (
            len(self.components), len(self.bottoms))


def condense(ts: TransitionSystem) -> Condensation:
    """Tarjan's algorithm, iterative to survive deep universes."""
    n = ts.size
    UNSEEN = -1
    index = [UNSEEN] * n
    low = [0] * n
    on_stack = bytearray(n)
    scc_stack: list[int] = []
    comp_of = [0] * n
    components: list[tuple[int, ...]] = []
    counter = 0
    for root in range(n):
        if index[root] != UNSEEN:
            continue
        work = [(root, 0)]
        while work:
            v, ei = work[-1]
            if ei == 0:
                index[v] = low[v] = counter
                counter += 1
                scc_stack.append(v)
                on_stack[v] = 1
            recurse = False
            adj = ts.adj[v]
            while ei < len(adj):
                w = adj[ei][2]
                ei += 1
                if index[w] == UNSEEN:
                    work[-1] = (v, ei)
                    work.append((w, 0))
                    recurse = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if recurse:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = scc_stack.pop()
                    on_stack[w] = 0
                    comp_of[w] = len(components)
                    comp.append(w)
                    if w == v:
                        break
                components.append(tuple(sorted(comp)))
    comp_edges = [set() for _ in components]
    has_loop = [False] * len(components)
    for s in range(n):
        c = comp_of[s]
        for _, _, t in ts.adj[s]:
            if comp_of[t] == c:
                has_loop[c] = True
            else:
                comp_edges[c].add(comp_of[t])
    trivial = tuple(
        len(comp) == 1 and not has_loop[c]
        for c, comp in enumerate(components))
    bottoms = tuple(c for c, out in enumerate(comp_edges) if not out)
    return Condensation(
        tuple(components), tuple(comp_of),
        tuple(tuple(sorted(e)) for e in comp_edges), trivial, bottoms)


def terminals(ts: TransitionSystem) -> list[State]:
    """States with no enabled action, in canonical order."""
    return [ts.states[i] for i in range(ts.size) if not ts.adj[i]]


# --------------------------------------------------------------------------
# Cycle search.

@dataclass(frozen=True)
class Cycle:
    """A concrete cycle: labels[i] takes states[i] to states[(i+1) % k],
    so it replays through the kernel."""

    states: tuple[State, ...]
    labels: tuple[tuple[int, str], ...]

    def __len__(self):
        return len(self.states)


def find_cycle(ts: TransitionSystem, nodes: Iterable[int],
               edge_ok: Optional[Callable[[int, int, str, int], bool]] = None
               ) -> Optional[Cycle]:
    """First cycle in the subgraph induced by the given node ids and edge
    filter (edge_ok(source, position, action, target)), or None. Self-loops
    count as cycles of length one."""
    keep = set(nodes)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {v: WHITE for v in keep}
    sub = {}
    for v in keep:
        sub[v] = [
            (pos, name, t) for pos, name, t in ts.adj[v]
            if t in keep and (edge_ok is None or edge_ok(v, pos, name, t))]
    in_label: dict[int, tuple[int, str]] = {}
    for start in sorted(keep):
        if color[start] != WHITE:
            continue
        color[start] = GRAY
        path = [(start, 0)]
        while path:
            v, ei = path[-1]
            edges = sub[v]
            if ei < len(edges):
                path[-1] = (v, ei + 1)
                pos, name, w = edges[ei]
                if color[w] == GRAY:
                    at = next(k for k, (u, _) in enumerate(path) if u == w)
                    ids = [u for u, _ in path[at:]]
                    labels = [in_label[u] for u in ids[1:]] + [(pos, name)]
                    return Cycle(
                        tuple(ts.states[u] for u in ids), tuple(labels))
                if color[w] == WHITE:
                    color[w] = GRAY
                    in_label[w] = (pos, name)
                    path.append((w, 0))
            else:
                color[v] = BLACK
                path.pop()
    return None


def cycles_outside(ts: TransitionSystem,
                   pred: Callable[[State], bool]) -> Optional[Cycle]:
    """A cycle all of whose states violate the predicate, or None.

    Under the no-fairness daemon such a cycle is a complete counterexample
    to convergence: a maximal computation may ride it forever without ever
    entering the predicate."""
    nodes = [i for i in range(ts.size) if not pred(ts.states[i])]
    return find_cycle(ts, nodes)


# --------------------------------------------------------------------------
# Simulation.

@dataclass(frozen=True)
class Computation:
    """A simulated run. labels[i] takes states[i] to states[i+1]. When the
    run revisits a state, the repeat occurrence is kept as the final state
    and lasso_start gives the index of its first occurrence: the suffix
    states[lasso_start:] is a cycle the daemon may repeat forever."""

    program: Program
    states: tuple[State, ...]
    labels: tuple[tuple[int, str], ...]
    lasso_start: Optional[int]
    hit_terminal: bool

    @property
    def maximal(self) -> bool:
        """True when the run is a complete computation: it either ended in
        a terminal state or closed a lasso (an infinite computation)."""
        return self.hit_terminal or self.lasso_start is not None

    def __len__(self):
        return len(self.states)


def run(program: Program, start: State, steps: int, seed: int = 0,
        policy: str = "uniform-random") -> Computation:
    """Simulate the central daemon for at most `steps` transitions.

    uniform-random draws among the enabled actions with a seeded generator;
    round-robin keeps a rotating pointer over the canonical action list and
    fires the first enabled action at or after it. Stops early at a terminal
    state or when a state repeats (the run is then a lasso and already shows
    everything an extension could).
    """
    if start.sig != program.signature:
        raise ModelError("start state does not belong to program %r"
                         % program.name)
    if steps < 0:
        raise ModelError("steps must be nonnegative")
    if policy not in POLICIES:
        raise ModelError("unknown policy %r; choose from %s"
                         % (policy, ", ".join(POLICIES)))
    rng = random.Random(seed)
    order = program.action_order
    pointer = 0
    states = [start]
    labels: list[tuple[int, str]] = []
    seen = {start.values: 0}
    lasso_start = None
    hit_terminal = False
    current = start
    while len(labels) < steps:
        enabled = kernel.enabled_actions(program, current)
        if not enabled:
            hit_terminal = True
            break
        if policy == "uniform-random":
            pos, name = rng.choice(enabled)
        else:
            enabled_set = set(enabled)
            for k in range(len(order)):
                cand = order[(pointer + k) % len(order)]
                if cand in enabled_set:
                    pos, name = cand
                    pointer = (pointer + k + 1) % len(order)
                    break
        current = kernel.apply(program, current, pos, name)
        states.append(current)
        labels.append((pos, name))
        if current.values in seen:
            lasso_start = seen[current.values]
            break
        seen[current.values] = len(states) - 1
    return Computation(program, tuple(states), tuple(labels),
                       lasso_start, hit_terminal)


# --------------------------------------------------------------------------
# Specification images.

@dataclass(frozen=True)
class SpecSequence:
    """A computation's image: mapped states with stuttering eliminated.
    stutter_divergent marks an infinite computation whose image is eventually
    constant, i.e. one that stops making visible progress."""

    states: tuple[State, ...]
    stutter_divergent: bool

    def __len__(self):
        return len(self.states)


def image(comp: Computation, mapping) -> SpecSequence:
    """Map a computation to specification states and collapse consecutive
    repeats. The lasso suffix diverges when its image is a single state."""
    bound = mapping.bind(comp.program)
    mapped = [bound(s) for s in comp.states]
    seq = [mapped[0]]
    for m in mapped[1:]:
        if m != seq[-1]:
            seq.append(m)
    divergent = False
    if comp.lasso_start is not None:
        tail = mapped[comp.lasso_start:]
        divergent = all(m == tail[0] for m in tail)
    return SpecSequence(tuple(seq), divergent)


@dataclass(frozen=True)
class InducedSpecification:
    """The image of a whole transition system: every specification state
    with a preimage, and every non-stutter image of a program edge. The
    program ideally stabilizes, by construction, to the specification this
    graph denotes."""

    signature: Signature
    nodes: frozenset
    edges: frozenset


def induced_specification(program: Program, mapping,
                          cap: Optional[int] = None) -> InducedSpecification:
    ts = build_transition_system(program, cap)
    bound = mapping.bind(program)
    mapped = [bound(s) for s in ts.states]
    nodes = frozenset(mapped)
    edges = set()
    for i in range(ts.size):
        ms = mapped[i]
        for _, _, t in ts.adj[i]:
            mt = mapped[t]
            if ms != mt:
                edges.add((ms, mt))
    return InducedSpecification(bound.signature, nodes, frozenset(edges))


# --------------------------------------------------------------------------
# DOT export.

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(ts: TransitionSystem,
           color_pred: Optional[Callable[[State], bool]] = None,
           name: str = "ts") -> str:
    """Graphviz source for the transition system. Nodes are labeled with
    canonical state text; edges with `position:action`. States satisfying
    color_pred are filled."""
    out = ["digraph %s {" % name, "  rankdir=LR;",
           '  node [shape=box, fontname="monospace"];']
    for i, s in enumerate(ts.states):
        attrs = ['label="%s"' % _dot_escape(s.text())]
        if color_pred is not None and color_pred(s):
            attrs.append('style=filled, fillcolor=lightblue')
        out.append("  s%d [%s];" % (i, ", ".join(attrs)))
    for i in range(ts.size):
        for pos, action, t in ts.adj[i]:
            out.append('  s%d -> s%d [label="%d:%s"];' % (i, t, pos, action))
    out.append("}")
    return "\n".join(out) + "\n"


def condensation_to_dot(ts: TransitionSystem, cond: Condensation,
                        name: str = "condensation") -> str:
    """Graphviz source for the SCC DAG. Bottom components get a double
    border; labels show the component size and one sample state."""
    out = ["digraph %s {" % name, "  rankdir=LR;",
           '  node [shape=box, fontname="monospace"];']
    bottoms = set(cond.bottoms)
    for c, comp in enumerate(cond.components):
        sample = ts.states[comp[0]].text()
        label = "%d state%s\\n%s" % (
            len(comp), "" if len(comp) == 1 else "s", _dot_escape(sample))
        attrs = ['label="%s"' % label]
        if c in bottoms:
            attrs.append("peripheries=2")
        out.append("  c%d [%s];" % (c, ", ".join(attrs)))
    for c, targets in enumerate(cond.comp_edges):
        for t in targets:
            out.append("  c%d -> c%d;" % (c, t))
    out.append("}")
    return "\n".join(out) + "\n"
