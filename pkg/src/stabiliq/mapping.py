"""Program-to-specification state mappings and merge-closure analysis.

A specification talks about external variables only. A StateMapping sends
every program state to one specification state, either structurally
(identical, projection) or through a per-process rule (the conflict-manager
highest-identifier rule, the alternator enabled-rule).

The second half of this module is the impossibility engine. A mapping must be
merge-symmetric: whenever a specification state can be assembled so that each
position's extended window of external variables already occurs in some mapped
state, the assembled state must itself have a program preimage. Iterating
that assembly step to a fixpoint yields the merge closure of a state set, and
a specification whose closure of allowed states reaches a disallowed state
admits no ideally stabilizing program at all.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from . import kernel
from .kernel import BOOL, Domain, ModelError, Program, Signature, State


class MappingError(ModelError):
    """A mapping cannot be bound to the given program."""


class BoundMapping:
    """A mapping specialized to one program: a target signature plus a
    callable from program states to specification states."""

    __slots__ = ("signature", "_fn")

    def __init__(self, signature: Signature, fn: Callable[[State], State]):
        self.signature = signature
        self._fn = fn

    def __call__(self, state: State) -> State:
        return self._fn(state)


def external_signature(program: Program) -> Signature:
    """The specification signature of a program: its external (input and
    output) variables in canonical order."""
    slots = [(p.index, v.name, v.domain)
             for p in program.processes for v in p.vars if v.external]
    if not slots:
        raise MappingError(
            "program %r has no external variables" % program.name)
    return Signature(slots)


class StateMapping:
    """Base class; subclasses override bind()."""

    def bind(self, program: Program) -> BoundMapping:
        raise NotImplementedError


class IdenticalMapping(StateMapping):
    """Specification state = program state. Only available when every
    program variable is external."""

    def bind(self, program: Program) -> BoundMapping:
        for proc in program.processes:
            for v in proc.vars:
                if not v.external:
                    raise MappingError(
                        "identical mapping needs all variables external; "
                        "%s.p%d is internal" % (v.name, proc.index))
        return BoundMapping(program.signature, lambda s: s)


class ProjectionMapping(StateMapping):
    """Specification state = restriction of the program state to the named
    external variables."""

    def __init__(self, names: Iterable[str]):
        self.names = tuple(names)
        if not self.names:
            raise MappingError("projection needs at least one variable name")

    def bind(self, program: Program) -> BoundMapping:
        wanted = set(self.names)
        found = set()
        keep = []
        for i, (pos, name, dom) in enumerate(program.signature.slots):
            if name not in wanted:
                continue
            if not program.process(pos).var(name).external:
                raise MappingError(
                    "projection names internal variable %s.p%d" % (name, pos))
            found.add(name)
            keep.append(i)
        missing = wanted - found
        if missing:
            raise MappingError(
                "projection names undeclared variables: %s"
                % ", ".join(sorted(missing)))
        sig = Signature(program.signature.slots[i] for i in keep)
        keep = tuple(keep)

        def fn(state: State) -> State:
            return State(sig, tuple(state.values[i] for i in keep))

        return BoundMapping(sig, fn)


class PerProcessBoolMapping(StateMapping):
    """One boolean output per position, computed by an arbitrary rule
    rule(program, state, position) -> bool. The workhorse for test fixtures
    and deliberately broken mappings."""

    def __init__(self, rule: Callable[[Program, State, int], bool],
                 output: str = "in"):
        self.rule = rule
        self.output = output

    def bind(self, program: Program) -> BoundMapping:
        sig = Signature((p.index, self.output, BOOL) for p in program.processes)
        rule = self.rule
        positions = tuple(p.index for p in program.processes)

        def fn(state: State) -> State:
            return State(sig, tuple(
                1 if rule(program, state, pos) else 0 for pos in positions))

        return BoundMapping(sig, fn)


class HighestIdMapping(StateMapping):
    """The conflict-manager rule: position p's output is true when p's
    access bit is set and no accessing chain neighbor has a larger process
    identifier."""

    def __init__(self, access_var: str = "access", output: str = "in"):
        self.access_var = access_var
        self.output = output

    def bind(self, program: Program) -> BoundMapping:
        sig = Signature((p.index, self.output, BOOL) for p in program.processes)
        psig = program.signature
        slots = []
        for proc in program.processes:
            if self.access_var not in {v.name for v in proc.vars}:
                raise MappingError(
                    "process %d lacks variable %r" % (proc.index, self.access_var))
            if proc.var(self.access_var).domain.values != BOOL.values:
                raise MappingError("%r must be boolean" % self.access_var)
            slots.append(psig.slot(proc.index, self.access_var))
        pids = [p.pid for p in program.processes]
        n = program.n

        def fn(state: State) -> State:
            out = []
            for i in range(n):
                mine = state.values[slots[i]] == 1
                if mine:
                    for j in (i - 1, i + 1):
                        if 0 <= j < n and state.values[slots[j]] == 1 \
                                and pids[j] > pids[i]:
                            mine = False
                            break
                out.append(1 if mine else 0)
            return State(sig, tuple(out))

        return BoundMapping(sig, fn)


class EnabledOutputMapping(StateMapping):
    """The alternator rule: position p's output is true exactly when some
    action of process p is enabled."""

    def __init__(self, output: str = "in"):
        self.output = output

    def bind(self, program: Program) -> BoundMapping:
        sig = Signature((p.index, self.output, BOOL) for p in program.processes)
        procs = program.processes

        def fn(state: State) -> State:
            out = tuple(
                1 if any(kernel.eval_guard(program, p.index, a.guard, state.values)
                         for a in p.actions) else 0
                for p in procs)
            return State(sig, out)

        return BoundMapping(sig, fn)


def map_state(mapping: StateMapping, program: Program, state: State) -> State:
    """Map one program state; binds on every call, so prefer bind() in loops."""
    return mapping.bind(program)(state)


def image_of_universe(program: Program, mapping: StateMapping,
                      cap: Optional[int] = None) -> frozenset:
    """The set of specification states with at least one program preimage."""
    bound = mapping.bind(program)
    return frozenset(bound(s) for s in kernel.universe(program, cap))


# --------------------------------------------------------------------------
# Merge closure.
#
# The extended external window of position p covers the external variables
# of p and its chain neighbors (2 positions wide at the chain ends). A
# candidate state is mergeable from a set when, for every position, some
# member of the set agrees with the candidate on that whole window; the
# candidate is then the consistent assembly of those members.

def _window_table(sig: Signature):
    return {pos: sig.window_slots(pos) for pos in sig.positions}


def _resolve_signature(states, signature):
    states = list(states)
    if signature is None:
        if not states:
            raise ModelError(
                "cannot infer a signature from an empty state set; pass one")
        signature = states[0].sig
    for s in states:
        if s.sig != signature:
            raise ModelError("spec states use mismatched signatures")
    return states, signature


def merge_closure_generations(states, signature: Optional[Signature] = None
                              ) -> dict:
    """Merge closure with provenance: maps each member of the closure to the
    iteration that admitted it (0 for the inputs). Breadth-first, so every
    state's generation is minimal."""
    states, sig = _resolve_signature(states, signature)
    windows = _window_table(sig)
    positions = sig.positions
    gens: dict = {}
    win_sets = {p: set() for p in positions}
    for s in states:
        if s not in gens:
            gens[s] = 0
            for p in positions:
                win_sets[p].add(tuple(s.values[i] for i in windows[p]))
    if not gens:
        return gens
    pending = [c for c in sig.states() if c not in gens]
    gen = 0
    while pending:
        gen += 1
        admitted = [
            c for c in pending
            if all(tuple(c.values[i] for i in windows[p]) in win_sets[p]
                   for p in positions)]
        if not admitted:
            break
        for c in admitted:
            gens[c] = gen
            for p in positions:
                win_sets[p].add(tuple(c.values[i] for i in windows[p]))
        dropped = {c.values for c in admitted}
        pending = [c for c in pending if c.values not in dropped]
    return gens


def merge_closure(states, signature: Optional[Signature] = None) -> frozenset:
    """The least superset of states closed under extended-window assembly."""
    return frozenset(merge_closure_generations(states, signature))


def check_merge_symmetry(program: Program, mapping: StateMapping,
                         spec_states=None) -> Optional[State]:
    """Search for a merge-symmetry violation.

    A violation is a specification state that is mergeable from the given
    state set (default: the image of the program's universe) yet has no
    program preimage. Returns the first violating state in canonical order,
    or None when the mapping is merge-symmetric over that set.
    """
    bound = mapping.bind(program)
    sig = bound.signature
    image = set()
    for s in kernel.universe(program):
        image.add(bound(s))
    if spec_states is None:
        base = image
    else:
        base, _ = _resolve_signature(spec_states, sig)
    windows = _window_table(sig)
    positions = sig.positions
    win_sets = {
        p: {tuple(s.values[i] for i in windows[p]) for s in base}
        for p in positions}
    for c in sig.states():
        if c in image:
            continue
        if all(tuple(c.values[i] for i in windows[p]) in win_sets[p]
               for p in positions):
            return c
    return None


@dataclass(frozen=True)
class PossibilityResult:
    """Outcome of the ideal-stabilization necessary-condition check.

    possible=False comes with a witness: a disallowed state inside the merge
    closure of the allowed set, at the smallest generation that reaches
    any disallowed state. possible=True asserts only that the necessary
    condition holds for the supplied allowed set, not that an ideally
    stabilizing program exists.
    """

    possible: bool
    witness: Optional[State]
    generation: Optional[int]
    closure_size: int
    allowed_size: int
    universe_size: int


def check_ideal_possibility(allowed, disallowed,
                            signature: Optional[Signature] = None
                            ) -> PossibilityResult:
    """Decide whether any program can ideally stabilize to a specification
    whose allowed states are exactly `allowed`.

    The two sets must partition the specification universe. Impossible means
    the merge closure of the allowed set contains a disallowed state: any
    merge-symmetric mapping would be forced to give that state a program
    preimage, so no program confines itself to the allowed set.
    """
    allowed = list(allowed)
    disallowed = list(disallowed)
    _, sig = _resolve_signature(allowed + disallowed, signature)
    allowed_set = frozenset(allowed)
    disallowed_set = frozenset(disallowed)
    overlap = allowed_set & disallowed_set
    if overlap:
        raise ModelError(
            "allowed and disallowed overlap, e.g. %s"
            % min(overlap, key=lambda s: s.values).text())
    if len(allowed_set) + len(disallowed_set) != sig.size:
        raise ModelError(
            "allowed (%d) and disallowed (%d) do not partition the %d-state "
            "specification universe"
            % (len(allowed_set), len(disallowed_set), sig.size))
    gens = merge_closure_generations(allowed_set, sig)
    hits = [(g, s.values, s) for s, g in gens.items() if s in disallowed_set]
    if hits:
        g, _, witness = min(hits)
        return PossibilityResult(False, witness, g, len(gens),
                                 len(allowed_set), sig.size)
    return PossibilityResult(True, None, None, len(gens),
                             len(allowed_set), sig.size)


# --------------------------------------------------------------------------
# Spec-state set text files: one state per line, position-qualified
# `var.pK=value` tokens in canonical slot order. Blank lines and #-comments
# are ignored. Signatures are inferred from the observed labels and values,
# so a pair of files that partitions a universe is self-describing.

def format_spec_states(states, signature: Optional[Signature] = None) -> str:
    states, sig = _resolve_signature(states, signature)
    lines = []
    for s in sorted(states, key=lambda s: s.values):
        parts = []
        for (pos, name, dom), v in zip(sig.slots, s.values):
            parts.append("%s.p%d=%s" % (name, pos, dom.values[v]))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _parse_state_lines(text: str):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        row = {}
        for token in line.replace(",", " ").split():
            label, eq, value = token.partition("=")
            if not eq or not label or not value:
                raise ModelError(
                    "line %d: bad token %r; expected var.pK=value"
                    % (lineno, token))
            name, dot, suffix = label.partition(".")
            if not dot or not suffix.startswith("p") or not suffix[1:].isdigit():
                raise ModelError(
                    "line %d: label %r must be position-qualified (var.pK)"
                    % (lineno, label))
            key = (int(suffix[1:]), name)
            if key in row:
                raise ModelError(
                    "line %d: %s assigned twice" % (lineno, label))
            row[key] = value
        rows.append(row)
    return rows


def _order_values(values: set) -> tuple:
    if values <= {"false", "true"}:
        return BOOL.values
    if all(v.lstrip("-").isdigit() for v in values):
        return tuple(sorted(values, key=int))
    return tuple(sorted(values))


def read_spec_state_sets(*texts: str):
    """Parse several spec-state files against one inferred signature.

    Returns (signature, [frozenset of states, one per text]). All texts must
    use the same variables; domains are the values observed across all texts.
    """
    per_text = [_parse_state_lines(t) for t in texts]
    all_rows = [row for rows in per_text for row in rows]
    if not all_rows:
        raise ModelError("no states given")
    keys = set(all_rows[0])
    for row in all_rows:
        if set(row) != keys:
            raise ModelError("states assign different variable sets")
    observed: dict = {k: set() for k in keys}
    for row in all_rows:
        for k, v in row.items():
            observed[k].add(v)
    slots = [(pos, name, Domain(name, _order_values(observed[(pos, name)])))
             for pos, name in sorted(keys)]
    sig = Signature(slots)
    sets = [frozenset(sig.state(row) for row in rows) for rows in per_text]
    return sig, sets


def read_spec_states(text: str):
    """Parse one spec-state file; returns (signature, frozenset of states)."""
    sig, sets = read_spec_state_sets(text)
    return sig, sets[0]
