"""Guarded-command programs on process chains.

A program is a chain of processes at positions 1..N. Each process owns a few
finitely-domained variables and a few guarded actions. Guards read the
process's own variables and those of its immediate neighbors; commands assign
within the same neighborhood (never to input-kind variables). Execution is by
a central daemon: one enabled action fires per step, atomically. No fairness
is assumed anywhere.

States are total assignments over every variable of every process, encoded
canonically as mixed-radix integers (position-major, declaration-minor), so
the full state universe is enumerable in a stable order. Everything here is
immutable after construction and all operations are pure functions.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Union

#: Refuse to enumerate universes larger than this unless told otherwise.
DEFAULT_STATE_CAP = 10_000_000


def state_cap(cap: Optional[int] = None) -> int:
    """The effective universe size cap: an explicit argument wins, then the
    STABILIQ_STATE_CAP environment variable, then the built-in default."""
    if cap is not None:
        return cap
    env = os.environ.get("STABILIQ_STATE_CAP")
    if not env:
        return DEFAULT_STATE_CAP
    try:
        return int(env)
    except ValueError:
        raise ModelError(
            "STABILIQ_STATE_CAP must be an integer, not %r" % env) from None

LEFT, SELF, RIGHT = -1, 0, 1
OFFSET_NAMES = {LEFT: "left", SELF: "self", RIGHT: "right"}
VAR_KINDS = ("internal", "input", "output")


class ModelError(ValueError):
    """A program, state, or action violates a construction-time contract."""


class DisabledActionError(ModelError):
    """apply() was asked to execute an action whose guard is false."""


class UniverseCapError(RuntimeError):
    """The state universe is larger than the configured cap."""

    def __init__(self, size: int, cap: int):
        super().__init__(
            "state universe has %d states, above the cap of %d; "
            "raise the cap (STABILIQ_STATE_CAP or the cap argument) to proceed"
            % (size, cap)
        )
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class Domain:
    """A named, ordered, finite set of values. Values are plain strings."""

    name: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ModelError("domain %r has no values" % self.name)
        if len(set(self.values)) != len(self.values):
            raise ModelError("domain %r has duplicate values" % self.name)

    def index(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ModelError(
                "value %r is not in domain %s %r" % (value, self.name, self.values)
            ) from None

    def __contains__(self, value: str) -> bool:
        return value in self.values

    def __len__(self) -> int:
        return len(self.values)


#: The built-in boolean domain. Order matters for state encoding: false < true.
BOOL = Domain("bool", ("false", "true"))


@dataclass(frozen=True)
class VariableDecl:
    """A variable owned by one process.

    kind is "internal", "input", or "output"; input and output variables are
    the external ones, visible to specifications. Input variables are
    environment-controlled and may never be assigned.
    """

    name: str
    domain: Domain
    kind: str = "internal"

    def __post_init__(self):
        if self.kind not in VAR_KINDS:
            raise ModelError("bad variable kind %r for %r" % (self.kind, self.name))

    @property
    def external(self) -> bool:
        return self.kind != "internal"


# --------------------------------------------------------------------------
# Expression and command ASTs.
#
# Variable references carry a neighborhood offset (-1 left, 0 self, +1 right)
# and are resolved to concrete state slots per process position, so one AST
# can be shared by every process of a group.

@dataclass(frozen=True)
class VarRef:
    offset: int
    name: str

    def __post_init__(self):
        if self.offset not in (-1, 0, 1):
            raise ModelError("variable reference offset must be -1, 0 or 1")


@dataclass(frozen=True)
class Lit:
    """A domain value literal used as a comparison or assignment operand."""

    value: str


@dataclass(frozen=True)
class NotRef:
    """Boolean negation of a bool-domain variable, e.g. `!self.access`."""

    ref: VarRef


@dataclass(frozen=True)
class BoolLit:
    """A constant guard: `true` or `false`."""

    value: bool


@dataclass(frozen=True)
class Cmp:
    left: Union[VarRef, Lit]
    op: str  # "=" or "!="
    right: Union[VarRef, Lit]

    def __post_init__(self):
        if self.op not in ("=", "!="):
            raise ModelError("comparison operator must be '=' or '!='")


@dataclass(frozen=True)
class Not:
    expr: "Expr"


@dataclass(frozen=True)
class And:
    items: tuple["Expr", ...]


@dataclass(frozen=True)
class Or:
    items: tuple["Expr", ...]


Expr = Union[BoolLit, Cmp, Not, And, Or]


@dataclass(frozen=True)
class Assign:
    target: VarRef
    value: Union[Lit, VarRef, NotRef]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()


Stmt = Union[Assign, If]


@dataclass(frozen=True)
class Action:
    """A named guarded command: when the guard holds, the command may fire.

    The command is a statement sequence executed atomically with ordinary
    sequential semantics (later statements see earlier assignments).
    """

    name: str
    guard: Expr
    command: tuple[Stmt, ...]


@dataclass(frozen=True)
class Process:
    """One chain position: its index (1-based), integer identifier, variables
    and actions. The pid is only meaningful to identifier-based mappings."""

    index: int
    pid: int
    vars: tuple[VariableDecl, ...]
    actions: tuple[Action, ...]

    def __post_init__(self):
        names = [v.name for v in self.vars]
        if len(set(names)) != len(names):
            raise ModelError("process %d declares a variable twice" % self.index)
        anames = [a.name for a in self.actions]
        if len(set(anames)) != len(anames):
            raise ModelError("process %d declares an action twice" % self.index)

    def var(self, name: str) -> VariableDecl:
        for v in self.vars:
            if v.name == name:
                return v
        raise ModelError("process %d has no variable %r" % (self.index, name))


# --------------------------------------------------------------------------
# Signatures and states.

class Signature:
    """An ordered list of (position, variable name, domain) slots.

    A Signature fixes the canonical state encoding: states are value-index
    tuples in slot order, and the mixed-radix integer of a state uses the
    first slot as the most significant digit. Program signatures cover every
    variable; specification signatures cover external variables only.
    """

    __slots__ = ("slots", "index_of", "radices", "size", "_unique",
                 "positions", "_windows", "_value_index")

    def __init__(self, slots):
        slots = tuple(slots)
        if not slots:
            raise ModelError("a signature needs at least one slot")
        self.slots = slots
        self.index_of = {}
        for i, (pos, name, dom) in enumerate(slots):
            key = (pos, name)
            if key in self.index_of:
                raise ModelError("duplicate slot %s.p%d" % (name, pos))
            self.index_of[key] = i
        self.radices = tuple(len(dom) for _, _, dom in slots)
        size = 1
        for r in self.radices:
            size *= r
        self.size = size
        counts = {}
        for _, name, _ in slots:
            counts[name] = counts.get(name, 0) + 1
        self._unique = {name for name, c in counts.items() if c == 1}
        self.positions = tuple(sorted({pos for pos, _, _ in slots}))
        self._windows = {}
        self._value_index = tuple({v: i for i, v in enumerate(dom.values)}
                                  for _, _, dom in slots)

    # -- naming ------------------------------------------------------------

    def label(self, i: int) -> str:
        pos, name, _ = self.slots[i]
        if name in self._unique:
            return name
        return "%s.p%d" % (name, pos)

    def slot(self, pos: int, name: str) -> int:
        try:
            return self.index_of[(pos, name)]
        except KeyError:
            raise ModelError("no variable %r at position %d" % (name, pos)) from None

    # -- encoding ----------------------------------------------------------

    def encode(self, values: tuple[int, ...]) -> int:
        n = 0
        for v, r in zip(values, self.radices):
            n = n * r + v
        return n

    def state_at(self, index: int) -> "State":
        if not 0 <= index < self.size:
            raise ModelError("state index %d out of range" % index)
        vals = [0] * len(self.radices)
        for i in range(len(self.radices) - 1, -1, -1):
            index, vals[i] = divmod(index, self.radices[i])
        return State(self, tuple(vals))

    def states(self) -> Iterator["State"]:
        """All states in canonical (encoded ascending) order."""
        for combo in itertools.product(*(range(r) for r in self.radices)):
            yield State(self, combo)

    # -- construction from assignments / text -------------------------------

    def state(self, assignment: Mapping) -> "State":
        """Build a state from {(pos, name): value} or {label: value} pairs."""
        vals = [None] * len(self.slots)
        for key, value in assignment.items():
            if isinstance(key, tuple):
                i = self.slot(*key)
            else:
                i = self._slot_by_label(key)
            dom = self.slots[i][2]
            vals[i] = dom.index(value)
        missing = [self.label(i) for i, v in enumerate(vals) if v is None]
        if missing:
            raise ModelError("state assignment is missing %s" % ", ".join(missing))
        return State(self, tuple(vals))

    def _slot_by_label(self, label: str) -> int:
        if "." in label:
            name, _, suffix = label.partition(".")
            if not (suffix.startswith("p") and suffix[1:].isdigit()):
                raise ModelError("bad variable label %r" % label)
            return self.slot(int(suffix[1:]), name)
        matches = [i for i, (_, name, _) in enumerate(self.slots) if name == label]
        if not matches:
            raise ModelError("unknown variable %r" % label)
        if len(matches) > 1:
            raise ModelError(
                "variable name %r is ambiguous; qualify it as %s.p<position>"
                % (label, label))
        return matches[0]

    def format_state(self, state: "State") -> str:
        parts = []
        for i, v in enumerate(state.values):
            parts.append("%s=%s" % (self.label(i), self.slots[i][2].values[v]))
        return " ".join(parts)

    def parse_state(self, text: str) -> "State":
        assignment = {}
        for token in text.replace(",", " ").split():
            label, eq, value = token.partition("=")
            if not eq or not label or not value:
                raise ModelError("bad state token %r; expected var=value" % token)
            if label in assignment:
                raise ModelError("variable %r assigned twice" % label)
            assignment[label] = value
        return self.state(assignment)

    # -- neighborhoods -----------------------------------------------------

    def window_slots(self, pos: int) -> tuple[int, ...]:
        """Slots of the extended state of position pos: its own variables and
        both neighbors' (a 2-wide window at chain ends)."""
        try:
            return self._windows[pos]
        except KeyError:
            w = tuple(i for i, (p, _, _) in enumerate(self.slots)
                      if pos - 1 <= p <= pos + 1)
            self._windows[pos] = w
            return w

    def __eq__(self, other):
        return isinstance(other, Signature) and self.slots == other.slots

    def __hash__(self):
        return hash(self.slots)

    def __repr__(self):
        return "Signature(%d slots, %d states)" % (len(self.slots), self.size)


class State:
    """An immutable total assignment over a Signature's slots.

    Internally a tuple of value indices; equality and hashing follow the
    canonical encoding, so two states are equal exactly when every variable
    agrees (and they belong to the same signature).
    """

    __slots__ = ("sig", "values", "_hash")

    def __init__(self, sig: Signature, values: tuple[int, ...]):
        self.sig = sig
        self.values = values
        self._hash = hash(values)

    def value(self, pos: int, name: str) -> str:
        i = self.sig.slot(pos, name)
        return self.sig.slots[i][2].values[self.values[i]]

    @property
    def index(self) -> int:
        return self.sig.encode(self.values)

    def text(self) -> str:
        return self.sig.format_state(self)

    def __eq__(self, other):
        return (isinstance(other, State) and self.values == other.values
                and self.sig == other.sig)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "<%s>" % self.sig.format_state(self)


class Universe:
    """A sized, iterable view of a program's full state universe."""

    def __init__(self, sig: Signature, cap: Optional[int] = None):
        cap = state_cap(cap)
        if sig.size > cap:
            raise UniverseCapError(sig.size, cap)
        self.sig = sig

    def __len__(self) -> int:
        return self.sig.size

    def __iter__(self) -> Iterator[State]:
        return self.sig.states()

    def __contains__(self, state) -> bool:
        return isinstance(state, State) and state.sig == self.sig


# --------------------------------------------------------------------------
# Programs.

class Program:
    """A chain of processes with a fixed signature and validated actions."""

    def __init__(self, name: str, processes):
        self.name = name
        self.processes = tuple(processes)
        if not self.processes:
            raise ModelError("a program needs at least one process")
        for i, proc in enumerate(self.processes, start=1):
            if proc.index != i:
                raise ModelError(
                    "process positions must be contiguous from 1; got %d at slot %d"
                    % (proc.index, i))
        pids = [p.pid for p in self.processes]
        if len(set(pids)) != len(pids):
            raise ModelError("process identifiers must be unique; got %r" % (pids,))
        self.n = len(self.processes)
        self.signature = Signature(
            (p.index, v.name, v.domain)
            for p in self.processes for v in p.vars)
        # (position, action name) in canonical order; the round-robin policy
        # and all deterministic iteration rely on this order.
        self.action_order = tuple(
            (p.index, a.name) for p in self.processes for a in p.actions)
        self._actions = {(p.index, a.name): a
                         for p in self.processes for a in p.actions}
        self._validate()

    # -- basic access --------------------------------------------------------

    def process(self, pos: int) -> Process:
        if not 1 <= pos <= self.n:
            raise ModelError("no process at position %d" % pos)
        return self.processes[pos - 1]

    def action(self, pos: int, name: str) -> Action:
        try:
            return self._actions[(pos, name)]
        except KeyError:
            raise ModelError("process %d has no action %r" % (pos, name)) from None

    @property
    def universe_size(self) -> int:
        return self.signature.size

    def state(self, assignment_or_text) -> State:
        if isinstance(assignment_or_text, str):
            return self.signature.parse_state(assignment_or_text)
        return self.signature.state(assignment_or_text)

    def __eq__(self, other):
        return (isinstance(other, Program) and self.name == other.name
                and self.processes == other.processes)

    def __hash__(self):
        return hash((self.name, self.processes))

    def __repr__(self):
        return "Program(%r, %d processes, %d states)" % (
            self.name, self.n, self.universe_size)

    # -- validation ----------------------------------------------------------

    def _resolve(self, pos: int, ref: VarRef) -> int:
        """Slot index of a variable reference made from position pos."""
        target = pos + ref.offset
        if not 1 <= target <= self.n:
            raise ModelError(
                "position %d has no %s neighbor (action references %s.%s)"
                % (pos, OFFSET_NAMES[ref.offset], OFFSET_NAMES[ref.offset], ref.name))
        return self.signature.slot(target, ref.name)

    def _slot_domain(self, i: int) -> Domain:
        return self.signature.slots[i][2]

    def _validate(self):
        for proc in self.processes:
            for action in proc.actions:
                where = "action %r of process %d" % (action.name, proc.index)
                self._check_expr(proc.index, action.guard, where)
                self._check_stmts(proc.index, action.command, where)

    def _check_operand(self, pos, operand, where, against: Optional[Domain]):
        if isinstance(operand, VarRef):
            return self._slot_domain(self._resolve(pos, operand))
        if isinstance(operand, Lit):
            if against is not None and operand.value not in against:
                raise ModelError(
                    "%s compares or assigns value %r outside domain %s %r"
                    % (where, operand.value, against.name, against.values))
            return None
        raise ModelError("%s has a malformed operand %r" % (where, operand))

    def _check_expr(self, pos, expr, where):
        if isinstance(expr, BoolLit):
            return
        if isinstance(expr, Cmp):
            # Resolve refs first so a literal can be checked against the
            # domain it is compared with.
            ldom = self._check_operand(pos, expr.left, where, None) \
                if isinstance(expr.left, VarRef) else None
            rdom = self._check_operand(pos, expr.right, where, None) \
                if isinstance(expr.right, VarRef) else None
            if isinstance(expr.left, Lit):
                self._check_operand(pos, expr.left, where, rdom)
            if isinstance(expr.right, Lit):
                self._check_operand(pos, expr.right, where, ldom)
            if isinstance(expr.left, Lit) and isinstance(expr.right, Lit):
                raise ModelError("%s compares two literals" % where)
            return
        if isinstance(expr, Not):
            self._check_expr(pos, expr.expr, where)
            return
        if isinstance(expr, (And, Or)):
            for item in expr.items:
                self._check_expr(pos, item, where)
            return
        raise ModelError("%s has a malformed guard node %r" % (where, expr))

    def _check_stmts(self, pos, stmts, where):
        for stmt in stmts:
            if isinstance(stmt, Assign):
                i = self._resolve(pos, stmt.target)
                tpos, tname, tdom = self.signature.slots[i]
                decl = self.process(tpos).var(tname)
                if decl.kind == "input":
                    raise ModelError(
                        "%s assigns input variable %s.p%d" % (where, tname, tpos))
                value = stmt.value
                if isinstance(value, Lit):
                    if value.value not in tdom:
                        raise ModelError(
                            "%s assigns value %r outside domain %s %r"
                            % (where, value.value, tdom.name, tdom.values))
                elif isinstance(value, VarRef):
                    sdom = self._slot_domain(self._resolve(pos, value))
                    if not set(sdom.values) <= set(tdom.values):
                        raise ModelError(
                            "%s assigns from domain %s into narrower domain %s"
                            % (where, sdom.name, tdom.name))
                elif isinstance(value, NotRef):
                    sdom = self._slot_domain(self._resolve(pos, value.ref))
                    if sdom.values != BOOL.values or tdom.values != BOOL.values:
                        raise ModelError(
                            "%s negates a non-boolean variable" % where)
                else:
                    raise ModelError("%s has a malformed assignment" % where)
            elif isinstance(stmt, If):
                self._check_expr(pos, stmt.cond, where)
                self._check_stmts(pos, stmt.then, where)
                self._check_stmts(pos, stmt.orelse, where)
            else:
                raise ModelError("%s has a malformed statement %r" % (where, stmt))


# --------------------------------------------------------------------------
# Evaluation.

def _operand_text(program: Program, pos: int, operand, values) -> str:
    if isinstance(operand, VarRef):
        i = program._resolve(pos, operand)
        return program.signature.slots[i][2].values[values[i]]
    return operand.value


def eval_guard(program: Program, pos: int, expr: Expr, values) -> bool:
    """Evaluate a guard at a process position against raw state values."""
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Cmp):
        l = _operand_text(program, pos, expr.left, values)
        r = _operand_text(program, pos, expr.right, values)
        return (l == r) if expr.op == "=" else (l != r)
    if isinstance(expr, Not):
        return not eval_guard(program, pos, expr.expr, values)
    if isinstance(expr, And):
        return all(eval_guard(program, pos, e, values) for e in expr.items)
    if isinstance(expr, Or):
        return any(eval_guard(program, pos, e, values) for e in expr.items)
    raise ModelError("malformed guard node %r" % (expr,))


def _exec_stmts(program: Program, pos: int, stmts, values: list) -> None:
    sig = program.signature
    for stmt in stmts:
        if isinstance(stmt, Assign):
            i = program._resolve(pos, stmt.target)
            dom = sig.slots[i][2]
            value = stmt.value
            if isinstance(value, Lit):
                values[i] = sig._value_index[i][value.value]
            elif isinstance(value, VarRef):
                j = program._resolve(pos, value)
                values[i] = sig._value_index[i][sig.slots[j][2].values[values[j]]]
            else:  # NotRef, bool-only by validation
                j = program._resolve(pos, value.ref)
                values[i] = sig._value_index[i][BOOL.values[1 - values[j]]]
        else:  # If
            branch = stmt.then if eval_guard(program, pos, stmt.cond, values) \
                else stmt.orelse
            _exec_stmts(program, pos, branch, values)


# --------------------------------------------------------------------------
# The five kernel operations.

def enabled_actions(program: Program, state: State) -> list[tuple[int, str]]:
    """All (position, action name) pairs whose guard holds in state, in
    canonical order (position ascending, declaration order within)."""
    _check_state(program, state)
    out = []
    for proc in program.processes:
        for action in proc.actions:
            if eval_guard(program, proc.index, action.guard, state.values):
                out.append((proc.index, action.name))
    return out


def apply(program: Program, state: State, pos: int, action_name: str) -> State:
    """Fire one enabled action atomically; disabled actions are rejected."""
    _check_state(program, state)
    action = program.action(pos, action_name)
    if not eval_guard(program, pos, action.guard, state.values):
        raise DisabledActionError(
            "action %r of process %d is not enabled in %s"
            % (action_name, pos, state.text()))
    values = list(state.values)
    _exec_stmts(program, pos, action.command, values)
    return State(program.signature, tuple(values))


def successors(program: Program, state: State) -> list[State]:
    """Distinct one-step successors, ordered by canonical encoding.
    Self-loops (value-preserving actions) are retained."""
    seen = {}
    for pos, name in enabled_actions(program, state):
        t = apply(program, state, pos, name)
        seen[t.values] = t
    return sorted(seen.values(), key=lambda s: s.values)


def extended_state(program: Program, state: State, pos: int) -> dict:
    """The partial assignment a process can see: its own variables plus both
    neighbors' (one neighbor at chain ends), as {(position, name): value}."""
    _check_state(program, state)
    if not 1 <= pos <= program.n:
        raise ModelError("no process at position %d" % pos)
    sig = program.signature
    out = {}
    for i in sig.window_slots(pos):
        p, name, dom = sig.slots[i]
        out[(p, name)] = dom.values[state.values[i]]
    return out


def universe(program: Program, cap: Optional[int] = None) -> Universe:
    """The full state universe as a sized iterable, in canonical order.
    Raises UniverseCapError above the cap (default 10**7 states)."""
    return Universe(program.signature, cap)


def _check_state(program: Program, state: State) -> None:
    if state.sig != program.signature:
        raise ModelError("state does not belong to program %r" % program.name)
