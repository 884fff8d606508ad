"""Checkable specifications and the four verdict computations.

A Specification constrains the sequences of external-variable states a
program may exhibit: which specification states are allowed, which non-stutter
state changes are allowed, what must happen on the eventual (bottom-component)
behavior, and how stutter divergence is treated. All checks run over the full
transition system, so a verdict quantifies over every initial state and every
maximal computation under the unfair central daemon.

Verdicts never claim more than was checked: each failure carries a concrete
witness replayable through the kernel, and analysis findings that do not gate
the verdict (fairness obligations, stutter divergence under a permissive
policy) are reported in the notes.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from . import explorer
from .kernel import Program, State
from .mapping import StateMapping

DIVERGENCE_ALLOWED = "divergence-allowed"
DIVERGENCE_FORBIDDEN = "divergence-forbidden"
STUTTER_POLICIES = (DIVERGENCE_ALLOWED, DIVERGENCE_FORBIDDEN)

#: Obligation modes: enforce always gates the verdict; policy gates only
#: under divergence-forbidden; analyze is reported and never gates.
OBLIGATION_MODES = ("enforce", "policy", "analyze")


# --------------------------------------------------------------------------
# Acceptance conditions on eventual behavior.

@dataclass(frozen=True)
class CycleWithin:
    """Every bottom component must be nonterminal and stay inside the given
    family of specification states (the target cycle family)."""

    pred: Callable[[State], bool]
    description: str = ""


@dataclass(frozen=True)
class Obligation:
    """A recurrence obligation: every cycle of every bottom component must
    contain at least one edge whose mapped endpoints satisfy edge_pred."""

    name: str
    edge_pred: Callable[[State, State], bool]
    mode: str = "enforce"

    def __post_init__(self):
        if self.mode not in OBLIGATION_MODES:
            raise ValueError("unknown obligation mode %r" % self.mode)


@dataclass(frozen=True)
class Recurrence:
    obligations: tuple[Obligation, ...]


@dataclass(frozen=True)
class FiniteTerminal:
    """Every bottom component must be a terminal state satisfying pred:
    the specification's sequences are finite."""

    pred: Callable[[State], bool]


Acceptance = object  # CycleWithin | Recurrence | FiniteTerminal


@dataclass(frozen=True)
class Specification:
    """A problem specification over external-variable states.

    allowed_state and the acceptance predicates take specification states;
    allowed_edge takes a non-stutter pair of specification states (stutter
    pairs are implicitly allowed and handled by the stutter policy).
    """

    name: str
    allowed_state: Callable[[State], bool]
    allowed_edge: Callable[[State, State], bool]
    acceptance: Acceptance
    stutter_policy: str = DIVERGENCE_FORBIDDEN

    def __post_init__(self):
        if self.stutter_policy not in STUTTER_POLICIES:
            raise ValueError("unknown stutter policy %r" % self.stutter_policy)

    def with_policy(self, policy: str) -> "Specification":
        return replace(self, stutter_policy=policy)


# --------------------------------------------------------------------------
# Verdicts.

@dataclass
class Verdict:
    """Outcome of one check. witness is None exactly when the check holds;
    otherwise it is a small JSON-ready dict with canonical state texts.
    notes carry findings that informed but did not decide the verdict."""

    check: str
    holds: bool
    witness: Optional[dict]
    stats: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "holds": self.holds,
            "witness": self.witness,
            "stats": dict(self.stats),
            "notes": list(self.notes),
        }

    def summary(self) -> str:
        head = "%s: %s" % (self.check, "holds" if self.holds else "FAILS")
        lines = [head]
        if self.witness is not None:
            lines.append("  witness: %s" % _witness_text(self.witness))
        for note in self.notes:
            lines.append("  note: %s" % note)
        return "\n".join(lines)


def _witness_text(witness: dict) -> str:
    kind = witness.get("kind", "?")
    if kind == "edge":
        return "edge %s --%s--> %s" % (
            witness["source"], witness["action"], witness["target"])
    if kind == "terminal":
        return "terminal state %s" % witness["state"]
    if kind == "cycle":
        return "cycle through %s" % " -> ".join(witness["states"])
    if kind == "disallowed-state":
        return "state %s maps to disallowed %s" % (
            witness["state"], witness["mapped"])
    if kind == "disallowed-edge":
        return "edge %s --%s--> %s maps to disallowed %s -> %s" % (
            witness["source"], witness["action"], witness["target"],
            witness["mapped_source"], witness["mapped_target"])
    if kind == "stutter-cycle":
        return "image stays %s around cycle %s" % (
            witness["image"], " -> ".join(witness["states"]))
    if kind == "acceptance":
        return witness["reason"]
    return repr(witness)


def _label(pos: int, name: str) -> str:
    return "%d:%s" % (pos, name)


def _cycle_witness(cycle: explorer.Cycle) -> dict:
    return {
        "kind": "cycle",
        "states": [s.text() for s in cycle.states],
        "actions": [_label(p, a) for p, a in cycle.labels],
    }


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def ms(self) -> float:
        return round((time.perf_counter() - self.t0) * 1000.0, 3)


# --------------------------------------------------------------------------
# Core checks.

def check_closed(program: Program, pred: Callable[[State], bool],
                 ts: Optional[explorer.TransitionSystem] = None) -> Verdict:
    """Does no transition leave the predicate set?"""
    clock = _Clock()
    ts = ts if ts is not None else explorer.build_transition_system(program)
    inside = [pred(s) for s in ts.states]
    witness = None
    for i in range(ts.size):
        if not inside[i]:
            continue
        for pos, name, t in ts.adj[i]:
            if not inside[t]:
                witness = {
                    "kind": "edge",
                    "source": ts.states[i].text(),
                    "target": ts.states[t].text(),
                    "action": _label(pos, name),
                }
                break
        if witness:
            break
    stats = {"states": ts.size, "edges": ts.edge_count(),
             "predicate_states": sum(inside), "elapsed_ms": clock.ms()}
    return Verdict("closed", witness is None, witness, stats)


def check_convergence(program: Program, pred: Callable[[State], bool],
                      ts: Optional[explorer.TransitionSystem] = None
                      ) -> Verdict:
    """Does every maximal computation from every universe state reach the
    predicate? Complete under no fairness: it fails exactly on a terminal
    state outside the predicate or a cycle avoiding it."""
    clock = _Clock()
    ts = ts if ts is not None else explorer.build_transition_system(program)
    witness = None
    terms = explorer.terminals(ts)
    for t in terms:
        if not pred(t):
            witness = {"kind": "terminal", "state": t.text()}
            break
    if witness is None:
        cycle = explorer.cycles_outside(ts, pred)
        if cycle is not None:
            witness = _cycle_witness(cycle)
    stats = {"states": ts.size, "edges": ts.edge_count(),
             "terminals": len(terms), "elapsed_ms": clock.ms()}
    return Verdict("convergence", witness is None, witness, stats)


def check_stabilizing(program: Program, mapping: StateMapping,
                      spec: Specification,
                      invariant: Callable[[State], bool],
                      ts: Optional[explorer.TransitionSystem] = None,
                      _check_name: str = "stabilizing") -> Verdict:
    """Does the program stabilize to the specification from the invariant?

    The invariant is a predicate over program states. The verdict is the
    conjunction of: the invariant is closed; every maximal computation
    converges to it; inside it, states and non-stutter edges map into the
    specification's allowed sets; every bottom component satisfies the
    acceptance condition; and stutter divergence inside the invariant is
    absent when the policy forbids it. Findings that the policy or an
    obligation's mode exempts from gating are reported in the notes.
    """
    clock = _Clock()
    ts = ts if ts is not None else explorer.build_transition_system(program)
    bound = mapping.bind(program)
    inv = [invariant(s) for s in ts.states]
    mapped = [bound(s) for s in ts.states]
    cond = explorer.condense(ts)
    notes = ["stutter policy: %s" % spec.stutter_policy]

    def stats() -> dict:
        return {
            "states": ts.size,
            "edges": ts.edge_count(),
            "invariant_states": sum(inv),
            "components": len(cond.components),
            "bottom_components": len(cond.bottoms),
            "elapsed_ms": clock.ms(),
        }

    def fail(witness: dict) -> Verdict:
        return Verdict(_check_name, False, witness, stats(), notes)

    # Closure: no edge may leave the invariant.
    for i in range(ts.size):
        if not inv[i]:
            continue
        for pos, name, t in ts.adj[i]:
            if not inv[t]:
                notes.append("invariant is not closed")
                return fail({
                    "kind": "edge",
                    "source": ts.states[i].text(),
                    "target": ts.states[t].text(),
                    "action": _label(pos, name),
                })

    # Convergence: terminals inside, no cycle entirely outside.
    for i in range(ts.size):
        if not ts.adj[i] and not inv[i]:
            notes.append("terminal state outside the invariant")
            return fail({"kind": "terminal", "state": ts.states[i].text()})
    cycle = explorer.cycles_outside(ts, lambda s: inv[s.index])
    if cycle is not None:
        notes.append("a computation can avoid the invariant forever")
        return fail(_cycle_witness(cycle))

    # State conformance inside the invariant.
    for i in range(ts.size):
        if inv[i] and not spec.allowed_state(mapped[i]):
            return fail({
                "kind": "disallowed-state",
                "state": ts.states[i].text(),
                "mapped": mapped[i].text(),
            })

    # Edge conformance: non-stutter images of invariant-internal edges.
    for i in range(ts.size):
        if not inv[i]:
            continue
        for pos, name, t in ts.adj[i]:
            if inv[t] and mapped[i] != mapped[t] \
                    and not spec.allowed_edge(mapped[i], mapped[t]):
                return fail({
                    "kind": "disallowed-edge",
                    "source": ts.states[i].text(),
                    "target": ts.states[t].text(),
                    "action": _label(pos, name),
                    "mapped_source": mapped[i].text(),
                    "mapped_target": mapped[t].text(),
                })

    # Acceptance on every bottom component (all lie inside the invariant
    # once closure and convergence hold).
    for c in cond.bottoms:
        comp = cond.components[c]
        if not all(inv[s] for s in comp):
            continue
        verdict = _check_acceptance(spec, ts, cond, c, mapped, notes)
        if verdict is not None:
            return fail(verdict)

    # Stutter divergence: a cycle inside the invariant whose image never
    # changes. Always reported; gates the verdict only when forbidden.
    stutter = explorer.find_cycle(
        ts, (i for i in range(ts.size) if inv[i]),
        lambda s, pos, name, t: mapped[s] == mapped[t])
    if stutter is None:
        notes.append("stutter divergence: none")
    else:
        witness = {
            "kind": "stutter-cycle",
            "states": [s.text() for s in stutter.states],
            "actions": [_label(p, a) for p, a in stutter.labels],
            "image": mapped[stutter.states[0].index].text(),
        }
        if spec.stutter_policy == DIVERGENCE_FORBIDDEN:
            notes.append("stutter divergence: found, forbidden by policy")
            return fail(witness)
        notes.append(
            "stutter divergence: a computation may cycle through %s with "
            "constant image %s; allowed by policy"
            % (" -> ".join(witness["states"]), witness["image"]))

    return Verdict(_check_name, True, None, stats(), notes)


def _check_acceptance(spec: Specification, ts, cond, c: int, mapped,
                      notes: list) -> Optional[dict]:
    """Evaluate the acceptance condition on bottom component c. Returns a
    witness dict on a gating violation, None otherwise; analyze findings go
    into notes."""
    comp = cond.components[c]
    acc = spec.acceptance
    terminal = cond.trivial[c]
    comp_texts = [ts.states[s].text() for s in comp[:4]]
    where = "bottom component of %d state%s (%s%s)" % (
        len(comp), "" if len(comp) == 1 else "s", ", ".join(comp_texts),
        ", ..." if len(comp) > 4 else "")

    if isinstance(acc, FiniteTerminal):
        if not terminal:
            return {"kind": "acceptance", "component": comp_texts,
                    "reason": "%s cycles forever, but the specification's "
                              "sequences are finite" % where}
        s = comp[0]
        if not acc.pred(mapped[s]):
            return {"kind": "acceptance", "component": comp_texts,
                    "reason": "terminal state %s does not satisfy the "
                              "final-state condition" % ts.states[s].text()}
        return None

    # CycleWithin and Recurrence both describe infinite behavior.
    if terminal:
        return {"kind": "acceptance", "component": comp_texts,
                "reason": "%s is terminal, but the specification's "
                          "sequences are infinite" % where}

    if isinstance(acc, CycleWithin):
        for s in comp:
            if not acc.pred(mapped[s]):
                return {"kind": "acceptance", "component": comp_texts,
                        "reason": "%s contains %s, outside the target "
                                  "cycle family%s"
                                  % (where, ts.states[s].text(),
                                     " (%s)" % acc.description
                                     if acc.description else "")}
        return None

    if isinstance(acc, Recurrence):
        for obl in acc.obligations:
            cycle = explorer.find_cycle(
                ts, comp,
                lambda s, pos, name, t, f=obl.edge_pred:
                    not f(mapped[s], mapped[t]))
            enforced = obl.mode == "enforce" or (
                obl.mode == "policy"
                and spec.stutter_policy == DIVERGENCE_FORBIDDEN)
            if cycle is None:
                notes.append("obligation %r: recurs on every cycle of %s"
                             % (obl.name, where))
                continue
            texts = [s.text() for s in cycle.states]
            if enforced:
                return {"kind": "acceptance", "component": comp_texts,
                        "reason": "cycle %s never discharges obligation %r"
                                  % (" -> ".join(texts), obl.name)}
            notes.append(
                "obligation %r (%s): not discharged on cycle %s"
                % (obl.name,
                   "not enforced under %s" % spec.stutter_policy
                   if obl.mode == "policy" else "analysis only",
                   " -> ".join(texts)))
        return None

    raise TypeError("unknown acceptance condition %r" % (acc,))


def check_ideal_stabilizing(program: Program, mapping: StateMapping,
                            spec: Specification,
                            ts: Optional[explorer.TransitionSystem] = None
                            ) -> Verdict:
    """check_stabilizing with the invariant `true`: every universe state is
    legitimate, so conformance and acceptance must hold from everywhere."""
    return check_stabilizing(program, mapping, spec, lambda s: True, ts,
                             _check_name="ideal")


# --------------------------------------------------------------------------
# Wave predicates for the information-propagation chain.

def pif_classify(state: State) -> frozenset:
    """All predicate instances the state satisfies, as tuples:
    ("RQ", l, m), ("RP", k), ("RQ'", l, m), ("RP'", k).

    RQ(l, m): positions 1..l requesting, l+1..m idle, m+1..N replying.
    RP(k): positions 1..k requesting, the rest replying.
    RP'(k): 1..k requesting, k+1 replying, k+2..N anything but idle.
    RQ'(l, m): 1..l requesting, l+1..m idle, the rest arbitrary.
    """
    positions = state.sig.positions
    n = len(positions)
    vals = [state.value(p, "st") for p in positions]
    out = set()
    for l in range(0, n):
        if any(v != "rq" for v in vals[:l]):
            continue
        for m in range(l + 1, n + 1):
            if any(v != "i" for v in vals[l:m]):
                continue
            out.add(("RQ'", l, m))
            if all(v == "rp" for v in vals[m:]):
                out.add(("RQ", l, m))
    for k in range(1, n):
        if any(v != "rq" for v in vals[:k]):
            continue
        if all(v == "rp" for v in vals[k:]):
            out.add(("RP", k))
        if vals[k] == "rp" and all(v != "i" for v in vals[k + 1:]):
            out.add(("RP'", k))
    return frozenset(out)


def pif_wave(state: State) -> bool:
    """The strict wave family: some RQ(l, m) or RP(k) instance holds."""
    return any(tag in ("RQ", "RP") for tag, *_ in pif_classify(state))


def pif_prime(state: State) -> bool:
    """The relaxed family: some RQ'(l, m) or RP'(k) instance holds."""
    return any(tag in ("RQ'", "RP'") for tag, *_ in pif_classify(state))


def _pif_rq_prime(state: State) -> bool:
    return any(tag == "RQ'" for tag, *_ in pif_classify(state))


def _pif_rp_strict(state: State) -> bool:
    return any(tag == "RP" for tag, *_ in pif_classify(state))


# --------------------------------------------------------------------------
# Alternating-bit classification.

def abp_classify(state: State) -> str:
    """"legitimate-SABP" when exactly one message is in flight and its bit
    equals the sender's sequence number; "transient" otherwise."""
    ns = state.value(1, "ns")
    chpq = state.value(1, "chpq")
    chqp = state.value(2, "chqp")
    data = chpq != "empty"
    ack = chqp != "empty"
    if data == ack:
        return "transient"
    payload = chpq[-1] if data else chqp[-1]
    return "legitimate-SABP" if payload == ns else "transient"


def abp_legitimate(state: State) -> bool:
    return abp_classify(state) == "legitimate-SABP"


# --------------------------------------------------------------------------
# Specification builders.

def _no_adjacent_true(state: State) -> bool:
    vals = state.values
    return all(not (vals[i] and vals[i + 1]) for i in range(len(vals) - 1))


def _dining_obligations(n: int, fairness: bool) -> tuple:
    obligations = [Obligation(
        "output-activity", lambda s, t: s != t, mode="policy")]
    if fairness:
        for j in range(1, n + 1):
            obligations.append(Obligation(
                "activity-p%d" % j,
                lambda s, t, i=j - 1: s.values[i] != t.values[i],
                mode="analyze"))
    return tuple(obligations)


def udp_spec(n: int) -> Specification:
    """Unfair neighbor mutual exclusion on n critical-section flags: no two
    adjacent outputs true, outputs keep alternating. The sequences are
    explicitly unfair, so a computation that starves every process but one
    is acceptable: stutter divergence is allowed by default and the
    alternation obligation gates only under a forbidding policy."""
    return Specification(
        name="UDP",
        allowed_state=_no_adjacent_true,
        allowed_edge=lambda s, t: True,
        acceptance=Recurrence(_dining_obligations(n, fairness=False)),
        stutter_policy=DIVERGENCE_ALLOWED,
    )


def fdp_spec(n: int) -> Specification:
    """The fair variant: same allowed states, plus per-process activity
    obligations. Whether per-process fairness survives the unfair central
    daemon is an analysis question, so those obligations report rather
    than gate."""
    return Specification(
        name="FDP",
        allowed_state=_no_adjacent_true,
        allowed_edge=lambda s, t: True,
        acceptance=Recurrence(_dining_obligations(n, fairness=True)),
        stutter_policy=DIVERGENCE_ALLOWED,
    )


def spif_spec(n: int) -> Specification:
    """Strict request/reply waves: states inside RQ/RP, eventual behavior
    the wave cycle itself."""
    return Specification(
        name="SPIF",
        allowed_state=pif_wave,
        allowed_edge=lambda s, t: True,
        acceptance=CycleWithin(pif_wave, "RQ/RP wave cycle"),
        stutter_policy=DIVERGENCE_FORBIDDEN,
    )


def ipif_spec(n: int) -> Specification:
    """The relaxed wave specification: every state satisfies RP' or RQ',
    leaving the RQ' family lands in a strict RP state, and every sequence
    ends up riding the strict wave cycle."""
    def allowed_edge(s: State, t: State) -> bool:
        if _pif_rq_prime(s) and not _pif_rq_prime(t):
            return _pif_rp_strict(t)
        return True

    return Specification(
        name="IPIF",
        allowed_state=pif_prime,
        allowed_edge=allowed_edge,
        acceptance=CycleWithin(pif_wave, "RQ/RP wave cycle"),
        stutter_policy=DIVERGENCE_FORBIDDEN,
    )


def sabp_spec() -> Specification:
    """Strict alternating-bit: exactly one in-flight message matching the
    sender's bit, forever."""
    return Specification(
        name="SABP",
        allowed_state=abp_legitimate,
        allowed_edge=lambda s, t: True,
        acceptance=CycleWithin(abp_legitimate, "alternating-bit handshake"),
        stutter_policy=DIVERGENCE_FORBIDDEN,
    )


def iabp_spec() -> Specification:
    """Ideal alternating-bit: every universe state allowed, every sequence
    eventually rides the legitimate handshake."""
    return Specification(
        name="IABP",
        allowed_state=lambda s: True,
        allowed_edge=lambda s, t: True,
        acceptance=CycleWithin(abp_legitimate, "alternating-bit handshake"),
        stutter_policy=DIVERGENCE_FORBIDDEN,
    )


def _le_leaders(state: State) -> list:
    return [p for p in state.sig.positions if state.value(p, "leader") == "true"]


def _le_allowed(state: State) -> bool:
    leaders = _le_leaders(state)
    if len(leaders) > 1:
        return False
    return all(state.value(p, "contend") == "true" for p in leaders)


def le_spec(n: int) -> Specification:
    """Leader election as finite sequences: inputs never change, at most one
    contending process holds leader, and every sequence terminates with a
    leader elected."""
    def allowed_edge(s: State, t: State) -> bool:
        return all(s.value(p, "contend") == t.value(p, "contend")
                   for p in s.sig.positions)

    return Specification(
        name="LE",
        allowed_state=_le_allowed,
        allowed_edge=allowed_edge,
        acceptance=FiniteTerminal(lambda s: len(_le_leaders(s)) == 1),
        stutter_policy=DIVERGENCE_FORBIDDEN,
    )
