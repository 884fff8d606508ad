"""Kernel semantics: domains, signatures, state encoding, action firing."""
import pytest

from stabiliq import kernel, protocols
from stabiliq.kernel import (
    BOOL, Action, And, Assign, BoolLit, Cmp, DisabledActionError, Domain,
    If, Lit, ModelError, NotRef, Process, Program, Signature, UniverseCapError,
    VarRef, VariableDecl)

ST3 = Domain("st3", ("i", "rq", "rp"))


def tiny_program(command, guard=BoolLit(True), domain=BOOL, kind="internal",
                 extra_vars=()):
    """One process, one variable x, one action with the given command."""
    proc = Process(
        index=1, pid=1,
        vars=(VariableDecl("x", domain, kind),) + tuple(extra_vars),
        actions=(Action("go", guard, command),))
    return Program("tiny", (proc,))


def test_domain_lookup_and_membership():
    assert "rq" in ST3 and "xx" not in ST3
    assert ST3.index("rp") == 2
    assert len(ST3) == 3
    with pytest.raises(ModelError):
        Domain("bad", ("a", "a"))
    with pytest.raises(ModelError):
        Domain("empty", ())


def test_signature_encoding_is_mixed_radix_with_last_slot_fastest():
    sig = Signature([(1, "st", Domain("r", ("i", "rq"))),
                     (2, "st", ST3),
                     (3, "st", Domain("l", ("i", "rp")))])
    assert sig.size == 12
    states = list(sig.states())
    assert [s.index for s in states] == list(range(12))
    # last slot varies fastest
    assert states[0].values == (0, 0, 0)
    assert states[1].values == (0, 0, 1)
    assert states[2].values == (0, 1, 0)
    # round-trip through the integer encoding
    for s in states:
        assert sig.state_at(s.index) == s


def test_state_text_uses_qualified_names_only_when_needed():
    cm = protocols.make_cm((2, 1, 3)).program
    s = cm.signature.state_at(5)
    assert s.text() == "access.p1=true access.p2=false access.p3=true"
    abp = protocols.make_abp().program
    t = abp.signature.parse_state("ns=0 nr=0 chpq=empty chqp=empty")
    assert t.text() == "ns=0 chpq=empty nr=0 chqp=empty"
    assert abp.signature.parse_state(t.text()) == t


def test_parse_state_rejects_junk():
    abp = protocols.make_abp().program
    sig = abp.signature
    with pytest.raises(ModelError):
        sig.parse_state("ns=0 nr=0 chpq=empty")  # missing a slot
    with pytest.raises(ModelError):
        sig.parse_state("ns=0 nr=0 chpq=empty chqp=empty bogus=1")
    with pytest.raises(ModelError):
        sig.parse_state("ns=7 nr=0 chpq=empty chqp=empty")
    with pytest.raises(ModelError):
        sig.parse_state("ns=0 ns=1 nr=0 chpq=empty chqp=empty")


def test_enabled_actions_canonical_order():
    pif = protocols.make_pif(4).program
    # request wave about to reflect: only the leaf moves
    s = pif.signature.parse_state("st.p1=rq st.p2=rq st.p3=rq st.p4=i")
    assert kernel.enabled_actions(pif, s) == [(4, "reflect")]
    # all idle: only the root moves
    idle = pif.signature.parse_state("st.p1=i st.p2=i st.p3=i st.p4=i")
    assert kernel.enabled_actions(pif, idle) == [(1, "request")]
    cm = protocols.make_cm((2, 1, 3, 4)).program
    every = cm.signature.state_at(0)
    assert kernel.enabled_actions(cm, every) == [
        (1, "flip"), (2, "flip"), (3, "flip"), (4, "flip")]


def test_apply_rejects_disabled_action():
    pif = protocols.make_pif(4).program
    idle = pif.signature.parse_state("st.p1=i st.p2=i st.p3=i st.p4=i")
    with pytest.raises(DisabledActionError):
        kernel.apply(pif, idle, 2, "forward")
    stepped = kernel.apply(pif, idle, 1, "request")
    assert stepped.text() == "st.p1=rq st.p2=i st.p3=i st.p4=i"


def test_wave_steps_match_the_action_definitions():
    pif = protocols.make_pif(4).program
    sig = pif.signature
    # the reply wave travels back
    s = sig.parse_state("st.p1=rq st.p2=rq st.p3=rq st.p4=rp")
    assert kernel.apply(pif, s, 3, "back").text() == \
        "st.p1=rq st.p2=rq st.p3=rp st.p4=rp"
    # stop cleans up behind an idle left neighbor
    s = sig.parse_state("st.p1=i st.p2=rp st.p3=rp st.p4=rp")
    assert kernel.apply(pif, s, 2, "stop").text() == \
        "st.p1=i st.p2=i st.p3=rp st.p4=rp"


def test_alternating_bit_steps_worked_by_hand():
    abp = protocols.make_abp().program
    sig = abp.signature

    def step(text, pos, action):
        return kernel.apply(abp, sig.parse_state(text), pos, action).text()

    # matching ack: consume, flip the bit, send the next message
    assert step("ns=1 chpq=empty nr=1 chqp=a1", 1, "next") == \
        "ns=0 chpq=d0 nr=1 chqp=empty"
    # reply with a full ack channel: the fresh ack is lost
    assert step("ns=0 chpq=d1 nr=1 chqp=a0", 2, "reply") == \
        "ns=0 chpq=empty nr=1 chqp=a0"
    # reply adopts the incoming bit and acknowledges it
    assert step("ns=1 chpq=d1 nr=0 chqp=empty", 2, "reply") == \
        "ns=1 chpq=empty nr=1 chqp=a1"
    # timeout resends the current bit
    assert step("ns=0 chpq=empty nr=0 chqp=empty", 1, "timeout") == \
        "ns=0 chpq=d0 nr=0 chqp=empty"
    # stale ack: consumed, nothing else changes
    assert step("ns=1 chpq=d1 nr=0 chqp=a0", 1, "next") == \
        "ns=1 chpq=d1 nr=0 chqp=empty"


def test_commands_read_their_own_writes_in_order():
    # x := !x; y := x  must copy the new x into y
    x = VarRef(0, "x")
    y = VarRef(0, "y")
    prog = tiny_program(
        (Assign(x, NotRef(x)), Assign(y, x)),
        extra_vars=(VariableDecl("y", BOOL, "internal"),))
    start = prog.signature.parse_state("x=false y=false")
    assert kernel.apply(prog, start, 1, "go").text() == "x=true y=true"


def test_if_branches_follow_the_condition():
    x = VarRef(0, "x")
    prog = tiny_program(
        (If(Cmp(x, "=", Lit("false")),
            then=(Assign(x, Lit("true")),),
            orelse=(Assign(x, Lit("false")),)),))
    sig = prog.signature
    assert kernel.apply(prog, sig.parse_state("x=false"), 1, "go").text() == "x=true"
    assert kernel.apply(prog, sig.parse_state("x=true"), 1, "go").text() == "x=false"


def test_successors_are_distinct_and_encoded_ascending():
    cm = protocols.make_cm((2, 1, 3, 4)).program
    s = cm.signature.state_at(0)
    succ = kernel.successors(cm, s)
    assert [t.index for t in succ] == [1, 2, 4, 8]
    # a self-loop shows up as a successor equal to the state
    x = VarRef(0, "x")
    loop = tiny_program((Assign(x, x),))
    s0 = loop.signature.state_at(0)
    assert kernel.successors(loop, s0) == [s0]


def test_extended_state_covers_the_window_only():
    cm = protocols.make_cm((2, 1, 3, 4)).program
    s = cm.signature.parse_state(
        "access.p1=true access.p2=false access.p3=false access.p4=true")
    assert kernel.extended_state(cm, s, 2) == {
        (1, "access"): "true", (2, "access"): "false", (3, "access"): "false"}
    assert kernel.extended_state(cm, s, 1) == {
        (1, "access"): "true", (2, "access"): "false"}
    assert kernel.extended_state(cm, s, 4) == {
        (3, "access"): "false", (4, "access"): "true"}
    with pytest.raises(ModelError):
        kernel.extended_state(cm, s, 5)


def test_program_validation_rejects_bad_constructions():
    x = VarRef(0, "x")
    with pytest.raises(ModelError):  # assignment to an input
        tiny_program((Assign(x, Lit("true")),), kind="input")
    with pytest.raises(ModelError):  # literal outside the domain
        tiny_program((Assign(x, Lit("maybe")),))
    with pytest.raises(ModelError):  # negation of a non-boolean
        tiny_program((Assign(x, NotRef(x)),), domain=ST3)
    with pytest.raises(ModelError):  # comparing two literals
        tiny_program((Assign(x, x),), guard=Cmp(Lit("a"), "=", Lit("a")))
    with pytest.raises(ModelError):  # no left neighbor at position 1
        tiny_program((Assign(VarRef(-1, "x"), Lit("true")),))
    with pytest.raises(ModelError):  # undeclared variable
        tiny_program((Assign(VarRef(0, "nope"), Lit("true")),))
    with pytest.raises(ModelError):  # wider domain flows into narrower
        wide = VariableDecl("w", ST3, "internal")
        tiny_program((Assign(x, VarRef(0, "w")),), extra_vars=(wide,))


def test_program_positions_and_pids_validated():
    decl = (VariableDecl("x", BOOL, "internal"),)
    act = (Action("go", BoolLit(True), (Assign(VarRef(0, "x"), Lit("true")),)),)
    with pytest.raises(ModelError):  # positions must be contiguous from 1
        Program("p", (Process(index=2, pid=1, vars=decl, actions=act),))
    with pytest.raises(ModelError):  # duplicate pids
        Program("p", (Process(index=1, pid=7, vars=decl, actions=act),
                      Process(index=2, pid=7, vars=decl, actions=act)))


def test_universe_cap_and_env_override(monkeypatch):
    la = protocols.make_alternator(5).program
    assert len(kernel.universe(la)) == 32
    with pytest.raises(UniverseCapError):
        kernel.universe(la, cap=31)
    monkeypatch.setenv("STABILIQ_STATE_CAP", "16")
    assert kernel.state_cap() == 16
    with pytest.raises(UniverseCapError):
        kernel.universe(la)
    monkeypatch.setenv("STABILIQ_STATE_CAP", "not-a-number")
    with pytest.raises(ModelError):
        kernel.state_cap()


def test_universe_iterates_every_state_once():
    pif = protocols.make_pif(3).program
    uni = kernel.universe(pif)
    seen = [s.index for s in uni]
    assert seen == list(range(12))
    assert len(uni) == 12
