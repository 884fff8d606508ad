"""Command line front end.

Four subcommands share one protocol-selection vocabulary (a built-in via
--protocol, or a .gcp file via --file, sized with --n / --ids):

  verify         run a check: closed, convergence, stabilizing, ideal,
                 or pif-coverage; exit 0 iff every selected check holds
  impossibility  merge-closure analysis of a specification universe
  simulate       run the central daemon from a start state, print the
                 trace and its stutter-eliminated image
  export-dot     write the transition system (or its component DAG)
                 as Graphviz source

Exit codes: 0 all checks hold / command succeeded, 1 a check failed
(witness in the report), 2 usage or configuration error. JSON reports
carry a schema_version so downstream consumers can pin their parsers.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from typing import Optional

from . import dsl, explorer, protocols, specs
from . import mapping as mappingmod
from .kernel import ModelError, Program, State, UniverseCapError, state_cap
from .mapping import IdenticalMapping

SCHEMA_VERSION = 1

CHECKS = ("closed", "convergence", "stabilizing", "ideal", "pif-coverage")
POLICY_WORDS = {
    "allowed": specs.DIVERGENCE_ALLOWED,
    "forbidden": specs.DIVERGENCE_FORBIDDEN,
}


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# Protocol selection.

def _add_protocol_options(sub: argparse.ArgumentParser):
    sub.add_argument("--protocol", choices=sorted(protocols.BUILDERS),
                     help="a built-in protocol")
    sub.add_argument("--file", metavar="PATH",
                     help="a .gcp protocol source file")
    sub.add_argument("--n", type=int, metavar="N",
                     help="chain length for sized protocols")
    sub.add_argument("--ids", metavar="I,J,...",
                     help="process identifiers for cm, highest priority wins")
    sub.add_argument("--cap", type=int, metavar="STATES",
                     help="universe size cap (default %d, or the "
                          "STABILIQ_STATE_CAP environment variable)"
                          % state_cap())


def _parse_ids(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError("--ids wants a comma-separated list of integers, "
                         "got %r" % text)


def _load(args) -> tuple:
    """Resolve the protocol options to (program, bundle-or-None)."""
    if (args.protocol is None) == (args.file is None):
        raise UsageError("choose exactly one of --protocol and --file")
    if args.file is not None:
        try:
            with open(args.file) as handle:
                source = handle.read()
        except OSError as exc:
            raise UsageError(str(exc))
        result = dsl.parse_protocol(source, n=args.n)
        if not result.ok:
            raise UsageError("%s does not parse:\n%s" % (
                args.file, "\n".join(str(d) for d in result.diagnostics)))
        return result.program, None

    name = args.protocol
    if name == "cm":
        if args.ids is not None:
            ids = _parse_ids(args.ids)
        elif args.n is not None:
            ids = tuple(range(1, args.n + 1))
        else:
            raise UsageError("cm needs --ids (or --n for identity ids)")
        bundle = protocols.make_cm(ids)
    elif name == "abp":
        bundle = protocols.make_abp()
    else:
        if args.n is None:
            raise UsageError("%s needs --n" % name)
        bundle = protocols.BUILDERS[name](args.n)
    return bundle.program, bundle


def _invariants(bundle) -> dict:
    if bundle is not None:
        return bundle.invariants
    return {"true": lambda s: True}


def _resolve_predicate(bundle, name: str):
    table = _invariants(bundle)
    if name not in table:
        raise UsageError("unknown predicate %r; available: %s"
                         % (name, ", ".join(sorted(table))))
    return table[name]


def _mapping_for(program: Program, bundle):
    if bundle is not None:
        return bundle.mapping
    if all(v.external for p in program.processes for v in p.vars):
        return IdenticalMapping()
    raise UsageError("file-based protocols with internal variables have no "
                     "specification mapping; use a built-in protocol")


# --------------------------------------------------------------------------
# verify.

def _pif_coverage(program: Program) -> specs.Verdict:
    """Classify every universe state against the extended wave predicates
    and report how much of the universe they cover. This is an analysis,
    not a property: it always completes, and the uncovered states are the
    finding."""
    total = 0
    uncovered = []
    for state in program.signature.states():
        total += 1
        if not specs.pif_prime(state):
            uncovered.append(state)
    notes = ["%d of %d states satisfy the extended wave predicates"
             % (total - len(uncovered), total)]
    if uncovered:
        notes.append("the extended wave predicates do not cover the "
                     "universe; uncovered states follow")
        for state in uncovered[:20]:
            notes.append("uncovered: %s" % state.text())
        if len(uncovered) > 20:
            notes.append("... and %d more" % (len(uncovered) - 20))
    else:
        notes.append("the extended wave predicates cover the universe")
    return specs.Verdict(
        check="pif-coverage", holds=True, witness=None,
        stats={"states": total, "covered": total - len(uncovered),
               "uncovered": len(uncovered)},
        notes=notes)


def cmd_verify(args) -> int:
    program, bundle = _load(args)
    policy = POLICY_WORDS[args.stutter_policy] if args.stutter_policy else None
    default_pred = bundle.default_invariant if bundle is not None else "true"

    if args.check == "pif-coverage":
        if bundle is None or bundle.name != "pif":
            raise UsageError("pif-coverage applies to --protocol pif")
        verdict = _pif_coverage(program)
    elif args.check == "closed":
        pred = _resolve_predicate(bundle, args.predicate or default_pred)
        ts = explorer.build_transition_system(program, cap=args.cap)
        verdict = specs.check_closed(program, pred, ts=ts)
    elif args.check == "convergence":
        pred = _resolve_predicate(bundle, args.predicate or default_pred)
        ts = explorer.build_transition_system(program, cap=args.cap)
        verdict = specs.check_convergence(program, pred, ts=ts)
    elif args.check == "stabilizing":
        if bundle is None:
            raise UsageError("stabilizing checks need a built-in protocol")
        spec = bundle.strict_spec or bundle.ideal_spec
        if policy is not None:
            spec = spec.with_policy(policy)
        invariant = _resolve_predicate(bundle, args.invariant
                                       or bundle.default_invariant)
        ts = explorer.build_transition_system(program, cap=args.cap)
        verdict = specs.check_stabilizing(program, bundle.mapping, spec,
                                          invariant, ts=ts)
    else:  # ideal
        if bundle is None:
            raise UsageError("ideal checks need a built-in protocol")
        spec = bundle.ideal_spec
        if policy is not None:
            spec = spec.with_policy(policy)
        ts = explorer.build_transition_system(program, cap=args.cap)
        verdict = specs.check_ideal_stabilizing(program, bundle.mapping,
                                                spec, ts=ts)

    print("protocol %s  chain length %d  universe %d states"
          % (program.name, program.n, program.signature.size))
    print(verdict.summary())
    stats = "  ".join("%s=%s" % (k, v) for k, v in verdict.stats.items())
    print("  stats: %s" % stats)
    print("verify: %s" % ("ok" if verdict.holds else "FAILED"))

    if args.json:
        report = {
            "schema_version": SCHEMA_VERSION,
            "tool": "stabiliq",
            "command": "verify",
            "protocol": program.name,
            "n": program.n,
            "universe": program.signature.size,
            "ok": verdict.holds,
            "verdicts": [verdict.to_dict()],
        }
        _write_json(args.json, report)
    return 0 if verdict.holds else 1


# --------------------------------------------------------------------------
# impossibility.

def cmd_impossibility(args) -> int:
    if args.protocol == "le":
        if args.n is None:
            raise UsageError("le needs --n")
        fixture = protocols.make_le(args.n)
        sig = fixture.signature
        allowed, disallowed = fixture.allowed, fixture.disallowed
        subject = "le chain length %d" % args.n
    elif args.allowed_file and args.disallowed_file:
        try:
            with open(args.allowed_file) as handle:
                allowed_text = handle.read()
            with open(args.disallowed_file) as handle:
                disallowed_text = handle.read()
        except OSError as exc:
            raise UsageError(str(exc))
        sig, (allowed, disallowed) = mappingmod.read_spec_state_sets(
            allowed_text, disallowed_text)
        subject = "%s / %s" % (args.allowed_file, args.disallowed_file)
    elif args.protocol is not None:
        raise UsageError("impossibility analysis ships a fixture for le "
                         "only; others need --allowed-file/--disallowed-file")
    else:
        raise UsageError("provide --protocol le with --n, or both "
                         "--allowed-file and --disallowed-file")

    result = mappingmod.check_ideal_possibility(allowed, disallowed, sig)
    print("specification universe: %s  (%d states, %d allowed)"
          % (subject, result.universe_size, result.allowed_size))
    if result.possible:
        print("verdict: possible  (the allowed set is closed under merging; "
              "closure size %d)" % result.closure_size)
    else:
        print("verdict: impossible")
        print("  witness: %s" % result.witness.text())
        print("  merged into the allowed set at generation %d"
              % result.generation)
        print("  every program whose specification forces the allowed set "
              "can be driven into this disallowed state")
    if args.json:
        report = {
            "schema_version": SCHEMA_VERSION,
            "tool": "stabiliq",
            "command": "impossibility",
            "subject": subject,
            "possible": result.possible,
            "witness": None if result.witness is None
            else result.witness.text(),
            "generation": result.generation,
            "closure_size": result.closure_size,
            "allowed_size": result.allowed_size,
            "universe_size": result.universe_size,
        }
        _write_json(args.json, report)
    return 0


# --------------------------------------------------------------------------
# simulate.

def _start_state(program: Program, text: str, seed: int) -> State:
    sig = program.signature
    if text == "random":
        return sig.state_at(random.Random(seed).randrange(sig.size))
    if text in ("all-idle", "all-false"):
        target = "i" if text == "all-idle" else "false"
        assignment = {}
        for pos, name, domain in sig.slots:
            if target not in domain:
                raise UsageError(
                    "--from %s needs every variable to admit %r; "
                    "%s at position %d ranges over %r"
                    % (text, target, name, pos, domain.values))
            assignment[(pos, name)] = target
        return sig.state(assignment)
    return sig.parse_state(text)


def cmd_simulate(args) -> int:
    program, bundle = _load(args)
    if args.steps < 0:
        raise UsageError("--steps must be nonnegative")
    start = _start_state(program, args.start, args.seed)
    comp = explorer.run(program, start, steps=args.steps, seed=args.seed,
                        policy=args.policy)
    print("protocol %s  policy %s  seed %d" % (program.name, args.policy,
                                               args.seed))
    print("%6s  %-14s %s" % ("step", "action", "state"))
    print("%6d  %-14s %s" % (0, "-", comp.states[0].text()))
    for i, (pos, action) in enumerate(comp.labels):
        print("%6d  %-14s %s" % (i + 1, "p%d:%s" % (pos, action),
                                 comp.states[i + 1].text()))
    if comp.hit_terminal:
        print("terminal state: no action is enabled")
    elif comp.lasso_start is not None:
        print("lasso: the final state first appeared at step %d; the daemon "
              "can repeat the loop forever" % comp.lasso_start)
    else:
        print("step budget exhausted before a terminal or a revisit")

    try:
        spec_mapping = _mapping_for(program, bundle)
    except UsageError:
        spec_mapping = None
    if spec_mapping is not None:
        seq = explorer.image(comp, spec_mapping)
        print("specification image (stutters removed):")
        for s in seq.states:
            print("        %s" % s.text())
        if seq.stutter_divergent:
            print("stutter divergence: the lasso leaves the image constant")
    return 0


# --------------------------------------------------------------------------
# export-dot.

def cmd_export_dot(args) -> int:
    program, bundle = _load(args)
    ts = explorer.build_transition_system(program, cap=args.cap)
    color_pred = None
    if args.color:
        color_pred = _resolve_predicate(bundle, args.color)
    if args.condensed:
        text = explorer.condensation_to_dot(ts, explorer.condense(ts),
                                            name=program.name)
    else:
        text = explorer.to_dot(ts, color_pred=color_pred, name=program.name)
    if args.output:
        with open(args.output, "w") as handle:
            handle.write(text)
        print("wrote %s  (%d states, %d edges)"
              % (args.output, ts.size, ts.edge_count()))
    else:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------
# Plumbing.

def _write_json(path: str, report: dict):
    with open(path, "w") as handle:
        json.dump(report, handle, indent=2)
        handle.write("\n")
    print("json report: %s" % path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stabiliq",
        description="verification workbench for ideally stabilizing "
                    "chain protocols")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_verify = sub.add_parser(
        "verify", help="check a protocol against its specification")
    _add_protocol_options(p_verify)
    p_verify.add_argument("--check", choices=CHECKS, required=True)
    p_verify.add_argument("--predicate", metavar="NAME",
                          help="state predicate for closed/convergence "
                               "checks (default: the protocol's invariant)")
    p_verify.add_argument("--invariant", metavar="NAME",
                          help="invariant for the stabilizing check")
    p_verify.add_argument("--stutter-policy", choices=sorted(POLICY_WORDS),
                          help="override the specification's stutter "
                               "divergence policy")
    p_verify.add_argument("--json", metavar="PATH",
                          help="also write a JSON report")
    p_verify.set_defaults(func=cmd_verify)

    p_imp = sub.add_parser(
        "impossibility",
        help="merge-closure analysis of a specification universe")
    p_imp.add_argument("--protocol", choices=["le"],
                       help="a built-in specification fixture")
    p_imp.add_argument("--n", type=int, metavar="N")
    p_imp.add_argument("--allowed-file", metavar="PATH",
                       help="file of allowed spec states, one per line")
    p_imp.add_argument("--disallowed-file", metavar="PATH",
                       help="file of disallowed spec states, one per line")
    p_imp.add_argument("--json", metavar="PATH",
                       help="also write a JSON report")
    p_imp.set_defaults(func=cmd_impossibility)

    p_sim = sub.add_parser(
        "simulate", help="run the central daemon and print the trace")
    _add_protocol_options(p_sim)
    p_sim.add_argument("--from", dest="start", default="random",
                       metavar="STATE",
                       help="start state: canonical var=value text, "
                            "all-idle, all-false, or random (default)")
    p_sim.add_argument("--policy", choices=explorer.POLICIES,
                       default="uniform-random")
    p_sim.add_argument("--steps", type=int, default=20)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=cmd_simulate)

    p_dot = sub.add_parser(
        "export-dot", help="write the transition system as Graphviz source")
    _add_protocol_options(p_dot)
    p_dot.add_argument("-o", "--output", metavar="PATH",
                       help="output file (default: standard output)")
    p_dot.add_argument("--condensed", action="store_true",
                       help="export the component DAG instead of the "
                            "full system")
    p_dot.add_argument("--color", metavar="NAME",
                       help="fill states satisfying this named predicate")
    p_dot.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if getattr(args, "func", None) is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except UniverseCapError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (ModelError, dsl.DslError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
