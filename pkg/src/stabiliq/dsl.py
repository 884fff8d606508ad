"""A small textual language for guarded-command chain protocols.

The shape of a source file:

    protocol alternator(N) {
      process first in 1..1 {
        var x: bool;
        step: self.x = right.x -> self.x := !self.x;
      }
      process middle in 2..N-1 { ... }
      process last in N..N { ... }
    }

Processes are declared in positional groups whose bounds are integers or
N-relative (N, N-1); the groups together must cover chain positions 1..N
exactly once. Before the groups a file may declare value domains
(`domain midst = { i, rq, rp };`) and an explicit identifier list
(`ids = [2, 1, 3, 4];`, defaulting to the positions). Variables are declared
`var`/`input`/`output name: bool-or-domain;`. Action commands are assignment
and two-way-branch sequences; every variable reference is qualified with
self, left, or right, which keeps the neighbor-only communication model a
syntactic fact.

parse_protocol returns a ParseResult carrying the validated kernel Program
or error diagnostics with stable codes; render produces canonical text that
parses back to a structurally equal program.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .kernel import (BOOL, Action, And, Assign, BoolLit, Cmp, Domain, If, Lit,
                     ModelError, Not, NotRef, Or, Process, Program, VarRef,
                     VariableDecl)

OFFSETS = {"self": 0, "left": -1, "right": 1}
RESERVED = frozenset(
    "protocol domain process in var input output ids if then else "
    "self left right true false bool".split())


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    line: int
    col: int
    code: str
    message: str

    def __str__(self):
        return "%d:%d: %s: %s [%s]" % (
            self.line, self.col, self.severity, self.message, self.code)


@dataclass
class ParseResult:
    program: Optional[Program]
    diagnostics: list

    @property
    def ok(self) -> bool:
        return self.program is not None and not any(
            d.severity == "error" for d in self.diagnostics)

    def unwrap(self) -> Program:
        if not self.ok:
            raise DslError(self.diagnostics)
        return self.program


class DslError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics)
                         or "invalid protocol source")


class _Abort(Exception):
    """Internal: parsing cannot continue; carries one diagnostic."""

    def __init__(self, diag: Diagnostic):
        self.diag = diag


# --------------------------------------------------------------------------
# Tokens.

@dataclass(frozen=True)
class _Token:
    kind: str  # ident | int | punct | eof
    text: str
    line: int
    col: int


_PUNCT2 = (":=", "!=", "->", "&&", "||", "..")
_PUNCT1 = "{}()[],;:.=!-"


def _tokenize(src: str) -> list:
    toks = []
    line, col, i = 1, 1, 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == "#":
            while i < n and src[i] != "\n":
                i += 1
        elif src[i:i + 2] in _PUNCT2:
            toks.append(_Token("punct", src[i:i + 2], line, col))
            i += 2
            col += 2
        elif c in _PUNCT1:
            toks.append(_Token("punct", c, line, col))
            i += 1
            col += 1
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Token("ident", src[i:j], line, col))
            col += j - i
            i = j
        elif c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Token("int", src[i:j], line, col))
            col += j - i
            i = j
        else:
            raise _Abort(Diagnostic("error", line, col, "SYNTAX",
                                    "unexpected character %r" % c))
    toks.append(_Token("eof", "", line, col))
    return toks


# --------------------------------------------------------------------------
# Source-level AST: kernel nodes plus the token that produced them, so
# validation can point at source locations before lowering.

@dataclass(frozen=True)
class _SVar:
    word: str
    name: str
    tok: _Token


@dataclass(frozen=True)
class _SLit:
    value: str
    tok: _Token


@dataclass(frozen=True)
class _SBool:
    value: bool


@dataclass(frozen=True)
class _SCmp:
    left: object
    op: str
    right: object
    tok: _Token


@dataclass(frozen=True)
class _SNot:
    expr: object


@dataclass(frozen=True)
class _SAnd:
    items: tuple


@dataclass(frozen=True)
class _SOr:
    items: tuple


@dataclass(frozen=True)
class _SAssign:
    target: _SVar
    negated: bool
    value: object  # _SVar | _SLit; negated means value is a _SVar under "!"
    tok: _Token


@dataclass(frozen=True)
class _SIf:
    cond: object
    then: tuple
    orelse: tuple


@dataclass
class _Group:
    name: str
    tok: _Token
    lo: tuple
    hi: tuple
    vars: list = field(default_factory=list)
    var_toks: dict = field(default_factory=dict)
    actions: list = field(default_factory=list)  # (name, tok, guard, stmts)


# --------------------------------------------------------------------------
# Parser.

class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self, k: int = 0) -> _Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self) -> _Token:
        tok = self.toks[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "eof"

    def expect(self, text: str, what: str = "") -> _Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            raise _Abort(Diagnostic(
                "error", tok.line, tok.col, "SYNTAX",
                "expected %r%s, found %s"
                % (text, " " + what if what else "",
                   repr(tok.text) if tok.kind != "eof" else "end of input")))
        return self.take()

    def ident(self, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise _Abort(Diagnostic(
                "error", tok.line, tok.col, "SYNTAX",
                "expected %s, found %r" % (what, tok.text or "end of input")))
        return self.take()

    # -- top level ----------------------------------------------------------

    def protocol(self):
        self.expect("protocol")
        name = self.ident("protocol name")
        self.expect("(")
        param = None
        if not self.at(")"):
            param = self.ident("parameter name").text
        self.expect(")")
        self.expect("{")
        domains = {}
        while self.at("domain"):
            self.domain(domains)
        ids = None
        ids_tok = None
        if self.at("ids"):
            ids_tok = self.take()
            self.expect("=")
            self.expect("[")
            ids = [int(self.int_tok().text)]
            while self.at(","):
                self.take()
                ids.append(int(self.int_tok().text))
            self.expect("]")
            self.expect(";")
        groups = []
        while self.at("process"):
            groups.append(self.group(param, domains))
        if not groups:
            tok = self.peek()
            raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                    "a protocol needs at least one "
                                    "process group"))
        self.expect("}")
        tok = self.peek()
        if tok.kind != "eof":
            raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                    "unexpected %r after protocol body"
                                    % tok.text))
        return name.text, param, domains, ids, ids_tok, groups

    def int_tok(self) -> _Token:
        tok = self.peek()
        if tok.kind != "int":
            raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                    "expected an integer, found %r"
                                    % (tok.text or "end of input")))
        return self.take()

    def domain(self, domains: dict):
        self.expect("domain")
        name = self.ident("domain name")
        if name.text == "bool" or name.text in domains:
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "DUPLICATE_NAME",
                "domain %r is already defined" % name.text))
        self.expect("=")
        self.expect("{")
        values = [self.value_tok().text]
        while self.at(","):
            self.take()
            v = self.value_tok()
            if v.text in values:
                raise _Abort(Diagnostic(
                    "error", v.line, v.col, "DUPLICATE_NAME",
                    "value %r repeats in domain %r" % (v.text, name.text)))
            values.append(v.text)
        self.expect("}")
        self.expect(";")
        domains[name.text] = Domain(name.text, tuple(values))

    def value_tok(self) -> _Token:
        tok = self.peek()
        if tok.kind in ("ident", "int"):
            return self.take()
        raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                "expected a value, found %r"
                                % (tok.text or "end of input")))

    # -- process groups -------------------------------------------------------

    def bound(self, param) -> tuple:
        tok = self.peek()
        if tok.kind == "int":
            self.take()
            return ("int", int(tok.text))
        if tok.kind == "ident":
            if param is not None and tok.text == param:
                self.take()
                offset = 0
                if self.at("-"):
                    self.take()
                    offset = int(self.int_tok().text)
                return ("n", offset)
            raise _Abort(Diagnostic(
                "error", tok.line, tok.col, "SYNTAX",
                "%r is not a protocol parameter" % tok.text))
        raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                "expected a position bound, found %r"
                                % (tok.text or "end of input")))

    def group(self, param, domains) -> _Group:
        self.expect("process")
        name = self.ident("group name")
        self.expect("in")
        lo = self.bound(param)
        self.expect("..")
        hi = self.bound(param)
        self.expect("{")
        grp = _Group(name.text, name, lo, hi)
        while self.peek().text in ("var", "input", "output"):
            self.vardecl(grp, domains)
        while self.peek().kind == "ident" and not self.at("}"):
            self.action(grp)
        self.expect("}")
        return grp

    def vardecl(self, grp: _Group, domains: dict):
        kindword = self.take().text
        kind = {"var": "internal", "input": "input", "output": "output"}[kindword]
        name = self.ident("variable name")
        if name.text in RESERVED:
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "SYNTAX",
                "%r is a reserved word" % name.text))
        if any(v.name == name.text for v in grp.vars):
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "DUPLICATE_NAME",
                "variable %r is already declared in this group" % name.text))
        self.expect(":")
        dom_tok = self.ident("domain name")
        if dom_tok.text == "bool":
            dom = BOOL
        elif dom_tok.text in domains:
            dom = domains[dom_tok.text]
        else:
            raise _Abort(Diagnostic(
                "error", dom_tok.line, dom_tok.col, "UNKNOWN_DOMAIN",
                "domain %r is not declared" % dom_tok.text))
        self.expect(";")
        grp.vars.append(VariableDecl(name.text, dom, kind))
        grp.var_toks[name.text] = name

    # -- actions ---------------------------------------------------------------

    def action(self, grp: _Group):
        name = self.ident("action name")
        if name.text in RESERVED:
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "SYNTAX",
                "%r is a reserved word" % name.text))
        if any(a[0] == name.text for a in grp.actions):
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "DUPLICATE_NAME",
                "action %r is already declared in this group" % name.text))
        self.expect(":")
        guard = self.guard()
        self.expect("->", "between guard and command")
        stmts = self.stmts(require_one=True)
        grp.actions.append((name.text, name, guard, tuple(stmts)))

    def stmts(self, require_one: bool = False) -> list:
        out = []
        while True:
            tok = self.peek()
            if tok.text in ("self", "left", "right"):
                out.append(self.assign())
            elif tok.text == "if":
                out.append(self.ifstmt())
            else:
                break
        if require_one and not out:
            tok = self.peek()
            raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                    "an action needs at least one statement"))
        return out

    def assign(self) -> _SAssign:
        target = self.varref()
        tok = self.expect(":=", "in assignment")
        negated = False
        if self.at("!"):
            self.take()
            negated = True
            value = self.varref()
        elif self.peek().text in OFFSETS:
            value = self.varref()
        else:
            v = self.value_tok()
            value = _SLit(v.text, v)
        self.expect(";")
        return _SAssign(target, negated, value, tok)

    def ifstmt(self) -> _SIf:
        self.expect("if")
        cond = self.guard()
        self.expect("then")
        then = self.block()
        orelse = ()
        if self.at("else"):
            self.take()
            orelse = self.block()
        return _SIf(cond, tuple(then), orelse)

    def block(self) -> list:
        self.expect("{")
        out = self.stmts()
        self.expect("}")
        return out

    def varref(self) -> _SVar:
        word = self.peek()
        if word.text not in OFFSETS:
            raise _Abort(Diagnostic(
                "error", word.line, word.col, "SYNTAX",
                "expected self, left, or right, found %r"
                % (word.text or "end of input")))
        self.take()
        self.expect(".")
        name = self.ident("variable name")
        if name.text in OFFSETS:
            raise _Abort(Diagnostic(
                "error", name.line, name.col, "NON_NEIGHBOR_REF",
                "a process can only read its immediate neighbors; "
                "%s.%s reaches further" % (word.text, name.text)))
        return _SVar(word.text, name.text, name)

    # -- guards ------------------------------------------------------------------

    def guard(self):
        items = [self.and_expr()]
        while self.at("||"):
            self.take()
            items.append(self.and_expr())
        return items[0] if len(items) == 1 else _SOr(tuple(items))

    def and_expr(self):
        items = [self.atom()]
        while self.at("&&"):
            self.take()
            items.append(self.atom())
        return items[0] if len(items) == 1 else _SAnd(tuple(items))

    def atom(self):
        tok = self.peek()
        if tok.text == "!":
            self.take()
            self.expect("(", "after '!'")
            inner = self.guard()
            self.expect(")")
            return _SNot(inner)
        if tok.text == "(":
            self.take()
            inner = self.guard()
            self.expect(")")
            return inner
        if tok.text == "true":
            self.take()
            return _SBool(True)
        if tok.text == "false":
            self.take()
            return _SBool(False)
        left = self.operand()
        op = self.peek()
        if op.text not in ("=", "!="):
            raise _Abort(Diagnostic(
                "error", op.line, op.col, "SYNTAX",
                "expected '=' or '!=' in comparison, found %r"
                % (op.text or "end of input")))
        self.take()
        right = self.operand()
        if isinstance(left, _SLit) and isinstance(right, _SLit):
            raise _Abort(Diagnostic(
                "error", op.line, op.col, "SYNTAX",
                "a comparison needs at least one variable"))
        return _SCmp(left, op.text, right, op)

    def operand(self):
        tok = self.peek()
        if tok.text in OFFSETS:
            return self.varref()
        if tok.kind in ("ident", "int"):
            self.take()
            return _SLit(tok.text, tok)
        raise _Abort(Diagnostic("error", tok.line, tok.col, "SYNTAX",
                                "expected a variable or value, found %r"
                                % (tok.text or "end of input")))


# --------------------------------------------------------------------------
# Validation and lowering.

class _Validator:
    def __init__(self, n: int, groups, group_of: dict):
        self.n = n
        self.groups = groups
        self.group_of = group_of  # position -> _Group
        self.diags: dict = {}

    def report(self, tok: _Token, code: str, message: str):
        key = (code, tok.line, tok.col)
        if key not in self.diags:
            self.diags[key] = Diagnostic("error", tok.line, tok.col,
                                         code, message)

    def decl_at(self, pos: int, ref: _SVar) -> Optional[VariableDecl]:
        target = pos + OFFSETS[ref.word]
        if not 1 <= target <= self.n:
            self.report(ref.tok, "NON_NEIGHBOR_REF",
                        "position %d has no %s neighbor" % (pos, ref.word))
            return None
        grp = self.group_of[target]
        for v in grp.vars:
            if v.name == ref.name:
                return v
        self.report(ref.tok, "UNDECLARED_VAR",
                    "no variable %r at position %d" % (ref.name, target))
        return None

    def check_expr(self, pos: int, expr):
        if isinstance(expr, (_SBool,)):
            return
        if isinstance(expr, _SCmp):
            ldecl = self.decl_at(pos, expr.left) \
                if isinstance(expr.left, _SVar) else None
            rdecl = self.decl_at(pos, expr.right) \
                if isinstance(expr.right, _SVar) else None
            if isinstance(expr.left, _SLit) and rdecl is not None:
                self.check_value(expr.left, rdecl.domain)
            if isinstance(expr.right, _SLit) and ldecl is not None:
                self.check_value(expr.right, ldecl.domain)
            return
        if isinstance(expr, _SNot):
            self.check_expr(pos, expr.expr)
            return
        if isinstance(expr, (_SAnd, _SOr)):
            for item in expr.items:
                self.check_expr(pos, item)

    def check_value(self, lit: _SLit, domain: Domain):
        if lit.value not in domain:
            self.report(lit.tok, "VALUE_OUTSIDE_DOMAIN",
                        "value %r is not in domain %s %r"
                        % (lit.value, domain.name, domain.values))

    def check_stmt(self, pos: int, stmt):
        if isinstance(stmt, _SAssign):
            tdecl = self.decl_at(pos, stmt.target)
            if tdecl is not None and tdecl.kind == "input":
                self.report(stmt.target.tok, "ASSIGN_TO_INPUT",
                            "input variable %r cannot be assigned"
                            % stmt.target.name)
            if stmt.negated:
                vdecl = self.decl_at(pos, stmt.value)
                for decl in (tdecl, vdecl):
                    if decl is not None and decl.domain.values != BOOL.values:
                        self.report(stmt.tok, "NOT_BOOL",
                                    "negation needs boolean variables; "
                                    "%r is %s" % (decl.name, decl.domain.name))
            elif isinstance(stmt.value, _SVar):
                vdecl = self.decl_at(pos, stmt.value)
                if tdecl is not None and vdecl is not None and \
                        not set(vdecl.domain.values) <= set(tdecl.domain.values):
                    self.report(stmt.tok, "VALUE_OUTSIDE_DOMAIN",
                                "%r ranges over %r, which does not fit "
                                "into %r" % (stmt.value.name,
                                             vdecl.domain.values,
                                             tdecl.domain.values))
            elif tdecl is not None:
                self.check_value(stmt.value, tdecl.domain)
        elif isinstance(stmt, _SIf):
            self.check_expr(pos, stmt.cond)
            for s in stmt.then:
                self.check_stmt(pos, s)
            for s in stmt.orelse:
                self.check_stmt(pos, s)

    def run(self):
        for grp in self.groups:
            for pos in _positions(grp, self.n):
                for _, _, guard, stmts in grp.actions:
                    self.check_expr(pos, guard)
                    for s in stmts:
                        self.check_stmt(pos, s)
        return list(self.diags.values())


def _positions(grp: _Group, n: int):
    lo = grp.lo[1] if grp.lo[0] == "int" else n - grp.lo[1]
    hi = grp.hi[1] if grp.hi[0] == "int" else n - grp.hi[1]
    return range(lo, hi + 1)


def _lower_expr(expr):
    if isinstance(expr, _SBool):
        return BoolLit(expr.value)
    if isinstance(expr, _SCmp):
        return Cmp(_lower_operand(expr.left), expr.op,
                   _lower_operand(expr.right))
    if isinstance(expr, _SNot):
        return Not(_lower_expr(expr.expr))
    if isinstance(expr, _SAnd):
        return And(tuple(_lower_expr(e) for e in expr.items))
    if isinstance(expr, _SOr):
        return Or(tuple(_lower_expr(e) for e in expr.items))
    raise TypeError(repr(expr))


def _lower_operand(op):
    if isinstance(op, _SVar):
        return VarRef(OFFSETS[op.word], op.name)
    return Lit(op.value)


def _lower_stmt(stmt):
    if isinstance(stmt, _SAssign):
        target = VarRef(OFFSETS[stmt.target.word], stmt.target.name)
        if stmt.negated:
            value = NotRef(VarRef(OFFSETS[stmt.value.word], stmt.value.name))
        elif isinstance(stmt.value, _SVar):
            value = VarRef(OFFSETS[stmt.value.word], stmt.value.name)
        else:
            value = Lit(stmt.value.value)
        return Assign(target, value)
    return If(_lower_expr(stmt.cond),
              tuple(_lower_stmt(s) for s in stmt.then),
              tuple(_lower_stmt(s) for s in stmt.orelse))


def parse_protocol(source: str, n: Optional[int] = None) -> ParseResult:
    """Parse, validate, and build a protocol program.

    n supplies the chain length for sources written against a parameter
    (`protocol name(N)`); parameterless sources ignore it. All validation
    problems come back as diagnostics; the program is present only when
    there are none.
    """
    try:
        parser = _Parser(_tokenize(source))
        name, param, domains, ids, ids_tok, groups = parser.protocol()
    except _Abort as abort:
        return ParseResult(None, [abort.diag])

    diags: list = []
    if param is not None and n is None:
        diags.append(Diagnostic(
            "error", 1, 1, "MISSING_PARAM",
            "protocol %r takes a parameter %s; supply its value" % (name, param)))
        return ParseResult(None, diags)
    if param is None:
        # Bounds of a parameterless protocol are all literal; infer the
        # chain length from them.
        n = max(g.hi[1] for g in groups)
    if n < 1:
        diags.append(Diagnostic("error", 1, 1, "GROUP_RANGE",
                                "chain length must be at least 1; got %d" % n))
        return ParseResult(None, diags)

    group_of: dict = {}
    for grp in groups:
        for pos in _positions(grp, n):
            if not 1 <= pos <= n:
                diags.append(Diagnostic(
                    "error", grp.tok.line, grp.tok.col, "GROUP_RANGE",
                    "group %r covers position %d, outside 1..%d"
                    % (grp.name, pos, n)))
            elif pos in group_of:
                diags.append(Diagnostic(
                    "error", grp.tok.line, grp.tok.col, "GROUP_RANGE",
                    "groups %r and %r both cover position %d"
                    % (group_of[pos].name, grp.name, pos)))
            else:
                group_of[pos] = grp
    uncovered = [p for p in range(1, n + 1) if p not in group_of]
    if uncovered and not diags:
        diags.append(Diagnostic(
            "error", 1, 1, "GROUP_RANGE",
            "no group covers position%s %s"
            % ("" if len(uncovered) == 1 else "s",
               ", ".join(str(p) for p in uncovered))))
    if diags:
        return ParseResult(None, diags)

    pids = list(range(1, n + 1))
    if ids is not None:
        if len(ids) != n or len(set(ids)) != len(ids):
            diags.append(Diagnostic(
                "error", ids_tok.line, ids_tok.col, "IDS_MISMATCH",
                "ids must list %d distinct integers; got %r" % (n, ids)))
            return ParseResult(None, diags)
        pids = ids

    diags.extend(_Validator(n, groups, group_of).run())
    if diags:
        return ParseResult(None, diags)

    processes = []
    lowered: dict = {}
    for pos in range(1, n + 1):
        grp = group_of[pos]
        if id(grp) not in lowered:
            lowered[id(grp)] = tuple(
                Action(aname, _lower_expr(guard),
                       tuple(_lower_stmt(s) for s in stmts))
                for aname, _, guard, stmts in grp.actions)
        processes.append(Process(
            index=pos, pid=pids[pos - 1],
            vars=tuple(grp.vars), actions=lowered[id(grp)]))
    try:
        program = Program(name, processes)
    except ModelError as exc:
        return ParseResult(None, [Diagnostic("error", 1, 1, "MODEL", str(exc))])
    return ParseResult(program, diags)


# --------------------------------------------------------------------------
# Rendering.

def _expr_text(expr, prec: int = 0) -> str:
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Cmp):
        return "%s %s %s" % (_operand_text(expr.left), expr.op,
                             _operand_text(expr.right))
    if isinstance(expr, Not):
        return "!(%s)" % _expr_text(expr.expr)
    if isinstance(expr, And):
        text = " && ".join(_expr_text(e, 2) for e in expr.items)
        return "(%s)" % text if prec > 2 else text
    if isinstance(expr, Or):
        text = " || ".join(_expr_text(e, 1) for e in expr.items)
        return "(%s)" % text if prec > 1 else text
    raise TypeError(repr(expr))


def _operand_text(op) -> str:
    if isinstance(op, VarRef):
        word = {0: "self", -1: "left", 1: "right"}[op.offset]
        return "%s.%s" % (word, op.name)
    return op.value


def _rhs_text(value) -> str:
    if isinstance(value, NotRef):
        return "!" + _operand_text(value.ref)
    return _operand_text(value)


def _stmt_lines(stmt, indent: int) -> list:
    pad = " " * indent
    if isinstance(stmt, Assign):
        return ["%s%s := %s;" % (pad, _operand_text(stmt.target),
                                 _rhs_text(stmt.value))]
    lines = ["%sif %s then {" % (pad, _expr_text(stmt.cond))]
    for s in stmt.then:
        lines.extend(_stmt_lines(s, indent + 2))
    if stmt.orelse:
        lines.append("%s} else {" % pad)
        for s in stmt.orelse:
            lines.extend(_stmt_lines(s, indent + 2))
    lines.append("%s}" % pad)
    return lines


def _bound_text(value: int, n: int) -> str:
    if n >= 3:
        if value == n:
            return "N"
        if value == n - 1:
            return "N-1"
    return str(value)


def _group_key(proc: Process) -> tuple:
    return (proc.vars, proc.actions)


def _group_name(lo: int, hi: int, n: int, index: int, total: int) -> str:
    if total == 1:
        return "p"
    if lo == hi == 1:
        return "root"
    if lo == hi == n:
        return "leaf"
    if (lo, hi) == (2, n - 1):
        return "middle"
    return "g%d" % index


def render(program: Program) -> str:
    """Canonical source text for a program: structurally identical groups
    are merged into maximal runs, bounds are written N-relative for chains
    of 3 or more, and the identifier list appears only when it differs from
    the positions. parse_protocol(render(p), n) rebuilds an equal program."""
    n = program.n
    runs = []
    for proc in program.processes:
        key = _group_key(proc)
        if runs and runs[-1][0] == key:
            runs[-1][2] = proc.index
        else:
            runs.append([key, proc.index, proc.index])
    symbolic = n >= 3
    lines = ["protocol %s(%s) {" % (program.name, "N" if symbolic else "")]

    domains = []
    for proc in program.processes:
        for v in proc.vars:
            if v.domain.values != BOOL.values and v.domain not in domains:
                domains.append(v.domain)
    for dom in domains:
        lines.append("  domain %s = { %s };" % (dom.name, ", ".join(dom.values)))

    pids = [p.pid for p in program.processes]
    if pids != list(range(1, n + 1)):
        lines.append("  ids = [%s];" % ", ".join(str(i) for i in pids))

    kind_word = {"internal": "var", "input": "input", "output": "output"}
    for gi, (key, lo, hi) in enumerate(runs, start=1):
        name = _group_name(lo, hi, n, gi, len(runs))
        lines.append("  process %s in %s..%s {" % (
            name, _bound_text(lo, n), _bound_text(hi, n)))
        decls, actions = key
        for v in decls:
            dom = "bool" if v.domain.values == BOOL.values else v.domain.name
            lines.append("    %s %s: %s;" % (kind_word[v.kind], v.name, dom))
        for action in actions:
            guard = _expr_text(action.guard)
            if len(action.command) == 1 and isinstance(action.command[0], Assign):
                stmt = action.command[0]
                lines.append("    %s: %s -> %s := %s;" % (
                    action.name, guard, _operand_text(stmt.target),
                    _rhs_text(stmt.value)))
            else:
                lines.append("    %s: %s ->" % (action.name, guard))
                for s in action.command:
                    lines.extend(_stmt_lines(s, 6))
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
