"""Lexer and recursive-descent parser for `.lsc` sources.

Declarations start in column 1; anything indented continues the previous
declaration.  The parser produces a surface AST (``S*`` nodes) that
:mod:`lambdasc.desugar` elaborates into core terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .syntax import PCon, PLit, PPair, PUnit, PVar, PWild
from .types import (
    CompType, TApp, TCon, TFun, THandler, TLam, TPair, TVar, UNIT, ValueType,
)


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class ParseError(Exception):
    def __init__(self, span: SourceSpan, expected, found: str):
        self.span = span
        self.expected = sorted(set(expected))
        self.found = found
        exp = ", ".join(self.expected) if self.expected else "nothing"
        super().__init__(f"{span}: parse error: expected {exp} but found {found}")


# --- tokens -----------------------------------------------------------------

KEYWORDS = {
    "return", "op", "sc", "with", "handle", "handler", "do", "let", "in", "fwd",
    "bind", "if", "then", "else", "case", "of", "data", "effect", "fun", "forall",
    "absurd", "true", "false",
}

SYMBOLS = [
    "->^", "->", "<-", "<>", "<=", ">=", "=>", "~>", "::", "++",
    "(", ")", "[", "]", "{", "}", ",", ";", ".", "\\", "!", "<", ">", "=", "+",
    "-", "*", ":", "|",
]

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>--[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<char>'(?:[^'\\\n]|\\.)')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>""" + "|".join(re.escape(s) for s in SYMBOLS) + r""")
""", re.VERBOSE)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'", "0": "\0", "r": "\r"}


def _unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


@dataclass(frozen=True)
class Token:
    kind: str  # int | string | char | ident | kw | sym | eof
    text: str
    value: object
    line: int
    col: int
    end_col: int


def tokenize(src: str, file: str = "<input>") -> list:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            col = pos - line_start + 1
            span = SourceSpan(file, line, col, line, col + 1)
            raise ParseError(span, ["a token"], repr(src[pos]))
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("ws", "comment"):
            pass
        else:
            value: object = text
            if kind == "int":
                value = int(text)
            elif kind == "string":
                value = _unescape(text[1:-1])
            elif kind == "char":
                value = _unescape(text[1:-1])
            elif kind == "ident" and text in KEYWORDS:
                kind = "kw"
            toks.append(Token(kind, text, value, line, col, col + len(text)))
        pos = m.end()
    return toks


# --- surface AST ------------------------------------------------------------


@dataclass(frozen=True)
class SExpr:
    pass


def _sp():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class SVar(SExpr):
    name: str
    span: object = _sp()


@dataclass(frozen=True)
class SLit(SExpr):
    value: object
    kind: str
    span: object = _sp()


@dataclass(frozen=True)
class SUnit(SExpr):
    span: object = _sp()


@dataclass(frozen=True)
class STuple(SExpr):
    items: tuple
    span: object = _sp()


@dataclass(frozen=True)
class SList(SExpr):
    items: tuple
    span: object = _sp()


@dataclass(frozen=True)
class SApp(SExpr):
    fn: SExpr
    arg: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SBin(SExpr):
    op: str
    left: SExpr
    right: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SLam(SExpr):
    params: tuple  # of patterns
    body: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SReturn(SExpr):
    value: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SOp(SExpr):
    label: str
    arg: SExpr
    var: Optional[str]
    body: Optional[SExpr]
    span: object = _sp()


@dataclass(frozen=True)
class SSc(SExpr):
    label: str
    arg: SExpr
    var: str
    scoped: SExpr
    kvar: Optional[str]
    body: Optional[SExpr]
    span: object = _sp()


@dataclass(frozen=True)
class SWith(SExpr):
    handler: SExpr
    body: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SClause:
    kind: str  # return | op | sc | fwd | bind
    label: Optional[str]
    binders: tuple  # patterns (return/op/sc first binder) and names
    body: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SHandler(SExpr):
    annotation: Optional[ValueType]
    clauses: tuple
    span: object = _sp()


@dataclass(frozen=True)
class SDo(SExpr):
    stmts: tuple  # of (pattern | None, SExpr)
    span: object = _sp()


@dataclass(frozen=True)
class SIf(SExpr):
    cond: SExpr
    then: SExpr
    orelse: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SCase(SExpr):
    scrutinee: SExpr
    alts: tuple  # of (pattern, guard | None, body)
    span: object = _sp()


@dataclass(frozen=True)
class SLet(SExpr):
    pat: object
    value: SExpr
    body: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SAbsurd(SExpr):
    value: SExpr
    span: object = _sp()


# raw rows: names are resolved into labels / a tail variable once effects are known
@dataclass(frozen=True)
class SRow:
    names: tuple


@dataclass(frozen=True)
class SScheme:
    quantified: Optional[tuple]  # None when no `forall` was written
    body: ValueType


# declarations


@dataclass(frozen=True)
class DEffect:
    flavor: str
    name: str
    arg: ValueType
    res: ValueType
    span: object = _sp()


@dataclass(frozen=True)
class DData:
    name: str
    params: tuple
    ctors: tuple  # of (name, tuple of types)
    span: object = _sp()


@dataclass(frozen=True)
class DSig:
    name: str
    scheme: SScheme
    span: object = _sp()


@dataclass(frozen=True)
class DDef:
    name: str
    params: tuple
    body: SExpr
    span: object = _sp()


@dataclass(frozen=True)
class SurfaceProgram:
    decls: tuple
    file: str = "<input>"


# --- parser -----------------------------------------------------------------

_EOF = Token("eof", "end of input", None, 0, 0, 0)


class Parser:
    def __init__(self, toks: list, file: str):
        self.toks = toks
        self.pos = 0
        self.file = file
        self.furthest = -1
        self.expected: set = set()

    # token helpers
    def peek(self, k: int = 0) -> Token:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else self._eof()

    def _eof(self) -> Token:
        if self.toks:
            last = self.toks[-1]
            return Token("eof", "end of input", None, last.line, last.end_col, last.end_col)
        return Token("eof", "end of input", None, 1, 1, 1)

    def _span(self, start: Token, end: Optional[Token] = None) -> SourceSpan:
        end = end or (self.toks[self.pos - 1] if self.pos > 0 else start)
        return SourceSpan(self.file, start.line, start.col, end.line, end.end_col)

    def is_(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("sym", "kw") and t.text == text

    def _note(self, what: str):
        if self.pos > self.furthest:
            self.furthest = self.pos
            self.expected = {what}
        elif self.pos == self.furthest:
            self.expected.add(what)

    def accept(self, text: str) -> Optional[Token]:
        if self.is_(text):
            t = self.peek()
            self.pos += 1
            return t
        self._note(repr(text))
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            self.fail()
        return t

    def ident(self) -> Token:
        t = self.peek()
        if t.kind == "ident" and t.text != "_":
            self.pos += 1
            return t
        self._note("identifier")
        self.fail()

    def binder(self) -> str:
        t = self.peek()
        if t.kind == "ident":
            self.pos += 1
            return t.text
        self._note("binder")
        self.fail()

    def fail(self):
        t = self.toks[self.furthest] if 0 <= self.furthest < len(self.toks) else self.peek()
        if self.furthest >= len(self.toks):
            t = self._eof()
        span = SourceSpan(self.file, t.line, t.col, t.line, t.end_col)
        found = t.text if t.kind != "eof" else "end of input"
        raise ParseError(span, self.expected, found)

    def at_end(self) -> bool:
        return self.pos >= len(self.toks)

    # ---- types

    def scheme(self) -> SScheme:
        if self.accept("forall"):
            qs = []
            while not self.is_("."):
                qs.append(self.ident().text)
            self.expect(".")
            return SScheme(tuple(qs), self.type_())
        return SScheme(None, self.type_())

    def type_(self) -> ValueType:
        if self.is_("fun"):
            self.pos += 1
            param = self.ident().text
            self.expect("->")
            return TLam(param, self.type_())
        left = self.sum_type()
        if self.accept("->"):
            return TFun(left, self.comp_type())
        if self.accept("->^"):
            row = self.row_spec()
            return TFun(left, CompType(self.type_(), row))
        if self.is_("!"):
            src = self.comp_tail(left)
            self.expect("=>")
            return THandler(src, self.comp_type())
        return left

    def comp_type(self) -> CompType:
        return self.comp_tail(self.sum_type())

    def comp_tail(self, value: ValueType) -> CompType:
        self.expect("!")
        return CompType(value, self.row())

    def row_spec(self) -> SRow:
        if self.is_("<") or self.is_("<>"):
            return self.row()
        return SRow((self.ident().text,))

    def row(self) -> SRow:
        if self.accept("<>"):
            return SRow(())
        self.expect("<")
        names = []
        if not self.is_(">"):
            names.append(self.ident().text)
            while self.accept(";"):
                names.append(self.ident().text)
        self.expect(">")
        return SRow(tuple(names))

    def sum_type(self) -> ValueType:
        left = self.app_type()
        if self.accept("+"):
            return TCon("Sum", (left, self.sum_type()))
        return left

    def app_type(self) -> ValueType:
        head = self.atom_type()
        args = []
        while self._starts_atom_type():
            args.append(self.atom_type())
        if not args:
            return head
        if isinstance(head, TCon) and not head.args:
            return TCon(head.name, tuple(args))
        out = head
        for a in args:
            out = TApp(out, a)
        return out

    def _starts_atom_type(self) -> bool:
        t = self.peek()
        return (t.kind == "ident" and t.text != "_") or self.is_("(")

    def atom_type(self) -> ValueType:
        t = self.peek()
        if t.kind == "ident" and t.text != "_":
            self.pos += 1
            if t.text[0].isupper():
                return TCon(t.text)
            return TVar(t.text)
        if self.accept("("):
            if self.accept(")"):
                return UNIT
            first = self.type_()
            if self.accept(","):
                items = [first, self.type_()]
                while self.accept(","):
                    items.append(self.type_())
                self.expect(")")
                out = items[-1]
                for it in reversed(items[:-1]):
                    out = TPair(it, out)
                return out
            self.expect(")")
            return first
        self._note("type")
        self.fail()

    # ---- patterns

    def pattern(self):
        start = self.peek()
        left = self.pat_app()
        if self.accept("::"):
            right = self.pattern()
            return PCon("::", (left, right), span=self._span(start))
        return left

    def pat_app(self):
        t = self.peek()
        if t.kind == "ident" and t.text != "_" and self._starts_pat_atom(1):
            self.pos += 1
            args = []
            while self._starts_pat_atom():
                args.append(self.pat_atom())
            return PCon(t.text, tuple(args), span=self._span(t))
        return self.pat_atom()

    def _starts_pat_atom(self, k: int = 0) -> bool:
        t = self.peek(k)
        if t.kind in ("ident", "int", "string", "char"):
            return True
        return t.kind in ("sym", "kw") and t.text in ("(", "[", "true", "false")

    def pat_atom(self):
        t = self.peek()
        if t.kind == "ident":
            self.pos += 1
            if t.text == "_":
                return PWild(span=self._span(t))
            return PVar(t.text, span=self._span(t))
        if t.kind == "int":
            self.pos += 1
            return PLit(t.value, "Int", span=self._span(t))
        if t.kind == "string":
            self.pos += 1
            return PLit(t.value, "String", span=self._span(t))
        if t.kind == "char":
            self.pos += 1
            return PLit(t.value, "Char", span=self._span(t))
        if self.accept("true"):
            return PLit(True, "Bool", span=self._span(t))
        if self.accept("false"):
            return PLit(False, "Bool", span=self._span(t))
        if self.accept("["):
            items = []
            if not self.is_("]"):
                items.append(self.pattern())
                while self.accept(","):
                    items.append(self.pattern())
            self.expect("]")
            out = PCon("[]", (), span=self._span(t))
            for it in reversed(items):
                out = PCon("::", (it, out), span=self._span(t))
            return out
        if self.accept("("):
            if self.accept(")"):
                return PUnit(span=self._span(t))
            items = [self.pattern()]
            while self.accept(","):
                items.append(self.pattern())
            self.expect(")")
            out = items[-1]
            for it in reversed(items[:-1]):
                out = PPair(it, out, span=self._span(t))
            return out
        self._note("pattern")
        self.fail()

    def _try(self, fn):
        save = self.pos
        try:
            return fn()
        except ParseError:
            self.pos = save
            return None

    # ---- expressions

    def seq(self) -> SExpr:
        start = self.peek()
        stmts = [self.stmt()]
        while self.accept(";"):
            stmts.append(self.stmt())
        if stmts[-1][0] is not None:
            self.furthest = self.pos
            self.expected = {"';' followed by a computation"}
            self.fail()
        if len(stmts) == 1:
            return stmts[0][1]
        return SDo(tuple(stmts), span=self._span(start))

    def stmt(self):
        save = self.pos
        furthest, expected = self.furthest, set(self.expected)
        pat = self._try(self.pattern)
        if pat is not None and self.accept("<-"):
            return (pat, self.expr())
        self.pos = save
        self.furthest, self.expected = furthest, expected
        return (None, self.expr())

    def expr(self) -> SExpr:
        t = self.peek()
        if self.accept("do"):
            body = self.seq()
            return body if isinstance(body, SDo) else SDo(((None, body),), span=self._span(t))
        if self.accept("\\"):
            params = [self.pat_atom()]
            while not (self.is_(".") or self.is_("->")):
                params.append(self.pat_atom())
            if not self.accept("."):
                self.expect("->")
            return SLam(tuple(params), self.expr(), span=self._span(t))
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            b = self.expr()
            return SIf(c, a, b, span=self._span(t))
        if self.accept("case"):
            scrut = self.expr()
            self.expect("of")
            alts = [self.alt()]
            while self.accept("|"):
                alts.append(self.alt())
            return SCase(scrut, tuple(alts), span=self._span(t))
        if self.accept("let"):
            pat = self.pattern()
            self.expect("=")
            val = self.expr()
            self.expect("in")
            return SLet(pat, val, self.expr(), span=self._span(t))
        if self.accept("with"):
            h = self.choice()
            self.expect("handle")
            return SWith(h, self.expr(), span=self._span(t))
        return self.choice()

    def alt(self):
        pat = self.pattern()
        guard = None
        if self.accept("|"):
            guard = self.choice()
        self.expect("->")
        return (pat, guard, self.expr())

    def choice(self) -> SExpr:
        t = self.peek()
        left = self.compare()
        while self.accept("<>"):
            left = SBin("<>", left, self.compare(), span=self._span(t))
        return left

    def compare(self) -> SExpr:
        t = self.peek()
        left = self.cons()
        while True:
            for op in ("=", ">", "<", ">=", "<="):
                if self.accept(op):
                    left = SBin(op, left, self.cons(), span=self._span(t))
                    break
            else:
                return left

    def cons(self) -> SExpr:
        t = self.peek()
        left = self.additive()
        if self.accept("::"):
            return SBin("::", left, self.cons(), span=self._span(t))
        return left

    def additive(self) -> SExpr:
        t = self.peek()
        left = self.multiplicative()
        while True:
            for op in ("++", "+", "-"):
                if self.accept(op):
                    left = SBin(op, left, self.multiplicative(), span=self._span(t))
                    break
            else:
                return left

    def multiplicative(self) -> SExpr:
        t = self.peek()
        left = self.application()
        while self.accept("*"):
            left = SBin("*", left, self.application(), span=self._span(t))
        return left

    def _cont(self):
        """`(x. e)` continuation block, or None if the next tokens are not one."""
        if self.is_("(") and self.peek(1).kind == "ident" and self.is_(".", 2):
            self.pos += 1
            var = self.binder()
            self.expect(".")
            body = self.seq()
            self.expect(")")
            return var, body
        return None

    def application(self) -> SExpr:
        t = self.peek()
        if self.accept("return"):
            return SReturn(self.atom(), span=self._span(t))
        if self.accept("absurd"):
            return SAbsurd(self.atom(), span=self._span(t))
        if self.accept("op"):
            label = self.ident().text
            arg = self.atom()
            cont = self._cont()
            var, body = cont if cont else (None, None)
            return SOp(label, arg, var, body, span=self._span(t))
        if self.accept("sc"):
            label = self.ident().text
            arg = self.atom()
            scoped = self._cont()
            if scoped is None:
                self._note("scoped block '(x. ...)'")
                self.fail()
            cont = self._cont()
            kvar, body = cont if cont else (None, None)
            return SSc(label, arg, scoped[0], scoped[1], kvar, body, span=self._span(t))
        head = self.atom()
        while self._starts_atom():
            head = SApp(head, self.atom(), span=self._span(t))
        return head

    def _starts_atom(self) -> bool:
        t = self.peek()
        if t.kind in ("int", "string", "char"):
            return True
        if t.kind == "ident":
            return t.text != "_"
        return t.kind in ("sym", "kw") and t.text in ("(", "[", "true", "false", "handler")

    def atom(self) -> SExpr:
        t = self.peek()
        if t.kind == "int":
            self.pos += 1
            return SLit(t.value, "Int", span=self._span(t))
        if t.kind == "string":
            self.pos += 1
            return SLit(t.value, "String", span=self._span(t))
        if t.kind == "char":
            self.pos += 1
            return SLit(t.value, "Char", span=self._span(t))
        if t.kind == "ident" and t.text != "_":
            self.pos += 1
            return SVar(t.text, span=self._span(t))
        if self.accept("true"):
            return SLit(True, "Bool", span=self._span(t))
        if self.accept("false"):
            return SLit(False, "Bool", span=self._span(t))
        if self.accept("("):
            if self.accept(")"):
                return SUnit(span=self._span(t))
            items = [self.seq()]
            while self.accept(","):
                items.append(self.seq())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return STuple(tuple(items), span=self._span(t))
        if self.accept("["):
            items = []
            if not self.is_("]"):
                items.append(self.seq())
                while self.accept(","):
                    items.append(self.seq())
            self.expect("]")
            return SList(tuple(items), span=self._span(t))
        if self.is_("handler"):
            return self.handler()
        self._note("expression")
        self.fail()

    def handler(self) -> SHandler:
        t = self.expect("handler")
        ann = None
        if self.accept("["):
            ann = self.type_()
            self.expect("]")
        self.expect("{")
        clauses = []
        if not self.is_("}"):
            clauses.append(self.clause())
            while self.accept(","):
                clauses.append(self.clause())
        self.expect("}")
        return SHandler(ann, tuple(clauses), span=self._span(t))

    def clause(self) -> SClause:
        t = self.peek()
        if self.accept("return"):
            binders = (self.pat_atom(),)
            kind, label = "return", None
        elif self.accept("op"):
            label = self.ident().text
            binders = (self.pat_atom(), self.binder())
            kind = "op"
        elif self.accept("sc"):
            label = self.ident().text
            binders = (self.pat_atom(), self.binder(), self.binder())
            kind = "sc"
        elif self.accept("fwd"):
            binders = (self.binder(), self.binder(), self.binder())
            kind, label = "fwd", None
        elif self.accept("bind"):
            binders = (self.pat_atom(), self.binder())
            kind, label = "bind", None
        else:
            self._note("handler clause")
            self.fail()
        self.expect("->")
        body = self.seq()
        return SClause(kind, label, binders, body, span=self._span(t))

    # ---- declarations

    def decl(self):
        t = self.peek()
        if self.accept("effect"):
            if self.accept("op"):
                flavor = "op"
            elif self.accept("sc"):
                flavor = "sc"
            else:
                self._note("'op' or 'sc'")
                self.fail()
            name = self.ident().text
            self.expect(":")
            arg = self.type_()
            self.expect("~>")
            res = self.type_()
            return DEffect(flavor, name, arg, res, span=self._span(t))
        if self.accept("data"):
            name = self.ident().text
            params = []
            while self.peek().kind == "ident" and not self.is_("="):
                params.append(self.ident().text)
            self.expect("=")
            ctors = [self.ctor()]
            while self.accept("|"):
                ctors.append(self.ctor())
            return DData(name, tuple(params), tuple(ctors), span=self._span(t))
        name = self.ident().text
        if self.accept(":"):
            return DSig(name, self.scheme(), span=self._span(t))
        params = []
        while not self.is_("="):
            params.append(self.pat_atom())
        self.expect("=")
        body = self.seq()
        return DDef(name, tuple(params), body, span=self._span(t))

    def ctor(self):
        name = self.ident().text
        args = []
        while self._starts_atom_type():
            args.append(self.atom_type())
        return name, tuple(args)


def _chunks(toks: list) -> list:
    """Split tokens into declarations: one starts at column 1 outside brackets."""
    out: list = []
    depth = 0
    for t in toks:
        if not out or (t.col == 1 and depth == 0 and t.text not in ")]}"):
            out.append([])
        if t.kind == "sym" and t.text in "([{":
            depth += 1
        elif t.kind == "sym" and t.text in ")]}":
            depth = max(0, depth - 1)
        out[-1].append(t)
    return out


def parse_program(src: str, file: str = "<input>") -> SurfaceProgram:
    toks = tokenize(src, file)
    decls = []
    for chunk in _chunks(toks):
        p = Parser(chunk, file)
        decls.append(p.decl())
        if not p.at_end():
            p._note("end of declaration")
            p.fail()
    return SurfaceProgram(tuple(decls), file)


def parse_expr(src: str, file: str = "<input>") -> SExpr:
    toks = tokenize(src, file)
    p = Parser(toks, file)
    e = p.seq()
    if not p.at_end():
        p._note("end of input")
        p.fail()
    return e


def parse_type(src: str, file: str = "<input>"):
    """Parse a type or `forall` scheme (rows stay unresolved as `SRow`)."""
    toks = tokenize(src, file)
    p = Parser(toks, file)
    s = p.scheme()
    if not p.at_end():
        p._note("end of input")
        p.fail()
    return s
