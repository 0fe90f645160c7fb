"""Integer expression environment: lexer, recursive-descent parser, evaluator.

Solutions are token sequences over digits, single-letter identifiers,
``+ - * / %`` and parentheses.  Tokens are concatenated into a source string
(digits fuse into multi-digit integers) and parse errors carry the byte
offset into that string.  Division is exact integer division: a non-zero
remainder is a runtime failure, which keeps every output a canonical integer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from symtrain.environments.types import Status, TaskEncodingError, TaskInstance, graded

EVAL_STEP_BUDGET = 10_000


class ExprParseError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"parse error at byte {offset}: {message}")
        self.offset = offset


class ExprRuntimeError(ValueError):
    pass


class ExprTimeout(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: int
    offset: int


@dataclass(frozen=True)
class Var:
    name: str
    offset: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    offset: int


Node = Num | Var | BinOp

_OPS = "+-*/%"


def tokens_to_source(tokens: Sequence[str]) -> str:
    return "".join(tokens)


@dataclass
class _Lexer:
    src: str
    pos: int = 0

    def peek(self) -> str | None:
        return self.src[self.pos] if self.pos < len(self.src) else None

    def next_token(self) -> tuple[str, str, int] | None:
        """Return (kind, text, offset) or None at end of input."""
        if self.pos >= len(self.src):
            return None
        start = self.pos
        ch = self.src[start]
        if ch.isdigit():
            end = start
            while end < len(self.src) and self.src[end].isdigit():
                end += 1
            self.pos = end
            return ("int", self.src[start:end], start)
        if ch.isalpha() and ch.islower():
            end = start
            while end < len(self.src) and self.src[end].isalpha() and self.src[end].islower():
                end += 1
            self.pos = end
            return ("ident", self.src[start:end], start)
        if ch in _OPS:
            self.pos += 1
            return ("op", ch, start)
        if ch in "()":
            self.pos += 1
            return (ch, ch, start)
        raise ExprParseError(start, f"unexpected character {ch!r}")


class _Parser:
    """Recursive descent with the usual two precedence levels, left associative."""

    def __init__(self, src: str):
        self.src = src
        self.lexer = _Lexer(src)
        self.tok = self.lexer.next_token()

    def _advance(self) -> None:
        self.tok = self.lexer.next_token()

    def parse(self) -> Node:
        node = self.expression()
        if self.tok is not None:
            raise ExprParseError(self.tok[2], f"trailing input {self.tok[1]!r}")
        return node

    def expression(self) -> Node:
        node = self.term()
        while self.tok is not None and self.tok[0] == "op" and self.tok[1] in "+-":
            op, _, off = self.tok[1], self.tok[0], self.tok[2]
            self._advance()
            node = BinOp(op, node, self.term(), off)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok is not None and self.tok[0] == "op" and self.tok[1] in "*/%":
            op, off = self.tok[1], self.tok[2]
            self._advance()
            node = BinOp(op, node, self.factor(), off)
        return node

    def factor(self) -> Node:
        tok = self.tok
        if tok is None:
            raise ExprParseError(len(self.src), "unexpected end of input")
        kind, text, off = tok
        if kind == "int":
            self._advance()
            return Num(int(text), off)
        if kind == "ident":
            self._advance()
            return Var(text, off)
        if kind == "(":
            self._advance()
            node = self.expression()
            if self.tok is None:
                raise ExprParseError(len(self.src), "missing closing parenthesis")
            if self.tok[0] != ")":
                raise ExprParseError(self.tok[2], f"expected ')', got {self.tok[1]!r}")
            self._advance()
            return node
        raise ExprParseError(off, f"unexpected token {text!r}")


def parse_expr(tokens: Sequence[str]) -> Node:
    """Parse a token sequence into an AST; offsets refer to the joined source."""
    return _Parser(tokens_to_source(tokens)).parse()


def eval_expr(node: Node, bindings: dict[str, int],
              budget: int = EVAL_STEP_BUDGET) -> int:
    steps = 0

    def go(n: Node) -> int:
        nonlocal steps
        steps += 1
        if steps > budget:
            raise ExprTimeout(f"evaluation exceeded {budget} steps")
        if isinstance(n, Num):
            return n.value
        if isinstance(n, Var):
            if n.name not in bindings:
                raise ExprRuntimeError(f"unbound identifier {n.name!r}")
            return bindings[n.name]
        left = go(n.left)
        right = go(n.right)
        if n.op == "+":
            return left + right
        if n.op == "-":
            return left - right
        if n.op == "*":
            return left * right
        if n.op == "/":
            if right == 0:
                raise ExprRuntimeError("division by zero")
            q, rem = divmod(left, right)
            if rem != 0:
                raise ExprRuntimeError(f"inexact division {left}/{right}")
            return q
        if n.op == "%":
            if right == 0:
                raise ExprRuntimeError("modulo by zero")
            return left % right
        raise ExprRuntimeError(f"unknown operator {n.op!r}")

    return go(node)


def parse_task_input(x: Sequence[str]) -> tuple[dict[str, int], list[str]]:
    """Split a task's x into identifier bindings and the query tokens.

    Layout: ``ident = digits... ;`` repeated, then the query.  Raises
    TaskEncodingError on malformed task data (task files are trusted inputs,
    unlike model outputs).
    """
    tokens = list(x)
    bindings: dict[str, int] = {}
    i = 0
    while i + 2 < len(tokens) and len(tokens[i]) == 1 and tokens[i].isalpha() \
            and tokens[i].islower() and tokens[i + 1] == "=":
        name = tokens[i]
        i += 2
        digits = []
        while i < len(tokens) and tokens[i].isdigit():
            digits.append(tokens[i])
            i += 1
        if not digits or i >= len(tokens) or tokens[i] != ";":
            raise TaskEncodingError(f"malformed binding for {name!r} in x")
        bindings[name] = int("".join(digits))
        i += 1
    query = tokens[i:]
    if not query:
        raise TaskEncodingError("x has no query after bindings")
    return bindings, query


def run_expr(a: Sequence[str], task: TaskInstance):
    """Execute an expression solution against a task: parse, evaluate, grade."""
    bindings, _ = parse_task_input(task.x)
    try:
        node = parse_expr(a)
    except ExprParseError:
        return graded(Status.PARSE_ERROR, None, task.y)
    try:
        value = eval_expr(node, bindings)
    except ExprTimeout:
        return graded(Status.TIMEOUT, None, task.y)
    except ExprRuntimeError:
        return graded(Status.RUNTIME_ERROR, None, task.y)
    return graded(Status.OK, str(value), task.y)
