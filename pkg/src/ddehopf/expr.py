"""Tiny arithmetic expression language for user-defined models.

Supports numbers, named scalar symbols, ``+ - * / ^`` (with ``^`` meaning
right-associative exponentiation), unary minus, parentheses and the functions
``sin``, ``cos`` and ``exp``.  Parsing is a small Pratt parser; evaluation
walks the tree with plain Python floats, which is plenty for the desk-scale
systems this package targets.
"""

import math

from .errors import NumericalError, ParseError

_FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}

# token kinds
_NUM, _NAME, _OP, _END = "number", "name", "op", "end"


def _tokenize(source: str) -> list[tuple[str, str, int, int]]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(source):
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < len(source) and source[i + 1].isdigit()):
            j = i
            while j < len(source) and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < len(source) and source[j] in "eE":
                k = j + 1
                if k < len(source) and source[k] in "+-":
                    k += 1
                if k < len(source) and source[k].isdigit():
                    j = k
                    while j < len(source) and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError("invalid number literal", line, col, text) from None
            tokens.append((_NUM, text, line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(source) and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append((_NAME, source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append((_OP, ch, line, col))
            col += 1
            i += 1
            continue
        raise ParseError("unexpected character", line, col, ch)
    tokens.append((_END, "", line, col))
    return tokens


class _Parser:
    """Pratt parser producing nested tuples: ('num', v) | ('sym', name) |
    ('call', fname, arg) | ('neg', a) | ('bin', op, lhs, rhs)."""

    # binding powers; '^' binds tighter than unary minus and associates right
    _LEFT_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
    _UNARY_BP = 30

    def __init__(self, tokens, allowed: set[str]):
        self.tokens = tokens
        self.pos = 0
        self.allowed = allowed

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, text, line, col = self.peek()
        if kind != _OP or text != op:
            raise ParseError(f"expected {op!r}", line, col, text or "<end>")
        return self.advance()

    def parse(self):
        node = self.expression(0)
        kind, text, line, col = self.peek()
        if kind != _END:
            raise ParseError("trailing input after expression", line, col, text)
        return node

    def expression(self, min_bp: int):
        node = self.prefix()
        while True:
            kind, text, _, _ = self.peek()
            if kind != _OP or text not in self._LEFT_BP:
                break
            bp = self._LEFT_BP[text]
            if bp < min_bp:
                break
            self.advance()
            # right associativity for '^', left for the rest
            rhs = self.expression(bp if text == "^" else bp + 1)
            node = ("bin", text, node, rhs)
        return node

    def prefix(self):
        kind, text, line, col = self.advance()
        if kind == _NUM:
            return ("num", float(text))
        if kind == _NAME:
            if text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expression(0)
                self.expect_op(")")
                return ("call", text, arg)
            if text not in self.allowed:
                raise ParseError("unknown symbol", line, col, text)
            return ("sym", text)
        if kind == _OP and text == "-":
            return ("neg", self.expression(self._UNARY_BP))
        if kind == _OP and text == "+":
            return self.expression(self._UNARY_BP)
        if kind == _OP and text == "(":
            node = self.expression(0)
            self.expect_op(")")
            return node
        raise ParseError("expected a value", line, col, text or "<end>")


def _evaluate(node, env) -> float:
    op = node[0]
    if op == "num":
        return node[1]
    if op == "sym":
        return env[node[1]]
    if op == "neg":
        return -_evaluate(node[1], env)
    if op == "call":
        return _FUNCTIONS[node[1]](_evaluate(node[2], env))
    # binary
    _, name, lhs, rhs = node
    a = _evaluate(lhs, env)
    b = _evaluate(rhs, env)
    if name == "+":
        return a + b
    if name == "-":
        return a - b
    if name == "*":
        return a * b
    if name == "/":
        return a / b
    return a ** b


class Expression:
    """A compiled scalar expression over a fixed set of symbol names."""

    def __init__(self, source: str, allowed: set[str]):
        self.source = source
        self._ast = _Parser(_tokenize(source), allowed).parse()
        self.symbols = _collect_symbols(self._ast)

    def __call__(self, env) -> float:
        try:
            value = _evaluate(self._ast, env)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise NumericalError(f"expression {self.source!r} failed to evaluate: {exc}") from None
        if isinstance(value, complex) or not math.isfinite(value):
            raise NumericalError(f"expression {self.source!r} produced a non-finite value")
        return value

    def __repr__(self):
        return f"Expression({self.source!r})"


def _collect_symbols(node, out=None) -> set[str]:
    if out is None:
        out = set()
    op = node[0]
    if op == "sym":
        out.add(node[1])
    elif op == "neg":
        _collect_symbols(node[1], out)
    elif op == "call":
        _collect_symbols(node[2], out)
    elif op == "bin":
        _collect_symbols(node[2], out)
        _collect_symbols(node[3], out)
    return out
