'''
Scalar expressions of time.

Grammar (whitespace-insensitive):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | 't' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'
    FUNC    := sin cos tan exp log sqrt abs sinh cosh

parseExpr returns an immutable AST. Nodes evaluate directly (evaluate) or through a
closure built once per node (compile), which is what the integrators call in their
inner loops. Evaluation failures (log of a nonpositive number, division by zero,
overflow) raise DomainError.
'''

import math
import re
from dataclasses import dataclass
from functools import cached_property

import sympy

from src.data.errors import DomainError, ParseError


FUNCTIONS = {
    'sin': math.sin,
    'cos': math.cos,
    'tan': math.tan,
    'exp': math.exp,
    'log': math.log,
    'sqrt': math.sqrt,
    'abs': abs,
    'sinh': math.sinh,
    'cosh': math.cosh,
}
CONSTANTS = {
    'pi': math.pi,
    'e': math.e,
}
SYMPY_FUNCTIONS = {
    'sin': sympy.sin,
    'cos': sympy.cos,
    'tan': sympy.tan,
    'exp': sympy.exp,
    'log': sympy.log,
    'sqrt': sympy.sqrt,
    'abs': sympy.Abs,
    'sinh': sympy.sinh,
    'cosh': sympy.cosh,
}
T_SYMBOL = sympy.Symbol('t', real=True)

_ARITH_ERRORS = (ZeroDivisionError, ValueError, OverflowError)


def _checked(value, what):
    if isinstance(value, complex) or not math.isfinite(value):
        raise DomainError(f'{what} is not a finite real number')
    return value


def _divide(a, b):
    if b == 0.0:
        raise DomainError('division by zero')
    return a / b


def _power(a, b):
    # math.pow raises instead of returning complex for negative bases
    try:
        return math.pow(a, b)
    except ValueError:
        raise DomainError(f'{a!r} ^ {b!r} is undefined')
    except OverflowError:
        raise DomainError(f'{a!r} ^ {b!r} overflows')


_BINARY = {
    '+': lambda a, b: a + b,
    '-': lambda a, b: a - b,
    '*': lambda a, b: a * b,
    '/': _divide,
    '^': _power,
}


class ScalarExpr:
    '''Base of the AST node types.'''

    def compile(self):
        raise NotImplementedError

    def pretty(self):
        raise NotImplementedError

    def toSympy(self):
        raise NotImplementedError

    def evaluate(self, t):
        try:
            return _checked(self._fn(float(t)), 'expression value')
        except DomainError as e:
            if e.t is None:
                raise DomainError(e.reason, e.where, t)
            raise
        except _ARITH_ERRORS as e:
            raise DomainError(str(e) or type(e).__name__, t=t)

    @cached_property
    def _fn(self):
        return self.compile()

    @cached_property
    def isConstant(self):
        return not self.toSympy().free_symbols

    @cached_property
    def isZero(self):
        return self.isConstant and self.toSympy() == 0

    def __str__(self):
        return self.pretty()


@dataclass(frozen=True, eq=True)
class Num(ScalarExpr):
    value: float

    def compile(self):
        value = self.value
        return lambda t: value

    def pretty(self):
        return repr(float(self.value))

    def toSympy(self):
        if float(self.value).is_integer():
            return sympy.Integer(int(self.value))
        return sympy.Float(self.value)


@dataclass(frozen=True, eq=True)
class Var(ScalarExpr):
    def compile(self):
        return lambda t: t

    def pretty(self):
        return 't'

    def toSympy(self):
        return T_SYMBOL


@dataclass(frozen=True, eq=True)
class Const(ScalarExpr):
    name: str

    def compile(self):
        value = CONSTANTS[self.name]
        return lambda t: value

    def pretty(self):
        return self.name

    def toSympy(self):
        return sympy.pi if self.name == 'pi' else sympy.E


@dataclass(frozen=True, eq=True)
class Neg(ScalarExpr):
    operand: ScalarExpr

    def compile(self):
        inner = self.operand.compile()
        return lambda t: -inner(t)

    def pretty(self):
        return f'-({self.operand.pretty()})'

    def toSympy(self):
        return -self.operand.toSympy()


@dataclass(frozen=True, eq=True)
class BinOp(ScalarExpr):
    op: str
    left: ScalarExpr
    right: ScalarExpr

    def compile(self):
        fn = _BINARY[self.op]
        left = self.left.compile()
        right = self.right.compile()
        return lambda t: fn(left(t), right(t))

    def pretty(self):
        return f'({self.left.pretty()}) {self.op} ({self.right.pretty()})'

    def toSympy(self):
        a = self.left.toSympy()
        b = self.right.toSympy()
        if self.op == '+':
            return a + b
        elif self.op == '-':
            return a - b
        elif self.op == '*':
            return a * b
        elif self.op == '/':
            return a / b
        return a**b


@dataclass(frozen=True, eq=True)
class Call(ScalarExpr):
    func: str
    arg: ScalarExpr

    def compile(self):
        fn = FUNCTIONS[self.func]
        inner = self.arg.compile()
        name = self.func

        def call(t):
            x = inner(t)
            try:
                return fn(x)
            except _ARITH_ERRORS:
                raise DomainError(f'{name}({x!r}) is undefined')
        return call

    def pretty(self):
        return f'{self.func}({self.arg.pretty()})'

    def toSympy(self):
        return SYMPY_FUNCTIONS[self.func](self.arg.toSympy())


ZERO = Num(0.0)
ONE = Num(1.0)


def sub(a, b):
    return BinOp('-', a, b)


# Tokenizer

_TOKEN_RE = re.compile(
    r'''
    (?P<ws>\s+)
    |(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
    |(?P<name>[A-Za-z_][A-Za-z0-9_]*)
    |(?P<op>[-+*/^()])
    ''',
    re.VERBOSE | re.ASCII,
)

_PRIMARY_START = frozenset(['NUMBER', 't', 'pi', 'e', '(', '-'] + list(FUNCTIONS))


@dataclass(frozen=True)
class Token:
    kind: str  # 'number', 'name', 'op', 'end'
    text: str
    offset: int  # byte offset


def tokenize(text):
    tokens = []
    pos = 0
    byte_pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f'Unexpected character {text[pos]!r}', byte_pos, _PRIMARY_START)
        kind = match.lastgroup
        chunk = match.group()
        if kind != 'ws':
            tokens.append(Token(kind, chunk, byte_pos))
        pos = match.end()
        byte_pos += len(chunk.encode('utf-8'))
    tokens.append(Token('end', '', byte_pos))
    return tokens


class _Parser:


    def __init__(self, text):
        self.tokens = tokenize(text)
        self.idx = 0


    @property
    def current(self):
        return self.tokens[self.idx]


    def advance(self):
        tok = self.current
        self.idx += 1
        return tok


    def fail(self, expected):
        tok = self.current
        found = 'end of input' if tok.kind == 'end' else repr(tok.text)
        raise ParseError(f'Unexpected {found}', tok.offset, expected)


    def expect(self, text):
        if self.current.text != text or self.current.kind == 'end':
            self.fail({text})
        return self.advance()


    def parse(self):
        node = self.expr()
        if self.current.kind != 'end':
            self.fail({'+', '-', '*', '/', '^', 'end of input'})
        return node


    def expr(self):
        node = self.term()
        while self.current.kind == 'op' and self.current.text in '+-':
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node


    def term(self):
        node = self.unary()
        while self.current.kind == 'op' and self.current.text in '*/':
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node


    def unary(self):
        if self.current.kind == 'op' and self.current.text == '-':
            self.advance()
            return Neg(self.unary())
        return self.power()


    def power(self):
        base = self.primary()
        if self.current.kind == 'op' and self.current.text == '^':
            self.advance()
            # Right operand binds through unary so 2^-t and 2^3^2 = 2^(3^2) both parse
            return BinOp('^', base, self.unary())
        return base


    def primary(self):
        tok = self.current
        if tok.kind == 'number':
            self.advance()
            return Num(float(tok.text))
        if tok.kind == 'name':
            if tok.text == 't':
                self.advance()
                return Var()
            if tok.text in CONSTANTS:
                self.advance()
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                self.advance()
                self.expect('(')
                arg = self.expr()
                self.expect(')')
                return Call(tok.text, arg)
            raise ParseError(f'Unknown name {tok.text!r}', tok.offset, _PRIMARY_START)
        if tok.kind == 'op' and tok.text == '(':
            self.advance()
            node = self.expr()
            self.expect(')')
            return node
        self.fail(_PRIMARY_START)


def parseExpr(text):
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            raise ParseError('Invalid UTF-8', e.start)
    if isinstance(text, int) and not isinstance(text, bool):
        text = str(text)
    elif isinstance(text, float):
        text = repr(text)
    if not isinstance(text, str):
        raise ParseError(f'Expected expression text, got {type(text).__name__}', 0)
    try:
        return _Parser(text).parse()
    except RecursionError:
        raise ParseError('Expression is nested too deeply', 0)
