"""Expression language used by filter and formula transforms.

The language is closed (fixed operator and function set) so the in-process
interpreter and the SQL renderer can guarantee identical semantics. Numbers
are 64-bit floats. Null propagates through arithmetic and comparisons;
boolean connectives follow SQL three-valued logic.

Null is represented as NaN in numeric/boolean numpy columns and as None in
string columns; the evaluator returns results in the same convention.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalError, ExprSyntaxError, ExprTypeError

Scalar = Union[float, str, bool, None]


@dataclass(frozen=True)
class Literal:
    value: Scalar  # numbers are always float


@dataclass(frozen=True)
class FieldRef:
    name: str


@dataclass(frozen=True)
class SignalRef:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or '!'
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Literal, FieldRef, SignalRef, Unary, Binary, Call]

# name -> arity
FUNCTIONS = {"abs": 1, "floor": 1, "ceil": 1, "sqrt": 1, "min": 2, "max": 2, "test": 2}

CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
ADD_OPS = ("+", "-")
MUL_OPS = ("*", "/", "%")


# ---------------------------------------------------------------------------
# Lexer


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<op>\|\||&&|==|!=|<=|>=|[-+*/%<>!(),.])
    """,
    re.VERBOSE,
)

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "'": "'", '"': '"', "\\": "\\"}


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


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# Parser (precedence climbing; || < && < comparisons < +- < */% < unary)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.next()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.parse_or()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", pos)
        return e

    def parse_or(self) -> Expr:
        e = self.parse_and()
        while self.peek()[1] == "||":
            self.next()
            e = Binary("||", e, self.parse_and())
        return e

    def parse_and(self) -> Expr:
        e = self.parse_cmp()
        while self.peek()[1] == "&&":
            self.next()
            e = Binary("&&", e, self.parse_cmp())
        return e

    def parse_cmp(self) -> Expr:
        e = self.parse_add()
        while self.peek()[1] in CMP_OPS:
            op = self.next()[1]
            e = Binary(op, e, self.parse_add())
        return e

    def parse_add(self) -> Expr:
        e = self.parse_mul()
        while self.peek()[1] in ADD_OPS:
            op = self.next()[1]
            e = Binary(op, e, self.parse_mul())
        return e

    def parse_mul(self) -> Expr:
        e = self.parse_unary()
        while self.peek()[1] in MUL_OPS:
            op = self.next()[1]
            e = Binary(op, e, self.parse_unary())
        return e

    def parse_unary(self) -> Expr:
        kind, text, pos = self.peek()
        if text in ("-", "!"):
            self.next()
            return Unary(text, self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        kind, text, pos = self.next()
        if kind == "num":
            return Literal(float(text))
        if kind == "str":
            return Literal(_unescape(text[1:-1]))
        if kind == "ident":
            if text == "true":
                return Literal(True)
            if text == "false":
                return Literal(False)
            if text == "datum":
                self.expect(".")
                fkind, fname, fpos = self.next()
                if fkind != "ident":
                    raise ExprSyntaxError("expected field name after 'datum.'", fpos)
                return FieldRef(fname)
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.next()
                args = []
                if self.peek()[1] != ")":
                    args.append(self.parse_or())
                    while self.peek()[1] == ",":
                        self.next()
                        args.append(self.parse_or())
                self.expect(")")
                return Call(text, tuple(args))
            return SignalRef(text)
        if text == "(":
            e = self.parse_or()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected token {text or 'end of input'!r}", pos)


def parse_expr(text: str) -> Expr:
    """Parse an expression string into an AST."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Printer


_PREC = {"||": 1, "&&": 2}
_PREC.update({op: 3 for op in CMP_OPS})
_PREC.update({op: 4 for op in ADD_OPS})
_PREC.update({op: 5 for op in MUL_OPS})
_UNARY_PREC = 6
_ATOM_PREC = 7


def format_number(v: float) -> str:
    """Shortest round-trip formatting; integral floats print without '.0'."""
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError("non-finite literal cannot be printed")
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def _escape_str(s: str) -> str:
    out = s.replace("\\", "\\\\").replace("'", "\\'")
    out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
    return f"'{out}'"


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary):
        return _UNARY_PREC
    return _ATOM_PREC


def print_expr(e: Expr) -> str:
    """Render an AST back to source; ``parse_expr(print_expr(e)) == e``."""
    if isinstance(e, Literal):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        if isinstance(e.value, float):
            return format_number(e.value)
        return _escape_str(e.value)
    if isinstance(e, FieldRef):
        return f"datum.{e.name}"
    if isinstance(e, SignalRef):
        return e.name
    if isinstance(e, Unary):
        body = print_expr(e.operand)
        if _prec(e.operand) < _UNARY_PREC:
            body = f"({body})"
        return f"{e.op}{body}"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        left = print_expr(e.left)
        if _prec(e.left) < p:
            left = f"({left})"
        right = print_expr(e.right)
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(print_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Type checking


def signal_refs(e: Expr) -> set[str]:
    """All signal names referenced anywhere in the expression."""
    if isinstance(e, SignalRef):
        return {e.name}
    if isinstance(e, Unary):
        return signal_refs(e.operand)
    if isinstance(e, Binary):
        return signal_refs(e.left) | signal_refs(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= signal_refs(a)
        return out
    return set()


def field_refs(e: Expr) -> set[str]:
    if isinstance(e, FieldRef):
        return {e.name}
    if isinstance(e, Unary):
        return field_refs(e.operand)
    if isinstance(e, Binary):
        return field_refs(e.left) | field_refs(e.right)
    if isinstance(e, Call):
        out: set[str] = set()
        for a in e.args:
            out |= field_refs(a)
        return out
    return set()


def check_expr(e: Expr, fields: dict[str, str], signals: dict[str, str]) -> str:
    """Type-check against field and signal type environments.

    Returns the expression type, one of 'number' | 'string' | 'boolean'.
    Signal type 'extent' (the [lo, hi] pair an extent transform publishes)
    is not usable inside expressions.
    """
    if isinstance(e, Literal):
        if isinstance(e.value, bool):
            return "boolean"
        if isinstance(e.value, float):
            return "number"
        return "string"
    if isinstance(e, FieldRef):
        if e.name not in fields:
            raise ExprTypeError(f"unknown field 'datum.{e.name}'")
        return fields[e.name]
    if isinstance(e, SignalRef):
        if e.name not in signals:
            raise ExprTypeError(f"unknown signal {e.name!r}")
        t = signals[e.name]
        if t == "extent":
            raise ExprTypeError(f"extent signal {e.name!r} cannot be used in an expression")
        return t
    if isinstance(e, Unary):
        t = check_expr(e.operand, fields, signals)
        if e.op == "-":
            if t != "number":
                raise ExprTypeError(f"unary '-' needs a number, got {t}")
            return "number"
        if t != "boolean":
            raise ExprTypeError(f"'!' needs a boolean, got {t}")
        return "boolean"
    if isinstance(e, Binary):
        lt = check_expr(e.left, fields, signals)
        rt = check_expr(e.right, fields, signals)
        if e.op in ("&&", "||"):
            if lt != "boolean" or rt != "boolean":
                raise ExprTypeError(f"{e.op!r} needs booleans, got {lt} and {rt}")
            return "boolean"
        if e.op in ("==", "!="):
            if lt != rt:
                raise ExprTypeError(f"cannot compare {lt} with {rt}")
            return "boolean"
        if e.op in CMP_OPS:
            if lt != rt or lt == "boolean":
                raise ExprTypeError(f"{e.op!r} needs two numbers or two strings, got {lt} and {rt}")
            return "boolean"
        if lt != "number" or rt != "number":
            raise ExprTypeError(f"arithmetic {e.op!r} needs numbers, got {lt} and {rt}")
        return "number"
    if isinstance(e, Call):
        if len(e.args) != FUNCTIONS[e.func]:
            raise ExprTypeError(f"{e.func}() takes {FUNCTIONS[e.func]} argument(s)")
        if e.func == "test":
            pt = check_expr(e.args[0], fields, signals)
            vt = check_expr(e.args[1], fields, signals)
            if pt != "string" or vt != "string":
                raise ExprTypeError("test() needs a string pattern and a string value")
            if isinstance(e.args[0], Literal):
                try:
                    re.compile(e.args[0].value)
                except re.error as exc:
                    raise ExprTypeError(f"invalid regex {e.args[0].value!r}: {exc}") from exc
            return "boolean"
        arg_types = [check_expr(a, fields, signals) for a in e.args]
        if any(t != "number" for t in arg_types):
            raise ExprTypeError(f"{e.func}() needs numeric arguments")
        return "number"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# Vectorized evaluation
#
# Values flow as either numpy arrays (float64 for number/boolean columns,
# where NaN means null; object for strings, where None means null) or plain
# python scalars for field-free subexpressions.


def _is_str_value(v) -> bool:
    if isinstance(v, np.ndarray):
        return v.dtype == object
    return isinstance(v, str) or v is None


def _nan_where(res: np.ndarray, mask) -> np.ndarray:
    res = np.asarray(res, dtype=np.float64)
    if np.ndim(mask) == 0:
        if mask:
            return np.full_like(res, np.nan) if res.ndim else float("nan")
        return res
    res = res.copy() if res.ndim else np.full(mask.shape, res, dtype=np.float64)
    res[mask] = np.nan
    return res


def _null_mask(v):
    if isinstance(v, np.ndarray) and v.dtype == object:
        return np.array([x is None for x in v], dtype=bool)
    if isinstance(v, np.ndarray):
        return np.isnan(v)
    if v is None:
        return True
    if isinstance(v, float):
        return v != v
    return False


def _str_elems(v, n: int):
    if isinstance(v, np.ndarray):
        return v
    return [v] * n


def _pair_len(a, b) -> int:
    for v in (a, b):
        if isinstance(v, np.ndarray):
            return len(v)
    return 1


def _cmp_strings(op: str, a, b) -> np.ndarray | float:
    import operator as _op

    fn = {"==": _op.eq, "!=": _op.ne, "<": _op.lt, "<=": _op.le, ">": _op.gt, ">=": _op.ge}[op]
    if not isinstance(a, np.ndarray) and not isinstance(b, np.ndarray):
        if a is None or b is None:
            return float("nan")
        return 1.0 if fn(a, b) else 0.0
    n = _pair_len(a, b)
    xs = _str_elems(a, n)
    ys = _str_elems(b, n)
    return np.array(
        [float("nan") if x is None or y is None else float(fn(x, y)) for x, y in zip(xs, ys)],
        dtype=np.float64,
    )


def _kleene_and(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    false = (a == 0) | (b == 0)
    null = np.isnan(a) | np.isnan(b)
    res = np.where(false, 0.0, np.where(null, np.nan, 1.0))
    return res if res.ndim else float(res)


def _kleene_or(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    true = (a == 1) | ((~np.isnan(a)) & (a != 0)) | (b == 1) | ((~np.isnan(b)) & (b != 0))
    null = np.isnan(a) | np.isnan(b)
    res = np.where(true, 1.0, np.where(null, np.nan, 0.0))
    return res if res.ndim else float(res)


_REGEX_CACHE: dict[str, re.Pattern] = {}


def _regex(pattern: str) -> re.Pattern:
    rx = _REGEX_CACHE.get(pattern)
    if rx is None:
        try:
            rx = re.compile(pattern)
        except re.error as exc:
            raise EvalError(f"invalid regex {pattern!r}: {exc}") from exc
        _REGEX_CACHE[pattern] = rx
    return rx


def _test_regex(pattern, value, n: int):
    pats = _str_elems(pattern, n) if isinstance(pattern, np.ndarray) else None
    vals = _str_elems(value, n)
    if not isinstance(value, np.ndarray) and not isinstance(pattern, np.ndarray):
        if pattern is None or value is None:
            return float("nan")
        if not isinstance(value, str) or not isinstance(pattern, str):
            raise EvalError("test() applied to a non-string value")
        return 1.0 if _regex(pattern).search(value) else 0.0
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        p = pats[i] if pats is not None else pattern
        v = vals[i]
        if p is None or v is None:
            out[i] = np.nan
            continue
        if not isinstance(v, str) or not isinstance(p, str):
            raise EvalError("test() applied to a non-string value", row=i)
        out[i] = 1.0 if _regex(p).search(v) else 0.0
    return out


def _signal_value(name: str, signals: dict[str, Scalar]):
    if name not in signals:
        raise EvalError(f"signal {name!r} has no value")
    v = signals[name]
    if isinstance(v, bool):
        return float(v)
    return v


def eval_expr(e: Expr, columns: dict[str, np.ndarray], nrows: int, signals: dict[str, Scalar]):
    """Evaluate vectorized over ``columns``; returns an array or a scalar.

    Numeric/boolean results are float64 with NaN for null; string results
    are object arrays with None for null.
    """
    if isinstance(e, Literal):
        if isinstance(e.value, bool):
            return float(e.value)
        return e.value
    if isinstance(e, FieldRef):
        try:
            return columns[e.name]
        except KeyError:
            raise EvalError(f"missing field {e.name!r}") from None
    if isinstance(e, SignalRef):
        return _signal_value(e.name, signals)
    if isinstance(e, Unary):
        v = eval_expr(e.operand, columns, nrows, signals)
        if e.op == "-":
            res = np.negative(np.asarray(v, dtype=np.float64))
            return res if res.ndim else float(res)
        res = 1.0 - np.asarray(v, dtype=np.float64)  # !x: 1-0/1-1, NaN propagates
        return res if res.ndim else float(res)
    if isinstance(e, Binary):
        a = eval_expr(e.left, columns, nrows, signals)
        b = eval_expr(e.right, columns, nrows, signals)
        if e.op == "&&":
            return _kleene_and(a, b)
        if e.op == "||":
            return _kleene_or(a, b)
        if _is_str_value(a) or _is_str_value(b):
            if e.op not in CMP_OPS:
                raise EvalError(f"string operand for arithmetic {e.op!r}")
            return _cmp_strings(e.op, a, b)
        fa = np.asarray(a, dtype=np.float64)
        fb = np.asarray(b, dtype=np.float64)
        null = np.isnan(fa) | np.isnan(fb)
        with np.errstate(all="ignore"):
            if e.op in CMP_OPS:
                import operator as _op

                fn = {"==": _op.eq, "!=": _op.ne, "<": _op.lt, "<=": _op.le, ">": _op.gt, ">=": _op.ge}[e.op]
                res = _nan_where(fn(fa, fb).astype(np.float64), null)
            elif e.op == "+":
                res = fa + fb
            elif e.op == "-":
                res = fa - fb
            elif e.op == "*":
                res = fa * fb
            elif e.op == "/":
                res = _nan_where(fa / fb, fb == 0)
            else:  # '%', float-safe modulo; fmod(x, 0) is already NaN
                res = np.fmod(fa, fb)
        res = np.asarray(res, dtype=np.float64)
        return res if res.ndim else float(res)
    if isinstance(e, Call):
        if e.func == "test":
            pattern = eval_expr(e.args[0], columns, nrows, signals)
            value = eval_expr(e.args[1], columns, nrows, signals)
            return _test_regex(pattern, value, nrows)
        args = [np.asarray(eval_expr(a, columns, nrows, signals), dtype=np.float64) for a in e.args]
        with np.errstate(all="ignore"):
            if e.func == "abs":
                res = np.abs(args[0])
            elif e.func == "floor":
                res = np.floor(args[0])
            elif e.func == "ceil":
                res = np.ceil(args[0])
            elif e.func == "sqrt":
                res = _nan_where(np.sqrt(np.abs(args[0])), np.asarray(args[0]) < 0)
            elif e.func == "min":
                res = _nan_where(np.minimum(args[0], args[1]), np.isnan(args[0]) | np.isnan(args[1]))
            else:  # max
                res = _nan_where(np.maximum(args[0], args[1]), np.isnan(args[0]) | np.isnan(args[1]))
        res = np.asarray(res, dtype=np.float64)
        return res if res.ndim else float(res)
    raise TypeError(f"not an expression: {e!r}")


def eval_to_mask(e: Expr, columns: dict[str, np.ndarray], nrows: int, signals: dict[str, Scalar]) -> np.ndarray:
    """Evaluate a boolean expression to a keep-mask: True only where the
    predicate is exactly true (null and false both drop)."""
    v = eval_expr(e, columns, nrows, signals)
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(nrows, float(arr) if arr == arr else np.nan, dtype=np.float64)
    with np.errstate(invalid="ignore"):
        return arr == 1.0


def eval_to_column(e: Expr, etype: str, columns: dict[str, np.ndarray], nrows: int, signals: dict[str, Scalar]) -> np.ndarray:
    """Evaluate to a full-length column of the checked type."""
    v = eval_expr(e, columns, nrows, signals)
    if etype == "string":
        if isinstance(v, np.ndarray):
            return v
        out = np.empty(nrows, dtype=object)
        out[:] = v
        return out
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(nrows, float(arr), dtype=np.float64)
    # NaN encodes null on both number and boolean columns.
    return arr
