"""Text form of map expressions: tokenizer, parser, printer and builder.

    expr := name "(" arg* ")"
    arg  := number | "(" number number ")" | expr | name "=" (number | pair | expr)

Numbers may be written as fractions (``1/2``), commas count as whitespace and
``#`` comments run to the end of the line.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Union

from .maps import (LiftedMap, MapDefinitionError, TableProfile, TrigProfile, bump_push,
                   compose, identity, minus, power, shear_x, shear_y, translation, twist)


class MapSyntaxError(MapDefinitionError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Pair:
    a: float
    b: float


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()
    kwargs: tuple = ()  # ((key, value), ...) in source order
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        if not isinstance(other, Call):
            return NotImplemented
        return (self.name, self.args, self.kwargs) == (other.name, other.args, other.kwargs)

    def __hash__(self):
        return hash((self.name, self.args, self.kwargs))

    def depth(self) -> int:
        kids = [v for v in self.args + tuple(v for _, v in self.kwargs) if isinstance(v, Call)]
        return 1 + max((k.depth() for k in kids), default=0)


Value = Union[float, Pair, Call]

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TOKEN = re.compile(rf"""
    (?P<ws>[\s,]+|\#[^\n]*)
  | (?P<num>{_NUM}(?:\s*/\s*{_NUM})?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<punct>[()=])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise MapSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, m.group(), line, col))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - line_start + 1))
    return out


def _number(tok: _Tok) -> float:
    parts = tok.text.split("/")
    num = float(parts[0])
    if len(parts) == 2:
        den = float(parts[1])
        if den == 0:
            raise MapSyntaxError("division by zero", tok.line, tok.col)
        num /= den
    if not math.isfinite(num):
        raise MapSyntaxError("number out of range", tok.line, tok.col)
    return num


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self, k=0) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def take(self, kind: str, text: str | None = None) -> _Tok:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = repr(text) if text else kind
            got = repr(t.text) if t.text else "end of input"
            raise MapSyntaxError(f"expected {want}, got {got}", t.line, t.col)
        self.i += 1
        return t

    def expr(self) -> Call:
        name = self.take("name")
        self.take("punct", "(")
        args, kwargs = [], []
        while not (self.peek().kind == "punct" and self.peek().text == ")"):
            if self.peek().kind == "name" and self.peek(1).text == "=":
                key = self.take("name")
                self.take("punct", "=")
                if any(k == key.text for k, _ in kwargs):
                    raise MapSyntaxError(f"duplicate parameter {key.text!r}", key.line, key.col)
                kwargs.append((key.text, self.value()))
            else:
                if kwargs:
                    t = self.peek()
                    raise MapSyntaxError("positional argument after named one", t.line, t.col)
                args.append(self.value())
        self.take("punct", ")")
        return Call(name.text, tuple(args), tuple(kwargs), name.line, name.col)

    def value(self) -> Value:
        t = self.peek()
        if t.kind == "num":
            self.i += 1
            return _number(t)
        if t.kind == "name":
            return self.expr()
        if t.kind == "punct" and t.text == "(":
            self.i += 1
            a = _number(self.take("num"))
            b = _number(self.take("num"))
            self.take("punct", ")")
            return Pair(a, b)
        raise MapSyntaxError(f"unexpected {t.text or 'end of input'!r}", t.line, t.col)


def parse_map_expression(text: str) -> Call:
    p = _Parser(text)
    e = p.expr()
    t = p.peek()
    if t.kind != "eof":
        raise MapSyntaxError(f"trailing input {t.text!r}", t.line, t.col)
    return e


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_value(v: Value) -> str:
    if isinstance(v, Call):
        return format_expression(v)
    if isinstance(v, Pair):
        return f"({_fmt(v.a)} {_fmt(v.b)})"
    return _fmt(v)


def format_expression(e: Call) -> str:
    parts = [_fmt_value(a) for a in e.args] + [f"{k}={_fmt_value(v)}" for k, v in e.kwargs]
    return f"{e.name}({' '.join(parts)})"


# -- building ----------------------------------------------------------------

@dataclass(frozen=True)
class _Param:
    name: str
    kind: str  # num, int, vec, map, profile
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""


_REQUIRED = object()


def _p(name, kind, default=_REQUIRED, check=None, rule=""):
    return _Param(name, kind, default, check, rule)


def _positive(x):
    return x > 0


def _prim_dissipative(eps, delta, sharpness):
    from .dissipative import DissipativeParams, build_example
    return build_example(DissipativeParams(eps, delta, sharpness))


def _prim_dissipative_unlocked(eps, delta, sharpness, push_radius):
    from .dissipative import DissipativeParams, build_unlocked
    return build_unlocked(DissipativeParams(eps, delta, sharpness), push_radius)[0]


def _cons_params(alpha, beta, a, b, c, K):
    from .conservative import ConservativeParams
    return ConservativeParams(alpha=alpha, beta=beta, a=a, b=b, c=c,
                              K=None if K == 0 else int(K))


def _prim_conservative(alpha, beta, a, b, c, K):
    from .conservative import build_example_conservative
    return build_example_conservative(_cons_params(alpha, beta, a, b, c, K))


def _prim_conservative_unlocked(alpha, beta, a, b, c, K, push_radius):
    from .conservative import build_unlocked_conservative
    return build_unlocked_conservative(_cons_params(alpha, beta, a, b, c, K), push_radius)[0]


def _prim_circle_trig(shift, sin_amp, cos_amp):
    from .circle import trig_lift
    return trig_lift(shift, sin_amp, cos_amp,
                     format_expression(Call("circle_trig", (shift, sin_amp, cos_amp))))


_DISS = [_p("eps", "num", 0.4, lambda x: 0 < x <= 1, "0 < eps <= 1"),
         _p("delta", "num", 0.01, lambda x: 0 < x < 0.5 - 1 / (2 * math.pi),
            "0 < delta < 1/2 - 1/(2 pi)"),
         _p("sharpness", "num", 1.0, lambda x: x >= 1, "sharpness >= 1")]
_CONS = [_p("alpha", "num", 0.1, lambda x: 0 < x <= 0.1, "0 < alpha <= 1/10"),
         _p("beta", "num", 0.87, lambda x: 0 < x < 1, "0 < beta < 1"),
         _p("a", "num", 0.51), _p("b", "num", 0.55), _p("c", "num", 0.53),
         _p("K", "int", 0, lambda x: x >= 0, "K >= 0 (0 picks the default)")]
_PUSH = _p("push_radius", "num", 0.02, lambda x: 0 < x <= 0.05, "0 < push_radius <= 0.05")

# name -> (parameters, builder, variadic kind or None)
PRIMITIVES: dict[str, tuple[list[_Param], Callable, str | None]] = {
    "identity": ([], identity, None),
    "translation": ([_p("v", "vec")], translation, None),
    "shear_x": ([_p("profile", "profile")], shear_x, None),
    "shear_y": ([_p("profile", "profile")], shear_y, None),
    "bump_push": ([_p("center", "vec"), _p("radius", "num", check=lambda r: 0 < r < 0.5,
                                            rule="0 < radius < 1/2"),
                   _p("displacement", "vec")], bump_push, None),
    "twist": ([_p("center", "vec"),
               _p("r_inner", "num", check=_positive, rule="r_inner > 0"),
               _p("r_outer", "num", check=_positive, rule="r_outer > 0"),
               _p("angle", "num", math.pi), _p("direction", "num", 0.0),
               _p("aspect", "num", 1.0, _positive, "aspect > 0")], twist, None),
    "example_dissipative": (_DISS, _prim_dissipative, None),
    "unlocked_dissipative": (_DISS + [_PUSH], _prim_dissipative_unlocked, None),
    "example_conservative": (_CONS, _prim_conservative, None),
    "unlocked_conservative": (_CONS + [_PUSH], _prim_conservative_unlocked, None),
    "compose": ([], lambda *ms: _compose_all(ms), "map"),
    "power": ([_p("f", "map"), _p("n", "int", check=lambda n: n >= 1, rule="n >= 1")],
              power, None),
    "minus": ([_p("f", "map"), _p("v", "vec")], minus, None),
    "circle_trig": ([_p("shift", "num", 0.0), _p("sin_amp", "num", 0.0),
                     _p("cos_amp", "num", 0.0)], _prim_circle_trig, None),
}

# profiles are not maps, so they live in their own table
PROFILES = {"trig": "c0 (a1 b1) (a2 b2) ...", "table": "v0 v1 ..."}


def _compose_all(maps):
    if not maps:
        raise MapDefinitionError("compose needs at least one map")
    out = maps[-1]
    for m in reversed(maps[:-1]):
        out = compose(m, out)
    return out


def _err(node: Call, msg: str) -> MapDefinitionError:
    return MapSyntaxError(msg, node.line, node.col) if node.line else MapDefinitionError(msg)


def _build_profile(node: Value):
    if not isinstance(node, Call) or node.name not in PROFILES:
        raise MapDefinitionError(f"expected a profile ({', '.join(PROFILES)})")
    if node.kwargs:
        raise _err(node, f"{node.name} takes positional arguments only")
    if node.name == "trig":
        if not node.args or not isinstance(node.args[0], float) \
                or not all(isinstance(a, Pair) for a in node.args[1:]):
            raise _err(node, "trig expects c0 followed by (a_k b_k) pairs")
        return TrigProfile(node.args[0], tuple(p.a for p in node.args[1:]),
                           tuple(p.b for p in node.args[1:]))
    if len(node.args) < 2 or not all(isinstance(a, float) for a in node.args):
        raise _err(node, "table expects at least two numbers")
    return TableProfile(tuple(node.args))


def _coerce(node: Call, param: _Param, raw: list[Value]):
    what = f"{node.name}: parameter {param.name!r}"
    if param.kind == "vec":
        if len(raw) == 1 and isinstance(raw[0], Pair):
            val = (raw[0].a, raw[0].b)
        elif len(raw) == 2 and all(isinstance(r, float) for r in raw):
            val = (raw[0], raw[1])
        else:
            raise _err(node, f"{what} expects a vector")
    elif param.kind == "profile":
        val = _build_profile(raw[0])
    elif param.kind == "map":
        val = build(raw[0]) if isinstance(raw[0], Call) else None
        if not isinstance(val, LiftedMap):
            raise _err(node, f"{what} expects a torus map")
    else:
        if not isinstance(raw[0], float):
            raise _err(node, f"{what} expects a number")
        val = raw[0]
        if param.kind == "int":
            if val != int(val):
                raise _err(node, f"{what} must be an integer")
            val = int(val)
    if param.check is not None and not param.check(val):
        raise _err(node, f"{what} out of range: {param.rule}")
    return val


def build(node: Call):
    """Turn a parsed expression into a LiftedMap (or a circle lift for circle_* primitives)."""
    if node.name not in PRIMITIVES:
        if node.name in PROFILES:
            raise _err(node, f"profile {node.name!r} is not a map")
        raise _err(node, f"unknown primitive {node.name!r}")
    params, fn, variadic = PRIMITIVES[node.name]
    if variadic:
        if node.kwargs:
            raise _err(node, f"{node.name} takes positional arguments only")
        return fn(*[_coerce(node, _p("arg", variadic), [a]) for a in node.args])

    # positional arguments fill parameters in order; a vector may span two numbers
    slots: dict[str, list[Value]] = {}
    args = list(node.args)
    for param in params:
        if not args:
            break
        if param.kind == "vec" and isinstance(args[0], float):
            if len(args) < 2 or not isinstance(args[1], float):
                raise _err(node, f"{node.name}: parameter {param.name!r} expects a vector")
            slots[param.name], args = args[:2], args[2:]
        else:
            slots[param.name], args = args[:1], args[1:]
    if args:
        raise _err(node, f"{node.name}: too many arguments (takes {len(params)})")
    names = {p.name for p in params}
    for key, val in node.kwargs:
        if key not in names:
            raise _err(node, f"{node.name}: unknown parameter {key!r}")
        if key in slots:
            raise _err(node, f"{node.name}: parameter {key!r} given twice")
        slots[key] = [val]
    values = []
    for param in params:
        if param.name in slots:
            values.append(_coerce(node, param, slots[param.name]))
        elif param.default is _REQUIRED:
            raise _err(node, f"{node.name}: missing parameter {param.name!r}")
        else:
            values.append(param.default)
    return fn(*values)


def build_from_text(text: str):
    return build(parse_map_expression(text))


def load_map_file(path) -> Call:
    with open(path, encoding="utf-8") as fh:
        return parse_map_expression(fh.read())
