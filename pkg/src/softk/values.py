"""Runtime values: integers, characters, symbols (t/nil included), conses."""

from __future__ import annotations

from typing import Iterable, Iterator, Union

from . import sexpr
from .errors import MalformedTerm


class _Interned:
    """Immutable atom interned by its key, so equality is identity."""

    __slots__ = ()
    _table: dict

    def __new__(cls, key):
        obj = cls._table.get(key)
        if obj is None:
            obj = object.__new__(cls)
            object.__setattr__(obj, cls.__slots__[0], key)
            cls._table[key] = obj
        return obj

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __reduce__(self):
        return (type(self), (getattr(self, self.__slots__[0]),))

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


class Sym(_Interned):
    __slots__ = ("name",)
    _table: dict = {}

    def __repr__(self) -> str:
        return self.name


class Char(_Interned):
    __slots__ = ("code",)
    _table: dict = {}

    def __repr__(self) -> str:
        return sexpr.write_form(sexpr.Atom(sexpr.CHAR, chr(self.code)))


class Cons:
    """Immutable pair; the structural hash is computed once on construction."""

    __slots__ = ("car", "cdr", "_hash")

    def __init__(self, car: "Value", cdr: "Value"):
        object.__setattr__(self, "car", car)
        object.__setattr__(self, "cdr", cdr)
        object.__setattr__(self, "_hash", hash((car, cdr)))

    def __setattr__(self, name, value):
        raise AttributeError("Cons is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if other.__class__ is not Cons:
            return False
        # iterate down the cdr spine so long lists do not recurse deeply
        a, b = self, other
        while True:
            if a._hash != b._hash or a.car != b.car:
                return False
            a, b = a.cdr, b.cdr
            if a is b:
                return True
            if a.__class__ is not Cons or b.__class__ is not Cons:
                return a == b

    def __ne__(self, other) -> bool:
        return not self == other

    def __reduce__(self):
        return (Cons, (self.car, self.cdr))

    def __repr__(self) -> str:
        return show_value(self)


Value = Union[int, Char, Sym, Cons]

NIL = Sym("nil")
T = Sym("t")


def truth(b: bool) -> Sym:
    return T if b else NIL


def from_list(items: Iterable[Value], tail: Value = NIL) -> Value:
    out = tail
    for v in reversed(list(items)):
        out = Cons(v, out)
    return out


def iter_list(v: Value) -> Iterator[Value]:
    while isinstance(v, Cons):
        yield v.car
        v = v.cdr


def is_atom(v: Value) -> bool:
    return not isinstance(v, Cons)


def subvalues(v: Value) -> Iterator[Value]:
    """Pre-order walk over ``v`` and every car/cdr component."""
    stack = [v]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, Cons):
            stack.append(x.cdr)
            stack.append(x.car)


def leaves(v: Value) -> Iterator[Value]:
    return (x for x in subvalues(v) if not isinstance(x, Cons))


def form_to_value(form) -> Value:
    """Interpret a form as quoted data."""
    if isinstance(form, sexpr.Atom):
        if form.kind == sexpr.NUMBER:
            return int(form.text)
        if form.kind == sexpr.CHAR:
            return Char(ord(form.text))
        if form.kind == sexpr.SYMBOL:
            return Sym(form.text)
        raise MalformedTerm(f"strings are not values: {sexpr.write_form(form)}")
    tail = NIL if form.tail is None else form_to_value(form.tail)
    return from_list([form_to_value(e) for e in form.elements], tail)


def value_to_form(v: Value):
    if isinstance(v, bool):
        raise TypeError("python booleans are not values")
    if isinstance(v, int):
        return sexpr.num(v)
    if isinstance(v, Char):
        return sexpr.Atom(sexpr.CHAR, chr(v.code))
    if isinstance(v, Sym):
        return sexpr.Atom(sexpr.SYMBOL, v.name)
    items = []
    while isinstance(v, Cons):
        items.append(value_to_form(v.car))
        v = v.cdr
    tail = None if v == NIL else value_to_form(v)
    return sexpr.ListForm(tuple(items), tail)


def show_value(v: Value) -> str:
    return sexpr.write_form(value_to_form(v))


def parse_value(text: str) -> Value:
    return form_to_value(sexpr.read_form(text))
