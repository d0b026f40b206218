"""Term language and the function-variable dependency computation.

A term is a variable, a quoted constant, a function application, or one of
the structured forms ``and or if implies iff`` (:class:`Op`), ``cond`` and
``forall``/``exists`` (:class:`Quant`). Terms are hashable and immutable.

Functions here only need three queries from a registry-like object:
``arity_of(name)`` (``None`` means variadic), ``is_funvar(name)`` and
``fparams_of(name)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Optional, Union

from . import sexpr
from .errors import ArityError, MalformedTerm
from .values import NIL, T, Char, Sym, Value, form_to_value, value_to_form


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple = ()


@dataclass(frozen=True)
class Op:
    op: str
    args: tuple


@dataclass(frozen=True)
class Cond:
    # each clause is (test, value); value None means the clause returns its test
    clauses: tuple


@dataclass(frozen=True)
class Quant:
    kind: str  # "forall" | "exists"
    vars: tuple
    body: "Term"


Term = Union[Var, Const, App, Op, Cond, Quant]

TRUE = Const(T)
FALSE = Const(NIL)

OP_ARITY = {"and": None, "or": None, "if": 3, "implies": 2, "iff": 2}
QUANTIFIERS = ("forall", "exists")
SPECIAL_FORMS = frozenset(OP_ARITY) | {"cond", "quote", *QUANTIFIERS}

# name -> arity (None: variadic)
BUILTINS: dict = {
    "cons": 2, "car": 1, "cdr": 1, "atom": 1, "consp": 1, "endp": 1, "null": 1,
    "equal": 2, "not": 1, "list": None, "member": 2, "append": 2, "len": 1,
    "natp": 1, "integerp": 1, "fix": 1, "nfix": 1, "binary-+": 2, "+": 2,
    "*": 2, "<": 2, "code-char": 1, "char-code": 1, "characterp": 1,
    "true-listp": 1, "mv-nth": 2,
}


def app(fn: str, *args: Term) -> App:
    return App(fn, tuple(args))


def var(name: str) -> Var:
    return Var(name)


# ---------------------------------------------------------------------------
# Form <-> Term


def form_to_term(form) -> Term:
    """Convert a form to a term; purely syntactic, no registry lookups."""
    if isinstance(form, sexpr.Atom):
        if form.kind in (sexpr.NUMBER, sexpr.CHAR):
            return Const(form_to_value(form))
        if form.kind == sexpr.STRING:
            raise MalformedTerm(f"string in term position: {sexpr.write_form(form)}")
        if form.text in ("t", "nil") or sexpr.is_keyword(form):
            return Const(Sym(form.text))
        return Var(form.text)
    if form.tail is not None:
        raise MalformedTerm(f"dotted list in term position: {sexpr.write_form(form)}")
    head = form.head
    if head is None:
        raise MalformedTerm(f"application of a non-symbol: {sexpr.write_form(form)}")
    rest = form.elements[1:]
    if head == "quote":
        if len(rest) != 1:
            raise MalformedTerm("quote takes exactly one argument")
        return Const(form_to_value(rest[0]))
    if head in OP_ARITY:
        args = tuple(form_to_term(a) for a in rest)
        expected = OP_ARITY[head]
        if expected is not None and len(args) != expected:
            raise ArityError(head, expected, len(args))
        return Op(head, args)
    if head == "cond":
        clauses = []
        for c in rest:
            if not isinstance(c, sexpr.ListForm) or c.tail is not None or len(c) not in (1, 2):
                raise MalformedTerm(f"bad cond clause: {sexpr.write_form(c)}")
            test = form_to_term(c[0])
            clauses.append((test, form_to_term(c[1]) if len(c) == 2 else None))
        return Cond(tuple(clauses))
    if head in QUANTIFIERS:
        if len(rest) != 2:
            raise MalformedTerm(f"{head} takes a variable list and a body")
        return Quant(head, parse_var_list(rest[0]), form_to_term(rest[1]))
    if head in ("t", "nil") or head.startswith(":"):
        raise MalformedTerm(f"{head} is not a function")
    return App(head, tuple(form_to_term(a) for a in rest))


def parse_var_list(form, allow_single: bool = True) -> tuple:
    """Parse ``x`` or ``(x y ...)`` into a tuple of distinct variable names."""
    if allow_single and sexpr.is_symbol(form) and form.text != "nil":
        names = (form.text,)
    elif isinstance(form, sexpr.ListForm) and form.tail is None:
        names = tuple(e.text if sexpr.is_symbol(e) else None for e in form.elements)
    elif sexpr.is_symbol(form, "nil"):
        names = ()
    else:
        raise MalformedTerm(f"bad variable list: {sexpr.write_form(form)}")
    for n in names:
        if n is None or n in ("t", "nil") or n.startswith(":"):
            raise MalformedTerm(f"bad variable list: {sexpr.write_form(form)}")
    if len(set(names)) != len(names):
        raise MalformedTerm(f"duplicate variables: {sexpr.write_form(form)}")
    return names


def term_to_form(term: Term):
    if isinstance(term, Var):
        return sexpr.sym(term.name)
    if isinstance(term, Const):
        v = term.value
        if isinstance(v, (int, Char)) or v in (T, NIL) or (isinstance(v, Sym) and v.name.startswith(":")):
            return value_to_form(v)
        return sexpr.lst(sexpr.sym("quote"), value_to_form(v))
    if isinstance(term, App):
        return sexpr.ListForm((sexpr.sym(term.fn),) + tuple(term_to_form(a) for a in term.args))
    if isinstance(term, Op):
        return sexpr.ListForm((sexpr.sym(term.op),) + tuple(term_to_form(a) for a in term.args))
    if isinstance(term, Cond):
        clauses = []
        for test, value in term.clauses:
            parts = (term_to_form(test),) if value is None else (term_to_form(test), term_to_form(value))
            clauses.append(sexpr.ListForm(parts))
        return sexpr.ListForm((sexpr.sym("cond"),) + tuple(clauses))
    if isinstance(term, Quant):
        vs = sexpr.sym(term.vars[0]) if len(term.vars) == 1 else sexpr.ListForm(tuple(sexpr.sym(v) for v in term.vars))
        return sexpr.lst(sexpr.sym(term.kind), vs, term_to_form(term.body))
    raise TypeError(f"not a term: {term!r}")


def show_term(term: Term) -> str:
    return sexpr.write_form(term_to_form(term))


def parse_term(text: str) -> Term:
    return form_to_term(sexpr.read_form(text))


# ---------------------------------------------------------------------------
# Traversals


def children(term: Term) -> tuple:
    if isinstance(term, (App, Op)):
        return term.args
    if isinstance(term, Cond):
        return tuple(x for clause in term.clauses for x in clause if x is not None)
    if isinstance(term, Quant):
        return (term.body,)
    return ()


def subterms(term: Term) -> Iterator[Term]:
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(children(t)))


def applied_functions(term: Term) -> Iterator[str]:
    """Names applied anywhere in ``term``, pre-order, with repeats."""
    for t in subterms(term):
        if isinstance(t, App):
            yield t.fn


def free_vars(term: Term) -> frozenset:
    if isinstance(term, Var):
        return frozenset((term.name,))
    if isinstance(term, Quant):
        return free_vars(term.body) - set(term.vars)
    out = frozenset()
    for c in children(term):
        out |= free_vars(c)
    return out


def rewrite_apps(term: Term, fn: Callable[[App], Term]) -> Term:
    """Rebuild ``term`` bottom-up, passing each application (with already
    rewritten arguments) through ``fn``."""
    if isinstance(term, App):
        return fn(App(term.fn, tuple(rewrite_apps(a, fn) for a in term.args)))
    if isinstance(term, Op):
        return Op(term.op, tuple(rewrite_apps(a, fn) for a in term.args))
    if isinstance(term, Cond):
        return Cond(tuple(
            (rewrite_apps(t, fn), None if v is None else rewrite_apps(v, fn))
            for t, v in term.clauses
        ))
    if isinstance(term, Quant):
        return Quant(term.kind, term.vars, rewrite_apps(term.body, fn))
    return term


def fresh_name(base: str, avoid) -> str:
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand
    raise AssertionError("unreachable")


def subst_vars(term: Term, mapping: Mapping[str, Term]) -> Term:
    """Capture-avoiding substitution of terms for free variables."""
    if not mapping:
        return term
    if isinstance(term, Var):
        return mapping.get(term.name, term)
    if isinstance(term, Const):
        return term
    if isinstance(term, App):
        return App(term.fn, tuple(subst_vars(a, mapping) for a in term.args))
    if isinstance(term, Op):
        return Op(term.op, tuple(subst_vars(a, mapping) for a in term.args))
    if isinstance(term, Cond):
        return Cond(tuple(
            (subst_vars(t, mapping), None if v is None else subst_vars(v, mapping))
            for t, v in term.clauses
        ))
    inner = {k: v for k, v in mapping.items() if k not in term.vars}
    body_fv = free_vars(term.body)
    inner = {k: v for k, v in inner.items() if k in body_fv}
    if not inner:
        return term
    incoming = frozenset().union(*(free_vars(v) for v in inner.values()))
    new_vars = []
    renames = {}
    avoid = set(incoming) | body_fv | set(term.vars)
    for v in term.vars:
        if v in incoming:
            nv = fresh_name(v, avoid)
            avoid.add(nv)
            renames[v] = Var(nv)
            new_vars.append(nv)
        else:
            new_vars.append(v)
    body = subst_vars(term.body, renames) if renames else term.body
    return Quant(term.kind, tuple(new_vars), subst_vars(body, inner))


def alpha_equal(a: Term, b: Term, pairs=()) -> bool:
    """Structural equality up to renaming of quantifier-bound variables.

    ``pairs`` seeds the correspondence with (name-in-a, name-in-b) bindings,
    for variables that are bound by an enclosing construct outside the term.
    """
    env_a = {x: i for i, (x, _) in enumerate(pairs)}
    env_b = {y: i for i, (_, y) in enumerate(pairs)}
    return _alpha(a, b, env_a, env_b, len(pairs))


def _alpha(a, b, env_a, env_b, depth) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = env_a.get(a.name), env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name
        return ia == ib
    if isinstance(a, Const):
        return a == b
    if isinstance(a, (App, Op)):
        if (a.fn if isinstance(a, App) else a.op) != (b.fn if isinstance(b, App) else b.op):
            return False
        return len(a.args) == len(b.args) and all(
            _alpha(x, y, env_a, env_b, depth) for x, y in zip(a.args, b.args))
    if isinstance(a, Cond):
        if len(a.clauses) != len(b.clauses):
            return False
        for (ta, va), (tb, vb) in zip(a.clauses, b.clauses):
            if (va is None) != (vb is None) or not _alpha(ta, tb, env_a, env_b, depth):
                return False
            if va is not None and not _alpha(va, vb, env_a, env_b, depth):
                return False
        return True
    if a.kind != b.kind or len(a.vars) != len(b.vars):
        return False
    env_a = dict(env_a)
    env_b = dict(env_b)
    for i, (x, y) in enumerate(zip(a.vars, b.vars)):
        env_a[x] = depth + i
        env_b[y] = depth + i
    return _alpha(a.body, b.body, env_a, env_b, depth + len(a.vars))


# ---------------------------------------------------------------------------
# Registry-dependent checks


def check_arities(term: Term, registry) -> None:
    """Raise :class:`ArityError` on the first application with a wrong
    argument count; raise ``UnknownFunction`` for unregistered names."""
    for t in subterms(term):
        if isinstance(t, App):
            expected = registry.arity_of(t.fn)
            if expected is not None and expected != len(t.args):
                raise ArityError(t.fn, expected, len(t.args))


def funvars_of_term(term: Optional[Term], registry) -> frozenset:
    """Function variables applied in ``term`` plus the declared function
    parameters of every second-order function applied in ``term``."""
    if term is None:
        return frozenset()
    out = set()
    for fn in applied_functions(term):
        if registry.is_funvar(fn):
            out.add(fn)
        else:
            out |= registry.fparams_of(fn)
    return frozenset(out)
