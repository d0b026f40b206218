"""Call-by-value evaluation and exhaustive checking over finite universes.

Plain functions run by unfolding their definitions. Quantifier functions
only run inside :func:`check_bounded`, where their bound variables range
over a finite domain: the universe's atoms (or all its values when no atom
sort is declared) plus every component of the values currently in scope.
Choice functions, witnesses and uninterpreted function variables never
run unless ``Limits.interp`` maps the variable to an executable function.
"""

from __future__ import annotations

import gc
import itertools
import operator
import sys
import threading
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import BudgetExceeded, DepthExceeded, GuardViolation, NonExecutable, UnboundVariable
from .kernel import App, Cond, Const, Op, Quant, Term, Var, children, subst_vars
from .registry import PLAIN, QUANTIFIER, Registry
from .values import NIL, T, Char, Cons, Value, from_list, iter_list, show_value, subvalues, truth

DEFAULT_DEPTH = 10_000
DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class Limits:
    depth: int = DEFAULT_DEPTH
    budget: int = DEFAULT_BUDGET
    check_guards: bool = False
    interp: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class Universe:
    name: str
    values: tuple
    atoms: Optional[tuple] = None

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"universe {self.name} is empty")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"universe {self.name} has duplicate values")

    @property
    def quantifier_base(self) -> tuple:
        return self.atoms if self.atoms is not None else self.values


@dataclass(frozen=True)
class Verdict:
    status: str  # "pass" | "fail" | "unknown"
    binding: tuple = ()
    reason: str = ""
    assignments: int = 0

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def __str__(self) -> str:
        if self.status == "fail":
            shown = " ".join(f"{k}={show_value(v)}" for k, v in self.binding)
            return f"FAIL {shown}".rstrip()
        if self.status == "unknown":
            return f"UNKNOWN ({self.reason})"
        return f"PASS ({self.assignments} assignments)"


# ---------------------------------------------------------------------------
# builtins


def _fix(x):
    return x if isinstance(x, int) else 0


def _car(x):
    return x.car if isinstance(x, Cons) else NIL


def _cdr(x):
    return x.cdr if isinstance(x, Cons) else NIL


def _member(e, lst):
    while isinstance(lst, Cons):
        if lst.car == e:
            return lst
        lst = lst.cdr
    return NIL


def _len(x):
    n = 0
    while isinstance(x, Cons):
        n += 1
        x = x.cdr
    return n


def _true_listp(x):
    while isinstance(x, Cons):
        x = x.cdr
    return truth(x == NIL)


def _code_char(x):
    return Char(x) if isinstance(x, int) and 0 <= x < 256 else Char(0)


def _mv_nth(n, x):
    n = n if isinstance(n, int) and n >= 0 else 0
    for _ in range(n):
        x = _cdr(x)
    return _car(x)


BUILTIN_IMPLS = {
    "cons": Cons,
    "car": _car,
    "cdr": _cdr,
    "atom": lambda x: truth(not isinstance(x, Cons)),
    "consp": lambda x: truth(isinstance(x, Cons)),
    "endp": lambda x: truth(not isinstance(x, Cons)),
    "null": lambda x: truth(x == NIL),
    "not": lambda x: truth(x == NIL),
    "equal": lambda a, b: truth(a == b),
    "list": lambda *xs: from_list(xs),
    "member": _member,
    "append": lambda a, b: from_list(iter_list(a), b),
    "len": _len,
    "natp": lambda x: truth(isinstance(x, int) and x >= 0),
    "integerp": lambda x: truth(isinstance(x, int)),
    "fix": _fix,
    "nfix": lambda x: x if isinstance(x, int) and x >= 0 else 0,
    "binary-+": lambda a, b: _fix(a) + _fix(b),
    "+": lambda a, b: _fix(a) + _fix(b),
    "*": lambda a, b: _fix(a) * _fix(b),
    "<": lambda a, b: truth(_fix(a) < _fix(b)),
    "code-char": _code_char,
    "char-code": lambda c: c.code if isinstance(c, Char) else 0,
    "characterp": lambda c: truth(isinstance(c, Char)),
    "true-listp": _true_listp,
    "mv-nth": _mv_nth,
}


# ---------------------------------------------------------------------------
# machine


_MISSING = object()


class _Machine:
    """Evaluator that compiles each term once into nested closures.

    Plain-function results are memoized per machine (values are immutable
    and functions pure), which matters when a check enumerates an inner
    variable while an outer application such as ``(h x)`` stays fixed.
    """

    MEMO_LIMIT = 200_000

    def __init__(self, registry: Registry, limits: Limits, universe: Optional[Universe] = None):
        self.registry = registry
        self.limits = limits
        self.universe = universe
        self.depth = 0
        self.assignments = 0
        self._compiled: dict = {}
        self._keep: list = []  # keeps compiled terms alive so their ids stay unique
        self._memos: dict = {}  # function name -> {args tuple: value}

    def _memo_for(self, fn: str) -> dict:
        memo = self._memos.get(fn)
        if memo is None:
            memo = self._memos[fn] = {}
        return memo

    def count(self, n: int = 1) -> None:
        self.assignments += n
        if self.assignments > self.limits.budget:
            raise BudgetExceeded(f"more than {self.limits.budget} assignments")

    def ev(self, term: Term, env: dict) -> Value:
        return self.compile(term)(env)

    # -- compilation -----------------------------------------------------------

    def compile(self, term: Term):
        key = id(term)
        code = self._compiled.get(key)
        if code is None:
            code = self._compile(term)
            self._compiled[key] = code
            self._keep.append(term)
        return code

    def _compile(self, term: Term):
        if isinstance(term, Const):
            value = term.value
            return lambda env: value
        if isinstance(term, Var):
            # a missing name surfaces as KeyError, translated in _run_deep
            return operator.itemgetter(term.name)
        if isinstance(term, App):
            return self._compile_app(term)
        if isinstance(term, Op):
            return self._compile_op(term)
        if isinstance(term, Cond):
            clauses = [(self.compile(t), None if v is None else self.compile(v)) for t, v in term.clauses]
            if len(clauses) == 2 and None not in clauses[0] + clauses[1]:
                (t0, v0), (t1, v1) = clauses

                def cond2(env):
                    if t0(env) is not NIL:
                        return v0(env)
                    return v1(env) if t1(env) is not NIL else NIL
                return cond2

            def cond(env):
                for test, value in clauses:
                    v = test(env)
                    if v is not NIL:
                        return v if value is None else value(env)
                return NIL
            return cond
        return self._compile_quant(term)

    def _compile_app(self, term: App):
        args = [self.compile(a) for a in term.args]
        fn = term.fn
        impl = BUILTIN_IMPLS.get(fn) if fn not in self.limits.interp else None
        if impl is not None:
            if len(args) == 1:
                a0, = args
                return lambda env: impl(a0(env))
            if len(args) == 2:
                a0, a1 = args
                return lambda env: impl(a0(env), a1(env))
            return lambda env: impl(*[a(env) for a in args])
        rec = self.registry.functions.get(fn) if fn not in self.limits.interp else None
        if rec is not None and rec.kind == PLAIN and not self.limits.check_guards:
            call = self._plain_caller(rec)
        else:
            call = lambda args: self.call(fn, args)  # noqa: E731
        if len(args) == 1:
            a0, = args
            return lambda env: call((a0(env),))
        if len(args) == 2:
            a0, a1 = args
            return lambda env: call((a0(env), a1(env)))
        return lambda env: call(tuple([a(env) for a in args]))

    def _plain_caller(self, rec):
        """Memoizing caller for an unguarded plain function; the body is
        compiled on first use so recursive definitions terminate."""
        params = rec.params
        memo = self._memo_for(rec.name)
        lookup = memo.get
        body = []

        def call(args):
            value = lookup(args, _MISSING)
            if value is not _MISSING:
                return value
            if not body:
                body.append(self.compile(rec.body))
            self.depth += 1
            if self.depth > self.limits.depth:
                self.depth -= 1
                raise DepthExceeded(f"recursion deeper than {self.limits.depth}")
            try:
                value = body[0](dict(zip(params, args)))
            finally:
                self.depth -= 1
            if len(memo) >= self.MEMO_LIMIT:
                memo.clear()
            memo[args] = value
            return value
        return call

    def _compile_op(self, term: Op):
        op = term.op
        args = [self.compile(a) for a in term.args]
        if len(args) == 2 and op in ("and", "or"):
            a0, a1 = args
            if op == "and":
                return lambda env: NIL if a0(env) is NIL else a1(env)

            def or2(env):
                v = a0(env)
                return v if v is not NIL else a1(env)
            return or2
        if op == "and":
            def and_(env):
                v = T
                for a in args:
                    v = a(env)
                    if v is NIL:
                        return NIL
                return v
            return and_
        if op == "or":
            def or_(env):
                for a in args:
                    v = a(env)
                    if v is not NIL:
                        return v
                return NIL
            return or_
        if op == "if":
            test, then, other = args
            return lambda env: then(env) if test(env) is not NIL else other(env)
        left, right = args
        if op == "implies":
            return lambda env: T if left(env) is NIL or right(env) is not NIL else NIL
        return lambda env: T if (left(env) is NIL) == (right(env) is NIL) else NIL

    def _compile_quant(self, term: Quant):
        body = self.compile(term.body)
        names = term.vars
        want = term.kind == "forall"
        hit, miss = (T, NIL) if want else (NIL, T)

        def quant(env):
            for combo in itertools.product(self.domain(env), repeat=len(names)):
                self.count()
                inner = dict(env)
                inner.update(zip(names, combo))
                if (body(inner) is not NIL) != want:
                    return miss
            return hit
        return quant

    def domain(self, env: dict) -> list:
        if self.universe is None:
            raise NonExecutable("quantifier (no universe)")
        seen = dict.fromkeys(self.universe.quantifier_base)
        for value in env.values():
            for sub in subvalues(value):
                seen.setdefault(sub, None)
        return list(seen)

    # -- calls -----------------------------------------------------------------

    def call(self, fn: str, args) -> Value:
        interp = self.limits.interp
        if fn in interp:
            return self.call(interp[fn], args)
        impl = BUILTIN_IMPLS.get(fn)
        if impl is not None:
            return impl(*args)
        rec = self.registry.functions.get(fn)
        if rec is None:
            raise NonExecutable(fn)
        if rec.kind == PLAIN:
            memo = self._memo_for(fn)
            value = memo.get(args, _MISSING)
            if value is not _MISSING:
                return value
            env = dict(zip(rec.params, args))
            if self.limits.check_guards and self.ev(rec.guard, env) is NIL:
                raise GuardViolation(f"guard of {fn} fails on {' '.join(map(show_value, args))}")
            self.depth += 1
            try:
                if self.depth > self.limits.depth:
                    raise DepthExceeded(f"recursion deeper than {self.limits.depth}")
                value = self.compile(rec.body)(env)
            finally:
                self.depth -= 1
            if len(memo) >= self.MEMO_LIMIT:
                memo.clear()
            memo[args] = value
            return value
        if rec.kind == QUANTIFIER and self.universe is not None:
            return self.compile(rec.body)(dict(zip(rec.params, args)))
        raise NonExecutable(fn)


def _run_deep(limits: Limits, func):
    """Run ``func`` on a thread with a stack large enough for ``limits.depth``
    nested calls, turning Python recursion overflow into DepthExceeded."""
    box = {}

    def target():
        try:
            box["value"] = func()
        except RecursionError:
            box["error"] = DepthExceeded("interpreter recursion limit")
        except KeyError as exc:
            box["error"] = UnboundVariable(exc.args[0]) if exc.args and isinstance(exc.args[0], str) else exc
        except BaseException as exc:  # re-raised on the caller's thread
            box["error"] = exc

    old_limit = sys.getrecursionlimit()
    old_stack = threading.stack_size()
    sys.setrecursionlimit(max(old_limit, 12 * limits.depth + 2000))
    threading.stack_size(512 * 1024 * 1024)
    try:
        worker = threading.Thread(target=target)
        worker.start()
    finally:
        threading.stack_size(old_stack)
    worker.join()
    sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


def eval_term(term: Term, env: Optional[Mapping] = None, registry: Optional[Registry] = None,
              limits: Optional[Limits] = None, universe: Optional[Universe] = None) -> Value:
    """Evaluate ``term`` under ``env``. Raises NonExecutable, DepthExceeded
    or UnboundVariable."""
    registry = registry if registry is not None else Registry()
    limits = limits or Limits()
    machine = _Machine(registry, limits, universe)
    return _run_deep(limits, lambda: machine.ev(term, dict(env or {})))


def ordered_free_vars(term: Term) -> list:
    """Free variables in order of first occurrence."""
    out: dict = {}

    def walk(t, bound):
        if isinstance(t, Var):
            if t.name not in bound:
                out.setdefault(t.name, None)
        elif isinstance(t, Quant):
            walk(t.body, bound | set(t.vars))
        else:
            for c in children(t):
                walk(c, bound)

    walk(term, frozenset())
    return list(out)


def _peel(term: Term, registry: Registry) -> tuple:
    """Strip leading universal structure: ``forall`` forms and applications
    of universally quantified functions. Returns (matrix, prefix vars)."""
    prefix = []
    while True:
        if isinstance(term, Quant) and term.kind == "forall":
            prefix.extend(term.vars)
            term = term.body
            continue
        if isinstance(term, App):
            rec = registry.functions.get(term.fn)
            if rec is not None and rec.kind == QUANTIFIER and rec.quantifier == "forall":
                term = subst_vars(rec.body, dict(zip(rec.params, term.args)))
                continue
        return term, prefix


def check_bounded(formula: Term, universe: Universe, registry: Registry,
                  limits: Optional[Limits] = None) -> Verdict:
    """Exhaustively evaluate ``formula`` over ``universe``.

    Free variables and leading universal quantifiers are enumerated over
    the universe values; the first falsifying assignment in enumeration
    order is returned as a Fail.
    """
    limits = limits or Limits()
    free = ordered_free_vars(formula)
    matrix, prefix = _peel(formula, registry)
    names = free + [v for v in prefix if v not in free]
    total = len(universe.values) ** len(names)
    if total > limits.budget:
        return Verdict("unknown", reason=f"{total} assignments exceed budget {limits.budget}")
    machine = _Machine(registry, limits, universe)

    def run() -> Verdict:
        code = machine.compile(matrix)
        budget = limits.budget
        # the loop allocates heavily but builds no cycles, so full
        # collections only rescan whatever the caller already holds
        was_enabled = gc.isenabled()
        gc.disable()
        try:
            for combo in itertools.product(universe.values, repeat=len(names)):
                machine.assignments += 1
                if machine.assignments > budget:
                    raise BudgetExceeded(f"more than {budget} assignments")
                env = dict(zip(names, combo))
                if code(env) is NIL:
                    return Verdict("fail", binding=tuple(zip(names, combo)), assignments=machine.assignments)
            return Verdict("pass", assignments=machine.assignments)
        finally:
            if was_enabled:
                gc.enable()

    try:
        return _run_deep(limits, run)
    except NonExecutable as exc:
        return Verdict("unknown", reason=f"non-executable: {exc.name}")
    except (DepthExceeded, BudgetExceeded, GuardViolation, UnboundVariable) as exc:
        return Verdict("unknown", reason=str(exc))

