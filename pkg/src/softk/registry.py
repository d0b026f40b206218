"""Session state: function variables, functions, instances and theorems.

Records are frozen dataclasses so a snapshot of the tables is just a copy
of the dicts; :meth:`Registry.transaction` uses that for rollback.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .errors import InvariantViolation, NameClash, UnknownFunction
from .kernel import BUILTINS, SPECIAL_FORMS, TRUE, Term, applied_functions, funvars_of_term, show_term

PLAIN = "plain"
CHOICE = "choice"
QUANTIFIER = "quantifier"
WITNESS = "witness"


@dataclass(frozen=True)
class FunVar:
    name: str
    arity: int


@dataclass(frozen=True)
class SoFun:
    """A function record. Second-order iff ``fparams`` is non-empty.

    Witness functions of quantifier definitions use kind ``witness``, have
    no body, and name their quantifier function in ``owner``.
    """

    name: str
    kind: str
    params: tuple
    body: Optional[Term]
    fparams: tuple = ()
    guard: Term = TRUE
    measure: Optional[Term] = None
    boundvars: tuple = ()
    quantifier: Optional[str] = None
    witness: Optional[str] = None
    rule: Optional[str] = None
    recursive: bool = False
    owner: Optional[str] = None
    instance_of: Optional[tuple] = None  # (sofun name, canonical sigma)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def second_order(self) -> bool:
        return bool(self.fparams)

    def term_slots(self) -> tuple:
        """Body, guard and measure, skipping absent ones."""
        return tuple(t for t in (self.body, self.guard, self.measure) if t is not None)


@dataclass(frozen=True)
class TheoremRec:
    name: str
    formula: Term
    funvars: frozenset
    rule_classes: Optional[str] = None
    origin: Optional[tuple] = field(default=None, compare=False)


def canonical(sigma) -> tuple:
    """Order-insensitive form of an instantiation: pairs sorted by key."""
    items = sigma.items() if isinstance(sigma, Mapping) else sigma
    return tuple(sorted(items))


class Registry:
    def __init__(self):
        self.funvars: dict = {}
        self.functions: dict = {}
        self.sofuns: dict = {}
        self.instances: dict = {}
        self.theorems: dict = {}
        self.order: list = []

    # -- queries used by the kernel ------------------------------------------

    def arity_of(self, name: str) -> Optional[int]:
        if name in self.funvars:
            return self.funvars[name].arity
        if name in self.functions:
            return self.functions[name].arity
        if name in BUILTINS:
            return BUILTINS[name]
        raise UnknownFunction(name)

    def is_funvar(self, name: str) -> bool:
        return name in self.funvars

    def fparams_of(self, name: str) -> frozenset:
        if name in self.functions:
            return frozenset(self.functions[name].fparams)
        if name in BUILTINS:
            return frozenset()
        if name in self.funvars:
            return frozenset()
        raise UnknownFunction(name)

    def function(self, name: str) -> SoFun:
        try:
            return self.functions[name]
        except KeyError:
            raise UnknownFunction(name) from None

    def theorem(self, name: str) -> TheoremRec:
        try:
            return self.theorems[name]
        except KeyError:
            raise UnknownFunction(name) from None

    def is_sofun(self, name: str) -> bool:
        return name in self.sofuns

    def name_in_use(self, name: str) -> bool:
        return (name in self.funvars or name in self.functions or name in self.theorems
                or name in BUILTINS or name in SPECIAL_FORMS)

    def with_pending(self, pending: Mapping[str, tuple]) -> "PendingView":
        """View in which each ``name -> (arity, fparams)`` of ``pending`` is
        treated as registered; used while a (recursive) definition is built."""
        return PendingView(self, pending)

    # -- registration ----------------------------------------------------------

    def _claim(self, name: str, existing, new) -> bool:
        """True if ``name`` is free; False if ``new`` is a redundant copy."""
        if existing is not None:
            if existing == new:
                return False
            raise NameClash(name, "already defined differently")
        if self.name_in_use(name):
            raise NameClash(name)
        return True

    def register_funvar(self, name: str, arity: int) -> bool:
        rec = FunVar(name, arity)
        if not self._claim(name, self.funvars.get(name), rec):
            return False
        if arity < 1:
            raise InvariantViolation(f"{name}: function variables take 1 or more arguments")
        self.funvars[name] = rec
        self.order.append(("funvar", name))
        return True

    def register_function(self, rec: SoFun) -> bool:
        """Register a first- or second-order function; second-order ones are
        also entered in the second-order function table."""
        if not self._claim(rec.name, self.functions.get(rec.name), rec):
            return False
        if rec.second_order and rec.kind != WITNESS:
            self._check_sofun(rec)
        self.functions[rec.name] = rec
        if rec.second_order and rec.kind != WITNESS:
            self.sofuns[rec.name] = rec
        self.order.append(("function", rec.name))
        return True

    register_sofun = register_function

    def _check_sofun(self, rec: SoFun) -> None:
        if len(set(rec.fparams)) != len(rec.fparams):
            raise InvariantViolation(f"{rec.name}: duplicate function parameters")
        for fv in rec.fparams:
            if fv not in self.funvars:
                raise InvariantViolation(f"{rec.name}: {fv} is not a function variable")
        view = self.with_pending({rec.name: (rec.arity, frozenset(rec.fparams))})
        if rec.kind == PLAIN:
            slots = (rec.body, rec.measure, rec.guard)
        elif rec.kind == CHOICE:
            slots = (rec.body,)
        else:
            slots = (rec.body, rec.guard)
        deps = frozenset().union(*(funvars_of_term(t, view) for t in slots))
        if deps != frozenset(rec.fparams):
            raise InvariantViolation(
                f"{rec.name}: function parameters {sorted(rec.fparams)} "
                f"differ from dependencies {sorted(deps)}")

    def register_instance(self, sofun: str, sigma, instance: str) -> bool:
        if sofun not in self.sofuns:
            raise InvariantViolation(f"{sofun} is not a second-order function")
        fparams = set(self.sofuns[sofun].fparams)
        key = (sofun, canonical(sigma))
        for fv, _ in key[1]:
            if fv not in fparams:
                raise InvariantViolation(f"{fv} is not a function parameter of {sofun}")
        existing = self.instances.get(key)
        if existing == instance:
            return False
        if existing is not None:
            raise NameClash(instance, f"instance already recorded as {existing}")
        self.instances[key] = instance
        self.order.append(("instance", key))
        return True

    def register_theorem(self, rec: TheoremRec) -> bool:
        if not self._claim(rec.name, self.theorems.get(rec.name), rec):
            return False
        actual = funvars_of_term(rec.formula, self)
        if actual != rec.funvars:
            raise InvariantViolation(f"{rec.name}: cached funvars {sorted(rec.funvars)} != {sorted(actual)}")
        self.theorems[rec.name] = rec
        self.order.append(("theorem", rec.name))
        return True

    def lookup_instance(self, sofun: str, sigma, extra: Optional[Mapping] = None) -> Optional[str]:
        """Instance of ``sofun`` under ``sigma`` restricted to its function
        parameters, or ``None``. ``extra`` holds instances being defined."""
        fparams = self.fparams_of(sofun)
        items = sigma.items() if isinstance(sigma, Mapping) else sigma
        key = (sofun, canonical((k, v) for k, v in items if k in fparams))
        if extra and key in extra:
            return extra[key]
        return self.instances.get(key)

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> tuple:
        return (dict(self.funvars), dict(self.functions), dict(self.sofuns),
                dict(self.instances), dict(self.theorems), list(self.order))

    def restore(self, snap: tuple) -> None:
        (self.funvars, self.functions, self.sofuns, self.instances,
         self.theorems, self.order) = (dict(snap[0]), dict(snap[1]), dict(snap[2]),
                                       dict(snap[3]), dict(snap[4]), list(snap[5]))

    @contextlib.contextmanager
    def transaction(self):
        """Roll every table back if the body raises."""
        snap = self.snapshot()
        try:
            yield self
        except BaseException:
            self.restore(snap)
            raise

    # -- reporting -------------------------------------------------------------

    def dump_lines(self) -> list:
        lines = []
        for table, key in self.order:
            if table == "funvar":
                fv = self.funvars[key]
                lines.append(f"funvar {fv.name} arity={fv.arity}")
            elif table == "function":
                f = self.functions[key]
                label = "sofun" if key in self.sofuns else "function"
                calls = sorted({n for t in f.term_slots() for n in applied_functions(t)} - set(BUILTINS))
                deps = sorted(set(f.fparams))
                parts = [f"{label} {f.name} kind={f.kind}", f"fparams=({' '.join(f.fparams)})",
                         f"params=({' '.join(f.params)})", f"deps=({' '.join(deps)})",
                         f"calls=({' '.join(calls)})"]
                if f.recursive:
                    parts.append("recursive")
                if f.owner:
                    parts.append(f"owner={f.owner}")
                if f.body is not None:
                    parts.append(f"body={show_term(f.body)}")
                if f.guard != TRUE:
                    parts.append(f"guard={show_term(f.guard)}")
                if f.measure is not None:
                    parts.append(f"measure={show_term(f.measure)}")
                lines.append(" ".join(parts))
            elif table == "instance":
                sofun, sigma = key
                pairs = " ".join(f"({k} . {v})" for k, v in sigma)
                lines.append(f"instance {self.instances[key]} of={sofun} sigma=({pairs})")
            else:
                th = self.theorems[key]
                lines.append(f"theorem {th.name} funvars=({' '.join(sorted(th.funvars))}) "
                             f"formula={show_term(th.formula)}")
        return lines


class PendingView:
    """Read-only registry view with extra not-yet-registered functions."""

    def __init__(self, registry: Registry, pending: Mapping[str, tuple]):
        self.registry = registry
        self.pending = dict(pending)

    def arity_of(self, name: str) -> Optional[int]:
        if name in self.pending:
            return self.pending[name][0]
        return self.registry.arity_of(name)

    def is_funvar(self, name: str) -> bool:
        return self.registry.is_funvar(name)

    def fparams_of(self, name: str) -> frozenset:
        if name in self.pending:
            return frozenset(self.pending[name][1])
        return self.registry.fparams_of(name)
