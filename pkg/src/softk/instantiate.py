"""Instantiations of function variables and functional-instance closure.

An instantiation maps function variables to functions. Applying one to a
term replaces explicit applications of its keys and, implicitly, every
second-order function whose function parameters it touches: such a function
is swapped for its recorded instance under the restricted instantiation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .errors import ArityError, MalformedEvent, MissingInstance, UnknownFunction
from .kernel import (
    App, Const, Op, Term, Var, alpha_equal, app, applied_functions, rewrite_apps, subst_vars,
)
from .registry import CHOICE, PLAIN, QUANTIFIER, WITNESS, Registry, SoFun, TheoremRec, canonical


class Instantiation(Mapping):
    """Immutable, order-insensitive map from function variables to functions."""

    def __init__(self, pairs=()):
        items = list(pairs.items()) if isinstance(pairs, Mapping) else list(pairs)
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise MalformedEvent(f"duplicate keys in instantiation: {keys}")
        self._items = canonical(items)
        self._map = dict(self._items)

    def __getitem__(self, key):
        return self._map[key]

    def __iter__(self):
        return iter(k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return hash(self._items)

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return dict(self._map) == dict(other)
        return NotImplemented

    def __repr__(self):
        return "{" + ", ".join(f"{k}->{v}" for k, v in self._items) + "}"

    @property
    def canonical(self) -> tuple:
        return self._items

    def show(self) -> str:
        return " ".join(f"({k} . {v})" for k, v in self._items)

    def validate(self, registry: Registry) -> "Instantiation":
        """Keys must be function variables; values registered functions or
        function variables of the same arity."""
        for fv, f in self._items:
            if not registry.is_funvar(fv):
                raise MalformedEvent(f"{fv} is not a function variable")
            expected = registry.arity_of(fv)
            actual = registry.arity_of(f)
            if actual != expected:
                raise ArityError(f, expected, -1 if actual is None else actual)
        return self


def restrict(sigma: Mapping, fparams) -> Instantiation:
    keep = set(fparams)
    return Instantiation((k, v) for k, v in sigma.items() if k in keep)


def _instance_witness(registry: Registry, instance: str) -> str:
    rec = registry.functions.get(instance)
    if rec is not None and rec.witness:
        return rec.witness
    return witness_name(instance)


def witness_name(name: str) -> str:
    return f"{name}-witness"


def rule_name(name: str, quantifier: str) -> str:
    return f"{name}-necc" if quantifier == "forall" else f"{name}-suff"


def apply_instantiation(term: Term, sigma: Mapping, registry: Registry,
                        extra: Optional[Mapping] = None) -> Term:
    """Apply ``sigma`` to ``term``.

    ``extra`` maps instance-table keys to names of instances that are being
    defined right now, so a recursive definition can refer to itself.
    """
    if not sigma:
        return term
    keys = set(sigma)

    def replace(a: App) -> Term:
        if a.fn in sigma:
            return App(sigma[a.fn], a.args)
        rec = registry.functions.get(a.fn)
        if rec is None or not keys.intersection(rec.fparams):
            return a
        target = rec.owner if rec.kind == WITNESS else a.fn
        inst = registry.lookup_instance(target, sigma, extra)
        if inst is None:
            raise MissingInstance(target, restrict(sigma, registry.fparams_of(target)).canonical)
        if rec.kind == WITNESS:
            return App(_instance_witness(registry, inst), a.args)
        return App(inst, a.args)

    return rewrite_apps(term, replace)


@dataclass(frozen=True)
class PairClosure:
    funvar_pairs: tuple
    sofun_pairs: tuple
    witness_pairs: tuple

    @property
    def pairs(self) -> tuple:
        return self.funvar_pairs + self.sofun_pairs + self.witness_pairs

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)


def _dependent_sofuns(names: Iterable[str], keys: set, registry: Registry) -> set:
    out = set()
    for n in names:
        rec = registry.functions.get(n)
        if rec is None or not keys.intersection(rec.fparams):
            continue
        if rec.kind == WITNESS:
            out.add(rec.owner)
        elif n in registry.sofuns:
            out.add(n)
    return out


def compute_more_pairs(thm: TheoremRec, sigma: Mapping, registry: Registry) -> PairClosure:
    """Pairs needed to functionally instantiate ``thm`` with ``sigma``.

    Second-order functions reachable from the formula through the
    constraints of other second-order functions (their bodies, never their
    guards or measures) that depend on a key of ``sigma`` are visited
    breadth-first, each level in name order.
    """
    keys = set(sigma)
    frontier = sorted(_dependent_sofuns(applied_functions(thm.formula), keys, registry))
    seen = set(frontier)
    ordered = []
    while frontier:
        ordered.extend(frontier)
        found = set()
        for name in frontier:
            body = registry.function(name).body
            if body is not None:
                found |= _dependent_sofuns(applied_functions(body), keys, registry)
        found -= seen
        seen |= found
        frontier = sorted(found)

    sofun_pairs = []
    witness_pairs = []
    for name in ordered:
        inst = registry.lookup_instance(name, sigma)
        if inst is None:
            raise MissingInstance(name, restrict(sigma, registry.fparams_of(name)).canonical)
        sofun_pairs.append((name, inst))
    for name, inst in sofun_pairs:
        rec = registry.function(name)
        if rec.kind == QUANTIFIER:
            witness_pairs.append((rec.witness, _instance_witness(registry, inst)))
    return PairClosure(tuple(sorted(sigma.items())), tuple(sofun_pairs), tuple(witness_pairs))


def _picks(chooser: Term, boundvars: tuple) -> dict:
    """Bound variable -> the component of ``chooser`` that supplies it."""
    if len(boundvars) == 1:
        return {boundvars[0]: chooser}
    return {bv: app("mv-nth", Const(i), chooser) for i, bv in enumerate(boundvars)}


def _call(rec: SoFun, name: Optional[str] = None) -> App:
    return App(name or rec.name, tuple(Var(p) for p in rec.params))


def quantifier_definition(rec: SoFun) -> Term:
    """``(equal (f v..) matrix[bound := witness components])``."""
    matrix = rec.body.body
    return app("equal", _call(rec), subst_vars(matrix, _picks(_call(rec, rec.witness), rec.boundvars)))


def quantifier_rule(rec: SoFun) -> Term:
    """The -necc (forall) or -suff (exists) rewrite rule; bound variables free."""
    matrix = rec.body.body
    if rec.quantifier == "forall":
        return Op("implies", (_call(rec), matrix))
    return Op("implies", (matrix, _call(rec)))


def constraints_of(sof: SoFun, registry: Registry) -> list:
    """The constraints a replacement of ``sof`` has to satisfy, as
    ``(kind, term)`` pairs."""
    if sof.kind == PLAIN:
        return [("definition", app("equal", _call(sof), sof.body))]
    if sof.kind == CHOICE:
        chosen = subst_vars(sof.body, _picks(_call(sof), sof.boundvars))
        return [("choice-axiom", Op("implies", (sof.body, chosen)))]
    if sof.kind == QUANTIFIER:
        return [("definition", quantifier_definition(sof)), ("rewrite-rule", quantifier_rule(sof))]
    if sof.kind == WITNESS:
        owner = registry.function(sof.owner)
        matrix = owner.body.body
        chosen = subst_vars(matrix, _picks(_call(sof), sof.boundvars))
        if owner.quantifier == "forall":
            return [("choice-axiom", Op("implies", (app("not", matrix), app("not", chosen))))]
        return [("choice-axiom", Op("implies", (matrix, chosen)))]
    raise UnknownFunction(sof.name)


@dataclass(frozen=True)
class Obligation:
    replaced: str
    replacement: str
    kind: str
    expected: Term
    actual: Optional[Term]
    discharged: bool


def discharge_obligations(pairs: PairClosure, sigma: Mapping, registry: Registry) -> list:
    """Compare each instantiated constraint of a replaced function with the
    recorded constraint of its replacement. Function-variable pairs carry
    no constraints."""
    out = []
    for replaced, replacement in pairs.sofun_pairs + pairs.witness_pairs:
        src = registry.function(replaced)
        dst = registry.function(replacement)
        actual_list = constraints_of(dst, registry)
        bound_pairs = tuple(zip(src.boundvars, dst.boundvars))
        for i, (kind, constraint) in enumerate(constraints_of(src, registry)):
            expected = apply_instantiation(constraint, sigma, registry)
            actual = actual_list[i][1] if i < len(actual_list) and actual_list[i][0] == kind else None
            ok = (actual is not None and len(src.boundvars) == len(dst.boundvars)
                  and alpha_equal(expected, actual, bound_pairs))
            out.append(Obligation(replaced, replacement, kind, expected, actual, ok))
    return out
