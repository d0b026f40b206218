"""Refinement chains: spec_0 <- spec_1 <- ... <- spec_m over target
function variables, the composed end-to-end implication, and bounded
validation of the extracted implementation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .errors import ChainShapeError, MissingInstance, NameClash
from .evaluator import Limits, Universe, Verdict, check_bounded
from .instantiate import Instantiation, apply_instantiation
from .kernel import App, Op, Term, Var, funvars_of_term, show_term
from .registry import CHOICE, PLAIN, Registry, TheoremRec


@dataclass(frozen=True)
class RefinementChain:
    name: str
    specs: tuple  # spec_0 .. spec_m
    steps: tuple  # step_1 .. step_m
    implementation: Instantiation = field(default_factory=Instantiation)
    theorem: Optional[str] = None


def spec_call(name: str, registry: Registry) -> App:
    rec = registry.function(name)
    return App(name, tuple(Var(p) for p in rec.params))


def _conjuncts(term: Term) -> list:
    if isinstance(term, Op) and term.op == "and":
        out = []
        for a in term.args:
            out.extend(_conjuncts(a))
        return out
    return [term]


def _matches(side: Term, spec: str, registry: Registry) -> bool:
    call = spec_call(spec, registry)
    if side == call:
        return True
    if isinstance(side, Op) and side.op == "and" and len(side.args) == 1:
        return _matches(side.args[0], spec, registry)
    rec = registry.function(spec)
    if rec.kind == PLAIN and isinstance(side, Op) and side.op == "and":
        mine = _conjuncts(side)
        theirs = _conjuncts(rec.body)
        return len(mine) == len(theirs) and set(mine) == set(theirs)
    return False


def _split_implication(term: Term) -> Optional[tuple]:
    if isinstance(term, Op) and term.op == "implies":
        return term.args
    return None


def compose_chain(chain: RefinementChain, registry: Registry) -> TheoremRec:
    """Check every step has shape ``(implies (spec_j) (spec_j-1))`` and
    record ``(implies (spec_m) (spec_0))``."""
    specs, steps = chain.specs, chain.steps
    if not specs:
        raise ChainShapeError(0, "at least one specification")
    if len(steps) != len(specs) - 1:
        raise ChainShapeError(0, f"{len(specs) - 1} step theorem(s)", f"{len(steps)}")
    for j, step in enumerate(steps, start=1):
        formula = registry.theorem(step).formula
        expected = f"(implies ({specs[j]}) ({specs[j - 1]}))"
        parts = _split_implication(formula)
        if parts is None or not (_matches(parts[0], specs[j], registry)
                                 and _matches(parts[1], specs[j - 1], registry)):
            raise ChainShapeError(j, expected, show_term(formula))
    if len(steps) == 1:
        return registry.theorem(steps[0])
    formula = Op("implies", (spec_call(specs[-1], registry), spec_call(specs[0], registry)))
    if not steps:
        # nothing to compose; the degenerate chain is not recorded
        return TheoremRec(chain.theorem or chain.name, formula, funvars_of_term(formula, registry))
    name = chain.theorem or chain.name
    rec = TheoremRec(name, formula, funvars_of_term(formula, registry), origin=("chain", steps))
    existing = registry.theorems.get(name)
    if existing is not None:
        if existing.formula != formula:
            raise NameClash(name, "theorem exists with a different formula")
        return existing
    registry.register_theorem(rec)
    return rec


def _spec_matrix(name: str, registry: Registry) -> Term:
    rec = registry.function(name)
    if rec.kind == CHOICE or rec.body is None:
        raise ChainShapeError(0, f"{name} to be a plain or quantifier predicate")
    return rec.body


def verify_implementation(chain: RefinementChain, universe: Universe, registry: Registry,
                          limits: Optional[Limits] = None) -> Verdict:
    """Bounded check of spec_0's defining body with the implementation
    substituted for the target function variables."""
    limits = limits or Limits()
    spec0 = chain.specs[0]
    targets = registry.fparams_of(spec0)
    missing = sorted(targets - set(chain.implementation))
    if missing:
        return Verdict("unknown", reason=f"no implementation for {' '.join(missing)}")
    body = _spec_matrix(spec0, registry)
    try:
        term = apply_instantiation(body, chain.implementation, registry)
    except MissingInstance:
        return check_bounded(body, universe, registry, replace(limits, interp=dict(chain.implementation)))
    return check_bounded(term, universe, registry, limits)


def check_steps(chain: RefinementChain, universe: Universe, registry: Registry,
                limits: Optional[Limits] = None) -> list:
    """Bounded check of every step theorem with the target function
    variables interpreted by the implementation."""
    limits = replace(limits or Limits(), interp=dict(chain.implementation))
    return [(step, check_bounded(registry.theorem(step).formula, universe, registry, limits))
            for step in chain.steps]


def implementation_from(pairs: Mapping, registry: Registry) -> Instantiation:
    return Instantiation(pairs).validate(registry)
