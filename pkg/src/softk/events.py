"""Event processors: defunvar, defun/defun2, defchoose/defchoose2,
defun-sk/defun-sk2, defun-inst, defthm and defthm-inst.

Each event runs inside a registry transaction, so a rejected event leaves
every table exactly as it was.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from . import sexpr
from .errors import FunvarMismatch, MalformedEvent, MalformedTerm, ObligationFailed, SoftError, BoundedCheckFailed
from .evaluator import Limits, Universe, Verdict, check_bounded
from .instantiate import (
    Instantiation, PairClosure, apply_instantiation, compute_more_pairs, constraints_of,
    discharge_obligations, rule_name, witness_name,
)
from .kernel import (
    TRUE, App, Quant, Term, Var, applied_functions, check_arities, form_to_term, free_vars,
    funvars_of_term, parse_var_list, subterms,
)
from .registry import CHOICE, PLAIN, QUANTIFIER, WITNESS, Registry, SoFun, TheoremRec

log = logging.getLogger(__name__)

ADMITTED = "admitted"
REDUNDANT = "redundant"
REJECTED = "rejected"


@dataclass
class EventOutcome:
    event: str
    name: str
    status: str
    artifacts: tuple = ()
    diagnostics: tuple = ()
    closure: Optional[PairClosure] = None
    obligations: tuple = ()
    verdict: Optional[Verdict] = None
    error: Optional[SoftError] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status in (ADMITTED, REDUNDANT)


# ---------------------------------------------------------------------------
# form helpers


def _symbol(form, what: str) -> str:
    if not sexpr.is_symbol(form) or sexpr.is_keyword(form) or form.text in ("t", "nil"):
        raise MalformedEvent(f"expected {what}, got {_show(form)}")
    return form.text


def _show(form) -> str:
    return sexpr.write_form(form) if form is not None else "nothing"


def _symbols(form, what: str) -> tuple:
    if sexpr.is_symbol(form, "nil"):
        return ()
    if not isinstance(form, sexpr.ListForm) or form.tail is not None:
        raise MalformedEvent(f"expected a list of {what}, got {_show(form)}")
    names = tuple(_symbol(e, what) for e in form.elements)
    if len(set(names)) != len(names):
        raise MalformedEvent(f"duplicate {what}: {_show(form)}")
    return names


def _keyword_options(forms, event: str) -> dict:
    """Parse ``:key value`` pairs."""
    if len(forms) % 2:
        raise MalformedEvent(f"{event}: keyed options must come in pairs")
    opts = {}
    for k, v in zip(forms[::2], forms[1::2]):
        if not sexpr.is_keyword(k):
            raise MalformedEvent(f"{event}: expected a keyword, got {_show(k)}")
        if k.text in opts:
            raise MalformedEvent(f"{event}: duplicate option {k.text}")
        opts[k.text] = v
    return opts


def _term(form) -> Term:
    try:
        return form_to_term(form)
    except MalformedTerm as exc:
        raise MalformedEvent(str(exc)) from None


def _parse_declarations(forms) -> tuple:
    """Pull guard and measure out of ``(declare (xargs ...))`` forms."""
    guard = measure = None
    ignored = []
    for d in forms:
        if not (isinstance(d, sexpr.ListForm) and d.head == "declare"):
            raise MalformedEvent(f"expected a declaration, got {_show(d)}")
        for spec in d.elements[1:]:
            if isinstance(spec, sexpr.ListForm) and spec.head == "xargs":
                opts = _keyword_options(spec.elements[1:], "xargs")
                for key, value in opts.items():
                    if key == ":guard":
                        guard = _term(value)
                    elif key == ":measure":
                        measure = _term(value)
                    else:
                        ignored.append(key)
    return guard, measure, ignored


def _parse_sigma(forms, registry: Registry) -> Instantiation:
    pairs = []
    for p in forms:
        if not (isinstance(p, sexpr.ListForm) and len(p) == 1 and p.tail is not None):
            raise MalformedEvent(f"expected a (fv . f) pair, got {_show(p)}")
        pairs.append((_symbol(p[0], "function variable"), _symbol(p.tail, "function")))
    return Instantiation(pairs).validate(registry)


def _check_deps(deps: frozenset, declared) -> None:
    declared = frozenset(declared)
    if deps != declared:
        raise FunvarMismatch(extra=deps - declared, missing=declared - deps)


def _check_vars(name: str, terms, allowed) -> None:
    allowed = set(allowed)
    for t in terms:
        if t is None:
            continue
        stray = free_vars(t) - allowed
        if stray:
            raise MalformedEvent(f"{name}: free variables {sorted(stray)} are not parameters")


def _car_cdr_of(term: Term, param: str) -> bool:
    if not (isinstance(term, App) and term.fn in ("car", "cdr") and len(term.args) == 1):
        return False
    inner = term.args[0]
    return inner == Var(param) or _car_cdr_of(inner, param)


def structural_recursion(name: str, params: tuple, body: Term) -> bool:
    """Recursive calls all descend by car/cdr into one parameter that the
    body tests with atom/consp/endp."""
    calls = [t for t in subterms(body) if isinstance(t, App) and t.fn == name]
    tests = {t.args[0].name for t in subterms(body)
             if isinstance(t, App) and t.fn in ("atom", "consp", "endp") and len(t.args) == 1
             and isinstance(t.args[0], Var)}
    for i, p in enumerate(params):
        if p in tests and all(_car_cdr_of(c.args[i], p) for c in calls):
            return True
    return False


# ---------------------------------------------------------------------------
# session


class Session:
    """A registry plus the settings that govern event processing."""

    def __init__(self, registry: Optional[Registry] = None, *, check_bounded: bool = False,
                 universe_default: Optional[str] = None, limits: Optional[Limits] = None):
        self.registry = registry if registry is not None else Registry()
        self.check_bounded = check_bounded
        self.universe_default = universe_default
        self.limits = limits or Limits()
        self.universes: dict = {}
        self._handlers = {
            "defunvar": self.ev_defunvar,
            "defun": self.ev_defun,
            "defun2": self.ev_defun2,
            "defchoose": self.ev_defchoose,
            "defchoose2": self.ev_defchoose2,
            "defun-sk": self.ev_defun_sk,
            "defun-sk2": self.ev_defun_sk2,
            "defun-inst": self.ev_defun_inst,
            "defthm": self.ev_defthm,
            "defthm-inst": self.ev_defthm_inst,
        }

    def handles(self, form) -> bool:
        return isinstance(form, sexpr.ListForm) and form.head in self._handlers

    def process(self, form) -> EventOutcome:
        """Process one event form; errors become a rejected outcome."""
        head = form.head if isinstance(form, sexpr.ListForm) else None
        name = "?"
        if isinstance(form, sexpr.ListForm) and len(form) > 1 and sexpr.is_symbol(form[1]):
            name = form[1].text
        handler = self._handlers.get(head)
        if handler is None:
            err = MalformedEvent(f"unknown event {_show(form)[:60]}")
            return EventOutcome(str(head), name, REJECTED, diagnostics=(str(err),), error=err)
        try:
            with self.registry.transaction():
                return handler(form)
        except SoftError as exc:
            log.debug("rejected %s %s: %s", head, name, exc)
            return EventOutcome(head, name, REJECTED, diagnostics=(f"{type(exc).__name__}: {exc}",), error=exc)

    # -- function variables ---------------------------------------------------

    def ev_defunvar(self, form) -> EventOutcome:
        if len(form) != 5 or not sexpr.is_symbol(form[3], "=>") or not sexpr.is_symbol(form[4], "*"):
            raise MalformedEvent("expected (defunvar fv (* ...) => *)")
        name = _symbol(form[1], "function variable name")
        stars = form[2]
        if not (isinstance(stars, sexpr.ListForm) and stars.tail is None and len(stars) >= 1
                and all(sexpr.is_symbol(s, "*") for s in stars.elements)):
            raise MalformedEvent(f"{name}: arity must be a list of 1 or more *s, got {_show(stars)}")
        added = self.registry.register_funvar(name, len(stars))
        return EventOutcome("defunvar", name, ADMITTED if added else REDUNDANT, (name,))

    # -- plain functions ------------------------------------------------------

    def ev_defun(self, form) -> EventOutcome:
        if len(form) < 4:
            raise MalformedEvent("expected (defun f (x ...) [doc] [decl ...] body)")
        return self._define_plain("defun", form[1], (), form[2], form.elements[3:])

    def ev_defun2(self, form) -> EventOutcome:
        if len(form) < 5:
            raise MalformedEvent("expected (defun2 sof (fv ...) (x ...) [doc] [decl ...] body)")
        fparams = _symbols(form[2], "function parameters")
        if not fparams:
            raise MalformedEvent("defun2 needs a non-empty list of function parameters")
        return self._define_plain("defun2", form[1], fparams, form[3], form.elements[4:])

    def _fparams_ok(self, name: str, fparams: tuple) -> None:
        for fv in fparams:
            if not self.registry.is_funvar(fv):
                raise MalformedEvent(f"{name}: {fv} is not a function variable")

    def _define_plain(self, event, name_form, fparams, params_form, rest) -> EventOutcome:
        name = _symbol(name_form, "function name")
        params = _symbols(params_form, "parameters")
        self._fparams_ok(name, fparams)
        body_form = rest[-1]
        middle = [f for f in rest[:-1] if not (isinstance(f, sexpr.Atom) and f.kind == sexpr.STRING)]
        guard, measure, ignored = _parse_declarations(middle)
        body = _term(body_form)
        guard = guard if guard is not None else TRUE
        view = self.registry.with_pending({name: (len(params), frozenset(fparams))})
        for t in (body, guard, measure):
            if t is not None:
                check_arities(t, view)
        _check_vars(name, (body, guard, measure), params)
        recursive = name in set(applied_functions(body))
        diagnostics = [f"ignored option {k}" for k in ignored]
        if measure is not None and not recursive:
            raise MalformedEvent(f"{name}: a measure is only allowed on recursive functions")
        if recursive and measure is None and not structural_recursion(name, params, body):
            diagnostics.append(f"warning: termination of {name} not established; relying on depth limit")
        for t in (guard, measure):
            if t is not None and name in set(applied_functions(t)):
                raise MalformedEvent(f"{name}: guard and measure may not call {name}")
        deps = funvars_of_term(body, view) | funvars_of_term(measure, view) | funvars_of_term(guard, view)
        _check_deps(deps, fparams)
        rec = SoFun(name, PLAIN, params, body, fparams, guard, measure, recursive=recursive)
        added = self.registry.register_function(rec)
        return EventOutcome(event, name, ADMITTED if added else REDUNDANT, (name,), tuple(diagnostics))

    # -- choice functions -----------------------------------------------------

    def ev_defchoose(self, form) -> EventOutcome:
        if len(form) < 5:
            raise MalformedEvent("expected (defchoose f bvs (x ...) body ...)")
        return self._define_choice("defchoose", form[1], form[2], (), form[3], form[4], form.elements[5:])

    def ev_defchoose2(self, form) -> EventOutcome:
        if len(form) < 6:
            raise MalformedEvent("expected (defchoose2 sof bvs (fv ...) (x ...) body ...)")
        fparams = _symbols(form[3], "function parameters")
        if not fparams:
            raise MalformedEvent("defchoose2 needs a non-empty list of function parameters")
        return self._define_choice("defchoose2", form[1], form[2], fparams, form[4], form[5], form.elements[6:])

    def _define_choice(self, event, name_form, bvs_form, fparams, params_form, body_form, opts) -> EventOutcome:
        name = _symbol(name_form, "function name")
        try:
            boundvars = parse_var_list(bvs_form)
        except MalformedTerm as exc:
            raise MalformedEvent(str(exc)) from None
        params = _symbols(params_form, "parameters")
        if not boundvars:
            raise MalformedEvent(f"{name}: needs at least one bound variable")
        clash = set(boundvars) & set(params)
        if clash:
            raise MalformedEvent(f"{name}: bound variables {sorted(clash)} collide with parameters")
        self._fparams_ok(name, fparams)
        options = _keyword_options(opts, event)
        body = _term(body_form)
        check_arities(body, self.registry)
        _check_vars(name, (body,), boundvars + params)
        _check_deps(funvars_of_term(body, self.registry), fparams)
        rec = SoFun(name, CHOICE, params, body, fparams, boundvars=boundvars)
        added = self.registry.register_function(rec)
        diagnostics = tuple(f"ignored option {k}" for k in options)
        return EventOutcome(event, name, ADMITTED if added else REDUNDANT, (name,), diagnostics)

    # -- quantifier functions -------------------------------------------------

    def ev_defun_sk(self, form) -> EventOutcome:
        if len(form) < 4:
            raise MalformedEvent("expected (defun-sk f (x ...) body ...)")
        return self._define_quantifier("defun-sk", form[1], (), form[2], form[3], form.elements[4:])

    def ev_defun_sk2(self, form) -> EventOutcome:
        if len(form) < 5:
            raise MalformedEvent("expected (defun-sk2 sof (fv ...) (x ...) body ...)")
        fparams = _symbols(form[2], "function parameters")
        if not fparams:
            raise MalformedEvent("defun-sk2 needs a non-empty list of function parameters")
        return self._define_quantifier("defun-sk2", form[1], fparams, form[3], form[4], form.elements[5:])

    def _define_quantifier(self, event, name_form, fparams, params_form, body_form, opts) -> EventOutcome:
        name = _symbol(name_form, "function name")
        params = _symbols(params_form, "parameters")
        self._fparams_ok(name, fparams)
        options = _keyword_options(opts, event)
        body = _term(body_form)
        if not isinstance(body, Quant):
            raise MalformedEvent(f"{name}: body must be a forall or exists form")
        clash = set(body.vars) & set(params)
        if clash:
            raise MalformedEvent(f"{name}: bound variables {sorted(clash)} collide with parameters")
        guard = TRUE
        diagnostics = []
        for key, value in options.items():
            if key == ":witness-dcls":
                if not isinstance(value, sexpr.ListForm):
                    raise MalformedEvent(f"{name}: :witness-dcls takes a list of declarations")
                g, _, ignored = _parse_declarations(value.elements)
                guard = g if g is not None else guard
                diagnostics.extend(f"ignored option {k}" for k in ignored)
            elif key == ":rewrite":
                if not (sexpr.is_symbol(value, ":direct") or sexpr.is_symbol(value, ":default")):
                    raise MalformedEvent(f"{name}: :rewrite must be :direct or :default")
            elif key in (":skolem-name", ":thm-name"):
                raise MalformedEvent(f"{name}: {key} is not supported; names are derived")
            else:
                diagnostics.append(f"ignored option {key}")
        for t in (body, guard):
            check_arities(t, self.registry)
            if name in set(applied_functions(t)):
                raise MalformedEvent(f"{name}: quantifier functions may not be recursive")
        _check_vars(name, (body, guard), params)
        _check_deps(funvars_of_term(body, self.registry) | funvars_of_term(guard, self.registry), fparams)
        rec = SoFun(name, QUANTIFIER, params, body, fparams, guard, boundvars=body.vars,
                    quantifier=body.kind, witness=witness_name(name), rule=rule_name(name, body.kind))
        added = self._register_quantifier(rec)
        return EventOutcome(event, name, ADMITTED if added else REDUNDANT,
                            (name, rec.witness, rec.rule), tuple(diagnostics))

    def _register_quantifier(self, rec: SoFun) -> bool:
        added = self.registry.register_function(rec)
        witness = SoFun(rec.witness, WITNESS, rec.params, None, rec.fparams,
                        boundvars=rec.boundvars, quantifier=rec.quantifier, owner=rec.name)
        self.registry.register_function(witness)
        (_, rule), = [c for c in constraints_of(rec, self.registry) if c[0] == "rewrite-rule"]
        self.registry.register_theorem(
            TheoremRec(rec.rule, rule, funvars_of_term(rule, self.registry), origin=("rule", rec.name)))
        return added

    # -- function instances ---------------------------------------------------

    def ev_defun_inst(self, form) -> EventOutcome:
        args = form.elements[1:]
        if len(args) < 2:
            raise MalformedEvent("expected (defun-inst f [(fv ...)] (sof (fv . f) ...))")
        name = _symbol(args[0], "function name")
        rest = list(args[1:])
        fparams: tuple = ()
        if len(rest) >= 2 and isinstance(rest[1], sexpr.ListForm):
            fparams = _symbols(rest.pop(0), "function parameters")
        app_form = rest.pop(0)
        if rest:
            raise MalformedEvent(f"{name}: keyed overrides are not supported ({_show(rest[0])})")
        if not (isinstance(app_form, sexpr.ListForm) and app_form.tail is None and app_form.head):
            raise MalformedEvent(f"{name}: expected (sof (fv . f) ...), got {_show(app_form)}")
        target_name = app_form.head
        if not self.registry.is_sofun(target_name):
            raise MalformedEvent(f"{name}: {target_name} is not a second-order function")
        target = self.registry.sofuns[target_name]
        sigma = _parse_sigma(app_form.elements[1:], self.registry)
        if not sigma:
            raise MalformedEvent(f"{name}: empty instantiation")
        stray = set(sigma) - set(target.fparams)
        if stray:
            raise MalformedEvent(f"{name}: {sorted(stray)} are not function parameters of {target_name}")
        self._fparams_ok(name, fparams)

        extra = {(target_name, sigma.canonical): name}

        def inst(t):
            return None if t is None else apply_instantiation(t, sigma, self.registry, extra)

        body, guard, measure = inst(target.body), inst(target.guard), inst(target.measure)

        view = self.registry.with_pending({name: (target.arity, frozenset(fparams))})
        if target.kind == PLAIN:
            slots = (body, measure, guard)
        elif target.kind == CHOICE:
            slots = (body,)
        else:
            slots = (body, guard)
        _check_deps(frozenset().union(*(funvars_of_term(t, view) for t in slots)), fparams)

        quantified = target.kind == QUANTIFIER
        rec = SoFun(name, target.kind, target.params, body, fparams, guard, measure,
                    boundvars=target.boundvars, quantifier=target.quantifier,
                    witness=witness_name(name) if quantified else None,
                    rule=rule_name(name, target.quantifier) if quantified else None,
                    recursive=target.recursive, instance_of=(target_name, sigma.canonical))
        if quantified:
            added = self._register_quantifier(rec)
            artifacts = (name, rec.witness, rec.rule)
        else:
            added = self.registry.register_function(rec)
            artifacts = (name,)
        self.registry.register_instance(target_name, sigma, name)
        return EventOutcome("defun-inst", name, ADMITTED if added else REDUNDANT, artifacts)

    # -- theorems -------------------------------------------------------------

    def universe(self, name: Optional[str]) -> Optional[Universe]:
        if name is None:
            return None
        try:
            return self.universes[name]
        except KeyError:
            raise MalformedEvent(f"unknown universe {name}") from None

    def _bounded(self, formula: Term) -> tuple:
        """Run the automatic check if enabled; returns (verdict, diagnostics)."""
        if not self.check_bounded:
            return None, ()
        universe = self.universe(self.universe_default)
        if universe is None:
            verdict = Verdict("unknown", reason="no default universe")
        else:
            verdict = check_bounded(formula, universe, self.registry, self.limits)
        if verdict.status == "fail":
            raise BoundedCheckFailed(verdict)
        return verdict, (f"bounded check: {verdict}",)

    def _theorem_options(self, opts, event: str) -> tuple:
        options = _keyword_options(opts, event)
        rule_classes = None
        diagnostics = []
        for key, value in options.items():
            if key == ":rule-classes":
                rule_classes = sexpr.write_form(value)
            elif key not in (":hints", ":instructions", ":otf-flg"):
                diagnostics.append(f"ignored option {key}")
        return rule_classes, diagnostics

    def ev_defthm(self, form) -> EventOutcome:
        if len(form) < 3:
            raise MalformedEvent("expected (defthm name formula ...)")
        name = _symbol(form[1], "theorem name")
        formula = _term(form[2])
        rule_classes, diagnostics = self._theorem_options(form.elements[3:], "defthm")
        check_arities(formula, self.registry)
        rec = TheoremRec(name, formula, funvars_of_term(formula, self.registry), rule_classes)
        if self.registry.theorems.get(name) == rec:
            return EventOutcome("defthm", name, REDUNDANT, (name,))
        verdict, notes = self._bounded(formula)
        self.registry.register_theorem(rec)
        return EventOutcome("defthm", name, ADMITTED, (name,), tuple(diagnostics) + notes, verdict=verdict)

    def ev_defthm_inst(self, form) -> EventOutcome:
        if len(form) < 3:
            raise MalformedEvent("expected (defthm-inst thm (sothm (fv . f) ...) ...)")
        name = _symbol(form[1], "theorem name")
        app_form = form[2]
        if not (isinstance(app_form, sexpr.ListForm) and app_form.tail is None and app_form.head):
            raise MalformedEvent(f"{name}: expected (sothm (fv . f) ...), got {_show(app_form)}")
        target = self.registry.theorems.get(app_form.head)
        if target is None:
            raise MalformedEvent(f"{name}: {app_form.head} is not a theorem")
        sigma = _parse_sigma(app_form.elements[1:], self.registry)
        stray = set(sigma) - set(target.funvars)
        if stray:
            raise MalformedEvent(f"{name}: {target.name} does not depend on {sorted(stray)}")
        rule_classes, diagnostics = self._theorem_options(form.elements[3:], "defthm-inst")
        formula = apply_instantiation(target.formula, sigma, self.registry)
        closure = compute_more_pairs(target, sigma, self.registry)
        obligations = tuple(discharge_obligations(closure, sigma, self.registry))
        failed = [o for o in obligations if not o.discharged]
        if failed:
            raise ObligationFailed(failed)
        rec = TheoremRec(name, formula, funvars_of_term(formula, self.registry), rule_classes,
                         origin=("instance", target.name, sigma.canonical))
        if self.registry.theorems.get(name) == rec:
            return EventOutcome("defthm-inst", name, REDUNDANT, (name,), closure=closure, obligations=obligations)
        verdict, notes = self._bounded(formula)
        self.registry.register_theorem(rec)
        return EventOutcome("defthm-inst", name, ADMITTED, (name,), tuple(diagnostics) + notes,
                            closure=closure, obligations=obligations, verdict=verdict)


def run_events(text: str, session: Optional[Session] = None) -> tuple:
    """Process every form of ``text`` as an event; returns (session, outcomes)."""
    session = session or Session()
    outcomes = [session.process(f) for f in sexpr.read_forms(text)]
    return session, outcomes
