"""Batch driver: ``softk run <script>`` and ``softk eval <expr> --load <script>``.

Besides events, scripts may contain these directives::

    (universe <name> <value>... [:atoms (v ...)] [:trees (atom ...) :depth n]
                                 [:lists (elem ...) :max-length n])
    (check-bounded <formula-or-theorem-name> [:universe <name>])
    (chain <name> :specs (spec0 ... specm) :steps (step1 ... stepm)
                  [:implementation ((fv . f) ...)] [:theorem <name>])
    (verify-implementation <chain> [:universe <name>])
    (eval <term>)
"""

from __future__ import annotations

import argparse
import itertools
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from . import sexpr
from .errors import MalformedEvent, ParseError, SoftError, UsageError
from .evaluator import Limits, Universe, Verdict, check_bounded, eval_term
from .events import ADMITTED, REDUNDANT, REJECTED, EventOutcome, Session, _keyword_options, _parse_sigma, _symbol, _symbols, _term
from .kernel import check_arities, show_term
from .refine import RefinementChain, check_steps, compose_chain, verify_implementation
from .values import Cons, NIL, form_to_value, from_list, show_value

PASS = "pass"
FAIL = "fail"
UNKNOWN = "unknown"
OK = "ok"


BUNDLED = ("paper", "checks")


def corpus_path(name: str = "paper") -> Path:
    """Path of a bundled script: ``paper`` replays the example events,
    ``checks`` holds the bounded-validation directives that follow them."""
    return Path(str(resources.files("softk") / "corpus" / f"{name}.soft"))


# ---------------------------------------------------------------------------
# universes


def trees(atoms, depth: int) -> list:
    """All binary trees over ``atoms`` with cons-depth at most ``depth``,
    shallowest first."""
    levels = [list(atoms)]
    out = list(atoms)
    seen = set(out)
    for _ in range(depth):
        layer = []
        for a, b in itertools.product(out, repeat=2):
            t = Cons(a, b)
            if t not in seen:
                seen.add(t)
                layer.append(t)
        levels.append(layer)
        out = out + layer
    return out


def lists(elements, max_length: int) -> list:
    out = []
    for n in range(max_length + 1):
        for combo in itertools.product(elements, repeat=n):
            out.append(from_list(combo))
    return out


def parse_universe(form) -> Universe:
    if len(form) < 2:
        raise MalformedEvent("expected (universe name value ...)")
    name = _symbol(form[1], "universe name")
    body = list(form.elements[2:])
    values = []
    while body and not sexpr.is_keyword(body[0]):
        values.append(form_to_value(body.pop(0)))
    opts = _keyword_options(body, "universe")
    atoms = None

    def data(key):
        f = opts[key]
        if not isinstance(f, sexpr.ListForm):
            raise MalformedEvent(f"universe {name}: {key} takes a list")
        return [form_to_value(e) for e in f.elements]

    def count(key):
        f = opts.get(key)
        if not (isinstance(f, sexpr.Atom) and f.kind == sexpr.NUMBER and int(f.text) >= 0):
            raise MalformedEvent(f"universe {name}: {key} takes a natural number")
        return int(f.text)

    unknown = set(opts) - {":atoms", ":trees", ":depth", ":lists", ":max-length"}
    if unknown:
        raise MalformedEvent(f"universe {name}: unknown options {sorted(unknown)}")
    if ":trees" in opts:
        base = data(":trees")
        values.extend(trees(base, count(":depth")))
        atoms = tuple(dict.fromkeys(base))
    if ":lists" in opts:
        values.extend(lists(data(":lists"), count(":max-length")))
    if ":atoms" in opts:
        atoms = tuple(dict.fromkeys(data(":atoms")))
    try:
        return Universe(name, tuple(dict.fromkeys(values)), atoms)
    except ValueError as exc:
        raise MalformedEvent(str(exc)) from None


# ---------------------------------------------------------------------------
# runner


@dataclass
class RunReport:
    outcomes: list = field(default_factory=list)
    elapsed: float = 0.0
    stopped_early: bool = False

    @property
    def exit_code(self) -> int:
        return 1 if any(not outcome_ok(o) for o in self.outcomes) else 0

    def admitted(self) -> int:
        return sum(o.status == ADMITTED for o in self.outcomes)

    def summary_lines(self) -> list:
        return [line for o in self.outcomes for line in summary_records(o)]


def outcome_ok(o: EventOutcome) -> bool:
    return o.status in (ADMITTED, REDUNDANT, PASS, OK)


def _escape(text: str) -> str:
    return " ".join(text.split())


def summary_records(o: EventOutcome) -> list:
    detail = [o.event]
    detail.extend(o.diagnostics)
    if o.verdict is not None:
        detail.append(str(o.verdict))
    lines = [f"event={o.name} status={o.status} detail={_escape('; '.join(detail))}"]
    for ob in o.obligations:
        result = "DISCHARGED" if ob.discharged else "FAILED"
        lines.append(f"event={o.name} status=obligation detail={ob.replaced} -> {ob.replacement} {ob.kind} {result}")
    return lines


def format_outcome(o: EventOutcome) -> str:
    lines = [f"[{o.status}] {o.event} {o.name}"]
    if o.closure is not None:
        for replaced, replacement in o.closure.pairs:
            lines.append(f"    pair {replaced} -> {replacement}")
    for ob in o.obligations:
        lines.append(f"      {ob.replaced} {ob.kind} {'DISCHARGED' if ob.discharged else 'FAILED'}")
    error_obligations = getattr(o.error, "obligations", ())
    for ob in error_obligations:
        lines.append(f"      {ob.replaced} {ob.kind} FAILED")
        lines.append(f"        expected {show_term(ob.expected)}")
        lines.append(f"        actual   {show_term(ob.actual) if ob.actual is not None else '(none)'}")
    for d in o.diagnostics:
        lines.append(f"    {d}")
    if o.verdict is not None and not o.diagnostics:
        lines.append(f"    {o.verdict}")
    return "\n".join(lines)


class ScriptRunner:
    """Runs events through a :class:`Session` and handles directives."""

    def __init__(self, session: Optional[Session] = None, keep_going: bool = False, echo=None):
        self.session = session or Session()
        self.keep_going = keep_going
        self.chains: dict = {}
        self.echo = echo
        self._directives = {
            "universe": self.do_universe,
            "check-bounded": self.do_check_bounded,
            "chain": self.do_chain,
            "verify-implementation": self.do_verify,
            "eval": self.do_eval,
        }

    @property
    def registry(self):
        return self.session.registry

    def run_text(self, text: str, report: Optional[RunReport] = None) -> RunReport:
        report = report or RunReport()
        start = time.perf_counter()
        for form in sexpr.read_forms(text):
            outcome = self.process(form)
            report.outcomes.append(outcome)
            if self.echo:
                self.echo(format_outcome(outcome))
            if not outcome_ok(outcome) and not self.keep_going:
                report.stopped_early = True
                break
        report.elapsed += time.perf_counter() - start
        return report

    def process(self, form) -> EventOutcome:
        head = form.head if isinstance(form, sexpr.ListForm) else None
        handler = self._directives.get(head)
        if handler is None:
            return self.session.process(form)
        try:
            return handler(form)
        except SoftError as exc:
            name = form[1].text if len(form) > 1 and sexpr.is_symbol(form[1]) else head
            return EventOutcome(head, name, REJECTED, diagnostics=(f"{type(exc).__name__}: {exc}",), error=exc)

    def _universe_opt(self, opts) -> Universe:
        form = opts.get(":universe")
        name = _symbol(form, "universe name") if form is not None else self.session.universe_default
        if name is None:
            raise MalformedEvent("no universe given and no default universe")
        return self.session.universe(name)

    def _verdict_outcome(self, event: str, name: str, verdict: Verdict, extra=()) -> EventOutcome:
        status = {"pass": PASS, "fail": FAIL}.get(verdict.status, UNKNOWN)
        return EventOutcome(event, name, status, diagnostics=tuple(extra), verdict=verdict)

    def do_universe(self, form) -> EventOutcome:
        universe = parse_universe(form)
        existing = self.session.universes.get(universe.name)
        if existing is not None and existing != universe:
            raise MalformedEvent(f"universe {universe.name} already declared differently")
        self.session.universes[universe.name] = universe
        return EventOutcome("universe", universe.name, ADMITTED if existing is None else REDUNDANT,
                            diagnostics=(f"{len(universe.values)} values",))

    def do_check_bounded(self, form) -> EventOutcome:
        if len(form) < 2:
            raise MalformedEvent("expected (check-bounded formula-or-theorem [:universe name])")
        target = form[1]
        opts = _keyword_options(form.elements[2:], "check-bounded")
        if sexpr.is_symbol(target):
            name = target.text
            formula = self.registry.theorem(name).formula
        else:
            formula = _term(target)
            check_arities(formula, self.registry)
            name = show_term(formula)
        universe = self._universe_opt(opts)
        verdict = check_bounded(formula, universe, self.registry, self.session.limits)
        return self._verdict_outcome("check-bounded", name, verdict, (f"universe {universe.name}",))

    def do_chain(self, form) -> EventOutcome:
        name = _symbol(form[1], "chain name") if len(form) > 1 else None
        opts = _keyword_options(form.elements[2:], "chain")
        unknown = set(opts) - {":specs", ":steps", ":implementation", ":theorem"}
        if name is None or ":specs" not in opts or unknown:
            raise MalformedEvent("expected (chain name :specs (...) :steps (...) [:implementation (...)] [:theorem name])")
        impl_form = opts.get(":implementation")
        pairs = impl_form.elements if isinstance(impl_form, sexpr.ListForm) else ()
        theorem = _symbol(opts[":theorem"], "theorem name") if ":theorem" in opts else None
        chain = RefinementChain(
            name,
            _symbols(opts[":specs"], "specifications"),
            _symbols(opts[":steps"], "step theorems") if ":steps" in opts else (),
            _parse_sigma(pairs, self.registry),
            theorem,
        )
        with self.registry.transaction():
            rec = compose_chain(chain, self.registry)
        self.chains[name] = chain
        return EventOutcome("chain", name, ADMITTED, (rec.name,),
                            (f"{rec.name}: {show_term(rec.formula)}",))

    def do_verify(self, form) -> EventOutcome:
        name = _symbol(form[1], "chain name") if len(form) > 1 else None
        if name not in self.chains:
            raise MalformedEvent(f"unknown chain {name}")
        chain = self.chains[name]
        universe = self._universe_opt(_keyword_options(form.elements[2:], "verify-implementation"))
        limits = self.session.limits
        verdict = verify_implementation(chain, universe, self.registry, limits)
        notes = [f"universe {universe.name}"]
        if chain.implementation:
            notes.extend(f"{step}: {v}" for step, v in check_steps(chain, universe, self.registry, limits))
        return self._verdict_outcome("verify-implementation", name, verdict, notes)

    def do_eval(self, form) -> EventOutcome:
        if len(form) != 2:
            raise MalformedEvent("expected (eval term)")
        term = _term(form[1])
        check_arities(term, self.registry)
        value = eval_term(term, {}, self.registry, self.session.limits)
        return EventOutcome("eval", show_term(term), OK, diagnostics=(show_value(value),))


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softk", description="Second-order function kernel.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--check-bounded", action="store_true",
                       help="bounded-check every defthm/defthm-inst")
        p.add_argument("--universe-default", metavar="NAME")
        p.add_argument("--depth-limit", type=int, default=Limits.depth, metavar="N")
        p.add_argument("--enum-budget", type=int, default=Limits.budget, metavar="N")
        p.add_argument("--check-guards", action="store_true", help="evaluate guards at run time")
        p.add_argument("--keep-going", action="store_true")
        p.add_argument("--dump-registry", metavar="PATH")
        p.add_argument("--summary", metavar="PATH")
        p.add_argument("-q", "--quiet", action="store_true")

    run = sub.add_parser("run", help="process an event script")
    run.add_argument("scripts", nargs="+", metavar="SCRIPT",
                     help="script paths run in order; 'paper' and 'checks' name the bundled scripts")
    common(run)

    ev = sub.add_parser("eval", help="evaluate a term after loading a script")
    ev.add_argument("expr")
    ev.add_argument("--load", metavar="SCRIPT", action="append", default=[])
    common(ev)
    return parser


def _read_script(path: str) -> str:
    if path in BUNDLED:
        return corpus_path(path).read_text(encoding="utf-8")
    return Path(path).read_text(encoding="utf-8")


def _write_outputs(args, runner: ScriptRunner, report: RunReport) -> None:
    if args.summary:
        Path(args.summary).write_text("\n".join(report.summary_lines()) + "\n", encoding="utf-8")
    if args.dump_registry:
        Path(args.dump_registry).write_text("\n".join(runner.registry.dump_lines()) + "\n", encoding="utf-8")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    limits = Limits(depth=args.depth_limit, budget=args.enum_budget, check_guards=args.check_guards)
    session = Session(check_bounded=args.check_bounded, universe_default=args.universe_default, limits=limits)
    echo = None if args.quiet or args.command == "eval" else print
    runner = ScriptRunner(session, keep_going=args.keep_going, echo=echo)
    scripts = args.scripts if args.command == "run" else args.load
    report = RunReport()
    try:
        for path in scripts:
            runner.run_text(_read_script(path), report)
            if report.stopped_early:
                break
    except OSError as exc:
        print(f"softk: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"softk: syntax error at {exc}", file=sys.stderr)
        return 2

    if args.command == "eval" and report.stopped_early:
        print(format_outcome(report.outcomes[-1]), file=sys.stderr)
    elif args.command == "eval":
        try:
            form = sexpr.read_form(args.expr)
        except ParseError as exc:
            print(f"softk: syntax error at {exc}", file=sys.stderr)
            return 2
        outcome = runner.process(sexpr.ListForm((sexpr.sym("eval"), form)))
        report.outcomes.append(outcome)
        if outcome.status == OK:
            print(outcome.diagnostics[0])
        else:
            print(format_outcome(outcome), file=sys.stderr)

    _write_outputs(args, runner, report)
    code = report.exit_code
    if args.command == "run" and not args.quiet:
        print(f"{report.admitted()} admitted, {len(report.outcomes)} forms, "
              f"exit {code}, {report.elapsed:.2f}s")
    return code


if __name__ == "__main__":
    sys.exit(main())
