import pytest

from conftest import PAPER, PRELUDE, replay, run_event, term
from softk.errors import (
    BoundedCheckFailed, FunvarMismatch, MalformedEvent, MissingInstance, NameClash,
    ObligationFailed,
)
from softk.events import ADMITTED, REDUNDANT, REJECTED, Session, run_events, structural_recursion
from softk.evaluator import Universe
from softk.instantiate import apply_instantiation
from softk.kernel import show_term


def rejected_with(outcome, cls):
    assert outcome.status == REJECTED, outcome
    assert isinstance(outcome.error, cls), outcome.error
    return outcome.error


# -- defunvar ---------------------------------------------------------------

def test_defunvar_arities(session):
    assert run_event(session, "(defunvar ?p (*) => *)").status == ADMITTED
    assert run_event(session, "(defunvar ?g (* *) => *)").status == ADMITTED
    assert session.registry.arity_of("?p") == 1
    assert session.registry.arity_of("?g") == 2
    assert run_event(session, "(defunvar ?g (* *) => *)").status == REDUNDANT


@pytest.mark.parametrize("text", ["(defunvar ?z () => *)", "(defunvar ?z (x) => *)",
                                  "(defunvar ?z (*) -> *)", "(defunvar ?z (*))"])
def test_defunvar_malformed(session, text):
    rejected_with(run_event(session, text), MalformedEvent)


# -- defun2 -----------------------------------------------------------------

def test_quad_is_not_recursive(prelude):
    rec = prelude.registry.function("quad[?f]")
    assert not rec.recursive
    assert rec.fparams == ("?f",)


def test_guard_only_parameter(prelude):
    rec = prelude.registry.function("map[?f_?p]")
    assert rec.guard == term("(all[?p] l)")
    assert rec.recursive


def test_uncovered_fparam_is_rejected(prelude):
    err = rejected_with(run_event(prelude, "(defun2 bad (?f ?p) (x) (?f x))"), FunvarMismatch)
    assert err.missing == {"?p"} and not err.extra


def test_undeclared_dependency_is_rejected(prelude):
    err = rejected_with(run_event(prelude, "(defun2 bad (?f) (x) (?f (?p x)))"), FunvarMismatch)
    assert err.extra == {"?p"}


def test_first_order_defun_may_not_use_funvars(prelude):
    rejected_with(run_event(prelude, "(defun bad (x) (?f x))"), FunvarMismatch)


def test_measure_on_non_recursive_function_is_rejected(prelude):
    out = run_event(prelude, "(defun2 q (?f) (x) (declare (xargs :measure (len x))) (?f x))")
    rejected_with(out, MalformedEvent)


def test_measure_is_recorded(prelude):
    out = run_event(prelude, """(defun2 walk (?f) (x)
        (declare (xargs :measure (len x)))
        (if (consp x) (walk (cdr x)) (?f x)))""")
    assert out.status == ADMITTED
    assert prelude.registry.function("walk").measure == term("(len x)")


def test_non_structural_recursion_warns(session):
    out = run_event(session, "(defun loop (x) (if (natp x) (loop (+ x 1)) x))")
    assert out.status == ADMITTED
    assert any("termination" in d for d in out.diagnostics)


def test_structural_recursion_check():
    body = term("(cond ((atom bt) bt) (t (cons (walk (car bt)) (walk (cdr bt)))))")
    assert structural_recursion("walk", ("bt",), body)
    assert not structural_recursion("walk", ("bt",), term("(walk bt)"))


def test_doc_strings_are_discarded(session):
    out = run_event(session, '(defun id (x) "identity" x)')
    assert out.status == ADMITTED
    assert session.registry.function("id").body == term("x")


def test_unbound_body_variable(session):
    rejected_with(run_event(session, "(defun bad (x) y)"), MalformedEvent)


# -- defchoose2 ---------------------------------------------------------------

def test_fixpoint_admitted(prelude):
    rec = prelude.registry.function("fixpoint[?f]")
    assert rec.kind == "choice" and rec.boundvars == ("x",)


def test_choice_with_extra_fparam(prelude):
    err = rejected_with(run_event(prelude, "(defchoose2 fp2 x (?f ?g) () (equal (?f x) x))"),
                        FunvarMismatch)
    assert err.missing == {"?g"}


def test_choice_boundvar_collision(prelude):
    rejected_with(run_event(prelude, "(defchoose2 fp3 x (?f) (x) (equal (?f x) x))"), MalformedEvent)


# -- defun-sk2 ----------------------------------------------------------------

def test_injective_rule_name(prelude):
    rec = prelude.registry.function("injective[?f]")
    assert rec.rule == "injective[?f]-necc"
    assert rec.witness == "injective[?f]-witness"
    assert prelude.registry.function(rec.witness).owner == "injective[?f]"


def test_three_bound_variables(prelude):
    replay("""(defunvar ?io (* *) => *)
        (defun-sk2 consp-io[?g_?io] (?g ?io) ()
          (forall (x y1 y2)
            (implies (and (consp x) (?io (car x) y1) (?io (cdr x) y2)) (?io x (?g y1 y2))))
          :rewrite :direct)""", prelude)
    witness = prelude.registry.function("consp-io[?g_?io]-witness")
    assert witness.boundvars == ("x", "y1", "y2")
    assert witness.arity == 0


def test_exists_uses_suff(prelude):
    out = run_event(prelude, "(defun-sk2 has-fixpoint[?f] (?f) () (exists x (equal (?f x) x)))")
    assert out.status == ADMITTED
    assert "has-fixpoint[?f]-suff" in prelude.registry.theorems


def test_quantifier_body_required(prelude):
    rejected_with(run_event(prelude, "(defun-sk2 q (?f) (x) (?f x))"), MalformedEvent)


def test_unsupported_name_overrides(prelude):
    out = run_event(prelude, "(defun-sk2 q (?f) () (forall x (?f x)) :skolem-name w)")
    rejected_with(out, MalformedEvent)


# -- defun-inst ---------------------------------------------------------------

def test_quad_wrap_body(prelude):
    out = run_event(prelude, "(defun-inst quad[wrap] (quad[?f] (?f . wrap)))")
    assert out.status == ADMITTED
    assert show_term(prelude.registry.function("quad[wrap]").body) == "(wrap (wrap (wrap (wrap x))))"


def test_second_order_quantifier_instance(prelude):
    out = run_event(prelude, "(defun-inst injective[quad[?f]] (?f) (injective[?f] (?f . quad[?f])))")
    assert out.status == ADMITTED
    rec = prelude.registry.function("injective[quad[?f]]")
    assert rec.kind == "quantifier" and rec.fparams == ("?f",)
    assert prelude.registry.is_sofun("injective[quad[?f]]")
    assert "injective[quad[?f]]-necc" in prelude.registry.theorems


def test_map_instance_needs_all_instance_first(prelude):
    out = run_event(prelude, "(defun-inst map[code-char] (map[?f_?p] (?f . code-char) (?p . octetp)))")
    err = rejected_with(out, MissingInstance)
    assert err.sofun == "all[?p]"
    replay("(defun-inst all[octetp] (all[?p] (?p . octetp)))", prelude)
    out = run_event(prelude, "(defun-inst map[code-char] (map[?f_?p] (?f . code-char) (?p . octetp)))")
    assert out.status == ADMITTED
    rec = prelude.registry.function("map[code-char]")
    assert rec.guard == term("(all[octetp] l)")
    assert rec.body == term("(cond ((endp l) nil) (t (cons (code-char (car l)) (map[code-char] (cdr l)))))")


def test_instance_needs_declared_fparams(prelude):
    out = run_event(prelude, "(defun-inst injective[quad[?f]] (injective[?f] (?f . quad[?f])))")
    rejected_with(out, FunvarMismatch)


def test_instance_rejects_overrides(prelude):
    out = run_event(prelude, "(defun-inst quad[wrap] (quad[?f] (?f . wrap)) :guard (natp x))")
    rejected_with(out, MalformedEvent)


def test_instance_rejects_stray_keys(prelude):
    rejected_with(run_event(prelude, "(defun-inst q (quad[?f] (?f . wrap) (?p . octetp)))"), MalformedEvent)


def test_instance_arity_mismatch(prelude):
    out = run_event(prelude, "(defun-inst fold[bad] (fold[?f_?g] (?f . nfix) (?g . nfix)))")
    assert out.status == REJECTED


def test_duplicate_instance_name_rejected(prelude):
    replay("(defun-inst quad[wrap] (quad[?f] (?f . wrap)))", prelude)
    rejected_with(run_event(prelude, "(defun-inst other (quad[?f] (?f . wrap)))"), NameClash)


def test_instance_replay_is_redundant(prelude):
    replay("(defun-inst quad[wrap] (quad[?f] (?f . wrap)))", prelude)
    assert run_event(prelude, "(defun-inst quad[wrap] (quad[?f] (?f . wrap)))").status == REDUNDANT


# -- defthm / defthm-inst -----------------------------------------------------

def test_defthm_records_funvars(corpus):
    reg = corpus.registry
    assert reg.theorem("len-of-map[?f_?p]").funvars == {"?f", "?p"}
    assert reg.theorem("step1").funvars == {"?h", "?f", "?g"}


def test_defthm_bounded_falsehood():
    session = Session(check_bounded=True, universe_default="u")
    session.universes["u"] = Universe("u", (0, 1))
    out = run_event(session, "(defthm bogus (equal 0 1))")
    err = rejected_with(out, BoundedCheckFailed)
    assert err.verdict.status == "fail"
    assert "bogus" not in session.registry.theorems


def test_defthm_bounded_unknown_is_admitted():
    session = Session(check_bounded=True, universe_default="u")
    session.universes["u"] = Universe("u", (0, 1))
    replay("(defunvar ?f (*) => *)", session)
    out = run_event(session, "(defthm refl (equal (?f x) (?f x)))")
    assert out.status == ADMITTED and out.verdict.status == "unknown"


def test_defthm_inst_len_of_map(corpus):
    assert corpus.registry.theorem("len-of-map[code-char]").formula == term(
        "(equal (len (map[code-char] l)) (len l))")


def test_defthm_inst_injective(corpus):
    rec = corpus.registry.theorem("injective[quad[wrap]]-when-injective[wrap]")
    assert rec.formula == term("(implies (injective[wrap]) (injective[quad[wrap]]))")
    assert rec.funvars == frozenset()


def test_defthm_inst_without_prerequisites():
    text = PAPER.split("(defun-inst injective[quad[wrap]]")[0]
    session, _ = replay(text)
    out = run_event(session, """(defthm-inst injective[quad[wrap]]-when-injective[wrap]
        (injective[quad[?f]]-when-injective[?f] (?f . wrap)))""")
    err = rejected_with(out, MissingInstance)
    assert err.sofun == "injective[?f]"
    assert tuple(err.sigma) == (("?f", "wrap"),)


def test_defthm_inst_with_tampered_instance(prelude):
    reg = prelude.registry
    replay("""(defun-inst all[octetp] (all[?p] (?p . octetp)))
        (defun map[code-char] (l)
          (declare (xargs :guard (all[octetp] l)))
          (cond ((endp l) nil) (t (cons (code-char (car l)) (cdr l)))))
        (defthm len-of-map[?f_?p] (equal (len (map[?f_?p] l)) (len l)))""", prelude)
    reg.register_instance("map[?f_?p]", {"?f": "code-char", "?p": "octetp"}, "map[code-char]")
    out = run_event(prelude, "(defthm-inst len-of-map[code-char] (len-of-map[?f_?p] (?f . code-char) (?p . octetp)))")
    err = rejected_with(out, ObligationFailed)
    assert [o.replaced for o in err.obligations] == ["map[?f_?p]"]


def test_defthm_inst_stray_key(corpus):
    out = run_event(corpus.session, "(defthm-inst x (len-of-map[?f_?p] (?g . binary-+)))")
    rejected_with(out, MalformedEvent)


def test_hints_are_accepted(corpus):
    assert "natp-of-member-of-output" in corpus.registry.theorems


# -- session-wide properties ----------------------------------------------------

def test_rejection_leaves_tables_identical(prelude):
    before = prelude.registry.snapshot()
    for text in ("(defun2 bad (?f ?p) (x) (?f x))",
                 "(defun-inst q (quad[?f] (?f . nonexistent)))",
                 "(defun-sk2 injective[?f] (?f) () (forall x (?f x)))",
                 "(defthm t1 (equal (unknown x) x))"):
        assert run_event(prelude, text).status == REJECTED
        assert prelude.registry.snapshot() == before


def test_replay_is_deterministic():
    s1, o1 = run_events(PAPER)
    s2, o2 = run_events(PAPER)
    assert s1.registry.dump_lines() == s2.registry.dump_lines()
    assert [(o.name, o.status, o.diagnostics) for o in o1] == [(o.name, o.status, o.diagnostics) for o in o2]


def test_every_instance_is_reproduced(corpus):
    reg = corpus.registry
    for (target, sigma), name in reg.instances.items():
        src, inst = reg.function(target), reg.function(name)
        extra = {(target, sigma): name}
        for a, b in ((src.body, inst.body), (src.guard, inst.guard), (src.measure, inst.measure)):
            again = None if a is None else apply_instantiation(a, dict(sigma), reg, extra)
            assert again == b, name


def test_every_corpus_obligation_discharges():
    _, outcomes = run_events(PAPER)
    obligations = [ob for o in outcomes for ob in o.obligations]
    assert obligations and all(ob.discharged for ob in obligations)


def test_unknown_event(session):
    rejected_with(run_event(session, "(defmacro m (x) x)"), MalformedEvent)


def test_prelude_is_replayable():
    session, _ = replay(PRELUDE)
    _, outcomes = run_events(PRELUDE, session)
    assert {o.status for o in outcomes} == {REDUNDANT}

