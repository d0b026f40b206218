import pytest

from softk import sexpr
from softk.cli import ScriptRunner, corpus_path
from softk.events import Session, run_events
from softk.kernel import parse_term

PAPER = corpus_path("paper").read_text(encoding="utf-8")
CHECKS = corpus_path("checks").read_text(encoding="utf-8")

# Events shared by several test modules: the function variables and the
# plain/choice/quantifier definitions at the start of the corpus.
PRELUDE = """
(defunvar ?f (*) => *)
(defunvar ?p (*) => *)
(defunvar ?g (* *) => *)
(defun2 quad[?f] (?f) (x) (?f (?f (?f (?f x)))))
(defun2 all[?p] (?p) (l)
  (cond ((atom l) (null l))
        (t (and (?p (car l)) (all[?p] (cdr l))))))
(defun2 map[?f_?p] (?f ?p) (l)
  (declare (xargs :guard (all[?p] l)))
  (cond ((endp l) nil)
        (t (cons (?f (car l)) (map[?f_?p] (cdr l))))))
(defun2 fold[?f_?g] (?f ?g) (bt)
  (cond ((atom bt) (?f bt))
        (t (?g (fold[?f_?g] (car bt)) (fold[?f_?g] (cdr bt))))))
(defchoose2 fixpoint[?f] x (?f) () (equal (?f x) x))
(defun-sk2 injective[?f] (?f) ()
  (forall (x y) (implies (equal (?f x) (?f y)) (equal x y))))
(defun wrap (x) (list x))
(defun octetp (x) (and (natp x) (< x 256)))
"""


def replay(text, session=None):
    """Run events, failing the test on the first rejection."""
    session, outcomes = run_events(text, session)
    bad = [o for o in outcomes if not o.ok]
    assert not bad, "\n".join(f"{o.name}: {o.diagnostics}" for o in bad)
    return session, outcomes


def run_event(session, text):
    return session.process(sexpr.read_form(text))


@pytest.fixture
def prelude():
    session, _ = replay(PRELUDE)
    return session


@pytest.fixture
def session():
    return Session()


@pytest.fixture(scope="session")
def corpus_runner():
    """Runner after replaying the whole bundled corpus and its checks.
    Shared across the run; tests must not mutate it."""
    runner = ScriptRunner()
    report = runner.run_text(PAPER)
    assert report.exit_code == 0
    runner.run_text(CHECKS.split("(verify-implementation")[0])
    return runner


@pytest.fixture
def corpus():
    """A fresh session holding every corpus event; safe to mutate."""
    runner = ScriptRunner()
    report = runner.run_text(PAPER)
    assert report.exit_code == 0
    return runner


def term(text):
    return parse_term(text)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs a nested test session")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
