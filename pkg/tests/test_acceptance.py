"""Acceptance gate: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import re
import subprocess
import sys
import time
from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

from conftest import PAPER  # noqa: E402
from softk import sexpr  # noqa: E402
from softk.cli import ScriptRunner, corpus_path  # noqa: E402
from softk.errors import FunvarMismatch, MissingInstance, ObligationFailed  # noqa: E402
from softk.events import ADMITTED, Session, run_events  # noqa: E402
from softk.evaluator import Universe, check_bounded  # noqa: E402
from softk.instantiate import Instantiation, compute_more_pairs, discharge_obligations  # noqa: E402
from softk.kernel import App, Cond, Op, Quant, show_term  # noqa: E402
from softk.refine import RefinementChain, verify_implementation  # noqa: E402
from softk.values import Cons, parse_value  # noqa: E402

# Tolerances
REPLAY_SECONDS = 5.0
CHECK_SECONDS = 10.0
MIN_ADMITTED = 40
MIN_EXAMPLES = 1000

RESULTS: dict = {}

# Every concrete event of the worked examples, in order (frozen).
EXPECTED_EVENTS = [
    ("defunvar", "?f"), ("defunvar", "?p"), ("defunvar", "?g"),
    ("defun2", "quad[?f]"), ("defun2", "all[?p]"), ("defun2", "map[?f_?p]"), ("defun2", "fold[?f_?g]"),
    ("defchoose2", "fixpoint[?f]"), ("defun-sk2", "injective[?f]"),
    ("defun", "wrap"), ("defun-inst", "quad[wrap]"), ("defun", "octetp"), ("defun-inst", "all[octetp]"),
    ("defun-inst", "map[code-char]"), ("defun-inst", "fold[nfix_plus]"), ("defun", "twice"),
    ("defun-inst", "fixpoint[twice]"), ("defun-inst", "injective[quad[?f]]"),
    ("defthm", "len-of-map[?f_?p]"), ("defthm", "injective[quad[?f]]-when-injective[?f]"),
    ("defunvar", "?io"), ("defun-sk2", "atom-io[?f_?io]"), ("defun-sk2", "consp-io[?g_?io]"),
    ("defthm", "fold-io[?f_?g_?io]"), ("defthm-inst", "len-of-map[code-char]"),
    ("defun-inst", "injective[quad[wrap]]"), ("defun-inst", "injective[wrap]"),
    ("defthm-inst", "injective[quad[wrap]]-when-injective[wrap]"),
    ("defun", "leaf"), ("defunvar", "?h"), ("defun-sk", "io"), ("defun-sk2", "spec[?h]"),
    ("defthm", "natp-of-member-of-output"), ("defun-sk2", "def-?h-fold[?f_?g]"),
    ("defun2", "spec1[?h_?f_?g]"), ("defthm", "step1"), ("defun-inst", "atom-io[?f]"),
    ("defun-inst", "consp-io[?g]"), ("defthm-inst", "fold-io[?f_?g]"), ("defun2", "spec2[?h_?f_?g]"),
    ("defthm", "step2"), ("defun", "f"), ("defun-inst", "atom-io[f]"), ("defthm", "atom-io[f]!"),
    ("defun-sk2", "def-?f"), ("defun2", "spec3[?h_?f_?g]"), ("defthm", "step3-lemma"), ("defthm", "step3"),
    ("defun", "g"), ("defun-inst", "consp-io[g]"), ("defthm", "member-of-append"),
    ("defthm", "consp-io[g]-lemma"), ("defthm", "consp-io[g]!"), ("defun-sk2", "def-?g"),
    ("defun2", "spec4[?h_?f_?g]"), ("defthm", "step4-lemma"), ("defthm", "step4"), ("defun-inst", "h"),
    ("defun-sk2", "def-?h"), ("defun2", "spec5[?h_?f_?g]"), ("defthm", "step5-lemma"), ("defthm", "step5"),
    ("defthm", "chain[?h_?f_?g]"), ("defun-inst", "def-h"), ("defun-inst", "def-f"), ("defun-inst", "def-g"),
    ("defun-inst", "spec5[h_f_g]"), ("defun-inst", "spec[h]"), ("defthm-inst", "chain[h_f_g]"),
    ("defthm", "spec5[h_f_g]!"), ("defthm", "spec[h]!"),
]

SPECS = ("spec[?h]", "spec1[?h_?f_?g]", "spec2[?h_?f_?g]", "spec3[?h_?f_?g]",
         "spec4[?h_?f_?g]", "spec5[?h_?f_?g]")
STEPS = ("step1", "step2", "step3", "step4", "step5")
IMPL = Instantiation({"?h": "h", "?f": "f", "?g": "g"})


def record(n: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)


def cli(*args, cwd=None):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "softk.cli", *args], capture_output=True, text=True, cwd=cwd)
    return proc, time.perf_counter() - start


# ---------------------------------------------------------------------------

def criterion_1():
    proc, seconds = cli("run", "paper")
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else ""
    admitted = int(last.split()[0]) if last[:1].isdigit() else 0
    _, outcomes = run_events(PAPER)
    got = [(o.event, o.name) for o in outcomes if o.status == ADMITTED]
    missing = [e for e in EXPECTED_EVENTS if e not in got]
    funvars = sum(1 for e, _ in got if e == "defunvar")
    ok = (proc.returncode == 0 and admitted >= MIN_ADMITTED and not missing
          and funvars >= 4 and seconds < REPLAY_SECONDS)
    return ok, (f"exit={proc.returncode} admitted={admitted} missing={len(missing)} "
                f"defunvar={funvars} time={seconds:.2f}s (<{REPLAY_SECONDS}s)")


def _reapply(term, sigma: dict, registry, self_key, self_name):
    """Independent re-statement of instantiation used as the oracle."""
    keys = set(sigma)

    def walk(t):
        if isinstance(t, App):
            args = tuple(walk(a) for a in t.args)
            if t.fn in sigma:
                return App(sigma[t.fn], args)
            rec = registry.functions.get(t.fn)
            if rec is not None and keys & set(rec.fparams):
                owner = rec.owner if rec.kind == "witness" else t.fn
                restricted = tuple(sorted((k, v) for k, v in sigma.items() if k in set(registry.function(owner).fparams)))
                key = (owner, restricted)
                inst = self_name if key == self_key else registry.instances[key]
                return App(inst + "-witness" if rec.kind == "witness" else inst, args)
            return App(t.fn, args)
        if isinstance(t, Op):
            return Op(t.op, tuple(walk(a) for a in t.args))
        if isinstance(t, Cond):
            return Cond(tuple((walk(a), None if b is None else walk(b)) for a, b in t.clauses))
        if isinstance(t, Quant):
            return Quant(t.kind, t.vars, walk(t.body))
        return t

    return None if term is None else walk(term)


def criterion_2():
    session, outcomes = run_events(PAPER)
    reg = session.registry
    names = [o.name for o in outcomes if o.event == "defun-inst"]
    mismatches = []
    for name in names:
        inst = reg.function(name)
        target, sigma = inst.instance_of
        src = reg.function(target)
        for slot in ("body", "guard", "measure"):
            a = _reapply(getattr(src, slot), dict(sigma), reg, (target, sigma), name)
            b = getattr(inst, slot)
            if (a is None) != (b is None) or (a is not None and show_term(a) != show_term(b)):
                mismatches.append(f"{name}.{slot}")
    ok = len(names) == 18 and not mismatches
    return ok, f"{len(names)} defun-inst events, {len(mismatches)} mismatches {mismatches[:3]}"


def criterion_3():
    session, outcomes = run_events(PAPER)
    reg = session.registry
    expected = {
        "fold-io[?f_?g]": (
            {("?io", "io"), ("atom-io[?f_?io]", "atom-io[?f]"), ("consp-io[?g_?io]", "consp-io[?g]")},
            {("atom-io[?f_?io]-witness", "atom-io[?f]-witness"),
             ("consp-io[?g_?io]-witness", "consp-io[?g]-witness")}),
        "len-of-map[code-char]": (
            {("?f", "code-char"), ("?p", "octetp"), ("map[?f_?p]", "map[code-char]")},
            set()),
    }
    problems = []
    for o in outcomes:
        if o.event != "defthm-inst" or o.name not in expected:
            continue
        pairs, witnesses = expected[o.name]
        got = set(o.closure.funvar_pairs) | set(o.closure.sofun_pairs)
        if got != pairs or set(o.closure.witness_pairs) != witnesses:
            problems.append(o.name)
    obligations = [ob for o in outcomes for ob in o.obligations]
    discharged = sum(ob.discharged for ob in obligations)
    ok = not problems and obligations and discharged == len(obligations)
    return bool(ok), (f"closures checked={len(expected)} mismatched={problems} "
                      f"obligations discharged={discharged}/{len(obligations)}")


def criterion_4():
    notes = []
    session, _ = run_events(PAPER.split("(defun wrap")[0])
    a = session.process(sexpr.read_form("(defun2 bad (?f ?p) (x) (?f x))"))
    ok_a = isinstance(a.error, FunvarMismatch) and a.error.missing == {"?p"}
    notes.append(f"(a) {type(a.error).__name__}")

    session, _ = run_events(PAPER.split("(defun-inst injective[quad[wrap]]")[0])
    b = session.process(sexpr.read_form(
        "(defthm-inst injective[quad[wrap]]-when-injective[wrap]"
        " (injective[quad[?f]]-when-injective[?f] (?f . wrap)))"))
    ok_b = (isinstance(b.error, MissingInstance) and b.error.sofun == "injective[?f]"
            and tuple(b.error.sigma) == (("?f", "wrap"),)
            and "(defun-inst <name> (injective[?f] (?f . wrap)))" in str(b.error))
    notes.append(f"(b) {b.error}")

    tampered = PAPER.replace(
        "(defun-inst map[code-char]\n  (map[?f_?p] (?f . code-char) (?p . octetp)))",
        "(defun map[code-char] (l)\n  (declare (xargs :guard (all[octetp] l)))\n"
        "  (cond ((endp l) nil) (t (cons (code-char (car l)) (cdr l)))))")
    assert tampered != PAPER
    session = Session()
    for form in sexpr.read_forms(tampered.split("(defthm-inst len-of-map[code-char]")[0]):
        session.process(form)
    session.registry.register_instance("map[?f_?p]", {"?f": "code-char", "?p": "octetp"}, "map[code-char]")
    c = session.process(sexpr.read_form(
        "(defthm-inst len-of-map[code-char] (len-of-map[?f_?p] (?f . code-char) (?p . octetp)))"))
    ok_c = isinstance(c.error, ObligationFailed) and any(not ob.discharged for ob in c.error.obligations)
    notes.append(f"(c) {type(c.error).__name__}")
    return ok_a and ok_b and ok_c, "; ".join(notes)


def _timed(func):
    start = time.perf_counter()
    value = func()
    return value, time.perf_counter() - start


def criterion_5():
    runner = ScriptRunner()
    runner.run_text(PAPER + corpus_path("checks").read_text().split("(verify-implementation")[0])
    reg, universes = runner.registry, runner.session.universes
    small = Universe("small", (0, 1, parse_value("(0)")))
    octets = universes["octet-lists"]
    trees = universes["trees"]
    checks = []
    v, s = _timed(lambda: check_bounded(reg.theorem("len-of-map[code-char]").formula, octets, reg))
    checks.append(("len-of-map[code-char]", v.passed and len(octets.values) == 40, s))
    for name in ("injective[quad[wrap]]", "injective[wrap]"):
        v, s = _timed(lambda: check_bounded(App(name), small, reg))
        checks.append((name, v.passed, s))
    chain = RefinementChain("derivation", SPECS, STEPS, IMPL)
    v, s = _timed(lambda: verify_implementation(chain, trees, reg))
    checks.append(("<h,f,g>", v.passed and len(trees.values) == 905, s))

    mutated = ScriptRunner()
    mutated.run_text(PAPER.replace("(defun g (y1 y2) (append y1 y2))", "(defun g (y1 y2) (cons y1 y2))"))
    v, s = _timed(lambda: verify_implementation(chain, trees, mutated.registry))
    binding = dict(v.binding)
    checks.append(("g=cons", v.status == "fail" and isinstance(binding.get("x"), Cons), s))
    ok = all(passed and secs < CHECK_SECONDS for _, passed, secs in checks)
    detail = ", ".join(f"{n}:{'ok' if p else 'bad'} {t:.2f}s" for n, p, t in checks)
    return ok, f"{detail}; counterexample {v} (<{CHECK_SECONDS}s each)"


REQUIRED_PROPERTIES = (
    "test_identity", "test_stability", "test_idempotence", "test_funvar_elimination",
    "test_form_round_trip", "test_term_round_trip", "test_evaluator_instantiation_coherence",
)


def criterion_6():
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", str(HERE / "test_properties.py"), "-q", "-p", "no:cacheprovider",
         "--hypothesis-show-statistics"], capture_output=True, text=True, cwd=HERE.parent)
    counts = {}
    current = None
    for line in proc.stdout.splitlines():
        m = re.match(r"\S*test_properties\.py::(\w+):", line)
        if m:
            current = m.group(1)
            counts.setdefault(current, 0)
        m = re.search(r"(\d+) passing examples", line)
        if m and current:
            counts[current] += int(m.group(1))
    low = {n: counts.get(n, 0) for n in REQUIRED_PROPERTIES if counts.get(n, 0) < MIN_EXAMPLES}
    ok = proc.returncode == 0 and not low
    return ok, (f"pytest exit={proc.returncode}; {len(REQUIRED_PROPERTIES)} suites with "
                f">={MIN_EXAMPLES} passing cases; short={low}")


def criterion_7(tmp: Path):
    blobs = []
    for i in range(2):
        s, d = tmp / f"summary{i}.txt", tmp / f"dump{i}.txt"
        proc, _ = cli("run", "paper", "checks", "-q", "--summary", str(s), "--dump-registry", str(d))
        blobs.append((proc.returncode, s.read_bytes(), d.read_bytes()))
    ok = blobs[0] == blobs[1] and blobs[0][0] == 0
    return ok, (f"summary {len(blobs[0][1])} bytes, dump {len(blobs[0][2])} bytes, "
                f"identical={blobs[0][1:] == blobs[1][1:]}")


# ---------------------------------------------------------------------------

def _check(n, result):
    ok, detail = result
    record(n, ok, detail)
    assert ok, detail


def test_criterion_1_corpus_replay():
    _check(1, criterion_1())


def test_criterion_2_instantiation_exactness():
    _check(2, criterion_2())


def test_criterion_3_closures_and_obligations():
    _check(3, criterion_3())


def test_criterion_4_negative_cases():
    _check(4, criterion_4())


def test_criterion_5_bounded_validation():
    _check(5, criterion_5())


@pytest.mark.slow
def test_criterion_6_property_suites():
    _check(6, criterion_6())


def test_criterion_7_determinism(tmp_path):
    _check(7, criterion_7(tmp_path))


if __name__ == "__main__":
    import tempfile

    failures = 0
    for n, func in enumerate((criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6), 1):
        ok, detail = func()
        record(n, ok, detail)
        failures += not ok
    with tempfile.TemporaryDirectory() as d:
        ok, detail = criterion_7(Path(d))
        record(7, ok, detail)
        failures += not ok
    sys.exit(1 if failures else 0)
