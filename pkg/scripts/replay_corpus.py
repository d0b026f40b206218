"""Replay a bundled or on-disk corpus and print per-event timings.

    python3 scripts/replay_corpus.py            # bundled paper corpus
    python3 scripts/replay_corpus.py paper checks --slowest 5
"""

import argparse
import time
from pathlib import Path

from softk import sexpr
from softk.cli import BUNDLED, ScriptRunner, corpus_path, format_outcome


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("scripts", nargs="*", default=["paper"])
    parser.add_argument("--slowest", type=int, default=10)
    args = parser.parse_args()

    forms = []
    for name in args.scripts:
        path = corpus_path(name) if name in BUNDLED else Path(name)
        forms.extend(sexpr.read_forms(path.read_text()))
    runner = ScriptRunner(echo=False)
    timings = []
    start = time.perf_counter()
    for form in forms:
        t0 = time.perf_counter()
        outcome = runner.process(form)
        timings.append((time.perf_counter() - t0, outcome))
    total = time.perf_counter() - start

    for seconds, outcome in sorted(timings, key=lambda p: -p[0])[: args.slowest]:
        print(f"{seconds * 1000:9.2f} ms  {format_outcome(outcome)}")
    print(f"{len(timings)} forms in {total:.3f}s")


if __name__ == "__main__":
    main()
