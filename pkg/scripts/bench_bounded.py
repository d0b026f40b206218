"""Time the implementation check over tree universes of growing depth."""

import argparse
import time

from softk.cli import ScriptRunner, corpus_path, trees
from softk.evaluator import Limits, Universe
from softk.instantiate import Instantiation
from softk.refine import RefinementChain, verify_implementation
from softk.values import parse_value

SPECS = ("spec[?h]", "spec1[?h_?f_?g]", "spec2[?h_?f_?g]", "spec3[?h_?f_?g]",
         "spec4[?h_?f_?g]", "spec5[?h_?f_?g]")
STEPS = ("step1", "step2", "step3", "step4", "step5")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--atoms", nargs="+", default=["0", "1", "a", "nil"])
    parser.add_argument("--max-depth", type=int, default=2)
    parser.add_argument("--budget", type=int, default=5_000_000)
    args = parser.parse_args()

    runner = ScriptRunner(echo=False)
    runner.run_text(corpus_path("paper").read_text())
    chain = RefinementChain("derivation", SPECS, STEPS, Instantiation({"?h": "h", "?f": "f", "?g": "g"}))
    atoms = [parse_value(a) for a in args.atoms]

    print(f"{'depth':>5} {'values':>7} {'status':>8} {'assignments':>12} {'seconds':>8}")
    for depth in range(args.max_depth + 1):
        universe = Universe(f"trees{depth}", tuple(trees(atoms, depth)))
        start = time.perf_counter()
        verdict = verify_implementation(chain, universe, runner.registry, Limits(budget=args.budget))
        print(f"{depth:>5} {len(universe.values):>7} {verdict.status:>8} "
              f"{verdict.assignments:>12} {time.perf_counter() - start:>8.2f}")


if __name__ == "__main__":
    main()
