"""softk: a definitional kernel for second-order functions and theorems
over a small first-order term language."""

from .errors import SoftError
from .evaluator import Limits, Universe, Verdict, check_bounded, eval_term
from .events import EventOutcome, Session, run_events
from .instantiate import Instantiation, apply_instantiation, compute_more_pairs, discharge_obligations
from .registry import Registry
from .sexpr import read_form, read_forms, write_form

__all__ = [
    "EventOutcome", "Instantiation", "Limits", "Registry", "Session", "SoftError", "Universe",
    "Verdict", "apply_instantiation", "check_bounded", "compute_more_pairs",
    "discharge_obligations", "eval_term", "read_form", "read_forms", "run_events", "write_form",
]

__version__ = "0.1.0"
