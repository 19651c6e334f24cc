"""Polynomial Datalog rewriting of UCQs under Horn DL TBoxes, plus oracles."""
from .core import (Reasoner, RewritingResult, RewritingSet, certain_answers, is_consistent,
                   rewrite_ucq)
from .eliminate import ArityCapExceeded, eliminate_sets
from .ir import Layout
from .oracles import (INCONCLUSIVE, bounded_chase, exponential_oracle, oracle_answers,
                      restricted_chase_oracle)

__all__ = ["Reasoner", "RewritingResult", "RewritingSet", "certain_answers", "is_consistent",
           "rewrite_ucq", "ArityCapExceeded", "eliminate_sets", "Layout",
           "INCONCLUSIVE", "bounded_chase", "exponential_oracle", "oracle_answers",
           "restricted_chase_oracle"]
