"""Exception types raised by the planning library."""


class PlanningError(Exception):
    """Base class for all library-specific errors."""


class DegenerateWeightsError(PlanningError):
    """Weight vector cannot be normalized (all zero, or a negative entry)."""


class ModelEvaluationError(PlanningError):
    """A model callback returned a non-finite or otherwise invalid value."""


class DegeneratePosteriorError(PlanningError):
    """Every particle assigns zero likelihood to the received observation."""


class DegenerateEntropyError(PlanningError):
    """A log argument inside the entropy estimator is exactly zero with
    nonzero posterior weight."""


class AlreadyConvergedError(PlanningError):
    """refine() was called on a cache already at the maximal level."""


class UnsupportedModelError(PlanningError):
    """The model cannot supply something the planner needs (e.g. a finite
    supremum of the transition density)."""


class InternalConsistencyError(PlanningError):
    """Tree bookkeeping violated an invariant; indicates a planner bug."""
