"""Exception hierarchy shared across the package."""


class SpadeError(Exception):
    """Base class for all planner errors."""


class SchemaError(SpadeError):
    pass


class InvariantError(SpadeError):
    pass


class EmptyGraph(SpadeError):
    pass


class NoSuchEdge(SpadeError):
    pass


class NotTraversabilityEdge(SpadeError):
    pass


class NoNestedGraph(SpadeError):
    pass


class NodeNotFound(SpadeError):
    pass


class NoRoute(SpadeError):
    pass


class EmptySet(SpadeError):
    pass


class MissingTransitionLevel(SpadeError):
    pass


class EmptyPoseGraph(SpadeError):
    pass


class NoLocalRoute(SpadeError):
    """A stage of local layer planning found no route.

    ``stage`` names the failing stage (``PoseStage``, ``LevelStage``,
    ``TransitionStage``, ``InterTargetStage``) and ``scope`` the graph it ran in.
    """

    def __init__(self, stage, scope, message=""):
        super().__init__(message or f"no local route in {stage} at scope {scope}")
        self.stage = stage
        self.scope = tuple(scope)


class QueryNodeNotFound(SpadeError):
    pass


class StartOccupied(SpadeError):
    pass


class GoalOccupied(SpadeError):
    pass


class InvariantViolation(SpadeError):
    """Internal consistency check failed; indicates a logic bug."""


class OutOfBounds(SpadeError):
    pass


class ParamError(SpadeError):
    pass


class ScenarioError(SpadeError):
    pass


class DomainError(SpadeError):
    pass
