"""Exception hierarchy shared by all modules."""


class OTExploreError(Exception):
    """Base class for library errors."""


class MassMismatch(OTExploreError):
    pass


class EmptyInput(OTExploreError):
    pass


class InvalidMass(OTExploreError):
    pass


class InvalidPlan(OTExploreError):
    pass


class InvalidMixture(OTExploreError):
    pass


class InvalidNeighborhood(OTExploreError):
    pass


class InvalidViews(OTExploreError):
    pass


class Exhausted(OTExploreError):
    """No positive-weight sample point remains."""


class Undefined(OTExploreError):
    """A metric has no value for the given input (e.g. zero targets)."""


class ConfigError(OTExploreError):
    """Invalid scenario configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
