"""Domain errors raised by the scene-model library."""


class IsmError(Exception):
    """Base class for all domain errors."""


class LengthMismatchError(IsmError):
    """Trajectories in one dataset or learning call differ in length."""


class EmptyNeighborhoodError(IsmError):
    """A star/ISM was requested with no neighbor objects."""


class DisconnectedTopologyError(IsmError):
    """A relation topology is not connected."""


class NoAttachmentPointError(IsmError):
    """A star shares no object with the remaining stars; partition is corrupt."""


class MissingVoteEntryError(IsmError):
    """A prediction path references an object absent from an ISM's vote table."""


class TooLargeForOracleError(IsmError):
    """Brute-force oracle guard: input exceeds n <= 4, l <= 10."""


class EmptyTestSetError(IsmError):
    """A measurement requires a non-empty (sub)set of test configurations."""


class BudgetZeroError(IsmError):
    """Topology search called with a non-positive iteration budget."""
