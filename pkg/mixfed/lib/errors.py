"""Exception hierarchy for the simulator.

Every error carries a stable ``code`` used in run summaries and in the
CLI's JSON error payload.
"""


class MixFedError(Exception):
    """Base class for simulator errors."""
    code = "error"

    @property
    def hint(self) -> str | None:
        """What to change in the config, when the error points at one setting."""
        return None


class ConfigError(MixFedError):
    """Configuration file missing, unreadable or inconsistent."""
    code = "config"


class DimensionError(MixFedError, ValueError):
    """Array shapes do not agree."""
    code = "dimension"


class RankDeficiencyError(MixFedError):
    """Matrix has no numerically full-rank QR factorization."""
    code = "rank_deficient"

    def __init__(self, smallest: float, largest: float):
        self.smallest = smallest
        self.largest = largest
        super().__init__(
            f"Rank-deficient input: smallest singular value {smallest:.3e} "
            f"vs largest {largest:.3e}"
        )


class DegenerateRoundError(RankDeficiencyError):
    """QR failed inside the federated orthogonal iteration."""
    code = "degenerate_round"

    def __init__(self, round_index: int, smallest: float = 0.0, largest: float = 0.0):
        self.round_index = round_index
        MixFedError.__init__(
            self,
            f"Degenerate orthogonal-iteration round {round_index}: "
            f"aggregated update is rank-deficient",
        )
        self.smallest = smallest
        self.largest = largest


class InsufficientDataError(MixFedError):
    """Not enough data points or clients to run a step."""
    code = "insufficient_data"

    def __init__(self, what: str, needed: int, available: int):
        self.what = what
        self.needed = needed
        self.available = available
        super().__init__(f"Insufficient {what}: need {needed}, have {available}")


class InsufficientAnchorsError(InsufficientDataError):
    """Fewer eligible anchor clients than requested."""
    code = "insufficient_anchors"

    def __init__(self, needed: int, available: int, min_local: int):
        self.min_local = min_local
        super().__init__(f"anchor clients with n_i >= {min_local}", needed, available)

    @property
    def hint(self) -> str | None:
        return f"Lower phase1.n_H to at most {self.available} or set phase1.min_local below {self.min_local}"


class ClusteringError(MixFedError):
    """Greedy anchor clustering did not produce k valid clusters."""
    code = "clustering"

    def __init__(self, components: int, k: int, reason: str | None = None):
        self.components = components
        self.k = k
        self.reason = reason
        message = f"Anchor clustering found {components} components, expected {k}"
        if reason:
            message = f"{message} ({reason})"
        super().__init__(message)

    @property
    def hint(self) -> str | None:
        return "Raise phase1.T or phase1.m so every anchor ends within half the separation of its cluster"


class UnsupportedSizeError(MixFedError):
    """Problem size exceeds what a brute-force routine supports."""
    code = "unsupported_size"

    def __init__(self, k: int, limit: int):
        self.k = k
        self.limit = limit
        super().__init__(f"k={k} exceeds the brute-force limit of {limit}")


class WeightSumError(MixFedError):
    """Aggregation weights do not sum to one."""
    code = "weight_sum"

    def __init__(self, total: float):
        self.total = total
        super().__init__(f"Aggregation weights sum to {total!r}, expected 1")


class DivergenceError(MixFedError):
    """An iterate left the finite range."""
    code = "diverged"

    def __init__(self, round_index: int):
        self.round_index = round_index
        super().__init__(f"Global model has non-finite entries at round {round_index}")

    @property
    def hint(self) -> str | None:
        return "Lower phase2.eta"
