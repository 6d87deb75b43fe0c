"""Exception types shared across the occupilot package."""


class OccupilotError(Exception):
    """Base class for all package-specific errors."""


class MalformedRow(OccupilotError):
    def __init__(self, line_no, detail=""):
        self.line_no = line_no
        super().__init__(f"malformed row at line {line_no}: {detail}")


class NonMonotonicTimestamp(OccupilotError):
    def __init__(self, line_no):
        self.line_no = line_no
        super().__init__(f"timestamp not strictly increasing at line {line_no}")


class MissingColumn(OccupilotError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing column: {name}")


class PeriodMismatch(OccupilotError):
    def __init__(self, native_period):
        self.native_period = native_period
        super().__init__(
            f"bin width 900 s is not a multiple of native period {native_period} s"
        )


class DegenerateColumn(OccupilotError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"zero-variance column: {name}")


class SingleClass(OccupilotError):
    def __init__(self, detail="only one class present"):
        super().__init__(detail)


class NoConvergence(OccupilotError):
    def __init__(self, max_passes):
        self.max_passes = max_passes
        super().__init__(f"solver did not converge within {max_passes} passes")


class DimensionMismatch(OccupilotError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected dimension {expected}, got {got}")


class NonFiniteLoss(OccupilotError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(
            f"non-finite training loss at epoch {epoch}; lower the learning rate"
        )


class UncalibratedModel(OccupilotError):
    def __init__(self):
        super().__init__("reconstruction-error threshold has not been calibrated")


class LengthMismatch(OccupilotError):
    def __init__(self, n_pred, n_true):
        super().__init__(f"predictions ({n_pred}) and labels ({n_true}) differ in length")


class EmptyEvaluation(OccupilotError):
    def __init__(self):
        super().__init__("no rows to evaluate")


class RankDeficient(OccupilotError):
    def __init__(self, rank):
        self.rank = rank
        super().__init__(f"covariance has rank {rank} < 2")


class PerplexityInfeasible(OccupilotError):
    def __init__(self, perplexity, n):
        super().__init__(
            f"perplexity {perplexity} is infeasible for {n} points (needs perplexity < n/3)"
        )


class TimelineMismatch(OccupilotError):
    def __init__(self, detail="bin timelines are not aligned"):
        super().__init__(detail)


class TooFewHouseholds(OccupilotError):
    def __init__(self, n):
        super().__init__(f"cohort report needs at least 4 households, got {n}")


class ConfigError(OccupilotError):
    """Invalid run configuration (CLI exit code 2)."""


class ArtifactMissing(OccupilotError):
    """A required upstream artifact does not exist (CLI exit code 1)."""

    def __init__(self, path):
        self.path = path
        super().__init__(f"required artifact not found: {path}")
