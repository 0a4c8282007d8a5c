"""Exception hierarchy shared across the toolkit."""


class CCBenchError(Exception):
    """Base class for all toolkit errors."""


class TraceError(CCBenchError):
    pass


class NonNumericLine(TraceError):
    def __init__(self, line_no: int, text: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: not a non-negative integer: {text!r}")


class DecreasingTimestamp(TraceError):
    def __init__(self, line_no: int):
        self.line_no = line_no
        super().__init__(f"line {line_no}: timestamp decreases")


class EmptyTrace(TraceError):
    pass


class EmptyLog(TraceError):
    pass


class RateTooHighForPacketSize(TraceError):
    pass


class LinkError(CCBenchError):
    pass


class ClockRegression(LinkError):
    pass


class UnknownProtocol(CCBenchError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown congestion-control protocol: {name!r}")


class ConfigInvalid(CCBenchError):
    pass


class TraceLoadError(CCBenchError):
    pass


class MetricsError(CCBenchError):
    pass


class UnknownFlow(MetricsError):
    pass


class ZeroBaseline(MetricsError):
    pass


class InsufficientRuns(MetricsError):
    pass


class AllZero(MetricsError):
    pass


class DegenerateSamples(MetricsError):
    pass


class BadCampaignFile(CCBenchError):
    pass


class UnknownFigureKind(CCBenchError):
    pass
