class RomlabError(Exception):
    pass


class InvalidScale(RomlabError, ValueError):
    """The constants produce infeasible derived sizes at this ``n``."""


class InfeasiblePromise(RomlabError, ValueError):
    """A promise instance with the requested shape cannot exist."""


class NotMember(RomlabError, KeyError):
    pass


class DecompositionGap(RomlabError, RuntimeError):
    """The A/B segments fail to partition [n]; an upstream precondition was violated."""


class AssemblyIncomplete(RomlabError, RuntimeError):
    pass


class ProtocolAbort(RomlabError):
    """A failure event of the reduction protocol (not a programming error).

    ``reason`` is ``"WrappedInterval"`` or ``"TripleIntersection"``.
    """

    WRAPPED = "WrappedInterval"
    TRIPLE = "TripleIntersection"

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)
