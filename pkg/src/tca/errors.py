"""Exception hierarchy shared by every module.

Data problems (bad rows, missing references, empty windows) derive from
:class:`DataError`; the CLI maps them to exit code 2.
"""


class TCAError(Exception):
    """Base class for all package errors."""


class DataError(TCAError):
    """Input data is malformed, inconsistent, or insufficient."""


class MalformedRow(DataError):
    def __init__(self, line: int, reason: str, path: str = ""):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"malformed row at {where}: {reason}")


class UnknownReference(DataError):
    def __init__(self, kind: str, ident: str):
        self.kind = kind
        self.ident = ident
        super().__init__(f"unknown {kind} reference {ident!r}")


class DuplicateKey(DataError):
    def __init__(self, kind: str, ident):
        self.kind = kind
        self.ident = ident
        super().__init__(f"duplicate {kind} key {ident!r}")


class NoData(DataError):
    def __init__(self, what: str, *key):
        self.key = key
        detail = ", ".join(str(k) for k in key)
        super().__init__(f"no data for {what}" + (f" ({detail})" if detail else ""))


class EmptyFills(DataError):
    pass


class PartialFill(DataError):
    def __init__(self, order_id: str, remaining: int):
        self.order_id = order_id
        self.remaining = remaining
        super().__init__(f"order {order_id} is partially filled ({remaining} shares remaining)")


class ZeroDuration(DataError):
    pass


class InfeasibleSchedule(DataError):
    pass


class InsufficientData(DataError):
    pass


class RankDeficient(DataError):
    pass


class DegenerateVariance(DataError):
    pass


class InsufficientOverlap(DataError):
    pass


class NoOverlap(DataError):
    pass


class MissingFx(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"no FX rate for {date}")


class MissingBasePrice(DataError):
    def __init__(self, security_id: str):
        self.security_id = security_id
        super().__init__(f"no base-date price for {security_id}")


class ZeroBase(DataError):
    pass
