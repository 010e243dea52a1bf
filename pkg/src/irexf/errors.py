"""Exception hierarchy.

Every domain error carries a stable machine-readable ``code`` which the CLI
echoes back as ``{"error": code, "detail": ...}``.
"""

from __future__ import annotations


class IrexfError(Exception):
    code = "IREXF_ERROR"

    def __init__(self, detail: str = "", **context):
        super().__init__(detail or self.code)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        out = {"error": self.code, "detail": self.detail}
        if self.context:
            out["context"] = self.context
        return out


class MalformedFrame(IrexfError):
    code = "MALFORMED_FRAME"


class CheckFailed(IrexfError):
    code = "CHECK_FAILED"


class NoMatch(IrexfError):
    code = "NO_MATCH"


class EmptyDatabase(IrexfError):
    code = "EMPTY_DATABASE"


class InvalidPulseTrain(IrexfError):
    code = "INVALID_PULSE_TRAIN"


class UnknownSymbol(IrexfError):
    code = "UNKNOWN_SYMBOL"

    def __init__(self, detail: str = "", index: int | None = None, symbol: str | None = None):
        ctx = {}
        if index is not None:
            ctx["index"] = index
        if symbol is not None:
            ctx["symbol"] = symbol
        super().__init__(detail, **ctx)
        self.index = index
        self.symbol = symbol


class InvalidLayout(IrexfError):
    code = "INVALID_LAYOUT"


class InvalidLength(IrexfError):
    code = "INVALID_LENGTH"


class InvalidSymbol(IrexfError):
    code = "INVALID_SYMBOL"


class PrefixMismatch(IrexfError):
    code = "PREFIX_MISMATCH"


class NoSuitableTarget(IrexfError):
    code = "NO_SUITABLE_TARGET"


class EmptyCorpus(IrexfError):
    code = "EMPTY_CORPUS"


class NotADistribution(IrexfError):
    code = "NOT_A_DISTRIBUTION"


class DimensionMismatch(IrexfError):
    code = "DIMENSION_MISMATCH"


class InvalidModel(IrexfError):
    code = "INVALID_MODEL"
