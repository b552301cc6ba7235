"""Exceptions raised by the exact kernel."""


class SymcoreError(Exception):
    pass


class UndeclaredSymbol(SymcoreError):
    def __init__(self, name, context=None):
        self.name = name
        where = f" in context {context!r}" if context else ""
        super().__init__(f"undeclared symbol {name!r}{where}")


class ZeroDenominator(SymcoreError, ZeroDivisionError):
    pass


class PoleAtPoint(SymcoreError, ZeroDivisionError):
    pass


class InconsistentAlgebraicValue(SymcoreError):
    pass


class ContextMismatch(SymcoreError):
    pass


class UndefinedDerivative(SymcoreError):
    """A dynamic atom without a derivative rule was differentiated."""


class ExprSyntaxError(SymcoreError):
    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at position {position}{detail}")
