"""Exceptions raised by the policy parser and evaluator."""


class PolicyError(Exception):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, message: str, line: int, column: int, expected: str | None = None):
        self.line = line
        self.column = column
        self.expected = expected
        where = f"line {line}, column {column}"
        text = f"{where}: {message}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


class UnsafeRule(PolicyError):
    """A head or constraint variable is not bound by any positive body atom."""

    def __init__(self, rule_index: int, variable: str):
        self.rule_index = rule_index
        self.variable = variable
        super().__init__(f"rule {rule_index}: variable {variable} is not bound by a body atom")


class UngroundConstraint(PolicyError):
    pass


class GoalAlreadySatisfied(PolicyError):
    pass
