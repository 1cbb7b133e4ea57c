"""
Error types for the Prob-EC engine
Every failure the engine reports derives from ProbECError
"""


class ProbECError(Exception):
    """Base class; the CLI maps it to a non-zero exit code"""

    exit_code = 1


class InvalidProbability(ProbECError):
    def __init__(self, value, where=""):
        self.value = value
        self.where = where
        suffix = f" in {where}" if where else ""
        super().__init__(f"probability {value!r} is outside [0, 1]{suffix}")


class DuplicateFact(ProbECError):
    def __init__(self, body):
        self.body = body
        super().__init__(f"duplicate fact body: {body}")


class ParseError(ProbECError):
    def __init__(self, line, col, reason, source="<input>"):
        self.line = line
        self.col = col
        self.reason = reason
        self.source = source
        super().__init__(f"{source}:{line}:{col}: {reason}")


class UnboundHeadVariable(ProbECError):
    def __init__(self, rule, variable):
        self.rule = rule
        self.variable = variable
        super().__init__(
            f"head variable {variable} of rule at line {rule.line} "
            "does not occur in a positive body literal"
        )


class UnboundBodyVariable(ProbECError):
    def __init__(self, rule, variable):
        self.rule = rule
        self.variable = variable
        super().__init__(
            f"variable {variable} in a negation or comparison of rule at line {rule.line} "
            "is not bound by the head or a positive literal"
        )


class CyclicFluentDependency(ProbECError):
    def __init__(self, cycle):
        self.cycle = tuple(cycle)
        super().__init__("cyclic holdsAt dependency: " + " -> ".join(self.cycle))


class UnknownFluent(ProbECError):
    def __init__(self, functor, rule=None):
        self.functor = functor
        self.rule = rule
        where = f" (rule at line {rule.line})" if rule is not None else ""
        super().__init__(
            f"fluent {functor} is neither an input fluent, a built-in, nor defined by a rule{where}"
        )


class VarNotInOrder(ProbECError):
    def __init__(self, var):
        self.var = var
        super().__init__(f"variable {var.id} ({var.label or 'unlabelled'}) is missing from the variable order")


class TooManyVars(ProbECError):
    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} probabilistic variables exceed the limit of {limit}")


class CrispInputError(ProbECError):
    def __init__(self, fact):
        self.fact = fact
        super().__init__(
            f"crisp engine needs facts with probability 1, got {fact}; run 'filter' first"
        )


class ValidationMismatch(ProbECError):
    """Incremental, exact and enumerated probabilities disagree"""

    exit_code = 2

    def __init__(self, mismatches):
        self.mismatches = list(mismatches)
        first = self.mismatches[0] if self.mismatches else None
        detail = f"; first: {first[0]}@{first[1]} {first[2]}" if first else ""
        super().__init__(f"{len(self.mismatches)} probability mismatches{detail}")


class UsageError(ProbECError):
    """Malformed command line"""

    def __init__(self, message, prog="probec"):
        self.prog = prog
        super().__init__(f"usage error: {message} (see '{prog} --help')")
