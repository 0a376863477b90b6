"""Exception types shared across the package."""


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class InputContractError(ContractError):
    """A quantizer input violates its norm or range precondition."""


class CorruptMessageError(ValueError):
    """A bit message cannot have been produced by the matching encoder."""


class ConfigurationError(ValueError):
    """Oracle, quantizer and algorithm settings are inconsistent.

    ``problems`` lists every violated constraint, not just the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
