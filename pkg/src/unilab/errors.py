"""Exception types shared across the simulator."""


class UnilabError(Exception):
    pass


class InvalidParams(UnilabError):
    """System parameters or fault budget are inconsistent."""


class IdentityViolation(UnilabError):
    """A process tried to sign as someone else."""


class AclViolation(UnilabError):
    """A process tried to modify a register it does not own."""


class DoubleSend(UnilabError):
    pass


class NotSender(UnilabError):
    pass


class DecodeError(UnilabError):
    pass


class ParseError(UnilabError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SemanticError(UnilabError):
    pass


class BoundExceeded(UnilabError):
    def __init__(self, bound: int):
        super().__init__(f"state space exceeds bound of {bound} states")
        self.bound = bound
