"""Exception types shared across the package."""


class SepenvError(Exception):
    """Base class for all package-specific errors."""


class ParseError(SepenvError):
    """Source text does not conform to the expression grammar.

    Carries the byte offset of the first offending character.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomainError(SepenvError):
    """Point evaluation left the natural domain of an operation.

    The message names the offending subexpression.
    """


class DomainAmbiguityError(SepenvError):
    """An interval enclosure touched the singular set of an operation.

    Returned instead of an unsound enclosure: the true range cannot be
    bracketed when the input interval contains an excluded point
    (zero denominator, nonpositive log argument, negative sqrt argument).
    """


class EnclosureOverflowError(SepenvError):
    """An enclosure's lower endpoint overflowed to -inf.

    Only the upper endpoint may be the +inf sentinel; a lower endpoint at
    -inf cannot be represented soundly.
    """


class DimensionMismatchError(SepenvError):
    """Vector, box, or expression dimensions do not agree."""


class PositivityError(SepenvError):
    """Certified positivity check failed on a shell."""

    def __init__(self, shell: int, lower_bound: float):
        super().__init__(
            f"cannot certify f > 0 on shell {shell}: "
            f"interval lower bound {lower_bound!r}"
        )
        self.shell = shell
        self.lower_bound = lower_bound


class ShellCeilingError(SepenvError):
    """Strict mode: evaluation required a shell beyond the configured ceiling."""

    def __init__(self, needed: int, ceiling: int):
        super().__init__(
            f"evaluation needs shell {needed} but strict ceiling is {ceiling}"
        )
        self.needed = needed
        self.ceiling = ceiling


class OracleError(SepenvError):
    """A user-supplied bound oracle raised while being queried."""
