"""
@elementary_function decorator - declares a function answers may use.

The decorated callable is the binary64 implementation; the decorator records
the companion implementations the rest of the pipeline needs and registers
everything with the function registry.
"""
import logging
from fractions import Fraction
from typing import Callable, Optional, TypeVar

from answercheck.core.registry import FunctionSpec, function_registry

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[[float], float])


def elementary_function(
    name: str,
    description: str,
    aliases: tuple[str, ...] = (),
    oracle: Optional[Callable] = None,
    interval: Optional[Callable] = None,
    exact: Optional[Callable[[Fraction], Optional[Fraction]]] = None,
    poles: bool = False,
) -> Callable[[F], F]:
    """
    Decorator that registers a one-argument real function.

    Args:
        name: Canonical name (what the parser accepts and normal forms print)
        description: Human-readable description
        aliases: Extra spellings accepted by the parser
        oracle: mpmath implementation used by the high-precision evaluator
        interval: mpmath.iv implementation used to certify constants nonzero
        exact: Returns the exact rational value at a rational argument, or None
        poles: If True, non-finite results are reported as domain errors

    Usage:
        @elementary_function(name="sin", description="Sine", oracle=mpmath.sin)
        def sin(x: float) -> float:
            return math.sin(x)
    """

    def decorator(func: F) -> F:
        spec = FunctionSpec(
            name=name,
            description=description,
            aliases=tuple(aliases),
            evaluate=func,
            oracle=oracle,
            interval=interval,
            exact=exact,
            poles=poles,
        )
        func._function_meta = spec
        function_registry.register(spec)
        return func

    return decorator
