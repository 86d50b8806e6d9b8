"""
Function Registry - Central registry of the elementary functions answers may use.

Auto-discovers functions declared with @elementary_function and serves them to
the parser (names), the evaluator (binary64 and high-precision implementations)
and the symbolic stage (exact values, interval enclosures).
"""
import importlib
import logging
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

BUILTIN_MODULES = ["answercheck.core.functions"]


class FunctionSpec(BaseModel):
    """Everything the pipeline knows about one registered function."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str = Field(description="Canonical name used in normal forms")
    description: str = ""
    aliases: tuple[str, ...] = ()
    evaluate: Callable[[float], float]
    oracle: Optional[Callable] = Field(default=None, description="mpmath implementation")
    interval: Optional[Callable] = Field(default=None, description="mpmath.iv implementation")
    exact: Optional[Callable[[Fraction], Optional[Fraction]]] = None
    # Non-finite results at finite arguments are domain errors (poles), not overflow
    poles: bool = False


class FunctionRegistry:
    """
    Central registry for elementary functions.

    The parser accepts exactly the names known here, so extending the function
    class means registering one more decorated function.
    """

    _instance = None
    _functions: Dict[str, FunctionSpec] = {}
    _aliases: Dict[str, str] = {}

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._functions = {}
            cls._instance._aliases = {}
            cls._instance._discovered = False
        return cls._instance

    def register(self, spec: FunctionSpec) -> None:
        """Register a function spec built by @elementary_function."""
        if spec.name in self._aliases and self._aliases[spec.name] != spec.name:
            raise ValueError(f"Function name '{spec.name}' is already an alias")

        self._functions[spec.name] = spec
        self._aliases[spec.name] = spec.name
        for alias in spec.aliases:
            self._aliases[alias] = spec.name
        logger.debug(f"Registered function: {spec.name} (aliases: {list(spec.aliases)})")

    def discover_functions(self) -> None:
        """Import the modules that declare the built-in function set."""
        self._discovered = True
        for module_name in BUILTIN_MODULES:
            try:
                importlib.import_module(module_name)
            except ImportError as e:
                logger.warning(f"Could not discover functions in {module_name}: {e}")

    def _ensure_discovered(self) -> None:
        if not self._discovered:
            self.discover_functions()

    def canonical_name(self, name: str) -> Optional[str]:
        """Resolve an alias (e.g. ln) to its canonical name (log)."""
        self._ensure_discovered()
        return self._aliases.get(name)

    def get(self, name: str) -> Optional[FunctionSpec]:
        """Get a function spec by canonical name or alias."""
        canonical = self.canonical_name(name)
        return self._functions.get(canonical) if canonical else None

    def is_registered(self, name: str) -> bool:
        return self.canonical_name(name) is not None

    def list_names(self) -> List[str]:
        """All accepted spellings, canonical names and aliases alike."""
        self._ensure_discovered()
        return sorted(self._aliases)


# Singleton instance
function_registry = FunctionRegistry()
