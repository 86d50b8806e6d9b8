"""
Domain Schemas - Pydantic models for every value the pipeline passes around.
"""
import math
from enum import Enum
from fractions import Fraction
from typing import Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from answercheck import settings


def _default(key: str):
    return lambda: settings.CHECK_CONFIG[key]


# =============================================================================
# Enumerations
# =============================================================================

class Verdict(str, Enum):
    """Three-valued outcome of the symbolic stage."""
    EQUAL = "equal"
    NOT_EQUAL = "not_equal"
    UNKNOWN = "unknown"  # the "I don't know" answer


class FinalVerdict(str, Enum):
    """Grading decision of the full pipeline."""
    CORRECT = "correct"
    INCORRECT = "incorrect"
    CORRECT_WITH_BOUND = "correct_with_bound"
    INCONCLUSIVE = "inconclusive"


class Stage(str, Enum):
    SYMBOLIC = "symbolic"
    POINTWISE = "pointwise"


class PointwiseResult(str, Enum):
    """Outcome of the randomized check on one segment."""
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class UndefinedReason(str, Enum):
    DOMAIN_ERROR = "domain-error"
    OVERFLOW = "overflow"
    BUDGET_EXHAUSTED = "budget-exhausted"


class GridMode(str, Enum):
    """How grid spacing at x is modeled."""
    RELATIVE = "relative"  # eps_x = |x| * 2^-53
    ULP = "ulp"            # eps_x = true spacing above |x|


class InconclusivePolicy(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"


# =============================================================================
# Evaluation
# =============================================================================

class EvalBudget(BaseModel):
    """Cooperative step budget plus optional wall-clock limit for one evaluation."""
    model_config = ConfigDict(frozen=True, validate_default=True)

    max_node_visits: int = Field(default_factory=_default('max_node_visits'), ge=1)
    wall_clock_limit_ms: Optional[float] = Field(
        default_factory=_default('wall_clock_limit_ms'), gt=0,
        description="Disabled (None) by default so evaluation stays deterministic",
    )


class ToleranceSpec(BaseModel):
    """Zero test thresholds: |v| <= absolute or |v| <= relative * scale."""
    model_config = ConfigDict(frozen=True, validate_default=True)

    absolute: float = Field(default_factory=_default('tol_abs'), ge=0)
    relative: float = Field(default_factory=_default('tol_rel'), ge=0)


class EvalOutcome(BaseModel):
    """Either a finite value (with the magnitude scale seen while computing it) or Undefined."""
    model_config = ConfigDict(frozen=True)

    value: Optional[float] = None
    reason: Optional[UndefinedReason] = None
    scale: float = Field(default=0.0, description="Largest subterm magnitude recorded")
    visits: int = 0

    @model_validator(mode="after")
    def _one_state(self):
        if (self.value is None) == (self.reason is None):
            raise ValueError("EvalOutcome holds exactly one of value or reason")
        if self.value is not None and not math.isfinite(self.value):
            raise ValueError("EvalOutcome values are finite")
        return self

    @classmethod
    def of(cls, value: float, scale: float, visits: int = 0) -> "EvalOutcome":
        return cls(value=value, scale=scale, visits=visits)

    @classmethod
    def undefined(cls, reason: UndefinedReason, visits: int = 0) -> "EvalOutcome":
        return cls(reason=reason, visits=visits)

    @property
    def is_value(self) -> bool:
        return self.value is not None


# =============================================================================
# Grid
# =============================================================================

class Segment(BaseModel):
    """A closed segment [a, b] of the real line with finite a < b."""
    model_config = ConfigDict(frozen=True)

    a: float
    b: float

    @model_validator(mode="after")
    def _ordered(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("Segment bounds must be finite")
        if not self.a < self.b:
            raise ValueError(f"Segment needs a < b, got [{self.a}, {self.b}]")
        return self

    @classmethod
    def parse(cls, text: str) -> "Segment":
        """Build from 'A:B' notation."""
        left, sep, right = text.partition(":")
        if not sep:
            raise ValueError(f"Expected A:B, got {text!r}")
        return cls(a=float(left), b=float(right))

    @property
    def width(self) -> float:
        return self.b - self.a

    def __str__(self) -> str:
        return f"[{self.a:g}, {self.b:g}]"


class GridModel(BaseModel):
    """Floating-point grid of a segment: spacing at the far end and point count."""
    model_config = ConfigDict(frozen=True)

    segment: Segment = Field(description="Segment as supplied (may be negative)")
    normalized: Segment = Field(description="Positive segment the estimate is computed on")
    mode: GridMode
    mirrored: bool = Field(description="True when segment = -normalized")
    epsilon_b: float
    M: int = Field(ge=0)


# =============================================================================
# Probability
# =============================================================================

class ProbParams(BaseModel):
    """Grid cardinality M, check points m, zero-locus bound k."""
    model_config = ConfigDict(frozen=True)

    M: int = Field(ge=1)
    m: int = Field(ge=1)
    k: int = Field(ge=0)

    @model_validator(mode="after")
    def _m_within_grid(self):
        if self.m > self.M:
            raise ValueError(f"m={self.m} exceeds M={self.M}")
        return self


class ProbResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    exact: Optional[Fraction] = None
    value: float = Field(ge=0.0, le=1.0)
    log_value: float = Field(description="Natural log of the probability; -inf when it is 0")

    @field_serializer("exact")
    def _exact_text(self, exact: Optional[Fraction]) -> Optional[str]:
        return None if exact is None else str(exact)

    @field_serializer("log_value")
    def _finite_log(self, log_value: float) -> Optional[float]:
        return log_value if math.isfinite(log_value) else None


# =============================================================================
# Checker
# =============================================================================

class AutoSegmentSpec(BaseModel):
    """Disjoint random segments of equal length placed inside a range."""
    model_config = ConfigDict(frozen=True, validate_default=True)

    count: int = Field(default_factory=_default('segment_count'), ge=1)
    length: float = Field(default_factory=_default('segment_length'), gt=0)
    placement: Segment = Field(
        default_factory=lambda: Segment(
            a=settings.CHECK_CONFIG['placement_range'][0],
            b=settings.CHECK_CONFIG['placement_range'][1],
        )
    )


class CheckConfig(BaseModel):
    """Everything that determines a comparison run; the seed fixes all sampling."""
    model_config = ConfigDict(frozen=True, validate_default=True)

    segments: Optional[list[Segment]] = Field(
        default=None, description="Explicit segments; auto-generated when None"
    )
    auto: AutoSegmentSpec = Field(default_factory=AutoSegmentSpec)
    points: int = Field(default_factory=_default('points'), ge=1, description="m per segment")
    tolerance: ToleranceSpec = Field(default_factory=ToleranceSpec)
    budget: EvalBudget = Field(default_factory=EvalBudget)
    seed: int = Field(default_factory=_default('seed'), ge=0, lt=2**64)
    assumed_k: Union[int, list[int]] = Field(
        default_factory=_default('assumed_k'),
        description="Zero-count bound per segment, used for the reported error bound",
    )
    grid_mode: GridMode = Field(default_factory=_default('grid_mode'))
    variable: str = Field(default_factory=_default('variable'))
    resample_factor: int = Field(default_factory=_default('resample_factor'), ge=1)
    inconclusive_policy: InconclusivePolicy = Field(default_factory=_default('inconclusive_policy'))

    @field_validator("assumed_k")
    @classmethod
    def _non_negative_k(cls, value):
        values = value if isinstance(value, list) else [value]
        if not values or any(k < 0 for k in values):
            raise ValueError("assumed_k must be non-negative")
        return value

    def assumed_k_for(self, index: int) -> int:
        if isinstance(self.assumed_k, list):
            return self.assumed_k[min(index, len(self.assumed_k) - 1)]
        return self.assumed_k

    @property
    def resample_cap(self) -> int:
        return self.resample_factor * self.points


class Witness(BaseModel):
    """A point where |f| exceeds the zero tolerance."""
    x: float
    fx: float


class SegmentReport(BaseModel):
    a: float
    b: float
    M: int
    points_tested: int = Field(description="Points with a defined value (the counted m)")
    resampled: int = Field(description="Points redrawn because f was undefined there")
    duplicates: int = Field(default=0, description="Fresh indices mapping to an already tested point")
    outcome: PointwiseResult
    assumed_k: int
    error_probability: Optional[float] = None
    witness: Optional[Witness] = None


class CheckReport(BaseModel):
    """Full outcome of one comparison run."""
    schema_version: str = settings.REPORT_SCHEMA_VERSION
    verdict: FinalVerdict
    stage: Stage
    accepted: bool = Field(description="Binary grading decision")
    symbolic_verdict: Verdict
    difference: str = Field(description="Normal form of f_real - f_user")
    segments: list[SegmentReport] = Field(default_factory=list)
    witness: Optional[Witness] = Field(
        default=None,
        description=(
            "Point where f exceeds the zero tolerance; set on every pointwise INCORRECT. "
            "A symbolic INCORRECT has none when the constant difference is within tolerance"
        ),
    )
    error_bound: float = Field(ge=0.0, le=1.0)
    log_error_bound: Optional[float] = None
    seed: int

    def to_json(self) -> bytes:
        return orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_INDENT_2)


# =============================================================================
# Harness
# =============================================================================

class ZeroUniverse(BaseModel):
    """M abstract grid indices of which zero_indices play the zero locus."""
    model_config = ConfigDict(frozen=True)

    M: int = Field(ge=1)
    zero_indices: frozenset[int]

    @model_validator(mode="after")
    def _indices_in_range(self):
        if any(i < 0 or i >= self.M for i in self.zero_indices):
            raise ValueError(f"zero indices must lie in [0, {self.M})")
        return self

    @property
    def k(self) -> int:
        return len(self.zero_indices)

    @classmethod
    def first_k(cls, M: int, k: int) -> "ZeroUniverse":
        return cls(M=M, zero_indices=frozenset(range(k)))


class SimulationResult(BaseModel):
    M: int
    m: int
    k: int
    trials: int
    hits: int
    rate: float
    stderr: float
    seed: int
    workers: int = 1
    formula: Optional[float] = None
    z_score: Optional[float] = None
