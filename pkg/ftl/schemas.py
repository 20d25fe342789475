import datetime
from enum import Enum
from typing import Dict, List, Optional, Tuple
import numpy as np
from pydantic import BaseModel, Field, root_validator, validator

Point = Tuple[complex, complex]


def as_point(z) -> Point:
    return (complex(z[0]), complex(z[1]))


class Record(BaseModel):
    """base for computed results: immutable, may hold complex values"""

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False
        json_encoders = {
            complex: lambda c: [c.real, c.imag],
            np.ndarray: lambda a: a.tolist(),
        }


class HFamily(str, Enum):
    constant = "constant"
    loglog = "loglog"
    powerlog = "powerlog"


class HSpec(BaseModel):
    family: HFamily = Field(HFamily.loglog, example="loglog")
    sigma: float = Field(1.0, example=4.0)

    @validator("sigma")
    def sigma_positive(cls, value):
        if value <= 0:
            raise ValueError("sigma must be positive")
        return value

    def __call__(self, x):
        """evaluate on (0, 1]; arguments above 1 are clamped to 1, 0 maps to +inf"""
        x = np.minimum(np.asarray(x, dtype=float), 1.0)
        with np.errstate(divide="ignore"):
            log_inv = -np.log(x)
        if self.family == HFamily.constant:
            out = np.ones_like(x)
        elif self.family == HFamily.loglog:
            out = 1.0 + np.log1p(log_inv)
        else:
            out = (1.0 + log_inv) ** self.sigma
        out = np.maximum(out, 1.0)
        return float(out) if out.ndim == 0 else out

    def check_shape(self, points: int = 200) -> bool:
        grid = np.logspace(-300, 0, points)
        values = self(grid)
        if np.any(values < 1.0) or np.any(np.diff(values) > 0):
            return False
        if self.family != HFamily.constant and not values[0] > values[-1]:
            return False
        return True


class RegionFamily(str, Enum):
    alpha = "alpha"
    comparable = "comparable"
    broadened = "broadened"


class RegionSpec(BaseModel):
    family: RegionFamily = Field(RegionFamily.broadened, example="broadened")
    alpha: float = Field(1.0, example=1.0)
    h1: HSpec = HSpec()
    h2: HSpec = HSpec()

    @validator("alpha")
    def alpha_positive(cls, value):
        if value <= 0:
            raise ValueError("alpha must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def h_shape(cls, values):
        for name in ("h1", "h2"):
            if not values[name].check_shape():
                raise ValueError(
                    f"{name} must map (0,1] into [1,inf) and be nonincreasing"
                )
        return values


class PatchSpec(BaseModel):
    theta_half: float = Field(0.5, example=0.5)
    z2_half: float = Field(0.5, example=0.5)
    resolution: int = Field(9, example=9)
    tube_cap: float = Field(0.25, example=0.25)
    chart_tolerance: float = Field(1e-10, example=1e-10)
    chart_iterations: int = Field(25, example=25)


class Tolerances(BaseModel):
    type_tol: float = Field(1e-8, example=1e-8)
    cond_max: float = Field(1e12, example=1e12)
    boundary_tol: float = Field(1e-10, example=1e-10)


class SliceSpec(BaseModel):
    tangential_half: float = Field(0.05, example=0.05)
    tangential_points: int = Field(21, example=21)
    depth_min: float = Field(1e-6, example=1e-6)
    depth_max: float = Field(1e-2, example=1e-2)
    depth_points: int = Field(21, example=21)


class SubsequenceRule(str, Enum):
    doubling = "doubling"
    power = "power"


class CounterexampleParams(BaseModel):
    stages: int = Field(3, example=3)
    rule: SubsequenceRule = Field(SubsequenceRule.doubling, example="doubling")
    n0: int = Field(16, example=16)
    r0: float = Field(0.1, example=0.1)
    max_halvings: int = Field(3, example=3)
    candidates: int = Field(10000, example=10000)
    cover_samples: int = Field(1000, example=1000)
    w_per_center: int = Field(20, example=20)
    truncation: float = Field(4.0, example=4.0)
    patch_theta: float = Field(40.0, example=40.0)
    patch_z2: float = Field(1.0, example=1.0)
    g_bound_n: List[int] = Field([8, 16, 32, 64], example=[8, 16, 32, 64])
    g_samples: int = Field(1000, example=1000)
    g_excess_cap: float = Field(1.0, example=1.0)
    product_samples: int = Field(1000, example=1000)
    base_points: int = Field(10, example=10)
    scales: List[float] = Field([1e-2, 1e-3, 1e-4], example=[1e-2, 1e-3, 1e-4])
    low_threshold: float = Field(1e-6, example=1e-6)
    high_threshold: float = Field(0.1, example=0.1)
    zero_tolerance: float = Field(1e-9, example=1e-9)
    h1: HSpec = HSpec(family=HFamily.powerlog, sigma=4.0)
    h2: HSpec = HSpec(family=HFamily.powerlog, sigma=4.0)

    @validator("stages")
    def stages_positive(cls, value):
        if value < 1:
            raise ValueError("at least one stage is required")
        return value

    @validator("n0")
    def n0_large_enough(cls, value):
        if value < 2:
            raise ValueError("n0 must be at least 2")
        return value

    def n_k(self, k: int) -> int:
        """
        degree of stage k, counted from 1. The power rule is m^8 with m = k + 1,
        since m = 1 would give n = 1 and eps = 1.
        """
        if self.rule == SubsequenceRule.doubling:
            return self.n0 * 2 ** (k - 1)
        return (k + 1) ** 8

    def schedule(self) -> List[int]:
        return [self.n_k(k) for k in range(1, self.stages + 1)]

    @staticmethod
    def epsilon(n: int) -> float:
        return n ** -0.25

    @staticmethod
    def gamma(n: int) -> float:
        return n ** (-4.0 / 3.0)

    def tail_bound(self) -> float:
        """bound on the sum of epsilon over the stages past the configured ones"""
        last = self.stages
        if self.rule == SubsequenceRule.doubling:
            ratio = 2 ** -0.25
            return self.epsilon(self.n_k(last)) * ratio / (1 - ratio)
        # epsilon(n_k) = (k+1)^-2, tail bounded by the integral from k+1
        return 1.0 / (last + 1)

    def region(self) -> RegionSpec:
        return RegionSpec(family=RegionFamily.broadened, h1=self.h1, h2=self.h2)


class RunConfig(BaseModel):
    preset: str = Field("egg-m2", example="egg-m2")
    seed: int = Field(20240611, example=20240611)
    out_dir: str = Field("out", example="out")
    k_max: int = Field(8, example=8)
    tolerances: Tolerances = Tolerances()
    patch: PatchSpec = PatchSpec()
    region: RegionSpec = RegionSpec()
    slice: SliceSpec = SliceSpec()
    counterexample: CounterexampleParams = CounterexampleParams()

    @validator("seed")
    def seed_is_64_bit(cls, value):
        if not 0 <= value < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        return value


class TypeReport(Record):
    point: Point
    tau_z: int = Field(..., example=4)
    lambda_values: List[float] = Field(..., example=[0.0, 0.0, 4.0])
    tolerance: float = Field(..., example=1e-8)


class PointGeometry(Record):
    z: Point
    pi_z: Point
    delta: float = Field(..., example=1e-4)
    delta_n: float = Field(..., example=1e-4)
    tau_z: Optional[int] = None
    D: Optional[float] = None


class RegionVerdict(Record):
    family: RegionFamily
    cond1: bool
    cond2: bool
    verdict: bool
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float
    geometry: PointGeometry


class Packing(Record):
    r: float = Field(..., example=0.1)
    radius: float = Field(..., example=1e-4)
    centers: List[Point]
    params: List[Tuple[float, float, float]]
    K: Optional[float] = None
    # candidate index -> accepted center index that blocked it (-1 when accepted)
    maximality_certificate: List[int]
    candidate_count: int


class ZeroRecord(Record):
    center: Point
    center_index: int
    n: int
    r: float
    w_nr: Point
    winding_number: int
    contour_points: int
    distance_to_center: float
    projection_deviation: float
    delta: float
    empirical_C: float
    residual: float
    geometry: PointGeometry
    region_membership: Dict[str, bool] = {}
    delta_lower_check: Optional[bool] = None


class StageRecord(Record):
    index: int
    n: int
    r: float
    epsilon: float
    gamma: float
    A: float
    K: float
    center_count: int
    halvings: int
    membership_pairs: int
    membership_passed: int
    empirical_C: float
    h1_needed: float = 0.0
    h2_needed: float = 0.0
    packing: Packing
    zeros: List[ZeroRecord]


class OscillationRow(Record):
    base: Point
    scale: float
    low_value: Optional[float]
    low_delta: Optional[float]
    low_stage: Optional[int]
    high_value: Optional[float]
    high_delta: Optional[float]
    control: bool = False
    passed: bool


class SuiteResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    values: Dict[str, float] = {}


class RunManifest(Record):
    created_at: datetime.datetime
    command: str
    config: RunConfig
    tau: int
    subsequence_tail_bound: float
    stages: List[StageRecord] = []
    g_maxima: Dict[int, float] = {}
    shell_counts: List[int] = []
    shell_exponent: Optional[float] = None
    oscillation: List[OscillationRow] = []
    suites: List[SuiteResult] = []

    @property
    def passed(self) -> bool:
        return all(suite.passed for suite in self.suites)


class SelftestReport(Record):
    created_at: datetime.datetime
    seed: int
    suites: List[SuiteResult] = []

    @property
    def passed(self) -> bool:
        return all(suite.passed for suite in self.suites)
