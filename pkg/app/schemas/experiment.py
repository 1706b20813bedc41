from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Dict, List, Optional

from app.core.config import settings

EXPERIMENT_KINDS = ("coop", "fedexp3", "fedoco", "matching", "chain")
KIND_ALGORITHMS = {
    "coop": ("cftrl", "dftrl", "exp3_coop", "center_exp3"),
    "fedexp3": ("fedexp3", "exp3"),
    "fedoco": ("fedoco",),
    "matching": ("greedy", "random"),
    "chain": ("chain",),
}
BANDIT_ENVIRONMENTS = ("bernoulli_linear", "federated_activation", "ratings", "explicit")
OCO_ENVIRONMENTS = ("oco_linear", "oco_quadratic")


def split_list(value: Any) -> Any:
    """Accept 'a, b, c' from INI files as a list"""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class TopologySpec(BaseModel):
    """Schema for the [topology] section"""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(default="complete", pattern="^(complete|r_regular|star|grid|erdos_renyi|rgg)$")
    n_agents: Optional[int] = Field(default=None, ge=1)
    degree: Optional[int] = Field(default=None, ge=0)
    rows: Optional[int] = Field(default=None, ge=1)
    cols: Optional[int] = Field(default=None, ge=1)
    radius: Optional[float] = Field(default=None, gt=0)
    edge_probability: Optional[float] = Field(default=None, ge=0, le=1)
    delay: int = Field(default=0, ge=0, description="Per-edge delay in rounds")
    seed: int = Field(default=0, description="Seed for random topologies")


class EnvironmentSpec(BaseModel):
    """Schema for the [environment] section"""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(
        default="bernoulli_linear",
        pattern="^(bernoulli_linear|federated_activation|ratings|explicit|oco_linear|oco_quadratic)$",
    )
    n_arms: Optional[int] = Field(default=None, ge=2)
    path: Optional[str] = None
    dimension: Optional[int] = Field(default=None, ge=1)
    radius: float = Field(default=1.0, gt=0)


class AlgorithmSpec(BaseModel):
    """Schema for the [algorithm] section"""
    model_config = ConfigDict(extra="forbid")

    learning_rate: Optional[float] = Field(default=None, gt=0)
    skip_alpha: float = Field(default=0.0, ge=0, lt=1)
    value_fn: str = Field(default="or", pattern="^(or|and)$")
    n_nodes: Optional[int] = Field(default=None, ge=2)
    prior: Optional[float] = Field(default=None, ge=0, le=1)

    @field_validator("n_nodes")
    @classmethod
    def validate_n_nodes(cls, v):
        if v is not None and v % 2:
            raise ValueError("n_nodes must be even")
        return v


class PlotSpec(BaseModel):
    """Schema for a [plot] section"""
    model_config = ConfigDict(extra="forbid")

    source: str = Field(default="summary", pattern="^(summary|finals)$")
    x: str = "t"
    y: str = "avg_regret_mean"
    series: Optional[str] = "algorithm"
    filter_column: Optional[str] = None
    filter_value: Optional[str] = None
    log_x: bool = False
    log_y: bool = False
    title: Optional[str] = None
    xlabel: Optional[str] = None
    ylabel: Optional[str] = None
    overlays: List[str] = Field(default_factory=list, description="Curve CSVs with columns x, value")
    output: str = "plot.svg"

    @field_validator("overlays", mode="before")
    @classmethod
    def split_overlays(cls, v):
        return split_list(v)

    @model_validator(mode="after")
    def validate_filter(self):
        if (self.filter_column is None) != (self.filter_value is None):
            raise ValueError("filter_column and filter_value go together")
        return self


class ExperimentConfig(BaseModel):
    """A complete, serializable experiment description"""
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(..., pattern="^(coop|fedexp3|fedoco|matching|chain)$")
    algorithms: List[str] = Field(default_factory=list)
    horizon: Optional[int] = Field(default=None, ge=1)
    seeds: List[int] = Field(default_factory=lambda: [0])
    stride: int = Field(default=1, ge=1)
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    workers: int = Field(default=1, ge=1)
    title: Optional[str] = None
    allow_long_horizon: bool = False
    topology: TopologySpec = Field(default_factory=TopologySpec)
    environment: EnvironmentSpec = Field(default_factory=EnvironmentSpec)
    algorithm: AlgorithmSpec = Field(default_factory=AlgorithmSpec)
    sweep: Dict[str, List[str]] = Field(default_factory=dict)
    plot: Optional[PlotSpec] = None

    @field_validator("algorithms", mode="before")
    @classmethod
    def split_algorithms(cls, v):
        return split_list(v)

    @field_validator("seeds", mode="before")
    @classmethod
    def expand_seeds(cls, v):
        """Accept '0, 1, 2' or an inclusive range '0..9'"""
        if isinstance(v, str):
            seeds: List[int] = []
            for item in split_list(v):
                if ".." in item:
                    low, high = item.split("..", 1)
                    seeds.extend(range(int(low), int(high) + 1))
                else:
                    seeds.append(int(item))
            return seeds
        return v

    @field_validator("sweep", mode="before")
    @classmethod
    def split_sweep(cls, v):
        if isinstance(v, dict):
            return {key: split_list(values) for key, values in v.items()}
        return v

    @model_validator(mode="after")
    def validate_experiment(self):
        allowed = KIND_ALGORITHMS[self.kind]
        if not self.algorithms:
            self.algorithms = list(allowed)
        unknown = [a for a in self.algorithms if a not in allowed]
        if unknown:
            raise ValueError(f"algorithms {unknown} are not valid for kind '{self.kind}'; choose from {list(allowed)}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")

        if self.kind in ("coop", "fedexp3", "fedoco"):
            if self.horizon is None and self.environment.kind not in ("ratings", "explicit"):
                raise ValueError("horizon is required for this experiment kind")
            if self.horizon and self.horizon > settings.HORIZON_CAP and not self.allow_long_horizon:
                raise ValueError(f"horizon exceeds {settings.HORIZON_CAP}; set allow_long_horizon = true")
            expected = OCO_ENVIRONMENTS if self.kind == "fedoco" else BANDIT_ENVIRONMENTS
            if self.environment.kind not in expected:
                raise ValueError(f"environment '{self.environment.kind}' does not fit kind '{self.kind}'")
        if self.kind in ("matching", "chain"):
            if self.algorithm.n_nodes is None or self.algorithm.prior is None:
                raise ValueError("matching experiments need algorithm.n_nodes and algorithm.prior")
        for key in self.sweep:
            section, _, name = key.partition(".")
            if section not in ("experiment", "topology", "environment", "algorithm") or not name:
                raise ValueError(f"sweep key '{key}' must look like section.field")
        return self
