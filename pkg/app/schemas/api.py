from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class BoundResponse(BaseModel):
    """Schema for an evaluated analytic bound"""
    name: str = Field(..., description="Evaluator name")
    params: Dict[str, Any] = Field(default_factory=dict, description="Parameters it was evaluated at")
    value: float = Field(..., description="Bound value")


class SpectrumResponse(BaseModel):
    """Schema for the spectral summary of a topology"""
    kind: str
    n_agents: int
    n_edges: int
    laplacian_eigenvalues: List[float]
    algebraic_connectivity: float = Field(..., description="Second-smallest Laplacian eigenvalue")
    independence_number: int
    independence_exact: bool = Field(..., description="False when the greedy lower bound was used")
    sigma2_gossip: Optional[float] = Field(default=None, description="sigma_2 of the max-degree gossip matrix")


class FinalSummary(BaseModel):
    variant: str
    algorithm: str
    metric: str
    mean: float
    std: float
    count: int


class ExperimentResponse(BaseModel):
    """Schema for a finished synchronous run"""
    variants: List[str]
    trace_count: int
    finals: List[FinalSummary]
    metadata: Dict[str, Any]
