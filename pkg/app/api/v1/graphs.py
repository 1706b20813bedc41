from fastapi import APIRouter, HTTPException, status

from app.net.graph import build_topology, max_degree_gossip, spectral_summary
from app.schemas.api import SpectrumResponse
from app.schemas.experiment import TopologySpec

router = APIRouter()


@router.post("/spectrum", response_model=SpectrumResponse)
async def graph_spectrum(topology: TopologySpec):
    """Laplacian spectrum, max-degree gossip sigma_2 and independence number of a topology"""
    try:
        graph = build_topology(
            topology.kind,
            n_agents=topology.n_agents,
            degree=topology.degree,
            rows=topology.rows,
            cols=topology.cols,
            radius=topology.radius,
            edge_probability=topology.edge_probability,
            delay=topology.delay,
            seed=topology.seed,
        )
        summary = spectral_summary(graph, max_degree_gossip(graph))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception:
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail="Internal server error")
    return SpectrumResponse(kind=topology.kind, n_agents=graph.n_agents, n_edges=len(graph.edges), **summary.as_dict())
