import logging
import tempfile
from pathlib import Path

from fastapi import APIRouter, HTTPException, status

from app.core.exceptions import NumericError
from app.schemas.api import ExperimentResponse, FinalSummary
from app.schemas.experiment import ExperimentConfig
from app.services.experiment_service import run_experiment, to_builtin

router = APIRouter()
logger = logging.getLogger(__name__)


@router.post("/", response_model=ExperimentResponse)
def create_experiment(config: ExperimentConfig):
    """Run a small experiment synchronously and return its finals and metadata.

    Outputs go to a scratch directory that is removed after the response is built.
    """
    try:
        with tempfile.TemporaryDirectory(prefix="maclab-") as scratch:
            summary = run_experiment(config, Path(scratch))
            finals = [FinalSummary(**to_builtin(row)) for row in summary.finals.to_dict(orient="records")]
            return ExperimentResponse(
                variants=summary.variants,
                trace_count=len(summary.trace_files),
                finals=finals,
                metadata=summary.metadata,
            )
    except NumericError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception:
        logger.exception("experiment run failed")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail="Internal server error")
