from fastapi import APIRouter, HTTPException, Request, status
from typing import List

from app.analysis.bounds import EVALUATORS, evaluate_bound
from app.core.exceptions import NumericError
from app.schemas.api import BoundResponse

router = APIRouter()


def coerce(value: str):
    """Query strings arrive as text; evaluators take numbers except for fn"""
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            continue
    return value


@router.get("/", response_model=List[str])
async def list_bounds():
    """Names of the available evaluators"""
    return sorted(EVALUATORS)


@router.get("/{name}", response_model=BoundResponse)
async def get_bound(name: str, request: Request):
    """Evaluate a bound at the query parameters, e.g. /and_bound?n=1024&p=0.5"""
    if name not in EVALUATORS:
        raise HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=f"unknown bound '{name}'")
    params = {key: coerce(value) for key, value in request.query_params.items()}
    try:
        value = evaluate_bound(name, **params)
    except TypeError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except NumericError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception:
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail="Internal server error")
    return BoundResponse(name=name, params=params, value=value)
