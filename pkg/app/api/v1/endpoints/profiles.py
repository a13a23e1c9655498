import logging

from fastapi import APIRouter, HTTPException

from app.core.exceptions import SimulationError
from app.schemas.profiles import AdversarialRequest, AdversarialResponse
from app.services import harness, profile_io
from app.services.generators import adversarial_profile

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/adversarial", response_model=AdversarialResponse)
def adversarial(request: AdversarialRequest):
    try:
        true, approx = adversarial_profile(request.n, request.k)
        report = harness.tightness_report(request.n, request.k)
    except SimulationError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return AdversarialResponse(
        n=request.n,
        k=request.k,
        true_profile=profile_io.dumps(true),
        approx_profile=profile_io.dumps(approx),
        identity_blocking_pairs=report.blocking_pairs,
        lower_bound=report.lower_bound,
        kendall_max=report.kendall_max,
        approx_stable=report.approx_stable,
    )
