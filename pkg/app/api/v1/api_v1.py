from fastapi import APIRouter

from app.api.v1.endpoints import profiles, simulations

router = APIRouter()


router.include_router(
    simulations.router,
    prefix="/simulations",
    tags=["Simulations"]
)

router.include_router(
    profiles.router,
    prefix="/profiles",
    tags=["Profiles"]
)
