from fastapi import FastAPI

from app import __version__
from app.api.api_router import api_router
from app.core.config import settings
from app.core.extensions import add_extensions
from app.core.logger import configure_logging

configure_logging(settings.log_level)

app = FastAPI(title=settings.app_name, version=__version__)


# Sanity check
@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


# Add extensions
add_extensions(app)

# Include API router
app.include_router(api_router, prefix="/api")

#  Api documentation paths
# Swagger UI documentation on /docs
# ReDoc documentation on /redoc
