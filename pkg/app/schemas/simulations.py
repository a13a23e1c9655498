from __future__ import annotations

from pydantic import BaseModel

from app.schemas.run import RunManifest


class RunResponse(BaseModel):
    manifest: RunManifest
    timeseries: list[dict[str, int]]
