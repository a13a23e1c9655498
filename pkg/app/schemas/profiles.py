from __future__ import annotations

from pydantic import BaseModel, Field


class AdversarialRequest(BaseModel):
    n: int = Field(..., ge=2, le=4096)
    k: int = Field(..., ge=2)


class AdversarialResponse(BaseModel):
    n: int
    k: int
    true_profile: str
    approx_profile: str
    identity_blocking_pairs: int
    lower_bound: int
    kendall_max: int
    approx_stable: bool
