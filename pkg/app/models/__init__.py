from app.models.matching import UNMATCHED, Matching
from app.models.permutation import AgentId, Permutation
from app.models.profile import PreferenceProfile

__all__ = ["AgentId", "Matching", "Permutation", "PreferenceProfile", "UNMATCHED"]
