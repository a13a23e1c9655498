from enum import Enum


class Side(str, Enum):
    A = "A"
    B = "B"

    @property
    def other(self) -> "Side":
        return Side.B if self is Side.A else Side.A


class EvolutionMode(str, Enum):
    TWO_SIDED = "two_sided"
    ONE_SIDED_B = "one_sided_b"


class MatcherKind(str, Enum):
    SIMPLE = "simple"
    ONE_SIDED = "one_sided"
    INTERLEAVED = "interleaved"
    STATIC_GS = "static_gs"


class CriticalFlag(str, Enum):
    MATCH_SWAP = "match_swap"
    BEST_UNPROPOSED_SWAP = "best_unproposed_swap"
