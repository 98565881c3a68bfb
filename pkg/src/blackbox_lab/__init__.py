"""Black-box complexity laboratory for spanning-tree and shortest-path problems."""
from .core import (STAR, BiCriteria, Capability, Problem, RankingUnbiasedK, RankingUnrestricted,
                   RunRecord, Session, UnbiasedK, Unrestricted, run)

__all__ = ["STAR", "BiCriteria", "Capability", "Problem", "RankingUnbiasedK", "RankingUnrestricted",
           "RunRecord", "Session", "UnbiasedK", "Unrestricted", "run"]
