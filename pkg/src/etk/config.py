"""Shared numerical tolerances.

Every comparison threshold used across the package lives here so tests stay
deterministic and a single override point exists for the CLI ``--tol`` flag.
"""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    compare: float = 1e-9
    hermitian: float = 1e-10
    solver: float = 1e-12
    sdp_gap: float = 1e-8
    sdp_feas: float = 1e-8
    sdp_max_iter: int = 200
    # singular values >= rank_rel * largest count toward Schmidt rank
    rank_rel: float = 1e-8
    # minimum oracle value accepted as "W is feasible on S_k"
    witness_eps: float = 1e-7
    psd_floor: float = 1e-9

    def with_overrides(self, **kw) -> "Tolerances":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT = Tolerances()
