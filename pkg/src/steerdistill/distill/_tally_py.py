"""Vectorized numpy tally of Monte Carlo distillation trials.

``u`` holds one uniform draw per (trial, filtered copy). A draw selects the
joint filter outcome by inverse CDF over the plan's joint outcomes, so
branch 0 is "every participating party kept the copy". With two filtering
parties the branch index encodes (o_B, o_C) as ``2*o_B + o_C``.

Returns ``(successes, retained, zero_survivors)``:

* successes: trials with at least one jointly kept copy
* retained: kept copies summed over trials, counting the unfiltered last
  copy on failed trials
* zero_survivors: failed trials in which the per-party last-copy rule keeps
  nothing (one party saw only discards, the other did not)
"""

from __future__ import annotations

import numpy as np


def tally_block(u: np.ndarray, cdf: np.ndarray, two_party: bool) -> tuple[int, int, int]:
    idx = (u[:, :, None] >= cdf[None, None, :-1]).sum(axis=2)
    good = (idx == 0).sum(axis=1)
    ok = good > 0
    successes = int(ok.sum())
    retained = int(good[ok].sum()) + int((~ok).sum())
    zero = 0
    if two_party:
        b_all_one = np.all((idx >> 1) == 1, axis=1)
        c_all_one = np.all((idx & 1) == 1, axis=1)
        zero = int((~ok & ~(b_all_one & c_all_one)).sum())
    return successes, retained, zero
