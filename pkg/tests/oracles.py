"""Independent reference computations used by several test modules."""

import numpy as np
from scipy import stats


def occupancy_clicks(probs, N, eff, dark=0.0):
    """Click distribution by tracking the number of occupied bins photon by photon.

    Shares no code path with the moment-based formula in the package.
    """
    nmax = len(probs) - 1
    dist = np.zeros(N + 1)
    dist[0] = 1.0
    out = probs[0] * dist.copy()
    for n in range(1, nmax + 1):
        new = dist * (1 - eff)  # photon lost
        o = np.arange(N + 1)
        new += dist * eff * o / N  # lands in an occupied bin
        new[1:] += dist[:-1] * eff * (N - o[:-1]) / N  # opens a new bin
        dist = new
        out += probs[n] * dist
    if dark > 0:
        pd = -np.expm1(-dark)
        mixed = np.zeros(N + 1)
        for o, w in enumerate(out):
            extra = stats.binom.pmf(np.arange(N - o + 1), N - o, pd)
            mixed[o:] += w * extra
        out = mixed
    return out


def pooled_chisquare(counts, probs, min_expected=5.0):
    """Goodness-of-fit p-value, pooling adjacent low-expectation outcomes."""
    counts = np.asarray(counts, dtype=float)
    expected = counts.sum() * np.asarray(probs, dtype=float)
    keep = expected > 0
    if np.any(counts[~keep] > 0):
        return 0.0
    obs, exp = counts[keep], expected[keep]
    pooled_o, pooled_e = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs, exp):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0:
        if pooled_e:
            pooled_o[-1] += acc_o
            pooled_e[-1] += acc_e
        else:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
    if len(pooled_e) < 2:
        return 1.0
    return float(stats.chisquare(pooled_o, pooled_e).pvalue)
