"""Root bracketing helper for the moment-ratio equations."""

from __future__ import annotations

_MAX_ITERS = 200


def bisect_monotone(fn, bracket, tol):
    """Root of a monotone function on a bracket by bisection.

    Orientation is detected from the endpoint values.  If the root lies
    outside the attainable range, returns the nearer endpoint and a flag
    ("lo" or "hi"); otherwise the flag is None.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo, None
    if fhi == 0.0:
        return hi, None
    if flo > 0.0 and fhi > 0.0:
        return (lo, "lo") if flo < fhi else (hi, "hi")
    if flo < 0.0 and fhi < 0.0:
        return (lo, "lo") if flo > fhi else (hi, "hi")
    increasing = fhi > flo
    for _ in range(_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or (hi - lo) < tol:
            return mid, None
        if (fm < 0.0) == increasing:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), None
