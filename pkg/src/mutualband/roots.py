"""Bracketed bisection with geometric bracket growth.

Every root used by the band construction sits on a provably monotone stretch
of a continuous function, so plain bisection on a sign-changing bracket is
both sufficient and the most robust choice.  Brackets that are not known in
advance are grown geometrically (doubling) to the right, or shrunk
geometrically toward zero on the left; the left endpoint is floored at
1e-300 because several of the bracketed functions have an integrable
singularity at x = 0.
"""

from __future__ import annotations

from typing import Callable

from .errors import ConvergenceFailure

X_FLOOR = 1e-300


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    xtol: float = 1e-12,
    ftol: float = 0.0,
    max_iter: int = 1200,
) -> float:
    """Bisection root of f on [lo, hi], which must bracket a sign change.

    Stops when the bracket width falls below xtol * max(1, |mid|); when
    ftol > 0 iteration continues past that point (down to the resolution of
    float64) until |f(mid)| <= ftol, which matters where f has a very steep
    slope at the root.  Raises ConvergenceFailure if the inputs do not
    bracket a root or if ftol cannot be met within max_iter iterations.

    max_iter must cover roots arbitrarily close to the 1e-300 left floor:
    an O(1) starting bracket needs about 1030 halvings to narrow that far,
    which happens in practice when gamma -> 1 flattens the marginal-value
    curve and sends the call edge toward zero.
    """
    if not (lo < hi):
        raise ConvergenceFailure(f"empty bracket [{lo}, {hi}]")
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo < 0.0) == (fhi < 0.0):
        raise ConvergenceFailure(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )
    mid = 0.5 * (lo + hi)
    fmid = flo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # bracket exhausted at float resolution
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        width_ok = (hi - lo) <= xtol * max(1.0, abs(mid))
        if width_ok and (ftol <= 0.0 or abs(fmid) <= ftol):
            # With an f-certificate, return the point that earned it; the
            # fresh bracket midpoint sits half a width away, which on a
            # steep slope is enough to lose |f| <= ftol again.
            return mid if ftol > 0.0 else 0.5 * (lo + hi)
    if ftol > 0.0 and abs(fmid) > ftol:
        raise ConvergenceFailure(
            f"bisection stalled at width {hi - lo:.3e} with |f|={abs(fmid):.3e} > ftol={ftol:.3e}"
        )
    return mid if ftol > 0.0 else 0.5 * (lo + hi)


def grow_bracket_right(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    max_doublings: int = 200,
) -> tuple[float, float]:
    """Expand [lo, hi] to the right by doubling its width until f changes sign.

    f(lo) fixes the reference sign; returns the first expanded bracket with
    f(hi) on the other side (or exactly zero).
    """
    flo = f(lo)
    width = hi - lo
    if width <= 0.0:
        raise ConvergenceFailure(f"bad initial bracket [{lo}, {hi}]")
    for _ in range(max_doublings):
        fhi = f(hi)
        if fhi == 0.0 or (fhi < 0.0) != (flo < 0.0):
            return lo, hi
        width *= 2.0
        hi = lo + width
    raise ConvergenceFailure(f"no sign change right of {lo} after {max_doublings} doublings")


def shrink_bracket_left(
    f: Callable[[float], float],
    hi: float,
    *,
    factor: float = 0.5,
    floor: float = X_FLOOR,
    max_halvings: int = 2000,
) -> tuple[float, float]:
    """Walk lo = hi * factor^k toward 0 until f(lo) differs in sign from f(hi).

    Used on functions diverging at 0+; the floor guards the evaluation
    against reaching x = 0 exactly.
    """
    fhi = f(hi)
    lo = hi * factor
    for _ in range(max_halvings):
        if lo < floor:
            lo = floor
        flo = f(lo)
        if flo == 0.0 or (flo < 0.0) != (fhi < 0.0):
            return lo, hi
        if lo <= floor:
            break
        lo *= factor
    raise ConvergenceFailure(f"no sign change in ({floor}, {hi})")
