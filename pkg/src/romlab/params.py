"""Scale constants and the derived sizes shared by every module."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from romlab.errors import InvalidScale

# Defaults: n = 10^6, k = 3 gives t = 10^4, w = 50, N = 10^6.
DEFAULT_C = 0.5
DEFAULT_C1 = 0.05
DEFAULT_C2 = 0.005
DEFAULT_T_FACTOR = 100

_SNAP = 1e-9


def snap(x: float) -> float:
    """Round ``x`` to the nearest integer when it is one up to float noise.

    ``(10**6) ** (1/3)`` evaluates to ``99.99999999999997``; without snapping
    every ceiling of a power of ``n`` risks an off-by-one.
    """
    r = round(x)
    if abs(x - r) <= _SNAP * max(1.0, abs(x)):
        return float(r)
    return x


def ceil_snap(x: float) -> int:
    return math.ceil(snap(x))


def npow(n: int, exponent: float) -> float:
    """``n ** exponent`` with integer results snapped exactly."""
    return snap(float(n) ** exponent)


def _as_number(x) -> float | Fraction:
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class Params:
    n: int
    k: int
    c: float
    c1: float
    c2: float
    t_factor: int
    t: int
    w: int
    N: int
    w2: int
    num_blocks: int

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def log2_N(self) -> float:
        return math.log2(self.N)

    def block_of(self, j: int) -> int:
        """1-based index of the width-``w2`` block holding position ``j``."""
        return (j - 1) // self.w2 + 1


def derive_params(
    n: int,
    k: int,
    c: float = DEFAULT_C,
    c1: float = DEFAULT_C1,
    c2: float = DEFAULT_C2,
    t_factor: int = DEFAULT_T_FACTOR,
) -> Params:
    """Compute ``t, w, N, w2`` and the block count from the scale constants.

    All derived sizes are ceilings. Raises :class:`InvalidScale` when the
    constants do not fit at this ``n``: the sets must fit disjointly in
    ``[N]`` and ``[N]`` must fit in ``[n]``.
    """
    n, k, t_factor = int(n), int(k), int(t_factor)
    if n < 16:
        raise ValueError(f"n must be >= 16, got {n}")
    if k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    if not 0 < c <= 1:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if not 0 < c1 < 1:
        raise ValueError(f"c1 must lie in (0, 1), got {c1}")
    if not 0 < c2 < 1:
        raise ValueError(f"c2 must lie in (0, 1), got {c2}")
    if t_factor < 1:
        raise ValueError(f"t_factor must be a positive integer, got {t_factor}")

    t = ceil_snap(t_factor * npow(n, 1.0 / k))
    w = ceil_snap(float(c1) * npow(n, 1.0 - 3.0 / (2 * k)))
    cq = _as_number(c)
    if isinstance(cq, Fraction):
        N = math.ceil(Fraction(t * w) / cq)
    else:
        N = ceil_snap(t * w / cq)
    w2 = ceil_snap(float(c2) * npow(n, 1.0 - 2.0 / k))
    num_blocks = -(-n // w2)

    if t < 2 or t > n:
        raise InvalidScale(f"need 2 <= t <= n, got t = {t}, n = {n}")
    if N > n:
        raise InvalidScale(f"N = {N} > n = {n}: universe does not fit in the stream positions")
    if t * w > N:
        raise InvalidScale(f"t*w = {t * w} > N = {N}: disjoint sets do not fit in [N]")
    if w2 > n:
        raise InvalidScale(f"w2 = {w2} > n = {n}")
    return Params(n=n, k=k, c=c, c1=c1, c2=c2, t_factor=t_factor,
                  t=t, w=w, N=N, w2=w2, num_blocks=num_blocks)


def default_params(n: int = 10**6, k: int = 3) -> Params:
    return derive_params(n, k)
