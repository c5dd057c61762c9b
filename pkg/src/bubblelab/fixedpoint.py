"""Fixed-point cash arithmetic.

All cash amounts are Decimals quantized to 4 fractional digits with
round-half-even, so conservation checks are exact and replays are
bit-identical across platforms.
"""

from decimal import ROUND_HALF_EVEN, Decimal

CASH_QUANTUM = Decimal("0.0001")


def money(value) -> Decimal:
    """Coerce a number to the canonical cash representation."""
    if isinstance(value, float):
        value = repr(value)
    return Decimal(value).quantize(CASH_QUANTUM, rounding=ROUND_HALF_EVEN)


ZERO = money(0)
