"""
Weighted total of the training losses:

    total = l1 + dssim + ce + a * agg2d + b * agg3d
"""
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from semsplat.config import LossWeights
from semsplat.exceptions import NonFiniteLoss

CSV_COLUMNS = ("step", "l1", "dssim", "ce", "agg2d", "agg3d", "total")


@dataclass(frozen=True)
class LossParts:
    l1: float = 0.0
    dssim: float = 0.0
    ce: float = 0.0
    agg2d: float = 0.0
    agg3d: float = 0.0


@dataclass(frozen=True)
class LossReport:
    l1: float
    dssim: float
    ce: float
    agg2d: float
    agg3d: float
    total: float

    def as_row(self, step: int) -> Dict[str, Any]:
        """One training-log row, columns in ``CSV_COLUMNS`` order"""
        return {"step": step, **asdict(self)}


def total_loss(parts: LossParts, weights: LossWeights, step: Optional[int] = None) -> LossReport:
    """
    Raises:
        NonFiniteLoss: any part is NaN or infinite
    """
    values = asdict(parts)
    if not all(math.isfinite(v) for v in values.values()):
        raise NonFiniteLoss(values, step)
    total = parts.l1 + parts.dssim + parts.ce + weights.a * parts.agg2d + weights.b * parts.agg3d
    return LossReport(**values, total=total)
