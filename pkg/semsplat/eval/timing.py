import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from semsplat.camera.types import Camera
from semsplat.cloud.gaussians import GaussianCloud
from semsplat.rasterizer.blending import DEFAULT_TILE_SIZE, render

logger = logging.getLogger(__name__)


@dataclass
class TimingReport:
    """Wall-clock render times in milliseconds, warm-up excluded"""
    view_ids: List[str] = field(default_factory=list)
    per_view_ms: List[float] = field(default_factory=list)

    @property
    def mean_ms(self) -> Optional[float]:
        return float(np.mean(self.per_view_ms)) if self.per_view_ms else None

    @property
    def min_ms(self) -> Optional[float]:
        return float(np.min(self.per_view_ms)) if self.per_view_ms else None

    @property
    def max_ms(self) -> Optional[float]:
        return float(np.max(self.per_view_ms)) if self.per_view_ms else None

    def summary(self) -> Dict[str, Optional[float]]:
        return {
            "num_views": len(self.per_view_ms),
            "mean_ms": self.mean_ms,
            "min_ms": self.min_ms,
            "max_ms": self.max_ms,
        }


def timing_report(
        cloud: GaussianCloud,
        cameras: Sequence[Camera],
        tile_size: int = DEFAULT_TILE_SIZE,
        threads: int = 1,
) -> TimingReport:
    """
    Render every camera once and time it. The first render only warms up
    and is discarded, so one camera gives an empty report.
    """
    report = TimingReport()
    for i, camera in enumerate(cameras):
        start = time.perf_counter()
        render(cloud, camera, tile_size=tile_size, threads=threads)
        elapsed = (time.perf_counter() - start) * 1000.0
        if i == 0:
            continue
        report.view_ids.append(camera.name)
        report.per_view_ms.append(elapsed)
    if report.per_view_ms:
        logger.info("rendered %d views: mean %.1f ms (min %.1f, max %.1f)",
                    len(report.per_view_ms), report.mean_ms, report.min_ms, report.max_ms)
    return report
