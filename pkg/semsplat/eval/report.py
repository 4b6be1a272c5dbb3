"""
Metric files: per-class IoU and per-view CSVs via pandas, summaries as JSON.
"""
import json
from pathlib import Path
from typing import Any, Dict, Sequence, Union

import pandas as pd

from semsplat.eval.metrics import MiouResult, ViewConsistencyReport
from semsplat.eval.timing import TimingReport

PathLike = Union[str, Path]


def write_class_iou(path: PathLike, result: MiouResult, class_names: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    result.to_frame(class_names).to_csv(path, index=False)
    return path


def write_view_report(path: PathLike, report: ViewConsistencyReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.per_view.to_csv(path, index=False)
    return path


def write_timing(path: PathLike, report: TimingReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"view_id": report.view_ids, "ms": report.per_view_ms}).to_csv(path, index=False)
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and value != value:
        return None
    return value


def write_summary(path: PathLike, summary: Dict[str, Any]) -> Path:
    """NaN values are written as null"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    clean = {k: (_jsonable(v) if not isinstance(v, dict) else {ik: _jsonable(iv) for ik, iv in v.items()})
             for k, v in summary.items()}
    path.write_text(json.dumps(clean, indent=2, ensure_ascii=False), encoding="utf-8")
    return path
