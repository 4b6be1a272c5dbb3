"""
semsplat Spatial Index - exact kNN over cloud positions

Quick Start:
    ```python
    from semsplat.spatial_index import build, knn

    index = build(cloud.positions)
    neighbours = knn(index, cloud.positions[0], k=5, exclude=0)
    ```
"""
from semsplat.spatial_index.index import SpatialIndex, build, knn, knn_batch

__all__ = ["SpatialIndex", "build", "knn", "knn_batch"]
