"""
Records passed between projection, blending and the backward pass.
"""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy import sparse

from semsplat.camera.types import Camera
from semsplat.cloud.gaussians import ATTRIBUTES, GaussianCloud
from semsplat.decoder.mlp import DecoderGradients


@dataclass(frozen=True, eq=False)
class Projected2DGaussian:
    """One splat in screen space"""
    mean2d: np.ndarray
    cov2d: np.ndarray
    depth: float
    color: np.ndarray
    feature: np.ndarray
    opacity: float
    source_index: int


@dataclass(eq=False)
class ProjectedSplats:
    """
    Structure-of-arrays form of the projected splats of one view.

    Indexing and iteration yield ``Projected2DGaussian`` records, so the
    batch can be used wherever a list of splats is expected. ``aux`` keeps
    the projection intermediates the backward pass chains through.
    """
    means2d: np.ndarray        # P x 2
    cov2d: np.ndarray          # P x 2 x 2
    conics: np.ndarray         # P x 2 x 2, inverse of cov2d
    depths: np.ndarray         # P
    colors: np.ndarray         # P x 3
    features: np.ndarray       # P x F
    opacities: np.ndarray      # P
    source_index: np.ndarray   # P, int64
    aux: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return self.source_index.shape[0]

    def __getitem__(self, i: int) -> Projected2DGaussian:
        return Projected2DGaussian(
            mean2d=self.means2d[i],
            cov2d=self.cov2d[i],
            depth=float(self.depths[i]),
            color=self.colors[i],
            feature=self.features[i],
            opacity=float(self.opacities[i]),
            source_index=int(self.source_index[i]),
        )

    def __iter__(self) -> Iterator[Projected2DGaussian]:
        for i in range(len(self)):
            yield self[i]

    def take(self, index: np.ndarray) -> "ProjectedSplats":
        """Rows in the given order; intermediates follow"""
        return ProjectedSplats(
            means2d=self.means2d[index],
            cov2d=self.cov2d[index],
            conics=self.conics[index],
            depths=self.depths[index],
            colors=self.colors[index],
            features=self.features[index],
            opacities=self.opacities[index],
            source_index=self.source_index[index],
            aux={k: v[index] for k, v in self.aux.items()},
        )


@dataclass(frozen=True)
class TileRecord:
    """
    Pixel block [y0, y1) x [x0, x1) and the splats overlapping it, as
    positions into the depth-sorted ``ProjectedSplats`` (front to back).
    """
    y0: int
    y1: int
    x0: int
    x1: int
    splat_ids: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        return self.y1 - self.y0, self.x1 - self.x0


@dataclass(eq=False)
class BlendState:
    """
    Blending state of one tile as a flat list of (pixel, splat) pairs.

    Only pairs where the pixel lies inside the splat's 3-sigma footprint
    and is reached before its transmittance ran out are listed. Pairs are
    pixel-major, front to back within a pixel.
    """
    pixel: np.ndarray          # K, row-major position inside the tile
    splat: np.ndarray          # K, position into the tile's splat_ids
    d: np.ndarray              # K x 2, pixel - mean
    gauss: np.ndarray          # K
    raw_alpha: np.ndarray      # K, sigma * gauss
    alpha: np.ndarray          # K
    transmittance: np.ndarray  # K, before each splat
    weights: np.ndarray        # K
    starts: np.ndarray         # first pair of every covered pixel
    segment: np.ndarray        # K, index into starts
    num_pixels: int
    num_splats: int

    def weight_matrix(self) -> sparse.csr_array:
        """Blending weights as a sparse num_pixels x num_splats matrix"""
        return sparse.csr_array(
            (self.weights, (self.pixel, self.splat)),
            shape=(self.num_pixels, self.num_splats),
        )

    def pixel_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.pixel, weights=values, minlength=self.num_pixels)

    def splat_sum(self, values: np.ndarray) -> np.ndarray:
        return np.bincount(self.splat, weights=values, minlength=self.num_splats)

    def exclusive_prefix(self, values: np.ndarray) -> np.ndarray:
        """Per pair, the sum of ``values`` over the pairs in front of it at the same pixel"""
        before = np.cumsum(values) - values
        return before - before[self.starts][self.segment]

    def exclusive_suffix(self, values: np.ndarray) -> np.ndarray:
        """Per pair, the sum of ``values`` over the pairs behind it at the same pixel"""
        total = self.pixel_sum(values)
        return total[self.pixel] - self.exclusive_prefix(values) - values


@dataclass(eq=False)
class RenderOutput:
    """
    Rendered maps of one view and what the backward pass needs to replay
    the blending.

    Attributes:
        color_image: H x W x 3
        feature_map: H x W x F
        alpha_map: H x W, sum of blending weights
        splats: depth-sorted projected splats
        tiles: per-tile contributor lists
        visible: N bool, points that survived culling
        states: per-tile blending state kept for the backward pass,
            aligned with ``tiles`` (None for empty tiles); empty when
            the renderer kept nothing
    """
    color_image: np.ndarray
    feature_map: np.ndarray
    alpha_map: np.ndarray
    splats: ProjectedSplats
    tiles: List[TileRecord]
    visible: np.ndarray
    camera: Camera
    min_transmittance: float
    num_points: int
    states: List[Optional[BlendState]] = field(default_factory=list, repr=False)

    @property
    def height(self) -> int:
        return self.color_image.shape[0]

    @property
    def width(self) -> int:
        return self.color_image.shape[1]

    def tile_at(self, row: int, col: int) -> TileRecord:
        for tile in self.tiles:
            if tile.y0 <= row < tile.y1 and tile.x0 <= col < tile.x1:
                return tile
        raise IndexError(f"pixel ({row}, {col}) outside a {self.height}x{self.width} image")

    def contributions(self, row: int, col: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Contributors of one pixel in blending order.

        Returns:
            (source indices into the cloud, blending weights)
        """
        from semsplat.rasterizer.blending import blend_tile

        tile = self.tile_at(row, col)
        single = TileRecord(row, row + 1, col, col + 1, tile.splat_ids)
        state = blend_tile(self.splats, single, self.min_transmittance)
        return self.splats.source_index[tile.splat_ids[state.splat]], state.weights


@dataclass
class GradientBundle:
    """
    Gradients mirroring the cloud attribute by attribute.

    ``means2d`` holds the screen-space positional gradient used by the
    densification statistics; ``decoder`` is filled in by the trainer.
    """
    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray
    opacity_logits: np.ndarray
    sh_coeffs: np.ndarray
    features: np.ndarray
    means2d: np.ndarray
    decoder: Optional[DecoderGradients] = None

    @classmethod
    def zeros_like(cls, cloud: GaussianCloud) -> "GradientBundle":
        return cls(
            **{name: np.zeros_like(arr) for name, arr in cloud.arrays()},
            means2d=np.zeros((cloud.num_points, 2), dtype=cloud.dtype),
        )

    def arrays(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in ATTRIBUTES:
            yield name, getattr(self, name)

    def as_dict(self) -> Dict[str, np.ndarray]:
        return dict(self.arrays())

    def is_finite(self) -> bool:
        arrays = [arr for _, arr in self.arrays()] + [self.means2d]
        if self.decoder is not None:
            arrays += self.decoder.parameters()
        return all(np.all(np.isfinite(a)) for a in arrays)

