"""
Per-pixel MLP mapping rendered semantic features to class logits.

Default architecture F -> 32 (ReLU) -> C. ``hidden=0`` selects the purely
linear transfer layer F -> C.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from semsplat.exceptions import ShapeMismatch


@dataclass
class SemanticDecoder:
    """
    Layer weights (in x out) and biases. Hidden layers use ReLU; the last
    layer is affine.
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeMismatch("decoder needs one bias per weight matrix and at least one layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (W.shape[1],):
                raise ShapeMismatch(f"layer {i} bias shape {b.shape} does not match weights {W.shape}")
            if i and W.shape[0] != self.weights[i - 1].shape[1]:
                raise ShapeMismatch(f"layer {i} input {W.shape[0]} != previous output {self.weights[i - 1].shape[1]}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def hidden(self) -> int:
        return self.weights[0].shape[1] if len(self.weights) > 1 else 0

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def dtype(self) -> np.dtype:
        return self.weights[0].dtype

    @classmethod
    def create(
            cls,
            input_dim: int,
            num_classes: int,
            hidden: int = 32,
            seed: int = 0,
            dtype=np.float32,
    ) -> "SemanticDecoder":
        """Uniform +-1/sqrt(fan_in) weights, zero biases"""
        rng = np.random.default_rng(seed)
        dims = [input_dim, hidden, num_classes] if hidden > 0 else [input_dim, num_classes]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
            biases.append(np.zeros(fan_out, dtype=dtype))
        return cls(weights, biases)

    def parameters(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]

    def copy(self) -> "SemanticDecoder":
        return SemanticDecoder([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def astype(self, dtype) -> "SemanticDecoder":
        return SemanticDecoder([W.astype(dtype) for W in self.weights], [b.astype(dtype) for b in self.biases])


@dataclass
class DecoderGradients:
    weights: List[np.ndarray]
    biases: List[np.ndarray] = field(default_factory=list)

    def parameters(self) -> List[np.ndarray]:
        return [*self.weights, *self.biases]


def _check_features(features: np.ndarray, decoder: SemanticDecoder) -> None:
    if features.shape[-1] != decoder.input_dim:
        raise ShapeMismatch(
            f"feature map has {features.shape[-1]} channels, decoder expects {decoder.input_dim}",
            expected=decoder.input_dim, actual=features.shape[-1],
        )


def _forward(x: np.ndarray, decoder: SemanticDecoder) -> Tuple[np.ndarray, List[np.ndarray]]:
    activations = [x]
    h = x
    last = len(decoder.weights) - 1
    for i, (W, b) in enumerate(zip(decoder.weights, decoder.biases)):
        h = h @ W + b
        if i < last:
            h = np.maximum(h, 0.0)
        activations.append(h)
    return h, activations


def decode(features: np.ndarray, decoder: SemanticDecoder) -> np.ndarray:
    """
    Apply the MLP independently at every pixel.

    Args:
        features: ... x F (typically H x W x F)

    Returns:
        ... x C logits

    Raises:
        ShapeMismatch: channel count differs from the decoder input
    """
    _check_features(features, decoder)
    lead = features.shape[:-1]
    logits, _ = _forward(features.reshape(-1, decoder.input_dim), decoder)
    return logits.reshape(*lead, decoder.num_classes)


def decode_backward(
        features: np.ndarray,
        decoder: SemanticDecoder,
        dL_dlogits: np.ndarray,
) -> Tuple[np.ndarray, DecoderGradients]:
    """
    Gradients of a scalar loss through the decoder.

    Returns:
        (dL/dfeatures shaped like features, DecoderGradients)
    """
    _check_features(features, decoder)
    expected = features.shape[:-1] + (decoder.num_classes,)
    if dL_dlogits.shape != expected:
        raise ShapeMismatch(
            f"logit adjoint has shape {dL_dlogits.shape}, expected {expected}",
            expected=expected, actual=dL_dlogits.shape,
        )
    x = features.reshape(-1, decoder.input_dim)
    _, activations = _forward(x, decoder)
    g = dL_dlogits.reshape(-1, decoder.num_classes)

    d_weights: List[Optional[np.ndarray]] = [None] * len(decoder.weights)
    d_biases: List[Optional[np.ndarray]] = [None] * len(decoder.biases)
    for i in range(len(decoder.weights) - 1, -1, -1):
        if i < len(decoder.weights) - 1:
            # ReLU gate of layer i's output
            g = g * (activations[i + 1] > 0.0)
        d_weights[i] = activations[i].T @ g
        d_biases[i] = g.sum(axis=0)
        g = g @ decoder.weights[i].T
    return g.reshape(features.shape), DecoderGradients(d_weights, d_biases)
