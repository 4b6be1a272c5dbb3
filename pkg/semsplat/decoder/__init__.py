"""
semsplat Decoder - semantic feature map -> class logits

Quick Start:
    ```python
    from semsplat.decoder import SemanticDecoder, decode

    decoder = SemanticDecoder.create(input_dim=16, num_classes=4, hidden=32, seed=0)
    logits = decode(render_output.feature_map, decoder)   # H x W x 4
    labels = logits.argmax(axis=-1)
    ```
"""
from semsplat.decoder.mlp import DecoderGradients, SemanticDecoder, decode, decode_backward

__all__ = ["DecoderGradients", "SemanticDecoder", "decode", "decode_backward"]
