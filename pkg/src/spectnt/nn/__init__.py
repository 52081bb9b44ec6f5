from spectnt.nn.attention import FeedForward, MultiHeadSelfAttention, TransformerEncoder
from spectnt.nn.conv import Conv2d, ConvLayerNorm, ResidualUnit
from spectnt.nn.layers import Dropout, LayerNorm, Linear
from spectnt.nn.module import Module, param_count, parameter, trunc_normal

__all__ = [
    "Conv2d",
    "ConvLayerNorm",
    "Dropout",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "Module",
    "MultiHeadSelfAttention",
    "ResidualUnit",
    "TransformerEncoder",
    "param_count",
    "parameter",
    "trunc_normal",
]
