"""Network layers, blocks and the assembled DenseRAUnet."""

from .blocks import (EDB, RAU, SCSE, ConvBNReLU, DecoderModule, DenseBlock, DenseLayer,
                     Transition, decoder_module, dense_block, edb, fuse_max, rau, scse,
                     zero_weights)
from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .functional import avg_pool2d, conv2d_raw, conv_output_size, conv_transpose2d_raw
from .layers import (BatchNormLayer, Conv2dLayer, ConvTranspose2dLayer, Linear, Module,
                     batchnorm, conv2d, conv_transpose2d, relu, sigmoid)
from .net import DenseRAUnet, NetConfig, denseraunet_forward

__all__ = [
    "EDB", "RAU", "SCSE", "ConvBNReLU", "DecoderModule", "DenseBlock", "DenseLayer",
    "Transition", "decoder_module", "dense_block", "edb", "fuse_max", "rau", "scse",
    "zero_weights", "load_checkpoint", "read_checkpoint", "save_checkpoint", "avg_pool2d",
    "conv2d_raw", "conv_output_size", "conv_transpose2d_raw", "BatchNormLayer", "Conv2dLayer",
    "ConvTranspose2dLayer", "Linear", "Module", "batchnorm", "conv2d", "conv_transpose2d",
    "relu", "sigmoid", "DenseRAUnet", "NetConfig", "denseraunet_forward",
]
