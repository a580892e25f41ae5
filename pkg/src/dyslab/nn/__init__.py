"""From-scratch neural-network core: layers, losses, Adam, weight storage."""

from .gradcheck import check_graph, check_layer, gradient_check, rel_error
from .graph import ModelGraph, TapeEntry
from .layers import (ConcatSkip, Conv2D, Dense, Dropout, Flatten, Layer,
                     MaxPool2D, ReLU, SaveSkip, Sigmoid, Softmax, UpsampleNN,
                     he_uniform)
from .losses import loss_bce, loss_ce, loss_l1
from .optim import AdamState, adam_step
from .weights import (WeightStore, decode_weights, encode_weights,
                      load_weights, save_weights)

__all__ = [
    "AdamState", "ConcatSkip", "Conv2D", "Dense", "Dropout", "Flatten",
    "Layer", "MaxPool2D", "ModelGraph", "ReLU", "SaveSkip", "Sigmoid",
    "Softmax", "TapeEntry", "UpsampleNN", "WeightStore", "adam_step",
    "check_graph", "check_layer", "decode_weights", "encode_weights",
    "gradient_check", "he_uniform", "load_weights", "loss_bce", "loss_ce",
    "loss_l1", "rel_error", "save_weights",
]
