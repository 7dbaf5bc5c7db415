from enum import Enum
from typing import NamedTuple

import numpy as np


class Activation(str, Enum):
    RELU = 'relu'
    TANH = 'tanh'


class BlockSpec(NamedTuple):
    name: str
    in_channels: int
    out_channels: int
    activation: Activation


class BlockParams(NamedTuple):
    weight: np.ndarray
    bias: np.ndarray
    norm_gain: np.ndarray
    norm_bias: np.ndarray


BLOCK_TENSORS = ('weight', 'bias', 'norm_gain', 'norm_bias')
OUTPUT_BLOCK = 'output'
MASK_SCALE = 'mask.scale'
MASK_OFFSET = 'mask.offset'
