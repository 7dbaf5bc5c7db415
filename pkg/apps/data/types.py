from enum import Enum


class Split(str, Enum):
    TRAIN = 'train'
    VAL = 'val'
    TEST = 'test'

    @property
    def code(self) -> int:
        return list(Split).index(self)
