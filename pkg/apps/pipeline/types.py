from enum import Enum


class ChannelMode(str, Enum):
    MONO = 'mono'
    STEREO = 'stereo'

    @property
    def channels(self) -> int:
        return 1 if self is ChannelMode.MONO else 2

    @classmethod
    def for_channels(cls, channels: int) -> 'ChannelMode':
        return cls.MONO if channels == 1 else cls.STEREO


class StopReason(str, Enum):
    PATIENCE = 'patience'
    MAX_EPOCHS = 'max_epochs'
