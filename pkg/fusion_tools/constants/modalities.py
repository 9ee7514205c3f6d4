from enum import Enum


class Modality(Enum):
    """Sensor streams of a registered image pair, in channel order."""

    RGB = "rgb"
    IR = "ir"

    @property
    def channels(self) -> slice:
        """Channel slice of the modality inside an [R, G, B, IR] tensor."""
        return CHANNEL_SLICES[self]

    @property
    def other(self) -> "Modality":
        return Modality.IR if self is Modality.RGB else Modality.RGB


CHANNEL_SLICES = {Modality.RGB: slice(0, 3), Modality.IR: slice(3, 4)}

INPUT_CHANNELS = 4
