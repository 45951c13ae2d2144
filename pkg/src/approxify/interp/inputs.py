from dataclasses import dataclass, field
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class ProgramOutput:
    """Typed program result.

    ``value`` is a tuple of floats (numeric), a space-joined string of words
    (text) or a tuple of int rows (image).
    """

    kind: str
    value: Union[tuple, str]

    @property
    def shape(self) -> tuple:
        if self.kind == "image":
            return (len(self.value), len(self.value[0]) if self.value else 0)
        if self.kind == "numeric":
            return (len(self.value),)
        return (len(self.value.split()),)


@dataclass(frozen=True)
class InputCase:
    id: str = "case"
    numbers: Tuple[float, ...] = ()
    image: Optional[Tuple[Tuple[int, ...], ...]] = None
    text: Optional[str] = None
    ground_truth: Optional[ProgramOutput] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "numbers", tuple(self.numbers))
        if self.image is not None:
            img = tuple(tuple(int(v) for v in row) for row in self.image)
            if not img or any(len(r) != len(img[0]) for r in img):
                raise ValueError(f"case {self.id}: image must be a non-empty rectangle")
            if any(not 0 <= v <= 255 for row in img for v in row):
                raise ValueError(f"case {self.id}: pixel values must lie in 0..255")
            object.__setattr__(self, "image", img)
