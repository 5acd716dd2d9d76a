"""Binary PGM/PPM readers and writers plus CSV convergence traces.

The netpbm formats are implemented directly so golden-file tests stay
byte-exact with no decoder dependency; PNG reading goes through Pillow as
a convenience. All writers are deterministic: identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import io
from contextlib import contextmanager
from pathlib import Path
from typing import BinaryIO, Sequence, Union

import numpy as np
from PIL import Image as PILImage

from .core import ImageGrid, TraceEntry
from .engines import LabelMap

__all__ = [
    "PgmParseError",
    "UnsupportedFormatError",
    "load_grayscale",
    "load_image_file",
    "save_grayscale",
    "save_label_map",
    "labels_from_quantized",
    "save_pseudocolor",
    "write_convergence_csv",
    "default_palette",
]

Sink = Union[str, Path, BinaryIO]

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\r\n\x0b\x0c"
_GRAY16_MODES = ("I;16", "I;16B", "I;16L", "I;16N", "I")


class PgmParseError(ValueError):
    """Malformed netpbm input; offset is the byte position of the problem."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class UnsupportedFormatError(ValueError):
    pass


class _Cursor:
    """Byte cursor over a PGM header that skips whitespace and # comments."""

    def __init__(self, data: bytes, pos: int) -> None:
        self.data = data
        self.pos = pos

    def _skip_filler(self) -> None:
        data = self.data
        while self.pos < len(data):
            byte = data[self.pos : self.pos + 1]
            if byte in (b"#",):
                newline = data.find(b"\n", self.pos)
                self.pos = len(data) if newline < 0 else newline + 1
            elif byte in _WHITESPACE:
                self.pos += 1
            else:
                return

    def token(self, name: str) -> tuple[bytes, int]:
        self._skip_filler()
        start = self.pos
        data = self.data
        while (
            self.pos < len(data)
            and data[self.pos : self.pos + 1] not in _WHITESPACE
            and data[self.pos : self.pos + 1] != b"#"
        ):
            self.pos += 1
        if self.pos == start:
            raise PgmParseError(f"missing {name} in header", start)
        return data[start : self.pos], start


def _parse_pgm(data: bytes) -> ImageGrid:
    if data[:2] != b"P5":
        raise PgmParseError("not a binary PGM (magic is not P5)", 0)
    cursor = _Cursor(data, 2)
    fields = []
    for name in ("width", "height", "maxval"):
        text, start = cursor.token(name)
        try:
            value = int(text)
        except ValueError:
            raise PgmParseError(f"non-numeric {name} {text!r}", start) from None
        if value <= 0:
            raise PgmParseError(f"{name} must be positive, got {value}", start)
        fields.append(value)
    width, height, maxval = fields
    if maxval not in (255, 65535):
        raise UnsupportedFormatError(
            f"unsupported PGM maxval {maxval} (only 255 and 65535)"
        )
    if cursor.pos >= len(data) or data[cursor.pos : cursor.pos + 1] not in _WHITESPACE:
        raise PgmParseError("expected single whitespace before pixel data", cursor.pos)
    start = cursor.pos + 1
    if maxval == 255:
        need, bit_depth, dtype = width * height, 8, np.dtype(np.uint8)
    else:
        need, bit_depth, dtype = 2 * width * height, 16, np.dtype(">u2")
    payload = data[start : start + need]
    if len(payload) < need:
        raise PgmParseError(
            f"pixel payload truncated: expected {need} bytes, found {len(payload)}",
            len(data),
        )
    samples = np.frombuffer(payload, dtype=dtype).astype(np.int64)
    return ImageGrid(width, height, bit_depth, samples)


def _parse_png(data: bytes) -> ImageGrid:
    img = PILImage.open(io.BytesIO(data))
    img.load()
    if img.mode == "L":
        bit_depth = 8
    elif img.mode in _GRAY16_MODES:
        bit_depth = 16
    else:
        raise UnsupportedFormatError(
            f"PNG mode {img.mode!r} is not single-channel grayscale"
        )
    arr = np.asarray(img)
    if arr.ndim != 2:
        raise UnsupportedFormatError("PNG has multiple channels")
    return ImageGrid(arr.shape[1], arr.shape[0], bit_depth, arr.astype(np.int64).reshape(-1))


def load_grayscale(data: bytes) -> ImageGrid:
    """Decode a binary PGM (maxval 255 or 65535, 16-bit big-endian) or a
    single-channel 8/16-bit PNG."""
    if data[:2] == b"P5":
        return _parse_pgm(data)
    if data[:8] == _PNG_MAGIC:
        return _parse_png(data)
    raise PgmParseError("unrecognized image signature", 0)


def load_image_file(path: Union[str, Path]) -> ImageGrid:
    return load_grayscale(Path(path).read_bytes())


@contextmanager
def _binary_sink(sink: Sink):
    if hasattr(sink, "write"):
        yield sink
    else:
        with open(sink, "wb") as fh:
            yield fh


def save_grayscale(image: ImageGrid, sink: Sink) -> None:
    """Write a binary PGM; 16-bit samples go out big-endian."""
    header = f"P5\n{image.width} {image.height}\n{image.max_value}\n".encode("ascii")
    if image.bit_depth == 8:
        payload = image.samples.astype(np.uint8).tobytes()
    else:
        payload = image.samples.astype(">u2").tobytes()
    with _binary_sink(sink) as fh:
        fh.write(header)
        fh.write(payload)


def save_label_map(labels: LabelMap, clusters: int, sink: Sink) -> None:
    """Write labels as an 8-bit PGM, spreading 0..clusters-1 over 0..255.

    Pixel value is floor(label * 255 / (clusters - 1)); the map is
    injective for clusters <= 256 and labels_from_quantized inverts it
    exactly.
    """
    if clusters < 2:
        raise ValueError("label quantization needs at least 2 clusters")
    if clusters > 256:
        raise ValueError("cannot quantize more than 256 labels into 8 bits")
    if int(labels.labels.max()) >= clusters:
        raise ValueError("label exceeds cluster count")
    values = labels.labels * 255 // (clusters - 1)
    save_grayscale(ImageGrid(labels.width, labels.height, 8, values), sink)


def labels_from_quantized(image: ImageGrid, clusters: int) -> LabelMap:
    """Invert save_label_map's quantization (ceiling division, exact)."""
    if clusters < 2 or clusters > 256:
        raise ValueError("clusters must be in 2..256")
    if image.bit_depth != 8:
        raise ValueError("quantized label maps are 8-bit")
    labels = (image.samples * (clusters - 1) + 254) // 255
    return LabelMap(image.width, image.height, labels)


_BASE_COLORS = (
    (230, 25, 75),
    (60, 180, 75),
    (0, 130, 200),
    (255, 225, 25),
    (145, 30, 180),
    (70, 240, 240),
    (245, 130, 48),
    (240, 50, 230),
    (210, 245, 60),
    (0, 128, 128),
)


def default_palette(clusters: int) -> tuple:
    """Distinct render colors: a fixed table first, then an HSV wheel."""
    import colorsys

    if clusters < 1:
        raise ValueError("palette needs at least one color")
    colors = list(_BASE_COLORS[:clusters])
    seen = set(colors)
    index = len(colors)
    while len(colors) < clusters:
        hue = (index * 0.6180339887498949) % 1.0
        value = 0.95
        rgb = tuple(
            int(round(channel * 255))
            for channel in colorsys.hsv_to_rgb(hue, 0.8, value)
        )
        while rgb in seen:
            value -= 1.0 / 255.0
            rgb = tuple(
                int(round(channel * 255))
                for channel in colorsys.hsv_to_rgb(hue, 0.8, value)
            )
        colors.append(rgb)
        seen.add(rgb)
        index += 1
    return tuple(colors)


def save_pseudocolor(labels: LabelMap, palette: Sequence, sink: Sink) -> None:
    """Write a binary PPM (maxval 255) with palette[label] per pixel."""
    pal = np.asarray(palette, dtype=np.int64)
    if pal.ndim != 2 or pal.shape[1] != 3:
        raise ValueError("palette must be a sequence of RGB triples")
    if pal.size and (int(pal.min()) < 0 or int(pal.max()) > 255):
        raise ValueError("palette channels must be bytes")
    needed = int(labels.labels.max()) + 1
    if pal.shape[0] < needed:
        raise ValueError(f"palette has {pal.shape[0]} colors, labels need {needed}")
    if np.unique(pal[:needed], axis=0).shape[0] != needed:
        raise ValueError("palette colors in use must be pairwise distinct")
    header = f"P6\n{labels.width} {labels.height}\n255\n".encode("ascii")
    payload = pal[labels.labels].astype(np.uint8).tobytes()
    with _binary_sink(sink) as fh:
        fh.write(header)
        fh.write(payload)


def write_convergence_csv(trace: Sequence[TraceEntry], sink: Sink) -> None:
    """CSV with header iteration,objective,max_delta; nine-decimal floats,
    LF line endings."""
    if not trace:
        raise ValueError("trace is empty")
    lines = ["iteration,objective,max_delta"]
    for entry in trace:
        lines.append(
            f"{entry.iteration},{entry.objective:.9f},{entry.max_delta:.9f}"
        )
    data = ("\n".join(lines) + "\n").encode("ascii")
    with _binary_sink(sink) as fh:
        fh.write(data)
