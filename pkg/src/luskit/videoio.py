"""Decode uploaded videos into FrameSequences and encode results back out.

Native formats, chosen so the package carries no codec dependency:

* Y4M (YUV4MPEG2), 4:2:0 / 4:2:2 / 4:4:4 / mono — uncompressed input,
  also the phantom generator's output format.
* zip-of-PNG frame bundles, frames ordered by entry name.
* MJPEG-in-AVI ('MJPG' fourcc, one baseline JPEG per frame) for both
  input and the annotated outputs, since browsers and stock players
  render it.

Anything else (MP4/H.264 etc.) is delegated to an optional external
decoder command that must drop zero-padded PNG frames into a directory.
"""

from __future__ import annotations

import io
import shlex
import struct
import subprocess
import tempfile
import threading
import zipfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (
    Frame,
    FrameSequence,
    InvalidGeometry,
    LuskitError,
    to_grayscale,
)

DEFAULT_FPS = 20.0
JPEG_QUALITY = 90


class UnsupportedFormat(LuskitError):
    """No native parser matches and no external decoder is configured."""


class CorruptStream(LuskitError):
    """The container or payload is inconsistent with its own header."""


class LimitExceeded(LuskitError):
    """Decoding would blow past the configured resource caps."""


class EmptySequence(LuskitError):
    """Asked to encode zero frames."""


@dataclass(frozen=True)
class DecoderConfig:
    """Resource caps and the optional external decoder escape hatch.

    external_decoder_cmd is a command template with ``{input}`` and
    ``{outdir}`` placeholders; it must emit frames as zero-padded PNGs
    into the output directory.
    """

    external_decoder_cmd: str | None = None
    max_frames: int = 2000
    max_pixels_per_frame: int = 4_000_000

    def __post_init__(self):
        if self.max_frames <= 0 or self.max_pixels_per_frame <= 0:
            raise ValueError("decoder caps must be positive")


# External decoders are child processes; serialize them so a burst of
# uploads cannot fan out unbounded decoder processes.
_EXTERNAL_DECODER_LOCK = threading.Lock()


def decode(data: bytes, filename: str = "", cfg: DecoderConfig | None = None) -> FrameSequence:
    """Decode uploaded bytes into a FrameSequence, sniffing the container."""
    cfg = cfg or DecoderConfig()
    name = filename or "upload"
    if data.startswith(b"YUV4MPEG2"):
        return _decode_y4m(data, name, cfg)
    if data.startswith(b"PK\x03\x04"):
        return _decode_png_zip(data, name, cfg)
    if len(data) >= 12 and data[:4] == b"RIFF" and data[8:12] == b"AVI ":
        return _decode_avi(data, name, cfg)
    if cfg.external_decoder_cmd:
        return _decode_external(data, name, cfg)
    raise UnsupportedFormat(
        f"{name}: not Y4M, zip-of-PNG, or MJPEG-AVI, and no external decoder is configured"
    )


def _check_pixel_cap(width: int, height: int, cfg: DecoderConfig) -> None:
    if width * height > cfg.max_pixels_per_frame:
        raise LimitExceeded(
            f"frame of {width}x{height} exceeds the {cfg.max_pixels_per_frame}-pixel cap"
        )


def _build_sequence(arrays, fps: float, name: str) -> FrameSequence:
    try:
        return FrameSequence.from_arrays(arrays, fps=fps, source_name=name)
    except InvalidGeometry as e:
        raise CorruptStream(f"{name}: {e}") from e


# ---------------------------------------------------------------------------
# Y4M (YUV4MPEG2)

_Y4M_CHROMA_SIZES = {
    # bytes per chroma plane as a function of (w, h)
    "420": lambda w, h: (w // 2) * (h // 2),
    "420jpeg": lambda w, h: (w // 2) * (h // 2),
    "420mpeg2": lambda w, h: (w // 2) * (h // 2),
    "420paldv": lambda w, h: (w // 2) * (h // 2),
    "422": lambda w, h: (w // 2) * h,
    "444": lambda w, h: w * h,
    "mono": None,
}


def _decode_y4m(data: bytes, name: str, cfg: DecoderConfig) -> FrameSequence:
    nl = data.find(b"\n")
    if nl < 0:
        raise CorruptStream(f"{name}: unterminated Y4M stream header")
    try:
        header = data[:nl].decode("ascii")
    except UnicodeDecodeError as e:
        raise CorruptStream(f"{name}: non-ASCII Y4M header") from e

    width = height = None
    fps = None
    chroma = "420"
    for tag in header.split()[1:]:
        code, rest = tag[0], tag[1:]
        if code == "W":
            width = int(rest)
        elif code == "H":
            height = int(rest)
        elif code == "F":
            num, _, den = rest.partition(":")
            if not den or int(den) == 0 or int(num) <= 0:
                raise CorruptStream(f"{name}: bad Y4M frame rate {tag!r}")
            fps = int(num) / int(den)
        elif code == "C":
            chroma = rest
    if width is None or height is None:
        raise CorruptStream(f"{name}: Y4M header lacks W/H tags")
    if fps is None:
        fps = DEFAULT_FPS
    if chroma not in _Y4M_CHROMA_SIZES:
        raise UnsupportedFormat(f"{name}: Y4M colorspace C{chroma} is not supported")
    _check_pixel_cap(width, height, cfg)

    luma_size = width * height
    chroma_fn = _Y4M_CHROMA_SIZES[chroma]
    chroma_size = 0 if chroma_fn is None else chroma_fn(width, height)
    if chroma_size and chroma.startswith("420") and (width % 2 or height % 2):
        raise CorruptStream(f"{name}: 4:2:0 Y4M requires even dimensions, got {width}x{height}")

    arrays = []
    pos = nl + 1
    while pos < len(data):
        frame_nl = data.find(b"\n", pos)
        if frame_nl < 0:
            raise CorruptStream(f"{name}: unterminated FRAME header")
        if not data[pos:frame_nl].startswith(b"FRAME"):
            raise CorruptStream(f"{name}: expected FRAME marker at byte {pos}")
        payload_start = frame_nl + 1
        payload_end = payload_start + luma_size + 2 * chroma_size
        if payload_end > len(data):
            raise CorruptStream(f"{name}: truncated frame payload at frame {len(arrays)}")
        if len(arrays) + 1 > cfg.max_frames:
            raise LimitExceeded(f"{name}: more than {cfg.max_frames} frames")
        y = np.frombuffer(data, dtype=np.uint8, count=luma_size, offset=payload_start)
        arrays.append(y.reshape(height, width).copy())
        pos = payload_end
    if not arrays:
        raise CorruptStream(f"{name}: Y4M stream contains no frames")
    return _build_sequence(arrays, fps, name)


def encode_y4m(seq: FrameSequence) -> bytes:
    """Encode gray frames as Y4M. Even geometry is written as C420jpeg with
    constant-128 chroma (maximally player-compatible); odd geometry as Cmono.
    Either way the luma plane round-trips losslessly."""
    w, h = seq.width, seq.height
    rate = Fraction(seq.fps).limit_denominator(65535)
    mono = bool(w % 2 or h % 2)
    chroma_tag = "mono" if mono else "420jpeg"
    out = io.BytesIO()
    out.write(
        f"YUV4MPEG2 W{w} H{h} F{rate.numerator}:{rate.denominator} Ip A1:1 C{chroma_tag}\n".encode()
    )
    chroma = b"" if mono else bytes([128]) * ((w // 2) * (h // 2) * 2)
    for f in seq.frames:
        out.write(b"FRAME\n")
        out.write(f.pixels.tobytes())
        out.write(chroma)
    return out.getvalue()


# ---------------------------------------------------------------------------
# zip-of-PNG bundles

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _gray_from_image(img: Image.Image) -> np.ndarray:
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    luma = rgb.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
    return np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8)


def _decode_png_zip(data: bytes, name: str, cfg: DecoderConfig) -> FrameSequence:
    try:
        zf = zipfile.ZipFile(io.BytesIO(data))
        infos = [i for i in zf.infolist() if not i.is_dir()]
    except zipfile.BadZipFile as e:
        raise CorruptStream(f"{name}: {e}") from e
    if not infos:
        raise CorruptStream(f"{name}: zip bundle contains no frames")
    if len(infos) > cfg.max_frames:
        raise LimitExceeded(f"{name}: more than {cfg.max_frames} frames")
    infos.sort(key=lambda i: i.filename)

    arrays = []
    for info in infos:
        payload = zf.read(info)
        if not payload.startswith(_PNG_MAGIC):
            raise CorruptStream(f"{name}: zip entry {info.filename!r} is not a PNG")
        try:
            img = Image.open(io.BytesIO(payload))
            img.load()
        except Exception as e:
            raise CorruptStream(f"{name}: bad PNG {info.filename!r}: {e}") from e
        _check_pixel_cap(img.width, img.height, cfg)
        arrays.append(_gray_from_image(img))
    return _build_sequence(arrays, DEFAULT_FPS, name)


# ---------------------------------------------------------------------------
# MJPEG-in-AVI

def _jpeg_bytes(arr: np.ndarray) -> bytes:
    mode = "L" if arr.ndim == 2 else "RGB"
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(
        buf, format="JPEG", quality=JPEG_QUALITY, subsampling=2, optimize=False
    )
    return buf.getvalue()


def _chunk(fourcc: bytes, payload: bytes) -> bytes:
    pad = b"\x00" if len(payload) % 2 else b""
    return fourcc + struct.pack("<I", len(payload)) + payload + pad


def _list_chunk(list_type: bytes, payload: bytes) -> bytes:
    return _chunk(b"LIST", list_type + payload)


def encode_video(source, fps: float | None = None) -> bytes:
    """Encode a FrameSequence or a list of (gray or RGB) arrays as MJPEG-AVI.

    The container frame rate is the sequence fps rounded to the nearest
    integer. Raises EmptySequence on zero frames.
    """
    if isinstance(source, FrameSequence):
        arrays = [f.pixels for f in source.frames]
        fps = source.fps
    else:
        arrays = [np.asarray(a, dtype=np.uint8) for a in source]
        if fps is None:
            raise ValueError("fps is required when encoding raw arrays")
    if not arrays:
        raise EmptySequence("cannot encode an empty sequence")

    h, w = arrays[0].shape[:2]
    fps_int = max(1, round(fps))
    jpegs = [_jpeg_bytes(a) for a in arrays]
    max_jpeg = max(len(j) for j in jpegs)

    avih = struct.pack(
        "<IIIIIIIIII4I",
        round(1_000_000 / fps_int),  # dwMicroSecPerFrame
        max_jpeg * fps_int,          # dwMaxBytesPerSec
        0,                           # dwPaddingGranularity
        0x10,                        # dwFlags: AVIF_HASINDEX
        len(jpegs),                  # dwTotalFrames
        0,                           # dwInitialFrames
        1,                           # dwStreams
        max_jpeg,                    # dwSuggestedBufferSize
        w,
        h,
        0, 0, 0, 0,
    )
    strh = struct.pack(
        "<4s4sIHHIIIIIIIi4H",
        b"vids",
        b"MJPG",
        0,            # dwFlags
        0, 0,         # wPriority, wLanguage
        0,            # dwInitialFrames
        1,            # dwScale
        fps_int,      # dwRate
        0,            # dwStart
        len(jpegs),   # dwLength
        max_jpeg,     # dwSuggestedBufferSize
        0,            # dwQuality
        0,            # dwSampleSize
        0, 0, w, h,   # rcFrame
    )
    strf = struct.pack(
        "<IiiHH4sIiiII",
        40, w, h, 1, 24, b"MJPG", w * h * 3, 0, 0, 0, 0,
    )
    hdrl = _list_chunk(
        b"hdrl", _chunk(b"avih", avih) + _list_chunk(b"strl", _chunk(b"strh", strh) + _chunk(b"strf", strf))
    )

    movi_payload = io.BytesIO()
    index_entries = []
    for j in jpegs:
        # idx1 offsets are measured from the 'movi' fourcc (first chunk at 4)
        index_entries.append((4 + movi_payload.tell(), len(j)))
        movi_payload.write(_chunk(b"00dc", j))
    movi = _list_chunk(b"movi", movi_payload.getvalue())

    idx1 = b"".join(
        struct.pack("<4sIII", b"00dc", 0x10, off, size) for off, size in index_entries
    )
    riff_payload = b"AVI " + hdrl + movi + _chunk(b"idx1", idx1)
    return b"RIFF" + struct.pack("<I", len(riff_payload)) + riff_payload


def _iter_riff_chunks(data: bytes, start: int, end: int):
    pos = start
    while pos + 8 <= end:
        fourcc = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        body_end = body_start + size
        if body_end > end:
            raise CorruptStream(f"RIFF chunk {fourcc!r} overruns its parent")
        yield fourcc, body_start, body_end
        pos = body_end + (size % 2)


def _decode_avi(data: bytes, name: str, cfg: DecoderConfig) -> FrameSequence:
    (riff_size,) = struct.unpack_from("<I", data, 4)
    end = min(len(data), 8 + riff_size)
    fps = None
    jpegs: list[bytes] = []

    def walk(start: int, stop: int):
        nonlocal fps
        for fourcc, body_start, body_end in _iter_riff_chunks(data, start, stop):
            if fourcc == b"LIST":
                walk(body_start + 4, body_end)
            elif fourcc == b"strh" and body_end - body_start >= 32:
                fcc_type = data[body_start:body_start + 4]
                scale, rate = struct.unpack_from("<II", data, body_start + 20)
                if fcc_type == b"vids" and scale and rate:
                    fps = rate / scale
            elif fourcc[2:4] in (b"dc", b"db") and body_end > body_start:
                if len(jpegs) + 1 > cfg.max_frames:
                    raise LimitExceeded(f"{name}: more than {cfg.max_frames} frames")
                jpegs.append(data[body_start:body_end])

    try:
        walk(12, end)
    except struct.error as e:
        raise CorruptStream(f"{name}: truncated AVI structure") from e
    if not jpegs:
        raise CorruptStream(f"{name}: AVI contains no video frames")

    arrays = []
    for i, payload in enumerate(jpegs):
        try:
            img = Image.open(io.BytesIO(payload))
            img.load()
        except Exception as e:
            raise CorruptStream(f"{name}: bad JPEG in frame {i}: {e}") from e
        _check_pixel_cap(img.width, img.height, cfg)
        arrays.append(_gray_from_image(img))
    return _build_sequence(arrays, fps or DEFAULT_FPS, name)


# ---------------------------------------------------------------------------
# PNG stills

def encode_png(frame) -> bytes:
    """Lossless PNG of a Frame, a 2-D gray array, or an (h, w, 3) RGB array."""
    if isinstance(frame, Frame):
        arr = frame.pixels
    else:
        arr = np.asarray(frame, dtype=np.uint8)
    if arr.ndim == 2:
        img = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        img = Image.fromarray(arr, mode="RGB")
    else:
        raise InvalidGeometry(f"cannot encode array of shape {arr.shape} as PNG")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    """Inverse of encode_png; returns a 2-D gray or (h, w, 3) RGB array."""
    img = Image.open(io.BytesIO(data))
    img.load()
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8)
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


# ---------------------------------------------------------------------------
# External decoder escape hatch

def _decode_external(data: bytes, name: str, cfg: DecoderConfig) -> FrameSequence:
    suffix = Path(name).suffix or ".bin"
    with _EXTERNAL_DECODER_LOCK, tempfile.TemporaryDirectory(prefix="luskit-dec-") as tmp:
        tmp_path = Path(tmp)
        input_path = tmp_path / f"input{suffix}"
        outdir = tmp_path / "frames"
        outdir.mkdir()
        input_path.write_bytes(data)
        argv = [
            tok.replace("{input}", str(input_path)).replace("{outdir}", str(outdir))
            for tok in shlex.split(cfg.external_decoder_cmd)
        ]
        proc = subprocess.run(argv, capture_output=True, timeout=600)
        if proc.returncode != 0:
            tail = proc.stderr.decode(errors="replace")[-500:]
            raise CorruptStream(f"{name}: external decoder failed ({proc.returncode}): {tail}")
        pngs = sorted(outdir.glob("*.png"))
        if not pngs:
            raise CorruptStream(f"{name}: external decoder produced no frames")
        if len(pngs) > cfg.max_frames:
            raise LimitExceeded(f"{name}: more than {cfg.max_frames} frames")
        arrays = []
        for p in pngs:
            img = Image.open(p)
            img.load()
            _check_pixel_cap(img.width, img.height, cfg)
            arrays.append(_gray_from_image(img))
    return _build_sequence(arrays, DEFAULT_FPS, name)
