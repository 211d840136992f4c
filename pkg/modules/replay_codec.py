"""
Frame-action replay codec (.farp)

Layout (little-endian):
    magic        4s   b"FARP"
    version      u16
    player_id    u16 length + UTF-8 bytes
    match_id     u16 length + UTF-8 bytes
    tick_rate    u16
    frame_count  u32
    header_crc   u32  CRC-32 of every header byte before it
    records      frame_count x 33-byte records

Record: tick u32, mouse_x f32, mouse_y f32, buttons u8 (attack, fwd, back,
left, right from LSB), pos_x f32, pos_y f32, yaw f32, kills u16, deaths u16,
damage u32. Fixed-size records allow O(1) access to any frame.
"""

import logging
import struct
import zlib
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from algorithms.replay_validator import validate_replay
from modules.replay import ActionVector, FrameRecord, Replay

logger = logging.getLogger(__name__)

MAGIC = b"FARP"
FORMAT_VERSION = 1
FILE_EXTENSION = ".farp"

RECORD_DTYPE = np.dtype([
    ('tick', '<u4'),
    ('mouse_x', '<f4'),
    ('mouse_y', '<f4'),
    ('buttons', 'u1'),
    ('pos_x', '<f4'),
    ('pos_y', '<f4'),
    ('yaw', '<f4'),
    ('kills', '<u2'),
    ('deaths', '<u2'),
    ('damage', '<u4'),
])
RECORD_SIZE = RECORD_DTYPE.itemsize  # 33, packed
BUTTON_BITS = 0b11111


class ReplayFormatError(ValueError):
    """Malformed replay bytes; `offset` is the byte position of the problem"""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ReplayValidationError(ValueError):
    """A replay that violates its invariants cannot be encoded"""

    def __init__(self, violations: List[dict]):
        first = violations[0]
        location = f"frame {first['frame']} {first['field']}: " if first['frame'] is not None else ""
        super().__init__(f"{location}{first['description']}")
        self.violations = violations


@dataclass
class ReplayHeader:
    version: int
    player_id: str
    match_id: str
    tick_rate: int
    frame_count: int
    header_size: int


def _pack_string(value: str) -> bytes:
    raw = value.encode('utf-8')
    return struct.pack('<H', len(raw)) + raw


def encode_replay(replay: Replay) -> bytes:
    """Serialize a valid replay; output depends only on the replay's value"""
    violations = validate_replay(replay)
    if violations:
        raise ReplayValidationError(violations)

    header = bytearray()
    header += MAGIC
    header += struct.pack('<H', FORMAT_VERSION)
    header += _pack_string(replay.player_id)
    header += _pack_string(replay.match_id)
    header += struct.pack('<HI', replay.tick_rate, len(replay.frames))
    header += struct.pack('<I', zlib.crc32(bytes(header)))

    records = np.array(
        [
            (f.tick, f.action.mouse_x, f.action.mouse_y, f.action.buttons_mask(),
             f.pos_x, f.pos_y, f.yaw, f.kills, f.deaths, f.damage)
            for f in replay.frames
        ],
        dtype=RECORD_DTYPE,
    )
    return bytes(header) + records.tobytes()


def _unpack(fmt: str, data: bytes, offset: int, what: str) -> Tuple:
    size = struct.calcsize(fmt)
    if offset + size > len(data):
        raise ReplayFormatError(f"truncated header while reading {what}", offset)
    return struct.unpack_from(fmt, data, offset)


def _read_string(data: bytes, offset: int, what: str) -> Tuple[str, int]:
    (length,) = _unpack('<H', data, offset, f"{what} length")
    start = offset + 2
    if start + length > len(data):
        raise ReplayFormatError(f"truncated header while reading {what}", start)
    try:
        value = data[start:start + length].decode('utf-8')
    except UnicodeDecodeError:
        raise ReplayFormatError(f"invalid UTF-8 in {what}", start)
    return value, start + length


def parse_header(data: bytes) -> ReplayHeader:
    """Parse and checksum the header without touching the records"""
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise ReplayFormatError("bad magic", 0)

    offset = len(MAGIC)
    (version,) = _unpack('<H', data, offset, "version")
    if version != FORMAT_VERSION:
        raise ReplayFormatError(f"unsupported version {version} (expected {FORMAT_VERSION})", offset)
    offset += 2

    player_id, offset = _read_string(data, offset, "player_id")
    match_id, offset = _read_string(data, offset, "match_id")

    tick_rate, frame_count = _unpack('<HI', data, offset, "tick_rate/frame_count")
    tick_rate_offset = offset
    offset += 6

    (stored_crc,) = _unpack('<I', data, offset, "header checksum")
    if zlib.crc32(data[:offset]) != stored_crc:
        raise ReplayFormatError("header checksum mismatch", offset)
    offset += 4

    if tick_rate < 1:
        raise ReplayFormatError(f"invalid tick_rate {tick_rate}", tick_rate_offset)

    return ReplayHeader(
        version=version,
        player_id=player_id,
        match_id=match_id,
        tick_rate=tick_rate,
        frame_count=frame_count,
        header_size=offset,
    )


def _frame_from_row(row: tuple) -> FrameRecord:
    tick, mouse_x, mouse_y, buttons, pos_x, pos_y, yaw, kills, deaths, damage = row
    return FrameRecord(
        tick=tick,
        action=ActionVector.from_mask(mouse_x, mouse_y, buttons),
        pos_x=pos_x,
        pos_y=pos_y,
        yaw=yaw,
        kills=kills,
        deaths=deaths,
        damage=damage,
    )


def _check_records(records: np.ndarray, header_size: int):
    finite = np.ones(len(records), dtype=bool)
    for name in ('mouse_x', 'mouse_y', 'pos_x', 'pos_y', 'yaw'):
        finite &= np.isfinite(records[name])
    if not finite.all():
        idx = int(np.argmin(finite))
        raise ReplayFormatError(f"non-finite value in record {idx}", header_size + idx * RECORD_SIZE)

    bad_buttons = (records['buttons'] & ~np.uint8(BUTTON_BITS)) != 0
    if bad_buttons.any():
        idx = int(np.argmax(bad_buttons))
        raise ReplayFormatError(f"invalid button bits in record {idx}", header_size + idx * RECORD_SIZE)


def decode_replay(data: bytes) -> Replay:
    """Parse .farp bytes into a Replay that satisfies every invariant"""
    data = bytes(data)
    header = parse_header(data)

    expected = header.header_size + header.frame_count * RECORD_SIZE
    if len(data) < expected:
        complete = (len(data) - header.header_size) // RECORD_SIZE
        raise ReplayFormatError("truncated record", header.header_size + complete * RECORD_SIZE)
    if len(data) > expected:
        raise ReplayFormatError("trailing bytes", expected)

    records = np.frombuffer(data, dtype=RECORD_DTYPE, count=header.frame_count, offset=header.header_size)
    _check_records(records, header.header_size)

    replay = Replay(
        player_id=header.player_id,
        match_id=header.match_id,
        tick_rate=header.tick_rate,
        frames=[_frame_from_row(row) for row in records.tolist()],
    )

    violations = validate_replay(replay)
    if violations:
        first = violations[0]
        frame = first['frame'] if first['frame'] is not None else 0
        raise ReplayFormatError(
            f"invariant violation: {first['description']}",
            header.header_size + frame * RECORD_SIZE,
        )
    return replay


def decode_frame_at(data: bytes, index: int) -> FrameRecord:
    """
    Read a single frame by index without decoding the rest of the replay.
    Random-access helper for callers holding raw bytes; the sampler works on
    fully decoded replays.
    """
    header = parse_header(data)
    if not 0 <= index < header.frame_count:
        raise IndexError(f"frame index {index} out of range for {header.frame_count} frames")
    offset = header.header_size + index * RECORD_SIZE
    if offset + RECORD_SIZE > len(data):
        raise ReplayFormatError("truncated record", offset)
    record = np.frombuffer(data, dtype=RECORD_DTYPE, count=1, offset=offset)
    _check_records(record, offset)
    return _frame_from_row(record.tolist()[0])


def read_replay(path: str) -> Replay:
    with open(path, 'rb') as f:
        data = f.read()
    replay = decode_replay(data)
    logger.debug(f"Read {path}: {replay.player_id}/{replay.match_id}, {len(replay)} frames")
    return replay


def write_replay(replay: Replay, path: str) -> str:
    data = encode_replay(replay)
    with open(path, 'wb') as f:
        f.write(data)
    return path


def trim_start(replay: Replay, n_frames: int) -> Replay:
    """Drop the first n frames (match start-up); ticks and cumulative stats are kept"""
    if n_frames < 0:
        raise ValueError(f"trim must be non-negative, got {n_frames}")
    if n_frames == 0:
        return replay
    if n_frames >= len(replay.frames):
        raise ValueError(f"trimming {n_frames} frames leaves replay {replay.player_id}/{replay.match_id} empty")
    return Replay(
        player_id=replay.player_id,
        match_id=replay.match_id,
        tick_rate=replay.tick_rate,
        frames=list(replay.frames[n_frames:]),
    )
