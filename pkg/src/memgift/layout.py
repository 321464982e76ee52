"""Offline layout compiler.

Turns a 128-bit key into the per-slice crossbar contents: the S-box LUT
plus round-key/round-constant bits for every round, pre-placed at their
pre-permutation coordinates so that the runtime datapath never touches
the key schedule.  Slice j, in-nibble bit b, round r holds the bit that
the reference cipher XORs at global position P(4j+b) in round r; the
inter-round feedback wiring then realises P.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .gift import (
    GIFT_SBOX,
    CipherVariant,
    SBoxTable,
    perm_table,
    round_addition_masks,
    sub_cells,
    variant_for,
)


class LayoutError(ValueError):
    """Malformed layout bundle or layout file."""


class LayoutVersionError(LayoutError):
    """Layout file header carries an unsupported magic/version."""


class LayoutChecksumError(LayoutError):
    """Layout file checksum does not match its contents."""


class LayoutTruncatedError(LayoutError):
    """Layout file ends before all expected records."""


LAYOUT_MAGIC = "MEMGIFT-LAYOUT"
LAYOUT_VERSION = "v1"


@dataclass(frozen=True)
class PermWiring:
    """Inter-round feedback wiring: round-output bit i lands at targets[i]."""

    targets: tuple[int, ...]

    @classmethod
    def for_variant(cls, variant: CipherVariant) -> "PermWiring":
        return cls(perm_table(variant))

    def __len__(self) -> int:
        return len(self.targets)


@dataclass
class SliceKeyMatrix:
    """Key/constant region of one slice.

    columns holds the in-nibble bit positions, e.g. (1, 2) or (1, 2, 3);
    bits is a (rounds, len(columns)) uint8 array, row r = word line 16+r.
    """

    slice_index: int
    columns: tuple[int, ...]
    bits: np.ndarray

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SliceKeyMatrix)
            and self.slice_index == other.slice_index
            and self.columns == other.columns
            and np.array_equal(self.bits, other.bits)
        )


@dataclass
class LayoutBundle:
    """Everything needed to program and wire the slices for one key."""

    variant: CipherVariant
    sbox_matrix: np.ndarray  # (16, 4) uint8; row k = S(k), column b = bit b
    slices: list[SliceKeyMatrix]
    wiring: PermWiring
    rc_slices: frozenset[int]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LayoutBundle)
            and self.variant == other.variant
            and np.array_equal(self.sbox_matrix, other.sbox_matrix)
            and self.slices == other.slices
            and self.wiring == other.wiring
            and self.rc_slices == other.rc_slices
        )

    @property
    def sbox(self) -> SBoxTable:
        weights = np.array([1, 2, 4, 8], dtype=np.uint8)
        return SBoxTable((self.sbox_matrix * weights).sum(axis=1).tolist())

    def cell_count(self) -> int:
        return sum(16 * 4 + m.bits.size for m in self.slices)


def sbox_bit_matrix(sbox: SBoxTable) -> np.ndarray:
    rows = [[(sbox[k] >> b) & 1 for b in range(4)] for k in range(16)]
    return np.array(rows, dtype=np.uint8)


@lru_cache(maxsize=None)
def _rc_slice_set(block_bits: int) -> frozenset[int]:
    variant = variant_for(block_bits)
    table = perm_table(variant)
    targets = set(variant.rc_positions)
    return frozenset(
        j for j in range(variant.nibbles) if table[4 * j + 3] in targets
    )


def rc_slice_set(variant: CipherVariant) -> frozenset[int]:
    """Slices whose bit-3 output feeds a round-constant position."""
    return _rc_slice_set(variant.block_bits)


def slice_columns(variant: CipherVariant, slice_index: int) -> tuple[int, ...]:
    cols = variant.key_xor_bits
    if slice_index in rc_slice_set(variant):
        cols = cols + (3,)
    return cols


def compile_layout(
    key: int, variant: CipherVariant, sbox: SBoxTable = GIFT_SBOX
) -> LayoutBundle:
    """Pre-compute the per-slice RK/RC bits for all rounds of one key."""
    variant = variant_for(variant)
    masks = round_addition_masks(key, variant)
    wiring = PermWiring.for_variant(variant)
    slices = []
    for j in range(variant.nibbles):
        cols = slice_columns(variant, j)
        bits = np.zeros((variant.rounds, len(cols)), dtype=np.uint8)
        for r, mask in enumerate(masks):
            for k, b in enumerate(cols):
                bits[r, k] = (mask >> wiring.targets[4 * j + b]) & 1
        slices.append(SliceKeyMatrix(j, cols, bits))
    return LayoutBundle(
        variant=variant,
        sbox_matrix=sbox_bit_matrix(sbox),
        slices=slices,
        wiring=wiring,
        rc_slices=rc_slice_set(variant),
    )


# ---------------------------------------------------------------------------
# Digital evaluator: the crossbar datapath with ideal logic, used as the
# intermediate oracle between the reference cipher and the analog model.


def digital_round(
    bundle: LayoutBundle, state: int, rnd: int, feedback: str = "permuted"
) -> int:
    """One round: per slice, out = S(in) XOR key row, then feedback wiring."""
    variant = bundle.variant
    sbox = bundle.sbox
    if feedback not in ("permuted", "local"):
        raise LayoutError(f"unknown feedback mode: {feedback!r}")
    out = 0
    for j, km in enumerate(bundle.slices):
        nib = sbox[(state >> (4 * j)) & 0xF]
        for k, b in enumerate(km.columns):
            nib ^= int(km.bits[rnd, k]) << b
        for b in range(4):
            target = bundle.wiring.targets[4 * j + b] if feedback == "permuted" else 4 * j + b
            out |= ((nib >> b) & 1) << target
    return out


def evaluate_digital(bundle: LayoutBundle, pt: int, feedback: str = "permuted") -> int:
    state = pt
    for r in range(bundle.variant.rounds):
        state = digital_round(bundle, state, r, feedback)
    return state


def evaluate_digital_batch(
    bundle: LayoutBundle, pts: np.ndarray, feedback: str = "permuted"
) -> np.ndarray:
    """Vectorised evaluator over a batch of plaintexts.

    pts and the result are (n_blocks, n_bits) uint8 bit arrays, bit index =
    state bit position.
    """
    variant = bundle.variant
    if feedback not in ("permuted", "local"):
        raise LayoutError(f"unknown feedback mode: {feedback!r}")
    n = variant.block_bits
    sbox_bits = bundle.sbox_matrix  # (16, 4)
    weights = np.array([1, 2, 4, 8], dtype=np.uint8)
    # per-round key bits expanded to one (rounds, n) bit plane
    key_plane = np.zeros((variant.rounds, n), dtype=np.uint8)
    for km in bundle.slices:
        for k, b in enumerate(km.columns):
            key_plane[:, 4 * km.slice_index + b] = km.bits[:, k]
    if feedback == "permuted":
        targets = np.array(bundle.wiring.targets)
    else:
        targets = np.arange(n)
    state = np.array(pts, dtype=np.uint8)  # private copy; rounds run in place
    out = np.empty_like(state)
    for r in range(variant.rounds):
        rows = state.reshape(-1, variant.nibbles, 4) @ weights
        sb = sbox_bits[rows].reshape(-1, n)
        sb ^= key_plane[r]
        out[:, targets] = sb
        state, out = out, state
    return state


def state_to_bits(value: int, n: int) -> np.ndarray:
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)


def bits_to_state(bits: np.ndarray) -> int:
    value = 0
    for i, b in enumerate(bits.tolist()):
        value |= int(b) << i
    return value


# ---------------------------------------------------------------------------
# Layout file format.
#
#   MEMGIFT-LAYOUT v1 <variant>
#   sbox <16 hex digits>            row 0 first, column 0 in the digit LSB
#   slice <j> sb <16 hex digits>
#   slice <j> rk <rounds hex digits>
#   ...
#   crc32 <8 hex digits>            CRC-32 of every preceding line
#
# Word lines are ordered WL0 -> WL55 left to right; within a digit, the
# region's column 0 is the least significant bit.


def _sb_line(matrix: np.ndarray) -> str:
    weights = np.array([1, 2, 4, 8], dtype=np.uint8)
    return "".join(f"{int(v):x}" for v in (matrix * weights).sum(axis=1))


def _rk_line(km: SliceKeyMatrix) -> str:
    digits = []
    for r in range(km.bits.shape[0]):
        v = 0
        for k in range(km.bits.shape[1]):
            v |= int(km.bits[r, k]) << k
        digits.append(f"{v:x}")
    return "".join(digits)


def export_layout(bundle: LayoutBundle, path) -> None:
    lines = [f"{LAYOUT_MAGIC} {LAYOUT_VERSION} {bundle.variant.name}"]
    sb = _sb_line(bundle.sbox_matrix)
    for km in bundle.slices:
        lines.append(f"slice {km.slice_index} sb {sb}")
        lines.append(f"slice {km.slice_index} rk {_rk_line(km)}")
    body = "\n".join(lines) + "\n"
    crc = zlib.crc32(body.encode("ascii")) & 0xFFFFFFFF
    Path(path).write_text(body + f"crc32 {crc:08x}\n")


def _parse_hex_digits(text: str, expected: int, what: str) -> list[int]:
    if len(text) != expected:
        raise LayoutError(f"{what}: expected {expected} hex digits, got {len(text)}")
    try:
        return [int(c, 16) for c in text]
    except ValueError:
        raise LayoutError(f"{what}: invalid hex") from None


def import_layout(path) -> LayoutBundle:
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise LayoutTruncatedError("empty layout file")
    header = lines[0].split()
    if len(header) != 3 or header[0] != LAYOUT_MAGIC:
        raise LayoutVersionError(f"not a layout file: {lines[0]!r}")
    if header[1] != LAYOUT_VERSION:
        raise LayoutVersionError(f"unsupported layout version: {header[1]!r}")
    try:
        variant = variant_for(header[2])
    except Exception:
        raise LayoutVersionError(f"unknown variant in header: {header[2]!r}") from None

    if not lines[-1].startswith("crc32 "):
        raise LayoutTruncatedError("missing checksum line")
    stated = lines[-1].split()[1]
    body = "\n".join(lines[:-1]) + "\n"
    actual = zlib.crc32(body.encode("ascii")) & 0xFFFFFFFF
    if f"{actual:08x}" != stated.lower():
        raise LayoutChecksumError(
            f"checksum mismatch: stated {stated}, computed {actual:08x}"
        )

    records = lines[1:-1]
    expected_records = 2 * variant.nibbles
    if len(records) != expected_records:
        raise LayoutTruncatedError(
            f"expected {expected_records} slice records, found {len(records)}"
        )

    sb_rows: dict[int, list[int]] = {}
    rk_rows: dict[int, list[int]] = {}
    for ln in records:
        parts = ln.split()
        if len(parts) != 4 or parts[0] != "slice" or parts[2] not in ("sb", "rk"):
            raise LayoutError(f"malformed record: {ln!r}")
        j = int(parts[1])
        if not 0 <= j < variant.nibbles:
            raise LayoutError(f"slice index out of range: {j}")
        if parts[2] == "sb":
            sb_rows[j] = _parse_hex_digits(parts[3], 16, f"slice {j} sb")
        else:
            rk_rows[j] = _parse_hex_digits(parts[3], variant.rounds, f"slice {j} rk")
    if set(sb_rows) != set(range(variant.nibbles)) or set(rk_rows) != set(
        range(variant.nibbles)
    ):
        raise LayoutTruncatedError("missing slice records")

    first_sb = sb_rows[0]
    if any(sb_rows[j] != first_sb for j in sb_rows):
        raise LayoutError("slices carry different S-box contents")
    sbox_matrix = np.array(
        [[(v >> b) & 1 for b in range(4)] for v in first_sb], dtype=np.uint8
    )

    rc = rc_slice_set(variant)
    slices = []
    for j in range(variant.nibbles):
        cols = slice_columns(variant, j)
        bits = np.zeros((variant.rounds, len(cols)), dtype=np.uint8)
        for r, v in enumerate(rk_rows[j]):
            if v >> len(cols):
                raise LayoutError(
                    f"slice {j} round {r}: digit {v:x} exceeds {len(cols)} columns"
                )
            for k in range(len(cols)):
                bits[r, k] = (v >> k) & 1
        slices.append(SliceKeyMatrix(j, cols, bits))
    return LayoutBundle(
        variant=variant,
        sbox_matrix=sbox_matrix,
        slices=slices,
        wiring=PermWiring.for_variant(variant),
        rc_slices=rc,
    )
