"""Encryption-session orchestration.

A session programs all slices once, then runs one crossbar read per round:
each slice's register nibble drives its 4-to-16 decoder while a shared
6-bit counter selects the key/constant row, the sensed nibble lands in the
output register, and the inter-round wiring routes bit (j, b) to position
P(4j+b) of the next state (`permuted` mode).  The literal slice-local
feedback reading is retained as a diagnostic (`local` mode); it severs
inter-nibble diffusion and intentionally fails the reference oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .crossbar import (
    CrossbarError,
    DeviceParams,
    SliceArray,
    draw_read_factors,
    program_slice,
    read_round,
    scheme_for,
)
from .gift import GIFT_SBOX, CipherState, CipherVariant, SBoxTable, encrypt_block, variant_for
from .layout import (
    LayoutBundle,
    bits_to_state,
    compile_layout,
    sbox_bit_matrix,
    state_to_bits,
)


class PipelineError(RuntimeError):
    """Session misuse: stepping past the last round, size mismatch, ..."""


_NIBBLE_WEIGHTS = np.array([1, 2, 4, 8], dtype=np.uint8)

SENSE_EVENT = {"sxor": ("sxor_sense", "ro_s_sense"), "dxor": ("dxor_sense", "ro_d_sense")}


@dataclass
class EventLog:
    """Event counts for energy accounting."""

    variant_name: str
    scheme: str
    rounds: int = 0
    counts: dict = field(default_factory=dict)

    def add(self, kind: str, n: int = 1) -> None:
        self.counts[kind] = self.counts.get(kind, 0) + n

    def get(self, kind: str) -> int:
        return self.counts.get(kind, 0)

    def merged_with(self, other: "EventLog") -> "EventLog":
        out = EventLog(self.variant_name, self.scheme, self.rounds + other.rounds)
        for src in (self, other):
            for kind, n in src.counts.items():
                out.add(kind, n)
        return out


@dataclass
class RoundTrace:
    round_index: int
    input_nibbles: tuple
    output_nibbles: tuple
    column_reads: list
    post_state: int


class EncryptionSession:
    """One programmed crossbar instance; reusable for many blocks."""

    def __init__(
        self,
        key: int,
        variant: CipherVariant = None,
        scheme="dxor",
        params: Optional[DeviceParams] = None,
        feedback: str = "permuted",
        sbox: SBoxTable = GIFT_SBOX,
    ):
        self.variant = variant_for(variant if variant is not None else 128)
        self.scheme = scheme_for(scheme)
        self.params = params if params is not None else DeviceParams()
        self.scheme.validate(self.params.vdd)
        if feedback not in ("permuted", "local"):
            raise PipelineError(f"unknown feedback mode: {feedback!r}")
        self.feedback = feedback
        self.bundle: LayoutBundle = compile_layout(key, self.variant, sbox)
        self.sbox = sbox
        self.mask = 0

        n = self.variant.nibbles
        seeds = np.random.SeedSequence(self.params.seed).spawn(n)
        self._slice_rngs = [np.random.default_rng(s) for s in seeds]

        self.write_log = EventLog(self.variant.name, self.scheme.name)
        self.slices: list[SliceArray] = []
        for j, km in enumerate(self.bundle.slices):
            arr = program_slice(km, self.bundle.sbox_matrix, self.params, self._slice_rngs[j])
            self.slices.append(arr)
            self.write_log.add("cell_write", arr.cell_count)

        if self.feedback == "permuted":
            self._targets = np.array(self.bundle.wiring.targets)
        else:
            self._targets = np.arange(self.variant.block_bits)
        self._rebuild_column_stacks()

        self.register_bits = np.zeros(self.variant.block_bits, dtype=np.uint8)
        self.round_counter = 0
        self.reads_executed = 0
        self.blocks_encrypted = 0
        self.current_log = EventLog(self.variant.name, self.scheme.name)

    # -- programming ------------------------------------------------------

    def _rebuild_column_stacks(self) -> None:
        """Stack per-slice arrays into session-wide views for the read path."""
        S, R = self.variant.nibbles, self.variant.rounds
        self._sb_res_all = np.stack([s.sb_res for s in self.slices])
        self._sb_bits_all = np.stack([s.sb_bits for s in self.slices])
        partner_res = np.full((S, R, 4), np.inf)
        partner_bits = np.zeros((S, R, 4), dtype=np.uint8)
        xor_mask = np.zeros((S, 4), dtype=bool)
        for j, arr in enumerate(self.slices):
            for k, col in enumerate(arr.key_columns):
                partner_res[j, :, col] = arr.key_res[:, k]
                partner_bits[j, :, col] = arr.key_bits[:, k]
                xor_mask[j, col] = True
        for a in (partner_res, partner_bits, xor_mask):
            a.setflags(write=False)
        self._partner_res = partner_res
        self._partner_bits = partner_bits
        self._xor_mask = xor_mask
        self._n_xor = int(xor_mask.sum())
        self._n_readout = 4 * S - self._n_xor
        self._slice_index = np.arange(S)

    def reprogram_sbox(self, sbox: SBoxTable) -> None:
        """Rewrite only the 16x4 S-box region of every slice (run-time
        reconfiguration); key/constant cells are untouched."""
        matrix = sbox_bit_matrix(sbox)
        new_slices = []
        for j, old in enumerate(self.slices):
            km_like = _KeyRegionView(old)
            arr = program_slice(km_like, matrix, self.params, self._slice_rngs[j])
            # keep the already-programmed key region (no key-cell writes)
            arr = SliceArray(
                slice_index=old.slice_index,
                sb_bits=arr.sb_bits,
                sb_res=arr.sb_res,
                key_bits=old.key_bits,
                key_res=old.key_res,
                key_columns=old.key_columns,
            )
            new_slices.append(arr)
            self.write_log.add("cell_write", 16 * 4)
        self.slices = new_slices
        self.sbox = sbox
        self._rebuild_column_stacks()

    # -- reads --------------------------------------------------------------

    def _log_round_events(self) -> None:
        log = self.current_log
        log.rounds += 1
        log.add("decoder_cycle", self.variant.nibbles)
        log.add("selector_cycle", 1)
        log.add("register_cycle", 1)
        xor_kind, ro_kind = SENSE_EVENT[self.scheme.name]
        log.add(xor_kind, self._n_xor)
        log.add(ro_kind, self._n_readout)

    def _step_fast(self, state_bits: np.ndarray, rnd: int, count_errors: bool = False):
        rows = state_bits.reshape(-1, 4) @ _NIBBLE_WEIGHTS
        sb_res = self._sb_res_all[self._slice_index, rows]
        sb_bits = self._sb_bits_all[self._slice_index, rows]
        partner_res = self._partner_res[:, rnd, :]
        if self.params.sigma_c2c > 0:
            factors = np.stack(
                [draw_read_factors(self.params, rng) for rng in self._slice_rngs]
            )
            sb_res = sb_res * factors[:, 0, :]
            partner_res = partner_res * factors[:, 1, :]
        wire = self.params.wire_r_per_cell
        r_eq = 1.0 / (1.0 / (sb_res + wire) + 1.0 / (partner_res + wire))
        vdd = self.params.vdd
        xor_bits = self.scheme.xor_amp.decide(r_eq, vdd)
        ro_bits = self.scheme.readout_amp.decide(r_eq, vdd)
        out = np.where(self._xor_mask, xor_bits, ro_bits).astype(np.uint8)
        errors = 0
        if count_errors:
            expected = sb_bits ^ self._partner_bits[:, rnd, :]
            errors = int((out != expected).sum())
        next_bits = np.empty_like(state_bits)
        next_bits[self._targets] = out.reshape(-1)
        return next_bits, errors

    def _step_traced(self, state_bits: np.ndarray, rnd: int):
        rows = state_bits.reshape(-1, 4) @ _NIBBLE_WEIGHTS
        outs = np.zeros((self.variant.nibbles, 4), dtype=np.uint8)
        reads = []
        noisy = self.params.sigma_c2c > 0
        for j, arr in enumerate(self.slices):
            nib, cols = read_round(
                arr,
                int(rows[j]),
                rnd,
                self.scheme,
                self.params,
                self._slice_rngs[j] if noisy else None,
            )
            for b in range(4):
                outs[j, b] = (nib >> b) & 1
            reads.extend(cols)
        next_bits = np.empty_like(state_bits)
        next_bits[self._targets] = outs.reshape(-1)
        out_nibbles = tuple(int(v) for v in outs @ _NIBBLE_WEIGHTS)
        return next_bits, reads, out_nibbles

    def step_round(self, state: int) -> int:
        """Run one read cycle on the given state and latch the result."""
        if self.round_counter >= self.variant.rounds:
            raise PipelineError("stepping past the final round")
        bits = state_to_bits(state, self.variant.block_bits)
        next_bits, _ = self._step_fast(bits, self.round_counter)
        self._log_round_events()
        self.register_bits = next_bits
        self.round_counter += 1
        self.reads_executed += 1
        return bits_to_state(next_bits)

    def _encrypt_bits(self, pt: int, trace: bool, count_errors: bool):
        if not 0 <= pt < (1 << self.variant.block_bits):
            raise PipelineError(f"plaintext does not fit in {self.variant.block_bits} bits")
        self.round_counter = 0
        self.current_log = EventLog(self.variant.name, self.scheme.name)
        bits = state_to_bits(pt, self.variant.block_bits)
        self.register_bits = bits
        traces = []
        errors = 0
        for r in range(self.variant.rounds):
            if trace:
                input_nibbles = tuple(int(v) for v in bits.reshape(-1, 4) @ _NIBBLE_WEIGHTS)
                next_bits, reads, output_nibbles = self._step_traced(bits, r)
            else:
                next_bits, n_err = self._step_fast(bits, r, count_errors)
                errors += n_err
            self._log_round_events()
            self.round_counter = r + 1
            self.reads_executed += 1
            bits = next_bits
            self.register_bits = bits
            if trace:
                traces.append(
                    RoundTrace(r, input_nibbles, output_nibbles, reads, bits_to_state(bits))
                )
        self.blocks_encrypted += 1
        return bits_to_state(bits), traces, errors

    def encrypt(self, pt: int, trace: bool = False):
        """Run all rounds from the plaintext; returns (ciphertext, traces)."""
        ct, traces, _ = self._encrypt_bits(pt, trace, False)
        return ct, traces

    def encrypt_with_error_count(self, pt: int):
        """Like encrypt, but also counts sensed bits that disagree with the
        ideal digital value for the same inputs (per-read comparison)."""
        ct, _, errors = self._encrypt_bits(pt, False, True)
        return ct, errors

    # -- observability ------------------------------------------------------

    @property
    def output_register(self) -> CipherState:
        return CipherState(bits_to_state(self.register_bits), self.variant.block_bits)

    def sensed_bits_per_block(self) -> int:
        return self.variant.rounds * 4 * self.variant.nibbles

    def cell_fingerprint(self) -> tuple:
        return tuple(arr.state_fingerprint() for arr in self.slices)

    def session_log(self) -> EventLog:
        """Programming events plus the last encrypted block's events."""
        return self.write_log.merged_with(self.current_log)


class _KeyRegionView:
    """Adapter so program_slice can rewrite the S-box region with an empty
    key region (no key-cell writes)."""

    def __init__(self, arr: SliceArray):
        self.slice_index = arr.slice_index
        self.columns = arr.key_columns
        self.bits = np.zeros((arr.rounds, len(arr.key_columns)), dtype=np.uint8)


# ---------------------------------------------------------------------------
# Module-level operation wrappers


def initialize_session(
    key: int,
    variant=None,
    sa_scheme="dxor",
    params: Optional[DeviceParams] = None,
    feedback_mode: str = "permuted",
    sbox: SBoxTable = GIFT_SBOX,
) -> EncryptionSession:
    return EncryptionSession(key, variant, sa_scheme, params, feedback_mode, sbox)


def step_round(session: EncryptionSession, state: int) -> int:
    return session.step_round(state)


def encrypt(session: EncryptionSession, plaintext: int, trace: bool = False):
    return session.encrypt(plaintext, trace)


# ---------------------------------------------------------------------------
# Trace export


def export_round_trace(session: EncryptionSession, traces, fp) -> None:
    """JSON lines: a session header record, then one record per round."""
    digits = session.variant.block_bits // 4
    header = {
        "record": "session",
        "variant": session.variant.name,
        "scheme": session.scheme.name,
        "feedback": session.feedback,
        "seed": session.params.seed,
        "sigma_d2d": session.params.sigma_d2d,
        "sigma_c2c": session.params.sigma_c2c,
        "mask": f"{session.mask:x}",
    }
    fp.write(json.dumps(header) + "\n")
    for t in traces:
        fp.write(
            json.dumps(
                {
                    "record": "round",
                    "round": t.round_index,
                    "inputs": "".join(f"{v:x}" for v in reversed(t.input_nibbles)),
                    "outputs": "".join(f"{v:x}" for v in reversed(t.output_nibbles)),
                    "post_state": f"{t.post_state:0{digits}x}",
                }
            )
            + "\n"
        )


def export_analog_trace(traces, fp) -> None:
    """JSON lines: one record per column per read."""
    for t in traces:
        for cr in t.column_reads:
            fp.write(json.dumps(cr.to_json_dict()) + "\n")


# ---------------------------------------------------------------------------
# Monte-Carlo robustness sweep


@dataclass(frozen=True)
class SweepPoint:
    sigma: float
    trials: int
    sensed_bits: int
    bit_errors: int
    block_errors: int

    @property
    def bit_error_rate(self) -> float:
        return self.bit_errors / self.sensed_bits if self.sensed_bits else 0.0


def _trial_seed(seed: int, trial: int) -> int:
    return seed * 1_000_003 + trial


def run_sweep(
    variant,
    scheme,
    sigmas,
    blocks: int,
    seed: int = 0,
    base_params: Optional[DeviceParams] = None,
    feedback: str = "permuted",
) -> list[SweepPoint]:
    """Cycle-to-cycle variation sweep with common random numbers.

    Every sigma point replays the same trial keys, plaintexts and noise
    draws (scaled by sigma), so the empirical error counts are directly
    comparable across the grid.
    """
    variant = variant_for(variant)
    base = base_params if base_params is not None else DeviceParams()
    points = []
    for sigma in sigmas:
        if sigma < 0:
            raise PipelineError("sigma values must be non-negative")
        bit_errors = 0
        block_errors = 0
        sensed = 0
        for t in range(blocks):
            material = np.random.default_rng(np.random.SeedSequence((seed, t)))
            key = int.from_bytes(material.bytes(16), "big")
            pt = int.from_bytes(material.bytes(variant.block_bits // 8), "big")
            params = replace(base, sigma_c2c=float(sigma), seed=_trial_seed(seed, t))
            session = EncryptionSession(key, variant, scheme, params, feedback)
            ct, errors = session.encrypt_with_error_count(pt)
            bit_errors += errors
            sensed += session.sensed_bits_per_block()
            block_errors += int(ct != encrypt_block(pt, key, variant))
        points.append(SweepPoint(float(sigma), blocks, sensed, bit_errors, block_errors))
    return points


def format_sweep_table(points) -> str:
    lines = ["# sigma_c2c trials sensed_bits bit_errors ber block_errors"]
    for p in points:
        lines.append(
            f"{p.sigma:.6g} {p.trials} {p.sensed_bits} {p.bit_errors} "
            f"{p.bit_error_rate:.3e} {p.block_errors}"
        )
    return "\n".join(lines) + "\n"
