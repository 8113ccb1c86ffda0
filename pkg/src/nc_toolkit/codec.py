"""Coding-vector generation, packet streams and an incremental decoder.

The decoder keeps the received coding vectors in reduced row-echelon form so
that the matrix rank (and therefore the defect) is known after every single
insertion, which is what lets a simulation stop a stream the moment a
receiver recovers.  While eliminating it counts fundamental finite-field
operations: one op per scalar slot actually touched by a multiply, add,
subtract or fused multiply-add.  Row updates that a batch decoder would defer
to back-substitution are performed eagerly and tallied separately in
``backsub_ops`` so either counting convention can be reported.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as _field
from typing import IO, Iterator

import numpy as np

from .gf import FieldSpec

SCHEMES = ("rlnc", "srlnc", "s-rlnc", "s-srlnc")

DEGENERATE = "degenerate"
RANDOM = "random"


class DimensionMismatch(ValueError):
    """Vector length does not match the decoder's column count."""


def is_systematic(scheme: str) -> bool:
    return scheme in ("srlnc", "s-srlnc")


def is_sparse(scheme: str) -> bool:
    return scheme in ("s-rlnc", "s-srlnc")


def dense_counterpart(scheme: str) -> str:
    """Baseline scheme with the coefficient distribution pinned at p = 1/q."""
    return {"s-rlnc": "rlnc", "s-srlnc": "srlnc"}.get(scheme, scheme)


@dataclass(frozen=True)
class SparsityParams:
    """Per-layer coefficient distribution: zero with probability ``p_zero``,
    otherwise uniform over the q-1 nonzero field elements."""

    p_zero: float
    k: int
    field: FieldSpec

    def __post_init__(self):
        if not 0.0 < self.p_zero < 1.0:
            raise ValueError(f"p_zero must be in (0, 1), got {self.p_zero}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")


@dataclass(frozen=True, eq=False)
class CodingVector:
    """k coefficients plus a tag distinguishing systematic unit vectors."""

    coefficients: np.ndarray
    kind: str = RANDOM

    @property
    def is_zero(self) -> bool:
        return not self.coefficients.any()

    def __len__(self) -> int:
        return len(self.coefficients)


def unit_vector(k: int, index: int) -> CodingVector:
    coeffs = np.zeros(k, dtype=np.uint8)
    coeffs[index] = 1
    return CodingVector(coeffs, DEGENERATE)


def draw_coding_vector(sparsity: SparsityParams, rng: np.random.Generator) -> CodingVector:
    """Draw one random coding vector; coefficients are i.i.d. and the result
    may be all-zero."""
    k = sparsity.k
    nz = rng.random(k) >= sparsity.p_zero
    coeffs = np.zeros(k, dtype=np.uint8)
    if sparsity.field.q == 2:
        coeffs[nz] = 1
    else:
        n = int(np.count_nonzero(nz))
        if n:
            coeffs[nz] = rng.integers(1, 256, size=n, dtype=np.uint8)
    return CodingVector(coeffs, RANDOM)


@dataclass(frozen=True)
class PacketStreamConfig:
    """How one layer's packet stream is produced.

    ``rng_seed`` names the stream: receivers are assumed to regenerate the
    coding coefficients from the seed carried with each packet, so the seed is
    part of the stream identity and is recorded in result manifests.
    """

    scheme: str
    pruned: bool
    sparsity: SparsityParams
    rng_seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not is_sparse(self.scheme):
            q = self.sparsity.field.q
            if abs(self.sparsity.p_zero - 1.0 / q) > 1e-12:
                raise ValueError(
                    f"{self.scheme} requires p_zero = 1/q = {1.0 / q!r}"
                )
            if self.pruned:
                raise ValueError("pruning is only meaningful for sparse schemes")


def generate_packet(
    config: PacketStreamConfig, index: int, rng: np.random.Generator
) -> CodingVector:
    """Coding vector for stream position ``index``.

    Systematic schemes emit the k unit vectors in order first.  In pruned mode
    all-zero draws are rejected and redrawn (consuming RNG state) so the
    all-zero packet is never emitted.
    """
    if index < 0:
        raise ValueError("packet index must be >= 0")
    if is_systematic(config.scheme) and index < config.sparsity.k:
        return unit_vector(config.sparsity.k, index)
    vec = draw_coding_vector(config.sparsity, rng)
    if config.pruned:
        while vec.is_zero:
            vec = draw_coding_vector(config.sparsity, rng)
    return vec


class PacketStream:
    """Stateful iterator over a stream configuration with its own generator."""

    def __init__(self, config: PacketStreamConfig):
        self.config = config
        self.index = 0
        self.rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(config.rng_seed))
        )

    def __iter__(self) -> Iterator[CodingVector]:
        return self

    def __next__(self) -> CodingVector:
        vec = generate_packet(self.config, self.index, self.rng)
        self.index += 1
        return vec


class PacketTraceWriter:
    """Line-delimited JSON dump of transmitted packets, for debugging.

    One record per transmitted packet: layer, stream index, vector kind, the
    coefficients as a hex string, and the per-user erased flags.
    """

    def __init__(self, stream: IO[str]):
        self._stream = stream

    def __call__(self, record: dict) -> None:
        self._stream.write(json.dumps(record, separators=(",", ":")) + "\n")


def trace_record(
    layer: int, index: int, vector: CodingVector, erased: np.ndarray
) -> dict:
    return {
        "layer": layer,
        "index": index,
        "kind": vector.kind,
        "coefficients": vector.coefficients.tobytes().hex(),
        "erased": [bool(e) for e in erased],
    }


@dataclass(frozen=True)
class InsertResult:
    innovative: bool
    ops_added: int


@dataclass(frozen=True)
class DecodeSummary:
    solved: bool
    total_ops: int
    forward_ops: int
    backsub_ops: int


def _bitmask(coeffs: np.ndarray) -> int:
    return int.from_bytes(np.packbits(coeffs, bitorder="little").tobytes(), "little")


class DecoderState:
    """Incrementally row-reduced receiver matrix with operation counting.

    Parameters
    ----------
    k:
        Number of source packets (columns).
    field:
        Field the coefficients live in.
    payload_symbols:
        Length of the payload attached to each packet.  0 selects
        analysis-only runs where just the coefficient arithmetic is counted;
        a positive value stores payload rows, decodes them, and adds
        ``payload_symbols`` ops per row operation (payload rows are treated
        as dense).
    """

    def __init__(self, k: int, field: FieldSpec, payload_symbols: int = 0):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.field = field
        self.payload_symbols = payload_symbols
        self.rank = 0
        self.forward_ops = 0
        self.backsub_ops = 0
        if field.q == 2:
            self._pivots: dict[int, int] = {}
            self._pivot_mask = 0
            self._pay: dict[int, np.ndarray] = {}
        else:
            self._rows = np.zeros((k, k), dtype=np.uint8)
            self._cols = np.zeros(k, dtype=np.int64)
            self._prows = (
                np.zeros((k, payload_symbols), dtype=np.uint8)
                if payload_symbols
                else None
            )

    @property
    def defect(self) -> int:
        return self.k - self.rank

    @property
    def op_count(self) -> int:
        return self.forward_ops + self.backsub_ops

    def insert(self, vector: CodingVector, payload: np.ndarray | None = None) -> InsertResult:
        """Eliminate ``vector`` against the stored pivots.

        Returns whether the rank increased and the number of fundamental
        field operations this insertion cost (forward elimination of the
        incoming row plus the eager column-clearing of stored rows).
        """
        coeffs = vector.coefficients
        if len(coeffs) != self.k:
            raise DimensionMismatch(f"expected {self.k} coefficients, got {len(coeffs)}")
        if self.payload_symbols:
            if payload is None:
                raise ValueError("decoder was configured with payloads; none given")
            payload = np.asarray(payload, dtype=np.uint8).copy()
        if self.field.q == 2:
            return self._insert_gf2(coeffs, payload)
        return self._insert_tabled(coeffs, payload)

    def _insert_gf2(self, coeffs: np.ndarray, payload) -> InsertResult:
        pm = self.payload_symbols
        v = _bitmask(coeffs)
        ops = 0
        sel = v & self._pivot_mask
        while sel:
            low = sel & -sel
            col = low.bit_length() - 1
            sel ^= low
            row = self._pivots[col]
            ops += row.bit_count() + pm
            v ^= row
            if pm:
                payload ^= self._pay[col]
        if v == 0:
            self.forward_ops += ops
            return InsertResult(False, ops)
        pivot_col = (v & -v).bit_length() - 1
        # GF(2) pivots are already 1: normalization is free.
        bops = 0
        nnz = v.bit_count()
        for col, row in self._pivots.items():
            if (row >> pivot_col) & 1:
                bops += nnz + pm
                self._pivots[col] = row ^ v
                if pm:
                    self._pay[col] ^= payload
        self._pivots[pivot_col] = v
        self._pivot_mask |= 1 << pivot_col
        if pm:
            self._pay[pivot_col] = payload
        self.rank += 1
        self.forward_ops += ops
        self.backsub_ops += bops
        return InsertResult(True, ops + bops)

    def _insert_tabled(self, coeffs: np.ndarray, payload) -> InsertResult:
        f = self.field
        pm = self.payload_symbols
        r = self.rank
        v = coeffs.astype(np.uint8, copy=True)
        ops = 0
        if r:
            pivot_vals = v[self._cols[:r]]
            sel = np.nonzero(pivot_vals)[0]
            if sel.size:
                rows = self._rows[sel]
                ops += int(np.count_nonzero(rows)) + pm * sel.size
                v ^= f.combine(pivot_vals[sel], rows)
                if pm:
                    payload ^= f.combine(pivot_vals[sel], self._prows[sel])
        support = np.nonzero(v)[0]
        if support.size == 0:
            self.forward_ops += ops
            return InsertResult(False, ops)
        pivot_col = int(support[0])
        lead = int(v[pivot_col])
        if lead != 1:
            inv = f.inv(lead)
            v = f.mul_vec(inv, v)
            ops += int(support.size) + pm
            if pm:
                payload = f.mul_vec(inv, payload)
        bops = 0
        if r:
            col_vals = self._rows[:r, pivot_col]
            sel = np.nonzero(col_vals)[0]
            if sel.size:
                self._rows[sel] ^= f.scaled_outer(col_vals[sel], v)
                bops += (int(support.size) + pm) * sel.size
                if pm:
                    self._prows[sel] ^= f.scaled_outer(col_vals[sel], payload)
        self._rows[r] = v
        self._cols[r] = pivot_col
        if pm:
            self._prows[r] = payload
        self.rank += 1
        self.forward_ops += ops
        self.backsub_ops += bops
        return InsertResult(True, ops + bops)

    def finish(self) -> DecodeSummary:
        """Close out the decode.

        The stored matrix is kept fully reduced as packets arrive, so the
        column-clearing work a batch decoder would do here has already been
        performed and counted in ``backsub_ops``; this reports the totals.
        """
        return DecodeSummary(
            solved=self.rank == self.k,
            total_ops=self.op_count,
            forward_ops=self.forward_ops,
            backsub_ops=self.backsub_ops,
        )

    def recovered_payloads(self) -> np.ndarray:
        """The k decoded source payloads, in source order.

        Only valid once rank == k (the reduced matrix is then the identity,
        so the payload row pivoting on column i is source packet i).
        """
        if self.payload_symbols == 0:
            raise ValueError("decoder was configured without payloads")
        if self.rank != self.k:
            raise ValueError("message not recovered yet")
        out = np.zeros((self.k, self.payload_symbols), dtype=np.uint8)
        if self.field.q == 2:
            for col, row in self._pay.items():
                out[col] = row
        else:
            for slot in range(self.k):
                out[self._cols[slot]] = self._prows[slot]
        return out
