"""Permissioned hash-chained ledger.

Blocks carry an id, a timestamp, a Merkle root over a variable-length
transaction list and the SHA-256 digest of their parent's header.  All
digests are taken over a canonical little-endian, length-prefixed byte
encoding, so they are reproducible bit for bit.

Byte layouts
------------
transaction : u64 tx_id | u8 kind | payload fields in declaration order
              (int -> i64, float -> f64, str -> u32 length + utf-8)
header      : u64 block_id | 32B prev_hash | 32B merkle_root | i64 timestamp
              | u32 difficulty | u32 tx_count | u64 proposer | u64 nonce
chain       : u32 block count | per block: header, u32 tx count, per tx
              u32 length + tx bytes | 32B head digest
"""

from __future__ import annotations

import enum
import hashlib
import json
import struct
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

from birds.airframe import UavSpec
from birds.errors import (AlreadyRegistered, BlockRejected, DecodeError, EmptyBlock,
                          InvalidParameter, MalformedRegistration)

ZERO_HASH = bytes(32)
TA_PROPOSER = 0

_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")
_U32 = struct.Struct("<I")
_TX_PREFIX = struct.Struct("<QB")
_HEADER = struct.Struct("<Q32s32sqIIQQ")


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class TxKind(enum.IntEnum):
    REGISTRATION = 1
    DELIVERY_RECORD = 2
    REPUTATION_UPDATE = 3
    HEARTBEAT = 4


@dataclass(frozen=True)
class Registration:
    node_id: int
    size_class: str
    empty_weight: float
    payload_capacity: float
    battery_capacity: float
    rated_flight_duration: float
    rated_travel_distance: float
    registered_at: int

    def to_spec(self) -> UavSpec:
        return UavSpec(
            node_id=self.node_id,
            size_class=self.size_class,
            empty_weight=self.empty_weight,
            payload_capacity=self.payload_capacity,
            battery_capacity=self.battery_capacity,
            rated_flight_duration=self.rated_flight_duration,
            rated_travel_distance=self.rated_travel_distance,
        )


@dataclass(frozen=True)
class DeliveryRecord:
    job_id: int
    uav_id: int
    edt: float
    adt: float
    cost: float


@dataclass(frozen=True)
class ReputationUpdate:
    uav_id: int
    score: float


@dataclass(frozen=True)
class Heartbeat:
    uav_id: int
    timestamp: int


Payload = Union[Registration, DeliveryRecord, ReputationUpdate, Heartbeat]

_PAYLOAD_TYPES = {
    TxKind.REGISTRATION: Registration,
    TxKind.DELIVERY_RECORD: DeliveryRecord,
    TxKind.REPUTATION_UPDATE: ReputationUpdate,
    TxKind.HEARTBEAT: Heartbeat,
}
_KIND_OF = {cls: kind for kind, cls in _PAYLOAD_TYPES.items()}

_FIELD_CODES = {"int": "i", "float": "f", "str": "s"}
_SCHEMAS = {
    cls: tuple((f.name, _FIELD_CODES[f.type]) for f in fields(cls))
    for cls in _PAYLOAD_TYPES.values()
}


def _encode_field(code: str, value) -> bytes:
    if code == "i":
        return _I64.pack(int(value))
    if code == "f":
        return _F64.pack(float(value))
    raw = str(value).encode("utf-8")
    return _U32.pack(len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def field(self, code: str):
        if code == "i":
            return self.unpack(_I64)[0]
        if code == "f":
            return self.unpack(_F64)[0]
        (n,) = self.unpack(_U32)
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid utf-8 string") from exc

    def done(self):
        if self.pos != len(self.data):
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes")


@dataclass(frozen=True)
class Transaction:
    tx_id: int
    kind: TxKind
    payload: Payload

    def __post_init__(self):
        if _KIND_OF.get(type(self.payload)) != self.kind:
            raise InvalidParameter(f"payload {type(self.payload).__name__} does not match kind {self.kind!r}")

    @classmethod
    def of(cls, tx_id: int, payload: Payload) -> "Transaction":
        return cls(tx_id, _KIND_OF[type(payload)], payload)

    @cached_property
    def encoded(self) -> bytes:
        parts = [_TX_PREFIX.pack(self.tx_id, int(self.kind))]
        for name, code in _SCHEMAS[type(self.payload)]:
            parts.append(_encode_field(code, getattr(self.payload, name)))
        return b"".join(parts)

    @cached_property
    def digest(self) -> bytes:
        return sha256(self.encoded)

    @property
    def byte_size(self) -> int:
        return len(self.encoded)

    @classmethod
    def decode(cls, data: bytes) -> "Transaction":
        reader = _Reader(data)
        tx_id, kind_code = reader.unpack(_TX_PREFIX)
        try:
            kind = TxKind(kind_code)
        except ValueError as exc:
            raise DecodeError(f"unknown transaction kind {kind_code}") from exc
        payload_cls = _PAYLOAD_TYPES[kind]
        values = {name: reader.field(code) for name, code in _SCHEMAS[payload_cls]}
        reader.done()
        return cls(tx_id, kind, payload_cls(**values))

    def to_json(self) -> dict:
        payload = {name: getattr(self.payload, name) for name, _ in _SCHEMAS[type(self.payload)]}
        return {"tx_id": self.tx_id, "kind": self.kind.name, "byte_size": self.byte_size,
                "payload": payload}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Transaction":
        kind = TxKind[obj["kind"]]
        return cls(obj["tx_id"], kind, _PAYLOAD_TYPES[kind](**obj["payload"]))


def merkle_root(transactions: Sequence[Transaction]) -> bytes:
    """Root of the binary hash tree over the transaction digests.

    Odd levels duplicate their last node.

    Raises:
        EmptyBlock: ``transactions`` is empty.
    """
    if not transactions:
        raise EmptyBlock("a block must carry at least one transaction")
    level = [tx.digest for tx in transactions]
    while len(level) > 1:
        if len(level) % 2:
            level.append(level[-1])
        level = [sha256(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
    return level[0]


@dataclass(frozen=True)
class BlockHeader:
    block_id: int
    prev_hash: bytes
    merkle_root: bytes
    timestamp: int
    difficulty: int
    tx_count: int
    proposer: int
    nonce: int = 0

    @cached_property
    def encoded(self) -> bytes:
        return _HEADER.pack(self.block_id, self.prev_hash, self.merkle_root, self.timestamp,
                            self.difficulty, self.tx_count, self.proposer, self.nonce)

    @cached_property
    def hash(self) -> bytes:
        return sha256(self.encoded)

    @classmethod
    def decode(cls, data: bytes) -> "BlockHeader":
        if len(data) != _HEADER.size:
            raise DecodeError("header has wrong length")
        return cls(*_HEADER.unpack(data))


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    transactions: tuple[Transaction, ...]

    @property
    def block_id(self) -> int:
        return self.header.block_id

    @property
    def hash(self) -> bytes:
        return self.header.hash


def leading_zero_bits(digest: bytes) -> int:
    return len(digest) * 8 - int.from_bytes(digest, "big").bit_length()


def meets_difficulty(header: BlockHeader) -> bool:
    return leading_zero_bits(header.hash) >= header.difficulty


@dataclass(frozen=True)
class Chain:
    """Immutable sequence of blocks plus the digest of its tip header.

    Appending returns a new Chain sharing the existing blocks.
    """

    blocks: tuple[Block, ...]
    head: bytes = field(default=ZERO_HASH)

    @classmethod
    def genesis(cls) -> "Chain":
        tx = Transaction.of(0, Heartbeat(uav_id=TA_PROPOSER, timestamp=0))
        header = BlockHeader(block_id=0, prev_hash=ZERO_HASH, merkle_root=merkle_root([tx]),
                             timestamp=0, difficulty=0, tx_count=1, proposer=TA_PROPOSER)
        return cls((Block(header, (tx,)),), header.hash)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(self.blocks)

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def tx_total(self) -> int:
        return sum(len(b.transactions) for b in self.blocks)

    def transactions(self, kind: TxKind | None = None) -> Iterator[Transaction]:
        for block in self.blocks:
            for tx in block.transactions:
                if kind is None or tx.kind == kind:
                    yield tx

    def digest(self) -> str:
        return self.head.hex()

    def to_bytes(self) -> bytes:
        parts = [_U32.pack(len(self.blocks))]
        for block in self.blocks:
            parts.append(block.header.encoded)
            parts.append(_U32.pack(len(block.transactions)))
            for tx in block.transactions:
                parts.append(_U32.pack(len(tx.encoded)))
                parts.append(tx.encoded)
        parts.append(self.head)
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Chain":
        reader = _Reader(data)
        (n_blocks,) = reader.unpack(_U32)
        blocks = []
        for _ in range(n_blocks):
            header = BlockHeader.decode(reader.take(_HEADER.size))
            (n_txs,) = reader.unpack(_U32)
            txs = []
            for _ in range(n_txs):
                (size,) = reader.unpack(_U32)
                try:
                    txs.append(Transaction.decode(reader.take(size)))
                except (InvalidParameter, TypeError) as exc:
                    raise DecodeError(str(exc)) from exc
            blocks.append(Block(header, tuple(txs)))
        head = reader.take(32)
        reader.done()
        return cls(tuple(blocks), head)

    def to_json(self) -> list:
        out = []
        for block in self.blocks:
            h = block.header
            out.append({
                "block_id": h.block_id,
                "prev_hash": h.prev_hash.hex(),
                "merkle_root": h.merkle_root.hex(),
                "timestamp": h.timestamp,
                "difficulty": h.difficulty,
                "tx_count": h.tx_count,
                "proposer": h.proposer,
                "nonce": h.nonce,
                "hash": h.hash.hex(),
                "transactions": [tx.to_json() for tx in block.transactions],
            })
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, blocks: list) -> "Chain":
        out = []
        for obj in blocks:
            header = BlockHeader(
                block_id=obj["block_id"], prev_hash=bytes.fromhex(obj["prev_hash"]),
                merkle_root=bytes.fromhex(obj["merkle_root"]), timestamp=obj["timestamp"],
                difficulty=obj["difficulty"], tx_count=obj["tx_count"],
                proposer=obj["proposer"], nonce=obj["nonce"])
            txs = tuple(Transaction.from_json(t) for t in obj["transactions"])
            out.append(Block(header, txs))
        head = out[-1].header.hash if out else ZERO_HASH
        return cls(tuple(out), head)


def _candidate_header(chain: Chain, txs: Sequence[Transaction], proposer: int,
                      timestamp: int, difficulty: int, nonce: int) -> BlockHeader:
    tip = chain.tip.header
    return BlockHeader(block_id=tip.block_id + 1, prev_hash=tip.hash,
                       merkle_root=merkle_root(txs), timestamp=timestamp,
                       difficulty=difficulty, tx_count=len(txs), proposer=proposer,
                       nonce=nonce)


def mine_nonce(chain: Chain, txs: Sequence[Transaction], proposer: int, timestamp: int,
               difficulty: int) -> tuple[int, int]:
    """Search nonces 0, 1, 2, ... for a header meeting ``difficulty``.

    Returns ``(nonce, attempts)``.
    """
    header = _candidate_header(chain, txs, proposer, timestamp, difficulty, 0)
    prefix = hashlib.sha256(header.encoded[:-8])
    nonce = 0
    while True:
        h = prefix.copy()
        h.update(nonce.to_bytes(8, "little"))
        if leading_zero_bits(h.digest()) >= difficulty:
            return nonce, nonce + 1
        nonce += 1


def append_block(chain: Chain, txs: Sequence[Transaction], proposer: int, timestamp: int,
                 difficulty: int = 0, nonce: int = 0) -> Chain:
    """Return ``chain`` extended by one block holding ``txs``.

    Raises:
        EmptyBlock: ``txs`` is empty.
        BlockRejected: stale timestamp, or ``nonce`` misses ``difficulty``.
    """
    txs = tuple(txs)
    if not txs:
        raise EmptyBlock("a block must carry at least one transaction")
    if not isinstance(timestamp, int):
        raise BlockRejected("timestamps are integer seconds of simulated time")
    if timestamp < chain.tip.header.timestamp:
        raise BlockRejected(
            f"timestamp {timestamp} precedes tip timestamp {chain.tip.header.timestamp}")
    if difficulty < 0:
        raise BlockRejected("difficulty must be nonnegative")
    header = _candidate_header(chain, txs, proposer, timestamp, difficulty, nonce)
    if not meets_difficulty(header):
        raise BlockRejected(f"nonce {nonce} does not meet difficulty {difficulty}")
    return Chain(chain.blocks + (Block(header, txs),), header.hash)


def chain_fault(chain: Chain) -> str | None:
    """First violated chain invariant as a message, or None for a valid chain."""
    if not chain.blocks:
        return "chain has no genesis block"
    parent = None
    for block in chain.blocks:
        h = block.header
        if h.tx_count != len(block.transactions):
            return f"block {h.block_id}: tx_count {h.tx_count} != {len(block.transactions)}"
        if not block.transactions:
            return f"block {h.block_id}: empty transaction list"
        if merkle_root(block.transactions) != h.merkle_root:
            return f"block {h.block_id}: merkle root mismatch"
        if not meets_difficulty(h):
            return f"block {h.block_id}: header hash misses difficulty {h.difficulty}"
        if parent is None:
            if h.block_id != 0 or h.prev_hash != ZERO_HASH:
                return "genesis block malformed"
        else:
            p = parent.header
            if h.block_id != p.block_id + 1:
                return f"block {h.block_id}: id does not follow {p.block_id}"
            if h.prev_hash != p.hash:
                return f"block {h.block_id}: prev_hash mismatch"
            if h.timestamp < p.timestamp:
                return f"block {h.block_id}: timestamp regresses"
        parent = block
    if chain.head != chain.tip.header.hash:
        return "head digest does not match tip header"
    return None


def validate_chain(chain: Chain) -> bool:
    return chain_fault(chain) is None


def validate_encoded(data: bytes) -> bool:
    """Decode a serialized chain and validate it; undecodable bytes are invalid."""
    try:
        chain = Chain.from_bytes(data)
    except DecodeError:
        return False
    return validate_chain(chain)


_REGISTRATION_FIELDS = ("node_id", "size_class", "empty_weight", "payload_capacity",
                        "battery_capacity", "rated_flight_duration", "rated_travel_distance")


def _registered_ids(txs: Iterable[Transaction]) -> set[int]:
    return {tx.payload.node_id for tx in txs if tx.kind == TxKind.REGISTRATION}


def register_uav(chain: Chain, spec: UavSpec | Mapping, timestamp: int, tx_id: int | None = None,
                 pending: Sequence[Transaction] = ()) -> Transaction:
    """Build a Registration transaction for ``spec``.

    ``spec`` may be a UavSpec or a plain mapping of its attributes; every
    attribute is required.  ``pending`` holds transactions not yet on chain
    that must also be checked for duplicates.

    Raises:
        MalformedRegistration: an attribute is missing or invalid.
        AlreadyRegistered: ``node_id`` already appears on chain or in ``pending``.
    """
    if isinstance(spec, UavSpec):
        attrs = {name: getattr(spec, name) for name in _REGISTRATION_FIELDS}
    else:
        missing = [name for name in _REGISTRATION_FIELDS if spec.get(name) is None]
        if missing:
            raise MalformedRegistration(f"registration lacks {', '.join(missing)}")
        attrs = {name: spec[name] for name in _REGISTRATION_FIELDS}
        try:
            UavSpec(**attrs)
        except (ValueError, TypeError) as exc:
            raise MalformedRegistration(str(exc)) from exc
    attrs["size_class"] = getattr(attrs["size_class"], "value", attrs["size_class"])
    node_id = int(attrs["node_id"])
    if node_id in _registered_ids(chain.transactions(TxKind.REGISTRATION)) or \
            node_id in _registered_ids(pending):
        raise AlreadyRegistered(f"node {node_id} is already registered")
    if tx_id is None:
        tx_id = chain.tx_total + len(pending)
    payload = Registration(registered_at=int(timestamp), **attrs)
    return Transaction.of(tx_id, payload)


def lookup_identity(chain: Chain, node_id: int) -> UavSpec | None:
    for block in reversed(chain.blocks):
        for tx in reversed(block.transactions):
            if tx.kind == TxKind.REGISTRATION and tx.payload.node_id == node_id:
                return tx.payload.to_spec()
    return None
