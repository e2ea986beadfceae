import hashlib
import json
import struct
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from birds.airframe import SizeClass, UavSpec
from birds.errors import (AlreadyRegistered, BlockRejected, DecodeError, EmptyBlock,
                          MalformedRegistration)
from birds.ledger import (ZERO_HASH, Block, BlockHeader, Chain, DeliveryRecord, Heartbeat,
                          Transaction, TxKind, append_block, chain_fault, lookup_identity,
                          merkle_root, mine_nonce, register_uav, validate_chain,
                          validate_encoded)

from strategies import chains, tx_lists


def H(b):
    return hashlib.sha256(b).digest()


def reference_root(txs):
    """Straight recursive Merkle definition, independent of the library loop."""
    def build(nodes):
        if len(nodes) == 1:
            return nodes[0]
        if len(nodes) % 2:
            nodes = nodes + [nodes[-1]]
        return build([H(nodes[i] + nodes[i + 1]) for i in range(0, len(nodes), 2)])
    return build([H(tx.encoded) for tx in txs])


def hb(tx_id, uav=1, t=0):
    return Transaction.of(tx_id, Heartbeat(uav, t))


def spec(node_id=7):
    return UavSpec(node_id, SizeClass.MEDIUM, 3.0, 6.0, 2e6, 3600.0, 4e5)


# --- transactions ------------------------------------------------------------

def test_transaction_encoding_layout():
    tx = hb(5, uav=3, t=9)
    assert tx.encoded == struct.pack("<QBqq", 5, TxKind.HEARTBEAT, 3, 9)
    assert tx.byte_size == len(tx.encoded) > 0
    assert tx.digest == H(tx.encoded)


@given(tx_lists(max_size=1))
def test_transaction_roundtrip(txs):
    tx = txs[0]
    assert Transaction.decode(tx.encoded) == tx
    assert Transaction.from_json(json.loads(json.dumps(tx.to_json()))) == tx


def test_transaction_decode_rejects_garbage():
    with pytest.raises(DecodeError):
        Transaction.decode(b"\x00\x01")
    with pytest.raises(DecodeError):
        Transaction.decode(hb(1).encoded + b"\x00")


# --- merkle ------------------------------------------------------------------

def test_merkle_examples():
    a, b, c = hb(1), hb(2), hb(3)
    assert merkle_root([a]) == H(a.encoded)
    assert merkle_root([a, b]) == H(H(a.encoded) + H(b.encoded))
    ab = H(H(a.encoded) + H(b.encoded))
    cc = H(H(c.encoded) + H(c.encoded))
    assert merkle_root([a, b, c]) == H(ab + cc)


def test_merkle_empty():
    with pytest.raises(EmptyBlock):
        merkle_root([])


@pytest.mark.parametrize("n", range(1, 10))
def test_merkle_matches_reference_for_small_lists(n):
    txs = [Transaction.of(k, DeliveryRecord(k, k + 1, 1.5 * k + 1, 2.0, 3.0)) for k in range(n)]
    assert merkle_root(txs) == reference_root(txs)


@given(tx_lists(min_size=2, max_size=9), st.data())
def test_merkle_permutation_sensitive(txs, data):
    i = data.draw(st.integers(0, len(txs) - 1))
    j = data.draw(st.integers(0, len(txs) - 1).filter(lambda k: txs[k].digest != txs[i].digest))
    swapped = list(txs)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    assert merkle_root(swapped) != merkle_root(txs)
    assert merkle_root(txs) == merkle_root(list(txs))


# --- append / validate -------------------------------------------------------

def test_genesis_shape():
    g = Chain.genesis()
    h = g.tip.header
    assert (h.block_id, h.prev_hash, h.timestamp, h.proposer, h.tx_count) == (0, ZERO_HASH, 0, 0, 1)
    assert validate_chain(g)


def test_minimal_append():
    chain = append_block(Chain.genesis(), [hb(1)], proposer=2, timestamp=10)
    assert len(chain) == 2 and validate_chain(chain)
    assert chain.tip.header.prev_hash == chain.blocks[0].header.hash


def test_stale_timestamp_rejected():
    chain = append_block(Chain.genesis(), [hb(1)], 2, 10)
    with pytest.raises(BlockRejected):
        append_block(chain, [hb(2)], 2, 9)


def test_empty_block_rejected():
    with pytest.raises(EmptyBlock):
        append_block(Chain.genesis(), [], 1, 1)


def test_pow_nonce_enforced():
    g = Chain.genesis()
    nonce, attempts = mine_nonce(g, [hb(1)], 1, 5, difficulty=8)
    assert attempts == nonce + 1
    mined = append_block(g, [hb(1)], 1, 5, difficulty=8, nonce=nonce)
    assert validate_chain(mined)
    bad = nonce + 1
    while True:
        try:
            append_block(g, [hb(1)], 1, 5, difficulty=8, nonce=bad)
            bad += 1
        except BlockRejected:
            break


def _chain(n):
    chain = Chain.genesis()
    for k in range(1, n + 1):
        chain = append_block(chain, [hb(k, uav=k, t=k)], k, k)
    return chain


def test_mutating_stored_tx_breaks_validation():
    chain = _chain(3)
    blk = chain.blocks[2]
    forged_tx = Transaction.of(blk.transactions[0].tx_id, Heartbeat(99, 2))
    forged = Chain(chain.blocks[:2] + (Block(blk.header, (forged_tx,)),) + chain.blocks[3:],
                   chain.head)
    assert not validate_chain(forged)
    assert "merkle" in chain_fault(forged)


def test_forged_prev_hash_at_block_3():
    chain = _chain(5)
    blk = chain.blocks[3]
    header = replace(blk.header, prev_hash=b"\x11" * 32)
    blocks = list(chain.blocks)
    blocks[3] = Block(header, blk.transactions)
    assert not validate_chain(Chain(tuple(blocks), chain.head))


def test_swapped_blocks_2_and_3():
    chain = _chain(5)
    blocks = list(chain.blocks)
    blocks[2], blocks[3] = blocks[3], blocks[2]
    assert not validate_chain(Chain(tuple(blocks), chain.head))


def test_truncated_tip_detected():
    chain = _chain(4)
    assert not validate_chain(Chain(chain.blocks[:-1], chain.head))


@given(chains(max_blocks=12))
def test_append_preserves_validity(chain):
    assert validate_chain(chain)
    nxt = append_block(chain, [hb(10**6)], 1, chain.tip.header.timestamp)
    assert validate_chain(nxt)


@given(chains(max_blocks=8))
def test_bytes_and_json_roundtrip(chain):
    assert Chain.from_bytes(chain.to_bytes()) == chain
    restored = Chain.from_json(json.loads(chain.dumps()))
    assert restored.to_bytes() == chain.to_bytes()


def test_chain_json_layout():
    doc = json.loads(_chain(1).dumps())
    assert list(doc[1].keys()) == ["block_id", "prev_hash", "merkle_root", "timestamp",
                                   "difficulty", "tx_count", "proposer", "nonce", "hash",
                                   "transactions"]
    assert doc[1]["prev_hash"] == doc[0]["hash"]
    assert doc[1]["prev_hash"] == doc[1]["prev_hash"].lower()


@given(chains(max_blocks=6), st.data())
def test_single_bit_flip_detected(chain, data):
    raw = bytearray(chain.to_bytes())
    bit = data.draw(st.integers(0, len(raw) * 8 - 1))
    raw[bit // 8] ^= 1 << (bit % 8)
    assert not validate_encoded(bytes(raw))


def test_header_decode_length():
    with pytest.raises(DecodeError):
        BlockHeader.decode(b"\x00" * 10)


# --- registry ----------------------------------------------------------------

def test_register_and_lookup():
    chain = Chain.genesis()
    tx = register_uav(chain, spec(7), 0)
    assert tx.kind == TxKind.REGISTRATION and tx.payload.node_id == 7
    chain = append_block(chain, [tx], 0, 0)
    assert lookup_identity(chain, 7) == spec(7)
    assert lookup_identity(chain, 8) is None
    with pytest.raises(AlreadyRegistered):
        register_uav(chain, spec(7), 1)


def test_duplicate_within_pending_pool():
    first = register_uav(Chain.genesis(), spec(7), 0)
    with pytest.raises(AlreadyRegistered):
        register_uav(Chain.genesis(), spec(7), 0, pending=[first])


def test_malformed_registration():
    attrs = {"node_id": 7, "size_class": "small", "empty_weight": 1.0, "payload_capacity": 2.0,
             "rated_flight_duration": 3600.0, "rated_travel_distance": 1e5}
    with pytest.raises(MalformedRegistration):
        register_uav(Chain.genesis(), attrs, 0)
    with pytest.raises(MalformedRegistration):
        register_uav(Chain.genesis(), {**attrs, "battery_capacity": -5.0}, 0)
    ok = register_uav(Chain.genesis(), {**attrs, "battery_capacity": 5.0}, 0)
    assert ok.payload.battery_capacity == 5.0


def test_lookup_finds_block_2_of_10():
    chain = Chain.genesis()
    for k in range(1, 10):
        txs = [register_uav(chain, spec(42), k, tx_id=100)] if k == 2 else [hb(k)]
        chain = append_block(chain, txs, 1, k)
    assert len(chain) == 10

    def oracle(ch, node_id):
        found = None
        for block in ch.blocks:
            for tx in block.transactions:
                if tx.kind == TxKind.REGISTRATION and tx.payload.node_id == node_id:
                    found = (block.block_id, tx.payload.to_spec())
        return found

    block_id, expected = oracle(chain, 42)
    assert block_id == 2
    assert lookup_identity(chain, 42) == expected == spec(42)


@given(st.integers(1, 10**6))
def test_register_lookup_roundtrip(node_id):
    chain = append_block(Chain.genesis(), [register_uav(Chain.genesis(), spec(node_id), 3)], 0, 3)
    assert lookup_identity(chain, node_id) == spec(node_id)
