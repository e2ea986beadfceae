"""Shared hypothesis strategies and chain builders for the test suite."""

from hypothesis import strategies as st

from birds.ledger import (Chain, DeliveryRecord, Heartbeat, ReputationUpdate, Transaction,
                          append_block)

small_float = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
ids = st.integers(0, 2**31)

payloads = st.one_of(
    st.builds(Heartbeat, ids, st.integers(0, 10**6)),
    st.builds(ReputationUpdate, ids, st.floats(0, 4)),
    st.builds(DeliveryRecord, ids, ids, st.floats(0.1, 1e3), st.floats(0.1, 1e3),
              st.floats(0, 100)),
)


@st.composite
def tx_lists(draw, min_size=1, max_size=6):
    items = draw(st.lists(payloads, min_size=min_size, max_size=max_size))
    return [Transaction.of(k, p) for k, p in enumerate(items)]


@st.composite
def chains(draw, max_blocks=50):
    n = draw(st.integers(0, max_blocks - 1))
    chain = Chain.genesis()
    t = 0
    next_id = 1
    for _ in range(n):
        txs = draw(tx_lists())
        txs = [Transaction.of(next_id + k, tx.payload) for k, tx in enumerate(txs)]
        next_id += len(txs)
        t += draw(st.integers(0, 20))
        chain = append_block(chain, txs, draw(st.integers(0, 30)), t)
    return chain
