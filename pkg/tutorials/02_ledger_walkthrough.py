# coding: utf-8

# # The ledger
#
# Register two UAVs, record a delivery, then tamper with the chain and
# watch validation catch it.

# In[1]:

import json

from birds.airframe import SizeClass, UavSpec
from birds.errors import AlreadyRegistered
from birds.ledger import (Block, Chain, DeliveryRecord, Transaction, append_block, chain_fault,
                          lookup_identity, merkle_root, register_uav, validate_chain)

chain = Chain.genesis()
print("genesis digest:", chain.digest())

# In[2]:

specs = [UavSpec(n, SizeClass.MEDIUM, 4.0, 7.0, 550.0 * 3600, 3600.0, 3e5) for n in (1, 2)]
pool = []
for s in specs:
    pool.append(register_uav(chain, s, timestamp=0, pending=pool))
chain = append_block(chain, pool, proposer=0, timestamp=0)

try:
    register_uav(chain, specs[0], timestamp=10)
except AlreadyRegistered as exc:
    print("rejected:", exc)

print("lookup 2:", lookup_identity(chain, 2))

# In[3]:

record = Transaction.of(10, DeliveryRecord(job_id=0, uav_id=2, edt=41.0, adt=44.5, cost=12.0))
chain = append_block(chain, [record], proposer=2, timestamp=50)
print("height", len(chain), "valid", validate_chain(chain))
print(json.dumps(chain.to_json()[-1], indent=1)[:400], "...")

# In[4]:

# Swap the recorded ADT for a flattering one.  The header still commits to
# the old Merkle root, so the forgery is visible.
forged_tx = Transaction.of(10, DeliveryRecord(0, 2, 41.0, 12.0, 12.0))
tip = chain.tip
forged = Chain(chain.blocks[:-1] + (Block(tip.header, (forged_tx,)),), chain.head)
print("forged chain valid:", validate_chain(forged), "|", chain_fault(forged))
print("roots:", merkle_root([record]).hex()[:16], "vs", merkle_root([forged_tx]).hex()[:16])
