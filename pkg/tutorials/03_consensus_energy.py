# coding: utf-8

# # Choosing a proposer, and what it costs
#
# The same fleet runs for an hour under each engine.  Consensus energy is
# booked separately from flight energy, which varies only because each
# engine dispatches jobs differently.

# In[1]:

import numpy as np

from birds.consensus import CompetenceInputs, ConsensusEngine, ConsensusKind, select_proposer
from birds.simkit import Scenario
from birds.simkit.sweeps import energy_timeline

cands = [CompetenceInputs(1, 1.0, True, 0.40, 0.9),
         CompetenceInputs(2, 1.0, True, 0.95, 0.6),
         CompetenceInputs(3, 0.2, True, 1.00, 1.0),
         CompetenceInputs(4, 1.0, False, 1.00, 1.0)]   # unregistered: never chosen

for kind in ConsensusKind:
    picks = [select_proposer(ConsensusEngine(kind=kind, difficulty=12), cands, r, 7)
             for r in range(6)]
    print(f"{kind.value:5s}", [o.proposer for o in picks],
          f"{np.mean([o.consensus_energy for o in picks]):8.3f} J/round")

# In[2]:

rows = energy_timeline(Scenario())
final = {}
for r in rows:
    final[r["consensus"]] = r
for kind, r in final.items():
    print(f"{kind:5s} consensus {r['cumulative_consensus_energy']:10.0f} J   "
          f"flight {r['cumulative_flight_energy'] / 1e3:8.0f} kJ")

# In[3]:

# Cumulative consensus energy at a few checkpoints, as an array per engine.
checkpoints = [60, 120, 240, 360]
series = {k: np.array([r["cumulative_consensus_energy"] for r in rows if r["consensus"] == k])
          for k in final}
for k, s in series.items():
    print(f"{k:5s}", np.round(s[checkpoints], 1))
