# coding: utf-8

# # How many UAVs does a workload need?
#
# Three sweeps over the default scenario: fleet size against success
# rate, workload against delivery time, and user load against the fleet
# needed for a 95% on-time rate.  Each takes a few seconds.

# In[1]:

import numpy as np

from birds.simkit import Scenario
from birds.simkit.sweeps import sweep_jobs, sweep_uav_count, sweep_users_consensus

base = Scenario()
fleet = sweep_uav_count(base, seeds=10)
counts = np.array([r["uav_count"] for r in fleet])
success = np.array([r["success_rate"] for r in fleet])
print(np.column_stack([counts, success.round(3)]))
print("first fleet above 50%:", counts[np.argmax(success > 0.5)])

# In[2]:

load = sweep_jobs(base, seeds=10)
adt = np.array([r["mean_adt"] for r in load])
edt = np.array([r["mean_edt"] for r in load])
print("jobs ", [r["job_count"] for r in load])
print("EDT  ", edt.round(1))
print("ADT  ", adt.round(1))
print("ADT increments per 5 jobs:", np.diff(adt).round(1))

# In[3]:

need = sweep_users_consensus(base)
table = {}
for r in need:
    table.setdefault(r["user_count"], {})[r["consensus"]] = r["uavs_required"]
print("users  poc pow poid poa")
for users, row in table.items():
    print(f"{users:5d}  " + "  ".join(f"{row[k]:3d}" for k in ("poc", "pow", "poid", "poa")))
