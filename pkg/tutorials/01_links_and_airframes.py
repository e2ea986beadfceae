# coding: utf-8

# # Links and airframes
#
# A tour of the physical layer: how fast a UAV flies with a given load,
# what a sortie costs in joules, and how long a data packet takes over a
# shared channel.

# In[1]:

import numpy as np

from birds import airframe, channel
from birds.airframe import EnergyState, KinematicState, SizeClass, UavSpec

# In[2]:

# A heavy lifter: 15 kg capacity, battery sized for one hour of flight.
spec = UavSpec(node_id=1, size_class=SizeClass.LARGE, empty_weight=8.5, payload_capacity=15.0,
               battery_capacity=950.0 * 3600, rated_flight_duration=3600.0,
               rated_travel_distance=160_000.0)

loads = np.linspace(0.5, 15.0, 8)
speeds = np.array([airframe.payload_speed(spec, kg) for kg in loads])
for kg, v in zip(loads, speeds):
    print(f"{kg:5.2f} kg -> {v:6.2f} m/s")

# Speed falls linearly between the 1 kg and 15 kg anchors and is flat
# outside them.

# In[3]:

energy = EnergyState.full(spec, hover_power=150.0)
print("cost per meter at full load:", round(energy.flight_cost_per_meter, 2), "J/m")

leg = 4_000.0 * energy.flight_cost_per_meter          # a 4 km leg
sortie = airframe.sortie_energy(leg, energy.hover_power, 12.0)
energy.debit(sortie)
print(f"sortie {sortie:.0f} J, {energy.fraction:.1%} left, can return: "
      f"{airframe.can_return(energy)}")

# In[4]:

# Distance flown from velocity and elapsed time.
state = KinematicState(velocity=(30.0, 40.0, 0.0), flight_elapsed=60.0)
print("flown:", airframe.flying_distance(state), "m")

# # The air-to-ground link
#
# Four users share one channel.  Their gains follow an inverse-square law
# from a UAV hovering 100 m above user 0.

# In[5]:

rng = np.random.default_rng(3)
users = rng.uniform(0, 2_000, size=(4, 2))
uav = np.array([*users[0], 100.0])

def gain_to(k):
    d = np.linalg.norm(np.append(users[k], 0.0) - uav)
    return channel.path_gain(d)

own = channel.Link(0, 1, 0, tx_power=0.1, channel_gain=gain_to(0))
others = [channel.Link(k, 1, 0, tx_power=0.1, channel_gain=gain_to(k)) for k in (1, 2, 3)]

for n in range(4):
    z = channel.snr(own, others[:n], noise_power=1e-9)
    rate = channel.achievable_rate(1e6, z)
    delay = channel.transmission_delay(8e6, rate)
    print(f"{n} interferers: snr={z:10.1f}  rate={rate / 1e6:5.2f} Mb/s  "
          f"1 MB in {delay:5.2f} s  on time: {channel.delivery_feasible(delay, 30.0)}")
