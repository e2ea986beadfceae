"""Blockchain-coordinated UAV delivery simulator.

Submodules:

- ``airframe``: UAV attributes, payload-dependent speed, flight/hover energy.
- ``channel``: co-channel SNR, Shannon rate, transmission delay.
- ``ledger``: Merkle-rooted, hash-chained blocks and the UAV registry.
- ``consensus``: Proof-of-Competence and the PoW/PoID/PoA baselines, rewards.
- ``delivery``: jobs, dispatch, reputation and certificates.
- ``simkit``: scenarios, the event loop, sweeps and CSV output.
"""

__version__ = "0.1.0"
