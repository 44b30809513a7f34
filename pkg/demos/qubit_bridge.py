"""Dual-rail bridge: qubit states in, Fock amplitudes out, and back again.

Run: python demos/qubit_bridge.py
"""

import numpy as np

from photonq import AmplitudeVector, BeamSplitter, Fixed, ParamCircuit, compile_unitary, fock_to_qubit, qubit_to_fock
from photonq import slos

bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
fock = qubit_to_fock(bell)
print("Bell state as Fock amplitudes (nonzero only):")
for state, a in zip(fock.basis, fock.values):
    if abs(a) > 0:
        print(f"  {list(state)}  {a:+.4f}")

back, leakage = fock_to_qubit(fock)
print("round trip exact:", np.allclose(back, bell, atol=1e-15), "leakage", leakage)

# mixing the two rails of different qubits moves photons outside the qubit subspace
circuit = ParamCircuit(4, (BeamSplitter(1, Fixed(np.pi / 2)),))
U = compile_unitary(circuit, [])
M = slos.amplitude_map(slos.build_graph(4, [1, 0, 1, 0]), U, list(fock.basis))
_, leakage = fock_to_qubit(AmplitudeVector(fock.basis, M @ fock.values))
print(f"after a splitter between modes 1 and 2: leakage {leakage:.3f}")
