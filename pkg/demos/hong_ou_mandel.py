"""Two photons on a balanced beam splitter, checked against the permanent oracle.

Run: python demos/hong_ou_mandel.py
"""

import numpy as np

from photonq import BeamSplitter, Fixed, FockBasis, LayerSpec, ParamCircuit, QuantumLayer, FockState
from photonq import compile_unitary, oracle_state

circuit = ParamCircuit(2, (BeamSplitter(0, Fixed(np.pi / 2)),))
layer = QuantumLayer(LayerSpec(circuit, FockState([1, 1])))
probs = layer.forward()[0]

print("output distribution for input [1,1]:")
for key, p in zip(layer.output_keys, probs):
    print(f"  {key}  {p:.6f}")

# the coincidence amplitude is the permanent of the 2x2 splitter matrix, i.e. zero
U = compile_unitary(circuit, layer.theta)
ref = oracle_state(U, [1, 1]).probabilities()
print("oracle agrees:", np.allclose(probs, ref, atol=1e-12))

# sweep the splitting angle: coincidences only vanish at the balanced point
for angle in np.linspace(0, np.pi, 5):
    c = ParamCircuit(2, (BeamSplitter(0, Fixed(angle)),))
    p = QuantumLayer(LayerSpec(c, FockState([1, 1]))).forward()[0]
    print(f"  angle {angle:.3f}  P[1,1] = {p[FockBasis(2, 2).rank([1, 1])]:.4f}")
