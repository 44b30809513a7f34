"""How many frequencies can one encoded phase produce? One per photon.

A single input feature enters through one phase shifter sandwiched between
two random meshes. The output is a trigonometric polynomial in x whose
degree is bounded by the photon count, which this script shows by DFT and
then by fitting a degree-3 target with 1 and 3 photons.

Run: python demos/fourier_spectrum.py
"""

import numpy as np

from photonq import FockState, LayerSpec, QuantumLayer, sandwich
from photonq.experiments import fit_fourier, random_fourier_coefficients

x = 2 * np.pi * np.arange(128) / 128
for n in (1, 2, 3):
    circuit = sandwich(3, [0], np.random.default_rng(n))
    state = FockState(np.bincount(np.arange(n) % 3, minlength=3))
    out = QuantumLayer(LayerSpec(circuit, state)).forward(x[:, None])
    spectrum = np.abs(np.fft.rfft(out, axis=0)).max(axis=1)
    print(f"n={n}  max |DFT| per frequency 0..5:", " ".join(f"{v:8.1e}" for v in spectrum[:6]))

coeffs = random_fourier_coefficients(3, 5)
for n in (1, 2, 3):
    res = fit_fourier(coeffs, n, steps=1000, seed=0)
    print(f"fit degree-3 target with {n} photon(s): MSE = {res['mse']:.2e}")
