"""Fidelity kernel plus kernel ridge regression on a toy labelling task.

The Gram matrix comes from the overlap of photonic feature states; the
classifier on top is a closed-form ridge solve in numpy.

Run: python demos/kernel_ridge.py
"""

import numpy as np

from photonq import FidelityKernel

rng = np.random.default_rng(0)
X = rng.uniform(0, np.pi, (80, 2))
y = np.where(np.sin(2 * X[:, 0]) * np.cos(X[:, 1]) > 0, 1.0, -1.0)
train, test = np.arange(60), np.arange(60, 80)

kernel = FidelityKernel.simple(input_size=2, n_modes=4, n_photons=2, seed=1)
K = kernel.gram(X[train])
print(f"Gram {K.shape}: symmetric={np.array_equal(K, K.T)}, min eigenvalue={np.linalg.eigvalsh(K).min():.1e}")

alpha = np.linalg.solve(K + 1e-3 * np.eye(len(train)), y[train])
pred = np.sign(kernel.gram(X[test], X[train]) @ alpha)
print(f"train accuracy {np.mean(np.sign(K @ alpha) == y[train]):.2f}")
print(f"test accuracy  {np.mean(pred == y[test]):.2f}")
