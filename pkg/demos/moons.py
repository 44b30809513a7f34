"""Binary classification of the two-moons dataset with a trained photonic layer.

Run: python demos/moons.py [--plot moons.png]
The plot needs matplotlib, which the package itself does not require.
"""

import argparse

import numpy as np

from photonq.experiments import classify_moons

parser = argparse.ArgumentParser()
parser.add_argument("--plot", help="write the decision boundary to this image file")
args = parser.parse_args()

res = classify_moons(samples=200, noise=0.1, epochs=200, seed=42)
print(f"train accuracy {res['train_accuracy']:.3f}")
print(f"test accuracy  {res['test_accuracy']:.3f}")
print("loss every 40 epochs:", " ".join(f"{v:.3f}" for v in res["losses"][::40]))

if args.plot:
    import matplotlib.pyplot as plt

    g = res["grid_points"]
    side = int(np.sqrt(len(g)))
    plt.contourf(g[:, 0].reshape(side, side), g[:, 1].reshape(side, side),
                 res["grid_prob_class1"].reshape(side, side), levels=20, cmap="RdBu", alpha=0.7)
    plt.scatter(res["X"][:, 0], res["X"][:, 1], c=res["y"], cmap="RdBu", edgecolors="k", s=15)
    plt.title(f"test accuracy {res['test_accuracy']:.2f}")
    plt.savefig(args.plot, dpi=120)
    print("wrote", args.plot)
