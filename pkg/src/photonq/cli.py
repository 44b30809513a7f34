"""``photonq`` command line.

Results go to stdout (or ``--out``), diagnostics to stderr. Exit codes:
0 success, 1 verification failure, 2 usage or config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import experiments
from .errors import PhotonqError
from .fock import FockState
from .kernel import FidelityKernel, KernelSpec, gram_to_csv
from .circuit import ParamCircuit
from .layer import LayerSpec, QuantumLayer

log = logging.getLogger("photonq")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(Exception):
    """Anything wrong with user-supplied files or flags (exit 2)."""


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _load_json(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _experiment(args) -> dict:
    section = _load_json(args.config).get("experiment", {})
    if not isinstance(section, dict):
        raise ConfigError('"experiment" must be an object')
    return section


def _pick(args, section: dict, name: str, default, cast=float):
    """Flag value if given, else the config ``experiment`` entry, else ``default``."""
    value = getattr(args, name, None)
    if value is None:
        value = section.get(name, default)
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {value!r}") from exc


def _csv(rows, header=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(args, stdout_text: str, file_text: str | None = None) -> None:
    """``file_text`` (default: same as stdout) goes to ``--out`` when given."""
    if args.out:
        Path(args.out).write_text(stdout_text if file_text is None else file_text)
    sys.stdout.write(stdout_text)


# commands ---------------------------------------------------------------------

def cmd_simulate(args) -> int:
    raw = _load_json(args.config)
    if not raw:
        raise ConfigError("simulate needs --config with a layer description")
    try:
        spec = LayerSpec.from_dict(raw)
    except PhotonqError as exc:
        raise ConfigError(str(exc)) from exc
    section = raw.get("experiment", {})
    layer = QuantumLayer(spec, section.get("theta"))
    if args.input_state:
        try:
            layer.set_input_state(FockState.parse(args.input_state))
        except (ValueError, PhotonqError) as exc:
            raise ConfigError(f"--input-state: {exc}") from exc
    if args.x is not None:
        try:
            X = np.atleast_2d(np.array(json.loads(args.x), dtype=float))
        except (json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"--x must be a JSON list of numbers: {exc}") from exc
    else:
        X = section.get("inputs")
    t0 = time.perf_counter()
    out = layer.forward(X)
    elapsed = time.perf_counter() - t0
    keys = [str(k) for k in layer.output_keys]
    if spec.strategy.kind == "amplitudes":
        keys = [f"re{k}" for k in keys] + [f"im{k}" for k in keys]
    table = _csv([[i, *row] for i, row in enumerate(out)], ["row", *keys])
    if args.format == "csv":
        _emit(args, table)
    else:
        result = {"keys": keys, "outputs": out.tolist()}
        _emit(args, _json({**result, "timing_s": elapsed}), _json(result))
    return EXIT_OK


def cmd_verify(args) -> int:
    report = experiments.verify(args.max_m, args.max_n, args.trials, args.seed, args.threads, args.perturb)
    log.info("max deviation %.3e (tolerance %.0e)", report["max_deviation"], report["tolerance"])
    if args.format == "csv":
        rows = [[*k.split(","), v] for k, v in report["pairs"].items()]
        _emit(args, _csv(rows, ["m", "n", "max_deviation"]))
    else:
        _emit(args, _json(report))
    if not report["passed"]:
        log.error("SLOS disagrees with the permanent oracle")
        return EXIT_VERIFY
    return EXIT_OK


def _load_coefficients(path: str | None, seed: int) -> np.ndarray:
    if path is None:
        return experiments.random_fourier_coefficients(3, seed)
    data = _load_json(path)
    try:
        pairs = np.array(data["coefficients"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f'{path}: expected {{"coefficients": [[re, im], ...]}}') from exc
    if pairs.ndim != 2 or pairs.shape[1] != 2 or pairs.shape[0] % 2 == 0:
        raise ConfigError(f"{path}: need an odd number of [re, im] pairs (k = -d..d)")
    return pairs[:, 0] + 1j * pairs[:, 1]


def cmd_fit_fourier(args) -> int:
    section = _experiment(args)
    n = _pick(args, section, "n_photons", 3, int)
    if not 1 <= n <= 6:
        raise ConfigError("--n-photons must lie in [1, 6]")
    steps = _pick(args, section, "steps", 2000, int)
    lr = _pick(args, section, "lr", 0.05)
    path = args.coefficients
    if path is None and "coefficients_file" in section:
        path = str(Path(args.config).parent / section["coefficients_file"])
    coeffs = _load_coefficients(path, args.seed)
    res = experiments.fit_fourier(coeffs, n, steps=steps, lr=lr, seed=args.seed)
    log.info("final MSE %.3e with input %s", res["mse"], res["input_state"])
    table = _csv(zip(res["x"], res["target"], res["fit"]), ["x", "target", "fit"])
    if args.format == "csv":
        _emit(args, table)
    else:
        summary = {"mse": res["mse"], "n_photons": n, "input_state": res["input_state"], "steps": steps, "lr": lr}
        _emit(args, _json(summary), table)
    return EXIT_OK


def cmd_classify_moons(args) -> int:
    section = _experiment(args)
    groups = section.get("groups", "parity")
    if not (groups in ("parity", "leading_mode") or isinstance(groups, list)):
        raise ConfigError('"groups" must be "parity", "leading_mode" or a list of class indices')
    res = experiments.classify_moons(
        samples=_pick(args, section, "samples", 200, int),
        noise=_pick(args, section, "noise", 0.1),
        epochs=_pick(args, section, "epochs", 200, int),
        lr=_pick(args, section, "lr", 0.1),
        seed=args.seed,
        encoding_scale=_pick(args, section, "encoding_scale", 1.5),
        groups=groups,
    )
    log.info("train %.3f, test %.3f", res["train_accuracy"], res["test_accuracy"])
    grid = _csv(
        ((x1, x2, p) for (x1, x2), p in zip(res["grid_points"], res["grid_prob_class1"])),
        ["x1", "x2", "p_class1"],
    )
    if args.format == "csv":
        _emit(args, grid)
    else:
        metrics = {k: res[k] for k in ("train_accuracy", "test_accuracy", "final_loss")}
        _emit(args, _json(metrics), grid)
    return EXIT_OK


def cmd_bench(args) -> int:
    report = experiments.bench(args.m, args.n, args.batch, args.repeats, args.seed)
    if args.format == "csv":
        _emit(args, _csv(((k, v) for k, v in report.items() if k != "forward_times_s"), ["metric", "value"]))
    else:
        _emit(args, _json(report))
    if report["build_count"] != 1:
        log.error("transition graph was built %d times", report["build_count"])
        return EXIT_RUNTIME
    return EXIT_OK


def _kernel_from_config(raw: dict, args) -> tuple[FidelityKernel, np.ndarray, np.ndarray | None]:
    section = raw.get("experiment", {})
    if "circuit" in raw:
        try:
            spec = KernelSpec(ParamCircuit.from_dict(raw["circuit"]), FockState.parse(raw["input_state"]),
                              raw.get("theta"))
        except (KeyError, TypeError, ValueError, PhotonqError) as exc:
            raise ConfigError(f"bad kernel description: {exc}") from exc
        kernel = FidelityKernel(spec)
    else:
        kernel = FidelityKernel.simple(
            _pick(args, section, "input_size", 2, int),
            _pick(args, section, "modes", 4, int),
            _pick(args, section, "photons", 2, int),
            seed=args.seed,
        )
    dim = kernel.spec.circuit.input_feature_count
    if "data" in section:
        X1 = np.array(section["data"], dtype=float)
    else:
        rng = np.random.default_rng([args.seed, 1])
        X1 = rng.uniform(0, 2 * np.pi, (_pick(args, section, "points", 10, int), dim))
    X2 = np.array(section["data2"], dtype=float) if "data2" in section else None
    return kernel, X1, X2


def cmd_kernel_gram(args) -> int:
    kernel, X1, X2 = _kernel_from_config(_load_json(args.config), args)
    G = kernel.gram(X1, X2)
    if args.format == "json":
        _emit(args, _json({"gram": G.tolist()}))
    else:
        _emit(args, gram_to_csv(G))
    return EXIT_OK


# parser -------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads for batch work (default: all cores)")
    p.add_argument("--out", help="also write the primary result file here")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="photonq", description="Exact linear-optics simulation tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="evolve a layer config and print its outputs")
    p.add_argument("--input-state", help='override the input, e.g. "[1,0,1]"')
    p.add_argument("--x", help="feature rows as JSON, e.g. [[0.1, 0.2]]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="cross-check SLOS against the permanent oracle")
    p.add_argument("--max-m", type=int, default=5)
    p.add_argument("--max-n", type=int, default=4)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit-fourier", parents=[common], help="fit a Fourier series with the sandwich circuit")
    p.add_argument("--n-photons", type=int)
    p.add_argument("--coefficients", help="target coefficient file")
    p.add_argument("--steps", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_fit_fourier)

    p = sub.add_parser("classify-moons", parents=[common], help="train the 3-mode classifier on moons")
    p.add_argument("--samples", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.set_defaults(func=cmd_classify_moons, seed=42)

    p = sub.add_parser("bench", parents=[common], help="time graph build and repeated forwards")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--repeats", type=int, default=10)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("kernel-gram", parents=[common], help="fidelity-kernel Gram matrix as CSV")
    p.set_defaults(func=cmd_kernel_gram, format_default="csv")
    return parser


def _configure_logging(verbose: bool) -> None:
    # bound to the current sys.stderr on every call so repeated in-process runs log correctly
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("photonq: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = getattr(args, "format_default", "json")
    _configure_logging(args.verbose)
    if args.threads < 1:
        parser.error("--threads must be positive")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (PhotonqError, ValueError, ArithmeticError, MemoryError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
