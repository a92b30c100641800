"""Batch command-line surface.

Subcommands compose into the full experiment:

    gen-data -> fit-codec -> encode -> train -> sample -> decode -> eval

plus `report`, a per-link encode/decode round-trip fidelity check.  Every
run is a deterministic function of its inputs and --seed; all randomness
flows through named substreams (data, padding, init, batching, noise,
sampling).  Errors print one machine-parsable line to stderr and map to
distinct exit codes:

    2 usage, 3 malformed file, 4 format version mismatch,
    5 invalid data/geometry/config, 6 training diverged, 1 unexpected
"""

import argparse
import sys

import numpy as np

from . import io
from .codec import DatasetEncoder, fit_codec
from .core import LinkState, geometry
from .errors import (
    ChanimgError,
    DataError,
    FormatError,
    GeometryError,
    TrainingDivergedError,
    VersionError,
)
from .genmodel import (
    ArrayBatches,
    EmpiricalResampler,
    WganGpHyperparams,
    sample as wgan_sample,
    train_wgan_gp,
)
from .rng import substream
from .stats import compare_datasets
from .surrogate import DEFAULT_HEIGHTS, SurrogateConfig, generate_dataset

EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_BAD_FILE = 3
EXIT_VERSION = 4
EXIT_BAD_DATA = 5
EXIT_DIVERGED = 6


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chanimg",
        description="channel-image pipeline: surrogate data, codec, generative models, eval")
    parser.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a surrogate link dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--links", type=int, default=5000,
                   help="approximate dataset size (rounded up to the tx/rx grid, then cut)")
    p.add_argument("--num-tx", type=int, default=10)
    p.add_argument("--heights", type=str, default=",".join(str(h) for h in DEFAULT_HEIGHTS))
    p.add_argument("--area", type=str, default="500,500", help="width,depth in meters")
    p.add_argument("--freq", type=float, default=12e9)
    p.add_argument("--los-probability", type=float, default=None,
                   help="override the distance/height LOS model with a fixed probability")

    p = sub.add_parser("fit-codec", help="fit virtual-path ranges and the feature scaler")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="encode a dataset into channel images")
    p.add_argument("--data", required=True)
    p.add_argument("--codec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--realizations", type=int, default=1,
                   help="virtual-padding realizations per link (data augmentation)")

    p = sub.add_parser("decode", help="decode channel images back into a link dataset")
    p.add_argument("--images", required=True)
    p.add_argument("--codec", required=True)
    p.add_argument("--geometry-from", required=True,
                   help="dataset supplying tx/rx/freq; image i pairs with link i %% n_links")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train", help="train a generative backend on channel images")
    p.add_argument("--images", required=True)
    p.add_argument("--backend", choices=("wgan-gp", "resampler"), default="wgan-gp")
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="training log CSV (wgan-gp)")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--beta1", type=float, default=0.5)
    p.add_argument("--beta2", type=float, default=0.9)
    p.add_argument("--gp-lambda", type=float, default=10.0)
    p.add_argument("--critic-steps", type=int, default=5)
    p.add_argument("--noise-dim", type=int, default=64)
    p.add_argument("--hidden", type=str, default="256,256")
    p.add_argument("--output-gain", type=float, default=1.0)
    p.add_argument("--output-init", choices=("fan_in", "data_mean", "data_moments"),
                   default="fan_in",
                   help="start the generator output layer at data statistics")
    p.add_argument("--dtype", choices=("float64", "float32"), default="float64",
                   help="training arithmetic (checkpoints are always float64)")
    p.add_argument("--k", type=int, default=50, help="resampler neighborhood size")

    p = sub.add_parser("sample", help="sample images at the conditions of a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--conditions-from", required=True)
    p.add_argument("--per-cond", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="compare a decoded model dataset against source data")
    p.add_argument("--model", required=True, help="decoded model dataset (JSONL)")
    p.add_argument("--data", required=True, help="reference dataset (JSONL)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--dist-bin-width", type=float, default=25.0)
    p.add_argument("--angle-bin-width", type=float, default=2.0)

    p = sub.add_parser("report", help="per-link encode/decode round-trip fidelity report")
    p.add_argument("--data", required=True)
    p.add_argument("--codec", required=True)
    p.add_argument("--out", required=True)
    return parser


# -- subcommand bodies --------------------------------------------------------------


def _cmd_gen_data(args) -> int:
    heights = tuple(float(h) for h in args.heights.split(","))
    w, d = (float(v) for v in args.area.split(","))
    if args.links <= 0:
        raise DataError("zero links requested")
    per_height = -(-args.links // (args.num_tx * len(heights)))  # ceil
    cfg = SurrogateConfig(
        num_tx=args.num_tx, num_rx_per_height=per_height, heights=heights,
        area=(w, d), carrier_freq=args.freq, seed=args.seed,
        los_probability=args.los_probability)
    links = generate_dataset(cfg)[: args.links]
    io.write_dataset(args.out, links, seed=args.seed)
    print(f"wrote {len(links)} links to {args.out}")
    return 0


def _cmd_fit_codec(args) -> int:
    links = io.read_dataset(args.data)
    codec = fit_codec(links, substream(args.seed, "padding"))
    io.write_codec(args.out, codec, seed=args.seed)
    print(f"fitted codec on {len(links)} links -> {args.out}")
    return 0


def _cmd_encode(args) -> int:
    links = io.read_dataset(args.data)
    codec = io.read_codec(args.codec)
    if args.realizations < 1:
        raise DataError("--realizations must be >= 1")
    encoder = DatasetEncoder(links, codec)
    images, conds = encoder.encode_all(substream(args.seed, "padding"), args.realizations)
    io.write_images(args.out, images, conds, seed=args.seed)
    print(f"encoded {len(images)} images ({args.realizations} realization(s) "
          f"of {len(links)} links) -> {args.out}")
    return 0


def _cmd_decode(args) -> int:
    images, _ = io.read_images(args.images)
    codec = io.read_codec(args.codec)
    links = io.read_dataset(args.geometry_from)
    if len(images) % len(links):
        raise DataError(
            f"{len(images)} images do not tile {len(links)} geometry links")
    decoded = [
        codec.decode(images[i], links[i % len(links)].tx, links[i % len(links)].rx,
                     links[i % len(links)].carrier_freq)
        for i in range(len(images))
    ]
    io.write_dataset(args.out, decoded, seed=args.seed)
    print(f"decoded {len(decoded)} links -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    images, conds = io.read_images(args.images)
    if args.backend == "resampler":
        model = EmpiricalResampler(images.astype(np.float64), conds, k=args.k)
        io.write_resampler_checkpoint(args.out, model, seed=args.seed)
        print(f"stored resampler over {len(images)} images -> {args.out}")
        return 0
    hyper = WganGpHyperparams(
        learning_rate=args.lr, adam_beta1=args.beta1, adam_beta2=args.beta2,
        epochs=args.epochs, batch_size=args.batch_size, gp_lambda=args.gp_lambda,
        critic_steps_per_gen_step=args.critic_steps, noise_dim=args.noise_dim,
        hidden=tuple(int(h) for h in args.hidden.split(",")),
        generator_output_gain=args.output_gain,
        output_init=args.output_init, dtype=args.dtype)
    netp, log = train_wgan_gp(ArrayBatches(images, conds, hyper.batch_size), hyper, args.seed)
    io.write_wgan_checkpoint(args.out, netp, seed=args.seed)
    if args.log:
        io.write_training_log(args.log, log, seed=args.seed)
    counts = log.param_counts
    print(f"trained wgan-gp ({counts['generator']} generator / {counts['critic']} critic "
          f"parameters, {log.steps[-1] if log.steps else 0} critic steps) -> {args.out}")
    return 0


def _cmd_sample(args) -> int:
    backend, model = io.read_model_checkpoint(args.model)
    links = io.read_dataset(args.conditions_from)
    conds = np.array([[geometry(lk.tx, lk.rx)[0], lk.rx[2]] for lk in links])
    tiled = np.tile(conds, (args.per_cond, 1))
    if backend == "wgan-gp":
        images = wgan_sample(model, tiled, len(tiled), args.seed)
    else:
        images = model.sample(tiled, len(tiled), args.seed)
    io.write_images(args.out, images.astype(np.float32), tiled, seed=args.seed)
    print(f"sampled {len(images)} images ({args.per_cond} per condition) -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model_links = io.read_dataset(args.model)
    data_links = io.read_dataset(args.data)
    heights = sorted({lk.rx[2] for lk in data_links})
    report = compare_datasets(model_links, data_links, heights,
                              dist_bin_width=args.dist_bin_width,
                              angle_bin_width=args.angle_bin_width)
    outdir = args.outdir

    ks_rows = []
    for h, entry in report.items():
        for feat in ("pathloss", "delay"):
            ks_rows.append([h, f"ks_{feat}", entry[f"ks_{feat}"]])
        for feat in ("aoa", "aod", "phase"):
            ks_rows.append([h, f"ks_uniform_{feat}", entry[f"ks_uniform_{feat}"]])
        for feat in ("delay", "aoa", "aod", "zoa", "zod"):
            ks_rows.append([h, f"ks_rms_{feat}", entry[f"ks_rms_{feat}"]])
        ks_rows.append([h, "max_los_prob_gap", entry["max_los_prob_gap"]])
    io.write_report_csv(f"{outdir}/ks.csv", "ks", args.seed,
                        ["height", "metric", "value"], ks_rows)

    ls_rows = []
    for h, entry in report.items():
        for side in ("model", "data"):
            lsp = entry[f"link_state_{side}"]
            for j in np.flatnonzero(lsp.occupied):
                ls_rows.append([h, side, lsp.bin_edges[j], lsp.bin_edges[j + 1],
                                int(lsp.counts[j]), lsp.p_los[j], lsp.p_outage[j]])
    io.write_report_csv(f"{outdir}/los_prob.csv", "los-prob", args.seed,
                        ["height", "side", "bin_lo", "bin_hi", "n", "p_los", "p_outage"],
                        ls_rows)

    for ang in ("zod", "zoa"):
        rows = []
        for h, entry in report.items():
            for side in ("model", "data"):
                pdf = entry[f"zenith_pdf_{ang}_{side}"]
                for j in range(pdf.density.shape[1]):
                    for i in range(pdf.density.shape[0]):
                        if pdf.density[i, j]:
                            rows.append([h, side, pdf.dist_edges[j], pdf.angle_edges[i],
                                         pdf.density[i, j]])
        io.write_report_csv(f"{outdir}/zenith_pdf_{ang}.csv", f"zenith-pdf-{ang}",
                            args.seed,
                            ["height", "side", "dist_bin_lo", "angle_bin_lo", "density"],
                            rows)
    print(f"wrote evaluation reports to {outdir}")
    return 0


def _cmd_report(args) -> int:
    links = io.read_dataset(args.data)
    codec = io.read_codec(args.codec)
    rng = substream(args.seed, "padding")
    header = ["link", "state_ok", "n_paths_ok", "virtual_survivors",
              "err_pathloss", "err_delay", "err_aod", "err_zod", "err_aoa",
              "err_zoa", "err_phase"]
    rows = []
    worst = np.zeros(7)
    for i, lk in enumerate(links):
        decoded = codec.decode(codec.encode_link(lk, rng), lk.tx, lk.rx, lk.carrier_freq)
        state_ok = decoded.link_state is lk.link_state
        n_ok = decoded.n_paths == lk.n_paths
        if n_ok and lk.paths:
            a = np.stack([p.as_array() for p in lk.paths])
            b = np.stack([p.as_array() for p in decoded.paths])
            errs = np.abs(a - b).max(axis=0)
        else:
            errs = np.full(7, np.nan)
        worst = np.fmax(worst, errs)
        rows.append([i, int(state_ok), int(n_ok), max(0, decoded.n_paths - lk.n_paths),
                     *errs])
    io.write_report_csv(args.out, "roundtrip", args.seed, header, rows)
    print("round-trip worst-case errors "
          "(pathloss dB, delay s, aod, zod, aoa, zoa, phase deg): "
          + " ".join(f"{v:.3e}" for v in worst))
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "fit-codec": _cmd_fit_codec,
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "train": _cmd_train,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def run(argv=None) -> int:
    """Parse and execute one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code) if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except TrainingDivergedError as exc:
        print(f"chanimg: error kind=diverged exit={EXIT_DIVERGED} msg={exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except VersionError as exc:
        print(f"chanimg: error kind=version exit={EXIT_VERSION} msg={exc}", file=sys.stderr)
        return EXIT_VERSION
    except FormatError as exc:
        print(f"chanimg: error kind=format exit={EXIT_BAD_FILE} msg={exc}", file=sys.stderr)
        return EXIT_BAD_FILE
    except (DataError, GeometryError) as exc:
        print(f"chanimg: error kind=data exit={EXIT_BAD_DATA} msg={exc}", file=sys.stderr)
        return EXIT_BAD_DATA
    except OSError as exc:
        print(f"chanimg: error kind=io exit={EXIT_BAD_FILE} msg={exc}", file=sys.stderr)
        return EXIT_BAD_FILE
    except ChanimgError as exc:
        print(f"chanimg: error kind=other exit={EXIT_UNEXPECTED} msg={exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
