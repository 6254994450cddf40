"""Command-line surface: estimation, bounds, verification, sweeps, benchmarks.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys

import numpy as np

from . import bounds, capacity, oracle, reports
from .cooc import build_cooc
from .imaging import PAIRING_POLICIES, load_pgm, partition_pairs, save_pgm
from .schemes import SCHEME_NAMES, get_scheme

METHODS = ("tree", "cooc", "cap")


def _common_args(sub, image=True):
    if image:
        sub.add_argument("--image", required=True, help="cover image (binary PGM, maxval 255)")
    sub.add_argument("--scheme", required=True, choices=SCHEME_NAMES)
    sub.add_argument("--pairing", default="horizontal", choices=PAIRING_POLICIES)
    sub.add_argument("--theta-h", type=int, default=255, dest="theta_h",
                     help="embeddability threshold on |x-y| (tian only)")
    sub.add_argument("--output", help="also write the report to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wmcap",
        description="Multi-pass embedding capacity estimation for pixel-pair "
        "reversible watermarking (tian difference expansion, coltuc RCM).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="capacity estimate without embedding")
    _common_args(est)
    est.add_argument("--p", type=float, required=True, help="watermark ones probability")
    est.add_argument("--passes", type=int, required=True)
    est.add_argument("--method", default="tree", choices=METHODS)

    ver = sub.add_parser("verify", help="compare an estimate against actual embedding")
    _common_args(ver)
    ver.add_argument("--p", type=float, required=True)
    ver.add_argument("--passes", type=int, required=True)
    ver.add_argument("--method", default="cap", choices=METHODS)
    ver.add_argument("--trials", type=int, default=20)
    ver.add_argument("--seed", type=int, default=0)

    sw = sub.add_parser("sweep", help="capacity vs p for AW/CAP/TA/MaxCap (CSV)")
    _common_args(sw)
    sw.add_argument("--p-min", type=float, default=0.1)
    sw.add_argument("--p-max", type=float, default=0.9)
    sw.add_argument("--p-step", type=float, default=0.1)
    sw.add_argument("--max-passes", type=int, default=8)
    sw.add_argument("--trials", type=int, default=1, help="embedding trials per p")
    sw.add_argument("--seed", type=int, default=0)

    bnd = sub.add_parser("bound", help="upper bound on the achievable capacity")
    _common_args(bnd)
    bnd.add_argument("--max-passes", type=int, default=8)

    ben = sub.add_parser("bench", help="wall-clock comparison: embedding vs estimators")
    _common_args(ben)
    ben.add_argument("--p", type=float, default=0.5)
    ben.add_argument("--passes", type=int, default=3)
    ben.add_argument("--runs", type=int, default=5)

    emb = sub.add_parser("embed", help="actually embed a random watermark")
    _common_args(emb)
    emb.add_argument("--p", type=float, required=True)
    emb.add_argument("--passes", type=int, required=True)
    emb.add_argument("--seed", type=int, default=0)
    emb.add_argument("--watermarked", help="write the watermarked image (PGM) here")
    emb.add_argument("--watermark-out", dest="watermark_out",
                     help="write the embedded watermark bits (length-prefixed bit file)")
    emb.add_argument("--verify", action="store_true",
                     help="extract and compare against the cover; nonzero exit on mismatch")

    opt = sub.add_parser("optimal", help="passes until the stage capacity reaches zero")
    _common_args(opt)
    opt.add_argument("--p", type=float, required=True)
    opt.add_argument("--method", default="cap", choices=METHODS)
    opt.add_argument("--max-passes", type=int, default=16)

    msk = sub.add_parser("masks", help="export scheme region masks as 256x256 PGMs")
    _common_args(msk, image=False)
    msk.add_argument("--outdir", required=True)

    return parser


def _validate(parser, args):
    p = getattr(args, "p", None)
    if p is not None and not 0.0 <= p <= 1.0:
        parser.error(f"--p must be in [0, 1], got {p}")
    passes = getattr(args, "passes", None)
    if passes is not None and passes < 1:
        parser.error("--passes must be >= 1")
    max_passes = getattr(args, "max_passes", None)
    if max_passes is not None and max_passes < 1:
        parser.error("--max-passes must be >= 1")
    if not 1 <= args.theta_h <= 255:
        parser.error("--theta-h must be in [1, 255]")
    trials = getattr(args, "trials", None)
    if trials is not None and trials < 1:
        parser.error("--trials must be >= 1")
    for name in ("p_min", "p_max", "p_step"):
        v = getattr(args, name, None)
        if v is None:
            continue
        if name == "p_step":
            if v <= 0:
                parser.error("--p-step must be positive")
        elif not 0.0 <= v <= 1.0:
            parser.error(f"--{name.replace('_', '-')} must be in [0, 1]")


def _load(args):
    img = load_pgm(args.image)
    scheme = get_scheme(args.scheme, args.theta_h)
    return img, scheme


def _config(args, skip=("output",)):
    cfg = {k: v for k, v in vars(args).items() if k not in skip and v is not None}
    cfg.pop("command", None)
    return cfg


def _emit(args, report: dict) -> None:
    text = reports.render_json(report)
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)


def cmd_estimate(args) -> int:
    img, scheme = _load(args)
    c0 = build_cooc(partition_pairs(img, args.pairing))
    rep = capacity.estimate(
        scheme, c0, args.p, args.passes, args.method,
        pairing=args.pairing, n_pixels=img.n_pixels,
    )
    results = rep.to_dict()
    results["cooc_support"] = len(c0)  # distinct pairs actually present
    _emit(args, reports.make_report("estimate", _config(args), results))
    return 0


def cmd_verify(args) -> int:
    img, scheme = _load(args)
    c0 = build_cooc(partition_pairs(img, args.pairing))
    rep = capacity.estimate(
        scheme, c0, args.p, args.passes, args.method,
        pairing=args.pairing, n_pixels=img.n_pixels,
    )
    caps = []
    per_stage = np.zeros((args.trials, args.passes))
    for t in range(args.trials):
        wm = oracle.gen_watermark(oracle.watermark_bits_needed(img, args.passes), args.p, args.seed + t)
        rec = oracle.embed_multi(scheme, img, wm, args.passes, args.pairing)
        caps.append(rec.achieved_capacity)
        for s in rec.stats:
            per_stage[t, s.k] = s.watermark_bits
    mean = statistics.fmean(caps)
    std = statistics.stdev(caps) if len(caps) > 1 else 0.0
    warnings = [] if args.trials > 1 else ["single trial: standard deviation not estimable"]
    est_total = rep.total_capacity
    rel = (est_total - mean) / mean if mean else math.inf
    stage_rows = []
    for k in range(args.passes):
        omean = float(per_stage[:, k].mean())
        est_k = rep.stages[k].capacity
        stage_rows.append({
            "k": k,
            "estimate_bits": est_k,
            "oracle_mean_bits": omean,
            "relative_error": (est_k - omean) / omean if omean else None,
        })
    results = {
        "estimate": rep.to_dict(),
        "oracle": {
            "trials": args.trials,
            "mean_capacity_bits": mean,
            "std_capacity_bits": std,
            "mean_capacity_bpp": mean / img.n_pixels,
        },
        "relative_error_total": rel,
        "stages": stage_rows,
        "warnings": warnings,
    }
    _emit(args, reports.make_report("verify", _config(args), results))
    return 0


def cmd_sweep(args) -> int:
    img, scheme = _load(args)
    c0 = build_cooc(partition_pairs(img, args.pairing))
    n_px = img.n_pixels
    p_values = []
    p = args.p_min
    while p <= args.p_max + 1e-9:
        p_values.append(round(p, 10))
        p += args.p_step
    rows = []
    for p in p_values:
        caps = []
        for t in range(args.trials):
            rec = oracle.embed_optimal(scheme, img, p, args.seed + t, args.max_passes, args.pairing)
            caps.append(rec.achieved_capacity)
        aw = statistics.fmean(caps)
        _, cap_rep = capacity.optimal_passes(
            scheme, c0, p, "cap", args.max_passes, pairing=args.pairing, n_pixels=n_px)
        cap_bits = sum(max(s.capacity, 0.0) for s in cap_rep.stages if s.capacity > 0)
        _, ta_rep = capacity.optimal_passes(
            scheme, c0, p, "tree", args.max_passes, pairing=args.pairing, n_pixels=n_px)
        ta_bits = sum(max(s.capacity, 0.0) for s in ta_rep.stages if s.capacity > 0)
        maxcap = bounds.max_capacity_search(
            scheme, c0, args.max_passes, pairing=args.pairing, n_pixels=n_px).eta_max
        for method, bits in (("AW", aw), ("CAP", cap_bits), ("MaxCap", maxcap), ("TA", ta_bits)):
            rows.append({
                "p": f"{p:.6g}",
                "method": method,
                "capacity_bits": f"{bits:.6f}",
                "capacity_bpp": f"{bits / n_px:.8f}",
            })
    rows.sort(key=lambda r: (float(r["p"]), r["method"]))
    text = reports.render_csv(rows, ["p", "method", "capacity_bits", "capacity_bpp"])
    sys.stdout.write(text)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    return 0


def cmd_bound(args) -> int:
    img, scheme = _load(args)
    c0 = build_cooc(partition_pairs(img, args.pairing))
    rep = bounds.max_capacity_search(
        scheme, c0, args.max_passes, pairing=args.pairing, n_pixels=img.n_pixels)
    _emit(args, reports.make_report("bound", _config(args), rep.to_dict()))
    return 0


def cmd_bench(args) -> int:
    img, scheme = _load(args)
    res = oracle.timing_bench(scheme, img, args.p, args.passes, args.runs, pairing=args.pairing)
    _emit(args, reports.make_report("bench", _config(args), res))
    return 0


def cmd_embed(args) -> int:
    img, scheme = _load(args)
    wm = oracle.gen_watermark(oracle.watermark_bits_needed(img, args.passes), args.p, args.seed)
    rec = oracle.embed_multi(scheme, img, wm, args.passes, args.pairing)
    results = rec.to_dict()
    results["psnr_db"] = oracle.psnr(img, rec.watermarked)
    if args.watermarked:
        save_pgm(rec.watermarked, args.watermarked)
    if args.watermark_out:
        oracle.write_bits(wm.bits[: rec.achieved_capacity], args.watermark_out)
    if args.verify:
        cover, bits = oracle.extract_and_restore(
            scheme, rec.watermarked, rec.passes_completed, args.pairing)
        img_ok = cover == img
        bits_ok = bool(np.array_equal(bits, wm.bits[: len(bits)])) and len(bits) == rec.achieved_capacity
        results["verify"] = {"cover_recovered": img_ok, "watermark_recovered": bits_ok}
        if not (img_ok and bits_ok):
            _emit(args, reports.make_report("embed", _config(args), results))
            print("round-trip verification FAILED", file=sys.stderr)
            return 1
    _emit(args, reports.make_report("embed", _config(args), results))
    return 0


def cmd_optimal(args) -> int:
    img, scheme = _load(args)
    c0 = build_cooc(partition_pairs(img, args.pairing))
    p_opt, rep = capacity.optimal_passes(
        scheme, c0, args.p, args.method, args.max_passes,
        pairing=args.pairing, n_pixels=img.n_pixels)
    payload = {
        "optimal_passes": p_opt,
        "capacity_at_optimum_bits": sum(s.capacity for s in rep.stages[:p_opt]) if p_opt else 0.0,
        "trajectory": rep.to_dict(),
    }
    _emit(args, reports.make_report("optimal", _config(args), payload))
    return 0


def cmd_masks(args) -> int:
    from .imaging import GrayImage

    scheme = get_scheme(args.scheme, args.theta_h)
    os.makedirs(args.outdir, exist_ok=True)
    written = {}
    for region in ("D_E", "D_F", "D1_F", "D1_L"):
        mask = scheme.mask_image(region)
        path = os.path.join(args.outdir, f"{args.scheme}_{region}.pgm")
        save_pgm(GrayImage(256, 256, mask), path)
        written[region] = path
    _emit(args, reports.make_report("masks", _config(args), {"written": written}))
    return 0


_COMMANDS = {
    "estimate": cmd_estimate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "bound": cmd_bound,
    "bench": cmd_bench,
    "embed": cmd_embed,
    "optimal": cmd_optimal,
    "masks": cmd_masks,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"wmcap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
