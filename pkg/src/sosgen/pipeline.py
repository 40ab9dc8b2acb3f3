"""End-to-end workflows wiring the generators, solver, and evaluation.

Every run is reproducible from (config, seed): per-sample seeds derive
from the configured base, all randomness is routed through them, and the
manifest records enough provenance to regenerate any sample bit-exactly.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import beamform, dataio, metrics, phantom, sigproc
from .geometry import make_scale
from .solver import DivergenceError, RfFrame, StabilityError, simulate

log = logging.getLogger("sosgen")

GENERATORS = ("ellipsoids", "image", "layered", "single_inclusion")
IMAGE_SEED_OFFSET = 500_000


class PipelineError(RuntimeError):
    pass


def sample_seed(seed_base: int, index: int) -> int:
    return int(seed_base) + int(index)


def _image_for(config: dict, seed: int) -> np.ndarray:
    images = config.get("images", {"source": "synthetic"})
    if images.get("source", "synthetic") == "synthetic":
        return phantom.synthetic_texture(seed + IMAGE_SEED_OFFSET)
    paths = images["paths"]
    rng = np.random.default_rng(seed + IMAGE_SEED_OFFSET)
    path = paths[int(rng.integers(0, len(paths)))]
    from PIL import Image

    img = Image.open(path).convert("L")
    return np.asarray(img)


def build_sample(config: dict, index: int) -> phantom.PhantomSample:
    """Deterministic phantom for one dataset index."""
    grid, _, _ = make_scale(config["scale"])
    seed = sample_seed(config["seed_base"], index)
    generator = config["generator"]
    if generator == "ellipsoids":
        return phantom.gen_ellipsoids(seed, grid)
    if generator == "layered":
        return phantom.gen_layered(seed, grid)
    if generator == "image":
        coin = bool(np.random.default_rng(seed).random() < 0.5)
        image = _image_for(config, seed)
        return phantom.gen_from_image(image, seed, grid, perturb_echogenicity=coin)
    if generator == "single_inclusion":
        opts = config.get("single_inclusion", {})
        spec = phantom.InclusionSpec(
            echogenicity=opts.get("echogenicity", "hyperechoic"),
            scatterer_fraction=opts.get("scatterer_fraction", 0.10),
            sos_contrast=opts.get("sos_contrast", 0.0),
        )
        return phantom.gen_single_inclusion(
            spec, opts.get("background_sos", 1540.0), seed, grid
        )
    raise PipelineError(f"unknown generator {generator!r}")


def preproc_config(config: dict, transducer) -> sigproc.PreprocConfig:
    opts = dict(config.get("preproc", {}))
    opts.setdefault("tgc_freq_mhz", transducer.center_freq / 1e6)
    # scale the head mute with the receive window (100 samples at 40 MHz)
    opts.setdefault("mute_samples", max(1, round(100 * transducer.rx_samples / 2048)))
    return sigproc.PreprocConfig(**opts)


def corruption_config(config: dict) -> sigproc.CorruptionConfig | None:
    opts = config.get("corruption")
    if not opts:
        return None
    return sigproc.CorruptionConfig(
        awgn_target_snr_db=opts.get("awgn_snr_db"),
        phase_range_rad=opts.get("phase_range_rad"),
        noise_seed=opts.get("noise_seed", 0),
    )


def process_frame(frame: RfFrame, config: dict, transducer, seed: int) -> tuple[RfFrame, int]:
    """Optional corruption of the raw frame, then the preprocessing chain."""
    flags = 0
    corr = corruption_config(config)
    if corr is not None:
        corr = sigproc.CorruptionConfig(
            awgn_target_snr_db=corr.awgn_target_snr_db,
            phase_range_rad=corr.phase_range_rad,
            noise_seed=corr.noise_seed + seed,
        )
        frame = sigproc.corrupt(frame, corr)
        flags |= dataio.FLAG_CORRUPTED
    if config.get("preprocess", True):
        frame = sigproc.preprocess(frame, preproc_config(config, transducer), seed=seed)
        flags |= dataio.FLAG_PREPROCESSED
    return frame, flags


def _generate_one(config: dict, index: int, out_dir: str) -> dict:
    grid, transducer, fov = make_scale(config["scale"])
    seed = sample_seed(config["seed_base"], index)
    sample = build_sample(config, index)
    frame = simulate(sample, grid, transducer)
    frame, flags = process_frame(frame, config, transducer, seed)
    gt = phantom.gt_downsample(sample, fov)

    name = f"sample_{index:05d}.sosd"
    record = dataio.SampleRecord(rf=frame.samples, gt=gt.values, flags=flags, seed=seed)
    dataio.write_sample(record, Path(out_dir) / name)

    entry = {
        "file": name,
        "index": index,
        "seed": seed,
        "generator": sample.generator_tag,
        "flags": flags,
        "params": _jsonable(sample.params),
        "provenance": _jsonable(frame.provenance),
    }
    if sample.inclusion_mask is not None:
        mask = phantom.downsample_mask(sample.inclusion_mask, fov)
        mask_name = f"sample_{index:05d}.mask.sosd"
        dataio.write_sample(
            dataio.SampleRecord(
                rf=np.empty((0, 0)),
                gt=mask.astype(np.float32),
                flags=dataio.FLAG_MASK,
                seed=seed,
            ),
            Path(out_dir) / mask_name,
        )
        entry["mask_file"] = mask_name
    return entry


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _worker(args):
    config, index, out_dir = args
    try:
        return index, _generate_one(config, index, out_dir), None
    except (DivergenceError, StabilityError, phantom.GenerationError) as exc:
        return index, None, f"{type(exc).__name__}: {exc}"


def run_generate(config: dict, out_dir, workers: int = 1) -> tuple[dataio.DatasetManifest, list]:
    """Generate, simulate, and store a dataset; returns (manifest, errors)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    count = config["count"]
    jobs = [(config, i, str(out)) for i in range(count)]
    results = {}
    errors = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, entry, err in pool.map(_worker, jobs):
                results[index] = (entry, err)
    else:
        for job in jobs:
            index, entry, err = _worker(job)
            results[index] = (entry, err)

    manifest = dataio.DatasetManifest(config=config)
    for i in range(count):
        entry, err = results[i]
        if err is not None:
            log.error("sample %d failed: %s", i, err)
            errors.append({"index": i, "error": err})
        else:
            manifest.add_sample(**entry)
    manifest.save(out / "manifest.json")
    if errors:
        (out / "errors.json").write_text(json.dumps(errors, indent=2))
    return manifest, errors


def regenerate_sample(manifest: dataio.DatasetManifest, entry: dict) -> dataio.SampleRecord:
    """Rebuild one sample from manifest provenance (bit-exact on a fixed build)."""
    config = manifest.config
    grid, transducer, fov = make_scale(config["scale"])
    sample = build_sample(config, entry["index"])
    frame = simulate(sample, grid, transducer)
    frame, flags = process_frame(frame, config, transducer, entry["seed"])
    gt = phantom.gt_downsample(sample, fov)
    return dataio.SampleRecord(rf=frame.samples, gt=gt.values, flags=flags, seed=entry["seed"])


def run_corrupt(dataset_dir, config: dict, out_dir) -> dataio.DatasetManifest:
    """Corrupt a raw dataset, then re-run preprocessing on every frame."""
    src = dataio.DatasetManifest.load(Path(dataset_dir) / "manifest.json")
    _, transducer, _ = make_scale(src.config["scale"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    new_config = dict(src.config)
    new_config["corruption"] = config.get("corruption", {})
    new_config["preprocess"] = config.get("preprocess", True)
    manifest = dataio.DatasetManifest(config=new_config)
    for entry in src.samples:
        record = dataio.read_sample(Path(dataset_dir) / entry["file"])
        if record.flags & dataio.FLAG_PREPROCESSED:
            raise PipelineError(
                "corruption requires raw RF; regenerate the dataset with preprocess=false"
            )
        frame = RfFrame(
            samples=record.rf, sample_rate=transducer.rx_sample_rate, provenance={}
        )
        frame, flags = process_frame(frame, new_config, transducer, entry["seed"])
        new_entry = dict(entry)
        new_entry["flags"] = flags
        new_entry["provenance"] = dict(_jsonable(frame.provenance))
        dataio.write_sample(
            dataio.SampleRecord(rf=frame.samples, gt=record.gt, flags=flags, seed=record.seed),
            out / entry["file"],
        )
        mask_file = entry.get("mask_file")
        if mask_file:
            (out / mask_file).write_bytes((Path(dataset_dir) / mask_file).read_bytes())
        manifest.add_sample(**new_entry)
    manifest.save(out / "manifest.json")
    return manifest


def run_beamform(dataset_dir, out_dir, assumed_sos: float = 1540.0) -> list:
    """Reference b-mode image per sample: PNG plus raw dB map in a container."""
    src = dataio.DatasetManifest.load(Path(dataset_dir) / "manifest.json")
    grid, transducer, fov = make_scale(src.config["scale"])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for entry in src.samples:
        record = dataio.read_sample(Path(dataset_dir) / entry["file"])
        frame = RfFrame(
            samples=record.rf, sample_rate=transducer.rx_sample_rate, provenance={}
        )
        image = beamform.bmode(frame, transducer, fov, grid, assumed_sos=assumed_sos)
        stem = f"bmode_{entry['index']:05d}"
        (out / f"{stem}.png").write_bytes(beamform.to_png_bytes(image))
        dataio.write_sample(
            dataio.SampleRecord(
                rf=np.empty((0, 0)),
                gt=image.pixels.astype(np.float32),
                flags=0,
                seed=entry["seed"],
            ),
            out / f"{stem}.sosd",
        )
        written.append(stem)
    return written


def run_evaluate(gt_dir, pred_dir, out_dir) -> dict:
    """Per-sample metric CSV plus an aggregate JSON summary.

    Predictions are matched to ground truth by index: either a manifest in
    ``pred_dir`` or files named like the ground-truth dataset's.
    """
    gt_manifest = dataio.DatasetManifest.load(Path(gt_dir) / "manifest.json")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred_dir = Path(pred_dir)

    reports = []
    for entry in gt_manifest.samples:
        gt_rec = dataio.read_sample(Path(gt_dir) / entry["file"])
        pred_path = pred_dir / entry["file"]
        if not pred_path.exists():
            pred_path = pred_dir / f"pred_{entry['index']:05d}.sosd"
        if not pred_path.exists():
            raise PipelineError(f"no prediction found for sample {entry['index']}")
        pred_rec = dataio.read_sample(pred_path)
        mask = None
        mask_file = entry.get("mask_file")
        if mask_file and (Path(gt_dir) / mask_file).exists():
            mask_rec = dataio.read_sample(Path(gt_dir) / mask_file)
            m = mask_rec.gt.astype(bool)
            if m.any() and not m.all():
                mask = m
        reports.append(
            metrics.evaluate_pair(
                gt_rec.gt.astype(np.float64),
                pred_rec.gt.astype(np.float64),
                mask,
                sample_id=f"{entry['index']:05d}",
            )
        )

    fields = ["sample_id", "rmse", "mae", "mape", "ssim",
              "region_rmse_inclusion", "region_rmse_background"]
    with open(out / "eval.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for r in reports:
            writer.writerow({f: getattr(r, f) for f in fields})

    def agg(values):
        values = [v for v in values if v is not None]
        if not values:
            return None
        return {"mean": float(np.mean(values)), "sd": float(np.std(values))}

    summary = {
        "n_samples": len(reports),
        "rmse": agg([r.rmse for r in reports]),
        "mae": agg([r.mae for r in reports]),
        "mape": agg([r.mape for r in reports]),
        "ssim": agg([r.ssim for r in reports]),
        "region_rmse_inclusion": agg([r.region_rmse_inclusion for r in reports]),
        "region_rmse_background": agg([r.region_rmse_background for r in reports]),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary


SWEEP_PRESETS = {
    # scatterer coverage from 5% to 55% of grid points in 2.5% steps
    "scatterer_density": {
        "parameter": "scatterer_fraction",
        "values": [round(0.05 + 0.025 * k, 4) for k in range(21)],
    },
    # SoS contrast sweep at the stated 7.5 m/s step
    "sos_contrast_steps": {
        "parameter": "sos_contrast",
        "values": [round(-50.0 + 7.5 * k, 2) for k in range(14)],
    },
    # the same +-50 m/s span forced to exactly 20 cases
    "sos_contrast_20cases": {
        "parameter": "sos_contrast",
        "values": [round(v, 2) for v in np.linspace(-50.0, 50.0, 20)],
    },
    # wider contrast span used with the additive-noise experiments
    "noise_contrast": {
        "parameter": "sos_contrast",
        "values": [round(-75.0 + 7.5 * k, 2) for k in range(21)],
    },
    "awgn_snr": {"parameter": "awgn_snr_db", "values": [10.0, 15.0, 20.0]},
}


def run_sweep(config: dict, out_dir, workers: int = 1) -> list[dict]:
    """Per-case datasets for a parameter sweep; cases share the base config."""
    sweep = dict(config["sweep"])
    if "preset" in sweep:
        preset = SWEEP_PRESETS[sweep.pop("preset")]
        sweep.setdefault("parameter", preset["parameter"])
        sweep.setdefault("values", preset["values"])
    parameter = sweep["parameter"]
    values = sweep["values"]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    cases = []
    for k, value in enumerate(values):
        case_config = {k2: v for k2, v in config.items() if k2 != "sweep"}
        case_config.setdefault("generator", "single_inclusion")
        if parameter == "awgn_snr_db":
            case_config.setdefault("corruption", {})
            case_config = json.loads(json.dumps(case_config))
            case_config["corruption"]["awgn_snr_db"] = value
        else:
            case_config = json.loads(json.dumps(case_config))
            inc = case_config.setdefault("single_inclusion", {})
            inc[parameter] = value
        case_dir = out / f"case_{k:03d}"
        manifest, errors = run_generate(case_config, case_dir, workers=workers)
        cases.append(
            {
                "case": k,
                "parameter": parameter,
                "value": value,
                "dir": case_dir.name,
                "n_samples": len(manifest.samples),
                "n_errors": len(errors),
            }
        )
    (out / "sweep.json").write_text(
        json.dumps({"parameter": parameter, "cases": cases}, indent=2)
    )
    return cases


def run_report(eval_csv, out_dir) -> dict:
    """Aggregate an evaluation CSV; box-plot data as CSV, rendering optional."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(csv.DictReader(open(eval_csv)))
    if not rows:
        raise PipelineError("evaluation CSV is empty")

    def column(name):
        vals = [float(r[name]) for r in rows if r[name] not in ("", "None")]
        return vals

    box_fields = ["rmse", "mae", "mape", "ssim",
                  "region_rmse_inclusion", "region_rmse_background"]
    with open(out / "box_data.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "values..."])
        for f in box_fields:
            writer.writerow([f] + column(f))

    summary = {
        f: {"mean": float(np.mean(v)), "sd": float(np.std(v))}
        for f in box_fields
        if (v := column(f))
    }
    (out / "report.json").write_text(json.dumps(summary, indent=2))

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        data = [(f, column(f)) for f in box_fields if column(f)]
        fig, ax = plt.subplots(figsize=(8, 4))
        ax.boxplot([v for _, v in data], tick_labels=[f for f, _ in data])
        ax.tick_params(axis="x", rotation=30)
        fig.tight_layout()
        fig.savefig(out / "report.png", dpi=120)
        plt.close(fig)
    except Exception as exc:  # rendering is a convenience, data is the contract
        log.warning("plot rendering failed (%s); box_data.csv still written", exc)
    return summary
