"""End-to-end workflows: single-image extraction, batch evaluation, and
synthetic corpus generation."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import enhance as enh
from .binary import BinarizeParams, Skeleton, auto_threshold, binarize, thin
from .config import PipelineConfig
from .evaluate import (
    AggregateReport,
    MatchResult,
    aggregate,
    compute_metrics,
    format_report_csv,
    format_report_text,
    match_minutiae,
)
from .image import GrayImage, invert, load_pgm, normalize, save_pgm
from .minutiae import MinutiaeSet, extract_minutiae, postprocess, read_minutiae, write_minutiae
from .synth import generate, parse_synth_spec


@dataclass(frozen=True)
class ExtractOutcome:
    image_id: str
    minutiae: MinutiaeSet | None
    skeleton: Skeleton | None
    rejection: enh.Rejection | None
    intermediates: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def rejected(self) -> bool:
        return self.rejection is not None


def extract_from_image(img: GrayImage, image_id: str, config: PipelineConfig) -> ExtractOutcome:
    """Run the full extraction pipeline on an in-memory image.

    Stages: normalize, orientation + frequency estimation, region mask
    (possible rejection), Gabor enhancement, polarity inversion (ridges are
    dark in scan polarity; thresholding wants ridge=1), binarization,
    thinning, minutiae extraction, post-processing.
    """
    if img.width < 32 or img.height < 32:
        raise ValueError(
            f"image {img.width}x{img.height} too small; the block-wise "
            "estimators need at least 32x32"
        )
    norm = normalize(img, config.target_mean, config.target_variance)
    orient = enh.estimate_orientation(norm, config.block_size, config.smooth_sigma)
    freq = enh.estimate_frequency(norm, orient, config.freq_window)
    mask = enh.compute_region_mask(
        norm, orient, freq,
        reject_threshold=config.reject_threshold,
        coherence_floor=config.coherence_floor,
        variance_floor=config.variance_floor,
    )
    if isinstance(mask, enh.Rejection):
        return ExtractOutcome(image_id, None, None, mask)

    enhanced = enh.gabor_enhance(norm, orient, freq, mask, config.sigma_x, config.sigma_y)
    work = invert(enhanced)  # ridges become bright so that ridge => 1
    if config.threshold == "auto":
        params = auto_threshold(work, mask)
    else:
        params = BinarizeParams(int(config.threshold))
    bin_img = binarize(work, params)
    skel = thin(bin_img)
    raw = extract_minutiae(skel, image_id)
    final, final_skel = postprocess(raw, skel, config.postprocess_params())

    return ExtractOutcome(image_id, final, final_skel, None, {
        "enhanced": enhanced, "binary": bin_img, "skeleton": skel,
        "orientation": orient, "frequency": freq,
    })


def run_extract(image_path: str | Path, config: PipelineConfig, out_dir: str | Path) -> ExtractOutcome:
    """Extract minutiae from a PGM file and write the minutiae file.

    With dump_intermediates set, also writes the enhanced/binary/skeleton
    PGMs and the orientation/frequency text grids (five artifacts).
    """
    image_path = Path(image_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    img = load_pgm(image_path)
    stem = image_path.stem
    outcome = extract_from_image(img, stem, config)
    if outcome.rejected:
        return outcome

    write_minutiae(out_dir / f"{stem}.txt", outcome.minutiae, img.width, img.height)
    if config.dump_intermediates:
        inter = outcome.intermediates
        save_pgm(inter["enhanced"], out_dir / f"{stem}_enhanced.pgm")
        save_pgm(inter["binary"], out_dir / f"{stem}_binary.pgm")
        save_pgm(inter["skeleton"], out_dir / f"{stem}_skeleton.pgm")
        (out_dir / f"{stem}_orientation.txt").write_text(
            enh.orientation_to_text(inter["orientation"]), encoding="utf-8"
        )
        (out_dir / f"{stem}_frequency.txt").write_text(
            enh.frequency_to_text(inter["frequency"]), encoding="utf-8"
        )
    return outcome


def _eval_one(image_path: str, truth_path: str, config: PipelineConfig):
    """Worker body for one dataset image; must stay picklable."""
    stem = Path(image_path).stem
    try:
        img = load_pgm(image_path)
        truth, _, _ = read_minutiae(truth_path)
        truth = replace(truth, image_id=stem)
        outcome = extract_from_image(img, stem, config)
        if outcome.rejected:
            return ("rejected", stem, outcome.rejection.recoverable_fraction)
        detected = outcome.minutiae
        result = match_minutiae(detected, truth, config.tolerance)
        return ("ok", stem, result, detected, img.width, img.height)
    except Exception as exc:  # per-image failures must not sink the batch
        return ("error", stem, str(exc))


@dataclass(frozen=True)
class EvalRun:
    report: AggregateReport | None
    results: tuple[MatchResult, ...]
    rejected: tuple[tuple[str, float], ...]
    errors: tuple[tuple[str, str], ...]


def run_eval(
    dataset_dir: str | Path,
    truth_dir: str | Path,
    config: PipelineConfig,
    out_dir: str | Path,
    workers: int = 1,
) -> EvalRun:
    """Evaluate every PGM in dataset_dir against same-stem truth files.

    Writes per-image minutiae files plus report.txt / report.csv. Rejected
    images are listed separately and excluded from the means; images with
    missing truth or load failures are reported as errors and skipped.
    Results are ordered by image id, so reports are identical for any
    worker count.
    """
    dataset_dir = Path(dataset_dir)
    truth_dir = Path(truth_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    images = sorted(dataset_dir.glob("*.pgm"))
    if not images:
        raise ValueError(f"no PGM images found in {dataset_dir}")

    jobs = []
    errors: list[tuple[str, str]] = []
    for path in images:
        truth_path = truth_dir / f"{path.stem}.txt"
        if not truth_path.exists():
            errors.append((path.stem, f"missing truth file {truth_path.name}"))
            continue
        jobs.append((str(path), str(truth_path)))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(
                _eval_one,
                [i for i, _ in jobs],
                [t for _, t in jobs],
                [config] * len(jobs),
            ))
    else:
        raw = [_eval_one(i, t, config) for i, t in jobs]

    rejected: list[tuple[str, float]] = []
    results: list[MatchResult] = []
    per_image = []
    for item in raw:
        if item[0] == "rejected":
            rejected.append((item[1], item[2]))
        elif item[0] == "error":
            errors.append((item[1], item[2]))
        else:
            _, stem, result, detected, width, height = item
            results.append(result)
            per_image.append((stem, compute_metrics(result)))
            write_minutiae(out_dir / f"{stem}.txt", detected, width, height)

    per_image.sort(key=lambda kv: kv[0])
    results.sort(key=lambda r: r.image_id)
    rejected.sort()
    errors.sort()

    config_lines = config.echo_lines()
    report = aggregate(per_image) if per_image else None
    if report is not None:
        text = format_report_text(report, config_lines, rejected, errors)
        csv = format_report_csv(report, config_lines, results, rejected, errors)
    else:
        lines = ["minutiae evaluation report", "=" * 26, "", "config:"]
        lines += [f"  {line}" for line in config_lines]
        lines += ["", "images evaluated: 0"]
        lines += [f"rejected: {image_id} ({frac:.3f})" for image_id, frac in rejected]
        lines += [f"error: {image_id} {msg}" for image_id, msg in errors]
        text = "\n".join(lines) + "\n"
        csv = "\n".join(
            [f"# {line}" for line in config_lines]
            + ["record,image_id,sen,spe,matched,missed,false_count,ground_truth"]
            + [f"rejected,{image_id},,,,,,{frac:.6f}" for image_id, frac in rejected]
            + [f"error,{image_id},{msg.replace(',', ';')},,,,," for image_id, msg in errors]
        ) + "\n"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")
    (out_dir / "report.csv").write_text(csv, encoding="utf-8")
    return EvalRun(report, tuple(results), tuple(rejected), tuple(errors))


def run_synth(spec_path: str | Path, count: int, out_dir: str | Path) -> list[Path]:
    """Generate `count` seeded images (seeds base..base+count-1) plus truth
    files. The spec is validated before anything is written."""
    base = parse_synth_spec(spec_path)
    specs = [replace(base, seed=base.seed + k) for k in range(count)]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for spec in specs:
        img, truth = generate(spec)
        stem = truth.image_id
        save_pgm(img, out_dir / f"{stem}.pgm")
        write_minutiae(out_dir / f"{stem}.txt", truth, img.width, img.height)
        written.append(out_dir / f"{stem}.pgm")
    return written
