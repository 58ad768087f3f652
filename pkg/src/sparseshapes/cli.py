"""Command-line experiment driver.

Subcommands: build-dict, compose-demo, segment, ct-sim, ct-recon.  Each
takes --config PATH plus optional --seed and --out overrides, writes its
artifacts (PGM images, CSV tables) into the output directory, and ends by
writing summary.json naming the config hash, the seed, and every file it
produced.  Exit code 0 on success; any failure prints a one-line
diagnostic on stderr and returns nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config, resolve_ref
from .ct import (
    CTProblem,
    TwoPhaseCTProblem,
    fbp_baseline,
    load_counts,
    phantom_from_shapes,
    save_counts,
    simulate_counts,
    solve_two_phase,
)
from .geometry import RegionMask, ScalarField, dissimilarity, rasterize
from .knolls import save_dictionary, shape_of
from .pgmio import field_from_pgm, field_to_pgm, mask_to_pgm
from .segmentation import Image, RegionStats, SegmentationProblem, random_pm1_init
from .solver import SolverError, solve

__all__ = [
    "RunSummary",
    "run_build_dictionary",
    "run_compose_demo",
    "run_segmentation",
    "run_ct_sim",
    "run_ct_recon",
    "main",
]


@dataclass
class RunSummary:
    experiment: str
    config_sha256: str
    seed: int
    status: str = "ok"
    final_energy: float = 0.0
    iterations: int = 0
    active_set: int = 0
    wall_time_s: float = 0.0
    metrics: dict = dc_field(default_factory=dict)
    artifacts: dict = dc_field(default_factory=dict)

    def write(self, out_dir: Path) -> Path:
        # per-subcommand name so ct-sim and ct-recon can share a run dir
        path = out_dir / f"summary-{self.experiment}.json"
        payload = {
            "experiment": self.experiment,
            "config_sha256": self.config_sha256,
            "seed": self.seed,
            "status": self.status,
            "final_energy": self.final_energy,
            "iterations": self.iterations,
            "active_set": self.active_set,
            "wall_time_s": self.wall_time_s,
            "metrics": self.metrics,
            "artifacts": self.artifacts,
        }
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _coefficients_csv(dictionary, alpha) -> str:
    lines = ["index,label,alpha"]
    for i, (knoll, a) in enumerate(zip(dictionary.knolls, alpha)):
        label = knoll.label.replace(",", ";")
        lines.append(f"{i},{label},{float(a)!r}")
    return "\n".join(lines) + "\n"


def _union_mask(shapes, grid) -> RegionMask:
    vals = np.zeros(grid.shape, dtype=bool)
    for s in shapes:
        vals |= rasterize(s, grid).values
    return RegionMask(grid, vals)


def _iou(a: RegionMask, b: RegionMask) -> float:
    inter = np.count_nonzero(a.values & b.values)
    union = np.count_nonzero(a.values | b.values)
    return inter / union if union else 1.0


def _alpha0(config: ExperimentConfig, n: int, rng) -> np.ndarray:
    seg = config.segmentation
    if seg.init == "ones":
        return np.full(n, seg.init_value)
    alpha = random_pm1_init(n, seg.init_count, rng)
    return alpha * seg.init_value


def _active(alpha: np.ndarray) -> int:
    return int(np.count_nonzero(np.abs(alpha) > 1e-8))


# ---------------------------------------------------------------------------
# run functions


def run_build_dictionary(config: ExperimentConfig) -> RunSummary:
    t0 = time.perf_counter()
    dictionary = config.dictionary.build(config.grid)
    out = _out_dir(config)
    path = out / "dictionary.txt"
    save_dictionary(dictionary, path)
    summary = RunSummary("build-dict", config.sha256, config.seed)
    summary.active_set = len(dictionary)
    summary.metrics["n_knolls"] = len(dictionary)
    summary.artifacts["dictionary"] = str(path)
    summary.wall_time_s = time.perf_counter() - t0
    summary.artifacts["summary"] = str(summary.write(out))
    return summary


def run_compose_demo(config: ExperimentConfig) -> RunSummary:
    """Fit a known binary mask: segmentation with frozen unit stats."""
    if config.kind != "compose-demo":
        raise ValueError("config kind is not compose-demo")
    t0 = time.perf_counter()
    grid = config.grid
    out = _out_dir(config)
    rng = np.random.default_rng(config.seed)
    dictionary = config.dictionary.build(grid)
    target = _union_mask(config.synthetic.shapes(), grid)
    image = Image(grid, ScalarField(grid, target.values.astype(float)))
    stats = RegionStats(*(config.segmentation.fixed_stats or (1.0, 0.0)))
    problem = SegmentationProblem(image, dictionary, eps=config.segmentation.eps, stats=stats)
    params = config.solver.params(sigma_auto=0.0)
    alpha0 = _alpha0(config, len(dictionary), rng)
    alpha, trace = solve(problem, alpha0, params)

    recon = shape_of(dictionary, alpha)
    summary = RunSummary("compose-demo", config.sha256, config.seed, status=trace.status)
    summary.final_energy = trace.records[-1].energy
    summary.iterations = trace.records[-1].iteration
    summary.active_set = _active(alpha)
    summary.metrics["n_positive"] = int(np.count_nonzero(alpha > 1e-8))
    summary.metrics["n_negative"] = int(np.count_nonzero(alpha < -1e-8))
    summary.metrics["dissimilarity"] = dissimilarity(recon, target)
    summary.metrics["iou"] = _iou(recon, target)

    mask_to_pgm(target, out / "target.pgm")
    mask_to_pgm(recon, out / "mask.pgm")
    (out / "coefficients.csv").write_text(_coefficients_csv(dictionary, alpha))
    trace.to_csv(out / "trace.csv")
    summary.artifacts = {
        "target": str(out / "target.pgm"),
        "mask": str(out / "mask.pgm"),
        "coefficients": str(out / "coefficients.csv"),
        "trace": str(out / "trace.csv"),
    }
    summary.wall_time_s = time.perf_counter() - t0
    summary.artifacts["summary"] = str(summary.write(out))
    return summary


def run_segmentation(config: ExperimentConfig) -> RunSummary:
    if config.kind != "segment":
        raise ValueError("config kind is not segment")
    t0 = time.perf_counter()
    grid = config.grid
    out = _out_dir(config)
    rng = np.random.default_rng(config.seed)
    seg = config.segmentation
    dictionary = config.dictionary.build(grid)

    truth = None
    if seg.image:
        scene = field_from_pgm(resolve_ref(config, seg.image), grid)
    else:
        syn = config.synthetic
        truth = _union_mask(syn.shapes(), grid)
        vals = np.where(truth.values, syn.foreground, syn.background)
        if syn.noise_std > 0:
            vals = vals + syn.noise_std * rng.standard_normal(grid.shape)
        scene = ScalarField(grid, vals)

    observed = None
    if seg.missing_pct > 0:
        observed = RegionMask(grid, rng.random(grid.shape) >= seg.missing_pct)
    image = Image(grid, scene, observed=observed)
    stats = RegionStats(*seg.fixed_stats) if seg.fixed_stats else None
    problem = SegmentationProblem(
        image, dictionary, eps=seg.eps, stats=stats,
        stats_update_period=max(1, seg.stats_period),
    )
    params = config.solver.params(sigma_auto=0.0)
    alpha0 = _alpha0(config, len(dictionary), rng)
    callbacks = (problem.stats_callback(),) if seg.stats_period >= 1 else ()
    alpha, trace = solve(problem, alpha0, params, callbacks=callbacks)

    recon = problem.segmentation_mask(alpha)
    summary = RunSummary("segment", config.sha256, config.seed, status=trace.status)
    summary.final_energy = trace.records[-1].energy
    summary.iterations = trace.records[-1].iteration
    summary.active_set = _active(alpha)
    summary.metrics["u_in"] = problem.stats.u_in
    summary.metrics["u_ex"] = problem.stats.u_ex
    summary.metrics["n_observed"] = problem.n_observed
    if truth is not None:
        summary.metrics["iou"] = _iou(recon, truth)

    field_to_pgm(scene, out / "input.pgm")
    mask_to_pgm(image.observed, out / "observed.pgm")
    mask_to_pgm(recon, out / "mask.pgm")
    # overlay: scene gray levels with the recovered contour band burned in
    phi = problem.level_set(alpha).values
    band = np.abs(phi) < seg.eps
    overlay_vals = scene.values.copy()
    overlay_vals[band] = scene.values.max() + 0.25 * (np.ptp(scene.values) or 1.0)
    field_to_pgm(ScalarField(grid, overlay_vals), out / "overlay.pgm")
    (out / "coefficients.csv").write_text(_coefficients_csv(dictionary, alpha))
    trace.to_csv(out / "trace.csv")
    summary.artifacts = {
        "input": str(out / "input.pgm"),
        "observed": str(out / "observed.pgm"),
        "mask": str(out / "mask.pgm"),
        "overlay": str(out / "overlay.pgm"),
        "coefficients": str(out / "coefficients.csv"),
        "trace": str(out / "trace.csv"),
    }
    summary.wall_time_s = time.perf_counter() - t0
    summary.artifacts["summary"] = str(summary.write(out))
    return summary


def run_ct_sim(config: ExperimentConfig) -> RunSummary:
    if config.kind != "ct":
        raise ValueError("config kind is not ct")
    t0 = time.perf_counter()
    out = _out_dir(config)
    ct = config.ct
    shapes_mu, background = ct.phantom_list()
    mu_true = phantom_from_shapes(shapes_mu, config.grid, background)
    data = simulate_counts(
        mu_true, ct.geometry(), ct.lambda_T,
        gauss_pct=ct.gauss_pct, seed=config.seed, poisson=ct.poisson,
    )
    save_counts(out / "counts.csv", data)
    field_to_pgm(mu_true, out / "mu_true.pgm")
    summary = RunSummary("ct-sim", config.sha256, config.seed)
    summary.metrics["n_rays"] = data.geometry.n_rays
    summary.metrics["zero_count_rays"] = int(np.count_nonzero(data.counts == 0))
    summary.artifacts = {
        "counts": str(out / "counts.csv"),
        "mu_true": str(out / "mu_true.pgm"),
        "mu_true_scale": str(out / "mu_true.pgm.scale"),
    }
    summary.wall_time_s = time.perf_counter() - t0
    summary.artifacts["summary"] = str(summary.write(out))
    return summary


def _sigma_auto_ct(data, gauss_pct: float) -> float:
    """Noise-floor estimate for the count-weighted misfit.

    Poisson scatter of the log counts contributes variance 1/count per
    ray, hence weight x variance = 1; the Gaussian part adds
    (gauss_pct |v|)^2 x count.  Zero-count rays carry no weight.
    """
    live = data.counts > 0
    poisson_part = np.count_nonzero(live)
    gauss_part = np.sum((gauss_pct * data.measurements[live]) ** 2 * data.counts[live])
    return float(np.sqrt(poisson_part + gauss_part))


def run_ct_recon(config: ExperimentConfig) -> RunSummary:
    if config.kind != "ct":
        raise ValueError("config kind is not ct")
    t0 = time.perf_counter()
    grid = config.grid
    out = _out_dir(config)
    ct = config.ct
    rng = np.random.default_rng(config.seed)
    if not ct.counts:
        raise ValueError("ct-recon needs a counts file (run ct-sim first)")
    counts_path = resolve_ref(config, ct.counts)
    if not Path(counts_path).exists():
        raise ValueError(f"counts file not found (run ct-sim first): {ct.counts}")
    data = load_counts(counts_path)
    dictionary = config.dictionary.build(grid)
    sigma_auto = _sigma_auto_ct(data, ct.gauss_pct)
    params = config.solver.params(sigma_auto=sigma_auto)

    summary = RunSummary("ct-recon", config.sha256, config.seed)
    if ct.mode == "two-phase":
        if config.dictionary2 is None:
            raise ValueError("two-phase reconstruction needs a [dictionary2] section")
        dict2 = config.dictionary2.build(grid)
        problem = TwoPhaseCTProblem(
            dictionary, dict2, data, mu_a=ct.mu_a, mu_s=ct.mu_s, mu_b=ct.mu_b, eps=ct.eps
        )
        a1 = _alpha0(config, len(dictionary), rng)
        a2 = _alpha0(config, len(dict2), rng)
        alpha1, alpha2, trace = solve_two_phase(problem, a1, a2, params)
        mu_rec = problem.mu_from_alpha(alpha1, alpha2)
        alpha_all = np.concatenate([alpha1, alpha2])
        coeff_csv = _coefficients_csv(dictionary, alpha1) + _coefficients_csv(dict2, alpha2)
    else:
        problem = CTProblem(dictionary, data, u_in=ct.u_in, u_ex=ct.u_ex, eps=ct.eps)
        alpha0 = _alpha0(config, len(dictionary), rng)
        alpha, trace = solve(problem, alpha0, params)
        mu_rec = problem.mu_from_alpha(alpha)
        alpha_all = alpha
        coeff_csv = _coefficients_csv(dictionary, alpha)

    fbp = fbp_baseline(data, grid)
    summary.status = trace.status
    summary.final_energy = trace.records[-1].energy
    summary.iterations = trace.records[-1].iteration
    summary.active_set = _active(alpha_all)
    summary.metrics["sigma"] = params.sigma

    if ct.phantom or ct.phantom_shapes:
        shapes_mu, background = ct.phantom_list()
        mu_true = phantom_from_shapes(shapes_mu, grid, background)
        contrast = float(mu_true.values.max() - mu_true.values.min())
        rmse = float(np.sqrt(np.mean((mu_rec.values - mu_true.values) ** 2)))
        rmse_fbp = float(np.sqrt(np.mean((fbp.values - mu_true.values) ** 2)))
        summary.metrics["rmse"] = rmse
        summary.metrics["rmse_fbp"] = rmse_fbp
        summary.metrics["contrast"] = contrast

    field_to_pgm(mu_rec, out / "mu.pgm")
    field_to_pgm(fbp, out / "fbp.pgm")
    (out / "coefficients.csv").write_text(coeff_csv)
    trace.to_csv(out / "trace.csv")
    summary.artifacts = {
        "mu": str(out / "mu.pgm"),
        "mu_scale": str(out / "mu.pgm.scale"),
        "fbp": str(out / "fbp.pgm"),
        "fbp_scale": str(out / "fbp.pgm.scale"),
        "coefficients": str(out / "coefficients.csv"),
        "trace": str(out / "trace.csv"),
    }
    summary.wall_time_s = time.perf_counter() - t0
    summary.artifacts["summary"] = str(summary.write(out))
    return summary


# ---------------------------------------------------------------------------
# argument parsing

_COMMANDS = {
    "build-dict": run_build_dictionary,
    "compose-demo": run_compose_demo,
    "segment": run_segmentation,
    "ct-sim": run_ct_sim,
    "ct-recon": run_ct_recon,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sparseshapes",
        description="Sparse shape composition experiments: dictionaries, segmentation, CT.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("build-dict", "materialize a shape dictionary file"),
        ("compose-demo", "fit a known binary mask, report the active composition"),
        ("segment", "segment a synthetic or PGM image"),
        ("ct-sim", "simulate photon counts for a phantom"),
        ("ct-recon", "reconstruct attenuation from simulated counts"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="experiment config (INI)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="override the output directory")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, seed_override=args.seed, out_override=args.out)
        summary = _COMMANDS[args.command](config)
    except (ValueError, OSError, SolverError) as exc:
        print(f"sparseshapes {args.command}: error: {exc}", file=sys.stderr)
        return 2
    print(summary.artifacts.get("summary", ""))
    return 0


if __name__ == "__main__":
    sys.exit(main())
