"""
Console display of experiment results.
"""
from typing import Any, Dict, List, Optional


def _fmt(value: Any, digits: int = 4) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "-"
    return f"{value:.{digits}f}"


def display_metric_table(summary: Dict[str, Any], region: str = "near"):
    """
    Print the mask kind x metric grid of an experiment summary.

    Args:
        summary: Summary produced by run_experiment
        region: Which region's metrics to show ("near", "far" or "full")
    """
    masks = summary.get("masks", {})
    print("\n" + "=" * 64)
    print(f"Experiment: {summary.get('name', '?')}  (region: {region})")
    print("-" * 64)
    print(f"{'mask':<12}{'PSNR [dB]':>12}{'SSIM':>10}{'MAE':>12}{'PSF MAE':>14}")
    for label, entry in masks.items():
        metrics = entry.get("metrics", {}).get(region, {})
        print(
            f"{label:<12}{_fmt(metrics.get('psnr_db'), 2):>12}{_fmt(metrics.get('ssim')):>10}"
            f"{_fmt(metrics.get('mae')):>12}{_fmt(entry.get('psf_scale_mae'), 8):>14}"
        )
    print("=" * 64)


def display_refocus(summary: Dict[str, Any]):
    """Print per-layer PSNR for every refocus depth"""
    rows: List[str] = []
    for label, entry in summary.get("masks", {}).items():
        for depth, layers in sorted(entry.get("refocus", {}).items(), key=lambda item: float(item[0])):
            rows.append(f"{label:<12}{depth:>10}{_fmt(layers.get('far'), 2):>12}{_fmt(layers.get('near'), 2):>12}")
    if not rows:
        return
    print("\n" + "=" * 46)
    print("Refocusing: per-layer PSNR [dB]")
    print("-" * 46)
    print(f"{'mask':<12}{'depth cm':>10}{'far':>12}{'near':>12}")
    for row in rows:
        print(row)
    print("=" * 46)


def display_optimization(final_loss: float, mean_transmittance: float, binarity: float,
                         baselines: Optional[Dict[str, float]] = None):
    """
    Print the outcome of a mask optimization.

    Args:
        final_loss: Loss after the last epoch
        mean_transmittance: In-aperture mean transmittance
        binarity: Fraction of near-binary sections
        baselines: Mean MTF of reference masks, if computed
    """
    print("\n" + "=" * 50)
    print(f"Mean MTF:            {-final_loss:.6f}")
    print(f"Mean transmittance:  {mean_transmittance:.4f}")
    print(f"Binary sections:     {binarity:.2%}")
    if baselines:
        print("-" * 50)
        for label, value in baselines.items():
            print(f"{label:<20} {value:.6f}")
    print("=" * 50)
