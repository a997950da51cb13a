"""Settings sweep: focal-length solve, per-depth fits, filtering and statistics."""
import logging
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..optics.errors import FitError, GeometryError, OpticsError, QuadratureError
from ..optics.gaussian_fit import fit_sigma_equal_area
from ..optics.geometry import DEFAULT_DEPTH_POINTS, coc_from_depth, depth_grid, focal_for_cmax
from ..optics.models import CameraConfig, QuadratureSpec, SpectralModel
from ..optics.spectral_otf import DEFAULT_FREQ_SAMPLES, mtf, polychromatic_otf
from .schemas import (
    DepthProfile,
    DepthStatistics,
    FilterCriteria,
    SweepGrid,
    SweepRecord,
)

logger = logging.getLogger(__name__)

# relative slack on threshold comparisons of grid values read back from text
_GRID_RTOL = 1e-9
_PIXEL_EXACT_RTOL = 1e-6


def depth_profile(
    d_f: float,
    f_n: float,
    c_max: float,
    pixel_pitch: float,
    eta: float = 0.1,
    n_depth: int = DEFAULT_DEPTH_POINTS,
    spectral: Optional[SpectralModel] = None,
    quad: Optional[QuadratureSpec] = None,
    freq_samples: int = DEFAULT_FREQ_SAMPLES,
) -> DepthProfile:
    """Blur, wavefront and Gaussian fit at every point of the depth grid.

    c_max is in pixel multiples. The in-focus point is recorded as the
    identity filter (sigma 0, MAE 0) without being evaluated.
    """
    focal = focal_for_cmax(d_f, f_n, c_max * pixel_pitch, eta)
    config = CameraConfig.build(
        focal_length=focal, f_number=f_n, focus_distance=d_f, pixel_pitch=pixel_pitch
    )
    grid = depth_grid(d_f, eta, n_depth)
    n = grid.point_count
    coc = np.zeros(n)
    wavefront = np.zeros(n)
    sigma = np.zeros(n)
    mae = np.zeros(n)
    rmse = np.zeros(n)
    for i, offset in enumerate(grid.offsets):
        state = coc_from_depth(config, offset)
        coc[i] = state.coc_diameter
        wavefront[i] = state.wavefront_coefficient
        if state.coc_diameter == 0.0:
            continue
        try:
            curve = polychromatic_otf(config, state, spectral, freq_samples, quad)
            fit = fit_sigma_equal_area(mtf(curve))
        except QuadratureError as e:
            raise e.at_depth(i) from e
        except FitError as e:
            raise FitError(f"depth index {i}: {e}") from e
        sigma[i], mae[i], rmse[i] = fit.sigma, fit.mae, fit.rmse
    return DepthProfile(
        config=config,
        offsets=grid.array,
        coc=coc,
        wavefront=wavefront,
        sigma=sigma,
        mae=mae,
        rmse=rmse,
    )


def evaluate_record(
    d_f: float,
    f_n: float,
    c_max: float,
    pixel_pitch: float,
    eta: float = 0.1,
    n_depth: int = DEFAULT_DEPTH_POINTS,
    spectral: Optional[SpectralModel] = None,
    quad: Optional[QuadratureSpec] = None,
    freq_samples: int = DEFAULT_FREQ_SAMPLES,
) -> SweepRecord:
    """sigma_max and MAE_max over the +-eta d_f depth range for one settings tuple."""
    profile = depth_profile(d_f, f_n, c_max, pixel_pitch, eta, n_depth, spectral, quad, freq_samples)
    return SweepRecord(
        focus_distance=d_f,
        f_number=f_n,
        c_max=c_max,
        pixel_pitch=pixel_pitch,
        focal_length=profile.config.focal_length,
        sigma_max=profile.sigma_max,
        mae_max=profile.mae_max,
    )


def _evaluate_task(task: Tuple) -> SweepRecord:
    """Worker entry point; failures become error records instead of exceptions."""
    d_f, f_n, c_max, pixel, grid, spectral, quad, freq_samples = task
    collapsed = d_f is None
    depth = grid.reference_focus_distance if collapsed else d_f
    try:
        record = evaluate_record(
            depth, f_n, c_max, pixel, grid.eta, grid.n_depth, spectral, quad, freq_samples
        )
    except (OpticsError, QuadratureError) as e:
        focal = None
        try:
            focal = focal_for_cmax(depth, f_n, c_max * pixel, grid.eta)
        except GeometryError:
            pass
        record = SweepRecord(
            focus_distance=depth,
            f_number=f_n,
            c_max=c_max,
            pixel_pitch=pixel,
            focal_length=focal,
            error=f"{type(e).__name__}: {e}",
        )
    if collapsed:
        record = record.model_copy(update={"focus_distance": None})
    return record


def run_sweep(
    grid: SweepGrid,
    spectral: Optional[SpectralModel] = None,
    quad: Optional[QuadratureSpec] = None,
    collapse_depth: bool = False,
    jobs: int = 1,
    freq_samples: int = DEFAULT_FREQ_SAMPLES,
) -> List[SweepRecord]:
    """Evaluate every settings tuple of the grid, in lexicographic tuple order.

    Output order and values do not depend on jobs. Failed records carry an
    error message and no sigma/MAE.
    """
    tasks = [
        (d_f, f_n, c_max, pixel, grid, spectral, quad, freq_samples)
        for d_f, f_n, c_max, pixel in grid.settings(collapse_depth)
    ]
    logger.info(
        "[Sweep] Evaluating %d records (%s) with %d job(s)",
        len(tasks), "collapsed" if collapse_depth else "full", jobs,
    )
    started = time.perf_counter()
    if jobs <= 1:
        records = [_evaluate_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_evaluate_task, tasks, chunksize=1))

    failed = [r for r in records if not r.ok]
    for r in failed:
        logger.warning(
            "[Sweep] Record d_f=%s f_n=%g C_max=%g P=%g failed: %s",
            r.focus_distance, r.f_number, r.c_max, r.pixel_pitch, r.error,
        )
    logger.info(
        "[Sweep] Finished %d records (%d failed) in %.1f s",
        len(records), len(failed), time.perf_counter() - started,
    )
    return records


def _within(value: Optional[float], limit: float) -> bool:
    return value is not None and value <= limit * (1.0 + _GRID_RTOL)


def accepts(record: SweepRecord, criteria: FilterCriteria) -> bool:
    """True when a record passes every acceptance threshold."""
    if not record.ok or record.mae_max is None:
        return False
    if not record.mae_max <= criteria.mae_threshold:
        return False
    if not criteria.sigma_lower < record.sigma_max < criteria.sigma_upper:
        return False
    if not _within(record.pixel_pitch, criteria.pixel_max):
        return False
    if criteria.pixel_exact is not None and not np.isclose(
        record.pixel_pitch, criteria.pixel_exact, rtol=_PIXEL_EXACT_RTOL, atol=0.0
    ):
        return False
    if criteria.focal_max is not None and not _within(record.focal_length, criteria.focal_max):
        return False
    return True


def filter_records(
    records: Iterable[SweepRecord],
    criteria: FilterCriteria,
) -> Tuple[List[SweepRecord], Dict[float, int]]:
    """Accepted records (input order kept) and their counts per focused depth."""
    kept = [r for r in records if accepts(r, criteria)]
    counts: Dict[float, int] = defaultdict(int)
    for r in kept:
        if r.focus_distance is not None:
            counts[r.focus_distance] += 1
    logger.info("[Sweep] Filter kept %d records", len(kept))
    return kept, dict(sorted(counts.items()))


def depth_statistics(records: Sequence[SweepRecord]) -> List[DepthStatistics]:
    """Count and pixel/focal/f-number ranges of the records at each focused depth."""
    groups: Dict[float, List[SweepRecord]] = defaultdict(list)
    for r in records:
        if r.focus_distance is None or r.focal_length is None:
            continue
        groups[r.focus_distance].append(r)
    stats = []
    for d_f in sorted(groups):
        group = groups[d_f]
        pixels = [r.pixel_pitch for r in group]
        focals = [r.focal_length for r in group]
        f_numbers = [r.f_number for r in group]
        stats.append(
            DepthStatistics(
                focus_distance=d_f,
                count=len(group),
                pixel_min=min(pixels),
                pixel_max=max(pixels),
                focal_min=min(focals),
                focal_max=max(focals),
                f_number_min=min(f_numbers),
                f_number_max=max(f_numbers),
            )
        )
    return stats
