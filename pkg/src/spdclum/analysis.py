"""Streak-image analysis: ROI integration, count separation, traces, spectra.

The signal-to-noise ratio used throughout is the plain count quotient
SNR = C_S / C_L of the SPDC and luminescence regions.  Detector efficiency
multiplies both regions equally and cancels; a luminescence region with zero
counts yields an infinite sentinel plus a flag instead of a division error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .emission import EmissionModel
from .streak import RegionOfInterest, StreakImage


def _select(axis: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return (axis >= lo) & (axis <= hi)


def roi_integrate(image: StreakImage, roi: RegionOfInterest, *,
                  clip: bool = False) -> int:
    """Sum the counts inside a region of interest.

    Bounds are inclusive on bin centers and must lie within the image axes
    unless clip=True.  A region selecting no bins is a domain error.
    """
    wl, t = image.wavelength_axis_nm, image.time_axis_ns
    (wlo, whi), (tlo, thi) = roi.wavelength_nm, roi.time_ns
    if not clip:
        if wlo < wl[0] or whi > wl[-1] or tlo < t[0] or thi > t[-1]:
            raise ValueError(
                f"ROI {roi.label!r} extends beyond the image axes "
                f"(wavelength {wl[0]:g}..{wl[-1]:g} nm, time {t[0]:g}..{t[-1]:g} ns)")
    wmask = _select(wl, wlo, whi)
    tmask = _select(t, tlo, thi)
    if not wmask.any() or not tmask.any():
        raise ValueError(f"ROI {roi.label!r} selects no bins")
    return int(image.counts[np.ix_(tmask, wmask)].sum())


def default_rois(model: EmissionModel, image: StreakImage, *,
                 t0: float | None = None) -> tuple[RegionOfInterest, RegionOfInterest]:
    """Model-derived regions: SPDC box and its after-gate complement.

    SPDC: spectral center +- 2 line FWHM crossed with t0 +- 3 IRF FWHM.
    Luminescence: the full wavelength span at times after the SPDC gate.
    Both are clamped to the image axes and guaranteed disjoint in time.
    """
    if t0 is None:
        t0 = float(image.metadata.get("pulse_arrival_ns", 0.0))
    wl, t = image.wavelength_axis_nm, image.time_axis_ns
    c = model.spdc_spectrum.center_nm
    half_w = 2.0 * model.spdc_spectrum.fwhm_nm
    irf = model.lum_decay.irf_fwhm_ns
    half_t = 3.0 * irf if irf > 0 else 0.5 * image.time_binwidth()
    spdc = RegionOfInterest(
        (max(c - half_w, wl[0]), min(c + half_w, wl[-1])),
        (max(t0 - half_t, t[0]), min(t0 + half_t, t[-1])),
        label="spdc")
    after = t[t > spdc.time_ns[1]]
    if after.size == 0:
        raise ValueError("no time bins remain after the SPDC gate for a "
                         "luminescence region")
    lum = RegionOfInterest((wl[0], wl[-1]), (float(after[0]), float(t[-1])),
                           label="luminescence")
    return spdc, lum


@dataclass(frozen=True)
class CountSummary:
    """Separated counts and their quotient.

    lum_under_spdc is the sideband-estimated luminescence floor subtracted
    from the SPDC region (only in overlap_mode="model-subtract").
    """

    c_spdc: float
    c_lum: float
    snr: float
    spdc_roi: RegionOfInterest
    lum_roi: RegionOfInterest
    overlap_mode: str = "none"
    lum_under_spdc: float = 0.0
    flags: tuple[str, ...] = ()

    @property
    def flagged(self) -> bool:
        return bool(self.flags)


def separate_counts(image: StreakImage, spdc_roi: RegionOfInterest,
                    lum_roi: RegionOfInterest, *,
                    overlap_mode: str = "none") -> CountSummary:
    """Split an image into SPDC and luminescence counts and form their SNR.

    overlap_mode "none" integrates the regions as they are; "model-subtract"
    estimates the per-bin luminescence floor under the SPDC region from
    sideband bins (same wavelengths, luminescence time range) and removes it
    from the SPDC total.
    """
    if overlap_mode not in ("none", "model-subtract"):
        raise ValueError(f"unknown overlap mode {overlap_mode!r}")
    c_s = float(roi_integrate(image, spdc_roi))
    c_l = float(roi_integrate(image, lum_roi))
    flags: list[str] = []
    floor = 0.0
    if overlap_mode == "model-subtract":
        wl, t = image.wavelength_axis_nm, image.time_axis_ns
        wmask = _select(wl, *spdc_roi.wavelength_nm)
        tmask_side = _select(t, *lum_roi.time_ns)
        tmask_spdc = _select(t, *spdc_roi.time_ns)
        side = image.counts[np.ix_(tmask_side, wmask)]
        if side.size == 0:
            raise ValueError("no sideband bins available to estimate the "
                             "luminescence floor")
        floor = float(side.mean()) * int(tmask_spdc.sum()) * int(wmask.sum())
        c_s = max(c_s - floor, 0.0)
    if c_l == 0.0:
        if c_s == 0.0:
            snr = 0.0
            flags.append("no-counts")
        else:
            snr = math.inf
            flags.append("no-luminescence-counts")
    else:
        snr = c_s / c_l
        if c_s == 0.0:
            flags.append("no-spdc-counts")
    return CountSummary(c_s, c_l, snr, spdc_roi, lum_roi, overlap_mode,
                        floor, tuple(flags))


def extract_time_trace(image: StreakImage, wavelength_band: tuple[float, float]
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Sum counts over a wavelength band, per time bin.

    Returns (time centers, counts); an empty band is a domain error.
    """
    lo, hi = wavelength_band
    if hi < lo:
        raise ValueError(f"inverted wavelength band ({lo}, {hi})")
    mask = _select(image.wavelength_axis_nm, lo, hi)
    if not mask.any():
        raise ValueError("wavelength band selects no bins")
    return image.time_axis_ns.copy(), image.counts[:, mask].sum(axis=1)


def extract_spectrum(image: StreakImage, time_window: tuple[float, float]
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Sum counts over a time window, per wavelength bin."""
    lo, hi = time_window
    if hi < lo:
        raise ValueError(f"inverted time window ({lo}, {hi})")
    mask = _select(image.time_axis_ns, lo, hi)
    if not mask.any():
        raise ValueError("time window selects no bins")
    return image.wavelength_axis_nm.copy(), image.counts[mask, :].sum(axis=0)


def normalize_spectrum(values) -> np.ndarray:
    """Scale a series so its maximum is exactly 1.

    Idempotent: normalizing twice is bit-identical to normalizing once.
    An all-zero series has no scale and is a domain error.
    """
    v = np.asarray(values, dtype=float)
    peak = v.max(initial=0.0)
    if peak == 0.0:
        raise ValueError("cannot normalize an all-zero series")
    return v / peak


def trace_fwhm(times: np.ndarray, counts: np.ndarray) -> float:
    """Full width at half maximum of a peaked trace, by linear interpolation
    between the half-maximum crossings around the peak bin."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(counts, dtype=float)
    if y.size < 3:
        raise ValueError("trace too short for a width estimate")
    i_pk = int(np.argmax(y))
    half = y[i_pk] / 2.0
    if y[i_pk] <= 0:
        raise ValueError("trace has no peak")

    def cross(side):
        idx = range(i_pk, 0, -1) if side < 0 else range(i_pk, y.size - 1)
        for i in idx:
            j = i + side
            if y[j] < half <= y[i]:
                frac = (y[i] - half) / (y[i] - y[j])
                return t[i] + frac * (t[j] - t[i])
        raise ValueError("half-maximum crossing not inside the trace")

    return float(cross(+1) - cross(-1))
