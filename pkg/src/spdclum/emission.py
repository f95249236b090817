"""Emission model: pump, SPDC line, crystal luminescence spectrum and decay.

The model is deliberately scalar: photon rates per collected mode, normalized
spectral densities on a fixed wavelength grid, and a multi-exponential decay
law.  Degenerate type-I phase matching pins the SPDC line at twice the pump
wavelength; the luminescence spectrum and decay do not depend on the pump
wavelength at all, only the rate scales with pump power.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

PUMP_RANGE_NM = (240.0, 300.0)


@dataclass(frozen=True)
class PumpConfig:
    """Ultraviolet pump pulse train.

    polarization_angle_deg is bookkeeping only: phase matching on/off is
    expressed through the SPDC rate, not derived from the angle.
    """

    wavelength_nm: float = 267.0
    power_mw: float = 100.0
    repetition_rate_hz: float = 1000.0
    polarization_angle_deg: float = 0.0

    def __post_init__(self):
        lo, hi = PUMP_RANGE_NM
        if not lo <= self.wavelength_nm <= hi:
            raise ValueError(
                f"pump wavelength {self.wavelength_nm} nm outside the "
                f"supported {lo:.0f}-{hi:.0f} nm range")
        if self.power_mw <= 0.0:
            raise ValueError("pump power must be positive")
        if self.repetition_rate_hz <= 0.0:
            raise ValueError("repetition rate must be positive")

    @property
    def period_ns(self) -> float:
        return 1e9 / self.repetition_rate_hz


def spdc_center_wavelength(pump: PumpConfig) -> float:
    """Degenerate collinear SPDC line: twice the pump wavelength."""
    return 2.0 * pump.wavelength_nm


@dataclass(frozen=True)
class SpectralProfile:
    """Normalized spectral density shape.

    kind "spdc_gaussian" is a symmetric bell with the given FWHM (skew must
    be 0).  kind "luminescence_skewed" is a log-normal-style peak: mode at
    center_nm, realized FWHM equal to fwhm_nm, and a heavier tail toward long
    wavelengths for skew > 0 (skew = 0 recovers the symmetric bell).
    """

    kind: str
    center_nm: float
    fwhm_nm: float
    skew: float = 0.0

    def __post_init__(self):
        if self.kind not in ("spdc_gaussian", "luminescence_skewed"):
            raise ValueError(f"unknown spectral profile kind {self.kind!r}")
        if self.fwhm_nm <= 0.0:
            raise ValueError("spectral FWHM must be positive")
        if self.skew < 0.0:
            raise ValueError("skew must be nonnegative")
        if self.kind == "spdc_gaussian" and self.skew != 0.0:
            raise ValueError("spdc_gaussian profile cannot be skewed")

    def shape(self, wavelength_nm) -> np.ndarray:
        """Unnormalized shape (peak value 1 at center_nm)."""
        lam = np.asarray(wavelength_nm, dtype=float)
        x = lam.ravel() - self.center_nm
        ln2 = np.log(2.0)
        if self.skew == 0.0:
            return np.exp(-4.0 * ln2 * (x / self.fwhm_nm) ** 2).reshape(lam.shape)
        b = self.skew
        # internal width chosen so the realized FWHM equals fwhm_nm
        delta = self.fwhm_nm * b / np.sinh(b)
        arg = 1.0 + 2.0 * b * x / delta
        out = np.zeros_like(arg)
        ok = arg > 0.0
        out[ok] = np.exp(-ln2 * (np.log(arg[ok]) / b) ** 2)
        return out.reshape(lam.shape)


@dataclass(frozen=True)
class WavelengthGrid:
    """Uniform wavelength bins; centers run from min_nm to max_nm inclusive."""

    min_nm: float = 300.0
    max_nm: float = 700.0
    step_nm: float = 1.0

    def __post_init__(self):
        if self.step_nm <= 0.0:
            raise ValueError("grid step must be positive")
        if self.max_nm <= self.min_nm:
            raise ValueError("grid max must exceed min")

    def centers(self) -> np.ndarray:
        n = int(round((self.max_nm - self.min_nm) / self.step_nm))
        return self.min_nm + self.step_nm * np.arange(n + 1)


@dataclass(frozen=True)
class DecayModel:
    """Multi-exponential luminescence decay plus instrument response width.

    Amplitudes are decay-curve weights at t = 0 and must sum to 1; lifetimes
    are strictly increasing, in nanoseconds.
    """

    amplitudes: tuple[float, ...] = (0.90, 0.07, 0.03)
    lifetimes_ns: tuple[float, ...] = (0.73, 1850.0, 9950.0)
    irf_fwhm_ns: float = 0.15

    def __post_init__(self):
        amps = tuple(float(a) for a in self.amplitudes)
        taus = tuple(float(t) for t in self.lifetimes_ns)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "lifetimes_ns", taus)
        if len(amps) != len(taus) or not amps:
            raise ValueError("amplitudes and lifetimes must pair up")
        if any(a <= 0.0 for a in amps):
            raise ValueError("decay amplitudes must be positive")
        if abs(sum(amps) - 1.0) > 1e-9:
            raise ValueError("decay amplitudes must sum to 1")
        if any(t <= 0.0 for t in taus):
            raise ValueError("lifetimes must be positive")
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError("lifetimes must be strictly increasing")
        if self.irf_fwhm_ns < 0.0:
            raise ValueError("IRF FWHM must be nonnegative")

    @property
    def components(self) -> tuple[tuple[float, float], ...]:
        return tuple(zip(self.amplitudes, self.lifetimes_ns))

    @property
    def mean_mass_ns(self) -> float:
        """Time integral of the decay curve, sum(a_i * tau_i)."""
        return float(sum(a * t for a, t in self.components))


@dataclass(frozen=True)
class EmissionModel:
    """Everything the synthesizer and the filter pipeline need.

    Rates are photons per second per collected mode.  Luminescence
    polarization is fully mixed (a polarizer passes half of it); SPDC light is
    linearly polarized unless spdc_polarized is cleared.
    """

    pump: PumpConfig = PumpConfig()
    spdc_spectrum: SpectralProfile = SpectralProfile("spdc_gaussian", 534.0, 10.0)
    lum_spectrum: SpectralProfile = SpectralProfile("luminescence_skewed", 430.0, 60.0, 0.4)
    lum_decay: DecayModel = DecayModel()
    spdc_rate_hz: float = 1.0e5
    lum_rate_hz: float = 6.036e4
    spdc_polarized: bool = True
    spdc_power_exponent: float = 1.0
    lum_polarization: str = "mixed"
    grid: WavelengthGrid = WavelengthGrid()

    def __post_init__(self):
        center = spdc_center_wavelength(self.pump)
        if abs(self.spdc_spectrum.center_nm - center) > 1e-9:
            raise ValueError(
                f"SPDC spectrum center {self.spdc_spectrum.center_nm} nm must "
                f"equal twice the pump wavelength ({center} nm)")
        if self.spdc_spectrum.kind != "spdc_gaussian":
            raise ValueError("spdc_spectrum must be of kind spdc_gaussian")
        if self.lum_spectrum.kind != "luminescence_skewed":
            raise ValueError("lum_spectrum must be of kind luminescence_skewed")
        if self.spdc_rate_hz < 0.0 or self.lum_rate_hz < 0.0:
            raise ValueError("rates must be nonnegative")
        if self.lum_polarization != "mixed":
            raise ValueError("luminescence polarization is fixed as mixed")


def make_model(
    pump_wavelength_nm: float = 267.0,
    *,
    pump_power_mw: float = 100.0,
    repetition_rate_hz: float = 1000.0,
    pump_polarization_deg: float = 0.0,
    spdc_fwhm_nm: float = 10.0,
    lum_center_nm: float = 430.0,
    lum_fwhm_nm: float = 60.0,
    lum_skew: float = 0.4,
    amplitudes: tuple[float, ...] = (0.90, 0.07, 0.03),
    lifetimes_ns: tuple[float, ...] = (0.73, 1850.0, 9950.0),
    irf_fwhm_ns: float = 0.15,
    spdc_rate_hz: float = 1.0e5,
    lum_rate_hz: float = 6.036e4,
    spdc_polarized: bool = True,
    spdc_power_exponent: float = 1.0,
    grid: WavelengthGrid | None = None,
) -> EmissionModel:
    """Build a consistent EmissionModel; the SPDC line is derived from the pump."""
    pump = PumpConfig(pump_wavelength_nm, pump_power_mw,
                      repetition_rate_hz, pump_polarization_deg)
    return EmissionModel(
        pump=pump,
        spdc_spectrum=SpectralProfile("spdc_gaussian",
                                      spdc_center_wavelength(pump), spdc_fwhm_nm),
        lum_spectrum=SpectralProfile("luminescence_skewed",
                                     lum_center_nm, lum_fwhm_nm, lum_skew),
        lum_decay=DecayModel(tuple(amplitudes), tuple(lifetimes_ns), irf_fwhm_ns),
        spdc_rate_hz=spdc_rate_hz,
        lum_rate_hz=lum_rate_hz,
        spdc_polarized=spdc_polarized,
        spdc_power_exponent=spdc_power_exponent,
        grid=grid if grid is not None else WavelengthGrid(),
    )


def retarget_pump(model: EmissionModel, pump_wavelength_nm: float) -> EmissionModel:
    """Move the pump line; the SPDC center follows, everything else is kept."""
    pump = dataclasses.replace(model.pump, wavelength_nm=pump_wavelength_nm)
    spdc = dataclasses.replace(model.spdc_spectrum,
                               center_nm=spdc_center_wavelength(pump))
    return dataclasses.replace(model, pump=pump, spdc_spectrum=spdc)


def _norm_constant(profile: SpectralProfile, grid: WavelengthGrid) -> float:
    """Normalization over the grid: trapezoid of the shape on bin centers."""
    centers = grid.centers()
    z = float(np.trapezoid(profile.shape(centers), centers))
    if z <= 0.0:
        raise ValueError("spectral profile has no mass on the wavelength grid")
    return z


def spectral_density(profile: SpectralProfile, grid: WavelengthGrid, wavelength_nm):
    """Normalized density of `profile` on `grid`; zero outside the grid span."""
    lam = np.asarray(wavelength_nm, dtype=float)
    z = _norm_constant(profile, grid)
    vals = profile.shape(lam) / z
    vals = np.where((lam < grid.min_nm) | (lam > grid.max_nm), 0.0, vals)
    return float(vals) if vals.shape == () else vals


def luminescence_spectral_density(model: EmissionModel, wavelength_nm):
    """Luminescence density, 1/nm; integrates to 1 over the model grid.

    Depends only on the luminescence profile and the grid, never on pump
    wavelength or power.
    """
    return spectral_density(model.lum_spectrum, model.grid, wavelength_nm)


def spdc_spectral_density(model: EmissionModel, wavelength_nm):
    """SPDC line density, 1/nm; integrates to 1 over the model grid."""
    return spectral_density(model.spdc_spectrum, model.grid, wavelength_nm)


def luminescence_decay_intensity(model: EmissionModel, t_ns):
    """Multi-exponential decay curve, normalized to 1 at t = 0.

    Negative times are a domain error: the curve is defined from the pulse on.
    """
    t = np.asarray(t_ns, dtype=float)
    if t.size and t.min() < 0.0:
        raise ValueError("decay intensity is defined for t >= 0 only")
    out = np.zeros_like(t)
    for a, tau in model.lum_decay.components:
        out = out + a * np.exp(-t / tau)
    return float(out) if out.shape == () else out


def scale_power(model: EmissionModel, factor: float) -> EmissionModel:
    """Rescale pump power by `factor`.

    Luminescence responds linearly; the SPDC rate follows
    factor ** spdc_power_exponent (linear by default).  Spectral shapes and
    decay are untouched.
    """
    if factor <= 0.0:
        raise ValueError("power scale factor must be positive")
    pump = dataclasses.replace(model.pump, power_mw=model.pump.power_mw * factor)
    return dataclasses.replace(
        model,
        pump=pump,
        lum_rate_hz=model.lum_rate_hz * factor,
        spdc_rate_hz=model.spdc_rate_hz * factor ** model.spdc_power_exponent,
    )


def model_fingerprint(model: EmissionModel) -> str:
    """Canonical flat text of every model parameter.

    Used for hashing into synthesized-image metadata, so analysis can tell
    which model produced a file.  Stable across runs and sessions.
    """
    items = [
        ("pump.wavelength_nm", model.pump.wavelength_nm),
        ("pump.power_mw", model.pump.power_mw),
        ("pump.repetition_rate_hz", model.pump.repetition_rate_hz),
        ("pump.polarization_angle_deg", model.pump.polarization_angle_deg),
        ("spdc.center_nm", model.spdc_spectrum.center_nm),
        ("spdc.fwhm_nm", model.spdc_spectrum.fwhm_nm),
        ("spdc.rate_hz", model.spdc_rate_hz),
        ("spdc.polarized", model.spdc_polarized),
        ("spdc.power_exponent", model.spdc_power_exponent),
        ("lum.center_nm", model.lum_spectrum.center_nm),
        ("lum.fwhm_nm", model.lum_spectrum.fwhm_nm),
        ("lum.skew", model.lum_spectrum.skew),
        ("lum.rate_hz", model.lum_rate_hz),
        ("decay.amplitudes", ",".join(repr(a) for a in model.lum_decay.amplitudes)),
        ("decay.lifetimes_ns", ",".join(repr(t) for t in model.lum_decay.lifetimes_ns)),
        ("decay.irf_fwhm_ns", model.lum_decay.irf_fwhm_ns),
        ("grid.min_nm", model.grid.min_nm),
        ("grid.max_nm", model.grid.max_nm),
        ("grid.step_nm", model.grid.step_nm),
    ]
    return "\n".join(f"{k} = {v!r}" if isinstance(v, str) else f"{k} = {v}"
                     for k, v in items)


def band_mass(profile: SpectralProfile, grid: WavelengthGrid,
              band: tuple[float, float], refine: int = 16) -> float:
    """Integral of the normalized density over `band`, clipped to the grid.

    Trapezoid quadrature on a sub-grid `refine` times finer than the
    wavelength grid.
    """
    lo, hi = float(band[0]), float(band[1])
    if hi < lo:
        raise ValueError(f"inverted wavelength band ({lo}, {hi})")
    lo = max(lo, grid.min_nm)
    hi = min(hi, grid.max_nm)
    if hi <= lo:
        return 0.0
    n = max(int(np.ceil((hi - lo) / (grid.step_nm / refine))), 8)
    lam = np.linspace(lo, hi, n + 1)
    z = _norm_constant(profile, grid)
    return float(np.trapezoid(profile.shape(lam) / z, lam))


def spectral_overlap_fraction(model: EmissionModel, band: tuple[float, float]) -> float:
    """Fraction of the luminescence spectrum inside an acceptance band."""
    return band_mass(model.lum_spectrum, model.grid, band)
