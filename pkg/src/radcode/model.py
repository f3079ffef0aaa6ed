"""Slow-time signal model: scenario parameters, interference covariance,
steering vectors, reference codes, and waveform quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "RadarScenario",
    "CodeVector",
    "ModelMatrices",
    "default_scenario",
    "exp_covariance",
    "steering_vector",
    "model_matrices",
    "p3_code",
    "generalized_barker_code",
    "load_reference_code",
    "sinr",
    "papr",
    "isl",
    "to_db",
]

# Covariance condition number above which the interference model is treated
# as numerically singular rather than silently inverted.
_MAX_COVARIANCE_COND = 1e12


def to_db(value: float) -> float:
    """Power ratio in dB (10*log10)."""
    return 10.0 * math.log10(value)


def as_array(code) -> np.ndarray:
    """Accept a CodeVector or a plain array-like; return a complex 1-D array."""
    entries = getattr(code, "entries", code)
    c = np.asarray(entries, dtype=complex)
    if c.ndim != 1:
        raise ValueError(f"code must be one-dimensional, got shape {c.shape}")
    return c


@dataclass(frozen=True)
class CodeVector:
    """Complex slow-time code, one weight per pulse.

    ``raw_energy`` preserves the energy of the source data when the vector
    was normalized on load; it is None for codes constructed at unit energy.
    """

    entries: np.ndarray
    raw_energy: float | None = None

    def __post_init__(self):
        c = np.asarray(self.entries, dtype=complex)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("code entries must form a non-empty 1-D vector")
        if not np.all(np.isfinite(c.view(float))):
            raise ValueError("code entries must be finite")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "entries", c)

    def __len__(self) -> int:
        return self.entries.size

    @property
    def energy(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))

    def unit(self) -> "CodeVector":
        """Return a unit-energy copy."""
        e = self.energy
        if e <= 0.0:
            raise ValueError("cannot normalize a zero code vector")
        return CodeVector(self.entries / math.sqrt(e), raw_energy=e)


@dataclass(frozen=True)
class RadarScenario:
    """Physical and system parameters of one coherent processing interval.

    ``interference`` is either a one-lag correlation coefficient in [0, 1)
    (exponential covariance model) or an explicit Hermitian positive-definite
    pulses x pulses matrix.
    """

    pulses: int
    pri: float
    bandwidth: float
    pulsewidth: float
    sample_step: float
    fast_samples: int
    amplitude_power: float
    normalized_doppler: float
    pfa: float
    interference: float | np.ndarray = 0.0

    def __post_init__(self):
        if self.pulses < 2:
            raise ValueError("at least two pulses are required")
        if self.fast_samples < 1:
            raise ValueError("fast_samples must be positive")
        for name in ("pri", "bandwidth", "pulsewidth", "sample_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not math.isclose(self.fast_samples * self.sample_step,
                            self.pulsewidth, rel_tol=1e-9):
            raise ValueError("fast_samples * sample_step must equal pulsewidth")
        if self.amplitude_power <= 0:
            raise ValueError("amplitude_power must be positive")
        if not -0.5 <= self.normalized_doppler < 0.5:
            raise ValueError("normalized_doppler must lie in [-0.5, 0.5)")
        if not 0.0 < self.pfa < 1.0:
            raise ValueError("pfa must lie in (0, 1)")
        if np.ndim(self.interference) == 0:
            rho = float(self.interference)
            if not 0.0 <= rho < 1.0:
                raise ValueError("correlation coefficient must lie in [0, 1)")
            object.__setattr__(self, "interference", rho)
        else:
            sig = np.asarray(self.interference, dtype=complex)
            if sig.shape != (self.pulses, self.pulses):
                raise ValueError("explicit covariance must be pulses x pulses")
            if np.abs(sig - sig.conj().T).max() > 1e-12:
                raise ValueError("explicit covariance must be Hermitian")
            if np.linalg.eigvalsh(sig).min() <= 0:
                raise ValueError("explicit covariance must be positive definite")
            sig = sig.copy()
            sig.flags.writeable = False
            object.__setattr__(self, "interference", sig)

    def covariance(self) -> np.ndarray:
        """Slow-time interference covariance matrix."""
        if np.ndim(self.interference) == 0:
            return exp_covariance(float(self.interference), self.pulses)
        return np.asarray(self.interference)


def default_scenario(**overrides) -> RadarScenario:
    """Baseline tracking scenario used throughout the test battery and CLI.

    32 pulses at 250 us PRI, a 5 MHz / 10 us chirp sampled at 1/(2B)
    (100 fast-time samples), -20 dB echo power, normalized Doppler 0.15,
    Pfa = 1e-6, exponential interference correlation rho = 0.8.
    """
    params = dict(
        pulses=32,
        pri=250e-6,
        bandwidth=5e6,
        pulsewidth=1e-5,
        sample_step=1e-7,
        fast_samples=100,
        amplitude_power=1e-2,
        normalized_doppler=0.15,
        pfa=1e-6,
        interference=0.8,
    )
    params.update(overrides)
    return RadarScenario(**params)


def exp_covariance(rho: float, m: int) -> np.ndarray:
    """Exponentially shaped covariance with entry (i, j) = rho**|i - j|."""
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"correlation must lie in [0, 1), got {rho}")
    idx = np.arange(m)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def steering_vector(nu: float, m: int) -> np.ndarray:
    """Temporal steering vector; element k is exp(j*2*pi*nu*k)."""
    if not np.isfinite(nu):
        raise ValueError("normalized Doppler must be finite")
    return np.exp(2j * np.pi * nu * np.arange(m))


def _invert_covariance(sigma: np.ndarray) -> np.ndarray:
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals.min() <= 0 or eigvals.max() / eigvals.min() > _MAX_COVARIANCE_COND:
        raise ValueError(
            "interference covariance is numerically singular "
            f"(condition number above {_MAX_COVARIANCE_COND:.0e})")
    factor = cho_factor(sigma)
    inv = cho_solve(factor, np.eye(sigma.shape[0], dtype=complex))
    # symmetrize away factorization roundoff
    return 0.5 * (inv + inv.conj().T)


@dataclass(frozen=True)
class ModelMatrices:
    """Quadratic-form kernels of the detection/estimation metrics at one
    evaluation Doppler.

    m0 drives the output SINR, m1/m2 the Doppler curvature terms, b holds the
    per-pulse Doppler derivative phases j*2*pi*k*pri.
    """

    m0: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    b: np.ndarray
    sigma_t_inv: np.ndarray
    doppler: float

    def __post_init__(self):
        for name in ("m0", "m1", "m2", "b", "sigma_t_inv"):
            arr = np.asarray(getattr(self, name))
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def model_matrices(scenario: RadarScenario, nu: float | None = None,
                   sigma_t_inv: np.ndarray | None = None) -> ModelMatrices:
    """Build the M0/M1/M2 kernels for the given (default: scenario) Doppler.

    M0 = Sigma_t^-1 had (a a^H), M1 = Diag(b*) M0, M2 = (b b^H) had M0,
    where `had` is the elementwise product and a the steering vector.
    A precomputed covariance inverse may be passed when sweeping Doppler.
    """
    if nu is None:
        nu = scenario.normalized_doppler
    if sigma_t_inv is None:
        sigma_t_inv = _invert_covariance(scenario.covariance())
    m = scenario.pulses
    a = steering_vector(nu, m)
    m0 = sigma_t_inv * np.outer(a, a.conj())
    b = 2j * np.pi * scenario.pri * np.arange(m)
    m1 = np.diag(b.conj()) @ m0
    m2 = np.outer(b, b.conj()) * m0
    return ModelMatrices(m0=m0, m1=m1, m2=m2, b=b,
                         sigma_t_inv=sigma_t_inv, doppler=float(nu))


def p3_code(m: int) -> CodeVector:
    """Unit-energy P3 polyphase code: quadratic phases pi*k^2/m."""
    if m < 2:
        raise ValueError("code length must be at least 2")
    k = np.arange(m)
    return CodeVector(np.exp(1j * np.pi * k * k / m) / math.sqrt(m))


def generalized_barker_code(m: int = 32) -> CodeVector:
    """Unit-energy generalized Barker code loaded from the shipped assets.

    Generalized Barker codes are constant-modulus polyphase sequences whose
    aperiodic autocorrelation sidelobes all stay at or below 1/m of the
    mainlobe. Only length 32 ships with the package.
    """
    path = Path(__file__).parent / "assets" / f"generalized_barker_{m}.txt"
    if not path.exists():
        raise ValueError(f"no generalized Barker asset for length {m}")
    return load_reference_code(path)


def load_reference_code(path) -> CodeVector:
    """Load a reference code from a text file, one "re im" pair per line.

    Lines starting with '#' are ignored. The code is normalized to unit
    energy; the source energy is kept in ``raw_energy``.
    """
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 're im', got {line!r}")
        try:
            re_part, im_part = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
        entries.append(complex(re_part, im_part))
    if not entries:
        raise ValueError(f"{path}: no code entries found")
    code = CodeVector(np.array(entries))
    if code.energy <= 0.0:
        raise ValueError(f"{path}: code has zero energy")
    return code.unit()


def _real_quad(c: np.ndarray, x: np.ndarray, rel_tol: float = 1e-9) -> float:
    """Quadratic form c^H X c for Hermitian X, clamped to its real part after
    checking the imaginary residual is roundoff-sized."""
    val = complex(np.vdot(c, x @ c))
    scale = max(abs(val), 1e-300)
    if abs(val.imag) > rel_tol * scale:
        raise ValueError(f"quadratic form has non-negligible imaginary part {val.imag:g}")
    return val.real


def sinr(code, mats: ModelMatrices, scenario: RadarScenario) -> float:
    """Output SINR |alpha|^2 * N * c^H M0 c (linear scale)."""
    c = as_array(code)
    return scenario.amplitude_power * scenario.fast_samples * _real_quad(c, mats.m0, 1e-10)


def papr(code) -> float:
    """Peak-to-average power ratio m * max|c|^2 / ||c||^2."""
    c = as_array(code)
    energy = float(np.real(np.vdot(c, c)))
    if energy <= 0.0:
        raise ValueError("PAPR is undefined for a zero code")
    return float(c.size * np.abs(c).max() ** 2 / energy)


def isl(code) -> float:
    """Integrated sidelobe level of the aperiodic autocorrelation, in dB.

    Both positive and negative lags are summed, lag zero excluded. A code
    with no sidelobe energy (single nonzero entry) reports -inf.
    """
    c = as_array(code)
    if float(np.real(np.vdot(c, c))) <= 0.0:
        raise ValueError("ISL is undefined for a zero code")
    r = np.correlate(c, c, mode="full")
    peak = np.abs(r[c.size - 1]) ** 2
    sidelobes = float((np.abs(r) ** 2).sum() - peak)
    if sidelobes <= 0.0:
        return -math.inf
    return 10.0 * math.log10(sidelobes / peak)
