"""Digital baseband modulators producing fixed-length I/Q frames."""

from __future__ import annotations

import enum
import math

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from pydantic import BaseModel, ConfigDict, Field
from scipy import signal as sps_signal

from robust_amc.errors import FrameUnderrunError, NonFiniteError, ShapeError, SymbolError


class ModulationScheme(str, enum.Enum):
    BPSK = "BPSK"
    QPSK = "QPSK"
    PSK8 = "8PSK"
    QAM16 = "QAM16"
    QAM64 = "QAM64"
    PAM4 = "PAM4"
    CPFSK = "CPFSK"
    GFSK = "GFSK"

    @property
    def order(self) -> int:
        """Alphabet size (always a power of two)."""
        return _ORDER[self]

    @property
    def is_linear(self) -> bool:
        return self not in (ModulationScheme.CPFSK, ModulationScheme.GFSK)

    def constellation(self) -> np.ndarray:
        """Complex points indexed by symbol value, unit average energy."""
        if not self.is_linear:
            raise ValueError(f"{self.value} is a frequency modulation without constellation")
        return _constellation(self).copy()


_ORDER = {
    ModulationScheme.BPSK: 2,
    ModulationScheme.QPSK: 4,
    ModulationScheme.PSK8: 8,
    ModulationScheme.QAM16: 16,
    ModulationScheme.QAM64: 64,
    ModulationScheme.PAM4: 4,
    ModulationScheme.CPFSK: 2,
    ModulationScheme.GFSK: 2,
}


class ModulationParams(BaseModel):
    """Waveform parameters shared by every scheme."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sps: int = Field(4, ge=1, description="samples per symbol")
    rolloff: float | None = Field(
        None, gt=0.0, le=1.0, description="root-raised-cosine rolloff; None keeps rectangular pulses"
    )
    rrc_span: int = Field(8, ge=2, description="RRC length in symbols (even)")
    mod_index: float = Field(0.5, gt=0.0, description="CPFSK/GFSK modulation index h")
    gfsk_bt: float = Field(0.35, gt=0.0, description="GFSK Gaussian bandwidth-time product")
    gfsk_span: int = Field(4, ge=1, description="GFSK Gaussian filter length in symbols")


@dataclass(frozen=True, slots=True, eq=False)
class IQFrame:
    """One complex baseband frame as two real channels of equal length."""

    i: np.ndarray
    q: np.ndarray

    def __post_init__(self) -> None:
        i = np.asarray(self.i, dtype=np.float64)
        q = np.asarray(self.q, dtype=np.float64)
        if i.ndim != 1 or i.shape != q.shape:
            raise ShapeError(f"I/Q channels must be equal-length vectors, got {i.shape} and {q.shape}")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(q))):
            raise NonFiniteError("I/Q frame has non-finite samples")
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "IQFrame":
        return cls(np.real(z).copy(), np.imag(z).copy())

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "IQFrame":
        arr = np.asarray(arr)
        if arr.ndim != 2 or arr.shape[0] != 2:
            raise ShapeError(f"expected a (2, L) array, got {arr.shape}")
        return cls(arr[0].copy(), arr[1].copy())

    @property
    def length(self) -> int:
        return int(self.i.shape[0])

    def to_complex(self) -> np.ndarray:
        return self.i + 1j * self.q

    def to_array(self) -> np.ndarray:
        return np.stack([self.i, self.q])

    def power(self) -> float:
        """Mean instantaneous power ``mean(I² + Q²)``."""
        return float(np.mean(self.i * self.i + self.q * self.q))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IQFrame):
            return NotImplemented
        return np.array_equal(self.i, other.i) and np.array_equal(self.q, other.q)


# --------------------------------------------------------------------------- #
# Constellations
# --------------------------------------------------------------------------- #
def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


def _gray_levels(m: int) -> np.ndarray:
    """Amplitude levels ``-(m-1) .. m-1`` indexed by Gray-coded bit pattern."""
    levels = np.arange(-(m - 1), m, 2, dtype=np.float64)
    out = np.empty(m)
    out[_gray(np.arange(m))] = levels
    return out


@lru_cache(maxsize=None)
def _constellation(scheme: ModulationScheme) -> np.ndarray:
    m = scheme.order
    if scheme is ModulationScheme.BPSK:
        pts = np.array([1.0, -1.0], dtype=np.complex128)
    elif scheme is ModulationScheme.QPSK:
        # high bit drives I, low bit drives Q; 0 -> (+, +)
        s = np.arange(4)
        pts = (1 - 2 * (s >> 1)) + 1j * (1 - 2 * (s & 1))
    elif scheme is ModulationScheme.PSK8:
        pts = np.empty(8, dtype=np.complex128)
        k = np.arange(8)
        pts[_gray(k)] = np.exp(1j * np.pi * k / 4)
    elif scheme is ModulationScheme.PAM4:
        pts = _gray_levels(4).astype(np.complex128)
    else:
        side = int(math.isqrt(m))
        bits = side.bit_length() - 1
        levels = _gray_levels(side)
        s = np.arange(m)
        pts = levels[s >> bits] + 1j * levels[s & (side - 1)]
    pts = np.asarray(pts, dtype=np.complex128)
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


# --------------------------------------------------------------------------- #
# Pulses
# --------------------------------------------------------------------------- #
def rrc_taps(rolloff: float, span: int, sps: int) -> np.ndarray:
    """Root-raised-cosine impulse response scaled so that ``sum(h²) == sps``."""
    n = span * sps
    t = (np.arange(n + 1) - n / 2) / sps
    h = np.empty_like(t)
    b = rolloff
    for k, tk in enumerate(t):
        if np.isclose(tk, 0.0):
            h[k] = 1.0 - b + 4 * b / np.pi
        elif np.isclose(abs(tk), 1.0 / (4 * b)):
            h[k] = (b / np.sqrt(2)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
            )
        else:
            num = np.sin(np.pi * tk * (1 - b)) + 4 * b * tk * np.cos(np.pi * tk * (1 + b))
            den = np.pi * tk * (1 - (4 * b * tk) ** 2)
            h[k] = num / den
    return h * np.sqrt(sps / np.sum(h * h))


def gaussian_frequency_pulse(bt: float, span: int, sps: int) -> np.ndarray:
    """NRZ symbol pulse smoothed by a Gaussian filter, unit area per symbol."""
    t = (np.arange(span * sps + 1) - span * sps / 2) / sps
    g = np.exp(-2.0 * (np.pi * bt * t) ** 2 / np.log(2.0))
    g /= g.sum()
    return np.convolve(np.ones(sps), g)


def _pulse(scheme: ModulationScheme, params: ModulationParams) -> tuple[np.ndarray, int] | None:
    """Pulse taps and the symbols of lead-in they need, or ``None`` for none."""
    if scheme.is_linear and params.rolloff is not None:
        return rrc_taps(params.rolloff, params.rrc_span, params.sps), params.rrc_span
    if scheme is ModulationScheme.GFSK:
        return gaussian_frequency_pulse(params.gfsk_bt, params.gfsk_span, params.sps), params.gfsk_span
    return None


def symbols_required(
    scheme: ModulationScheme, length: int, params: ModulationParams | None = None
) -> int:
    """Number of input symbols :func:`modulate` consumes for a *length*-sample frame."""
    params = params or ModulationParams()
    base = -(-length // params.sps)
    pulse = _pulse(scheme, params)
    return base if pulse is None else base + pulse[1]


def _filtered(values: np.ndarray, taps: np.ndarray, span: int, sps: int, length: int) -> np.ndarray:
    full = sps_signal.upfirdn(taps, values, up=sps)
    start = (taps.size - 1) // 2 + (span // 2) * sps
    return full[start : start + length]


def modulate(
    symbols: np.ndarray | list[int],
    scheme: ModulationScheme,
    *,
    length: int = 128,
    params: ModulationParams | None = None,
) -> IQFrame:
    """Map an integer symbol stream to a *length*-sample baseband frame.

    Linear schemes use unit-energy constellations with rectangular pulses, or
    root-raised-cosine pulses when ``params.rolloff`` is set.  CPFSK and GFSK
    are phase-continuous with modulation index ``params.mod_index``.
    Extra symbols beyond what the frame needs are ignored.
    """
    params = params or ModulationParams()
    scheme = ModulationScheme(scheme)
    arr = np.asarray(symbols)
    if arr.ndim != 1:
        raise ShapeError(f"symbol stream must be 1-D, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise SymbolError("symbols must be integers")
    arr = arr.astype(np.int64)
    if arr.size and (arr.min() < 0 or arr.max() >= scheme.order):
        raise SymbolError(f"{scheme.value} symbols must lie in [0, {scheme.order})")

    needed = symbols_required(scheme, length, params)
    if arr.size < needed:
        raise FrameUnderrunError(
            f"{scheme.value} needs {needed} symbols for {length} samples, got {arr.size}"
        )
    arr = arr[:needed]
    sps = params.sps
    pulse = _pulse(scheme, params)

    if scheme.is_linear:
        points = _constellation(scheme)[arr]
        if pulse is None:
            z = np.repeat(points, sps)[:length]
        else:
            z = _filtered(points, pulse[0], pulse[1], sps, length)
        return IQFrame.from_complex(z)

    nrz = 2.0 * arr - 1.0
    if pulse is None:
        freq = np.repeat(nrz, sps)[:length]
    else:
        freq = _filtered(nrz, pulse[0], pulse[1], sps, length)
    phase = np.pi * params.mod_index * np.concatenate([[0.0], np.cumsum(freq[:-1])]) / sps
    return IQFrame.from_complex(np.exp(1j * phase))


def normalize_power(frame: IQFrame) -> IQFrame:
    """Rescale *frame* to unit mean power."""
    p = frame.power()
    if p <= 0:
        return frame
    g = 1.0 / math.sqrt(p)
    return IQFrame(frame.i * g, frame.q * g)
