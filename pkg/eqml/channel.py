"""
AWGN channel - modulation, noise, LLR demapping and Eb/N0 bookkeeping.

Noise comes from a counter-based stream per frame, keyed by (seed, frame
index), so a frame looks the same whichever worker draws it and whichever
SNR point or decoder asks for it.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from eqml.bp import DEFAULT_ALPHA, LlrFrame
from eqml.code_model import PunctureMask
from eqml.config import Modulation

BITS_PER_SYMBOL = {"bpsk": 1, "qpsk": 2}


def bits_per_symbol(modulation: Modulation) -> int:
    try:
        return BITS_PER_SYMBOL[modulation]
    except KeyError:
        raise ValueError(f"unknown modulation: {modulation}") from None


def sigma_from_ebn0(ebn0_db: float, rate: float, modulation: Modulation = "bpsk") -> float:
    """Per-dimension noise std: sigma^2 = 1 / (2 R k 10^(ebn0/10))"""
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"code rate must be in (0, 1], got {rate}")
    k = bits_per_symbol(modulation)
    return math.sqrt(1.0 / (2.0 * rate * k * 10.0 ** (ebn0_db / 10.0)))


def ebn0_from_sigma(sigma: float, rate: float, modulation: Modulation = "bpsk") -> float:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    k = bits_per_symbol(modulation)
    return 10.0 * math.log10(1.0 / (2.0 * rate * k * sigma ** 2))


@dataclass(frozen=True)
class ChannelConfig:
    modulation: Modulation
    ebn0_db: float
    code_rate: float
    seed: int

    @property
    def sigma(self) -> float:
        return sigma_from_ebn0(self.ebn0_db, self.code_rate, self.modulation)


def frame_rng(seed: int, frame_idx: int) -> np.random.Generator:
    """Philox stream for one frame; independent of SNR point and decoder"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(frame_idx,))))


def modulate(bits: np.ndarray, modulation: Modulation = "bpsk") -> np.ndarray:
    """
    Real symbol stream. BPSK maps 0 -> +1 and 1 -> -1. Gray QPSK uses the
    same rule on each dimension with amplitude 1/sqrt(2), so every complex
    symbol has unit energy; the I/Q pairs come out interleaved.
    """
    b = np.asarray(bits).astype(np.int64) & 1
    s = 1.0 - 2.0 * b
    if modulation == "bpsk":
        return s
    if modulation == "qpsk":
        if b.size % 2:
            raise ValueError(f"QPSK needs an even number of bits, got {b.size}")
        return s / math.sqrt(2.0)
    raise ValueError(f"unknown modulation: {modulation}")


def add_noise(symbols: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s = np.asarray(symbols, dtype=np.float64)
    return s + sigma * rng.standard_normal(s.size)


def demap_llr(y: np.ndarray, sigma: float, modulation: Modulation = "bpsk", alpha: float = DEFAULT_ALPHA) -> LlrFrame:
    y = np.asarray(y, dtype=np.float64)
    if modulation == "bpsk":
        llr = 2.0 * y / sigma ** 2
    elif modulation == "qpsk":
        llr = math.sqrt(2.0) * y / sigma ** 2
    else:
        raise ValueError(f"unknown modulation: {modulation}")
    return LlrFrame(np.clip(llr, -alpha, alpha))


def apply_puncturing(frame: LlrFrame, mask: PunctureMask) -> LlrFrame:
    if not mask.punctured:
        return frame
    values = frame.values.copy()
    values[mask.indices()] = 0.0
    return LlrFrame(values)


def transmit(
    codeword: np.ndarray,
    channel: ChannelConfig,
    frame_idx: int,
    mask: Optional[PunctureMask] = None,
    alpha: float = DEFAULT_ALPHA,
) -> LlrFrame:
    """
    One pass through the channel: only unpunctured positions are sent,
    punctured ones come back as LLR 0.
    """
    mask = mask or PunctureMask()
    keep = mask.transmitted(codeword.size)
    sent = codeword[keep]

    # pad odd QPSK payloads with a dummy 0 bit
    pad = channel.modulation == "qpsk" and sent.size % 2 == 1
    if pad:
        sent = np.append(sent, 0)

    rng = frame_rng(channel.seed, frame_idx)
    y = add_noise(modulate(sent, channel.modulation), channel.sigma, rng)
    received = demap_llr(y, channel.sigma, channel.modulation, alpha).values
    if pad:
        received = received[:-1]

    values = np.zeros(codeword.size)
    values[keep] = received
    return LlrFrame(values)
