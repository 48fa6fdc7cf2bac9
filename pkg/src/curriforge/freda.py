"""Frequency-domain augmentation by low-band exchange.

A fake image keeps its high-frequency content (where manipulation traces
live) while its low-frequency band, the coarse facial structure, is
replaced by the paired real image's band.  Spectra are stored DC-centered
so the exchanged band is a square window around the spatial center of the
frequency plane; the window half-width ``r`` is the augmentation knob.

The window is half-open, ``[c - r, c + r)`` on each axis with
``c = dim // 2``, which makes mask sizes bit-exact (``min(2r, dim)`` per
axis) but is not symmetric under frequency reflection.  A spliced spectrum
is therefore generally not conjugate symmetric; the inverse transform
discards the imaginary residue and clamps pixels to [0, 1].
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InputError, PairingError


def _validate_raster(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise DimensionError(f"expected (H, W, 1|3) image, got shape {img.shape}")
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise DimensionError(f"image sides must be >= 2, got {img.shape[:2]}")
    if not np.all(np.isfinite(img)):
        raise InputError("image contains non-finite pixels")
    return img


def _validate_spectrum(spec: np.ndarray) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.complex128)
    if spec.ndim != 3 or spec.shape[2] not in (1, 3):
        raise DimensionError(f"expected (H, W, 1|3) spectrum, got shape {spec.shape}")
    return spec


def default_radius(height: int, width: int) -> int:
    """Default window half-width: 1/16 of the shorter side (16 at 256 px)."""
    return min(height, width) // 16


def forward_spectrum(img: np.ndarray) -> np.ndarray:
    """Per-channel 2-D DFT with the DC coefficient moved to the center."""
    img = _validate_raster(img)
    return np.fft.fftshift(np.fft.fft2(img, axes=(0, 1)), axes=(0, 1))


def inverse_spectrum(spec: np.ndarray) -> np.ndarray:
    """Undo the centering swap, invert per channel, drop the imaginary
    residue, and clamp pixels to [0, 1]."""
    spec = _validate_spectrum(spec)
    out = np.fft.ifft2(np.fft.ifftshift(spec, axes=(0, 1)), axes=(0, 1))
    return np.clip(out.real, 0.0, 1.0)


def build_mask(height: int, width: int, r: int) -> np.ndarray:
    """Binary low-band window: 1 inside the centered half-open square
    [c_h - r, c_h + r) x [c_w - r, c_w + r), 0 elsewhere.

    r=0 selects nothing; r >= ceil(max(H, W) / 2) covers the plane.
    """
    if height < 2 or width < 2:
        raise DimensionError(f"mask sides must be >= 2, got ({height}, {width})")
    if r < 0:
        raise InputError(f"radius must be non-negative, got {r}")
    mask = np.zeros((height, width), dtype=np.float64)
    ch, cw = height // 2, width // 2
    mask[max(0, ch - r) : min(height, ch + r), max(0, cw - r) : min(width, cw + r)] = 1.0
    return mask


def splice(real_spec: np.ndarray, fake_spec: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Coefficient-wise exchange: real's band where mask is 1, fake's where 0.

    The mask is broadcast across channels.
    """
    real_spec = _validate_spectrum(real_spec)
    fake_spec = _validate_spectrum(fake_spec)
    mask = np.asarray(mask, dtype=np.float64)
    if real_spec.shape != fake_spec.shape:
        raise DimensionError(
            f"spectra shapes differ: {real_spec.shape} vs {fake_spec.shape}"
        )
    if mask.shape != real_spec.shape[:2]:
        raise DimensionError(
            f"mask shape {mask.shape} does not match spectra {real_spec.shape[:2]}"
        )
    m = mask[:, :, None]
    return real_spec * m + fake_spec * (1.0 - m)


def freda(fake: np.ndarray, real: np.ndarray, r: int) -> np.ndarray:
    """Augment a fake by adopting its paired real's low-frequency band.

    The output is still a fake: high-frequency manipulation traces are
    untouched.  r=0 reproduces the fake, a plane-covering r reproduces the
    real, and an identical pair reproduces itself.
    """
    fake = _validate_raster(fake)
    real = _validate_raster(real)
    if fake.shape != real.shape:
        raise PairingError(f"pair shapes differ: fake {fake.shape} vs real {real.shape}")
    mask = build_mask(fake.shape[0], fake.shape[1], r)
    spec = splice(forward_spectrum(real), forward_spectrum(fake), mask)
    return inverse_spectrum(spec)


AUGMENT_TAG = "#freda"


def augmented_id(sample_id: str) -> str:
    """Log id of an augmented sample: source id plus a traceable tag."""
    return sample_id + AUGMENT_TAG


def is_augmented_id(sample_id: str) -> bool:
    return sample_id.endswith(AUGMENT_TAG)


def source_id(sample_id: str) -> str:
    """Source sample id of an augmented id (identity for plain ids)."""
    if is_augmented_id(sample_id):
        return sample_id[: -len(AUGMENT_TAG)]
    return sample_id
