"""Deterministic synthetic cohort generator.

Builds a patient-structured cohort of spectral cubes, embeddings and
demographics where each modality carries a plantable amount of class
signal, so the full pipeline can be exercised and benchmarked without
clinical data.

Class signal per modality:
  spectral  - a haemoglobin-style absorption dip at 560 nm whose depth
              grows with class index;
  texture   - a class-specific oriented grating added to every band;
  deep      - a class mean direction in embedding space;
  demo      - class-dependent risk-factor probabilities and age shift.

Every patient also draws an additive random effect shared by all of
their images (cube brightness shift, embedding offset), which makes
patient-wise posterior pooling measurably useful.

All randomness flows from one seed: cohort-level draws use stream
(seed, 0) and patient i uses stream (seed, 1 + i), so output trees are
byte-identical for equal configs and may be generated in any order.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from lesionfuse.core import (
    EMBED_DIM,
    LABELS,
    N_BANDS,
    WAVELENGTHS,
    Dataset,
    SampleRecord,
    SpectralCube,
    write_cube,
    write_embedding,
    write_manifest,
)
from lesionfuse.errors import ConfigError, DataError
from lesionfuse.texture import reflect_pad

# RGB -> pseudo-spectrum expansion bases: Gaussian response curves
# peaking at classic red/green/blue wavelengths.
RGB_BASIS_PEAKS_NM = (610.0, 550.0, 460.0)
RGB_BASIS_SIGMA_NM = 55.0

_RGB_BASIS = np.exp(
    -((WAVELENGTHS[None, :] - np.array(RGB_BASIS_PEAKS_NM)[:, None]) ** 2)
    / (2.0 * RGB_BASIS_SIGMA_NM ** 2)
)

# Haemoglobin-style absorption bump subtracted from the base curve.
HB_DIP_CENTER_NM = 560.0
HB_DIP_SIGMA_NM = 20.0

# Smooth baseline tissue reflectance, gently rising with wavelength.
_BASE_REFLECTANCE = 0.40 + 0.005 * np.arange(N_BANDS)

_DIP_PROFILE = np.exp(
    -((WAVELENGTHS - HB_DIP_CENTER_NM) ** 2) / (2.0 * HB_DIP_SIGMA_NM ** 2)
)

# Scale constants mapping the [0,1] config knobs onto physical units.
# Tuned so that default cohorts are learnable but not saturated: class
# signal, shared patient bias and per-image noise stay comparable.
_DIP_BASE_DEPTH = 0.05
_DIP_CLASS_STEP = 0.02
_DIP_IMAGE_JITTER = 0.6
_CUBE_BRIGHT_SCALE = 0.05
_CUBE_FIELD_SCALE = 0.10
_CUBE_BAND_JITTER = 0.05
_TEXTURE_AMP = 0.012
# class index -> (grating angle degrees, period in pixels)
_TEXTURE_PATTERNS = ((0.0, 16.0), (45.0, 8.0), (90.0, 4.0), (135.0, 8.0))

_EMB_CLASS_SCALE = 1.4
_EMB_PATIENT_SCALE = 0.7
_EMB_NOISE_SCALE = 3.0

_AGE_MEAN = 45.0
_AGE_SD = 9.0
_AGE_CLASS_STEP = 6.0
# per-class baseline probabilities grow linearly with class index
_RISK_BASE = {"smoking": 0.25, "alcohol": 0.20, "betel": 0.10}
_RISK_CLASS_STEP = {"smoking": 0.18, "alcohol": 0.15, "betel": 0.22}


@dataclass(frozen=True)
class SynthConfig:
    """Cohort shape plus per-modality signal strengths in [0, 1]."""

    patients: int = 80
    images_min: int = 3
    images_max: int = 5
    priors: tuple = (0.25, 0.25, 0.25, 0.25)
    height: int = 32
    width: int = 32
    deep_signal: float = 0.8
    spectral_signal: float = 0.8
    texture_signal: float = 0.8
    demographic_signal: float = 0.8
    patient_effect: float = 0.8
    noise: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.patients < 1:
            raise ConfigError("patients must be >= 1")
        if not 1 <= self.images_min <= self.images_max:
            raise ConfigError(
                "images_min must be >= 1 and <= images_max"
            )
        pri = np.asarray(self.priors, dtype=np.float64)
        if pri.shape != (len(LABELS),):
            raise ConfigError(f"priors must have {len(LABELS)} entries")
        if (pri < 0).any() or abs(pri.sum() - 1.0) > 1e-6:
            raise ConfigError("priors must be non-negative and sum to 1")
        if self.height < 3 or self.width < 3:
            raise ConfigError("cube size must be at least 3x3")
        for name in ("deep_signal", "spectral_signal", "texture_signal",
                     "demographic_signal"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.patient_effect < 0 or self.noise < 0:
            raise ConfigError("patient_effect and noise must be >= 0")


def expand_rgb_to_pseudo_hsi(rgb) -> np.ndarray:
    """Expand an RGB triplet into a 31-band pseudo-spectrum.

    Linear map: R*basis_r + G*basis_g + B*basis_b with fixed Gaussian
    bases peaking at 610/550/460 nm.
    """
    v = np.asarray(rgb, dtype=np.float64)
    if v.shape != (3,):
        raise DataError("rgb input must be a triplet")
    if (v < 0).any() or (v > 1).any():
        raise DataError("rgb values must lie in [0, 1]")
    return v @ _RGB_BASIS


def _smooth_field(rng, height, width) -> np.ndarray:
    """Unit white noise blurred with a 3x3 box; std is roughly 1/3."""
    white = rng.normal(0.0, 1.0, (height, width))
    padded = reflect_pad(white, 1)
    out = np.zeros_like(white)
    for i in range(3):
        for j in range(3):
            out += padded[i:i + height, j:j + width]
    return out / 9.0


def _grating(height, width, angle_deg, period) -> np.ndarray:
    theta = math.radians(angle_deg)
    rows = np.arange(height)[:, None]
    cols = np.arange(width)[None, :]
    phase = (cols * math.cos(theta) + rows * math.sin(theta)) / period
    return np.sin(2.0 * math.pi * phase)


def _synth_cube(cfg: SynthConfig, rng, label, brightness) -> SpectralCube:
    depth = cfg.spectral_signal * (
        _DIP_BASE_DEPTH + _DIP_CLASS_STEP * label
    )
    depth *= 1.0 + _DIP_IMAGE_JITTER * cfg.noise * rng.normal()
    spectrum = _BASE_REFLECTANCE - max(depth, 0.0) * _DIP_PROFILE

    field = _smooth_field(rng, cfg.height, cfg.width)
    field *= 3.0 * _CUBE_FIELD_SCALE * cfg.noise
    band_jitter = rng.normal(0.0, _CUBE_BAND_JITTER * cfg.noise, N_BANDS)

    angle, period = _TEXTURE_PATTERNS[label]
    pattern = _grating(cfg.height, cfg.width, angle, period)
    pattern *= _TEXTURE_AMP * cfg.texture_signal

    data = (
        spectrum[:, None, None]
        + band_jitter[:, None, None]
        + brightness
        + field[None, :, :]
        + pattern[None, :, :]
    )
    return SpectralCube(np.clip(data, 0.0, 1.0).astype(np.float32))


def _synth_embedding(rng, class_means, label, patient_vec, noise) -> np.ndarray:
    emb = class_means[label] + patient_vec
    emb = emb + rng.normal(0.0, _EMB_NOISE_SCALE * noise, EMBED_DIM)
    return emb.astype(np.float32)


def _synth_demographics(cfg: SynthConfig, rng, label):
    ds = cfg.demographic_signal
    age = rng.normal(_AGE_MEAN + _AGE_CLASS_STEP * ds * label, _AGE_SD)
    age = round(float(np.clip(age, 18.0, 95.0)), 1)
    sex = int(rng.random() < 0.5)
    flags = {}
    for name in ("smoking", "alcohol", "betel"):
        p = _RISK_BASE[name] + _RISK_CLASS_STEP[name] * ds * label
        flags[name] = int(rng.random() < min(p, 0.95))
    return age, sex, flags


def generate_cohort(cfg: SynthConfig, out_dir) -> Path:
    """Write cubes, embeddings and a manifest; returns the manifest path.

    Byte-deterministic for equal configs.  Draw order is fixed: the
    cohort stream yields embedding class means; each patient stream
    yields class, image count, patient effects, demographics, then the
    per-image cube and embedding noise in sample order.
    """
    out = Path(out_dir)
    cube_dir = out / "cubes"
    emb_dir = out / "embeddings"
    cube_dir.mkdir(parents=True, exist_ok=True)
    emb_dir.mkdir(parents=True, exist_ok=True)

    cohort_rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0)))
    means = cohort_rng.normal(0.0, 1.0, (len(LABELS), EMBED_DIM))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    means *= _EMB_CLASS_SCALE * cfg.deep_signal

    priors = np.asarray(cfg.priors, dtype=np.float64)
    samples = []
    for i in range(cfg.patients):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, 1 + i)))
        pid = f"p{i:04d}"
        label = int(rng.choice(len(LABELS), p=priors))
        n_images = int(rng.integers(cfg.images_min, cfg.images_max + 1))
        brightness = rng.normal(0.0, _CUBE_BRIGHT_SCALE * cfg.patient_effect)
        patient_vec = rng.normal(
            0.0, _EMB_PATIENT_SCALE * cfg.patient_effect, EMBED_DIM
        )
        age, sex, flags = _synth_demographics(cfg, rng, label)
        for j in range(n_images):
            sid = f"{pid}-i{j:02d}"
            cube = _synth_cube(cfg, rng, label, brightness)
            emb = _synth_embedding(rng, means, label, patient_vec, cfg.noise)
            cube_path = f"cubes/{sid}.hsc1"
            emb_path = f"embeddings/{sid}.emb1"
            write_cube(out / cube_path, cube)
            write_embedding(out / emb_path, emb)
            samples.append(SampleRecord(
                sample_id=sid,
                patient_id=pid,
                label=label,
                age=age,
                sex=sex,
                smoking=flags["smoking"],
                alcohol=flags["alcohol"],
                betel=flags["betel"],
                cube_path=cube_path,
                embedding_path=emb_path,
            ))

    manifest = out / "manifest.csv"
    write_manifest(manifest, Dataset.from_samples(samples))
    return manifest
