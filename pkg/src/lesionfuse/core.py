"""Data model: spectral cubes, embeddings, sample manifests.

Binary containers are deliberately tiny fixed layouts (magic + header +
raw little-endian payload) so writes are byte-deterministic and
load(write(x)) round-trips bit-exactly.
"""

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from lesionfuse.errors import (
    BadMagicError,
    BandCountError,
    CubeFormatError,
    EmbeddingFormatError,
    ManifestError,
    TruncatedCubeError,
)

N_BANDS = 31
EMBED_DIM = 768

LABELS = ("healthy", "benign", "opmd", "oca")
LABEL_TO_INDEX = {name: i for i, name in enumerate(LABELS)}

# Band k samples wavelength 400 + 10k nm, k in [0, 30].
WAVELENGTHS = np.arange(N_BANDS, dtype=np.float64) * 10.0 + 400.0

MANIFEST_COLUMNS = (
    "sample_id",
    "patient_id",
    "label",
    "age",
    "sex",
    "smoking",
    "alcohol",
    "betel",
    "cube_path",
    "embedding_path",
)

_CUBE_MAGIC = b"HSC1"
_EMBED_MAGIC = b"EMB1"


def _luminance_weights():
    # Triangle peaking at 550 nm, hitting zero at 450 and 650 nm, so only
    # bands strictly inside (450, 650) contribute.  Built from integer
    # numerators (sum 100) so each weight is a correctly-rounded decimal
    # and the vector sums to 1.
    k = np.arange(N_BANDS)
    raw = np.maximum(0, 10 - np.abs(k - 15))
    return raw / 100.0


LUMINANCE_WEIGHTS = _luminance_weights()
LUMINANCE_WEIGHTS.setflags(write=False)


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """31-band reflectance raster, band-major (band, row, col), float32."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise CubeFormatError("cube data must be (bands, height, width)")
        if self.data.shape[0] != N_BANDS:
            raise BandCountError(
                f"expected {N_BANDS} bands, got {self.data.shape[0]}"
            )
        if self.data.shape[1] < 3 or self.data.shape[2] < 3:
            raise CubeFormatError("cube must be at least 3x3 pixels")
        if not np.isfinite(self.data).all():
            raise CubeFormatError("cube contains non-finite values")
        if self.data.dtype != np.float32:
            raise CubeFormatError("cube data must be float32")
        if self.data.min() < 0.0 or self.data.max() > 1.0:
            warnings.warn(
                "reflectance values outside [0, 1]", stacklevel=2
            )

    @property
    def bands(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]


@dataclass(frozen=True)
class SampleRecord:
    """One image with its patient link, label and demographics.

    Missing demographics keep their ingestion sentinels (age: NaN,
    binary fields: -1); imputation happens at fusion time.
    """

    sample_id: str
    patient_id: str
    label: int
    age: float
    sex: int
    smoking: int
    alcohol: int
    betel: int
    cube_path: str
    embedding_path: str


@dataclass(frozen=True)
class Dataset:
    samples: tuple
    patient_index: dict = field(repr=False)

    @classmethod
    def from_samples(cls, samples):
        samples = tuple(samples)
        seen = set()
        index = {}
        for i, s in enumerate(samples):
            if s.sample_id in seen:
                raise ManifestError(f"duplicate sample_id {s.sample_id}")
            seen.add(s.sample_id)
            if not s.patient_id:
                raise ManifestError(f"sample {s.sample_id} has no patient_id")
            index.setdefault(s.patient_id, []).append(i)
        return cls(samples=samples, patient_index=index)

    def __len__(self):
        return len(self.samples)

    def labels(self):
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def patient_ids(self):
        return [s.patient_id for s in self.samples]

    def subset(self, indices):
        return Dataset.from_samples(self.samples[i] for i in indices)


def _parse_age(text, row_no):
    if text == "":
        return math.nan
    try:
        age = float(text)
    except ValueError:
        raise ManifestError(f"row {row_no}: unreadable age {text!r}") from None
    if not 0.0 < age < 120.0:
        raise ManifestError(f"row {row_no}: age {age} outside (0, 120)")
    return age


def _parse_binary(text, name, row_no):
    if text == "":
        return -1
    if text == "0":
        return 0
    if text == "1":
        return 1
    raise ManifestError(f"row {row_no}: unreadable {name} {text!r}")


def validate_manifest(rows) -> Dataset:
    """Build a Dataset from manifest rows (sequence of column dicts).

    Row numbers in error messages are 1-based over data rows (the header
    is row 0).
    """
    samples = []
    for i, row in enumerate(rows, start=1):
        missing = [c for c in MANIFEST_COLUMNS if row.get(c) is None]
        if missing:
            raise ManifestError(f"row {i}: missing columns {missing}")
        label_token = row["label"]
        if label_token not in LABEL_TO_INDEX:
            raise ManifestError(f"row {i}: unknown label {label_token!r}")
        if not row["sample_id"]:
            raise ManifestError(f"row {i}: empty sample_id")
        samples.append(
            SampleRecord(
                sample_id=row["sample_id"],
                patient_id=row["patient_id"],
                label=LABEL_TO_INDEX[label_token],
                age=_parse_age(row["age"], i),
                sex=_parse_binary(row["sex"], "sex", i),
                smoking=_parse_binary(row["smoking"], "smoking", i),
                alcohol=_parse_binary(row["alcohol"], "alcohol", i),
                betel=_parse_binary(row["betel"], "betel", i),
                cube_path=row["cube_path"],
                embedding_path=row["embedding_path"],
            )
        )
    return Dataset.from_samples(samples)


def read_manifest(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ManifestError("manifest is empty")
        if tuple(reader.fieldnames) != MANIFEST_COLUMNS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_COLUMNS)}"
            )
        return validate_manifest(reader)


def _format_age(age):
    if math.isnan(age):
        return ""
    if float(age).is_integer():
        return str(int(age))
    return repr(float(age))


def _format_binary(value):
    return "" if value == -1 else str(int(value))


def write_manifest(path, dataset):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for s in dataset.samples:
            writer.writerow(
                [
                    s.sample_id,
                    s.patient_id,
                    LABELS[s.label],
                    _format_age(s.age),
                    _format_binary(s.sex),
                    _format_binary(s.smoking),
                    _format_binary(s.alcohol),
                    _format_binary(s.betel),
                    s.cube_path,
                    s.embedding_path,
                ]
            )


def load_cube(path) -> SpectralCube:
    """Read an HSC1 raster: magic, u32 h/w/bands, f32 LE band-major."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _CUBE_MAGIC:
        raise BadMagicError(f"{path}: bad magic, not an HSC1 cube")
    if len(blob) < 16:
        raise TruncatedCubeError(f"{path}: truncated cube header")
    height, width, bands = struct.unpack_from("<III", blob, 4)
    if bands != N_BANDS:
        raise BandCountError(f"{path}: expected {N_BANDS} bands, got {bands}")
    expected = 16 + height * width * bands * 4
    if len(blob) != expected:
        raise TruncatedCubeError(
            f"{path}: truncated cube, expected {expected} bytes, "
            f"got {len(blob)}"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=16).reshape(
        bands, height, width
    )
    return SpectralCube(data=np.ascontiguousarray(data))


def write_cube(path, cube):
    header = _CUBE_MAGIC + struct.pack(
        "<III", cube.height, cube.width, cube.bands
    )
    payload = np.ascontiguousarray(cube.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_embedding(path, expect_dim=EMBED_DIM) -> np.ndarray:
    """Read an EMB1 vector: magic, u32 dim, dim f32 LE values."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _EMBED_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic, not an EMB1 vector")
    if len(blob) < 8:
        raise EmbeddingFormatError(f"{path}: truncated embedding header")
    (dim,) = struct.unpack_from("<I", blob, 4)
    if expect_dim is not None and dim != expect_dim:
        raise EmbeddingFormatError(
            f"{path}: expected dim {expect_dim}, got {dim}"
        )
    expected = 8 + dim * 4
    if len(blob) != expected:
        raise EmbeddingFormatError(
            f"{path}: truncated embedding, expected {expected} bytes, "
            f"got {len(blob)}"
        )
    vec = np.frombuffer(blob, dtype="<f4", offset=8)
    if not np.isfinite(vec).all():
        raise EmbeddingFormatError(f"{path}: embedding has non-finite values")
    return vec.copy()


def write_embedding(path, vec):
    v = np.ascontiguousarray(vec, dtype="<f4")
    if v.ndim != 1:
        raise EmbeddingFormatError("embedding must be a 1-d vector")
    with open(path, "wb") as fh:
        fh.write(_EMBED_MAGIC + struct.pack("<I", v.shape[0]))
        fh.write(v.tobytes())


def roi_mean_spectrum(cube) -> np.ndarray:
    """Per-band arithmetic mean over all pixels, float64, length 31."""
    return cube.data.mean(axis=(1, 2), dtype=np.float64)


def reflectance_at(spectrum, wavelength):
    """Linear interpolation of a 31-value spectrum at a wavelength in nm.

    Exact on grid wavelengths (400, 410, ..., 700).
    """
    if not 400.0 <= wavelength <= 700.0:
        raise ValueError(f"wavelength {wavelength} outside [400, 700] nm")
    pos = (wavelength - 400.0) / 10.0
    k = int(math.floor(pos))
    if k >= N_BANDS - 1:
        return float(spectrum[N_BANDS - 1])
    frac = pos - k
    if frac == 0.0:
        return float(spectrum[k])
    return float(spectrum[k] + frac * (spectrum[k + 1] - spectrum[k]))


def luminance_plane(cube) -> np.ndarray:
    """Weighted band sum rescaled to [0, 1]; constant planes map to 0.5.

    The fixed weights (LUMINANCE_WEIGHTS) form a triangle peaking at
    550 nm and vanishing at 450/650 nm, so the plane tracks the green
    part of the spectrum the way a photopic luminance estimate would.
    """
    plane = np.zeros((cube.height, cube.width), dtype=np.float64)
    data = cube.data
    for k in range(N_BANDS):
        w = LUMINANCE_WEIGHTS[k]
        if w != 0.0:
            plane += w * data[k].astype(np.float64)
    lo = plane.min()
    hi = plane.max()
    if hi == lo:
        return np.full_like(plane, 0.5)
    return (plane - lo) / (hi - lo)
