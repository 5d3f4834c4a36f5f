"""Regularized canonical correlation analysis and scenario feature fusion.

CCA finds paired projections W_x, W_y maximizing tr(W_x^T S_xy W_y) under the
unit-variance constraints W_x^T S_xx W_x = W_y^T S_yy W_y = I. We solve it by
whitening both covariances with pseudo-inverse square roots and taking the
eigendecomposition of the whitened cross-covariance's Gram matrix, which is
the generalized-eigenproblem route expressed through the plain symmetric
solver. Covariances carry a relative ridge so 2048-dimensional features with
few training samples stay invertible.

fuse() builds the gallery/query vectors for the six evaluation scenarios:
vision-only, language-only, cross-modal, query-enriched, full concatenation,
and vision-plus-attributes.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .dataio import format_real
from .errors import (
    InvalidConfig,
    KOutOfRange,
    MalformedHeader,
    MissingModality,
    MissingModel,
    ShapeMismatch,
    TooFewSamples,
)

DEFAULT_RIDGE = 1e-4
DEFAULT_RANK_BUDGET = 128

SCENARIOS = ("VxV", "LxL", "VxL", "VxVL", "VLxVL", "VAxVA")
GALLERY = "gallery"
QUERY = "query"


@dataclass
class CcaModel:
    """Paired projections with their canonical correlations and centerings."""

    w_x: np.ndarray          # d_x x k
    w_y: np.ndarray          # d_y x k
    correlations: np.ndarray  # k, descending, in [0, 1]
    mean_x: np.ndarray
    mean_y: np.ndarray
    ridge: float

    @property
    def k(self):
        return self.w_x.shape[1]


def regularized_cov(x, ridge) -> np.ndarray:
    """Population covariance (divisor n) plus ridge * (trace/d) * I."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise TooFewSamples(f"need a samples-by-dim matrix with >= 2 rows, got {x.shape}")
    if ridge < 0:
        raise InvalidConfig(f"ridge must be >= 0, got {ridge}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]
    dim = cov.shape[0]
    return cov + ridge * (np.trace(cov) / dim) * np.eye(dim)


def _complete_orthonormal(columns, index, dim):
    # Fallback direction for a vanishing correlation: any unit vector
    # orthogonal to the columns already placed.
    for basis in range(dim):
        candidate = np.zeros(dim)
        candidate[basis] = 1.0
        if index > 0:
            candidate -= columns[:, :index] @ (columns[:, :index].T @ candidate)
        norm = np.linalg.norm(candidate)
        if norm > 1e-8:
            return candidate / norm
    raise KOutOfRange("cannot complete an orthonormal set; k exceeds the usable rank")


def fit_cca(x, y, k, ridge=DEFAULT_RIDGE, zscore=False) -> CcaModel:
    """Top-k canonical projection pairs of row-aligned sample matrices.

    Whitening uses pseudo-inverse square roots (eigenvalues below 1e-10 of
    the largest are treated as null directions), and the returned
    correlations are clipped into [0, 1]. Correlations are invariant to
    per-dimension z-scoring; the flag only changes the ridge geometry and is
    folded into the projections so project() still consumes raw features.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X and Y must be row-aligned, got {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise TooFewSamples("CCA needs at least 2 paired samples")
    if not 1 <= k <= min(x.shape[1], y.shape[1]):
        raise KOutOfRange(f"k={k} outside 1..{min(x.shape[1], y.shape[1])}")

    mean_x = x.mean(axis=0)
    mean_y = y.mean(axis=0)
    scale_x = scale_y = None
    if zscore:
        scale_x = x.std(axis=0)
        scale_x[scale_x < 1e-12] = 1.0
        scale_y = y.std(axis=0)
        scale_y[scale_y < 1e-12] = 1.0
        x = x / scale_x
        y = y / scale_y

    cov_xx = regularized_cov(x, ridge)
    cov_yy = regularized_cov(y, ridge)
    cov_xy = (x - x.mean(axis=0)).T @ (y - y.mean(axis=0)) / x.shape[0]

    white_x = linalg.inverse_sqrt_psd(cov_xx)
    white_y = linalg.inverse_sqrt_psd(cov_yy)
    coupling = white_x @ cov_xy @ white_y
    gram = coupling @ coupling.T
    values, u_vecs = linalg.eigh((gram + gram.T) / 2.0)

    rho = np.sqrt(np.clip(values[:k], 0.0, None))
    u_k = u_vecs[:, :k]
    v_k = np.zeros((y.shape[1], k))
    for i in range(k):
        candidate = coupling.T @ u_k[:, i]
        norm = np.linalg.norm(candidate)
        if norm > 1e-12:
            v_k[:, i] = candidate / norm
        else:
            v_k[:, i] = _complete_orthonormal(v_k, i, y.shape[1])

    w_x = white_x @ u_k
    w_y = white_y @ v_k
    if zscore:
        w_x = w_x / scale_x[:, None]
        w_y = w_y / scale_y[:, None]
    return CcaModel(
        w_x=w_x,
        w_y=w_y,
        correlations=np.clip(rho, 0.0, 1.0),
        mean_x=mean_x,
        mean_y=mean_y,
        ridge=ridge,
    )


def project(model: CcaModel, side, features):
    """W^T (feature - mean) for the chosen side ('x' or 'y').

    Accepts a single vector or a samples-by-dim matrix.
    """
    if side == "x":
        w, mean = model.w_x, model.mean_x
    elif side == "y":
        w, mean = model.w_y, model.mean_y
    else:
        raise InvalidConfig(f"side must be 'x' or 'y', got {side!r}")
    features = np.asarray(features, dtype=np.float64)
    if features.shape[-1] != w.shape[0]:
        raise ShapeMismatch(f"feature dim {features.shape[-1]} != model dim {w.shape[0]}")
    return (features - mean) @ w


def standardized_bits(attributes):
    """Binary attribute bits mapped onto {-1, +1}."""
    bits = np.asarray(attributes, dtype=np.float64)
    return 2.0 * bits - 1.0


def fuse(scenario, vision=None, language=None, model=None, side=GALLERY, attributes=None):
    """Build the matching feature for one record under a scenario.

    VxV: x.   LxL: y.   VLxVL: x ++ y both sides.
    VxL:  gallery = W_x^T x,       query = W_y^T y.
    VxVL: gallery = x ++ W_x^T x,  query = x ++ W_y^T y.
    VAxVA: x ++ attribute bits mapped to {-1, +1}.
    """
    if scenario not in SCENARIOS:
        raise InvalidConfig(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    if side not in (GALLERY, QUERY):
        raise InvalidConfig(f"side must be '{GALLERY}' or '{QUERY}', got {side!r}")

    def need(value, name):
        if value is None:
            raise MissingModality(f"scenario {scenario} ({side}) needs the {name} modality")
        return np.asarray(value, dtype=np.float64)

    if scenario == "VxV":
        return need(vision, "vision")
    if scenario == "LxL":
        return need(language, "language")
    if scenario == "VLxVL":
        return np.concatenate([need(vision, "vision"), need(language, "language")])
    if scenario == "VAxVA":
        return np.concatenate(
            [need(vision, "vision"), standardized_bits(need(attributes, "attribute"))]
        )
    if model is None:
        raise MissingModel(f"scenario {scenario} needs a fitted CCA model")
    if scenario == "VxL":
        if side == GALLERY:
            return project(model, "x", need(vision, "vision"))
        return project(model, "y", need(language, "language"))
    # VxVL: vision everywhere, canonical part from the side's own modality
    x = need(vision, "vision")
    if side == GALLERY:
        return np.concatenate([x, project(model, "x", x)])
    return np.concatenate([x, project(model, "y", need(language, "language"))])


# -- model file ------------------------------------------------------------------

CCA_MAGIC = "XMREID-CCA 1"


def save_model(model: CcaModel, path):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(CCA_MAGIC + "\n")
        handle.write(f"{model.w_x.shape[0]} {model.w_y.shape[0]} {model.k}\n")
        for row in [model.mean_x, model.mean_y, *model.w_x, *model.w_y, model.correlations]:
            handle.write(" ".join(format_real(v) for v in np.atleast_1d(row)) + "\n")


def load_model(path) -> CcaModel:
    with open(path, "r", encoding="utf-8", newline="\n") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0] != CCA_MAGIC:
        raise MalformedHeader(f"{path}: expected '{CCA_MAGIC}' on line 1")
    try:
        d_x, d_y, k = (int(v) for v in lines[1].split(" "))
    except ValueError as exc:
        raise MalformedHeader(f"{path}: bad dimension line") from exc

    def vector(line, size):
        parts = line.split(" ")
        if len(parts) != size:
            raise MalformedHeader(f"{path}: expected {size} values per row")
        return np.array([float(p) for p in parts])

    cursor = 2
    mean_x = vector(lines[cursor], d_x); cursor += 1
    mean_y = vector(lines[cursor], d_y); cursor += 1
    w_x = np.stack([vector(lines[cursor + r], k) for r in range(d_x)]); cursor += d_x
    w_y = np.stack([vector(lines[cursor + r], k) for r in range(d_y)]); cursor += d_y
    correlations = vector(lines[cursor], k)
    return CcaModel(w_x=w_x, w_y=w_y, correlations=correlations,
                    mean_x=mean_x, mean_y=mean_y, ridge=float("nan"))
