"""Synthetic paired-modality data and independent brute-force oracles.

The generator draws one latent per identity, shifts it per camera view, and
mixes it through fixed random full-rank maps into the vision and language
feature spaces, with per-sample Gaussian noise at modality-specific scales:

    z_id ~ N(0, I_s);  z_view = z_id + shift_view
    x = A z_view + sigma_x * eps;   y = B z_view + sigma_y * eps

Language noise defaults to twice the vision noise so the language-only
scenario lands below vision-only, mirroring the qualitative gap seen on real
data. Two optional structure terms (both default to zero, reducing to the
plain formula above) make multi-modal fusion genuinely informative:

  * private latent dims: identity traits only one modality observes; A sees
    the shared plus vision-private components, B the shared plus
    language-private ones. These are what language-only matching exploits
    beyond the shared factors, and why full concatenation beats vision alone.
  * per-sample nuisance: a disturbance u drawn per sample that leaks into
    both x and y of that sample (a description is written about one specific
    image, so pose/occlusion effects correlate the modalities). A metric
    over concatenated features can cancel it; single-modality metrics
    cannot.
  * vision leak: vision observes the language-private traits faintly (a
    barely visible logo that the annotator still mentions). The query's
    canonical language projection then matches a weak but genuine signal in
    the gallery's vision features, which is what lets a language-enriched
    query beat the vision-only query at first order.

With both terms on, the scenario ordering VxL < LxL < VxV < VxVL < VLxVL
holds by construction instead of by luck. Every draw comes from a keyed
Philox stream (see rng.py) so files are byte-reproducible and generation can
be partitioned per identity.

The oracles at the bottom are deliberately naive re-derivations (grid search,
explicit pair enumeration, Monte Carlo) that never share a code path with the
modules they check beyond numpy itself.
"""

from dataclasses import dataclass, field

import numpy as np

from . import rng as streams
from .dataio import AttributeTable, Dataset, DatasetRecord, SplitAssignment
from .errors import DimensionNotTwo, InvalidConfig, MissingView, TooFewIdentities, TooLarge

_FILLER = ("a", "the", "with", "and", "wearing", "person", "seen", "is")
_COLORS = ("red", "blue", "green", "black", "white", "grey", "brown", "purple",
           "olive", "teal", "maroon", "navy")
_GARMENTS = ("shirt", "jacket", "jeans", "skirt", "coat", "scarf", "boots",
             "sneakers", "hat", "bag", "glasses", "gloves")


@dataclass
class SynthConfig:
    identity_count: int = 50
    samples_per_view: int = 4
    latent_dim: int = 5               # shared between the modalities
    vision_private_dim: int = 0       # identity traits only vision observes
    language_private_dim: int = 0     # identity traits only language observes
    vision_dim: int = 32
    language_dim: int = 16
    vision_noise: float = 0.5
    language_noise: float = 1.0
    view_shift: float = 0.5
    nuisance_dim: int = 0             # per-sample disturbance shared by x and y
    nuisance_scale: float = 0.0
    vision_leak: float = 0.0          # how faintly vision sees language-private traits
    attribute_bits: int = 15
    num_splits: int = 20
    train_fraction: float = 0.5
    seed: int = 42

    def validate(self):
        counts = (self.identity_count, self.samples_per_view, self.latent_dim,
                  self.vision_dim, self.language_dim, self.attribute_bits,
                  self.num_splits)
        if any(c < 1 for c in counts):
            raise InvalidConfig("all counts must be >= 1")
        if min(self.vision_private_dim, self.language_private_dim, self.nuisance_dim) < 0:
            raise InvalidConfig("private latent and nuisance dims must be >= 0")
        scales = (self.vision_noise, self.language_noise, self.view_shift,
                  self.nuisance_scale, self.vision_leak)
        if any(s < 0 for s in scales):
            raise InvalidConfig("noise and shift scales must be >= 0")
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidConfig("train_fraction must lie strictly inside (0, 1)")
        if self.identity_count > 2 ** self.attribute_bits:
            raise InvalidConfig("not enough attribute patterns for unique identities")


def reference_config() -> SynthConfig:
    """Calibrated benchmark config for the five-scenario ordering.

    Frozen after a seed sweep (master seeds 40..45 all give the strict
    ordering VxL < LxL < VxV < VxVL < VLxVL with VLxVL at least 20 points
    above VxV): vision leak plus per-sample nuisance supply the two effects
    the ordering depends on, and the matching CCA rank for evaluation is
    latent_dim + language_private_dim = 7.
    """
    return SynthConfig(
        identity_count=60,
        samples_per_view=6,
        latent_dim=3,
        vision_private_dim=3,
        language_private_dim=4,
        vision_dim=24,
        language_dim=14,
        vision_noise=0.6,
        language_noise=1.0,
        nuisance_dim=26,
        nuisance_scale=0.7,
        vision_leak=0.5,
        num_splits=20,
        seed=42,
    )


def reference_cca_rank(config: SynthConfig) -> int:
    """Canonical pairs worth keeping: shared plus leaked language-private."""
    return config.latent_dim + config.language_private_dim


def reference_attribute_config() -> SynthConfig:
    """Single-shot, attribute-heavy config for the bit-flip degradation runs.

    Vision noise is high enough that attributes dominate the fused feature,
    mirroring the regime where annotations are worth more than pixels.
    """
    return SynthConfig(
        identity_count=60,
        samples_per_view=1,
        latent_dim=3,
        vision_private_dim=3,
        language_private_dim=0,
        vision_dim=24,
        language_dim=8,
        vision_noise=2.0,
        language_noise=2.0,
        attribute_bits=15,
        num_splits=10,
        seed=42,
    )


def identity_label(index):
    return f"id{index:04d}"


def gen_paired(config: SynthConfig) -> Dataset:
    """Seed-deterministic paired vision/language dataset.

    The full identity latent is [shared | vision-private | language-private];
    the vision mixing sees the first two blocks, the language mixing the
    first and third. With zero private dims both modalities observe the same
    latent vector.
    """
    config.validate()
    shared = config.latent_dim
    x_dims = shared + config.vision_private_dim
    total = x_dims + config.language_private_dim
    x_slice = np.arange(x_dims)
    y_slice = np.concatenate([np.arange(shared), np.arange(x_dims, total)])

    mix = streams.stream(config.seed, streams.MIXING)
    a = mix.standard_normal((config.vision_dim, x_dims))
    b = mix.standard_normal((config.language_dim, y_slice.size))
    shifts = {
        1: config.view_shift * mix.standard_normal(total),
        2: config.view_shift * mix.standard_normal(total),
    }
    nuis = config.nuisance_dim if config.nuisance_scale > 0.0 else 0
    if nuis:
        c_x = mix.standard_normal((config.vision_dim, nuis))
        c_y = mix.standard_normal((config.language_dim, nuis))
    leak = config.vision_leak if config.language_private_dim else 0.0
    if leak > 0.0:
        a_leak = mix.standard_normal((config.vision_dim, config.language_private_dim))
        yp_slice = np.arange(x_dims, total)
    records = []
    for idx in range(config.identity_count):
        gen = streams.stream(config.seed, streams.LATENT, idx)
        latent = gen.standard_normal(total)
        label = identity_label(idx)
        for view in (1, 2):
            shifted = latent + shifts[view]
            for _ in range(config.samples_per_view):
                x = a @ shifted[x_slice] + config.vision_noise * gen.standard_normal(config.vision_dim)
                y = b @ shifted[y_slice] + config.language_noise * gen.standard_normal(config.language_dim)
                if leak > 0.0:
                    x += leak * (a_leak @ shifted[yp_slice])
                if nuis:
                    u = config.nuisance_scale * gen.standard_normal(nuis)
                    x += c_x @ u
                    y += c_y @ u
                records.append(
                    DatasetRecord(identity=label, view=view, vision=x, language=y)
                )
    return Dataset(records=records)


def gen_attributes(config: SynthConfig) -> AttributeTable:
    """Unique random bit vectors, one per identity."""
    config.validate()
    gen = streams.stream(config.seed, streams.ATTRIBUTES)
    table = AttributeTable(width=config.attribute_bits)
    seen = set()
    for idx in range(config.identity_count):
        while True:
            bits = gen.integers(0, 2, size=config.attribute_bits, dtype=np.uint8)
            key = bits.tobytes()
            if key not in seen:
                seen.add(key)
                break
        table.bits[identity_label(idx)] = bits
    return table


def gen_splits(config: SynthConfig):
    """Random train/test partitions of the identities."""
    config.validate()
    labels = [identity_label(i) for i in range(config.identity_count)]
    n_train = round(config.train_fraction * config.identity_count)
    n_train = min(max(n_train, 1), config.identity_count - 1)
    splits = []
    for index in range(1, config.num_splits + 1):
        gen = streams.stream(config.seed, streams.SPLIT_GEN, index)
        order = gen.permutation(config.identity_count)
        roles = {}
        for rank, which in enumerate(order):
            roles[labels[which]] = "train" if rank < n_train else "test"
        splits.append(SplitAssignment(index=index, roles=dict(sorted(roles.items()))))
    return splits


def gen_corpus(config: SynthConfig):
    """Toy descriptions: each identity keeps a signature colour+garment pair
    per view, wrapped in shuffled filler words."""
    config.validate()
    gen = streams.stream(config.seed, streams.CORPUS)
    records = []
    for idx in range(config.identity_count):
        label = identity_label(idx)
        colour = _COLORS[idx % len(_COLORS)]
        garment = _GARMENTS[(idx // len(_COLORS)) % len(_GARMENTS)]
        for view in (1, 2):
            filler = list(_FILLER)
            gen.shuffle(filler)
            extra = _COLORS[int(gen.integers(0, len(_COLORS)))]
            words = filler[:3] + [colour, garment] + filler[3:5] + [extra]
            records.append((label, view, " ".join(words)))
    return records


def gen_vocabulary_embeddings(config: SynthConfig, dim=12):
    """Random embedding table covering the toy corpus vocabulary."""
    from .dataio import EmbeddingTable

    gen = streams.stream(config.seed, streams.CORPUS, 1)
    table = EmbeddingTable(dimension=dim)
    for token in (*_FILLER, *_COLORS, *_GARMENTS):
        table.vectors[token] = gen.standard_normal(dim)
    return table


# -- oracles ----------------------------------------------------------------------

def oracle_cca_grid(x, y, step_degrees=0.5):
    """Best empirical correlation over a dense grid of 2-D direction pairs.

    Exhaustive stand-in for the first canonical correlation: every direction
    is unit-variance scaled, and the maximum absolute correlation over the
    grid is returned. Only defined for two-dimensional views.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != 2 or y.shape[1] != 2:
        raise DimensionNotTwo("grid oracle requires samples-by-2 matrices")
    angles = np.deg2rad(np.arange(0.0, 180.0, step_degrees))
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    def normalized(view):
        proj = (view - view.mean(axis=0)) @ directions.T
        norms = np.linalg.norm(proj, axis=0)
        return proj / np.maximum(norms, 1e-300)

    corr = normalized(x).T @ normalized(y)
    return float(np.abs(corr).max())


def oracle_pairwise_covariances(features, identities, views, pair_cap=10_000):
    """Difference covariances by explicit pair enumeration.

    Loops over every same-identity and different-identity cross-view pair and
    averages the outer products of the differences, exactly as defined. Kept
    deliberately quadratic; refuses datasets beyond pair_cap pairs.
    """
    features = np.asarray(features, dtype=np.float64)
    identities = list(identities)
    views = list(views)
    if len(set(identities)) < 2:
        raise TooFewIdentities("need at least two identities to form extra-personal pairs")
    first = [i for i, v in enumerate(views) if v == 1]
    second = [i for i, v in enumerate(views) if v == 2]
    for identity in set(identities):
        if not any(identities[i] == identity for i in first) or not any(
            identities[i] == identity for i in second
        ):
            raise MissingView(f"identity {identity!r} is missing a view")
    if len(first) * len(second) > pair_cap:
        raise TooLarge(f"{len(first) * len(second)} pairs exceed the cap {pair_cap}")

    dim = features.shape[1]
    intra = np.zeros((dim, dim))
    extra = np.zeros((dim, dim))
    intra_n = 0
    extra_n = 0
    for g in first:
        for q in second:
            diff = features[g] - features[q]
            outer = np.outer(diff, diff)
            if identities[g] == identities[q]:
                intra += outer
                intra_n += 1
            else:
                extra += outer
                extra_n += 1
    return intra / intra_n, extra / extra_n


def oracle_cmc_chance(gallery_size, probes, trials, rng):
    """Monte Carlo CMC under i.i.d. random scores; analytic target is K/G."""
    if trials < 1 or probes < 1:
        raise InvalidConfig("probes and trials must be >= 1")
    total = probes * trials
    counts = np.zeros(gallery_size, dtype=np.int64)
    chunk = max(1, min(total, 200_000 // max(gallery_size, 1)))
    done = 0
    while done < total:
        take = min(chunk, total - done)
        scores = rng.random((take, gallery_size))
        # correct entry fixed at column 0; rank = 1 + number of better scores
        ranks = 1 + (scores < scores[:, :1]).sum(axis=1)
        counts += np.bincount(ranks, minlength=gallery_size + 1)[1:]
        done += take
    return np.cumsum(counts) / total
