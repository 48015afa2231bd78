"""Genotype representation and variation operators.

A genotype is a fixed-topology, bias-free, identity-activation controller
(24 -> 40 -> 40 -> 4, 2720 weights) plus an eight-value leg morphology.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from app.core.exceptions import GenotypeFormatError, InvalidMorphologyError
from app.schemas.experiment import GenomeConfig
from app.schemas.morphology import (
    MORPHOLOGY_LENGTH,
    MORPHOLOGY_MAX,
    MORPHOLOGY_MIN,
    morphology_in_bounds,
)

LAYER_SHAPES: tuple[tuple[int, int], ...] = ((24, 40), (40, 40), (40, 4))
WEIGHT_COUNT = sum(rows * cols for rows, cols in LAYER_SHAPES)
GENE_COUNT = WEIGHT_COUNT + MORPHOLOGY_LENGTH

GENOTYPE_FORMAT = "morphopoet-genotype"
GENOTYPE_FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class Genotype:
    """Controller weights, morphology and (once evaluated) fitness.

    Arrays are copied and made read-only on construction; every genetic change
    produces a new, unevaluated genotype.
    """

    weights: np.ndarray
    morphology: np.ndarray
    fitness: float | None = None
    layers: tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64).reshape(-1)
        morphology = np.array(self.morphology, dtype=np.float64).reshape(-1)
        if weights.size != WEIGHT_COUNT:
            raise ValueError(f"Expected {WEIGHT_COUNT} weights, got {weights.size}")
        if morphology.size != MORPHOLOGY_LENGTH:
            raise ValueError(f"Expected {MORPHOLOGY_LENGTH} morphology values, got {morphology.size}")
        weights.setflags(write=False)
        morphology.setflags(write=False)

        layers = []
        start = 0
        for rows, cols in LAYER_SHAPES:
            layers.append(weights[start : start + rows * cols].reshape(rows, cols))
            start += rows * cols

        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "morphology", morphology)
        object.__setattr__(self, "layers", tuple(layers))
        if self.fitness is not None:
            object.__setattr__(self, "fitness", float(self.fitness))

    @classmethod
    def from_genes(cls, genes: np.ndarray) -> "Genotype":
        return cls(weights=genes[:WEIGHT_COUNT], morphology=genes[WEIGHT_COUNT:])

    @property
    def is_evaluated(self) -> bool:
        return self.fitness is not None

    def genes(self) -> np.ndarray:
        """All 2728 genes: weights in layer order, then morphology."""
        return np.concatenate([self.weights, self.morphology])

    def with_fitness(self, fitness: float) -> "Genotype":
        if self.fitness is not None:
            raise ValueError("Genotype already carries a fitness")
        return dataclasses.replace(self, fitness=float(fitness))

    def unevaluated(self) -> "Genotype":
        return self if self.fitness is None else dataclasses.replace(self, fitness=None)

    def same_genes(self, other: "Genotype") -> bool:
        return bool(
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.morphology, other.morphology)
        )


# =============================================================================
# Gene bounds
# =============================================================================


def _bounds(config: GenomeConfig) -> tuple[np.ndarray, np.ndarray]:
    lower = np.concatenate([np.full(WEIGHT_COUNT, -config.weight_bound), MORPHOLOGY_MIN])
    upper = np.concatenate([np.full(WEIGHT_COUNT, config.weight_bound), MORPHOLOGY_MAX])
    return lower, upper


def _init_range(config: GenomeConfig) -> tuple[np.ndarray, np.ndarray]:
    lower = np.concatenate([np.full(WEIGHT_COUNT, -config.init_weight_range), MORPHOLOGY_MIN])
    upper = np.concatenate([np.full(WEIGHT_COUNT, config.init_weight_range), MORPHOLOGY_MAX])
    return lower, upper


def _modification_step(config: GenomeConfig) -> np.ndarray:
    return np.concatenate(
        [
            np.full(WEIGHT_COUNT, config.weight_step),
            config.morphology_step_fraction * (MORPHOLOGY_MAX - MORPHOLOGY_MIN),
        ]
    )


def in_bounds(genotype: Genotype, config: GenomeConfig | None = None) -> bool:
    config = config or GenomeConfig()
    return bool(
        np.all(np.abs(genotype.weights) <= config.weight_bound)
        and morphology_in_bounds(genotype.morphology)
    )


# =============================================================================
# Operators
# =============================================================================


def init_random(rng: np.random.Generator, config: GenomeConfig | None = None) -> Genotype:
    """Weights ~ U(-1, 1); each morphology value ~ U(segment min, segment max)."""
    low, high = _init_range(config or GenomeConfig())
    return Genotype.from_genes(rng.uniform(low, high))


def zero_controller(morphology: np.ndarray) -> Genotype:
    if not morphology_in_bounds(morphology):
        raise InvalidMorphologyError(f"Morphology outside segment bounds: {list(morphology)}")
    return Genotype(weights=np.zeros(WEIGHT_COUNT), morphology=morphology)


def pre_activation(genotype: Genotype, obs: np.ndarray) -> np.ndarray:
    w1, w2, w3 = genotype.layers
    return np.asarray(obs, dtype=np.float64) @ w1 @ w2 @ w3


def forward(genotype: Genotype, obs: np.ndarray) -> np.ndarray:
    """Four actions in [-1, 1]."""
    return np.clip(pre_activation(genotype, obs), -1.0, 1.0)


def crossover_uniform(
    p1: Genotype, p2: Genotype, rng: np.random.Generator
) -> tuple[Genotype, Genotype]:
    """Per gene, c1 takes a uniformly chosen parent's value and c2 the other's."""
    g1, g2 = p1.genes(), p2.genes()
    mask = rng.random(GENE_COUNT) < 0.5
    return Genotype.from_genes(np.where(mask, g1, g2)), Genotype.from_genes(np.where(mask, g2, g1))


def mutate(
    genotype: Genotype, rng: np.random.Generator, config: GenomeConfig | None = None
) -> Genotype:
    """Replacement then modification, clamped to gene bounds.

    Full-length random arrays are always drawn so the stream advances the same
    amount on every call.
    """
    config = config or GenomeConfig()
    genes = genotype.genes()

    init_low, init_high = _init_range(config)
    replaced = rng.random(GENE_COUNT) < config.replacement_rate
    fresh = rng.uniform(init_low, init_high)
    genes = np.where(replaced, fresh, genes)

    step = _modification_step(config)
    modified = rng.random(GENE_COUNT) < config.modification_rate
    offsets = rng.uniform(-step, step)
    genes = np.where(modified, genes + offsets, genes)

    lower, upper = _bounds(config)
    return Genotype.from_genes(np.clip(genes, lower, upper))


# =============================================================================
# Serialization
# =============================================================================


def genotype_bytes(genotype: Genotype) -> bytes:
    return genotype.genes().astype("<f8").tobytes()


def genotype_from_bytes(payload: bytes) -> Genotype:
    expected = GENE_COUNT * 8
    if len(payload) != expected:
        raise GenotypeFormatError(f"Genotype payload has {len(payload)} bytes, expected {expected}")
    genes = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(genes)):
        raise GenotypeFormatError("Genotype payload contains non-finite values")
    return Genotype.from_genes(genes)


def _paths(path: Path) -> tuple[Path, Path]:
    stem = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def save_genotype(genotype: Genotype, path: Path, provenance: dict[str, Any] | None = None) -> Path:
    """Write ``<stem>.bin`` (little-endian float64 genes) and ``<stem>.json``."""
    bin_path, json_path = _paths(Path(path))
    payload = genotype_bytes(genotype)
    manifest = {
        "format": GENOTYPE_FORMAT,
        "version": GENOTYPE_FORMAT_VERSION,
        "weight_count": WEIGHT_COUNT,
        "morphology_count": MORPHOLOGY_LENGTH,
        "layer_shapes": [list(shape) for shape in LAYER_SHAPES],
        "fitness": genotype.fitness,
        "sha256": hashlib.sha256(payload).hexdigest(),
        "provenance": provenance or {},
    }
    bin_path.parent.mkdir(parents=True, exist_ok=True)
    bin_path.write_bytes(payload)
    json_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return bin_path


def load_genotype(path: Path) -> Genotype:
    """Read a genotype written by ``save_genotype``; the JSON sidecar is optional."""
    bin_path, json_path = _paths(Path(path))
    try:
        payload = bin_path.read_bytes()
    except OSError as e:
        raise GenotypeFormatError(f"Cannot read genotype {bin_path}: {e}") from e

    fitness = None
    if json_path.exists():
        try:
            manifest = json.loads(json_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise GenotypeFormatError(f"Malformed genotype manifest {json_path}: {e}") from e
        if manifest.get("format") != GENOTYPE_FORMAT:
            raise GenotypeFormatError(f"{json_path} is not a genotype manifest")
        if manifest.get("sha256") != hashlib.sha256(payload).hexdigest():
            raise GenotypeFormatError(f"Digest mismatch for {bin_path}")
        fitness = manifest.get("fitness")

    genotype = genotype_from_bytes(payload)
    if not morphology_in_bounds(genotype.morphology):
        raise GenotypeFormatError(f"Morphology in {bin_path} is outside segment bounds")
    return genotype if fitness is None else genotype.with_fitness(fitness)
