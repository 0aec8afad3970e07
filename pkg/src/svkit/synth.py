"""Seeded synthetic speaker-embedding corpora for desk-scale experiments.

Speakers are isotropic Gaussian centroids; utterances are centroids plus
isotropic within-speaker noise.  The trial list holds every same-speaker
pair and an equal-count random sample of cross-speaker pairs.

PRNG chain (fixed for reproducibility): numpy default_rng (PCG64) seeded
with spec.seed, drawing in this order: (1) speaker centroids as an
(n_speakers, dim) standard-normal block scaled by between_std, (2)
utterance offsets as an (n_speakers, utts_per_speaker, dim) block scaled
by within_std, (3) integer draws for nontarget pair sampling, two per
candidate, rejecting same-speaker and already-sampled pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .trial_io import EmbeddingSet, TrialList, TrialPair

__all__ = ["SynthSpec", "generate"]


@dataclass(frozen=True)
class SynthSpec:
    n_speakers: int
    utts_per_speaker: int
    dim: int
    within_std: float
    between_std: float
    seed: int

    def __post_init__(self):
        if self.n_speakers < 2:
            raise ValueError("need at least 2 speakers")
        if self.utts_per_speaker < 2:
            raise ValueError("need at least 2 utterances per speaker for target pairs")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not 0.0 < self.within_std < self.between_std:
            raise ValueError("need 0 < within_std < between_std")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


def _utt_id(speaker: int, utt: int) -> str:
    return f"s{speaker:04d}u{utt:03d}"


def generate(spec: SynthSpec) -> tuple[EmbeddingSet, TrialList]:
    """Embeddings plus a labeled trial list, deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    n_spk, n_utt, dim = spec.n_speakers, spec.utts_per_speaker, spec.dim
    centroids = spec.between_std * rng.standard_normal((n_spk, dim))
    offsets = spec.within_std * rng.standard_normal((n_spk, n_utt, dim))
    vectors = centroids[:, None, :] + offsets

    entries = {
        _utt_id(s, u): vectors[s, u][None, :]
        for s in range(n_spk)
        for u in range(n_utt)
    }
    embeddings = EmbeddingSet(entries)

    targets = [
        TrialPair(_utt_id(s, i), _utt_id(s, j), True)
        for s in range(n_spk)
        for i in range(n_utt)
        for j in range(i + 1, n_utt)
    ]

    n_total = n_spk * n_utt
    nontargets: list[TrialPair] = []
    seen: set[tuple[int, int]] = set()
    while len(nontargets) < len(targets):
        a = int(rng.integers(0, n_total))
        b = int(rng.integers(0, n_total))
        if a // n_utt == b // n_utt:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen.add(key)
        nontargets.append(
            TrialPair(_utt_id(a // n_utt, a % n_utt), _utt_id(b // n_utt, b % n_utt), False)
        )

    return embeddings, TrialList(targets + nontargets)
