"""Speaker-verification scoring backend.

Post-encoder pipeline pieces: log mel-filterbank extraction, negative
Euclidean trial scoring over precomputed speaker embeddings, t-SNE
distance normalization, average and optimum score fusion, EER/minDCF
evaluation, and the file formats that glue them together.
"""

from .errors import (
    AlignmentError,
    DataError,
    DuplicatePairError,
    NumericalDegeneracyError,
    ParseError,
)
from .features import (
    AudioSignal,
    FeatureConfig,
    FeatureMatrix,
    frame_signal,
    hamming_window,
    hz_to_mel,
    log_mel,
    mel_filterbank_matrix,
    mel_to_hz,
    power_spectrum,
    read_wav,
)
from .fusion import (
    FusionResult,
    FusionWeights,
    average_fuse,
    optimize_fusion,
    simplex_grid,
    weighted_fuse,
)
from .metrics import (
    DcfParams,
    ErrorReport,
    det_points,
    eer,
    evaluate,
    min_dcf,
    render_report,
)
from .scoring import EvalMode, minmax_normalize, score_pair, score_trials
from .synth import SynthSpec, generate
from .trial_io import (
    AlignedScores,
    EmbeddingSet,
    ScoreSet,
    TrialList,
    TrialPair,
    align_score_sets,
    parse_score_file,
    parse_trial_list,
    read_embeddings,
    write_embeddings,
    write_score_file,
    write_trial_list,
)
from .tsne import (
    SigmaSearch,
    TsneConfig,
    TsneResult,
    conditional_probabilities,
    embed_trial_utterances,
    joint_p,
    kl_divergence,
    low_dim_affinities,
    pairwise_sq_distances,
    perplexity_search,
    run_tsne,
    trial_scores_from_points,
    trial_utterances,
    tsne_gradient,
    tsne_scores,
)

__version__ = "0.1.0"
