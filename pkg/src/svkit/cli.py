"""Command-line front door: extract, score, tsne, fuse, evaluate, synth.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
degeneracy.  Diagnostics go to stderr only; data goes to files or stdout.
Output files are written to a temp file and atomically renamed, so a
failing command never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import tempfile
from pathlib import Path

from .errors import DataError, NumericalDegeneracyError
from .features import FeatureConfig, log_mel, read_wav
from .fusion import average_fuse, optimize_fusion
from .metrics import DcfParams, evaluate, render_report
from .scoring import minmax_normalize, score_trials
from .synth import SynthSpec, generate
from .trial_io import (
    EMB_MAGIC,
    EmbeddingSet,
    align_score_sets,
    parse_score_file,
    parse_trial_list,
    read_embeddings,
    write_embeddings,
    write_score_file,
    write_trial_list,
)
from .tsne import TsneConfig, embed_trial_utterances, trial_scores_from_points

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DECIMAL_RE = re.compile(r"[+-]?(\d+(\.\d*)?|\.\d+)$")
_INT_RE = re.compile(r"[+-]?\d+$")


def _decimal(text: str) -> float:
    """Plain decimal notation only: no scientific notation, no nan/inf."""
    if not _DECIMAL_RE.match(text):
        raise argparse.ArgumentTypeError(f"expected decimal notation, got {text!r}")
    return float(text)


def _integer(text: str) -> int:
    if not _INT_RE.match(text):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(text)


class _Parser(argparse.ArgumentParser):
    # usage errors must exit 1, not argparse's default 2
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _UsageError(Exception):
    """Flag values that fail semantic validation (exit 1, like argparse)."""


def _config(factory):
    """Build a config object; domain violations are usage, not data, errors."""
    try:
        return factory()
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _write_outputs(*outputs: tuple[str, str | bytes]) -> None:
    """Stage every payload in a temp file first, then rename them all, so a
    failure while producing any output leaves no partial file behind."""
    pending: list[tuple[str, Path]] = []
    try:
        for path, payload in outputs:
            target = Path(path)
            directory = target.parent if str(target.parent) else Path(".")
            fd, tmp = tempfile.mkstemp(
                dir=directory, prefix=target.name + ".", suffix=".tmp"
            )
            with os.fdopen(fd, "wb" if isinstance(payload, bytes) else "w") as fh:
                fh.write(payload)
            pending.append((tmp, target))
        while pending:
            tmp, target = pending[0]
            os.replace(tmp, target)
            pending.pop(0)
    except BaseException:
        for tmp, _ in pending:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        raise


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_embeddings(path: str) -> EmbeddingSet:
    data = Path(path).read_bytes()
    if data[:4] == EMB_MAGIC:
        return read_embeddings(data, "binary")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: neither EMB1 binary nor UTF-8 text") from exc
    return read_embeddings(text, "text")


def _check_pairs_in_trials(pairs, trials) -> None:
    trial_keys = {(p.enroll, p.test) for p in trials}
    for enroll, test in pairs:
        if (enroll, test) not in trial_keys:
            raise DataError(f"score pair {enroll} {test} not in trial list")


def cmd_extract(args) -> int:
    config = _config(
        lambda: FeatureConfig(
            n_mels=args.n_mels, nfft=args.nfft, f_min=args.fmin, f_max=args.fmax
        )
    )
    entries = {}
    for wav_path in args.wav:
        stem = Path(wav_path).stem
        if stem in entries:
            raise DataError(f"duplicate output id {stem!r} from {wav_path}")
        feats = log_mel(read_wav(wav_path), config)
        entries[stem] = feats.frames
    _write_outputs((args.out, write_embeddings(EmbeddingSet(entries), "text")))
    return EXIT_OK


def cmd_score(args) -> int:
    emb = _load_embeddings(args.emb)
    trials = parse_trial_list(_read_text(args.trials))
    scores = score_trials(emb, trials)
    if args.normalize == "minmax":
        scores = minmax_normalize(scores)
    _write_outputs((args.out, write_score_file(scores)))
    return EXIT_OK


def cmd_tsne(args) -> int:
    config = _config(
        lambda: TsneConfig(
            out_dim=args.dim,
            perplexity=args.perplexity,
            iterations=args.iters,
            learning_rate=args.learning_rate,
            momentum_early=args.momentum_early,
            momentum_late=args.momentum_late,
            momentum_switch_iter=args.momentum_switch,
            early_exaggeration=args.exaggeration,
            exaggeration_iters=args.exaggeration_iters,
            perplexity_tolerance=args.perplexity_tol,
            perplexity_max_bisections=args.max_bisections,
            seed=args.seed,
        )
    )
    emb = _load_embeddings(args.emb)
    trials = parse_trial_list(_read_text(args.trials))
    utts, result = embed_trial_utterances(emb, trials, config)
    scores = trial_scores_from_points(utts, result.points, trials)
    diag_lines = [f"kl {it} {kl!r}\n" for it, kl in result.kl_trace]
    diag_lines += [
        f"sigma {utt} {float(sig)!r}\n" for utt, sig in zip(utts, result.sigmas)
    ]
    diagnostics_path = args.diagnostics or args.out + ".diag"
    _write_outputs(
        (args.out, write_score_file(scores)),
        (diagnostics_path, "".join(diag_lines)),
    )
    return EXIT_OK


def cmd_fuse(args) -> int:
    params = _config(
        lambda: DcfParams(p_target=args.p_target, c_miss=args.c_miss, c_fa=args.c_fa)
    )
    sets = [parse_score_file(_read_text(p)) for p in args.scores]
    if args.normalize == "minmax":
        sets = [minmax_normalize(s) for s in sets]
    aligned = align_score_sets(sets)
    trials = parse_trial_list(_read_text(args.trials))
    _check_pairs_in_trials(aligned.pairs, trials)
    if args.mode == "avg":
        fused = average_fuse(aligned)
        _write_outputs((args.out, write_score_file(fused)))
        return EXIT_OK
    if not trials.labeled:
        raise DataError("optimum fusion requires a labeled trial list")
    labels = trials.labels_for(aligned.pairs)
    result = optimize_fusion(
        aligned, labels, objective=args.objective, step=args.step, dcf_params=params
    )
    fused_text = write_score_file(result.fused)
    weight_text = " ".join(repr(w) for w in result.weights)
    report = (
        f"weights {weight_text}\n"
        f"objective {result.objective_kind} {result.objective_value!r}\n"
        f"{fused_text}"
    )
    _write_outputs((args.out, fused_text), (args.out + ".weights", report))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    params = _config(
        lambda: DcfParams(p_target=args.p_target, c_miss=args.c_miss, c_fa=args.c_fa)
    )
    scores = parse_score_file(_read_text(args.scores))
    trials = parse_trial_list(_read_text(args.trials))
    report = evaluate(scores, trials, params)
    sys.stdout.write(render_report(report, params, machine=args.machine))
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = _config(
        lambda: SynthSpec(
            n_speakers=args.speakers,
            utts_per_speaker=args.utts,
            dim=args.dim,
            within_std=args.within_std,
            between_std=args.between_std,
            seed=args.seed,
        )
    )
    emb, trials = generate(spec)
    _write_outputs(
        (args.out_emb, write_embeddings(emb, "text")),
        (args.out_trials, write_trial_list(trials)),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="svkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("extract", help="log mel-filterbank features from WAV files")
    p.add_argument("--wav", nargs="+", required=True, help="16 kHz PCM16 mono WAV files")
    p.add_argument("--out", required=True, help="output embedding file (text format)")
    p.add_argument("--n-mels", type=_integer, default=64)
    p.add_argument("--nfft", type=_integer, default=512)
    p.add_argument("--fmin", type=_decimal, default=20.0)
    p.add_argument("--fmax", type=_decimal, default=7600.0)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("score", help="negative-Euclidean scores for a trial list")
    p.add_argument("--emb", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--normalize", choices=("minmax", "none"), default="none")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("tsne", help="t-SNE normalized distance scores")
    p.add_argument("--emb", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=_integer, default=2)
    p.add_argument("--perplexity", type=_decimal, default=30.0)
    p.add_argument("--iters", type=_integer, default=1000)
    p.add_argument("--learning-rate", type=_decimal, default=200.0)
    p.add_argument("--momentum-early", type=_decimal, default=0.5)
    p.add_argument("--momentum-late", type=_decimal, default=0.8)
    p.add_argument("--momentum-switch", type=_integer, default=250)
    p.add_argument("--exaggeration", type=_decimal, default=12.0)
    p.add_argument("--exaggeration-iters", type=_integer, default=250)
    p.add_argument("--perplexity-tol", type=_decimal, default=1e-5)
    p.add_argument("--max-bisections", type=_integer, default=50)
    p.add_argument("--seed", type=_integer, default=0)
    p.add_argument("--diagnostics", default=None, help="default: <out>.diag")
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("fuse", help="average or optimum fusion of score files")
    p.add_argument("--scores", nargs="+", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("avg", "opt"), default="avg")
    p.add_argument("--objective", choices=("mindcf", "eer"), default="mindcf")
    p.add_argument("--step", type=_decimal, default=0.05)
    p.add_argument("--p-target", type=_decimal, default=0.05)
    p.add_argument("--c-miss", type=_decimal, default=1.0)
    p.add_argument("--c-fa", type=_decimal, default=1.0)
    p.add_argument("--normalize", choices=("minmax", "none"), default="none")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="EER / minDCF report for a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--p-target", type=_decimal, default=0.05)
    p.add_argument("--c-miss", type=_decimal, default=1.0)
    p.add_argument("--c-fa", type=_decimal, default=1.0)
    p.add_argument("--machine", action="store_true", help="key=value output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="synthetic embeddings and labeled trials")
    p.add_argument("--speakers", type=_integer, required=True)
    p.add_argument("--utts", type=_integer, required=True)
    p.add_argument("--dim", type=_integer, required=True)
    p.add_argument("--within-std", type=_decimal, required=True)
    p.add_argument("--between-std", type=_decimal, required=True)
    p.add_argument("--seed", type=_integer, required=True)
    p.add_argument("--out-emb", required=True)
    p.add_argument("--out-trials", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"svkit {args.subcommand}: error: {exc}\n")
        return EXIT_USAGE
    except NumericalDegeneracyError as exc:
        sys.stderr.write(f"svkit {args.subcommand}: numerical degeneracy: {exc}\n")
        return EXIT_NUMERIC
    except (DataError, OSError, ValueError) as exc:
        sys.stderr.write(f"svkit {args.subcommand}: error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
