"""Command-line entry point wiring the pipeline stages together.

Subcommands: fetch, ingest, segment, classify, vote, resolve, detect,
stats, report, audit. Exit codes: 0 success, 1 validation error, 2 stage
failure, 3 acceptance-check mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Optional

from .classifier import (Annotator, annotate_lexically, apply_votes,
                         classify_remote, parse_resolution_file,
                         resolve_disputes, DISPUTED_FLAG)
from .corpus import (AnnotationEntry, AnnotationSet, Category, Company,
                     CorpusError, PolicySegment, load_corpus, save_corpus)
from .detector import (find_siloed, load_company_meta, load_instances,
                       save_instances)
from .fetcher import FetchConfig, fetch_policy, ingest_directory
from .reliability import (agreement_report, reference_validation,
                          wilson_interval)
from .reporter import build_report, write_report
from .segmenter import load_lexicon, segment_document

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_STAGE = 2
EXIT_CHECK = 3


class ValidationError(Exception):
    """Bad arguments or missing inputs; nothing was run."""


class StageError(Exception):
    """A pipeline stage failed after validation."""


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"{what} not found: {p}")
    return p


def _require_dir(path, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise ValidationError(f"{what} not found: {p}")
    return p


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _print(args, *parts) -> None:
    if not args.quiet:
        print(*parts)


# ---------------------------------------------------------------- fetch


def cmd_fetch(args) -> int:
    urls_file = _require_file(args.urls, "urls file")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = FetchConfig(timeout=args.timeout, retries=args.retries)

    jobs = []
    for line_no, line in enumerate(
            urls_file.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            name, url = line.split("\t", 1)
        else:
            url = line
            name = url.rstrip("/").rsplit("/", 1)[-1] or f"policy-{line_no}"
        jobs.append((name, url))
    if not jobs:
        raise ValidationError(f"no URLs found in {urls_file}")

    def one(job):
        name, url = job
        try:
            doc = fetch_policy(url, config, Company(name=name))
            (out_dir / f"{name}.html").write_text(doc.body, encoding="utf-8")
            return {"company": name, "source_url": url,
                    "retrieval_method": doc.retrieval_method,
                    "final_url": doc.final_url,
                    "archive_snapshot_url": doc.archive_snapshot_url,
                    "retrieved_at": doc.retrieved_at.isoformat()}
        except Exception as exc:
            return {"company": name, "source_url": url, "error": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, args.parallel)) as pool:
        records = list(pool.map(one, jobs))

    with (out_dir / "fetch_manifest.jsonl").open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    failures = [r for r in records if "error" in r]
    _print(args, f"fetched {len(records) - len(failures)} of {len(records)} "
           f"policies into {out_dir}")
    if failures:
        for rec in failures:
            _print(args, f"  failed: {rec['company']}: {rec['error']}")
        raise StageError(f"{len(failures)} fetches failed")
    return EXIT_OK


def cmd_ingest(args) -> int:
    in_dir = _require_dir(args.in_dir, "input directory")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = ingest_directory(in_dir)
    if not docs:
        raise ValidationError(f"no *.html files in {in_dir}")
    with (out_dir / "fetch_manifest.jsonl").open("w", encoding="utf-8") as fh:
        for doc in docs:
            target = out_dir / f"{doc.company.name}.html"
            target.write_text(doc.body, encoding="utf-8")
            fh.write(json.dumps({
                "company": doc.company.name,
                "source_url": doc.source_url,
                "retrieval_method": doc.retrieval_method,
                "retrieved_at": doc.retrieved_at.isoformat(),
            }, sort_keys=True) + "\n")
    _print(args, f"ingested {len(docs)} fixtures into {out_dir}")
    return EXIT_OK


# -------------------------------------------------------------- segment


def _company_table(meta_path) -> dict[str, Company]:
    if meta_path is None:
        return {}
    return load_company_meta(_require_file(meta_path, "company metadata"))


def cmd_segment(args) -> int:
    in_dir = _require_dir(args.in_dir, "input directory")
    if args.lexicon:
        load_lexicon(_require_file(args.lexicon, "lexicon"))
    meta = _company_table(args.company_meta)
    docs = ingest_directory(in_dir, meta or None)
    if not docs:
        raise ValidationError(f"no *.html files in {in_dir}")
    segments = []
    for doc in docs:
        segments.extend(segment_document(doc))
    save_corpus(segments, args.out)
    _print(args, f"wrote {len(segments)} segments from {len(docs)} "
           f"documents to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------- classify


def _load_annotator_config(path) -> list[Annotator]:
    raw = json.loads(_require_file(path, "annotator config")
                     .read_text(encoding="utf-8"))
    if isinstance(raw, dict):
        raw = raw.get("annotators", [])
    annotators = []
    for rec in raw:
        annotators.append(Annotator(
            annotator_id=rec["annotator_id"],
            kind=rec.get("kind", "lexical_baseline"),
            endpoint=rec.get("endpoint", ""),
            prompt_template_path=rec.get("prompt_template_path"),
            max_retries=int(rec.get("max_retries", 3)),
            timeout=float(rec.get("timeout", 30.0)),
            auth_token_env=rec.get("auth_token_env"),
        ))
    if not annotators:
        raise ValidationError(f"annotator config {path} lists no annotators")
    return annotators


def _classify_corpus(segments: list[PolicySegment],
                     annotators: list[Annotator]) -> list[PolicySegment]:
    for annotator in annotators:
        if annotator.kind == "lexical_baseline":
            segments = annotate_lexically(segments, annotator.annotator_id)
        elif annotator.kind == "remote_model":
            out = []
            for seg in segments:
                primary, secondary = classify_remote(seg, annotator)
                entry = AnnotationEntry(annotator_id=annotator.annotator_id,
                                        primary=primary, secondary=secondary)
                out.append(PolicySegment(
                    segment_id=seg.segment_id, company=seg.company,
                    heading_path=seg.heading_path, text=seg.text,
                    annotations=AnnotationSet(
                        seg.annotations.entries + (entry,)),
                    consensus=seg.consensus, flags=seg.flags, extra=seg.extra))
            segments = out
        else:
            raise ValidationError(
                f"unknown annotator kind {annotator.kind!r}")
    return segments


def cmd_classify(args) -> int:
    segments = load_corpus(_require_file(args.corpus, "corpus"))
    annotators = _load_annotator_config(args.annotators)
    segments = _classify_corpus(segments, annotators)
    save_corpus(segments, args.out)
    _print(args, f"classified {len(segments)} segments with "
           f"{len(annotators)} annotators")
    return EXIT_OK


def cmd_vote(args) -> int:
    segments = load_corpus(_require_file(args.corpus, "corpus"))
    segments = apply_votes(segments)
    save_corpus(segments, args.out or args.corpus)
    disputed = [s for s in segments if DISPUTED_FLAG in s.flags]
    disputes_path = Path(args.disputes) if args.disputes else \
        Path(args.out or args.corpus).with_suffix(".disputes.tsv")
    with disputes_path.open("w", encoding="utf-8") as fh:
        fh.write("# segment_id\tPRIMARY\tsec1,sec2 "
                 "(fill in and run `resolve`)\n")
        for seg in disputed:
            labels = "; ".join(
                f"{e.annotator_id}={e.primary.value}"
                for e in seg.annotations.entries)
            fh.write(f"# {seg.segment_id}: {labels}\n")
    _print(args, f"voted on {len(segments)} segments; "
           f"{len(disputed)} disputed -> {disputes_path}")
    return EXIT_OK


def cmd_resolve(args) -> int:
    segments = load_corpus(_require_file(args.corpus, "corpus"))
    resolutions = parse_resolution_file(
        _require_file(args.resolutions, "resolutions file"))
    segments = resolve_disputes(segments, resolutions)
    save_corpus(segments, args.out or args.corpus)
    remaining = sum(1 for s in segments if DISPUTED_FLAG in s.flags)
    _print(args, f"applied {len(resolutions)} resolutions; "
           f"{remaining} disputes remain")
    return EXIT_OK


# --------------------------------------------------------------- detect


def cmd_detect(args) -> int:
    segments = load_corpus(_require_file(args.corpus, "corpus"))
    meta = _company_table(args.company_meta)
    categories = None
    if args.categories:
        try:
            categories = [Category(t) for t in args.categories.split(",")]
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
    lexicon = load_lexicon(args.lexicon) if args.lexicon else None
    instances = find_siloed(segments, lexicon=lexicon,
                            company_meta=meta or None,
                            strict_clarity=args.strict_clarity,
                            categories=categories)
    save_instances(instances, args.out)
    companies = len({i.company for i in instances})
    _print(args, f"detected {len(instances)} siloed instances across "
           f"{companies} companies -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    if args.stat == "agreement":
        segments = load_corpus(_require_file(args.corpus, "corpus"))
        rep = agreement_report(segments)
        _print(args, f"items: {rep.n_items}")
        _print(args, f"unanimous: {100 * rep.unanimous_rate:.1f}%  "
               f"majority: {100 * rep.majority_rate:.1f}%  "
               f"disputed: {100 * rep.disputed_rate:.1f}%")
        for (a, b), v in sorted(rep.pairwise.items()):
            _print(args, f"pairwise {a} / {b}: {100 * v:.1f}%")
        _print(args, f"fleiss kappa: {rep.fleiss_kappa:.3f}")
        record = {"n_items": rep.n_items, "unanimous": rep.unanimous_rate,
                  "majority": rep.majority_rate, "disputed": rep.disputed_rate,
                  "pairwise": {f"{a}/{b}": v
                               for (a, b), v in rep.pairwise.items()},
                  "fleiss_kappa": rep.fleiss_kappa}
    elif args.stat == "validate":
        pred = load_corpus(_require_file(args.pred, "prediction corpus"))
        ref = load_corpus(_require_file(args.ref, "reference corpus"))
        ref_by_id = {s.segment_id: s for s in ref}
        pairs = [(p, ref_by_id[p.segment_id]) for p in pred
                 if p.segment_id in ref_by_id
                 and p.consensus and ref_by_id[p.segment_id].consensus]
        if not pairs:
            raise ValidationError("no overlapping labeled segments")
        val = reference_validation(
            [p.consensus.primary for p, _ in pairs],
            [r.consensus.primary for _, r in pairs],
            [r.consensus.consensus_type for _, r in pairs])
        _print(args, f"n: {len(pairs)}")
        _print(args, f"cohen kappa: {val.cohen_kappa:.3f}")
        _print(args, f"accuracy: {100 * val.accuracy_overall:.1f}%")
        if val.accuracy_on_unanimous is not None:
            _print(args, f"accuracy on unanimous: "
                   f"{100 * val.accuracy_on_unanimous:.1f}%")
        if val.accuracy_on_disputed is not None:
            _print(args, f"accuracy on disputed: "
                   f"{100 * val.accuracy_on_disputed:.1f}%")
        record = {"n": len(pairs), "cohen_kappa": val.cohen_kappa,
                  "accuracy": val.accuracy_overall,
                  "accuracy_on_unanimous": val.accuracy_on_unanimous,
                  "accuracy_on_disputed": val.accuracy_on_disputed}
    else:  # ci
        if not 0 <= args.k <= args.n or args.n < 1:
            raise ValidationError("require 0 <= k <= n and n >= 1")
        lo, hi = wilson_interval(args.k, args.n, args.confidence,
                                 corrected=args.corrected)
        variant = "corrected" if args.corrected else "uncorrected"
        _print(args, f"{args.k}/{args.n} = {args.k / args.n:.4f}  "
               f"{100 * args.confidence:.0f}% Wilson ({variant}): "
               f"[{lo:.4f}, {hi:.4f}]")
        record = {"k": args.k, "n": args.n, "confidence": args.confidence,
                  "variant": variant, "lower": lo, "upper": hi}
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


# --------------------------------------------------------------- report


def cmd_report(args) -> int:
    segments = load_corpus(_require_file(args.corpus, "corpus"))
    instances = load_instances(_require_file(args.instances, "instances file"))
    meta = _company_table(args.company_meta)
    if args.exclude:
        from .reporter import sensitivity_exclude
        report = sensitivity_exclude(instances, segments, args.exclude,
                                     meta or None, args.ci)
    elif args.conservative:
        from .reporter import conservative_estimate
        report = conservative_estimate(instances, segments, meta or None,
                                       args.ci)
    else:
        report = build_report(instances, segments, meta or None, args.ci)
    paths = write_report(report, args.out)
    _print(args, (args.out and f"wrote report to {paths['text'].parent}"))
    if not args.quiet:
        from .reporter import render_text
        print(render_text(report), end="")
    return EXIT_OK


# ---------------------------------------------------------------- audit


_FIXTURE_FILES = ("alpha.html", "beta.html", "gamma.html", "companies.jsonl")

_SYNTH_UNIVERSAL = (
    ("Information We Collect",
     "We collect information you provide and usage data from your device."),
    ("How We Share Information",
     "We share information with service providers and partners under "
     "contract."),
    ("Security",
     "We protect data with encryption and access controls."),
    ("Your Choices",
     "You can opt out of marketing and manage your settings."),
)

_SYNTH_REGIONAL = (
    ("Your California Privacy Rights",
     "We sell your personal information to third parties. California "
     "residents may opt out of the sale of their personal information."),
    ("Notice to Illinois Residents",
     "We collect biometric identifiers, including facial geometry. You "
     "may submit a request to delete them."),
    ("Notice to EU Users",
     "You may lodge a complaint with your supervisory authority and "
     "exercise your rights under the GDPR."),
)


def generate_fixture(out_dir: Path, seed: int, n: int = 3) -> None:
    """Write n synthetic policies; the first always silos a California
    sale disclosure so the pipeline has at least one planted finding."""
    rng = random.Random(seed)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta_lines = []
    for i in range(n):
        name = f"synth{i:02d}"
        parts = [f"<h1>{name} Privacy Policy</h1>",
                 "<p>This policy covers all users of the service.</p>"]
        for title, body in rng.sample(_SYNTH_UNIVERSAL,
                                      rng.randint(2, len(_SYNTH_UNIVERSAL))):
            parts.append(f"<h2>{title}</h2>\n<p>{body}</p>")
        if i == 0:
            title, body = _SYNTH_REGIONAL[0]
            parts.append(f"<h2>{title}</h2>\n<p>{body}</p>")
        elif rng.random() < 0.5:
            title, body = rng.choice(_SYNTH_REGIONAL[1:])
            parts.append(f"<h2>{title}</h2>\n<p>{body}</p>")
        html = "<html><body>\n" + "\n".join(parts) + "\n</body></html>\n"
        (out_dir / f"{name}.html").write_text(html, encoding="utf-8")
        meta_lines.append(json.dumps({"name": name, "industry": "Social Media"},
                                     sort_keys=True))
    (out_dir / "companies.jsonl").write_text(
        "\n".join(meta_lines) + "\n", encoding="utf-8")


def _stage(manifest: dict, name: str, inputs: list[Path],
           outputs: list[Path], fn, quiet: bool) -> None:
    in_digests = {str(p): _sha256(p) for p in inputs}
    prior = manifest["stages"].get(name)
    if prior and prior["inputs"] == in_digests and all(
            Path(p).is_file() and _sha256(Path(p)) == d
            for p, d in prior["outputs"].items()):
        if not quiet:
            print(f"[{name}] up to date, skipped")
        return
    try:
        fn()
    except (ValidationError, CorpusError):
        raise
    except Exception as exc:
        raise StageError(f"stage {name} failed: {exc}") from exc
    manifest["stages"][name] = {
        "inputs": in_digests,
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    if not quiet:
        print(f"[{name}] done")


def _check_report(report_path: Path, expected_path: Path) -> list[str]:
    actual = json.loads(report_path.read_text(encoding="utf-8"))
    expected = json.loads(expected_path.read_text(encoding="utf-8"))
    mismatches = []
    for key, want in expected.items():
        got = actual.get(key)
        if got != want:
            mismatches.append(f"{key}: expected {want!r}, got {got!r}")
    return mismatches


def cmd_audit(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.in_dir:
        in_dir = _require_dir(args.in_dir, "input directory")
    else:
        in_dir = out_dir / "fixture"
        if args.seed is not None:
            generate_fixture(in_dir, args.seed)
        else:
            in_dir.mkdir(exist_ok=True)
            data_dir = resources.files("policyaudit.data") / "fixtures"
            for fname in _FIXTURE_FILES:
                target = in_dir / fname
                target.write_text((data_dir / fname).read_text(
                    encoding="utf-8"), encoding="utf-8")

    meta_path = Path(args.company_meta) if args.company_meta else \
        in_dir / "companies.jsonl"
    if not meta_path.is_file():
        meta_path = None
    if args.lexicon:
        _require_file(args.lexicon, "lexicon")

    manifest_path = out_dir / "manifest.json"
    manifest = {"stages": {}}
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        manifest.setdefault("stages", {})

    html_files = sorted(in_dir.glob("*.html"))
    if not html_files:
        raise ValidationError(f"no *.html files in {in_dir}")

    corpus_raw = out_dir / "corpus.segmented.jsonl"
    corpus_voted = out_dir / "corpus.voted.jsonl"
    instances_path = out_dir / "instances.jsonl"
    report_dir = out_dir / "report"

    meta = load_company_meta(meta_path) if meta_path else {}

    def do_segment():
        docs = ingest_directory(in_dir, meta or None)
        segments = []
        for doc in docs:
            segments.extend(segment_document(doc))
        save_corpus(segments, corpus_raw)

    stage_inputs = list(html_files) + ([meta_path] if meta_path else [])
    _stage(manifest, "segment", stage_inputs, [corpus_raw], do_segment,
           args.quiet)

    def do_classify_vote():
        segments = load_corpus(corpus_raw)
        if any(seg.consensus for seg in segments):
            # Pre-labeled corpus: keep the shipped consensus labels.
            save_corpus(segments, corpus_voted)
            return
        for annotator_id in ("lex-a", "lex-b", "lex-c"):
            segments = annotate_lexically(segments, annotator_id)
        segments = apply_votes(segments)
        save_corpus(segments, corpus_voted)

    _stage(manifest, "classify_vote", [corpus_raw], [corpus_voted],
           do_classify_vote, args.quiet)

    def do_detect():
        segments = load_corpus(corpus_voted)
        lexicon = load_lexicon(args.lexicon) if args.lexicon else None
        instances = find_siloed(segments, lexicon=lexicon,
                                company_meta=meta or None,
                                strict_clarity=args.strict_clarity)
        save_instances(instances, instances_path)

    detect_inputs = [corpus_voted] + \
        ([Path(args.lexicon)] if args.lexicon else [])
    _stage(manifest, "detect", detect_inputs, [instances_path], do_detect,
           args.quiet)

    def do_report():
        segments = load_corpus(corpus_voted)
        instances = load_instances(instances_path)
        report = build_report(instances, segments, meta or None, args.ci)
        write_report(report, report_dir)

    _stage(manifest, "report", [corpus_voted, instances_path],
           [report_dir / "report.txt", report_dir / "report.csv",
            report_dir / "report.json"], do_report, args.quiet)

    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")

    instances = load_instances(instances_path)
    _print(args, f"audit complete: {len(instances)} siloed instances; "
           f"artifacts in {out_dir}")

    if args.check:
        mismatches = _check_report(report_dir / "report.json",
                                   _require_file(args.check, "check file"))
        if mismatches:
            for m in mismatches:
                print(f"check mismatch: {m}", file=sys.stderr)
            return EXIT_CHECK
        _print(args, "all checks passed")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    # Global flags are accepted both before and after the subcommand; the
    # post-subcommand copies use SUPPRESS so they only override when given.
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="JSON file with default flag values")
    common.add_argument("--quiet", action="store_true",
                        default=argparse.SUPPRESS,
                        help="suppress progress output")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for synthetic fixture generation")

    parser = argparse.ArgumentParser(
        prog="policyaudit",
        description="Audit privacy policies for jurisdiction-siloed "
                    "disclosures.")
    parser.add_argument("--config", help="JSON file with default flag values")
    parser.add_argument("--quiet", action="store_true")
    parser.add_argument("--seed", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("fetch", help="download policy pages")
    p.add_argument("--urls", required=True,
                   help="file of URLs, optionally `name<TAB>url`")
    p.add_argument("--out", required=True)
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--parallel", type=int, default=4)
    p.set_defaults(func=cmd_fetch)

    p = add_parser("ingest", help="ingest pre-fetched HTML fixtures")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = add_parser("segment", help="segment policies into a corpus")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--company-meta")
    p.set_defaults(func=cmd_segment)

    p = add_parser("classify", help="run annotators over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--annotators", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = add_parser("vote", help="merge annotations into consensus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out")
    p.add_argument("--disputes")
    p.set_defaults(func=cmd_vote)

    p = add_parser("resolve", help="apply expert dispute resolutions")
    p.add_argument("--corpus", required=True)
    p.add_argument("--resolutions", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resolve)

    p = add_parser("detect", help="find siloed disclosures")
    p.add_argument("--corpus", required=True)
    p.add_argument("--company-meta")
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon")
    p.add_argument("--strict-clarity", action="store_true")
    p.add_argument("--categories",
                   help="comma-separated category filter")
    p.set_defaults(func=cmd_detect)

    p = add_parser("stats", help="agreement and interval statistics")
    stats_sub = p.add_subparsers(dest="stat", required=True)
    q = stats_sub.add_parser("agreement", parents=[common])
    q.add_argument("--corpus", required=True)
    q.set_defaults(func=cmd_stats)
    q = stats_sub.add_parser("validate", parents=[common])
    q.add_argument("--pred", required=True)
    q.add_argument("--ref", required=True)
    q.set_defaults(func=cmd_stats)
    q = stats_sub.add_parser("ci", parents=[common])
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--confidence", type=float, default=0.95)
    q.add_argument("--corrected", action="store_true")
    q.set_defaults(func=cmd_stats)

    p = add_parser("report", help="build the audit report")
    p.add_argument("--corpus", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--company-meta")
    p.add_argument("--out", required=True)
    p.add_argument("--exclude", help="rebuild with one company removed")
    p.add_argument("--conservative", action="store_true")
    p.add_argument("--ci", choices=("corrected", "uncorrected"),
                   default="uncorrected")
    p.set_defaults(func=cmd_report)

    p = add_parser("audit", help="run the whole pipeline")
    p.add_argument("--in", dest="in_dir",
                   help="policy HTML directory (default: bundled fixture)")
    p.add_argument("--out", required=True)
    p.add_argument("--company-meta")
    p.add_argument("--lexicon")
    p.add_argument("--strict-clarity", action="store_true")
    p.add_argument("--ci", choices=("corrected", "uncorrected"),
                   default="uncorrected")
    p.add_argument("--check",
                   help="JSON file of expected report values; mismatch "
                        "exits 3")
    p.set_defaults(func=cmd_audit)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv) -> list[str]:
    """Pull --config out of argv and splice its values in as defaults."""
    if "--config" not in argv:
        return list(argv)
    argv = list(argv)
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        return argv
    cfg_file = Path(path)
    if not cfg_file.is_file():
        raise ValidationError(f"config file not found: {cfg_file}")
    cfg = json.loads(cfg_file.read_text(encoding="utf-8"))
    if not isinstance(cfg, dict):
        raise ValidationError(f"config file {cfg_file} must hold an object")
    extra = []
    for key, value in cfg.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    # Config-supplied flags go right after the subcommand so explicit
    # command-line values still win (argparse keeps the last occurrence).
    del argv[idx:idx + 2]
    for i, token in enumerate(argv):
        if not token.startswith("-"):
            return argv[:i + 1] + extra + argv[i + 1:]
    return argv + extra


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if args.quiet:
            logging.basicConfig(level=logging.ERROR)
        else:
            logging.basicConfig(level=logging.WARNING)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CorpusError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
