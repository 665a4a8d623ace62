"""policyaudit: detect jurisdiction-siloed disclosures in privacy policies.

The pipeline runs fetch/ingest, heading-based segmentation, taxonomy
classification with consensus voting, siloed-disclosure detection, and
statistical reporting. Every stage is importable on its own; the CLI in
:mod:`policyaudit.cli` wires them together.
"""

from .corpus import (AnnotationEntry, AnnotationSet, Category, Company,
                     ConsensusLabel, CorpusError, PolicySegment,
                     SUBSTANTIVE_CATEGORIES, Violation, group_by_company,
                     load_corpus, save_corpus, validate_corpus)
from .fetcher import (ContentTypeError, FetchConfig, RawPolicyDocument,
                      UnreachableError, fetch_policy, ingest_directory,
                      ingest_fixture)
from .segmenter import (EmptyDocumentError, HeadingNode, JurisdictionScope,
                        LexiconEntry, load_lexicon, parse_heading_tree,
                        segment_document, tag_jurisdiction)
from .classifier import (Annotator, AnnotatorUnavailableError, BoundaryRule,
                         CueConfig, ResponseFormatError, annotate_lexically,
                         apply_votes, classify_lexical, classify_remote,
                         default_boundary_rules, resolve_disputes,
                         vote_consensus)
from .reliability import (agreement_report, cohens_kappa,
                          consensus_distribution, fleiss_kappa,
                          normal_quantile, pairwise_agreement,
                          reference_validation, wilson_interval)
from .detector import (EquivalenceVerdict, SiloedInstance, assign_tier,
                       classify_explicitness, equivalence_check, find_siloed,
                       load_company_meta, load_instances, save_instances)
from .reporter import (AuditReport, build_report, company_ranking,
                       conservative_estimate, coverage_comparison,
                       per_segment_rate, sensitivity_exclude, write_report)

__version__ = "0.1.0"

__all__ = [
    "AnnotationEntry", "AnnotationSet", "Annotator",
    "AnnotatorUnavailableError", "AuditReport", "BoundaryRule", "Category",
    "Company", "ConsensusLabel", "ContentTypeError", "CorpusError",
    "CueConfig", "EmptyDocumentError", "EquivalenceVerdict", "FetchConfig",
    "HeadingNode", "JurisdictionScope", "LexiconEntry", "PolicySegment",
    "RawPolicyDocument", "ResponseFormatError", "SUBSTANTIVE_CATEGORIES",
    "SiloedInstance", "UnreachableError", "Violation", "agreement_report",
    "annotate_lexically", "apply_votes", "assign_tier", "build_report",
    "classify_explicitness", "classify_lexical", "classify_remote",
    "cohens_kappa", "company_ranking", "conservative_estimate",
    "consensus_distribution", "coverage_comparison", "default_boundary_rules",
    "equivalence_check", "fetch_policy", "find_siloed", "fleiss_kappa",
    "group_by_company", "ingest_directory", "ingest_fixture",
    "load_company_meta", "load_corpus", "load_instances", "load_lexicon",
    "normal_quantile", "pairwise_agreement", "parse_heading_tree",
    "per_segment_rate", "reference_validation", "resolve_disputes",
    "save_corpus", "save_instances", "segment_document",
    "sensitivity_exclude", "tag_jurisdiction", "validate_corpus",
    "vote_consensus", "wilson_interval", "write_report",
]
