import pytest

from policyaudit.corpus import (AnnotationEntry, AnnotationSet, Category,
                                Company, ConsensusLabel, PolicySegment)


def make_segment(segment_id="seg-1", company="Acme", heading=("Policy",),
                 text="We collect information you provide.",
                 annotations=(), consensus=None, flags=(), industry="",
                 **company_kwargs):
    if isinstance(company, str):
        company = Company(name=company, industry=industry, **company_kwargs)
    return PolicySegment(
        segment_id=segment_id, company=company,
        heading_path=tuple(heading), text=text,
        annotations=AnnotationSet(tuple(annotations)),
        consensus=consensus, flags=tuple(flags))


def make_annotations(*primaries, secondaries=None):
    entries = []
    for i, p in enumerate(primaries):
        sec = tuple(secondaries[i]) if secondaries else ()
        entries.append(AnnotationEntry(annotator_id=f"ann-{i}", primary=p,
                                       secondary=sec))
    return tuple(entries)


def consensus(primary, secondary=(), consensus_type="unanimous"):
    return ConsensusLabel(primary=primary, secondary=tuple(secondary),
                          consensus_type=consensus_type)


@pytest.fixture
def acme():
    return Company(name="Acme", industry="Social Media")
