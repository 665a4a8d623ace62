import pytest

from policyaudit.corpus import Category, Company
from policyaudit.detector import (EquivalenceVerdict, assign_tier,
                                  classify_explicitness, equivalence_check,
                                  find_siloed, load_company_meta,
                                  load_instances, save_instances,
                                  SiloedInstance)
from policyaudit.segmenter import JurisdictionScope

from conftest import consensus, make_segment


CA = ("Policy", "Your California Privacy Rights")
IL = ("Policy", "Notice to Illinois Residents")
EU = ("Policy", "Notice to EU Users")
BODY = ("Policy", "How We Use Information")


def regional(text, heading=CA, cat=Category.SALE_SHARING, sec=(),
             segment_id="r1", company="Acme"):
    return make_segment(segment_id, company=company, heading=heading,
                        text=text, consensus=consensus(cat, sec))


def universal(text, cat, sec=(), segment_id="u1", company="Acme"):
    return make_segment(segment_id, company=company, heading=BODY,
                        text=text, consensus=consensus(cat, sec))


# --------------------------------------------------------- equivalence


def test_practice_identity_failure():
    v = equivalence_check(
        regional("We sell your personal information."),
        [universal("We share data with advertising partners.",
                   Category.THIRD_PARTY)],
        Category.SALE_SHARING)
    assert not v.equivalent
    assert v.failed_criterion == "practice_identity"


def test_practice_identity_satisfied_by_secondary_label():
    v = equivalence_check(
        regional("We sell your personal information."),
        [universal("We share and sell data to partners.",
                   Category.THIRD_PARTY, sec=(Category.SALE_SHARING,))],
        Category.SALE_SHARING)
    assert v.equivalent


def test_specificity_failure():
    v = equivalence_check(
        regional("We collect biometric identifiers including facial "
                 "geometry.", heading=IL, cat=Category.SENSITIVE_DATA),
        [universal("We collect sensitive personal information.",
                   Category.SENSITIVE_DATA)],
        Category.SENSITIVE_DATA)
    assert not v.equivalent
    assert v.failed_criterion == "specificity"


def test_specificity_satisfied_when_classes_match():
    v = equivalence_check(
        regional("We collect precise geolocation data.", heading=CA,
                 cat=Category.SENSITIVE_DATA),
        [universal("We collect precise geolocation from your device.",
                   Category.SENSITIVE_DATA)],
        Category.SENSITIVE_DATA)
    assert v.equivalent
    assert v.matched_universal_segment == "u1"


def test_hedged_universal_language_counts():
    v = equivalence_check(
        regional("We sell your personal information."),
        [universal("We may sell certain identifiers to partners.",
                   Category.SALE_SHARING)],
        Category.SALE_SHARING)
    assert v.equivalent


def test_euphemism_goes_to_review_queue():
    euphemistic = universal(
        "We may monetize insights about you and signals derived from "
        "your activity, which our partners may purchase.",
        Category.SALE_SHARING)
    v = equivalence_check(regional("We sell your personal information."),
                          [euphemistic], Category.SALE_SHARING)
    assert v.equivalent and v.needs_review
    strict = equivalence_check(regional("We sell your personal "
                                        "information."),
                               [euphemistic], Category.SALE_SHARING,
                               strict_clarity=True)
    assert not strict.equivalent
    assert strict.failed_criterion == "semantic_clarity"
    assert strict.needs_review


def test_equivalence_requires_substantive_category():
    with pytest.raises(ValueError):
        equivalence_check(regional("x", cat=Category.TRACKING), [],
                          Category.TRACKING)


# ------------------------------------------------------ worked examples


def test_worked_example_sale_vs_sharing():
    ca = regional("We sell your personal information to third parties "
                  "for monetary consideration.", cat=Category.SALE_SHARING,
                  sec=(Category.THIRD_PARTY,))
    body = universal("We may share your information with our advertising "
                     "partners to deliver relevant ads.",
                     Category.THIRD_PARTY)
    v = equivalence_check(ca, [body], Category.SALE_SHARING)
    assert not v.equivalent
    instances = find_siloed([ca, body])
    assert [(i.category, i.jurisdiction.label) for i in instances] == \
        [(Category.SALE_SHARING, "California")]


def test_worked_example_biometric_collection():
    il = regional("We collect biometric identifiers, including facial "
                  "geometry extracted from photographs you upload.",
                  heading=IL, cat=Category.SENSITIVE_DATA)
    body = universal("We use facial recognition technology to help you "
                     "tag friends in photos.", Category.SENSITIVE_DATA)
    v = equivalence_check(il, [body], Category.SENSITIVE_DATA)
    assert not v.equivalent
    assert v.failed_criterion == "specificity"
    instances = find_siloed([il, body])
    assert [(i.category, i.jurisdiction.label) for i in instances] == \
        [(Category.SENSITIVE_DATA, "Illinois")]


def test_worked_example_automated_decisions():
    eu = regional("You have the right not to be subject to decisions "
                  "based solely on automated processing, including "
                  "profiling, which produces legal effects concerning "
                  "you.", heading=EU, cat=Category.AUTOMATED_DECISIONS)
    body = universal("We use automated systems to make decisions about "
                     "your eligibility for certain products and "
                     "services.", Category.AUTOMATED_DECISIONS)
    v = equivalence_check(eu, [body], Category.AUTOMATED_DECISIONS)
    assert v.equivalent
    assert find_siloed([eu, body]) == []


# ----------------------------------------------------------- detection


def test_dual_disclosure_is_never_flagged():
    segs = [
        regional("We sell your data."),
        universal("We sell identifiers to advertisers.",
                  Category.SALE_SHARING),
    ]
    assert find_siloed(segs) == []


def test_one_instance_per_category_and_jurisdiction():
    segs = [
        regional("We sell your data.", segment_id="r1"),
        regional("We also sell your browsing history.", segment_id="r2"),
        regional("We sell data about Illinois residents.", heading=IL,
                 segment_id="r3"),
    ]
    instances = find_siloed(segs)
    keys = [(i.category, i.jurisdiction.label) for i in instances]
    assert keys == [(Category.SALE_SHARING, "California"),
                    (Category.SALE_SHARING, "Illinois")]
    ca = instances[0]
    assert ca.contributing_segment_ids == ("r1", "r2")
    assert len(ca.evidence) == 2


def test_unlabeled_regional_segment_is_skipped():
    seg = make_segment("r1", heading=CA, text="We sell data.")
    assert find_siloed([seg]) == []


def test_output_is_order_independent():
    segs = [
        regional("We sell your data.", segment_id="r1"),
        universal("We collect information you provide.",
                  Category.FIRST_PARTY, segment_id="u1"),
        regional("Illinois biometric notice: we collect biometric "
                 "identifiers.", heading=IL, cat=Category.SENSITIVE_DATA,
                 segment_id="r2"),
    ]
    assert find_siloed(segs) == find_siloed(list(reversed(segs)))


def test_category_filter():
    segs = [regional("We sell your data.")]
    assert find_siloed(segs, categories=[Category.FIRST_PARTY]) == []
    assert len(find_siloed(segs, categories=[Category.SALE_SHARING])) == 1


def test_explicitness():
    explicit = [regional("We sell your personal information.")]
    implied = [regional("You have the right to opt out of the sale of "
                        "your personal information.")]
    assert find_siloed(explicit)[0].explicitness == "explicit"
    assert find_siloed(implied)[0].explicitness == "implied"


def test_intl_specific_special_scope():
    seg = make_segment(
        "r1", heading=("Policy", "International Transfers"),
        text="We transfer data under standard contractual clauses and "
             "we sell some identifiers abroad.",
        consensus=consensus(Category.INTL_SPECIFIC,
                            (Category.SALE_SHARING,)))
    instances = find_siloed([seg])
    assert len(instances) == 1
    assert instances[0].scope_class == "international"
    assert instances[0].jurisdiction.kind == "children_or_transfer_special"


# ---------------------------------------------------------------- tiers


def _instance(cat=Category.SALE_SHARING, scope_class="regional_us",
              foundational=False):
    return SiloedInstance(
        company="Acme", category=cat, regional_segment_id="r1",
        jurisdiction=JurisdictionScope("us_state", "California"),
        scope_class=scope_class, explicitness="explicit",
        tier="weakly_inferred", evidence=("x",),
        foundational_collection=foundational)


def test_tier_verified():
    company = Company(name="Acme", external_verification=True,
                      verification_citation="regulatory settlement")
    assert assign_tier(_instance(), company) == "verified"


def test_tier_strongly_inferred():
    platform = Company(name="Acme", global_platform_infrastructure=True)
    assert assign_tier(_instance(), platform) == "strongly_inferred"
    plain = Company(name="Acme")
    transfer = _instance(cat=Category.THIRD_PARTY,
                         scope_class="international")
    assert assign_tier(transfer, plain) == "strongly_inferred"


def test_tier_moderately_inferred():
    plain = Company(name="Acme")
    assert assign_tier(_instance(cat=Category.SENSITIVE_DATA), plain) == \
        "moderately_inferred"
    assert assign_tier(_instance(cat=Category.AUTOMATED_DECISIONS),
                       plain) == "moderately_inferred"
    foundational = _instance(cat=Category.FIRST_PARTY, foundational=True)
    assert assign_tier(foundational, plain) == "moderately_inferred"


def test_tier_weakly_inferred():
    plain = Company(name="Acme")
    assert assign_tier(_instance(), plain) == "weakly_inferred"
    assert assign_tier(_instance(cat=Category.FIRST_PARTY), plain) == \
        "weakly_inferred"


def test_tier_ladder_order():
    both = Company(name="Acme", external_verification=True,
                   verification_citation="filing",
                   global_platform_infrastructure=True)
    assert assign_tier(_instance(cat=Category.SENSITIVE_DATA), both) == \
        "verified"


# ------------------------------------------------------------ round trip


def test_instances_round_trip(tmp_path):
    segs = [regional("We sell your personal information.")]
    instances = find_siloed(segs)
    path = tmp_path / "instances.jsonl"
    save_instances(instances, path)
    assert load_instances(path) == instances


def test_load_company_meta(tmp_path):
    p = tmp_path / "companies.jsonl"
    p.write_text(
        '{"name": "Acme", "industry": "Gaming", '
        '"external_verification": true, '
        '"verification_citation": "consent decree"}\n'
        '{"name": "Beta", "global_platform_infrastructure": true}\n')
    meta = load_company_meta(p)
    assert meta["Acme"].external_verification
    assert meta["Beta"].global_platform_infrastructure
    assert meta["Acme"].industry == "Gaming"


def test_company_meta_feeds_tier():
    segs = [regional("We sell your personal information.")]
    meta = {"Acme": Company(name="Acme", external_verification=True,
                            verification_citation="settlement")}
    instances = find_siloed(segs, company_meta=meta)
    assert instances[0].tier == "verified"
