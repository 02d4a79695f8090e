#!/usr/bin/env python3
"""Builds fixtures/kg_mini.jsonl and fixtures/kg_fixture.jsonl.

All dose values are illustrative engineering data, not clinical guidance."""

import json
import sys
from pathlib import Path


def node(id, kind, name, synonyms=(), **attrs):
    return {"node": {"id": id, "kind": kind, "name": name, "synonyms": list(synonyms), "attrs": attrs}}


def edge(src, rel, dst, **attrs):
    return {"edge": {"src": src, "rel": rel, "dst": dst, "attrs": attrs}}


def dose(drug, band, lo, hi, cap, fmin, fmax, dmin, dmax):
    return edge(drug, "has_dose_rule", band, min_mg_per_kg_day=lo, max_mg_per_kg_day=hi,
                abs_max_mg_day=cap, freq_min_per_day=fmin, freq_max_per_day=fmax,
                duration_min_days=dmin, duration_max_days=dmax)


SOURCE = "fixture-illustrative"


def mini():
    recs = [
        node("AMX", "Drug", "amoxicillin", ["amoxil"]),
        node("AMC", "Drug", "amoxicillin-clavulanate", ["augmentin", "co-amoxiclav"]),
        node("CLI", "Drug", "clindamycin", ["cleocin"]),
        node("AZI", "Drug", "azithromycin", ["zithromax"]),
        node("penicillins", "DrugClass", "penicillins", ["penicillin class"]),
        node("lincosamides", "DrugClass", "lincosamides"),
        node("macrolides", "DrugClass", "macrolides"),
        node("acute_pulpitis", "Condition", "acute pulpitis", ["irreversible pulpitis"], category="dental"),
        node("periapical_abscess", "Condition", "periapical abscess", ["dental abscess", "apical abscess"], category="dental"),
        node("swelling", "Symptom", "swelling", ["edema"]),
        node("pain", "Symptom", "pain", ["toothache"]),
        node("fever", "Symptom", "fever", ["pyrexia"]),
        node("facial_swelling", "Symptom", "facial swelling"),
        node("periapical_radiolucency", "Symptom", "periapical radiolucency", ["periapical lucency"], modality="radiographic"),
        node("thermal_sensitivity", "Symptom", "thermal sensitivity", ["cold sensitivity"]),
        node("tooth_85", "ToothSite", "primary mandibular right second molar", fdi=85),
        node("tooth_84", "ToothSite", "primary mandibular right first molar", fdi=84),
        node("tooth_75", "ToothSite", "primary mandibular left second molar", fdi=75),
        node("penicillin_allergy", "AllergyClass", "penicillin allergy"),
        node("macrolide_allergy", "AllergyClass", "macrolide allergy"),
        node("ageband_2_12y", "AgeBand", "age 2 to 12 years", min_months=24, max_months=143),
        node("gp_abscess", "GuidelinePassage", "odontogenic abscess guideline",
             text="Periapical abscess in children with swelling, facial swelling, fever or periapical "
                  "radiolucency: amoxicillin is the first-line antibiotic; clindamycin is the alternative "
                  "for penicillin allergy.", source=SOURCE),
        node("gp_pulpitis", "GuidelinePassage", "acute pulpitis guideline",
             text="Acute pulpitis with pain, thermal sensitivity and spreading swelling: amoxicillin is "
                  "first-line; azithromycin or amoxicillin-clavulanate are alternatives.", source=SOURCE),
    ]
    recs += [
        edge("AMX", "member_of", "penicillins"),
        edge("AMC", "member_of", "penicillins"),
        edge("CLI", "member_of", "lincosamides"),
        edge("AZI", "member_of", "macrolides"),
        edge("penicillins", "cross_reactive", "penicillin_allergy"),
        edge("macrolides", "cross_reactive", "macrolide_allergy"),
        dose("AMX", "ageband_2_12y", 40, 90, 3000, 2, 3, 5, 7),
        dose("AMC", "ageband_2_12y", 25, 45, 1750, 2, 2, 5, 7),
        dose("CLI", "ageband_2_12y", 8, 25, 1800, 3, 4, 5, 7),
        dose("AZI", "ageband_2_12y", 10, 12, 500, 1, 1, 3, 5),
        edge("AMX", "treats", "periapical_abscess", line="first"),
        edge("CLI", "treats", "periapical_abscess", line="second"),
        edge("AMX", "treats", "acute_pulpitis", line="first"),
        edge("AZI", "treats", "acute_pulpitis", line="second"),
        edge("AMC", "treats", "acute_pulpitis", line="second"),
        edge("CLI", "interacts_with", "AZI", severity=0.3),
        edge("AMC", "interacts_with", "CLI", severity=0.9),
        edge("swelling", "indicates", "acute_pulpitis"),
        edge("swelling", "indicates", "periapical_abscess"),
        edge("pain", "indicates", "acute_pulpitis"),
        edge("pain", "indicates", "periapical_abscess"),
        edge("thermal_sensitivity", "indicates", "acute_pulpitis"),
        edge("facial_swelling", "indicates", "periapical_abscess"),
        edge("fever", "indicates", "periapical_abscess"),
        edge("periapical_radiolucency", "indicates", "periapical_abscess"),
        edge("gp_abscess", "supports", "periapical_abscess"),
        edge("gp_abscess", "supports", "AMX"),
        edge("gp_abscess", "supports", "CLI"),
        edge("gp_pulpitis", "supports", "acute_pulpitis"),
        edge("gp_pulpitis", "supports", "AMX"),
    ]
    return recs


TEETH = {
    5: "maxillary right", 6: "maxillary left", 7: "mandibular left", 8: "mandibular right",
}
POSITIONS = {1: "central incisor", 2: "lateral incisor", 3: "canine", 4: "first molar", 5: "second molar"}
PERMANENT = {1: "maxillary right", 2: "maxillary left", 3: "mandibular left", 4: "mandibular right"}


def full():
    recs = [r for r in mini() if "node" not in r or r["node"]["kind"] != "ToothSite"]
    mini_bands = [r for r in recs if "edge" in r and r["edge"]["rel"] == "has_dose_rule"]
    recs = [r for r in recs if r not in mini_bands]
    recs += [
        node("PEN", "Drug", "penicillin v", ["phenoxymethylpenicillin", "pen vk"]),
        node("CEX", "Drug", "cephalexin", ["keflex"]),
        node("MTZ", "Drug", "metronidazole", ["flagyl"]),
        node("ERY", "Drug", "erythromycin"),
        node("CLR", "Drug", "clarithromycin"),
        node("DOX", "Drug", "doxycycline"),
        node("cephalosporins", "DrugClass", "cephalosporins"),
        node("nitroimidazoles", "DrugClass", "nitroimidazoles"),
        node("tetracyclines", "DrugClass", "tetracyclines"),
        node("cephalosporin_allergy", "AllergyClass", "cephalosporin allergy"),
        node("lincosamide_allergy", "AllergyClass", "lincosamide allergy"),
        node("nitroimidazole_allergy", "AllergyClass", "nitroimidazole allergy"),
        node("tetracycline_allergy", "AllergyClass", "tetracycline allergy"),
        node("cellulitis", "Condition", "facial cellulitis", ["odontogenic cellulitis", "cellulitis"], category="dental"),
        node("pericoronitis", "Condition", "pericoronitis", category="dental"),
        node("early_childhood_caries", "Condition", "early childhood caries", ["nursing caries"], category="dental"),
        node("asthma", "Condition", "asthma", category="comorbidity"),
        node("congenital_heart_defect", "Condition", "congenital heart defect", ["cardiac defect"], category="comorbidity"),
        node("long_qt_syndrome", "Condition", "long qt syndrome", category="comorbidity"),
        node("hepatic_impairment", "Condition", "hepatic impairment", category="comorbidity"),
        node("myasthenia_gravis", "Condition", "myasthenia gravis", category="comorbidity"),
        node("colitis_history", "Condition", "history of antibiotic colitis", ["pseudomembranous colitis"], category="comorbidity"),
        node("trismus", "Symptom", "trismus", ["limited mouth opening"]),
        node("lymphadenopathy", "Symptom", "lymphadenopathy", ["swollen lymph nodes"]),
        node("tooth_mobility", "Symptom", "tooth mobility", ["mobile tooth"]),
        node("sinus_tract", "Symptom", "sinus tract", ["parulis", "gum boil"]),
        node("spontaneous_pain", "Symptom", "spontaneous pain", ["night pain"]),
        node("pus", "Symptom", "purulent discharge", ["pus"]),
        node("deep_caries", "Symptom", "deep caries"),
        node("pdl_widening", "Symptom", "periodontal ligament widening", ["pdl widening"], modality="radiographic"),
        node("furcation_radiolucency", "Symptom", "furcation radiolucency", ["furcation involvement"], modality="radiographic"),
        node("operculum_inflammation", "Symptom", "operculum inflammation", ["inflamed operculum"]),
        node("diffuse_swelling", "Symptom", "diffuse swelling", ["spreading swelling"]),
        node("cavitation", "Symptom", "enamel cavitation", ["cavitated lesions", "white spot lesions"]),
        node("ageband_0_23m", "AgeBand", "age 0 to 23 months", min_months=0, max_months=23),
        node("ageband_12_18y", "AgeBand", "age 12 to 18 years", min_months=144, max_months=216),
        node("ageband_8_18y", "AgeBand", "age 8 to 18 years", min_months=96, max_months=216),
        node("gp_cellulitis", "GuidelinePassage", "facial cellulitis guideline",
             text="Facial cellulitis with diffuse swelling, trismus, lymphadenopathy or fever in children: "
                  "amoxicillin-clavulanate is first-line; clindamycin or cephalexin are alternatives.", source=SOURCE),
        node("gp_pericoronitis", "GuidelinePassage", "pericoronitis guideline",
             text="Pericoronitis with operculum inflammation, pain and trismus: amoxicillin or metronidazole "
                  "are first-line; clindamycin is the alternative.", source=SOURCE),
        node("gp_caries", "GuidelinePassage", "early childhood caries guideline",
             text="Early childhood caries with deep caries and pain is managed restoratively; antibiotics are "
                  "reserved for spreading infection, with amoxicillin first-line.", source=SOURCE),
        node("gp_penicillin_allergy", "GuidelinePassage", "penicillin allergy guideline",
             text="Children with penicillin allergy must not receive amoxicillin, penicillin v or "
                  "amoxicillin-clavulanate; clindamycin or azithromycin are used instead.", source=SOURCE),
        node("gp_qt", "GuidelinePassage", "macrolide cardiac guideline",
             text="Macrolides such as azithromycin, erythromycin and clarithromycin are contraindicated in "
                  "long qt syndrome.", source=SOURCE),
        node("gp_tetracycline_age", "GuidelinePassage", "tetracycline age guideline",
             text="Doxycycline and other tetracyclines are avoided in children younger than 8 years because "
                  "of tooth discoloration.", source=SOURCE),
    ]
    for q, side in TEETH.items():
        for p, pos in POSITIONS.items():
            recs.append(node(f"tooth_{q}{p}", "ToothSite", f"primary {side} {pos}", fdi=q * 10 + p))
    for q, side in PERMANENT.items():
        recs.append(node(f"tooth_{q}6", "ToothSite", f"permanent {side} first molar", fdi=q * 10 + 6))
    recs += [
        edge("PEN", "member_of", "penicillins"),
        edge("CEX", "member_of", "cephalosporins"),
        edge("MTZ", "member_of", "nitroimidazoles"),
        edge("ERY", "member_of", "macrolides"),
        edge("CLR", "member_of", "macrolides"),
        edge("DOX", "member_of", "tetracyclines"),
        edge("cephalosporins", "cross_reactive", "cephalosporin_allergy"),
        edge("cephalosporins", "cross_reactive", "penicillin_allergy"),
        edge("lincosamides", "cross_reactive", "lincosamide_allergy"),
        edge("nitroimidazoles", "cross_reactive", "nitroimidazole_allergy"),
        edge("tetracyclines", "cross_reactive", "tetracycline_allergy"),
    ]
    bands = ["ageband_2_12y", "ageband_12_18y"]
    table = {
        "AMX": [(40, 90, 3000, 2, 3, 5, 7), (25, 50, 3000, 2, 3, 5, 7)],
        "AMC": [(25, 45, 1750, 2, 2, 5, 7), (25, 45, 1750, 2, 3, 5, 7)],
        "PEN": [(25, 50, 2000, 3, 4, 5, 7), (25, 50, 2000, 3, 4, 5, 7)],
        "CLI": [(8, 25, 1800, 3, 4, 5, 7), (8, 25, 1800, 3, 4, 5, 7)],
        "AZI": [(10, 12, 500, 1, 1, 3, 5), (10, 12, 500, 1, 1, 3, 5)],
        "CEX": [(25, 50, 4000, 2, 4, 5, 7), (25, 50, 4000, 2, 4, 5, 7)],
        "MTZ": [(15, 35, 2000, 3, 3, 5, 7), (15, 35, 2000, 3, 3, 5, 7)],
        "ERY": [(30, 50, 2000, 3, 4, 5, 7), (30, 50, 2000, 3, 4, 5, 7)],
        "CLR": [(15, 15, 1000, 2, 2, 5, 7), (15, 15, 1000, 2, 2, 5, 7)],
    }
    for drug, rows in table.items():
        for band, row in zip(bands, rows):
            recs.append(dose(drug, band, *row))
    recs.append(dose("DOX", "ageband_8_18y", 2.2, 4.4, 200, 1, 2, 5, 7))
    recs += [
        edge("PEN", "treats", "periapical_abscess", line="first"),
        edge("AMC", "treats", "cellulitis", line="first"),
        edge("CLI", "treats", "cellulitis", line="second"),
        edge("CEX", "treats", "cellulitis", line="second"),
        edge("AMX", "treats", "pericoronitis", line="first"),
        edge("MTZ", "treats", "pericoronitis", line="first"),
        edge("CLI", "treats", "pericoronitis", line="second"),
        edge("AMX", "treats", "early_childhood_caries", line="first"),
        edge("ERY", "treats", "early_childhood_caries", line="second"),
        edge("DOX", "treats", "pericoronitis", line="second"),
        edge("CLR", "treats", "acute_pulpitis", line="second"),
        edge("MTZ", "interacts_with", "ERY", severity=0.2),
        edge("CLR", "interacts_with", "ERY", severity=0.5),
        edge("DOX", "interacts_with", "AMX", severity=0.4),
        edge("AZI", "contraindicated_in", "long_qt_syndrome"),
        edge("ERY", "contraindicated_in", "long_qt_syndrome"),
        edge("CLR", "contraindicated_in", "long_qt_syndrome"),
        edge("AZI", "contraindicated_in", "myasthenia_gravis"),
        edge("MTZ", "contraindicated_in", "hepatic_impairment"),
        edge("CLI", "contraindicated_in", "colitis_history"),
        edge("ERY", "contraindicated_in", "hepatic_impairment"),
        edge("diffuse_swelling", "indicates", "cellulitis"),
        edge("trismus", "indicates", "cellulitis"),
        edge("trismus", "indicates", "pericoronitis"),
        edge("lymphadenopathy", "indicates", "cellulitis"),
        edge("fever", "indicates", "cellulitis"),
        edge("facial_swelling", "indicates", "cellulitis"),
        edge("tooth_mobility", "indicates", "periapical_abscess"),
        edge("sinus_tract", "indicates", "periapical_abscess"),
        edge("pus", "indicates", "periapical_abscess"),
        edge("pus", "indicates", "pericoronitis"),
        edge("pdl_widening", "indicates", "periapical_abscess"),
        edge("furcation_radiolucency", "indicates", "periapical_abscess"),
        edge("spontaneous_pain", "indicates", "acute_pulpitis"),
        edge("deep_caries", "indicates", "acute_pulpitis"),
        edge("deep_caries", "indicates", "early_childhood_caries"),
        edge("operculum_inflammation", "indicates", "pericoronitis"),
        edge("pain", "indicates", "pericoronitis"),
        edge("pain", "indicates", "early_childhood_caries"),
        edge("cavitation", "indicates", "early_childhood_caries"),
        edge("early_childhood_caries", "located_at", "tooth_51"),
        edge("early_childhood_caries", "located_at", "tooth_61"),
        edge("pericoronitis", "located_at", "tooth_36"),
        edge("pericoronitis", "located_at", "tooth_46"),
        edge("gp_cellulitis", "supports", "cellulitis"),
        edge("gp_cellulitis", "supports", "AMC"),
        edge("gp_pericoronitis", "supports", "pericoronitis"),
        edge("gp_pericoronitis", "supports", "MTZ"),
        edge("gp_caries", "supports", "early_childhood_caries"),
        edge("gp_penicillin_allergy", "supports", "CLI"),
        edge("gp_penicillin_allergy", "supports", "AZI"),
        edge("gp_qt", "supports", "AZI"),
        edge("gp_tetracycline_age", "supports", "DOX"),
    ]
    return recs


def write(path: Path, recs):
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in recs))


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "fixtures"
    write(out / "kg_mini.jsonl", mini())
    write(out / "kg_fixture.jsonl", full())
