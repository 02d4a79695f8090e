"""Writes fixtures/records_mini.jsonl. Gold spans are located with str.find."""
import json
import sys
from pathlib import Path


def mention(section, text, surface, node_id, negated=False, start=0):
    b = text.index(surface, start)
    return {"section": section, "span": {"start": b, "end": b + len(surface)}, "surface": surface,
            "node_id": node_id, "negated": negated}


def profile(age, weight, allergies=(), meds=(), comorbid=()):
    return {"age_months": age, "weight_kg": weight, "allergies": list(allergies),
            "current_medications": list(meds), "comorbidities": list(comorbid)}


def r1():
    cc = "Acute swelling near tooth #85."
    ex = "Pain on percussion; no fever."
    rad = "Periapical radiolucency at the root apex."
    ents = [
        mention("chief_complaint", cc, "swelling", "swelling"),
        mention("chief_complaint", cc, "#85", "tooth_85"),
        mention("exam_notes", ex, "Pain", "pain"),
        mention("exam_notes", ex, "fever", "fever", True),
        mention("radiographic_report", rad, "Periapical radiolucency", "periapical_radiolucency"),
    ]
    gold = {"entities": ents, "diagnosis": "periapical_abscess",
            "prescription": {"drug": "AMX", "dose_mg_per_kg_day": 60.0, "frequency_per_day": 2,
                             "duration_days": 7, "rationale": "reference prescription",
                             "evidence_node_ids": ["periapical_abscess", "AMX", "ageband_2_12y"]},
            "evidence_node_ids": ["AMX", "ageband_2_12y", "gp_abscess", "periapical_abscess"],
            "reference_summary": "Diagnosis: periapical abscess at primary mandibular right second molar, "
                                 "moderate. Findings: swelling, pain, periapical radiolucency. Recommendation: "
                                 "amoxicillin 60 mg/kg/day in 2 doses daily for 7 days."}
    return {"record_id": "R1", "patient_id": "P1", "chief_complaint": cc, "exam_notes": ex,
            "radiographic_report": rad, "profile": profile(60, 18.0), "gold": gold}


def negated_only():
    cc = "No swelling, no pain."
    ents = [mention("chief_complaint", cc, "swelling", "swelling", True),
            mention("chief_complaint", cc, "pain", "pain", True)]
    return {"record_id": "R2", "patient_id": "P2", "chief_complaint": cc, "exam_notes": "",
            "radiographic_report": "", "profile": profile(84, 22.0),
            "gold": {"entities": ents, "diagnosis": "", "prescription": None, "evidence_node_ids": [],
                     "reference_summary": "Diagnosis: undetermined. Findings: none. No safe antibiotic option; "
                                          "top reason: no diagnosis."}}


def infant():
    rec = r1()
    rec.update(record_id="R3", patient_id="P3", profile=profile(6, 7.5))
    del rec["gold"]
    return rec


def all_conflict():
    rec = r1()
    rec.update(record_id="R4", patient_id="P4", profile=profile(140, 120.0, ["penicillin_allergy"]))
    del rec["gold"]
    return rec


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "fixtures"
    recs = [r1(), negated_only(), infant(), all_conflict()]
    (out / "records_mini.jsonl").write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in recs))
