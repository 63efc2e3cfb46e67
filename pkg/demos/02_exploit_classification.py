"""Exploit classification without a live model endpoint.

Shows the deterministic pieces of the classification stage: the 15-class
taxonomy, CVSS-based required-privilege extraction, the prompt assembled
for the language model, the retry/override logic against a scripted
endpoint, and the weighted evaluation metrics.
"""
from pathlib import Path

from chainplan import all_classes, class_name, load_records, parse_class_name
from chainplan.classifier import (
    ClassificationOutcome,
    build_prompt,
    classify_llm,
    default_few_shots,
    evaluate,
    extract_required_privilege,
)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

print("the taxonomy:", ", ".join(class_name(c) for c in all_classes()))

records = load_records(FIXTURES / "motivating_catalog.json")

# CVSS 3.x vectors carry the privileges an exploit requires
print("\nrequired privilege from CVSS vectors:")
for record in records:
    level = extract_required_privilege(record.cvss_vectors)
    print(f"  {record.id}: {level.name if level else 'not stated'}")

# the prompt is byte-deterministic: same record, same bytes
shots = default_few_shots()
bundle = build_prompt(records[0], shots)
print(f"\nprompt for {records[0].id!r}: system text {len(bundle.system_text)} chars, "
      f"{len(bundle.few_shot)} few-shot examples")
print("--- target section ---")
print(bundle.target_text[:300], "...")


class ScriptedEndpoint:
    """Stands in for a chat-completions endpoint; replays canned replies."""

    model = "scripted"

    def __init__(self, replies):
        self.replies = list(replies)

    def complete(self, messages):
        return self.replies.pop(0)


# a sloppy first reply is retried once with a corrective instruction
client = ScriptedEndpoint(["I think it is RCE_TCP_N_L.", "RCE_TCP_N_L"])
outcome = classify_llm(records[0], client, shots)
print(f"\nclassified {outcome.record_id!r} -> {class_name(outcome.predicted)} "
      f"(provenance: {outcome.provenance})")

# evaluation: one acquired-privilege mistake on a three-record set
truth = [(r.id, r.exploit_class) for r in records]
predictions = [
    ClassificationOutcome(records[0].id, records[0].exploit_class, "manual"),
    ClassificationOutcome(records[1].id, parse_class_name("RCE_TCP_N_R"), "manual"),
    ClassificationOutcome(records[2].id, records[2].exploit_class, "manual"),
]
report = evaluate(predictions, truth)
print("\nweighted metrics with one acquired-privilege error:")
for attr in ("type", "protocol", "required", "acquired", "overall"):
    metrics = getattr(report, attr)
    print(f"  {attr:<9} precision {metrics.precision:.3f}  "
          f"recall {metrics.recall:.3f}  f1 {metrics.f1:.3f}")
