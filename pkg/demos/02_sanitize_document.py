"""Sanitizing one document and reading its privacy accounting.

A tenth of the budget buys noisy per-kind counts; the rest is shared between
kinds in proportion to sensitivity, weight and noisy count. Mentions beyond
the noisy count are redacted instead of perturbed.
"""

from privdetect import default_registry, sanitize
from privdetect.mechanisms import RandomSource
from privdetect.sanitizer import audit, verify_audit

registry = default_registry()
text = (
    "Alice paid $1,250.00 on March 14 at 09:45. Oliver met Alice in Paris the next day "
    "and they counted 37 boats before Alice flew home."
)

for eps in (0.3, 1.0, 5.0):
    doc = sanitize(text, eps, registry, rng=RandomSource(seed=3))
    print(f"\nepsilon_total = {eps}")
    print("  " + doc.sanitized_text)
    for b in doc.plan.buckets.values():
        print(f"  {b.bucket:<12} c={b.true_count} c~={b.noisy_count:6.2f} "
              f"eps/instance={b.per_instance_epsilon:.4f} limit={b.perturb_limit}")
    print(f"  spent {doc.ledger.total:.6f} of {eps}")
    assert verify_audit(audit(doc)) == []
