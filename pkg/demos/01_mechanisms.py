"""The two noise mechanisms on their own.

Numbers get Laplace noise scaled by sensitivity / epsilon; names are kept or
swapped for another pool entry by the exponential mechanism.
"""

import numpy as np

from privdetect import default_registry
from privdetect.entities import EntityKind
from privdetect.extractor import EntitySpan
from privdetect.mechanisms import RandomSource, keep_probability, perturb_numeric, perturb_textual

registry = default_registry()
gen = RandomSource(seed=7).generator()

print("A $250 payment (sensitivity 10000) at a few budgets:")
for eps in (0.5, 2.0, 50.0, 1e6):
    outs = [perturb_numeric(250.0, 10000.0, eps, (0, None), gen).output for _ in range(5)]
    print(f"  eps={eps:<9g} {outs}")

pool = registry.pool(EntityKind.PERSON)
span = EntitySpan(0, 5, EntityKind.PERSON, "Alice", pool_index=pool.index("Alice"))
print(f"\nPERSON pool has {len(pool)} names; chance of keeping 'Alice':")
for eps in (0.0, 2.0, 8.0, 12.0):
    kept = np.mean([perturb_textual(span, pool, eps, gen).output == "Alice" for _ in range(20000)])
    print(f"  eps={eps:<5g} closed form {keep_probability(eps, len(pool)):.4f}  simulated {kept:.4f}")
