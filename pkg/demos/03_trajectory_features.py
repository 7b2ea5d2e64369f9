"""How a document's score responds as the budget grows.

At each budget the document is sanitized and scored by a trigram model; each
row compares the sanitized token scores with the original ones.
"""

import numpy as np

from privdetect import epsilon_grid, extract_trajectory, generate_reference, generate_synthetic
from privdetect.pipeline import fit_scorer

docs = generate_synthetic(3, seed=1)
scorer = fit_scorer(generate_reference(300, seed=1))
grid = epsilon_grid(0.1, 2.0, 6)

np.set_printoptions(precision=3, suppress=True)
for doc in (docs[0], docs[3]):
    traj = extract_trajectory(doc.text, scorer, grid=grid, doc_key=doc.doc_id)
    print(f"\n{doc.doc_id}: {doc.text[:90]}...")
    print("   eps    mean LL   1-p     d")
    for eps, row in zip(grid, traj.matrix):
        print(f"  {eps:4.2f}  {row}")
