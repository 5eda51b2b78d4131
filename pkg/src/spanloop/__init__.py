"""spanloop: a human-in-the-loop engine for building span-annotated NER corpora.

The pipeline: ingest raw text into a deduplicated sentence pool, downsize it
with keyword retrieval, score sentences by committee disagreement weighted by
density, pre-tag selected batches with trained sequence taggers, collect
two-phase human corrections, and retrain on the growing gold set.
"""

__version__ = "0.1.0"
