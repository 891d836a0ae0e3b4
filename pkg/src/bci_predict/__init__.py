"""Resting-state EEG predictors of ERP speller performance.

Subpackages cover the full offline pipeline: ingest (recordings, events,
configuration), preprocess (filtering, epoching, artifact handling),
features (band power and phase-locking connectivity), classify (ERP
decoding and speller accuracy), stats (correlation, regression,
permutation tests), and synth (seeded ground-truth generators). The
``bci-predict`` command line binds them end to end.
"""

__version__ = "0.1.0"
