"""Single-lead ECG interval pipeline with method-comparison statistics.

Submodules
----------
records      domain types and CSV ingestion/serialization
preprocess   baseline removal, zero-phase bandpass, quality gating
delineator   wavelet-based P/QRS/T delineation
intervals    PR/QRS/QT/QTc computation and record-level aggregation
agreement    correlation, Bland-Altman, summaries, stratified tables
diagnostics  LQT/AVBI threshold classifiers, confusion metrics, ROC/AUC
synth        synthetic ECG generator with analytic ground truth
pipeline     end-to-end record analysis
cli          analyze / validate / diagnose / synth subcommands
"""

__version__ = "0.1.0"
