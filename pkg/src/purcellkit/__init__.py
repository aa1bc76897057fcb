"""Toolkit for designing and analyzing transmon readout through an intrinsic Purcell filter.

Subpackages and modules:

- ``netmodel``: distributed-element transmission-line network solver
  (junction admittance, external coupling rate, notch finding).
- ``spectra``: reflection-spectrum model functions, nonlinear least-squares
  fitting, and drive-calibration formulas.
- ``dynamics``: truncated transmon-resonator Lindblad simulator for Rabi,
  Stark, dispersive-probe, single-shot readout, and two-tone reset experiments.
- ``budget``: readout error-budget analysis from repeated-readout
  conditional probabilities.
- ``service``: FastAPI app exposing the above as JSON endpoints.
- ``cli``: command-line front end (thin client of the service).
"""

__version__ = "0.1.0"
