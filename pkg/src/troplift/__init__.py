"""Exact arithmetic on metric graphs with chain structures: chip firing,
pre-limit linear series, weak glueing checks, smoothability verdicts and the
explicit divisor-lifting constructions."""

__version__ = "0.1.0"
