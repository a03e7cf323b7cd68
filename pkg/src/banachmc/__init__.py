"""Single- and multilevel Monte Carlo for function-valued random variables."""

__version__ = "0.1.0"
