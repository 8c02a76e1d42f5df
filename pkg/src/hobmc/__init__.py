"""hobmc: a bounded model checker for higher-order programs with general
references, plus the reference interpreter it is differentially tested
against."""

__version__ = "0.1.0"
