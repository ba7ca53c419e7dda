# Functional ANOVA modeling with hierarchical total variation
__version__ = "0.1.0"
