"""
collapse_lab - neural collapse in the layer-peeled classification model.

Trains the free-feature model under CE and BCE losses, builds the analytic
collapsed minimizers and measures collapse, accuracy and feature metrics.
"""

__version__ = "0.1.0"
