"""Offline V2X sidelink MCS link-adaptation toolkit.

Pipeline: per-millisecond MCS-sweep drive-test traces -> supervised sweep
samples -> quantile/MSE/MAE regressors -> leave-one-round-out goodput
evaluation against oracle and best-static baselines.
"""

__version__ = "0.1.0"
