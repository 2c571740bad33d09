"""Reproduction studies: the static academic example and the two-tank benchmark."""
from ..metrics import fit_percent, rmse
