from enum import Enum


class MissingConvention(str, Enum):
    # mean of the present normalised scores (default)
    mean = "mean"
    # raw sum of the present normalised scores
    sum = "sum"
