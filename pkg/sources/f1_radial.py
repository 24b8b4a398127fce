# sources/f1_radial.py
from src.physics import DEFAULT_EPSILON, eval_f1, sample_nodal

SOURCE_TAG = "F1"
DESCRIPTION = "x^2+y^2-1 inside r^2 < 11, 10/(1+eps r^6) outside; optimum is a centered disc"


def generate_source(grid, eps=DEFAULT_EPSILON):
    return sample_nodal(grid, lambda x, y: eval_f1(x, y, eps))
