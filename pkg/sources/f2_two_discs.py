# sources/f2_two_discs.py
from src.physics import eval_f2, sample_nodal

SOURCE_TAG = "F2"
DESCRIPTION = "-10 on the unit disc at (2,-1), +10 on the unit disc at (-2,0.5)"


def generate_source(grid, eps=None):
    # eps only regularizes F1's outer branch
    return sample_nodal(grid, eval_f2)
