"""
percnn-lab: physics-encoded recurrent convolutional networks for learning
reaction-diffusion dynamics from sparse, noisy snapshots.
"""

__version__ = "0.1.0"
