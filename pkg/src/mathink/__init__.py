"""Real-time handwritten math recognition.

Single-stroke symbols are classified by a fuzzy neural network (Gaussian
membership functions, fuzzy rules) trained by a genetic algorithm and
fine-tuned online with conjugate gradients; structural analysis assembles
multi-stroke symbols, scores relative placements (NP = P * k), groups
constructs into an expression tree, and renders LaTeX / MathML.
"""

from .kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND"]
__version__ = "0.1.0"
