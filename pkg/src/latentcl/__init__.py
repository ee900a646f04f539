"""Continual-learning lab for latent-structured teacher-student tasks."""

from . import experiments, linalg, students, taskgen, theory

__version__ = "0.1.0"

__all__ = ["experiments", "linalg", "students", "taskgen", "theory",
           "__version__"]
