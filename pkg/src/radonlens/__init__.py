"""radonlens: line-projection imaging toolkit.

Forward Radon projectors (rotate-and-sum, ray-driven, FFT-DC emulation),
SART and filtered back projection reconstruction, cylindrical metalens
design against a pillar scatterer library, a projection-vs-pooling
compression benchmark, and a sinogram-domain digit classification
pipeline.  Everything is deterministic under explicit seeds.
"""

__version__ = "0.1.0"

FORMAT_VERSIONS = {"PGM": "P2/P5 maxval 255|65535", "RSG": "RSG1", "RCM": "RCM1"}

from radonlens.backend import backend_name  # noqa: E402,F401
