"""Persistence landscapes of point clouds estimated from random subsamples."""

__version__ = "0.1.0"

from .errors import BudgetError, SublandscapeError  # noqa: E402
from .estimators import (PipelineParams, StandardAssumption, average_landscape,  # noqa: E402
                         bootstrap_band, closest_sample_landscape, dissimilarity_matrix)
from .landscape import Landscape, build_landscape, linf_distance  # noqa: E402
from .metricspace import PointCloud, SubsampleScheme, hausdorff, sample_iid  # noqa: E402
from .persistence import PersistenceDiagram, bottleneck, compute_diagram, rips_diagram  # noqa: E402
from .rips import build_rips  # noqa: E402
from .transport import DiscreteMeasure, wasserstein  # noqa: E402
