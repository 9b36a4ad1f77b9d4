"""Context builder for lab results"""

import logging
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.lab.boxdim import BoxCountCurve, BoxDimensions
from src.lab.paths import SamplePath
from src.lab.processes import ProcessSpec, describe
from src.lab.reports import BoundCheckReport, aggregate, json_safe
from src.lab.runner import DimensionReport

logger = logging.getLogger(__name__)

MAX_PATH_POINTS = 200


class LabContextBuilder:
    """
    Builds JSON-ready context dictionaries from lab results.
    The XML formatter renders these; nothing here touches numerics.
    """

    def __init__(self, max_path_points: int = MAX_PATH_POINTS):
        """
        Initialize Context Builder

        Args:
            max_path_points (int): Cap on the number of path samples echoed back to clients
        """
        self.logger = logging.getLogger('LabContextBuilder')
        self.max_path_points = max_path_points

    def build_experiment_context(self, report: DimensionReport) -> Dict[str, Any]:
        """
        Build context for a dimension experiment

        Args:
            report (DimensionReport): Finished experiment report

        Returns:
            Dict[str, Any]: Experiment context
        """
        payload = report.to_dict()
        return {
            'name': report.name,
            'timestamp': report.generated_at or datetime.now().isoformat(),
            'seed': report.seed,
            'H': report.H,
            'process': payload['process'],
            'passed': report.passed,
            'dimensions': payload['dimensions'],
            'checks': self._summarize_checks(report.checks),
            'covering': payload['covering'],
        }

    def build_checks_context(self, reports: Sequence[BoundCheckReport]) -> Dict[str, Any]:
        summary = aggregate(reports)
        return {
            'timestamp': datetime.now().isoformat(),
            'passed': summary['passed'],
            'n_checks': summary['n_checks'],
            'n_passed': summary['n_passed'],
            'checks': self._summarize_checks(reports),
        }

    def build_path_context(self, spec: ProcessSpec, paths: List[SamplePath], seed: int) -> Dict[str, Any]:
        """Path summaries plus an evenly thinned copy of the first path."""
        first = paths[0]
        stride = max(1, int(np.ceil((first.n_steps + 1) / self.max_path_points)))
        keep = np.arange(0, first.n_steps + 1, stride)
        if keep[-1] != first.n_steps:
            keep = np.append(keep, first.n_steps)
        sups = [float(np.linalg.norm(p.values - p.start_x, axis=1).max()) for p in paths]
        return json_safe({
            'timestamp': datetime.now().isoformat(),
            'process': describe(spec),
            'seed': seed,
            'T': first.horizon,
            'n_steps': first.n_steps,
            'n_paths': len(paths),
            'endpoints': [p.values[-1] for p in paths],
            'max_displacement': sups,
            'samples': [{'t': float(first.times[i]), 'x': first.values[i]} for i in keep],
        })

    def build_dimension_context(self, curve: BoxCountCurve, dims: BoxDimensions,
                                predicted: Optional[float] = None) -> Dict[str, Any]:
        return json_safe({
            'timestamp': datetime.now().isoformat(),
            'ambient_dim': curve.ambient_dim,
            'curve': curve.csv_rows(),
            'lower': dims.lower.to_dict(),
            'upper': dims.upper.to_dict(),
            'central': dims.central.to_dict(),
            'predicted': predicted,
        })

    def _summarize_checks(self, reports: Sequence[BoundCheckReport]) -> List[Dict[str, Any]]:
        out = []
        for report in reports:
            out.append(json_safe({
                'check': report.check,
                'passed': report.passed,
                'cells': len(report.grid),
                'violations': report.violating_cells[:10],
                'fitted_constants': report.fitted_constants,
                'flags': report.flags,
            }))
        return out
