"""XML formatter for lab results"""

import logging
from typing import Any, Dict, List
from xml.sax.saxutils import escape, quoteattr

logger = logging.getLogger(__name__)


def _num(value: Any, digits: int = 4) -> str:
    if isinstance(value, bool) or value is None:
        return str(value).lower() if isinstance(value, bool) else ""
    if isinstance(value, (int, float)):
        return f"{value:.{digits}f}" if isinstance(value, float) else str(value)
    return escape(str(value))


class LabMCPFormatter:
    """
    Formats lab contexts into MCP XML structure.
    """

    def __init__(self):
        """Initialize MCP Formatter"""
        self.logger = logging.getLogger('LabMCPFormatter')

    def format_experiment(self, context: Dict[str, Any]) -> str:
        """
        Format a dimension-experiment context

        Args:
            context (Dict): Context from LabContextBuilder.build_experiment_context

        Returns:
            str: MCP XML string
        """
        xml = (f'<dimension_experiment name={quoteattr(str(context.get("name", "")))} '
               f'timestamp="{context.get("timestamp", "")}" passed="{_num(context.get("passed"))}">\n')
        xml += f'  <seed>{context.get("seed")}</seed>\n'
        xml += f'  <index>{_num(context.get("H"))}</index>\n'
        xml += self._format_process(context.get('process', {}))

        dimensions = context.get('dimensions', [])
        xml += f'  <time_sets count="{len(dimensions)}">\n'
        for row in dimensions:
            xml += self._format_dimension_row(row)
        xml += '  </time_sets>\n'

        xml += self._format_checks(context.get('checks', []))

        covering = context.get('covering', [])
        if covering:
            xml += '  <covering>\n'
            for row in covering:
                xml += (f'    <level n="{row.get("n")}" family_size="{row.get("family_size")}" '
                        f'max_count="{row.get("max_count")}" q95="{_num(row.get("q95"), 1)}" '
                        f'tail_slope="{_num(row.get("tail_slope"), 3)}" />\n')
            xml += '  </covering>\n'

        xml += '</dimension_experiment>\n'
        return xml

    def format_checks(self, context: Dict[str, Any]) -> str:
        xml = (f'<condition_checks timestamp="{context.get("timestamp", "")}" '
               f'passed="{_num(context.get("passed"))}" n_passed="{context.get("n_passed", 0)}" '
               f'n_checks="{context.get("n_checks", 0)}">\n')
        xml += self._format_checks(context.get('checks', []), indent='  ', wrap=False)
        xml += '</condition_checks>\n'
        return xml

    def format_path(self, context: Dict[str, Any]) -> str:
        xml = (f'<process_path timestamp="{context.get("timestamp", "")}" seed="{context.get("seed")}" '
               f'T="{context.get("T")}" n_steps="{context.get("n_steps")}" n_paths="{context.get("n_paths")}">\n')
        xml += self._format_process(context.get('process', {}))
        xml += '  <endpoints>\n'
        for end, sup in zip(context.get('endpoints', []), context.get('max_displacement', [])):
            xml += f'    <endpoint x="{self._vector(end)}" max_displacement="{_num(sup)}" />\n'
        xml += '  </endpoints>\n'
        samples = context.get('samples', [])
        xml += f'  <samples count="{len(samples)}">\n'
        for sample in samples:
            xml += f'    <s t="{_num(sample["t"], 6)}" x="{self._vector(sample["x"])}" />\n'
        xml += '  </samples>\n'
        xml += '</process_path>\n'
        return xml

    def format_dimension(self, context: Dict[str, Any]) -> str:
        xml = (f'<image_dimension timestamp="{context.get("timestamp", "")}" '
               f'ambient_dim="{context.get("ambient_dim")}">\n')
        if context.get('predicted') is not None:
            xml += f'  <predicted>{_num(context["predicted"])}</predicted>\n'
        for mode in ('lower', 'central', 'upper'):
            est = context.get(mode, {})
            xml += (f'  <{mode} slope="{_num(est.get("slope"))}" ci_lo="{_num(est.get("lo"))}" '
                    f'ci_hi="{_num(est.get("hi"))}" flags="{",".join(est.get("flags", []))}" />\n')
        xml += '  <curve>\n'
        for row in context.get('curve', []):
            xml += f'    <point epsilon="{row["epsilon"]:.6g}" count="{row["count"]}" />\n'
        xml += '  </curve>\n'
        xml += '</image_dimension>\n'
        return xml

    def format_error(self, tag: str, message: str, suggestion: str) -> str:
        """Error element with the message and one suggestion"""
        return (f'<{tag} error="true">\n'
                f'    <error_message>{escape(message)}</error_message>\n'
                f'    <suggestion>{escape(suggestion)}</suggestion>\n'
                f'</{tag}>')

    def _format_process(self, process: Dict[str, Any]) -> str:
        attrs = ' '.join(f'{k}={quoteattr(str(v))}' for k, v in process.items()
                         if not isinstance(v, (dict, list)))
        return f'  <process {attrs} />\n'

    def _format_dimension_row(self, row: Dict[str, Any]) -> str:
        passed = row.get('passed')
        verdict = 'info' if passed is None else _num(passed)
        xml = f'    <time_set label={quoteattr(str(row.get("label", "")))} passed="{verdict}">\n'
        xml += f'      <analytic_dim>{_num(row.get("analytic_dim"))}</analytic_dim>\n'
        xml += f'      <predicted>{_num(row.get("predicted"))}</predicted>\n'
        xml += (f'      <measured ci_lo="{_num(row.get("ci_lo"))}" ci_hi="{_num(row.get("ci_hi"))}" '
                f'iqr="{_num(row.get("iqr"))}">{_num(row.get("measured"))}</measured>\n')
        xml += f'      <regime_ok>{_num(row.get("regime_ok"))}</regime_ok>\n'
        flags = row.get('flags', [])
        if flags:
            xml += f'      <flags>{escape(",".join(flags))}</flags>\n'
        xml += '    </time_set>\n'
        return xml

    def _format_checks(self, checks: List[Dict[str, Any]], indent: str = '    ', wrap: bool = True) -> str:
        xml = f'  <checks count="{len(checks)}">\n' if wrap else ''
        for check in checks:
            xml += f'{indent}<check name="{check.get("check")}" passed="{_num(check.get("passed"))}" '
            xml += f'cells="{check.get("cells", 0)}">\n'
            for name, value in check.get('fitted_constants', {}).items():
                xml += f'{indent}  <constant name={quoteattr(str(name))}>{_num(value, 6)}</constant>\n'
            for cell in check.get('violations', []):
                attrs = ' '.join(f'{k}={quoteattr(str(v))}' for k, v in cell.items())
                xml += f'{indent}  <violation {attrs} />\n'
            if check.get('flags'):
                xml += f'{indent}  <flags>{escape(",".join(check["flags"]))}</flags>\n'
            xml += f'{indent}</check>\n'
        if wrap:
            xml += '  </checks>\n'
        return xml

    @staticmethod
    def _vector(values: Any) -> str:
        return ' '.join(f'{float(v):.6g}' for v in values)
