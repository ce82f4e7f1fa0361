import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class RunReport:
    """What a CLI command did: its parameters, the files it wrote and the numbers it measured."""

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def stamp(self) -> str:
        """Deterministic file stamp derived from command, params and seed."""
        payload = json.dumps({"command": self.command, "params": self.params, "seed": self.seed},
                             sort_keys=True, default=_jsonable)
        return hashlib.sha1(payload.encode('utf-8')).hexdigest()[:10]


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


class ReportGenerator:
    def __init__(self, output_dir: str = "outputs", config: dict = None):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.config = config or {}
        output_config = self.config.get("output", {})
        self.formats = output_config.get("formats", ["json", "markdown"])
        self.logger = logging.getLogger(__name__)

    def path_for(self, report: RunReport, suffix: str, stamp: Optional[str] = None) -> Path:
        """Data file path sharing the report's stamp, e.g. ``expm_<stamp>.csv``."""
        return self.output_dir / f"{report.command}_{stamp or report.stamp()}.{suffix}"

    def generate_reports(self, report: RunReport, stamp: str = None) -> Dict[str, str]:
        if stamp is None:
            stamp = report.stamp()

        file_paths = {}

        if "json" in self.formats:
            json_path = self.output_dir / f"{report.command}_{stamp}.json"
            self._generate_json_report(report, json_path)
            file_paths["json"] = str(json_path)

        if "markdown" in self.formats:
            md_path = self.output_dir / f"{report.command}_{stamp}.md"
            with open(md_path, 'w', encoding='utf-8') as f:
                f.write(self._build_markdown_content(report))
            file_paths["markdown"] = str(md_path)

        self.logger.info(f"Generated reports: {list(file_paths.keys())}")
        return file_paths

    def _generate_json_report(self, report: RunReport, output_path: Path):
        report_data = {
            "generated_at": datetime.now().isoformat(),
            **asdict(report),
        }
        with open(output_path, 'w', encoding='utf-8') as f:
            json.dump(report_data, f, indent=2, ensure_ascii=False, default=_jsonable)

    def _build_markdown_content(self, report: RunReport) -> str:
        md_lines = [
            f"# {report.command} run",
            "",
            f"Generated on {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}",
            "",
            f"**Seed**: {report.seed}",
            "",
            "## Parameters",
            "",
        ]
        md_lines.extend(self._table(report.params))
        md_lines.extend(["", "## Metrics", ""])
        md_lines.extend(self._table(report.metrics))
        if report.outputs:
            md_lines.extend(["", "## Outputs", ""])
            md_lines.extend(f"- {name}: `{path}`" for name, path in report.outputs.items())
        md_lines.append("")
        return "\n".join(md_lines)

    def _table(self, values: Dict[str, Any]) -> List[str]:
        if not values:
            return ["*none*"]
        rows = ["| Name | Value |", "| --- | --- |"]
        for name, value in values.items():
            rows.append(f"| {name} | {self._format_value(value)} |")
        return rows

    def _format_value(self, value: Any) -> str:
        if isinstance(value, float):
            return f"{value:.6g}"
        if isinstance(value, complex):
            return f"{value.real:.6g}{value.imag:+.6g}j"
        if isinstance(value, (list, tuple)) and len(value) > 8:
            return f"[{len(value)} values]"
        return str(value)
