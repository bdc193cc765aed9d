"""Render Markdown reports of a run."""
import math
import os
from collections import defaultdict
from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
)

import pandas as pd
import yaml
from jinja2 import (
    Environment,
    FileSystemLoader,
    PackageLoader,
    select_autoescape,
)


def render_template(filename: str, **context) -> str:
    """Render the specified template file and return as a string.

    Args:
        filename: Name of the template file from the templates folder.
        **context: Values available to the template.

    Returns:
        The contents generated from rendering the passed template file.

    """
    env = Environment(
        loader=PackageLoader(os.path.basename(os.path.dirname(__file__))),
        autoescape=select_autoescape(),
        keep_trailing_newline=True,
    )
    return env.get_template(filename).render(**context)


def process_template(
    filename: str, subpath: Path, output_dir: Path, **context
) -> Path:
    """Render the specified template and write to an output file.

    Returns:
        Path to the generated file.

    """
    output_dir = Path(output_dir)
    if not output_dir.is_dir():
        raise ValueError(f"Specified output_dir is not a directory: {output_dir}")
    output_filepath = output_dir / subpath
    output_filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(output_filepath, "w", encoding="utf-8") as stream:
        stream.write(render_template(filename, **context))
    return output_filepath


def get_templates(report_kind: str, **template_parameters) -> List[dict]:
    """Return the templates rendered for a report kind."""
    loader = FileSystemLoader(searchpath=os.path.dirname(__file__))
    env = Environment(loader=loader)
    rendered = env.get_template("report.yaml").render(**template_parameters)
    data = yaml.load(rendered, Loader=yaml.SafeLoader)
    templates = defaultdict(list)
    templates.update({item["name"]: item["files"] for item in data["reports"]})
    if report_kind not in templates:
        raise ValueError(f"Unknown report kind '{report_kind}'")
    return templates[report_kind]


def generate_report(report_kind: str, output_dir: Path, **context) -> List[Path]:
    """Write every file of a report kind below output_dir."""
    return [
        process_template(item["source"], item["destination"], output_dir, **context)
        for item in get_templates(report_kind, **context)
    ]


def table_rows(table: pd.DataFrame) -> List[Dict[str, Any]]:
    """Error table as template rows, empty cells as None."""
    rows = []
    for name, values in table.iterrows():
        rows.append(
            {
                "name": name,
                "values": [
                    None if value is None or math.isnan(value) else float(value)
                    for value in values
                ],
            }
        )
    return rows
