# fracbec/infrastructure/report.py
from importlib.resources import files
from typing import Any

import jinja2


def _num(value: Any) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_verify_report(summary: dict[str, Any], config_hash: str) -> str:
    """Markdown view of a verify.json summary."""
    templates_path = files("fracbec") / "assets" / "templates"
    env = jinja2.Environment(
        loader=jinja2.FileSystemLoader(str(templates_path)),
        autoescape=False,  # nosec B701
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["num"] = _num
    template = env.get_template("verify_report.md.j2")
    return template.render(config_hash=config_hash, **summary)
