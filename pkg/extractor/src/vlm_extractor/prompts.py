"""Prompt set files: a JSON object naming an attribute and its probes.

Schema: ``{"attribute_name": str, "prompts": [str, ...], "template": str,
"attribute_classes": int | null}``. The template holds exactly one ``{}``
placeholder; each prompt is rendered through it before encoding.
"""

import json
from dataclasses import dataclass, field

from .errors import ConfigError

DEFAULT_TEMPLATE = "A photo of a/an {}"


@dataclass(frozen=True)
class PromptSet:
    attribute_name: str
    prompts: tuple[str, ...]
    template: str = DEFAULT_TEMPLATE

    def __post_init__(self):
        object.__setattr__(self, "prompts", tuple(self.prompts))
        if not self.attribute_name:
            raise ConfigError("prompt set: attribute_name must be non-empty")
        if not self.prompts:
            raise ConfigError("prompt set: at least one prompt required")
        if any(not p for p in self.prompts):
            raise ConfigError("prompt set: prompts must be non-empty strings")
        if self.template.count("{}") != 1:
            raise ConfigError(f"prompt set: template needs exactly one {{}}, got {self.template!r}")

    def render(self) -> list[str]:
        return [self.template.format(p) for p in self.prompts]


def load_prompt_set(path) -> PromptSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: prompt set must be a JSON object")
    missing = {"attribute_name", "prompts"} - payload.keys()
    if missing:
        raise ConfigError(f"{path}: missing key '{sorted(missing)[0]}'")
    prompts = payload["prompts"]
    if not isinstance(prompts, list) or not all(isinstance(p, str) for p in prompts):
        raise ConfigError(f"{path}: 'prompts' must be a list of strings")
    return PromptSet(
        attribute_name=payload["attribute_name"],
        prompts=tuple(prompts),
        template=payload.get("template", DEFAULT_TEMPLATE),
    )
