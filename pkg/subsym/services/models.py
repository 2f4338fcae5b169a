"""Parameter validation and the named-model bridge.

``validate`` turns raw parameter sets into immutable domain values, reporting
every broken invariant at once. ``madan_yor_drift`` reads off the Brownian
drift of the subordinated representation of the named models.
"""

import json
from pathlib import Path
from typing import Any, List, Mapping, Type, Union

import structlog
from pydantic import BaseModel, TypeAdapter, ValidationError

from subsym.core.errors import DataIOError, ParameterValidationError, Violation
from subsym.schemas.models import (
    CGMY,
    FIELD_BOUNDS,
    MarketSpec,
    Meixner,
    ModelDocument,
    NamedModel,
    OptionSpec,
    TcbmModel,
)

logger = structlog.get_logger(__name__)

_DOCUMENT_ADAPTER = TypeAdapter(ModelDocument)

Validatable = Union[TcbmModel, CGMY, Meixner, MarketSpec, OptionSpec]


def violations_from_pydantic(exc: ValidationError) -> List[Violation]:
    """Convert pydantic errors into field/message/bound violations."""
    violations = []
    for err in exc.errors():
        loc = [str(part) for part in err.get("loc", ())]
        message = err.get("msg", "")
        if message.startswith("Value error, "):
            message = message[len("Value error, "):]
        name = loc[-1] if loc else ""
        violations.append(
            Violation(
                field=".".join(loc),
                message=message,
                bound=FIELD_BOUNDS.get(name),
            )
        )
    return violations


def validate(value: Union[Validatable, Mapping[str, Any]], kind: Type[BaseModel] = None) -> Validatable:
    """Validate a parameter set.

    Args:
        value: an already-built domain value (returned unchanged) or a raw
            mapping. Mappings with a ``type`` key are parsed as model
            documents (tcbm / cgmy / meixner); otherwise ``kind`` names the
            target type (e.g. ``MarketSpec``).
        kind: explicit target type for raw mappings.

    Returns:
        The validated, immutable value.

    Raises:
        ParameterValidationError: one Violation per broken invariant.
    """
    if isinstance(value, BaseModel):
        if kind is None or isinstance(value, kind):
            return value
        value = value.model_dump(by_alias=True)

    try:
        if kind is not None:
            return kind.model_validate(value)
        if not isinstance(value, Mapping) or "type" not in value:
            raise ParameterValidationError(
                [Violation(field="type", message="model document requires a 'type' field",
                           bound="tcbm | cgmy | meixner")]
            )
        return _DOCUMENT_ADAPTER.validate_python(value)
    except ValidationError as exc:
        violations = violations_from_pydantic(exc)
        logger.info("validation_failed", error_count=len(violations), first_field=violations[0].field)
        raise ParameterValidationError(violations) from exc


def madan_yor_drift(named: NamedModel) -> float:
    """Brownian drift of the subordinated representation: (G-M)/2 or b/a."""
    named = validate(named)
    if isinstance(named, CGMY):
        return (named.g - named.m) / 2.0
    if isinstance(named, Meixner):
        return named.b / named.a
    raise TypeError(f"madan_yor_drift expects a CGMY or Meixner model, got {type(named).__name__}")


# ═══════════════════════════════════════════════════════════════════════
# JSON DOCUMENTS
# ═══════════════════════════════════════════════════════════════════════

def _read_json(path: Union[str, Path]) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataIOError(f"file not found: {path}", details={"path": str(path)}) from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise DataIOError(f"cannot read JSON from {path}: {exc}", details={"path": str(path)}) from exc


def load_model_document(path: Union[str, Path]) -> Union[TcbmModel, CGMY, Meixner]:
    return validate(_read_json(path))


def load_market(path: Union[str, Path]) -> MarketSpec:
    return validate(_read_json(path), kind=MarketSpec)


def dump_model_document(model: Union[TcbmModel, CGMY, Meixner]) -> str:
    """Serialise a model with its document field names (``lambda``, not ``lam``)."""
    return model.model_dump_json(by_alias=True)
