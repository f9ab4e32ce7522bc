"""
산출물용 JSON 직렬화
numpy 배열/스칼라, 복소수, pydantic 모델을 결정적으로 직렬화
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from app.config import settings


class ArtifactJSONEncoder(json.JSONEncoder):
    """
    numpy 타입 JSON 인코더
    복소수는 {"real", "imag"} 형식으로 기록
    """

    def default(self, obj: Any) -> Any:
        if isinstance(obj, np.ndarray):
            if np.iscomplexobj(obj):
                return {"real": obj.real.tolist(), "imag": obj.imag.tolist()}
            return obj.tolist()
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return float(obj)
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, complex | np.complexfloating):
            return {"real": float(obj.real), "imag": float(obj.imag)}
        if isinstance(obj, BaseModel):
            return obj.model_dump(mode="json")
        if isinstance(obj, Path):
            return str(obj)

        return super().default(obj)


def process_artifact_data(data: Any) -> Any:
    """
    산출물 데이터 후처리
    dict 키를 문자열로 바꾸고 (정렬 가능하도록) 모델을 평탄화
    """
    if isinstance(data, BaseModel):
        return process_artifact_data(data.model_dump(mode="json"))
    if isinstance(data, dict):
        return {str(key): process_artifact_data(value) for key, value in data.items()}
    if isinstance(data, list | tuple):
        return [process_artifact_data(item) for item in data]
    return data


def dumps_artifact(payload: dict[str, Any], config_echo: dict[str, Any] | None = None) -> str:
    """schema_version 과 설정 에코를 포함한 결정적 JSON 문자열"""
    document = {"schema_version": settings.schema_version, **process_artifact_data(payload)}
    if config_echo is not None:
        document["config"] = process_artifact_data(config_echo)
    return json.dumps(document, cls=ArtifactJSONEncoder, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_artifact(
    path: str | Path, payload: dict[str, Any], config_echo: dict[str, Any] | None = None
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_artifact(payload, config_echo), encoding="utf-8")
    return path
