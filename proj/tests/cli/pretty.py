"""Writes JSON in the layout the bell tool prints: arrays of scalars stay on one line."""
import json


def pretty(value, depth=0):
    pad = "  " * (depth + 1)
    if isinstance(value, list) and value:
        if all(not isinstance(v, (list, dict)) for v in value):
            return "[" + ", ".join(json.dumps(v, ensure_ascii=False) for v in value) + "]"
        return "[\n" + ",\n".join(pad + pretty(v, depth + 1) for v in value) + "\n" + pad[2:] + "]"
    if isinstance(value, dict) and value:
        items = (pad + json.dumps(k, ensure_ascii=False) + ": " + pretty(v, depth + 1) for k, v in value.items())
        return "{\n" + ",\n".join(items) + "\n" + pad[2:] + "}"
    return json.dumps(value, ensure_ascii=False)
