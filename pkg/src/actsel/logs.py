"""JSON-lines logging."""

import json
import logging
import time

LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class JsonFormatter(logging.Formatter):
    def format(self, record):
        entry = {
            "ts": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(record.created))
            + f".{int(record.msecs):03d}Z",
            "level": record.levelname.lower(),
            "logger": record.name,
            "msg": record.getMessage(),
        }
        extra = getattr(record, "fields", None)
        if extra:
            entry.update(extra)
        if record.exc_info:
            entry["exc"] = self.formatException(record.exc_info)
        return json.dumps(entry, ensure_ascii=False)


def setup_logging(level: str = "warn", stream=None) -> None:
    root = logging.getLogger("actsel")
    root.setLevel(logging.DEBUG)
    for h in list(root.handlers):
        if getattr(h, "_actsel_console", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(stream)
    handler.setFormatter(JsonFormatter())
    handler.setLevel(LEVELS[level])
    handler._actsel_console = True
    root.addHandler(handler)


def file_handler(path) -> logging.Handler:
    h = logging.FileHandler(path, mode="w", encoding="utf-8")
    h.setFormatter(JsonFormatter())
    h.setLevel(logging.DEBUG)
    return h
