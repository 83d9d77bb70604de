# vidscore/__main__.py
from .cli import app

app(prog_name="vidscore")
