"""FlexMind: an opt-in AI ideation workflow engine.

A typed design-space graph, event-sourced session logs, prompt
orchestration against a pluggable completion provider, an HTTP facade,
and a scripting CLI.
"""

__version__ = "0.1.0"
