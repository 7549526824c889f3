"""Quality-diversity search over personality prompts for LLM-driven kitchen teams."""

__version__ = "0.1.0"
