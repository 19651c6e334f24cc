"""Compile planning tasks with Horn description-logic constraints into PDDL."""

__version__ = "0.1.0"
