"""commandpost: steer a scripted RTS commander with natural language.

A deterministic skirmish sim is driven tick by tick from a behavior
tree whose numeric knobs an advisor proposes to adjust in response to
chat instructions; every change gates on approval and every session
replays bit-exact from its log.
"""
__version__ = "0.1.0"
