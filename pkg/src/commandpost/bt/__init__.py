"""Behavior-tree control: modulators, tree structure, tick evaluation."""
from .engine import ACTIONS, CONDITIONS, default_tree, tick
from .library import (
    PolicyPreset,
    UnknownPolicyError,
    library_digest,
    load_policy_library,
    make_policy,
)
from .modulators import ModulatorError, ModulatorSet, Policy, apply_modulators
from .tree import TreeError, TreeNode, load_default_tree, tree_from_json, validate_tree

__all__ = [
    "ACTIONS", "CONDITIONS", "default_tree", "tick",
    "PolicyPreset", "UnknownPolicyError", "library_digest",
    "load_policy_library", "make_policy",
    "ModulatorError", "ModulatorSet", "Policy", "apply_modulators",
    "TreeError", "TreeNode", "load_default_tree", "tree_from_json",
    "validate_tree",
]
