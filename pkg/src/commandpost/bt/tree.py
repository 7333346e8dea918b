"""Tree structure, JSON form, and structural validation.

The control tree ships as a JSON document so it can be inspected and
swapped without touching code; validation catches unknown leaf refs and
malformed shapes before a tick ever runs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

SELECTOR = "selector"
SEQUENCE = "sequence"
CONDITION = "condition"
ACTION = "action"
NODE_KINDS = (SELECTOR, SEQUENCE, CONDITION, ACTION)


class TreeError(ValueError):
    """Structural problem in a control tree."""


@dataclass
class TreeNode:
    kind: str
    name: str = ""
    ref: str = ""
    children: list[TreeNode] = field(default_factory=list)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.name:
            out["name"] = self.name
        if self.ref:
            out["ref"] = self.ref
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> TreeNode:
        if not isinstance(data, dict) or "kind" not in data:
            raise TreeError(f"node must be a mapping with a kind, got {data!r}")
        children = [cls.from_dict(c) for c in data.get("children", [])]
        return cls(kind=data["kind"], name=data.get("name", ""),
                   ref=data.get("ref", ""), children=children)


def validate_tree(root: TreeNode, *, conditions: set[str],
                  actions: set[str]) -> None:
    """Raise TreeError listing every structural problem found."""
    problems: list[str] = []
    seen: set[int] = set()

    def visit(node: TreeNode, path: str) -> None:
        if id(node) in seen:
            problems.append(f"{path}: node appears twice (cycle or shared subtree)")
            return
        seen.add(id(node))
        label = node.name or node.ref or node.kind
        here = f"{path}/{label}"
        if node.kind not in NODE_KINDS:
            problems.append(f"{here}: unknown node kind {node.kind!r}")
            return
        if node.kind in (SELECTOR, SEQUENCE):
            if node.ref:
                problems.append(f"{here}: composite nodes take no ref")
            if not node.children:
                problems.append(f"{here}: composite node needs children")
            for child in node.children:
                visit(child, here)
        else:
            if node.children:
                problems.append(f"{here}: leaf nodes take no children")
            registry = conditions if node.kind == CONDITION else actions
            if not node.ref:
                problems.append(f"{here}: leaf node needs a ref")
            elif node.ref not in registry:
                problems.append(f"{here}: unknown {node.kind} ref {node.ref!r}")

    visit(root, "")
    if problems:
        raise TreeError("; ".join(problems))


def tree_from_json(text: str) -> TreeNode:
    data = json.loads(text)
    if isinstance(data, dict) and "root" in data:
        data = data["root"]
    return TreeNode.from_dict(data)


def load_default_tree() -> TreeNode:
    text = resources.files("commandpost.data").joinpath(
        "default_tree.json").read_text("utf-8")
    return tree_from_json(text)
