"""Minimal s-expression reader with source positions."""
from __future__ import annotations

from dataclasses import dataclass


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.line, self.col = line, col


@dataclass(frozen=True)
class Sym:
    name: str
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        if isinstance(other, str):
            return self.name == other
        return isinstance(other, Sym) and self.name == other.name

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Str:
    value: str


def read_all(text: str) -> list:
    pos, line, col = 0, 1, 1
    stack: list[list] = [[]]
    opened: list[tuple[int, int]] = []
    n = len(text)

    def adv(k):
        nonlocal pos, line, col
        for _ in range(k):
            if text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        ch = text[pos]
        if ch.isspace():
            adv(1)
        elif ch == ";":
            while pos < n and text[pos] != "\n":
                adv(1)
        elif ch == "(":
            stack.append([])
            opened.append((line, col))
            adv(1)
        elif ch == ")":
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", line, col)
            done = stack.pop()
            opened.pop()
            stack[-1].append(done)
            adv(1)
        elif ch == '"':
            l0, c0 = line, col
            adv(1)
            buf = []
            while True:
                if pos >= n:
                    raise ParseError("unterminated string literal", l0, c0)
                if text[pos] == '"':
                    if pos + 1 < n and text[pos + 1] == '"':
                        buf.append('"')
                        adv(2)
                        continue
                    adv(1)
                    break
                buf.append(text[pos])
                adv(1)
            stack[-1].append(Str("".join(buf)))
        elif ch == "|":
            l0, c0 = line, col
            end = text.find("|", pos + 1)
            if end < 0:
                raise ParseError("unterminated quoted symbol", l0, c0)
            stack[-1].append(Sym(text[pos + 1:end], l0, c0))
            adv(end - pos + 1)
        else:
            l0, c0 = line, col
            start = pos
            while pos < n and not text[pos].isspace() and text[pos] not in '();"|':
                adv(1)
            stack[-1].append(Sym(text[start:pos], l0, c0))
    if len(stack) != 1:
        l0, c0 = opened[-1]
        raise ParseError("unbalanced '('", l0, c0)
    return stack[0]


def where(x) -> tuple[int, int]:
    if isinstance(x, Sym):
        return x.line, x.col
    if isinstance(x, list) and x:
        return where(x[0])
    return 0, 0
