"""Small helpers shared by the demo scripts."""

from lambdasc.evaluator import NormalReturn
from lambdasc.pretty import pretty
from lambdasc.session import Session

SESSION = Session()


def show(src: str, use_bind: bool = False) -> str:
    """Evaluate a surface expression under the prelude and print the outcome."""
    r = SESSION.run(SESSION.expression(src), use_bind=use_bind)
    text = pretty(r.value) if isinstance(r, NormalReturn) else repr(r)
    print(f"  {src}\n    => {text}")
    return text


def typ(src: str) -> str:
    t = SESSION.show_type(src)
    print(f"  {src}\n    : {t}")
    return t
