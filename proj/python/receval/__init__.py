"""Schema-constrained extraction scoring and reward shaping.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports it. Typical trainer-side use::

    import receval
    out = receval.record_reward(gold_json, model_output)
    advantages = receval.group_advantages([s["reward"] for s in samples])
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:  # built in-tree: the extension sits next to the package
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
