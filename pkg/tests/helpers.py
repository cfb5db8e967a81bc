from illab.scenarios import build_family

# criterion number -> summary line, filled by test_acceptance and printed at session end
ACCEPTANCE_LINES: dict = {}


def family(*pairs, label="test"):
    """Point family from ``(z1, z2)`` expression pairs in ``eps``."""
    return build_family({"points": [list(p) for p in pairs]}, label=label)
