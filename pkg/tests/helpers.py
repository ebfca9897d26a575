"""Shared builders used across the test suite."""

from fairlens.frame import AuditFrame, Column


def make_frame(*cols):
    """Build an AuditFrame from (name, dtype, role, cells) tuples."""
    return AuditFrame(
        columns=tuple(
            Column(name, dtype, role, tuple(cells)) for name, dtype, role, cells in cols
        )
    )


def clf_frame(groups, labels=None, preds=None, scores=None, weights=None):
    """Classification-shaped frame with a protected column named 'grp'."""
    cols = [("grp", "categorical", "protected", groups)]
    if labels is not None:
        cols.append(("label", "boolean", "label", labels))
    if preds is not None:
        cols.append(("pred", "boolean", "prediction", preds))
    if scores is not None:
        cols.append(("score", "numeric", "score", scores))
    if weights is not None:
        cols.append(("weight", "numeric", "weight", weights))
    return make_frame(*cols)
