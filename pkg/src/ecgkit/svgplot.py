"""Minimal deterministic SVG plots (text output enables golden-file testing).

Bland-Altman plots follow the usual convention: mean difference as a red
dashed line, +-z SD limits as black dashed lines.
"""

from __future__ import annotations

WIDTH, HEIGHT = 640.0, 480.0
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70.0, 20.0, 40.0, 50.0


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _axis_range(values, pad_fraction=0.08):
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = (hi - lo) * pad_fraction
    return lo - pad, hi + pad


class _Canvas:
    def __init__(self, x_range, y_range, title, x_label, y_label):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0f}" height="{HEIGHT:.0f}" '
            f'viewBox="0 0 {WIDTH:.0f} {HEIGHT:.0f}">',
            f'<rect width="{WIDTH:.0f}" height="{HEIGHT:.0f}" fill="white"/>',
            f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{title}</text>',
            f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 10:.0f}" text-anchor="middle" '
            f'font-size="12" font-family="sans-serif">{x_label}</text>',
            f'<text x="16" y="{HEIGHT / 2:.0f}" text-anchor="middle" font-size="12" '
            f'font-family="sans-serif" transform="rotate(-90 16 {HEIGHT / 2:.0f})">{y_label}</text>',
            f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{WIDTH - MARGIN_LEFT - MARGIN_RIGHT}" '
            f'height="{HEIGHT - MARGIN_TOP - MARGIN_BOTTOM}" fill="none" stroke="black"/>',
        ]

    def px(self, x: float) -> float:
        frac = (x - self.x0) / (self.x1 - self.x0)
        return MARGIN_LEFT + frac * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        frac = (y - self.y0) / (self.y1 - self.y0)
        return HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)

    def ticks(self, n=5):
        for i in range(n + 1):
            x = self.x0 + i * (self.x1 - self.x0) / n
            y = self.y0 + i * (self.y1 - self.y0) / n
            self.parts.append(
                f'<text x="{_fmt(self.px(x))}" y="{HEIGHT - MARGIN_BOTTOM + 16:.0f}" '
                f'text-anchor="middle" font-size="10" font-family="sans-serif">{_fmt(x)}</text>'
            )
            self.parts.append(
                f'<text x="{MARGIN_LEFT - 6:.0f}" y="{_fmt(self.py(y) + 3)}" text-anchor="end" '
                f'font-size="10" font-family="sans-serif">{_fmt(y)}</text>'
            )

    def hline(self, y: float, color: str, dashed: bool = True, label: str | None = None):
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(
            f'<line x1="{MARGIN_LEFT}" x2="{WIDTH - MARGIN_RIGHT}" y1="{_fmt(self.py(y))}" '
            f'y2="{_fmt(self.py(y))}" stroke="{color}"{dash}/>'
        )
        if label:
            self.parts.append(
                f'<text x="{WIDTH - MARGIN_RIGHT - 4:.0f}" y="{_fmt(self.py(y) - 4)}" '
                f'text-anchor="end" font-size="10" font-family="sans-serif" '
                f'fill="{color}">{label}</text>'
            )

    def circle(self, x: float, y: float):
        self.parts.append(
            f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="2.5" '
            f'fill="#1f6eb4" fill-opacity="0.6"/>'
        )

    def polyline(self, points, color="#1f6eb4"):
        coords = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in points)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    def text(self, x_px: float, y_px: float, content: str):
        self.parts.append(
            f'<text x="{_fmt(x_px)}" y="{_fmt(y_px)}" font-size="12" '
            f'font-family="sans-serif">{content}</text>'
        )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def bland_altman_svg(ba, means, diffs, title: str) -> str:
    """Scatter of per-pair (mean, difference) with mean and LoA lines."""
    y_candidates = list(diffs) + [ba.loa_low, ba.loa_high, ba.mean_diff]
    canvas = _Canvas(
        _axis_range(means),
        _axis_range(y_candidates),
        title,
        "Mean of methods (ms)",
        "Difference (ms)",
    )
    canvas.ticks()
    for x, y in zip(means, diffs):
        canvas.circle(x, y)
    canvas.hline(ba.mean_diff, "#cc0000", label=f"mean {_fmt(ba.mean_diff)}")
    canvas.hline(ba.loa_high, "black", label=f"+{_fmt(ba.z)} SD {_fmt(ba.loa_high)}")
    canvas.hline(ba.loa_low, "black", label=f"-{_fmt(ba.z)} SD {_fmt(ba.loa_low)}")
    canvas.text(MARGIN_LEFT + 8, MARGIN_TOP + 16, f"within LoA: {_fmt(ba.pct_within)}%")
    return canvas.render()


def roc_svg(report, title: str) -> str:
    """ROC curve with the chance diagonal and the four headline metrics."""
    canvas = _Canvas((0.0, 1.0), (0.0, 1.0), title, "False positive rate", "True positive rate")
    canvas.ticks(5)
    canvas.polyline([(0.0, 0.0), (1.0, 1.0)], color="#999999")
    canvas.polyline(list(report.roc_points))

    def fmt_rate(v):
        return "n/a" if v is None else f"{v:.3f}"

    lines = [
        f"ROAUC {report.auc:.3f}",
        f"accuracy {fmt_rate(report.accuracy)}",
        f"sensitivity {fmt_rate(report.sensitivity)}",
        f"specificity {fmt_rate(report.specificity)}",
    ]
    for i, line in enumerate(lines):
        canvas.text(WIDTH - MARGIN_RIGHT - 150, HEIGHT - MARGIN_BOTTOM - 70 + 16 * i, line)
    return canvas.render()
