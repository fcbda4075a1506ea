"""Optional plotting: figures are written only when matplotlib is installed."""
from pathlib import Path

OUT = Path(__file__).resolve().parent / "figures"


def figure(name):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None, None
    OUT.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    return fig, ax


def save(fig, name):
    if fig is not None:
        fig.tight_layout()
        fig.savefig(OUT / name, dpi=120)
        print(f"wrote {OUT / name}")
