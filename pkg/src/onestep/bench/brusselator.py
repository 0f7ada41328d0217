"""1-D advection-diffusion-reaction Brusselator on an interleaved grid.

State layout is ``(u_0, v_0, w_0, u_1, v_1, w_1, ...)`` so every term has
a narrow band: advection and diffusion reach three entries either side,
reaction stays inside one grid point.
"""

from dataclasses import dataclass

import numpy as np

from .. import _kernels

TERMS = ("advection", "diffusion", "reaction")

# partition name -> terms, per preset
PRESETS = {
    "erk": {"explicit": TERMS},
    "dirk": {"implicit": TERMS},
    "imex1": {"explicit": ("advection",), "implicit": ("diffusion", "reaction")},
    "imex2": {"explicit": ("advection", "reaction"), "implicit": ("diffusion",)},
    "mri": {"explicit": ("advection",), "implicit": ("diffusion",), "fast": ("reaction",)},
}

PRESET_ALIASES = {"erk-all": "erk", "dirk-all": "dirk", "imex-1": "imex1", "imex-2": "imex2"}


def preset_name(name):
    key = name.strip().lower()
    key = PRESET_ALIASES.get(key, key)
    if key not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return key


@dataclass
class Brusselator:
    npts: int = 512
    c: float = 0.001
    d: float = 0.01
    a: float = 0.6
    b: float = 2.0
    eps: float = 0.01
    t0: float = 0.0
    tf: float = 10.0
    literal_diffusion: bool = False

    def __post_init__(self):
        if self.npts < 3:
            raise ValueError("need at least 3 grid points")
        self.dx = 1.0 / (self.npts - 1)
        self.x = np.linspace(0.0, 1.0, self.npts)
        self.n = 3 * self.npts

    def initial(self):
        s = 0.1 * np.sin(np.pi * self.x)
        y = np.empty(self.n)
        y[0::3] = self.a + s
        y[1::3] = self.b / self.a + s
        y[2::3] = self.b + s
        return y

    # individual terms ------------------------------------------------------

    def advection(self, t, y):
        out = np.empty_like(y)
        _kernels.adr_advection(y, out, self.npts, self.c, self.dx)
        return out

    def diffusion(self, t, y):
        out = np.empty_like(y)
        _kernels.adr_diffusion(y, out, self.npts, self.d, self.dx, self.literal_diffusion)
        return out

    def reaction(self, t, y):
        out = np.empty_like(y)
        _kernels.adr_reaction(y, out, self.npts, self.a, self.b, self.eps)
        return out

    def rhs(self, t, y):
        return self.advection(t, y) + self.diffusion(t, y) + self.reaction(t, y)

    def combined(self, terms):
        """Sum of the named terms as one callback, or ``None`` if empty."""
        terms = tuple(terms)
        if not terms:
            return None
        for name in terms:
            if name not in TERMS:
                raise ValueError(f"unknown term {name!r}")
        if self.d == 0.0:
            terms = tuple(n for n in terms if n != "diffusion") or terms
        fns = [getattr(self, name) for name in terms]
        if len(fns) == 1:
            return fns[0]

        def f(t, y):
            out = fns[0](t, y)
            for g in fns[1:]:
                out += g(t, y)
            return out

        return f

    def split(self, preset):
        """``(fe, fi, ff)`` callbacks for a preset; absent partitions are ``None``."""
        parts = PRESETS[preset_name(preset)]
        return tuple(self.combined(parts.get(k, ())) for k in ("explicit", "implicit", "fast"))

    def bandwidth(self, terms):
        """Half bandwidth of the Jacobian of the given terms."""
        spatial = any(n in terms for n in ("advection", "diffusion"))
        return 3 if spatial else 2
