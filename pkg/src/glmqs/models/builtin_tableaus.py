"""The four published GLMQS tableaus, transcribed with every printed digit."""

from .custom_error import NotFoundError
from .tableau import GlmTableau

_L1 = 0.4779022865816724
_L2 = 0.4127594486653355
_L3 = 1.3070643469
_L4 = 1.14488604
_T3 = 0.3333333333

_GLMQS_1 = dict(
    name="GLMQS-1",
    p=1,
    lam=_L1,
    c=[0.0, 1.0],
    A=[[_L1, 0.0], [1.0, _L1]],
    U=[[1.0, -_L1], [1.0, -_L1]],
    B=[
        [0.9999999999996634, 0.47790228658136436],
        [0.5220977134183276, 0.4779022865816724],
    ],
    V=[[1.0, -0.4779022865810278], [0.0, 0.0]],
    coeff_digits=16,
    printed_error_constant=0.22741,
)

_GLMQS_2 = dict(
    name="GLMQS-2",
    p=2,
    lam=_L2,
    c=[0.0, 0.5, 1.0],
    A=[[_L2, 0.0, 0.0], [0.5, _L2, 0.0], [0.5, 0.5, _L2]],
    U=[
        [1.0, -0.4127594486653355, 0.0],
        [1.0, -0.4127594486653355, 0.04362027566733226],
        [1.0, -0.4127594486653354, -0.16275944866533548],
    ],
    B=[
        [0.08251725509138857, 1.1935839192127649, -0.10573081184164185],
        [-0.825518897330671, 1.8255188973306709, 0.0],
        [-2.0, 2.0, 0.0],
    ],
    V=[
        [1.0, -0.17037036246251172, 0.00893885223525935],
        [0.0, 0.0, 0.08724055133466452],
        [0.0, 0.0, 0.0],
    ],
    coeff_digits=16,
    printed_error_constant=0.0195824,
)

_GLMQS_3 = dict(
    name="GLMQS-3",
    p=3,
    lam=_L3,
    c=[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
    A=[
        [_L3, 0.0, 0.0, 0.0],
        [_T3, _L3, 0.0, 0.0],
        [_T3, _T3, _L3, 0.0],
        [_T3, _T3, _T3, _L3],
    ],
    U=[
        [1.0, -1.3070643469, 0.0, 0.0],
        [1.0, -1.3070643469, -0.3801325601, -0.0664418464],
        [1.0, -1.3070643469, -0.7602651202, -0.2595945462],
        [1.0, -1.3070643469, -1.1403976803, -0.5794580994],
    ],
    B=[
        [-0.8343558447, 2.1518400434, -0.3006125529, 0.9548594035],
        [5.9455090739, -19.7334042294, 14.7878951555, 0.0],
        [14.7635791223, -32.5271582445, 17.7635791223, 0.0],
        [9.0, -18.0, 9.0, 0.0],
    ],
    V=[
        [1.0, -0.9717310493, -0.9717310493, -0.3635069146],
        [0.0, 0.0, -2.2807953605, -1.6898986885],
        [0.0, 0.0, 0.0, -1.1403976803],
        [0.0, 0.0, 0.0, 0.0],
    ],
    coeff_digits=10,
    printed_error_constant=7.729463e-10,
)

_GLMQS_4 = dict(
    name="GLMQS-4",
    p=4,
    lam=_L4,
    c=[0.0, 0.25, 0.5, 0.75, 1.0],
    A=[
        [_L4, 0.0, 0.0, 0.0, 0.0],
        [0.25, _L4, 0.0, 0.0, 0.0],
        [0.25, 0.25, _L4, 0.0, 0.0],
        [0.25, 0.25, 0.25, _L4, 0.0],
        [0.25, 0.25, 0.25, 0.25, _L4],
    ],
    U=[
        [1.0, -1.14488604, 0.0, 0.0, 0.0],
        [1.0, -1.14488604, -0.25497151, -0.03317352, -0.00281871],
        [1.0, -1.14488604, -0.50994302, -0.13008992, -0.02189867],
        [1.0, -1.14488604, -0.76491453, -0.29074920, -0.07317558],
        [1.0, -1.14488604, -1.01988604, -0.51515135, -0.17258517],
    ],
    B=[
        [43.96171205, -203.73777224, 341.62582482, -248.83459442, 69.31103311],
        [-57.45201209, 215.29165614, -271.46590848, 114.62626443, 0.0],
        [-33.44194715, 138.96219468, -181.59854791, 76.07830038, 0.0],
        [-97.27270647, 307.81811940, -323.81811940, 113.27270647, 0.0],
        [-64.0, 192.0, -192.0, 64.0, 0.0],
    ],
    V=[
        [1.0, -1.32620332, -2.06355665, -0.84054293, -0.60062733],
        [0.0, 0.0, -3.05965812, -4.53326256, -2.79810815],
        [0.0, 0.0, 0.0, -2.03977208, -1.42783313],
        [0.0, 0.0, 0.0, 0.0, -1.01988604],
        [0.0, 0.0, 0.0, 0.0, 0.0],
    ],
    coeff_digits=8,
    printed_error_constant=2.25574e-8,
)

_BUILTINS = {t["name"]: t for t in (_GLMQS_1, _GLMQS_2, _GLMQS_3, _GLMQS_4)}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_tableau(name: str) -> GlmTableau:
    """Return a published tableau by identifier (`GLMQS-1` … `GLMQS-4`)."""
    try:
        fields = _BUILTINS[name.upper()]
    except KeyError:
        raise NotFoundError(
            f"Unknown method {name!r}; expected one of {', '.join(BUILTIN_NAMES)}"
        ) from None
    return GlmTableau(**fields)  # type: ignore[arg-type]
