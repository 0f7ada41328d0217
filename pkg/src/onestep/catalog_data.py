"""Exact coefficients of the bundled methods, as rational strings.

Each entry maps a name to a dict with keys ``A`` (rows, lower triangle
only), ``b``, ``c``, optional ``bt``, and orders ``q``/``p``. Rows may be
shorter than ``s``; missing entries are zero.
"""

# Kennedy & Carpenter ARK3(2)4L[2]SA diagonal coefficient
_G3 = "1767732205903/4055673282236"

ERK = {
    "forward_euler_1": dict(
        A=[[]], b=["1"], c=["0"], q=1),
    "heun_euler_2_1": dict(
        A=[[], ["1"]], b=["1/2", "1/2"], bt=["1", "0"], c=["0", "1"], q=2, p=1),
    "bogacki_shampine_3_2": dict(
        A=[[], ["1/2"], ["0", "3/4"], ["2/9", "1/3", "4/9"]],
        b=["2/9", "1/3", "4/9", "0"],
        bt=["7/24", "1/4", "1/3", "1/8"],
        c=["0", "1/2", "3/4", "1"], q=3, p=2),
    "zonneveld_4_3": dict(
        A=[[], ["1/2"], ["0", "1/2"], ["0", "0", "1"],
           ["5/32", "7/32", "13/32", "-1/32"]],
        b=["1/6", "1/3", "1/3", "1/6", "0"],
        bt=["-1/2", "7/3", "7/3", "13/6", "-16/3"],
        c=["0", "1/2", "1/2", "1", "3/4"], q=4, p=3),
    "cash_karp_5_4": dict(
        A=[[], ["1/5"], ["3/40", "9/40"], ["3/10", "-9/10", "6/5"],
           ["-11/54", "5/2", "-70/27", "35/27"],
           ["1631/55296", "175/512", "575/13824", "44275/110592", "253/4096"]],
        b=["37/378", "0", "250/621", "125/594", "0", "512/1771"],
        bt=["2825/27648", "0", "18575/48384", "13525/55296", "277/14336", "1/4"],
        c=["0", "1/5", "3/10", "3/5", "1", "7/8"], q=5, p=4),
    # slow table of the third-order multirate infinitesimal step method
    "knoth_wolke_3_3": dict(
        A=[[], ["1/3"], ["-3/16", "15/16"]],
        b=["1/6", "3/10", "8/15"], c=["0", "1/3", "3/4"], q=3),
    "ark324l2sa_erk_3_2": dict(
        A=[[], ["1767732205903/2027836641118"],
           ["5535828885825/10492691773637", "788022342437/10882634858940"],
           ["6485989280629/16251701735622", "-4246266847089/9704473918619",
            "10755448449292/10357097424841"]],
        b=["1471266399579/7840856788654", "-4482444167858/7529755066697",
           "11266239266428/11593286722821", _G3],
        bt=["2756255671327/12835298489170", "-10771552573575/22201958757719",
            "9247589265047/10645013368117", "2193209047091/5459859503100"],
        c=["0", "1767732205903/2027836641118", "3/5", "1"], q=3, p=2),
    "ark436l2sa_erk_4_3": dict(
        A=[[], ["1/2"], ["13861/62500", "6889/62500"],
           ["-116923316275/2393684061468", "-2731218467317/15368042101831",
            "9408046702089/11113171139209"],
           ["-451086348788/2902428689909", "-2682348792572/7519795681897",
            "12662868775082/11960479115383", "3355817975965/11060851509271"],
           ["647845179188/3216320057751", "73281519250/8382639484533",
            "552539513391/3454668386233", "3354512671639/8306763924573",
            "4040/17871"]],
        b=["82889/524892", "0", "15625/83664", "69875/102672", "-2260/8211", "1/4"],
        bt=["4586570599/29645900160", "0", "178811875/945068544",
            "814220225/1159782912", "-3700637/11593932", "61727/225920"],
        c=["0", "1/2", "83/250", "31/50", "17/20", "1"], q=4, p=3),
}

DIRK = {
    "ark324l2sa_dirk_3_2": dict(
        A=[[], [_G3, _G3],
           ["2746238789719/10658868560708", "-640167445237/6845629431997", _G3],
           ["1471266399579/7840856788654", "-4482444167858/7529755066697",
            "11266239266428/11593286722821", _G3]],
        b=["1471266399579/7840856788654", "-4482444167858/7529755066697",
           "11266239266428/11593286722821", _G3],
        bt=["2756255671327/12835298489170", "-10771552573575/22201958757719",
            "9247589265047/10645013368117", "2193209047091/5459859503100"],
        c=["0", "1767732205903/2027836641118", "3/5", "1"], q=3, p=2),
    "ark436l2sa_dirk_4_3": dict(
        A=[[], ["1/4", "1/4"], ["8611/62500", "-1743/31250", "1/4"],
           ["5012029/34652500", "-654441/2922500", "174375/388108", "1/4"],
           ["15267082809/155376265600", "-71443401/120774400",
            "730878875/902184768", "2285395/8070912", "1/4"],
           ["82889/524892", "0", "15625/83664", "69875/102672", "-2260/8211", "1/4"]],
        b=["82889/524892", "0", "15625/83664", "69875/102672", "-2260/8211", "1/4"],
        bt=["4586570599/29645900160", "0", "178811875/945068544",
            "814220225/1159782912", "-3700637/11593932", "61727/225920"],
        c=["0", "1/2", "83/250", "31/50", "17/20", "1"], q=4, p=3),
    "ark548l2sa_dirk_5_4": dict(
        A=[[], ["41/200", "41/200"],
           ["41/400", "-567603406766/11931857230679", "41/200"],
           ["683785636431/9252920307686", "0", "-110385047103/1367015193373", "41/200"],
           ["3016520224154/10081342136671", "0", "30586259806659/12414158314087",
            "-22760509404356/11113319521817", "41/200"],
           ["218866479029/1489978393911", "0", "638256894668/5436446318841",
            "-1179710474555/5321154724896", "-60928119172/8023461067671", "41/200"],
           ["1020004230633/5715676835656", "0", "25762820946817/25263940353407",
            "-2161375909145/9755907335909", "-211217309593/5846859502534",
            "-4269925059573/7827059040749", "41/200"],
           ["-872700587467/9133579230613", "0", "0", "22348218063261/9555858737531",
            "-1143369518992/8141816002931", "-39379526789629/19018526304540",
            "32727382324388/42900044865799", "41/200"]],
        b=["-872700587467/9133579230613", "0", "0", "22348218063261/9555858737531",
           "-1143369518992/8141816002931", "-39379526789629/19018526304540",
           "32727382324388/42900044865799", "41/200"],
        bt=["-975461918565/9796059967033", "0", "0", "78070527104295/32432590147079",
            "-548382580838/3424219808633", "-33438840321285/15594753105479",
            "3629800801594/4656183773603", "4035322873751/18575991585200"],
        c=["0", "41/100", "2935347310677/11292855782101",
            "1426016391358/7196633302097", "23/25", "6/25", "3/5", "1"], q=5, p=4),
}

ARK_PAIRS = {
    "ark324l2sa": ("ark324l2sa_erk_3_2", "ark324l2sa_dirk_3_2"),
    "ark436l2sa": ("ark436l2sa_erk_4_3", "ark436l2sa_dirk_4_3"),
}

# MRI couplings given directly: c, and per-degree Omega/Gamma rows.
MRI = {
    # Sandu's second-order explicit MRI-GARK (K = 0)
    "mri_gark_erk22a": dict(
        c=["0", "1/2", "1"],
        W=[[[], ["1/2"], ["-1/2", "1"]]],
        G=None, q=2),
    # second-order solve-decoupled ImEx coupling: explicit part telescopes to
    # Heun, implicit part to the trapezoidal rule (last stage has dc = 0)
    "imex_mri_heun_trap_2": dict(
        c=["0", "1", "1"],
        W=[[[], ["1"], ["-1/2", "1/2"]]],
        G=[[[], ["1"], ["-1/2", "0", "1/2"]]], q=2),
}
