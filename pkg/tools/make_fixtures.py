"""Regenerate the bundled scaffold, charge-field and config fixtures."""
from pathlib import Path

import numpy as np

from alchemical.basis import diatomic_scaffold, mean_bond_length
from alchemical.system import ChargeField, write_charge_field, write_scaffold

DATA = Path(__file__).resolve().parents[1] / "src" / "alchemical" / "data"
SPECIES = ("H", "Li", "Na")
CHARGE_DISTANCE = 3.0  # angstrom from the dimer centre
EQUATORIAL = 0.06
AXIAL = {1: (0.0, 0.0), 2: (-0.5, 0.5), 3: (0.1, 0.2)}  # (-z, +z)


def bipyramid(case: int) -> ChargeField:
    r = CHARGE_DISTANCE
    pos = [(r, 0, 0), (-r, 0, 0), (0, r, 0), (0, -r, 0), (0, 0, -r), (0, 0, r)]
    q = [EQUATORIAL] * 4 + list(AXIAL[case])
    return ChargeField(np.array(pos, dtype=float), np.array(q))


def pocket(n: int = 330, seed: int = 2020) -> ChargeField:
    """Random shell of partial charges, 4.5-10 angstrom out, net charge zero."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = rng.uniform(4.5, 10.0, size=n)
    q = rng.normal(0.0, 0.3, size=n)
    q -= q.mean()
    return ChargeField(direction * radius[:, None], q)


# two spatial orbitals: the four-qubit register used for the H/Li/Na dimer
CONFIG = """[run]
scaffold = {scaffold}
charges = {charges}
active_orbitals = 2
depth = 2
entangler = full
scale = 1000
iterations = 500
restarts = 3
shots = 0
seed = 0
"""


def main():
    DATA.mkdir(exist_ok=True)
    bond = mean_bond_length(SPECIES)
    write_scaffold(diatomic_scaffold(SPECIES, bond), DATA / "hlina_dimer.scaffold")
    for case in AXIAL:
        write_charge_field(bipyramid(case), DATA / f"bipyramid_case{case}.charges",
                           header=f"x y z q (angstrom, e); axial {AXIAL[case]}, equatorial {EQUATORIAL}")
        (DATA / f"case{case}.ini").write_text(
            CONFIG.format(scaffold="hlina_dimer.scaffold", charges=f"bipyramid_case{case}.charges"))
    write_charge_field(pocket(), DATA / "pocket_330.charges", header="x y z q (angstrom, e); synthetic pocket")
    (DATA / "pocket_330.ini").write_text(
        CONFIG.format(scaffold="hlina_dimer.scaffold", charges="pocket_330.charges"))
    h2 = diatomic_scaffold(("H",), 0.7408481486)  # 1.4 bohr
    write_scaffold(h2, DATA / "h2.scaffold")
    (DATA / "h2.ini").write_text(
        CONFIG.format(scaffold="h2.scaffold", charges="")
        + "objective = energy\n")


if __name__ == "__main__":
    main()
