"""Regenerate the FCIDUMP fixtures in data/ with PySCF.

PySCF is only needed here; the package itself reads the resulting files.
Reference energies are written next to each FCIDUMP as a JSON sidecar.

    python scripts/generate_fixtures.py [--out data]
"""
import argparse
import math
import json
from pathlib import Path

import numpy as np
from pyscf import fci, gto, mcscf, scf
from pyscf.mcscf import avas
from pyscf.tools import fcidump

ETHYLENE = """
C  0.000000  0.669500  0.000000
C  0.000000 -0.669500  0.000000
H  0.923274  1.238289  0.000000
H -0.923274  1.238289  0.000000
H  0.923274 -1.238289  0.000000
H -0.923274 -1.238289  0.000000
"""

# planar s-trans-1,3-butadiene
BUTADIENE = """
C  -0.606026   0.441530  0.000000
C   0.606026  -0.441530  0.000000
C  -1.855418  -0.042346  0.000000
C   1.855418   0.042346  0.000000
H  -0.425627   1.513858  0.000000
H   0.425627  -1.513858  0.000000
H  -2.716883   0.611999  0.000000
H   2.716883  -0.611999  0.000000
H  -2.052542  -1.108851  0.000000
H   2.052542   1.108851  0.000000
"""


def h2(out):
    mol = gto.M(atom="H 0 0 0; H 0 0 0.735", basis="sto-3g", verbose=0)
    mf = scf.RHF(mol).run()
    e_fci = fci.FCI(mf).kernel()[0]
    fcidump.from_scf(mf, str(out / "h2_sto3g.fcidump"))
    return {
        "molecule": "H2",
        "basis": "sto-3g",
        "bond_length_angstrom": 0.735,
        "active_space": "full (2e, 2o)",
        "hf_energy": mf.e_tot,
        "ground_energy": e_fci,
    }


def polyene(out, name, geometry, expected):
    mol = gto.M(atom=geometry, basis="cc-pvdz", verbose=0)
    mf = scf.RHF(mol).run()
    ncas, nelecas, mo = avas.avas(mf, ["C 2pz"], canonicalize=True, verbose=0)
    if (nelecas, ncas) != expected:
        raise RuntimeError(f"{name}: AVAS picked CAS{(nelecas, ncas)}, expected {expected}")
    mc = mcscf.CASSCF(mf, ncas, nelecas)
    mc.verbose = 0
    mc.kernel(mo)
    path = out / f"{name}_cas{nelecas}{ncas}.fcidump"
    fcidump.from_mcscf(mc, str(path))
    # Sz = 0 roots of the active-space Hamiltonian, for reference only
    h1, ecore = mc.get_h1eff()
    h2e = mc.get_h2eff()
    roots = fci.direct_spin1.FCI()
    nroots = min(40, math.comb(ncas, nelecas // 2) ** 2)
    energies, _ = roots.kernel(h1, h2e, ncas, nelecas, ecore=ecore, nroots=nroots)
    return {
        "molecule": name,
        "basis": "cc-pvdz",
        "active_space": f"CAS({nelecas},{ncas})",
        "hf_energy": mf.e_tot,
        "casscf_energy": mc.e_tot,
        "ground_energy": float(np.min(energies)),
        "sz0_energies": [float(e) for e in np.sort(energies)],
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", type=Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    meta = {
        "h2_sto3g": h2(args.out),
        "ethylene_cas22": polyene(args.out, "ethylene", ETHYLENE, (2, 2)),
        "butadiene_cas44": polyene(args.out, "butadiene", BUTADIENE, (4, 4)),
    }
    with open(args.out / "fixtures.json", "w") as f:
        json.dump(meta, f, indent=2)
    print(json.dumps(meta, indent=2))


if __name__ == "__main__":
    main()
