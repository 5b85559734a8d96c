"""Regenerate the SDF fixtures in tests/data (needs RDKit; not a package dependency)."""

from pathlib import Path

from rdkit import Chem
from rdkit.Chem import AllChem

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"

MOLECULES = {
    "methane": "C",
    "benzene": "c1ccccc1",
    "naphthalene": "c1ccc2ccccc2c1",
    "ethanol": "CCO",
    "propane": "CCC",
    "acetone": "CC(=O)C",
    "toluene": "Cc1ccccc1",
    "phenol": "Oc1ccccc1",
    "macrolactone": "O=C1CCCCCCCCCCCCO1",
    "sildenafil": "CCCc1nn(C)c2c(=O)[nH]c(-c3cc(S(=O)(=O)N4CCN(C)CC4)ccc3OCC)nc12",
    "vardenafil": "CCCc1nc(C)c2c(=O)[nH]c(-c3cc(S(=O)(=O)N4CCN(CC)CC4)ccc3OCC)nn12",
    "tadalafil": "CN1CC(=O)N2[C@@H](c3ccc4c(c3)OCO4)c3[nH]c4ccccc4c3C[C@@H]2C1=O",
}


def embed(name, smiles, seed=42):
    mol = Chem.AddHs(Chem.MolFromSmiles(smiles))
    AllChem.EmbedMolecule(mol, randomSeed=seed)
    AllChem.MMFFOptimizeMolecule(mol)
    mol.SetProp("_Name", name)
    return mol


def write(path, mols):
    w = Chem.SDWriter(str(path))
    for m in mols:
        w.write(m)
    w.close()


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    mols = {n: embed(n, s) for n, s in MOLECULES.items()}
    for n in ("methane", "benzene", "naphthalene", "macrolactone", "sildenafil", "vardenafil", "tadalafil", "toluene"):
        write(OUT / f"{n}.sdf", [mols[n]])
    # one rejected record next to a good one: partial success
    write(OUT / "macrocycle.sdf", [mols["macrolactone"], mols["benzene"]])
    write(OUT / "multi.sdf", [mols["ethanol"], mols["propane"], mols["acetone"]])
    write(OUT / "library.sdf", [mols[n] for n in ("vardenafil", "tadalafil", "toluene", "phenol", "naphthalene")])
    flat = Chem.MolFromSmiles("c1ccccc1")
    AllChem.Compute2DCoords(flat)
    flat.SetProp("_Name", "benzene_2d")
    write(OUT / "flat2d.sdf", [flat])


if __name__ == "__main__":
    main()
