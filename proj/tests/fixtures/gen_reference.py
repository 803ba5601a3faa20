"""Regenerates the committed parser/descriptor reference fixtures.

Test-only tooling: the C++ library never depends on RDKit. The corpus is a
deterministic sample of the NCI open set shipped with RDKit.
"""
import csv
import os
import sys

from rdkit import Chem, RDConfig
from rdkit.Chem import Descriptors, rdMolDescriptors

ALLOWED = {"C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B"}
HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "data", "parser_reference.csv")
SIZE = 200
STRIDE = 23


def eligible(mol):
    if mol is None or len(Chem.GetMolFrags(mol)) != 1:
        return False
    if not 2 <= mol.GetNumAtoms() <= 60:
        return False
    if any(a.GetSymbol() not in ALLOWED for a in mol.GetAtoms()):
        return False
    if any(a.GetNumRadicalElectrons() for a in mol.GetAtoms()):
        return False
    return True


def row(smiles):
    mol = Chem.MolFromSmiles(smiles)
    return {
        "smiles": smiles,
        "formula": rdMolDescriptors.CalcMolFormula(mol),
        "heavy_atoms": mol.GetNumAtoms(),
        "rings": rdMolDescriptors.CalcNumRings(mol),
        "aromatic_atoms": sum(a.GetIsAromatic() for a in mol.GetAtoms()),
        "aromatic_rings": rdMolDescriptors.CalcNumAromaticRings(mol),
        "mol_weight": f"{Descriptors.MolWt(mol):.4f}",
        "tpsa": f"{rdMolDescriptors.CalcTPSA(mol):.4f}",
        "logp": f"{rdMolDescriptors.CalcCrippenDescriptors(mol)[0]:.4f}",
        "mr": f"{rdMolDescriptors.CalcCrippenDescriptors(mol)[1]:.4f}",
        "hbd": rdMolDescriptors.CalcNumLipinskiHBD(mol),
        "hba": rdMolDescriptors.CalcNumLipinskiHBA(mol),
        "rotatable_bonds": rdMolDescriptors.CalcNumRotatableBonds(mol),
    }


def main():
    src = os.path.join(RDConfig.RDDataDir, "NCI", "first_5K.smi")
    with open(src) as fh:
        lines = [ln.split()[0] for ln in fh if ln.strip()]
    picked = []
    for i in range(0, len(lines), STRIDE):
        if eligible(Chem.MolFromSmiles(lines[i])):
            picked.append(lines[i])
        if len(picked) == SIZE:
            break
    if len(picked) < SIZE:
        sys.exit(f"only {len(picked)} eligible molecules")
    rows = [row(s) for s in picked]
    with open(OUT, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


if __name__ == "__main__":
    main()
