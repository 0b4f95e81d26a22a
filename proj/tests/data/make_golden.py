#!/usr/bin/env python3
"""Reference generator for the SMILES golden corpus.

Independent of the C++ parser: a minimal SMILES reader written directly
from the OpenSMILES grammar, cross-checked against known molecular
formulas (heavy-atom counts) and ring counts for every corpus entry.
Regenerate with:  python3 make_golden.py > smiles_golden.tsv
"""

import re
import sys

ORGANIC = ["Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I"]
AROMATIC_ORGANIC = ["b", "c", "n", "o", "p", "s"]

SINGLE, DOUBLE, TRIPLE, AROMATIC = "single", "double", "triple", "aromatic"
BOND_CHARS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC,
              "/": SINGLE, "\\": SINGLE}


def parse(smiles):
    """Returns (atoms, bonds): atoms = list of (symbol, aromatic_flag),
    bonds = list of (i, j, type)."""
    atoms = []   # (symbol, aromatic)
    bonds = {}   # frozenset{i,j} -> type
    prev = None          # index of atom to bond the next atom to
    stack = []           # branch stack
    pending = None       # explicit bond symbol awaiting its atom
    rings = {}           # ring number -> (atom index, pending bond or None)
    i = 0
    n = len(smiles)

    def add_atom(sym, aromatic):
        nonlocal prev, pending
        atoms.append((sym, aromatic))
        idx = len(atoms) - 1
        if prev is not None:
            add_bond(prev, idx, pending)
        pending = None
        prev = idx
        return idx

    def add_bond(a, b, explicit):
        if a == b:
            raise ValueError("self bond")
        key = frozenset((a, b))
        if key in bonds:
            raise ValueError("duplicate bond")
        if explicit is None:
            t = AROMATIC if (atoms[a][1] and atoms[b][1]) else SINGLE
        else:
            t = explicit
        bonds[key] = t

    def ring_closure(num):
        nonlocal pending
        if num in rings:
            other, other_bond = rings.pop(num)
            if pending is not None and other_bond is not None and pending != other_bond:
                raise ValueError("ring bond mismatch")
            add_bond(other, prev, pending if pending is not None else other_bond)
            pending = None
        else:
            rings[num] = (prev, pending)
            pending = None

    while i < n:
        ch = smiles[i]
        if ch in BOND_CHARS:
            pending = BOND_CHARS[ch]
            i += 1
        elif ch == "(":
            stack.append(prev)
            i += 1
        elif ch == ")":
            prev = stack.pop()
            i += 1
        elif ch.isdigit():
            if prev is None:
                raise ValueError("ring digit before any atom")
            ring_closure(int(ch))
            i += 1
        elif ch == "%":
            ring_closure(int(smiles[i + 1:i + 3]))
            i += 3
        elif ch == "[":
            j = smiles.index("]", i)
            body = smiles[i + 1:j]
            m = re.match(r"^(\d*)([A-Z][a-z]?|[a-z]{1,2})(@{0,2}H?\d*[+-]*\d*(?::\d+)?)$", body)
            if not m:
                raise ValueError(f"bad bracket atom [{body}]")
            sym = m.group(2)
            aromatic = sym[0].islower()
            add_atom(sym.capitalize() if aromatic else sym, aromatic)
            i = j + 1
        elif ch == ".":
            raise ValueError("multi-fragment input")
        else:
            matched = False
            for sym in ORGANIC:
                if smiles.startswith(sym, i):
                    add_atom(sym, False)
                    i += len(sym)
                    matched = True
                    break
            if not matched:
                for sym in AROMATIC_ORGANIC:
                    if smiles.startswith(sym, i):
                        add_atom(sym.upper(), True)
                        i += 1
                        matched = True
                        break
            if not matched:
                raise ValueError(f"unexpected character {ch!r} at {i}")
    if stack:
        raise ValueError("unbalanced parentheses")
    if rings:
        raise ValueError("unmatched ring closure")
    return atoms, [(min(k), max(k), t) for k, t in bonds.items()]


# name, smiles, heavy atoms from molecular formula, ring count.
# The last two columns come from chemistry reference knowledge, not from
# the parser above, and anchor the generated counts.
CORPUS = [
    ("ethanol", "CCO", 3, 0),
    ("benzene", "c1ccccc1", 6, 1),
    ("toluene", "Cc1ccccc1", 7, 1),
    ("phenol", "Oc1ccccc1", 7, 1),
    ("pyridine", "c1ccncc1", 6, 1),
    ("furan", "c1ccoc1", 5, 1),
    ("naphthalene", "c1ccc2ccccc2c1", 10, 2),
    ("imidazole", "c1c[nH]cn1", 5, 1),
    ("acetone", "CC(C)=O", 4, 0),
    ("acetic_acid", "CC(=O)O", 4, 0),
    ("acetonitrile", "CC#N", 3, 0),
    ("urea", "NC(=O)N", 4, 0),
    ("glycine", "NCC(=O)O", 5, 0),
    ("aspirin", "CC(=O)Oc1ccccc1C(=O)O", 13, 1),
    ("paracetamol", "CC(=O)Nc1ccc(O)cc1", 11, 1),
    ("ibuprofen", "CC(C)Cc1ccc(cc1)C(C)C(=O)O", 15, 1),
    ("naproxen", "COc1ccc2cc(ccc2c1)C(C)C(=O)O", 17, 2),
    ("caffeine", "Cn1cnc2c1c(=O)n(C)c(=O)n2C", 14, 2),
    ("nicotine", "CN1CCC[C@H]1c1cccnc1", 12, 2),
    ("metformin", "CN(C)C(=N)NC(=N)N", 9, 0),
]


def main():
    out = []
    for name, smi, heavy, nrings in CORPUS:
        atoms, bonds = parse(smi)
        assert len(atoms) == heavy, f"{name}: parsed {len(atoms)} atoms, formula says {heavy}"
        assert len(bonds) == heavy - 1 + nrings, \
            f"{name}: parsed {len(bonds)} bonds, tree+rings says {heavy - 1 + nrings}"
        counts = {SINGLE: 0, DOUBLE: 0, TRIPLE: 0, AROMATIC: 0}
        for _, _, t in bonds:
            counts[t] += 1
        out.append((name, smi, len(atoms), len(bonds),
                    counts[SINGLE], counts[DOUBLE], counts[TRIPLE], counts[AROMATIC]))
    print("# id\tsmiles\tnatoms\tnbonds\tnsingle\tndouble\tntriple\tnaromatic")
    for row in out:
        print("\t".join(str(x) for x in row))


if __name__ == "__main__":
    sys.exit(main())
