import pytest
from hypothesis import given, settings, strategies as st

from exactfp.smiles import BondOrder, MolGraph, SmilesError, initial_atom_invariants, parse_smiles

ASPIRIN = "CC(=O)OC1=CC=CC=C1C(=O)O"


def test_aspirin_counts():
    mol = parse_smiles(ASPIRIN)
    assert mol.num_atoms == 13
    assert mol.num_bonds == 13
    assert sum(mol.bond_in_ring) == 6
    assert sum(mol.atom_in_ring) == 6


def test_methane():
    mol = parse_smiles("C")
    assert mol.num_atoms == 1 and mol.num_bonds == 0
    assert mol.atoms[0].atomic_number == 6
    assert mol.atoms[0].explicit_h_count == 4


def test_cyclopropane_all_ring():
    mol = parse_smiles("C1CC1")
    assert (mol.num_atoms, mol.num_bonds) == (3, 3)
    assert all(mol.atom_in_ring) and all(mol.bond_in_ring)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("C1CC", "ring"),
        ("CC(C", "parenthes"),
        ("CC)C", "parenthes"),
        ("C=", "bond"),
        ("CXx", "element"),
        ("C[Zz]", "element"),
        ("C[C", "bracket"),
        ("", "empty"),
    ],
)
def test_errors(text, fragment):
    with pytest.raises(SmilesError) as info:
        parse_smiles(text)
    assert fragment in str(info.value).lower()


def test_error_position_points_at_open_ring():
    with pytest.raises(SmilesError) as info:
        parse_smiles("CC1CC")
    assert info.value.position == 2


def test_non_ascii_rejected():
    with pytest.raises(SmilesError):
        parse_smiles("CCé")


def test_bracket_atom_fields():
    mol = parse_smiles("[13CH3-]")
    a = mol.atoms[0]
    assert (a.atomic_number, a.isotope, a.explicit_h_count, a.formal_charge) == (6, 13, 3, -1)
    mol = parse_smiles("[NH4+]")
    assert mol.atoms[0].formal_charge == 1 and mol.atoms[0].explicit_h_count == 4
    assert parse_smiles("[Fe+2]").atoms[0].formal_charge == 2
    assert parse_smiles("[O--]").atoms[0].formal_charge == -2


def test_stereo_discarded():
    plain = parse_smiles("FC=CF")
    marked = parse_smiles("F/C=C\\F")
    assert plain == marked
    assert parse_smiles("N[C@@H](C)C(=O)O") == parse_smiles("N[CH](C)C(=O)O")


def test_dot_keeps_components():
    mol = parse_smiles("CCO.[Na+].[Cl-]")
    assert mol.num_atoms == 5
    assert mol.num_components() == 3


def test_percent_ring_closure():
    assert parse_smiles("C%12CCCCC%12") == parse_smiles("C1CCCCC1")


def test_explicit_hydrogen_folded_into_neighbour():
    mol = parse_smiles("[H]OC")
    assert mol.num_atoms == 2
    assert mol.atoms[0].atomic_number == 8 and mol.atoms[0].explicit_h_count == 1


def test_aromatic_bonds_and_hydrogens():
    benzene = parse_smiles("c1ccccc1")
    assert all(b.order == BondOrder.AROMATIC for b in benzene.bonds)
    assert all(a.explicit_h_count == 1 and a.is_aromatic for a in benzene.atoms)
    pyrrole = parse_smiles("c1cc[nH]c1")
    assert pyrrole.atoms[3].explicit_h_count == 1
    pyridine = parse_smiles("c1ccncc1")
    assert pyridine.atoms[3].explicit_h_count == 0
    furan = parse_smiles("c1ccoc1")
    assert furan.atoms[3].explicit_h_count == 0


def test_biaryl_link_is_single():
    mol = parse_smiles("c1ccccc1-c1ccccc1")
    link = [b for b in mol.bonds if not mol.bond_in_ring[mol.bonds.index(b)]]
    assert len(link) == 1 and link[0].order == BondOrder.SINGLE
    implicit = parse_smiles("c1ccccc1c1ccccc1")
    assert implicit == mol


@pytest.mark.parametrize(
    "smiles, hs",
    [
        ("N", [3]),
        ("O", [2]),
        ("Cl", [1]),
        ("B", [3]),
        ("CS(=O)(=O)C", [3, 0, 0, 0, 3]),
        ("P", [3]),
        ("OP(=O)(O)O", [1, 0, 0, 1, 1]),
        ("C=O", [2, 0]),
        ("C#N", [1, 0]),
    ],
)
def test_implicit_hydrogens(smiles, hs):
    assert [a.explicit_h_count for a in parse_smiles(smiles).atoms] == hs


def test_overvalent_atom_clamps_to_zero():
    mol = parse_smiles("C(C)(C)(C)(C)C")
    assert mol.atoms[0].explicit_h_count == 0


def test_graph_rejects_bad_bonds():
    atom = parse_smiles("C").atoms[0]
    bond = parse_smiles("CC").bonds[0]
    with pytest.raises(ValueError):
        MolGraph((atom,), (bond,), (False,), (False,))
    with pytest.raises(ValueError):
        MolGraph((atom, atom), (bond, bond), (False, False), (False, False))


def test_graph_is_immutable():
    mol = parse_smiles("CC")
    with pytest.raises(AttributeError):
        mol.atoms = ()


def test_invariants_examples():
    inv = initial_atom_invariants(parse_smiles("CC"))
    assert inv[0] == inv[1]
    inv = initial_atom_invariants(parse_smiles("CO"))
    assert inv[0] != inv[1]
    ring = initial_atom_invariants(parse_smiles("C1CCCCC1"))[2]
    chain = initial_atom_invariants(parse_smiles("CCCCCC"))[2]
    assert ring != chain


@pytest.mark.parametrize(
    "a, b",
    [("OCC", "CCO"), ("c1ccccc1O", "Oc1ccccc1"), ("CC(=O)O", "OC(C)=O"), (ASPIRIN, "OC(=O)C1=CC=CC=C1OC(C)=O")],
)
def test_invariant_multiset_is_order_free(a, b):
    assert sorted(initial_atom_invariants(parse_smiles(a))) == sorted(initial_atom_invariants(parse_smiles(b)))


def test_invariants_are_64_bit():
    inv = initial_atom_invariants(parse_smiles(ASPIRIN))
    assert all(0 <= v < 2**64 for v in inv)


# -- properties ---------------------------------------------------------------

ATOMS = ["C", "N", "O", "S", "F", "Cl", "[NH3+]", "[O-]", "Br"]


@st.composite
def chain_smiles(draw):
    """Random acyclic/monocyclic SMILES with known atom and bond counts."""
    n = draw(st.integers(1, 12))
    atoms = [draw(st.sampled_from(ATOMS)) for _ in range(n)]
    ring = n >= 3 and draw(st.booleans())
    parts = []
    for i, a in enumerate(atoms):
        parts.append(a)
        if ring and i == 0:
            parts.append("1")
    if ring:
        parts.append("1")
    dots = draw(st.integers(0, 2))
    text = "".join(parts) + ".C" * dots
    return text, n + dots, (n - 1) + (1 if ring else 0), 1 + dots


@settings(max_examples=200, deadline=None)
@given(chain_smiles())
def test_counts_property(case):
    text, atoms, bonds, components = case
    mol = parse_smiles(text)
    assert mol.num_atoms == atoms
    assert mol.num_bonds == bonds
    assert mol.num_components() == components
    assert mol.num_bonds == mol.num_atoms - components + (bonds - (atoms - components))


@settings(max_examples=100, deadline=None)
@given(chain_smiles())
def test_parse_is_pure(case):
    assert parse_smiles(case[0]) == parse_smiles(case[0])


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="CNOcn()=#123[]H+-.%@/\\", max_size=20))
def test_garbage_never_crashes(text):
    try:
        mol = parse_smiles(text)
    except SmilesError:
        return
    for b in mol.bonds:
        assert b.begin != b.end
        assert 0 <= b.begin < mol.num_atoms and 0 <= b.end < mol.num_atoms
    assert len({b.endpoints for b in mol.bonds}) == mol.num_bonds
    assert all(a.explicit_h_count >= 0 for a in mol.atoms)
