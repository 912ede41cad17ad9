"""SMILES parsing into an immutable heavy-atom graph.

Supported subset:
    - organic-subset atoms ``B C N O P S F Cl Br I`` and aromatic ``b c n o p s``
    - bracket atoms with isotope, element, chirality (discarded), H count,
      charge and atom class (discarded)
    - bonds ``- = # :`` plus ``/`` and ``\\`` (read as single, stereo dropped)
    - branches, ring closures (``1``-``9`` and ``%nn``), ``.`` components

Aromaticity is taken from the input as written; there is no kekulization or
perception step. Explicit ``[H]`` atoms attached to a heavy atom are folded
into that atom's hydrogen count, so hydrogens never appear as graph nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from .hashing import hash_words

__all__ = [
    "AtomRecord",
    "BondOrder",
    "BondRecord",
    "MolGraph",
    "SmilesError",
    "initial_atom_invariants",
    "parse_smiles",
]


class SmilesError(ValueError):
    """Malformed or unsupported SMILES input.

    ``position`` is the 0-based character offset the problem was detected at.
    """

    def __init__(self, message: str, smiles: str, position: int) -> None:
        self.smiles = smiles
        self.position = position
        super().__init__(f"{message} at position {position} in {smiles!r}")


class BondOrder(IntEnum):
    # values double as the bond codes hashed during Morgan iteration
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4


_ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I "
    "Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt "
    "Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr "
    "Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()
ATOMIC_NUMBER = {sym: z for z, sym in enumerate(_ELEMENTS, start=1)}

_ORGANIC = {"B": 5, "C": 6, "N": 7, "O": 8, "P": 15, "S": 16, "F": 9, "Cl": 17, "Br": 35, "I": 53}
_AROMATIC_ORGANIC = {"b": 5, "c": 6, "n": 7, "o": 8, "p": 15, "s": 16}
_AROMATIC_BRACKET = {**_AROMATIC_ORGANIC, "se": 34, "as": 33, "te": 52}

# default valences for implicit-H filling; the lowest one that fits is used
_VALENCES = {5: (3,), 6: (4,), 7: (3,), 8: (2,), 15: (3, 5), 16: (2, 4, 6), 9: (1,), 17: (1,), 35: (1,), 53: (1,)}
# aromatic atoms that donate a lone pair rather than a pi bond (no extra valence unit)
_LONE_PAIR_AROMATIC = {8, 16}

_BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


@dataclass(frozen=True)
class AtomRecord:
    atomic_number: int
    formal_charge: int = 0
    explicit_h_count: int = 0
    is_aromatic: bool = False
    isotope: int | None = None


@dataclass(frozen=True)
class BondRecord:
    begin: int
    end: int
    order: BondOrder

    @property
    def endpoints(self) -> frozenset[int]:
        return frozenset((self.begin, self.end))


@dataclass(frozen=True)
class MolGraph:
    """Heavy-atom molecular graph.

    ``neighbors[i]`` lists ``(neighbor_index, bond_index)`` pairs and is
    derived from ``bonds``; it is not part of equality.
    """

    atoms: tuple[AtomRecord, ...]
    bonds: tuple[BondRecord, ...]
    atom_in_ring: tuple[bool, ...]
    bond_in_ring: tuple[bool, ...]
    neighbors: tuple[tuple[tuple[int, int], ...], ...] = field(compare=False, repr=False, default=())

    def __post_init__(self) -> None:
        n = len(self.atoms)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        seen = set()
        for k, b in enumerate(self.bonds):
            if b.begin == b.end or not (0 <= b.begin < n and 0 <= b.end < n):
                raise ValueError(f"bond {k} has invalid endpoints ({b.begin}, {b.end})")
            key = b.endpoints
            if key in seen:
                raise ValueError(f"duplicate bond between atoms {b.begin} and {b.end}")
            seen.add(key)
            adj[b.begin].append((b.end, k))
            adj[b.end].append((b.begin, k))
        if len(self.atom_in_ring) != n or len(self.bond_in_ring) != len(self.bonds):
            raise ValueError("ring membership flags do not match atom/bond counts")
        object.__setattr__(self, "neighbors", tuple(tuple(a) for a in adj))

    @property
    def num_atoms(self) -> int:
        return len(self.atoms)

    @property
    def num_bonds(self) -> int:
        return len(self.bonds)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def num_components(self) -> int:
        n = len(self.atoms)
        parent = list(range(n))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in self.bonds:
            ra, rb = find(b.begin), find(b.end)
            if ra != rb:
                parent[ra] = rb
        return sum(1 for i in range(n) if find(i) == i)


# -- parsing -----------------------------------------------------------------


@dataclass
class _RawAtom:
    atomic_number: int
    aromatic: bool
    bracket: bool
    charge: int = 0
    hcount: int = 0
    isotope: int | None = None


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.atoms: list[_RawAtom] = []
        # (a, b, order, explicit_symbol)
        self.bonds: list[tuple[int, int, BondOrder, bool]] = []
        self.bond_keys: set[frozenset[int]] = set()

    def error(self, message: str, pos: int | None = None) -> SmilesError:
        return SmilesError(message, self.text, self.pos if pos is None else pos)

    def add_bond(self, a: int, b: int, order: BondOrder | None, pos: int) -> None:
        if a == b:
            raise self.error("ring closure bonds an atom to itself", pos)
        key = frozenset((a, b))
        if key in self.bond_keys:
            raise self.error("duplicate bond between the same pair of atoms", pos)
        self.bond_keys.add(key)
        explicit = order is not None
        if order is None:
            if self.atoms[a].aromatic and self.atoms[b].aromatic:
                order = BondOrder.AROMATIC
            else:
                order = BondOrder.SINGLE
        self.bonds.append((a, b, order, explicit))

    def parse(self) -> None:
        text = self.text
        prev: int | None = None
        pending: BondOrder | None = None
        pending_pos = 0
        branches: list[tuple[int, int]] = []  # (atom index, '(' position)
        rings: dict[int, tuple[int, BondOrder | None, int]] = {}

        while self.pos < len(text):
            ch = text[self.pos]
            start = self.pos
            if ch == "(":
                if prev is None:
                    raise self.error("branch opened before any atom")
                if pending is not None:
                    raise self.error("bond symbol before '('")
                branches.append((prev, start))
                self.pos += 1
            elif ch == ")":
                if not branches:
                    raise self.error("unmatched closing parenthesis ')'")
                if pending is not None:
                    raise self.error("dangling bond symbol before ')'")
                prev, _ = branches.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if prev is None:
                    raise self.error(f"bond symbol {ch!r} without a preceding atom")
                if pending is not None:
                    raise self.error("two consecutive bond symbols")
                pending = _BOND_SYMBOLS[ch]
                pending_pos = start
                self.pos += 1
            elif ch == ".":
                if pending is not None:
                    raise self.error("bond symbol before '.'")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    raise self.error("ring-closure digit without a preceding atom")
                if ch == "%":
                    digits = text[self.pos + 1 : self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        raise self.error("'%' must be followed by two digits")
                    label = int(digits)
                    self.pos += 3
                else:
                    label = int(ch)
                    self.pos += 1
                if label in rings:
                    other, open_order, open_pos = rings.pop(label)
                    if pending is not None and open_order is not None and pending != open_order:
                        raise self.error(f"conflicting bond orders for ring closure {label}", start)
                    self.add_bond(other, prev, pending if pending is not None else open_order, start)
                else:
                    rings[label] = (prev, pending, start)
                pending = None
            elif ch == "[":
                idx = self.bracket_atom()
                if prev is not None:
                    self.add_bond(prev, idx, pending, start)
                pending = None
                prev = idx
            elif ch.isalpha() or ch == "*":
                idx = self.organic_atom()
                if prev is not None:
                    self.add_bond(prev, idx, pending, start)
                pending = None
                prev = idx
            else:
                raise self.error(f"unexpected character {ch!r}")

        if pending is not None:
            raise self.error("dangling bond symbol at end of input", pending_pos)
        if branches:
            raise self.error("unmatched opening parenthesis '('", branches[-1][1])
        if rings:
            label, (_, _, open_pos) = min(rings.items(), key=lambda kv: kv[1][2])
            raise self.error(f"unmatched ring-closure digit {label}", open_pos)
        if not self.atoms:
            raise self.error("no atoms")

    def organic_atom(self) -> int:
        text = self.text
        two = text[self.pos : self.pos + 2]
        if two in ("Cl", "Br"):
            self.atoms.append(_RawAtom(_ORGANIC[two], aromatic=False, bracket=False))
            self.pos += 2
        elif text[self.pos] in _ORGANIC:
            self.atoms.append(_RawAtom(_ORGANIC[text[self.pos]], aromatic=False, bracket=False))
            self.pos += 1
        elif text[self.pos] in _AROMATIC_ORGANIC:
            self.atoms.append(_RawAtom(_AROMATIC_ORGANIC[text[self.pos]], aromatic=True, bracket=False))
            self.pos += 1
        else:
            raise self.error(f"unknown element symbol {text[self.pos]!r}")
        return len(self.atoms) - 1

    def bracket_atom(self) -> int:
        text = self.text
        open_pos = self.pos
        close = text.find("]", open_pos)
        if close < 0:
            raise self.error("unterminated bracket atom", open_pos)
        body = text[open_pos + 1 : close]
        i = 0

        def fail(msg: str) -> SmilesError:
            return self.error(f"malformed bracket atom [{body}]: {msg}", open_pos + 1 + i)

        j = i
        while j < len(body) and body[j].isdigit():
            j += 1
        isotope = int(body[i:j]) if j > i else None
        if isotope == 0:
            isotope = None
        i = j

        if i >= len(body):
            raise fail("missing element symbol")
        aromatic = False
        if body[i : i + 2] in ("se", "as", "te"):
            z, aromatic = _AROMATIC_BRACKET[body[i : i + 2]], True
            i += 2
        elif body[i] in _AROMATIC_BRACKET:
            z, aromatic = _AROMATIC_BRACKET[body[i]], True
            i += 1
        elif body[i].isupper():
            if i + 1 < len(body) and body[i + 1].islower() and body[i : i + 2] in ATOMIC_NUMBER:
                sym = body[i : i + 2]
            else:
                sym = body[i]
            if sym not in ATOMIC_NUMBER:
                raise self.error(f"unknown element symbol {sym!r}", open_pos + 1 + i)
            z = ATOMIC_NUMBER[sym]
            i += len(sym)
        else:
            raise self.error(f"unknown element symbol {body[i]!r}", open_pos + 1 + i)

        # chirality, discarded
        if i < len(body) and body[i] == "@":
            i += 1
            if i < len(body) and body[i] == "@":
                i += 1
            elif body[i : i + 2] in ("TH", "AL", "SP", "TB", "OH"):
                i += 2
                j = i
                while j < len(body) and body[j].isdigit():
                    j += 1
                if j == i:
                    raise fail("chirality class without a number")
                i = j

        hcount = 0
        if i < len(body) and body[i] == "H":
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            hcount = int(body[i:j]) if j > i else 1
            i = j

        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            sym = body[i]
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j > i:
                charge = sign * int(body[i:j])
                i = j
            else:
                n = 1
                while i < len(body) and body[i] == sym:
                    n += 1
                    i += 1
                charge = sign * n

        if i < len(body) and body[i] == ":":
            i += 1
            j = i
            while j < len(body) and body[j].isdigit():
                j += 1
            if j == i:
                raise fail("atom class without a number")
            i = j

        if i != len(body):
            raise fail(f"unexpected {body[i]!r}")

        self.atoms.append(_RawAtom(z, aromatic=aromatic, bracket=True, charge=charge, hcount=hcount, isotope=isotope))
        self.pos = close + 1
        return len(self.atoms) - 1


def _ring_bonds(n: int, edges: list[tuple[int, int]]) -> list[bool]:
    """A bond is in a ring iff it is not a bridge (iterative Tarjan)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for k, (a, b) in enumerate(edges):
        adj[a].append((b, k))
        adj[b].append((a, k))
    disc = [-1] * n
    low = [0] * n
    in_ring = [True] * len(edges)
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, parent_edge, it = stack[-1]
            advanced = False
            for w, k in it:
                if k == parent_edge:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = timer
                    timer += 1
                    stack.append((w, k, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    if low[v] > disc[u]:
                        in_ring[parent_edge] = False
    return in_ring


def _implicit_h(atom: _RawAtom, bond_orders: list[BondOrder]) -> int:
    valences = _VALENCES.get(atom.atomic_number)
    if valences is None:
        return 0
    total = 0
    has_aromatic = False
    for order in bond_orders:
        if order == BondOrder.AROMATIC:
            total += 1
            has_aromatic = True
        else:
            total += int(order)
    if atom.aromatic and has_aromatic and atom.atomic_number not in _LONE_PAIR_AROMATIC:
        total += 1
    for v in valences:
        if v >= total:
            return v - total
    return 0


def parse_smiles(text: str) -> MolGraph:
    """Parse ``text`` into a :class:`MolGraph`.

    Raises:
        SmilesError: on any syntax problem, unknown element, unmatched ring
            closure or parenthesis, or malformed bracket atom.
    """
    if not isinstance(text, str):
        raise TypeError(f"SMILES must be a string, got {type(text).__name__}")
    text = text.strip()
    if not text:
        raise SmilesError("empty SMILES", text, 0)
    if not text.isascii():
        raise SmilesError("non-ASCII character", text, next(i for i, c in enumerate(text) if not c.isascii()))

    p = _Parser(text)
    p.parse()
    raw_atoms, raw_bonds = p.atoms, p.bonds

    # fold explicit [H] atoms into their heavy neighbour
    nbr_count = [0] * len(raw_atoms)
    for a, b, _, _ in raw_bonds:
        nbr_count[a] += 1
        nbr_count[b] += 1
    drop = set()
    for k, at in enumerate(raw_atoms):
        if at.atomic_number == 1 and at.isotope is None and at.charge == 0 and at.hcount == 0 and nbr_count[k] == 1:
            a, b, _, _ = next(bd for bd in raw_bonds if k in (bd[0], bd[1]))
            other = b if a == k else a
            if raw_atoms[other].atomic_number != 1:
                drop.add(k)
    folded_h = [0] * len(raw_atoms)
    for a, b, _, _ in raw_bonds:
        if a in drop:
            folded_h[b] += 1
        elif b in drop:
            folded_h[a] += 1

    remap = {}
    for k in range(len(raw_atoms)):
        if k not in drop:
            remap[k] = len(remap)
    n = len(remap)
    kept = [(remap[a], remap[b], order, explicit) for a, b, order, explicit in raw_bonds if a not in drop and b not in drop]

    edge_list = [(a, b) for a, b, _, _ in kept]
    bond_ring = _ring_bonds(n, edge_list)

    bonds = []
    orders_by_atom: list[list[BondOrder]] = [[] for _ in range(n)]
    for (a, b, order, explicit), ring in zip(kept, bond_ring):
        # implicit aromatic-aromatic bonds outside rings (e.g. biaryl links) are single
        if order == BondOrder.AROMATIC and not explicit and not ring:
            order = BondOrder.SINGLE
        bonds.append(BondRecord(a, b, order))
        orders_by_atom[a].append(order)
        orders_by_atom[b].append(order)

    atoms = []
    for k, at in enumerate(raw_atoms):
        if k in drop:
            continue
        i = remap[k]
        if at.bracket:
            h = at.hcount + folded_h[k]
        else:
            h = _implicit_h(at, orders_by_atom[i] + [BondOrder.SINGLE] * folded_h[k]) + folded_h[k]
        atoms.append(AtomRecord(at.atomic_number, at.charge, h, at.aromatic, at.isotope))

    atom_ring = [False] * n
    for (a, b), ring in zip(edge_list, bond_ring):
        if ring:
            atom_ring[a] = atom_ring[b] = True

    return MolGraph(tuple(atoms), tuple(bonds), tuple(atom_ring), tuple(bond_ring))


def initial_atom_invariants(mol: MolGraph) -> list[int]:
    """Radius-0 identifiers, one per atom.

    Each is ``hash_words`` of ``(atomic_number, heavy_degree, total_h,
    formal_charge, is_aromatic, is_in_ring)``.
    """
    out = []
    for i, atom in enumerate(mol.atoms):
        out.append(
            hash_words(
                (
                    atom.atomic_number,
                    len(mol.neighbors[i]),
                    atom.explicit_h_count,
                    atom.formal_charge,
                    int(atom.is_aromatic),
                    int(mol.atom_in_ring[i]),
                )
            )
        )
    return out
