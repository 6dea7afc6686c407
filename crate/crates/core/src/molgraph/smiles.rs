//! SMILES reader.
//!
//! Covers the organic subset, bracket atoms (isotope, chirality, hydrogen
//! count, charge, atom class), branches, ring closures (`1`-`9` and `%nn`)
//! and dot-disconnected components. Stereo marks are kept but not used.

use std::collections::HashMap;

use super::{Atom, Bond, BondOrder, BondStereo, Element, Molecule, SmilesError};

/// Parses a SMILES string into a [`Molecule`].
///
/// ```
/// use attrilens::molgraph::parse_smiles;
/// let ethanol = parse_smiles("CCO").unwrap();
/// assert_eq!(ethanol.heavy_atom_count(), 3);
/// ```
pub fn parse_smiles(smiles: &str) -> Result<Molecule, SmilesError> {
    let trimmed = smiles.trim();
    if trimmed.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        s: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        open_rings: HashMap::new(),
    };
    p.run()?;
    Molecule::build(p.atoms, p.bonds, trimmed.to_string())
}

struct PendingBond {
    order: Option<BondOrder>,
    stereo: Option<BondStereo>,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    // label -> (atom, bond spec written at the opening, byte position)
    open_rings: HashMap<u32, (usize, Option<BondOrder>, usize)>,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> SmilesError {
        SmilesError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut prev: Option<usize> = None;
        let mut branches: Vec<(Option<usize>, usize)> = Vec::new();
        let mut pending: Option<PendingBond> = None;
        // true right after '(' or at the start of a component
        let mut dot_pending = false;

        while let Some(c) = self.peek() {
            match c {
                b'(' => {
                    if prev.is_none() || pending.is_some() {
                        return Err(self.syntax("branch must follow an atom"));
                    }
                    branches.push((prev, self.pos));
                    self.pos += 1;
                    if self.peek() == Some(b')') {
                        return Err(self.syntax("empty branch"));
                    }
                }
                b')' => {
                    let Some((saved, _)) = branches.pop() else {
                        return Err(SmilesError::UnbalancedBranch { pos: self.pos });
                    };
                    if pending.is_some() {
                        return Err(self.syntax("bond without a following atom"));
                    }
                    prev = saved;
                    self.pos += 1;
                }
                b'.' => {
                    if pending.is_some() || prev.is_none() {
                        return Err(self.syntax("misplaced '.'"));
                    }
                    if !branches.is_empty() {
                        return Err(self.syntax("'.' inside a branch"));
                    }
                    prev = None;
                    dot_pending = true;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' | b'$' => {
                    if pending.is_some() {
                        return Err(self.syntax("consecutive bond symbols"));
                    }
                    if prev.is_none() {
                        return Err(self.syntax("bond must follow an atom"));
                    }
                    let (order, stereo) = match c {
                        b'-' => (Some(BondOrder::Single), None),
                        b'=' => (Some(BondOrder::Double), None),
                        b'#' => (Some(BondOrder::Triple), None),
                        b':' => (Some(BondOrder::Aromatic), None),
                        b'/' => (None, Some(BondStereo::Up)),
                        b'\\' => (None, Some(BondStereo::Down)),
                        _ => return Err(self.syntax("quadruple bonds are not supported")),
                    };
                    pending = Some(PendingBond { order, stereo });
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = prev else {
                        return Err(self.syntax("ring closure must follow an atom"));
                    };
                    let start = self.pos;
                    let label = self.ring_label()?;
                    let spec = pending.take();
                    self.ring_closure(atom, label, spec, start)?;
                }
                _ => {
                    let start = self.pos;
                    let atom = self.atom()?;
                    let idx = self.atoms.len();
                    self.atoms.push(atom);
                    if let Some(p) = prev {
                        let spec = pending.take();
                        let order = spec
                            .as_ref()
                            .and_then(|b| b.order)
                            .unwrap_or_else(|| self.default_order(p, idx));
                        self.bonds.push(Bond {
                            a: p,
                            b: idx,
                            order,
                            stereo: spec.and_then(|b| b.stereo),
                        });
                    } else if pending.is_some() {
                        self.pos = start;
                        return Err(self.syntax("bond must follow an atom"));
                    }
                    prev = Some(idx);
                    dot_pending = false;
                }
            }
        }
        if pending.is_some() || dot_pending {
            return Err(self.syntax("unexpected end of input"));
        }
        if let Some(&(_, pos)) = branches.last() {
            return Err(SmilesError::UnbalancedBranch { pos });
        }
        if let Some((&label, &(_, _, pos))) = self.open_rings.iter().min_by_key(|(_, v)| v.2) {
            return Err(SmilesError::UnbalancedRing { label, pos });
        }
        Ok(())
    }

    fn default_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.s.get(self.pos..self.pos + 2).unwrap_or(&[]);
            if digits.len() != 2 || !digits.iter().all(u8::is_ascii_digit) {
                return Err(self.syntax("'%' must be followed by two digits"));
            }
            self.pos += 2;
            Ok(((digits[0] - b'0') * 10 + (digits[1] - b'0')) as u32)
        } else {
            let d = self.s[self.pos] - b'0';
            self.pos += 1;
            Ok(d as u32)
        }
    }

    fn ring_closure(
        &mut self,
        atom: usize,
        label: u32,
        spec: Option<PendingBond>,
        start: usize,
    ) -> Result<(), SmilesError> {
        let order = spec.as_ref().and_then(|b| b.order);
        match self.open_rings.remove(&label) {
            None => {
                self.open_rings.insert(label, (atom, order, start));
            }
            Some((other, open_order, _)) => {
                if other == atom {
                    return Err(self.syntax("ring closure to the same atom"));
                }
                let order = match (open_order, order) {
                    (Some(x), Some(y)) if x != y => {
                        return Err(self.syntax("conflicting ring-closure bond orders"))
                    }
                    (Some(x), _) | (None, Some(x)) => x,
                    (None, None) => self.default_order(other, atom),
                };
                if self
                    .bonds
                    .iter()
                    .any(|b| (b.a == other && b.b == atom) || (b.a == atom && b.b == other))
                {
                    return Err(self.syntax("ring closure duplicates an existing bond"));
                }
                self.bonds.push(Bond {
                    a: other,
                    b: atom,
                    order,
                    stereo: spec.and_then(|b| b.stereo),
                });
            }
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<Atom, SmilesError> {
        let c = self.s[self.pos];
        if c == b'[' {
            return self.bracket_atom();
        }
        let start = self.pos;
        let two = self.s.get(self.pos..self.pos + 2);
        let (symbol, aromatic, len) = match (c, two) {
            (b'C', Some(b"Cl")) => ("Cl", false, 2),
            (b'B', Some(b"Br")) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => (
                std::str::from_utf8(&self.s[start..start + 1]).unwrap(),
                false,
                1,
            ),
            (b'b', _) => ("B", true, 1),
            (b'c', _) => ("C", true, 1),
            (b'n', _) => ("N", true, 1),
            (b'o', _) => ("O", true, 1),
            (b'p', _) => ("P", true, 1),
            (b's', _) => ("S", true, 1),
            _ => {
                let end = self.s[start..]
                    .iter()
                    .position(|b| !b.is_ascii_alphabetic())
                    .map_or(self.s.len(), |i| start + i.max(1));
                return Err(SmilesError::UnknownElement {
                    symbol: String::from_utf8_lossy(&self.s[start..end.max(start + 1)])
                        .into_owned(),
                    pos: start,
                });
            }
        };
        self.pos += len;
        let mut atom = Atom::new(Element::from_symbol(symbol).unwrap(), 0);
        atom.aromatic = aromatic;
        Ok(atom)
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        let Some(close) = self.s[open..].iter().position(|&b| b == b']') else {
            return Err(self.syntax("unterminated bracket atom"));
        };
        let body = &self.s[open + 1..open + close];
        let mut i = 0;
        let at = |i: usize| body.get(i).copied();

        let mut isotope = None;
        let digits_start = i;
        while at(i).is_some_and(|b| b.is_ascii_digit()) {
            i += 1;
        }
        if i > digits_start {
            let n: u32 = std::str::from_utf8(&body[digits_start..i])
                .unwrap()
                .parse()
                .map_err(|_| self.syntax("bad isotope"))?;
            if n == 0 || n > 999 {
                return Err(self.syntax("isotope out of range"));
            }
            isotope = Some(n as u16);
        }

        let sym_start = i;
        if !at(i).is_some_and(|b| b.is_ascii_alphabetic()) {
            return Err(SmilesError::UnknownElement {
                symbol: String::from_utf8_lossy(body).into_owned(),
                pos: open + 1 + sym_start,
            });
        }
        let (element, aromatic) = {
            let one = &body[i..i + 1];
            let two = body.get(i..i + 2).filter(|t| t[1].is_ascii_lowercase());
            let lookup = |t: &[u8]| -> Option<(Element, bool)> {
                let s = std::str::from_utf8(t).ok()?;
                if t[0].is_ascii_uppercase() {
                    Element::from_symbol(s).map(|e| (e, false))
                } else {
                    match s {
                        "b" | "c" | "n" | "o" | "p" | "s" | "se" | "as" | "te" => {
                            let mut up = s.to_string();
                            up[..1].make_ascii_uppercase();
                            Element::from_symbol(&up).map(|e| (e, true))
                        }
                        _ => None,
                    }
                }
            };
            // Two-letter symbols win over one-letter ones ("Cl" over "C" + "l")
            // except where the second letter starts the hydrogen count.
            if let Some(found) = two.and_then(lookup) {
                i += 2;
                found
            } else if let Some(found) = lookup(one) {
                i += 1;
                found
            } else {
                let end = body[i..]
                    .iter()
                    .position(|b| !b.is_ascii_alphabetic())
                    .map_or(body.len(), |k| i + k);
                return Err(SmilesError::UnknownElement {
                    symbol: String::from_utf8_lossy(&body[i..end]).into_owned(),
                    pos: open + 1 + sym_start,
                });
            }
        };

        let mut chirality = None;
        if at(i) == Some(b'@') {
            let cs = i;
            i += 1;
            if at(i) == Some(b'@') {
                i += 1;
            } else if matches!(
                body.get(i..i + 2),
                Some(b"TH" | b"AL" | b"SP" | b"TB" | b"OH")
            ) {
                i += 2;
                let ds = i;
                while at(i).is_some_and(|b| b.is_ascii_digit()) {
                    i += 1;
                }
                if i == ds {
                    return Err(self.syntax("chirality class needs a number"));
                }
            }
            chirality = Some(String::from_utf8_lossy(&body[cs..i]).into_owned());
        }

        let mut hcount = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            hcount = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                hcount = d - b'0';
                i += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let unit = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if at(i).is_some_and(|b| b.is_ascii_digit()) {
                let ds = i;
                while at(i).is_some_and(|b| b.is_ascii_digit()) {
                    i += 1;
                }
                let n: i32 = std::str::from_utf8(&body[ds..i])
                    .unwrap()
                    .parse()
                    .map_err(|_| self.syntax("bad charge"))?;
                charge = unit * n;
            } else {
                charge = unit;
                while at(i) == Some(sign) {
                    charge += unit;
                    i += 1;
                }
            }
            if charge.abs() > 15 {
                return Err(self.syntax("charge out of range"));
            }
        }

        if at(i) == Some(b':') {
            i += 1;
            let ds = i;
            while at(i).is_some_and(|b| b.is_ascii_digit()) {
                i += 1;
            }
            if i == ds {
                return Err(self.syntax("atom class needs digits"));
            }
        }

        if i != body.len() {
            self.pos = open + 1 + i;
            return Err(self.syntax("unexpected character in bracket atom"));
        }
        self.pos = open + close + 1;

        let mut atom = Atom::new(element, 0);
        atom.aromatic = aromatic;
        atom.isotope = isotope;
        atom.chirality = chirality;
        atom.explicit_h = hcount;
        atom.formal_charge = charge as i8;
        atom.bracket = true;
        Ok(atom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_details() {
        let m = parse_smiles("[2H][C@@H](Cl)[N+:3]([O-])=O").unwrap();
        let a = m.atoms();
        assert_eq!(a[0].isotope, Some(2));
        assert_eq!(a[1].chirality.as_deref(), Some("@@"));
        assert_eq!(a[1].explicit_h, 1);
        assert_eq!(a[2].element, Element::CL);
        assert_eq!(a[3].formal_charge, 1);
        assert_eq!(a[4].formal_charge, -1);
    }

    #[test]
    fn charge_forms() {
        assert_eq!(parse_smiles("[Fe++]").unwrap().atoms()[0].formal_charge, 2);
        assert_eq!(parse_smiles("[Fe+3]").unwrap().atoms()[0].formal_charge, 3);
        assert_eq!(parse_smiles("[O--]").unwrap().atoms()[0].formal_charge, -2);
    }

    #[test]
    fn aromatic_bracket_atoms() {
        let m = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(m.atoms()[3].aromatic);
        assert_eq!(m.total_h(3), 1);
        let m = parse_smiles("c1cc[se]c1").unwrap();
        assert!(m.atoms()[3].aromatic);
    }

    #[test]
    fn syntax_errors() {
        for bad in [
            "(C)", "C(", "C=", "C==C", "C.", ".C", "[C", "C%1", "C1CC%", "[C@X]", "C$C", "[CH+x]",
        ] {
            assert!(parse_smiles(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn whitespace_trimmed() {
        assert_eq!(parse_smiles("  CCO\n").unwrap().source(), "CCO");
    }
}
