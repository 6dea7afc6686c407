//! Element table: symbols, atomic numbers and standard atomic weights.

use std::fmt;

/// A chemical element, stored as its atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element(u8);

// (symbol, atomic weight) indexed by atomic number - 1. Weights are IUPAC
// conventional/standard values rounded to three decimals.
const TABLE: &[(&str, f64)] = &[
    ("H", 1.008),
    ("He", 4.003),
    ("Li", 6.941),
    ("Be", 9.012),
    ("B", 10.812),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("Ne", 20.180),
    ("Na", 22.990),
    ("Mg", 24.305),
    ("Al", 26.982),
    ("Si", 28.086),
    ("P", 30.974),
    ("S", 32.067),
    ("Cl", 35.453),
    ("Ar", 39.948),
    ("K", 39.098),
    ("Ca", 40.078),
    ("Sc", 44.956),
    ("Ti", 47.867),
    ("V", 50.942),
    ("Cr", 51.996),
    ("Mn", 54.938),
    ("Fe", 55.845),
    ("Co", 58.933),
    ("Ni", 58.693),
    ("Cu", 63.546),
    ("Zn", 65.390),
    ("Ga", 69.723),
    ("Ge", 72.610),
    ("As", 74.922),
    ("Se", 78.960),
    ("Br", 79.904),
    ("Kr", 83.800),
    ("Rb", 85.468),
    ("Sr", 87.620),
    ("Y", 88.906),
    ("Zr", 91.224),
    ("Nb", 92.906),
    ("Mo", 95.940),
    ("Tc", 98.000),
    ("Ru", 101.070),
    ("Rh", 102.906),
    ("Pd", 106.420),
    ("Ag", 107.868),
    ("Cd", 112.411),
    ("In", 114.818),
    ("Sn", 118.710),
    ("Sb", 121.760),
    ("Te", 127.600),
    ("I", 126.904),
    ("Xe", 131.290),
    ("Cs", 132.905),
    ("Ba", 137.327),
    ("La", 138.906),
    ("Ce", 140.116),
    ("Pr", 140.908),
    ("Nd", 144.240),
    ("Pm", 145.000),
    ("Sm", 150.360),
    ("Eu", 151.964),
    ("Gd", 157.250),
    ("Tb", 158.925),
    ("Dy", 162.500),
    ("Ho", 164.930),
    ("Er", 167.260),
    ("Tm", 168.934),
    ("Yb", 173.040),
    ("Lu", 174.967),
    ("Hf", 178.490),
    ("Ta", 180.948),
    ("W", 183.840),
    ("Re", 186.207),
    ("Os", 190.230),
    ("Ir", 192.217),
    ("Pt", 195.078),
    ("Au", 196.967),
    ("Hg", 200.590),
    ("Tl", 204.383),
    ("Pb", 207.200),
    ("Bi", 208.980),
    ("Po", 209.000),
    ("At", 210.000),
    ("Rn", 222.000),
];

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..=TABLE.len() as u8).contains(&z).then_some(Element(z))
    }

    /// Case-sensitive lookup of a standard element symbol ("Cl", not "CL").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE
            .iter()
            .position(|(s, _)| *s == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize - 1].0
    }

    /// Average atomic weight in Da.
    pub fn mass(self) -> f64 {
        TABLE[self.0 as usize - 1].1
    }

    pub fn is_halogen(self) -> bool {
        matches!(self.0, 9 | 17 | 35 | 53 | 85)
    }

    /// Allowed valences for an atom of this element carrying `charge`.
    ///
    /// Charged main-group atoms take the valences of their isoelectronic
    /// neighbour (N+ behaves like C, O- like F). Elements outside the organic
    /// set return `None`, meaning no valence check applies.
    pub fn valences(self, charge: i8) -> Option<&'static [u8]> {
        let v: &'static [u8] = match (self.0, charge) {
            (1, 0) => &[1],
            (5, 0) => &[3],
            (5, -1) => &[4],
            (6, 0) => &[4],
            (6, 1) | (6, -1) => &[3],
            (7, 0) => &[3],
            (7, 1) => &[4],
            (7, -1) => &[2],
            (8, 0) => &[2],
            (8, 1) => &[3],
            (8, -1) => &[1],
            (9, 0) => &[1],
            (15, 0) => &[3, 5],
            (15, 1) => &[4],
            (15, -1) => &[2, 4],
            (16, 0) => &[2, 4, 6],
            (16, 1) => &[3, 5],
            (16, -1) => &[1, 3, 5],
            (17 | 35 | 53, 0) => &[1, 3, 5, 7],
            (9 | 17 | 35 | 53, -1) => &[0],
            (17 | 35 | 53, 1) => &[2],
            _ => return None,
        };
        Some(v)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for z in 1..=86u8 {
            let e = Element::from_atomic_number(z).unwrap();
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert_eq!(Element::from_symbol("CL"), None);
        assert_eq!(Element::from_atomic_number(0), None);
    }

    #[test]
    fn water_mass() {
        let m = 2.0 * Element::H.mass() + Element::O.mass();
        assert!((m - 18.015).abs() < 1e-9);
    }
}
