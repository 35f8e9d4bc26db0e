//! Finite-group arithmetic for the groups the simulator needs: ℤ₂, ℤ₃, S₃ and
//! their direct products.
//!
//! Groups are stored as dense multiplication tables over element indices.
//! S₃ uses the fixed element order `(e, t, c, ct, c², c²t)`, i.e. the element
//! `c^r t^s` sits at index `2r + s`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QdError, Result};

/// Index of an element inside its group's element list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Element(pub u8);

impl Element {
    pub const IDENTITY: Element = Element(0);

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A finite group given by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    mult: Vec<u8>,
    inv: Vec<u8>,
    identity: Element,
    names: Vec<String>,
}

impl FiniteGroup {
    /// Builds a group from a full multiplication table, validating the group axioms.
    pub fn from_table(name: &str, names: Vec<String>, mult: Vec<u8>) -> Result<Self> {
        let order = names.len();
        if order == 0 || order > 255 || mult.len() != order * order {
            return Err(QdError::InvalidGroup(format!(
                "table size {} does not match {} element names",
                mult.len(),
                order
            )));
        }
        if mult.iter().any(|&m| m as usize >= order) {
            return Err(QdError::InvalidGroup("table entry out of range".into()));
        }
        let at = |a: usize, b: usize| mult[a * order + b] as usize;
        let identity = (0..order)
            .find(|&e| (0..order).all(|g| at(e, g) == g && at(g, e) == g))
            .ok_or_else(|| QdError::InvalidGroup("no identity element".into()))?;
        let mut inv = vec![0u8; order];
        for a in 0..order {
            let b = (0..order)
                .find(|&b| at(a, b) == identity && at(b, a) == identity)
                .ok_or_else(|| {
                    QdError::InvalidGroup(format!("element {} has no inverse", names[a]))
                })?;
            inv[a] = b as u8;
        }
        for a in 0..order {
            for b in 0..order {
                for c in 0..order {
                    if at(at(a, b), c) != at(a, at(b, c)) {
                        return Err(QdError::InvalidGroup(format!(
                            "associativity fails on ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            order,
            mult,
            inv,
            identity: Element(identity as u8),
            names,
        })
    }

    /// ℤ₂ = {e, x}.
    pub fn z2() -> Self {
        Self::cyclic(2, &["e", "x"])
    }

    /// ℤ₃ = {e, c, c²}.
    pub fn z3() -> Self {
        Self::cyclic(3, &["e", "c", "c²"])
    }

    fn cyclic(n: usize, names: &[&str]) -> Self {
        let mult = (0..n * n).map(|k| ((k / n + k % n) % n) as u8).collect();
        let names = names.iter().map(|s| s.to_string()).collect();
        Self::from_table(&format!("Z{n}"), names, mult).expect("cyclic group table is valid")
    }

    /// S₃ with generators `t` (order 2) and `c` (order 3), `ct = tc²`.
    pub fn s3() -> Self {
        // c^r1 t^s1 · c^r2 t^s2 = c^(r1 + (-1)^s1 r2) t^(s1 + s2)
        let mut mult = Vec::with_capacity(36);
        for a in 0..6usize {
            for b in 0..6usize {
                let (r1, s1) = (a / 2, a % 2);
                let (r2, s2) = (b / 2, b % 2);
                let r = if s1 == 0 { r1 + r2 } else { r1 + 3 - r2 } % 3;
                let s = (s1 + s2) % 2;
                mult.push((2 * r + s) as u8);
            }
        }
        let names = ["e", "t", "c", "ct", "c²", "c²t"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        Self::from_table("S3", names, mult).expect("S3 table is valid")
    }

    /// Componentwise product `G × H`; the pair `(g, h)` has index `g·|H| + h`.
    pub fn direct_product(g: &FiniteGroup, h: &FiniteGroup) -> Self {
        let (m, n) = (g.order, h.order);
        let mut mult = Vec::with_capacity(m * n * m * n);
        for a in 0..m * n {
            for b in 0..m * n {
                let left = g.multiply(Element((a / n) as u8), Element((b / n) as u8));
                let right = h.multiply(Element((a % n) as u8), Element((b % n) as u8));
                mult.push((left.index() * n + right.index()) as u8);
            }
        }
        let names = (0..m * n)
            .map(|k| format!("({},{})", g.names[k / n], h.names[k % n]))
            .collect();
        Self::from_table(&format!("{}x{}", g.name, h.name), names, mult)
            .expect("direct product of valid groups is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> Element {
        self.identity
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.order).map(|i| Element(i as u8))
    }

    pub fn element_name(&self, g: Element) -> &str {
        &self.names[g.index()]
    }

    pub fn element_by_name(&self, name: &str) -> Option<Element> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Element(i as u8))
    }

    #[inline]
    pub fn multiply(&self, a: Element, b: Element) -> Element {
        Element(self.mult[a.index() * self.order + b.index()])
    }

    #[inline]
    pub fn inverse(&self, a: Element) -> Element {
        Element(self.inv[a.index()])
    }

    /// `g h g⁻¹`
    #[inline]
    pub fn conjugate(&self, g: Element, h: Element) -> Element {
        self.multiply(self.multiply(g, h), self.inverse(g))
    }

    pub fn product<I: IntoIterator<Item = Element>>(&self, items: I) -> Element {
        items
            .into_iter()
            .fold(self.identity, |acc, g| self.multiply(acc, g))
    }

    pub fn element_order(&self, g: Element) -> usize {
        let mut k = 1;
        let mut x = g;
        while x != self.identity {
            x = self.multiply(x, g);
            k += 1;
        }
        k
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|a| {
            self.elements()
                .all(|b| self.multiply(a, b) == self.multiply(b, a))
        })
    }

    pub fn centralizer(&self, g: Element) -> Subgroup {
        Subgroup::from_members(
            self.elements()
                .filter(|&h| self.multiply(g, h) == self.multiply(h, g)),
        )
    }

    pub fn conjugacy_classes(&self) -> Vec<ConjugacyClass> {
        let mut seen = vec![false; self.order];
        let mut classes = Vec::new();
        for g in self.elements() {
            if seen[g.index()] {
                continue;
            }
            let members: BTreeSet<Element> =
                self.elements().map(|k| self.conjugate(k, g)).collect();
            for m in &members {
                seen[m.index()] = true;
            }
            classes.push(ConjugacyClass {
                representative: g,
                members: members.into_iter().collect(),
                normalizer: self.centralizer(g),
            });
        }
        classes
    }

    pub fn class_of(&self, g: Element) -> ConjugacyClass {
        self.conjugacy_classes()
            .into_iter()
            .find(|c| c.members.contains(&g))
            .expect("every element lies in a class")
    }

    /// Exhaustive enumeration of subgroups, one representative per conjugacy
    /// class of subgroups, sorted by order and then by member list.
    pub fn subgroups_up_to_conjugation(&self) -> Vec<Subgroup> {
        assert!(
            self.order <= 16,
            "exhaustive subgroup enumeration is limited to tiny groups"
        );
        let mut reps: Vec<Subgroup> = Vec::new();
        let mut canon_seen: BTreeSet<u32> = BTreeSet::new();
        for mask in 1u32..(1u32 << self.order) {
            if mask & (1 << self.identity.index()) == 0 {
                continue;
            }
            let members: Vec<Element> = self
                .elements()
                .filter(|g| mask & (1 << g.index()) != 0)
                .collect();
            let closed = members.iter().all(|&a| {
                members
                    .iter()
                    .all(|&b| mask & (1 << self.multiply(a, b).index()) != 0)
            });
            if !closed {
                continue;
            }
            let canon = self
                .elements()
                .map(|k| {
                    members
                        .iter()
                        .fold(0u32, |acc, &h| acc | (1 << self.conjugate(k, h).index()))
                })
                .min()
                .unwrap();
            if canon_seen.insert(canon) {
                reps.push(Subgroup::from_members(members));
            }
        }
        reps.sort_by(|a, b| a.order().cmp(&b.order()).then(a.members.cmp(&b.members)));
        reps
    }

    pub fn is_subgroup(&self, members: &[Element]) -> bool {
        members.contains(&self.identity)
            && members.iter().all(|&a| {
                members
                    .iter()
                    .all(|&b| members.contains(&self.multiply(a, b)))
            })
    }

    /// Whether two subgroups are conjugate inside this group.
    pub fn are_conjugate(&self, a: &Subgroup, b: &Subgroup) -> bool {
        a.order() == b.order()
            && self
                .elements()
                .any(|k| a.members.iter().all(|&h| b.contains(self.conjugate(k, h))))
    }

    /// Restricts the multiplication table to a subgroup, keeping member order.
    pub fn subgroup_as_group(&self, sub: &Subgroup) -> Result<FiniteGroup> {
        if !self.is_subgroup(&sub.members) {
            return Err(QdError::InvalidGroup(
                "members do not form a subgroup".into(),
            ));
        }
        let pos = |g: Element| sub.members.iter().position(|&m| m == g).unwrap() as u8;
        let mut mult = Vec::with_capacity(sub.order() * sub.order());
        for &a in &sub.members {
            for &b in &sub.members {
                mult.push(pos(self.multiply(a, b)));
            }
        }
        let names = sub
            .members
            .iter()
            .map(|&g| self.element_name(g).to_string())
            .collect();
        FiniteGroup::from_table(&format!("{}<{}>", self.name, sub.order()), names, mult)
    }

    /// Plain-text dump of element names and multiplication rows.
    pub fn table_document(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "group {}", self.name);
        let _ = writeln!(out, "order {}", self.order);
        let _ = writeln!(out, "elements {}", self.names.join(" "));
        for a in self.elements() {
            let row: Vec<&str> = self
                .elements()
                .map(|b| self.element_name(self.multiply(a, b)))
                .collect();
            let _ = writeln!(out, "row {} : {}", self.element_name(a), row.join(" "));
        }
        out
    }

    /// Dense permutation matrix of left multiplication `|h⟩ → |gh⟩`.
    pub fn left_regular(&self, g: Element) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.order]; self.order];
        for h in self.elements() {
            m[self.multiply(g, h).index()][h.index()] = 1;
        }
        m
    }

    /// Dense permutation matrix of right multiplication `|h⟩ → |hg⟩`.
    pub fn right_regular(&self, g: Element) -> Vec<Vec<u8>> {
        let mut m = vec![vec![0u8; self.order]; self.order];
        for h in self.elements() {
            m[self.multiply(h, g).index()][h.index()] = 1;
        }
        m
    }
}

/// A conjugacy class together with the centralizer of its representative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyClass {
    pub representative: Element,
    pub members: Vec<Element>,
    pub normalizer: Subgroup,
}

/// A subgroup, stored as its sorted member list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Subgroup {
    pub members: Vec<Element>,
}

impl Subgroup {
    pub fn from_members<I: IntoIterator<Item = Element>>(members: I) -> Self {
        let set: BTreeSet<Element> = members.into_iter().collect();
        Self {
            members: set.into_iter().collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: Element) -> bool {
        self.members.binary_search(&g).is_ok()
    }
}

/// A unitary irreducible representation, one `dim × dim` row-major matrix per element.
#[derive(Debug, Clone)]
pub struct Irrep {
    pub label: String,
    pub dim: usize,
    pub matrices: Vec<Vec<Complex64>>,
}

impl Irrep {
    pub fn entry(&self, g: Element, i: usize, j: usize) -> Complex64 {
        self.matrices[g.index()][i * self.dim + j]
    }

    pub fn character(&self, g: Element) -> Complex64 {
        (0..self.dim).map(|i| self.entry(g, i, i)).sum()
    }
}

/// Irreps of ℤ₂, ℤ₃ or any group isomorphic to S₃.
///
/// The S₃ irreps are labelled `A` (trivial), `B` (sign) and `C` (the real
/// two-dimensional rotation/reflection representation).
pub fn irrep_table(g: &FiniteGroup) -> Result<Vec<Irrep>> {
    let one = Complex64::new(1.0, 0.0);
    match (g.order(), g.is_abelian()) {
        (1, _) => Ok(vec![Irrep {
            label: "A".into(),
            dim: 1,
            matrices: vec![vec![one]],
        }]),
        (2, _) => {
            let x = g.elements().find(|&h| h != g.identity()).unwrap();
            let sign = g
                .elements()
                .map(|h| vec![if h == x { -one } else { one }])
                .collect();
            Ok(vec![
                Irrep {
                    label: "A".into(),
                    dim: 1,
                    matrices: vec![vec![one]; 2],
                },
                Irrep {
                    label: "B".into(),
                    dim: 1,
                    matrices: sign,
                },
            ])
        }
        (3, true) => {
            let c = g.elements().find(|&h| h != g.identity()).unwrap();
            let power = |h: Element| {
                let mut x = g.identity();
                (0..3)
                    .find(|_| {
                        let hit = x == h;
                        x = g.multiply(x, c);
                        hit
                    })
                    .unwrap()
            };
            let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
            let labels = ["1", "ω", "ω̄"];
            Ok((0..3)
                .map(|k| Irrep {
                    label: labels[k].into(),
                    dim: 1,
                    matrices: g
                        .elements()
                        .map(|h| vec![omega.powu((k * power(h)) as u32)])
                        .collect(),
                })
                .collect())
        }
        (6, false) => {
            let (c, t) = s3_generators(g)?;
            let decomposition: Vec<(usize, usize)> = g
                .elements()
                .map(|h| {
                    for r in 0..3 {
                        for s in 0..2 {
                            let mut w = g.identity();
                            for _ in 0..r {
                                w = g.multiply(w, c);
                            }
                            if s == 1 {
                                w = g.multiply(w, t);
                            }
                            if w == h {
                                return (r, s);
                            }
                        }
                    }
                    unreachable!("c and t generate the group")
                })
                .collect();
            let theta = 2.0 * std::f64::consts::PI / 3.0;
            let rot = |r: usize| {
                let a = theta * r as f64;
                [a.cos(), -a.sin(), a.sin(), a.cos()]
            };
            let mut trivial = Vec::new();
            let mut sign = Vec::new();
            let mut two = Vec::new();
            for &(r, s) in &decomposition {
                trivial.push(vec![one]);
                sign.push(vec![if s == 1 { -one } else { one }]);
                // ρ(c^r t^s) = R(r·2π/3) · diag(1, -1)^s
                let m = rot(r);
                let m = if s == 1 {
                    [m[0], -m[1], m[2], -m[3]]
                } else {
                    m
                };
                two.push(m.iter().map(|&v| Complex64::new(v, 0.0)).collect());
            }
            Ok(vec![
                Irrep {
                    label: "A".into(),
                    dim: 1,
                    matrices: trivial,
                },
                Irrep {
                    label: "B".into(),
                    dim: 1,
                    matrices: sign,
                },
                Irrep {
                    label: "C".into(),
                    dim: 2,
                    matrices: two,
                },
            ])
        }
        _ => Err(QdError::UnsupportedGroup(g.name().to_string())),
    }
}

/// Finds `c` of order 3 and `t` of order 2 with `ct = tc²` in a group isomorphic to S₃.
pub fn s3_generators(g: &FiniteGroup) -> Result<(Element, Element)> {
    let by_name = (g.element_by_name("c"), g.element_by_name("t"));
    if let (Some(c), Some(t)) = by_name {
        return Ok((c, t));
    }
    let c = g
        .elements()
        .find(|&h| g.element_order(h) == 3)
        .ok_or_else(|| QdError::UnsupportedGroup(g.name().to_string()))?;
    let t = g
        .elements()
        .find(|&h| g.element_order(h) == 2 && g.multiply(c, h) == g.multiply(h, g.multiply(c, c)))
        .ok_or_else(|| QdError::UnsupportedGroup(g.name().to_string()))?;
    Ok((c, t))
}

/// `c^r t^s ↦ (r, s)` for the built-in S₃ element order.
pub fn qubit_qutrit_encode(g: Element) -> (u8, u8) {
    debug_assert!(g.0 < 6);
    (g.0 / 2, g.0 % 2)
}

pub fn qubit_qutrit_decode(r: u8, s: u8) -> Element {
    debug_assert!(r < 3 && s < 2);
    Element(2 * r + s)
}

/// Well-known names for the built-in S₃ elements.
pub mod s3 {
    use super::Element;
    pub const E: Element = Element(0);
    pub const T: Element = Element(1);
    pub const C: Element = Element(2);
    pub const CT: Element = Element(3);
    pub const C2: Element = Element(4);
    pub const C2T: Element = Element(5);
    pub const ALL: [Element; 6] = [E, T, C, CT, C2, C2T];

    /// +1 on rotations, −1 on reflections.
    pub fn sign(g: Element) -> i8 {
        if g.0 % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// The ambient group ℤ₂ × S₃ in which every edge value of a hybrid lattice lives.
pub mod ambient {
    use super::{Element, FiniteGroup, Subgroup};

    pub fn group() -> FiniteGroup {
        FiniteGroup::direct_product(&FiniteGroup::z2(), &FiniteGroup::s3())
    }

    pub fn pair(z2: u8, s3: Element) -> Element {
        Element(z2 * 6 + s3.0)
    }

    pub fn z2_part(g: Element) -> u8 {
        g.0 / 6
    }

    pub fn s3_part(g: Element) -> Element {
        Element(g.0 % 6)
    }

    /// `(x, e)`.
    pub const X: Element = Element(6);

    const fn s3_mul(a: u8, b: u8) -> u8 {
        let (r1, s1, r2, s2) = (a / 2, a % 2, b / 2, b % 2);
        let r = if s1 == 0 { r1 + r2 } else { r1 + 3 - r2 };
        (r % 3) * 2 + (s1 + s2) % 2
    }

    const fn build() -> [[u8; 12]; 12] {
        let mut t = [[0u8; 12]; 12];
        let mut a = 0;
        while a < 12 {
            let mut b = 0;
            while b < 12 {
                let z = (a / 6 + b / 6) % 2;
                t[a][b] = (z * 6) as u8 + s3_mul((a % 6) as u8, (b % 6) as u8);
                b += 1;
            }
            a += 1;
        }
        t
    }

    /// Multiplication table of ℤ₂ × S₃ in the index convention `6a + b`.
    pub const MUL: [[u8; 12]; 12] = build();
    const INV: [u8; 12] = [0, 1, 4, 3, 2, 5, 6, 7, 10, 9, 8, 11];

    #[inline]
    pub fn mul(a: Element, b: Element) -> Element {
        Element(MUL[a.index()][b.index()])
    }

    #[inline]
    pub fn inv(a: Element) -> Element {
        Element(INV[a.index()])
    }

    #[inline]
    pub fn conj(g: Element, h: Element) -> Element {
        mul(mul(g, h), inv(g))
    }

    /// Subgroup `K_label` of ℤ₂ × S₃, labels 1 to 10, one per conjugacy class.
    pub fn table_subgroup(label: usize) -> Option<Subgroup> {
        use super::s3::*;
        let e = |g: Element| pair(0, g);
        let x = |g: Element| pair(1, g);
        let members: Vec<Element> = match label {
            1 => vec![e(E)],
            2 => vec![e(E), e(T)],
            3 => vec![e(E), x(E)],
            4 => vec![e(E), x(T)],
            5 => vec![e(E), e(C), e(C2)],
            6 => vec![e(E), e(T), x(E), x(T)],
            7 => vec![e(E), e(C), e(C2), x(E), x(C), x(C2)],
            8 => ALL.iter().map(|&g| e(g)).collect(),
            9 => vec![e(E), e(C), e(C2), x(T), x(CT), x(C2T)],
            10 => ALL.iter().flat_map(|&g| [e(g), x(g)]).collect(),
            _ => return None,
        };
        Some(Subgroup::from_members(members))
    }
}

#[cfg(test)]
mod tests {
    use super::s3::*;
    use super::*;

    #[test]
    fn ambient_fast_table_matches_generic_product() {
        let g = ambient::group();
        for a in g.elements() {
            assert_eq!(ambient::inv(a), g.inverse(a));
            for b in g.elements() {
                assert_eq!(ambient::mul(a, b), g.multiply(a, b));
            }
        }
    }

    #[test]
    fn s3_defining_relations() {
        let g = FiniteGroup::s3();
        assert_eq!(g.multiply(C, T), g.multiply(T, g.multiply(C, C)));
        assert_eq!(g.multiply(T, T), E);
        assert_eq!(g.product([C, C, C]), E);
        for h in ALL {
            assert_eq!(g.multiply(E, h), h);
        }
        assert_eq!(g.multiply(C, T), CT);
        assert_eq!(g.multiply(g.multiply(C, C), T), C2T);
    }

    #[test]
    fn s3_inverses() {
        let g = FiniteGroup::s3();
        assert_eq!(g.inverse(C), C2);
        assert_eq!(g.inverse(T), T);
        // brute force over the table
        let brute = ALL
            .iter()
            .copied()
            .find(|&b| g.multiply(CT, b) == E)
            .unwrap();
        assert_eq!(brute, CT);
        assert_eq!(g.inverse(CT), CT);
    }

    #[test]
    fn s3_classes_and_normalizers() {
        let g = FiniteGroup::s3();
        let classes = g.conjugacy_classes();
        assert_eq!(classes.len(), 3);
        let sizes: Vec<usize> = classes.iter().map(|c| c.members.len()).collect();
        assert_eq!(sizes, vec![1, 3, 2]);
        assert_eq!(classes[1].members, vec![T, CT, C2T]);
        assert_eq!(classes[2].members, vec![C, C2]);
        assert_eq!(classes[0].normalizer.order(), 6);
        assert_eq!(classes[1].normalizer.members, vec![E, T]);
        assert_eq!(classes[2].normalizer.members, vec![E, C, C2]);
        for c in &classes {
            assert_eq!(6 % c.members.len(), 0);
        }
    }

    #[test]
    fn direct_products() {
        let k = FiniteGroup::direct_product(&FiniteGroup::z2(), &FiniteGroup::z2());
        assert_eq!(k.order(), 4);
        assert!(k.is_abelian());
        assert!(k.elements().all(|g| k.multiply(g, g) == k.identity()));
        let amb = ambient::group();
        assert_eq!(amb.order(), 12);
        assert_eq!(amb.identity(), Element(0));
        assert_eq!(amb.element_name(ambient::pair(1, T)), "(x,t)");
    }

    #[test]
    fn ambient_subgroup_listing() {
        let amb = ambient::group();
        let subs = amb.subgroups_up_to_conjugation();
        assert_eq!(subs.len(), 10);
        for label in 1..=10 {
            let k = ambient::table_subgroup(label).unwrap();
            assert!(amb.is_subgroup(&k.members), "K{label} closed");
            let hits = subs.iter().filter(|s| amb.are_conjugate(s, &k)).count();
            assert_eq!(hits, 1, "K{label} appears exactly once up to conjugation");
        }
        let k9 = ambient::table_subgroup(9).unwrap();
        assert_eq!(k9.order(), 6);
        let k9g = amb.subgroup_as_group(&k9).unwrap();
        assert!(!k9g.is_abelian());
    }

    #[test]
    fn irrep_dimensions_and_homomorphism() {
        for grp in [FiniteGroup::z2(), FiniteGroup::z3(), FiniteGroup::s3()] {
            let irreps = irrep_table(&grp).unwrap();
            let total: usize = irreps.iter().map(|r| r.dim * r.dim).sum();
            assert_eq!(total, grp.order());
            for rho in &irreps {
                for a in grp.elements() {
                    for b in grp.elements() {
                        let ab = grp.multiply(a, b);
                        for i in 0..rho.dim {
                            for j in 0..rho.dim {
                                let prod: Complex64 = (0..rho.dim)
                                    .map(|k| rho.entry(a, i, k) * rho.entry(b, k, j))
                                    .sum();
                                assert!((prod - rho.entry(ab, i, j)).norm() < 1e-12);
                            }
                        }
                    }
                }
            }
        }
        let dims: Vec<usize> = irrep_table(&FiniteGroup::s3())
            .unwrap()
            .iter()
            .map(|r| r.dim)
            .collect();
        assert_eq!(dims, vec![1, 1, 2]);
    }

    #[test]
    fn z3_characters() {
        let z3 = FiniteGroup::z3();
        let irreps = irrep_table(&z3).unwrap();
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let c = Element(1);
        let chars: Vec<Complex64> = irreps.iter().map(|r| r.character(c)).collect();
        assert!((chars[0] - 1.0).norm() < 1e-12);
        assert!((chars[1] - omega).norm() < 1e-12);
        assert!((chars[2] - omega.conj()).norm() < 1e-12);
    }

    #[test]
    fn unsupported_irreps() {
        assert!(matches!(
            irrep_table(&ambient::group()),
            Err(QdError::UnsupportedGroup(_))
        ));
    }

    #[test]
    fn qubit_qutrit_bijection() {
        assert_eq!(qubit_qutrit_encode(C2T), (2, 1));
        assert_eq!(qubit_qutrit_encode(E), (0, 0));
        let images: BTreeSet<(u8, u8)> = ALL.iter().map(|&g| qubit_qutrit_encode(g)).collect();
        assert_eq!(images.len(), 6);
        for g in ALL {
            let (r, s) = qubit_qutrit_encode(g);
            assert_eq!(qubit_qutrit_decode(r, s), g);
        }
    }

    #[test]
    fn table_document_lists_rows() {
        let doc = FiniteGroup::s3().table_document();
        assert!(doc.starts_with("group S3\norder 6\nelements e t c ct c² c²t\n"));
        assert!(doc.contains("row t : t e c²t c²"));
        assert_eq!(doc.lines().count(), 9);
    }
}
