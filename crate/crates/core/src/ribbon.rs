//! Ribbon operators `F^{h,g}` and the operators built from them: traced anyon
//! string operators, closed-ribbon charge projectors and the logical
//! operators of the fusion qubit.
//!
//! A ribbon acts on one configuration by walking its triangles in order while
//! carrying the current dual label `h`. A dual triangle multiplies the crossed
//! edge by `h` from the side facing the ribbon's vertex. A direct triangle
//! reads its edge as a group element `k` in the direction of travel,
//! accumulates it into the holonomy and conjugates `h` by it. The
//! configuration survives with the coefficient attached to the final holonomy.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;

use crate::error::{QdError, Result};
use crate::group::{ambient, s3, Element};
use crate::lattice::{Lattice, Rect, Ribbon, TriangleKind, VertexId};
use crate::operators::LinearOp;
use crate::state::{kernel, Config};
use crate::{Complex, Real};

/// `Σ_h Σ_g coef_h(g) F^{h,g}` on one ribbon.
#[derive(Debug, Clone)]
pub struct RibbonOp<T: Real> {
    pub ribbon: Ribbon,
    terms: Vec<(Element, [Complex<T>; 12])>,
    anchors: Vec<VertexId>,
}

impl<T: Real> RibbonOp<T> {
    pub fn new(ribbon: Ribbon, terms: Vec<(Element, [Complex<T>; 12])>) -> Self {
        let anchors = if ribbon.is_closed() {
            vec![ribbon.start.v]
        } else {
            vec![ribbon.start.v, ribbon.end.v]
        };
        Self {
            ribbon,
            terms,
            anchors,
        }
    }

    /// Marks the operator as gauge invariant everywhere, which holds for
    /// closed-ribbon class functions.
    pub fn invariant(mut self) -> Self {
        self.anchors.clear();
        self
    }

    pub fn anchors(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.anchors.iter().copied()
    }

    /// Image of one configuration under `F^{h,·}`: the new configuration and the holonomy.
    pub fn walk(lat: &Lattice, ribbon: &Ribbon, cfg: &Config, h: Element) -> (Config, Element) {
        let mut c = *cfg;
        let mut cur = h;
        let mut hol = Element::IDENTITY;
        for t in &ribbon.triangles {
            match t.kind {
                TriangleKind::Dual => {
                    if cur != Element::IDENTITY {
                        if t.aligned {
                            kernel::left(lat, &mut c, t.edge, cur);
                        } else {
                            kernel::right(lat, &mut c, t.edge, ambient::inv(cur));
                        }
                    }
                }
                TriangleKind::Direct => {
                    let x = c.get(t.edge);
                    let k = if t.aligned { ambient::inv(x) } else { x };
                    hol = ambient::mul(hol, k);
                    cur = ambient::mul(ambient::mul(ambient::inv(k), cur), k);
                }
            }
        }
        (c, hol)
    }

    pub fn apply_config(
        &self,
        lat: &Lattice,
        cfg: &Config,
        amp: Complex<T>,
        emit: &mut dyn FnMut(Config, Complex<T>),
    ) {
        for (h, coef) in &self.terms {
            let (c, g) = Self::walk(lat, &self.ribbon, cfg, *h);
            let w = coef[g.index()];
            if !w.is_zero() {
                emit(c, amp * w);
            }
        }
    }
}

fn ribbon_edges_valid(lat: &Lattice, ribbon: &Ribbon, h: Element) -> Result<()> {
    for t in &ribbon.triangles {
        if t.kind == TriangleKind::Dual {
            let e = t.edge;
            let hp = lat.project(lat.edge_region(e), h);
            // The dual label is conjugated along the way, so check the class.
            for k in 0..12u8 {
                let g = ambient::conj(Element(k), hp);
                let proj = lat.project(lat.edge_region(e), g);
                if !lat
                    .allowed_values(e)
                    .iter()
                    .all(|&x| lat.allowed_values(e).contains(&ambient::mul(proj, x)))
                {
                    return Err(QdError::RibbonGeometry(format!(
                        "dual label {} leaves the value space of edge {}",
                        h.0,
                        lat.edge_name(e)
                    )));
                }
            }
        }
    }
    Ok(())
}

fn delta<T: Real>(g: Element) -> [Complex<T>; 12] {
    let mut c = [Complex::zero(); 12];
    c[g.index()] = Complex::new(T::one(), T::zero());
    c
}

/// Elementary ribbon operator `F^{h,g}`.
pub fn ribbon_op<T: Real>(
    lat: &Lattice,
    ribbon: Ribbon,
    h: Element,
    g: Element,
) -> Result<LinearOp<T>> {
    ribbon_edges_valid(lat, &ribbon, h)?;
    Ok(LinearOp::Ribbon(Arc::new(RibbonOp::new(
        ribbon,
        vec![(h, delta(g))],
    ))))
}

/// `Σ_g F^{h,g}`: transports flux `h` without constraining the holonomy.
pub fn flux_string<T: Real>(lat: &Lattice, ribbon: Ribbon, h: Element) -> Result<LinearOp<T>> {
    ribbon_edges_valid(lat, &ribbon, h)?;
    let one = [Complex::new(T::one(), T::zero()); 12];
    Ok(LinearOp::Ribbon(Arc::new(RibbonOp::new(
        ribbon,
        vec![(h, one)],
    ))))
}

/// Sign character of ℤ₂ × S₃: `(-1)^a sgn(b)`.
pub fn charge_sign(g: Element) -> i8 {
    let z = if ambient::z2_part(g) == 1 { -1 } else { 1 };
    z * s3::sign(ambient::s3_part(g))
}

/// String of sign operators along a vertex path. In the S₃ region this moves a
/// `B` charge, in the ℤ₂ region an `e` charge.
pub fn charge_string<T: Real>(lat: &Lattice, path: &[VertexId]) -> Result<LinearOp<T>> {
    let mut ops = Vec::new();
    let mut used = BTreeSet::new();
    for w in path.windows(2) {
        let d = lat.direction_to(w[0], w[1]).ok_or_else(|| {
            QdError::RibbonPath(format!("vertices {} and {} are not adjacent", w[0], w[1]))
        })?;
        let e = lat.edge_at(w[0], d).unwrap();
        if !used.insert(e) {
            return Err(QdError::RibbonGeometry(format!(
                "edge {} used twice",
                lat.edge_name(e)
            )));
        }
        ops.push(LinearOp::diagonal(e, |x| {
            Complex::new(T::c(charge_sign(x) as f64), T::zero())
        }));
    }
    let anchors = match (path.first(), path.last()) {
        (Some(&a), Some(&b)) if a != b => vec![a, b],
        _ => vec![],
    };
    Ok(LinearOp::Sequence(ops).anchored(anchors))
}

/// Phase convention of the `G` label: `G` pairs `ω^k` with the gauge element
/// `u^k` for flux `u`, `H` the conjugate phases.
const G_TWIST: i32 = 1;

fn omega_pow<T: Real>(k: i32) -> Complex<T> {
    let t = 2.0 * std::f64::consts::PI * k.rem_euclid(3) as f64 / 3.0;
    Complex::new(T::c(t.cos()), T::c(t.sin()))
}

/// Power `k` with `n = u^k` for `n` in the cyclic group generated by `u`.
fn log_base(u: Element, n: Element) -> Option<i32> {
    let mut p = Element::IDENTITY;
    for k in 0..6 {
        if p == n {
            return Some(k);
        }
        p = ambient::mul(p, u);
    }
    None
}

/// Coefficient of `B^u A^n` in the projector of an S₃ anyon label, or `None`
/// if the pair `(u, n)` does not contribute.
pub fn s3_label_coefficient<T: Real>(label: &str, u: Element, n: Element) -> Option<Complex<T>> {
    let c = |x: f64| Some(Complex::new(T::c(x), T::zero()));
    let flux_class = match u {
        s3::E => 0,
        s3::T | s3::CT | s3::C2T => 1,
        _ => 2,
    };
    let sgn = s3::sign(n) as f64;
    match (label, flux_class) {
        ("A", 0) => c(1.0 / 6.0),
        ("B", 0) => c(sgn / 6.0),
        ("C", 0) => match n {
            s3::E => c(2.0 / 3.0),
            s3::C | s3::C2 => c(-1.0 / 3.0),
            _ => None,
        },
        ("D", 1) | ("E", 1) => {
            let k = log_base(u, n)?;
            let s = if label == "E" && k == 1 { -0.5 } else { 0.5 };
            c(s)
        }
        ("F", 2) | ("G", 2) | ("H", 2) => {
            let k = log_base(u, n)?;
            let q = match label {
                "F" => 0,
                "G" => G_TWIST,
                _ => -G_TWIST,
            };
            Some(omega_pow::<T>(k * q) * T::c(1.0 / 3.0))
        }
        _ => None,
    }
}

/// Traced string operator creating a pair of `label` anyons at the ends of an
/// open S₃ ribbon from the vacuum. Supported labels: `B` (via the sign
/// string), `C`, `D`, `E`, `F`, `G`, `H`.
pub fn anyon_string<T: Real>(lat: &Lattice, ribbon: Ribbon, label: &str) -> Result<LinearOp<T>> {
    if ribbon.is_closed() {
        return Err(QdError::RibbonGeometry(
            "anyon strings need an open ribbon".into(),
        ));
    }
    let mut terms = Vec::new();
    for u in s3::ALL {
        let mut coef = [Complex::zero(); 12];
        let mut any = false;
        for n in s3::ALL {
            if let Some(w) = s3_label_coefficient::<T>(label, u, n) {
                // The holonomy measured along the ribbon is the inverse of the
                // charge label carried to the far end.
                coef[ambient::inv(n).index()] = w;
                any = true;
            }
        }
        if any && !(u == s3::E && label != "B" && label != "C") {
            terms.push((u, coef));
        }
    }
    if label == "B" {
        let mut coef = [Complex::zero(); 12];
        for g in 0..12u8 {
            coef[g as usize] = Complex::new(T::c(charge_sign(Element(g)) as f64), T::zero());
        }
        terms = vec![(Element::IDENTITY, coef)];
    }
    if label == "C" {
        terms.retain(|(u, _)| *u == s3::E);
    }
    if terms.is_empty() {
        return Err(QdError::LabelRegion {
            label: label.into(),
            region: "S3 ribbon".into(),
        });
    }
    for (u, _) in &terms {
        ribbon_edges_valid(lat, &ribbon, *u)?;
    }
    Ok(LinearOp::Ribbon(Arc::new(RibbonOp::new(ribbon, terms))))
}

/// Closed-ribbon projector onto total charge `label` inside the ribbon.
pub fn closed_projector<T: Real>(
    lat: &Lattice,
    ribbon: Ribbon,
    label: &str,
) -> Result<LinearOp<T>> {
    if !ribbon.is_closed() {
        return Err(QdError::OpenRibbon(format!(
            "charge projector {label} needs a closed ribbon"
        )));
    }
    if !crate::operators::S3_LABELS.contains(&label) {
        return Err(QdError::LabelRegion {
            label: label.into(),
            region: "S3 closed ribbon".into(),
        });
    }
    let mut terms = Vec::new();
    for n in s3::ALL {
        let mut coef = [Complex::zero(); 12];
        let mut any = false;
        for u in s3::ALL {
            if let Some(w) = s3_label_coefficient::<T>(label, u, n) {
                coef[u.index()] = w;
                any = true;
            }
        }
        if any {
            terms.push((n, coef));
        }
    }
    let _ = lat;
    Ok(LinearOp::Ribbon(Arc::new(
        RibbonOp::new(ribbon, terms).invariant(),
    )))
}

/// Closed-ribbon charge projector around a vertex rectangle.
pub fn region_projector<T: Real>(lat: &Lattice, rect: Rect, label: &str) -> Result<LinearOp<T>> {
    closed_projector(lat, lat.closed_ribbon(rect)?, label)
}

/// Logical `Z = K^A - K^B` around the region holding a pair of anyons.
pub fn logical_z<T: Real>(lat: &Lattice, rect: Rect) -> Result<LinearOp<T>> {
    let r = lat.closed_ribbon(rect)?;
    let a = closed_projector(lat, r.clone(), "A")?;
    let b = closed_projector(lat, r, "B")?;
    Ok(LinearOp::Sum(vec![
        (Complex::new(T::one(), T::zero()), a),
        (Complex::new(-T::one(), T::zero()), b),
    ]))
}

/// Logical `X`: sign string between the two anyons that straddle the pairs.
pub fn logical_x<T: Real>(lat: &Lattice, path: &[VertexId]) -> Result<LinearOp<T>> {
    charge_string(lat, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use crate::operators::{ground_state, particle_projector, probability, vertex_projector};
    use crate::state::SparseState;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat33() -> Arc<Lattice> {
        Arc::new(LatticeSpec::torus(4, 4).build().unwrap())
    }

    #[test]
    fn single_vertex_closed_ribbon_is_vertex_gauge() {
        let lat = lat33();
        let r = lat.closed_ribbon(Rect::point(1, 1)).unwrap();
        let v = lat.vertex(1, 1);
        let psi = SparseState::<f64>::random(lat.clone(), 20, &mut ChaCha8Rng::seed_from_u64(4));
        for h in s3::ALL {
            let f = flux_string::<f64>(&lat, r.clone(), h).unwrap();
            let a = LinearOp::<f64>::Vertex { v, g: h };
            let mut d = f.applied(&psi).unwrap();
            d.add_scaled(Complex::new(-1.0, 0.0), &a.applied(&psi).unwrap())
                .unwrap();
            assert!(d.norm() < 1e-12);
        }
        let ka = closed_projector::<f64>(&lat, r, "A").unwrap();
        let pa = vertex_projector::<f64>(&lat, v);
        let mut d = ka.applied(&psi).unwrap();
        d.add_scaled(Complex::new(-1.0, 0.0), &pa.applied(&psi).unwrap())
            .unwrap();
        assert!(d.norm() < 1e-12);
    }

    fn diff_norm(a: &SparseState<f64>, b: &SparseState<f64>) -> f64 {
        let mut d = a.clone();
        d.add_scaled(Complex::new(-1.0, 0.0), b).unwrap();
        d.norm()
    }

    fn sample_ribbon(lat: &Lattice) -> Ribbon {
        let (p0, p1) = (lat.plaquette(0, 1).unwrap(), lat.plaquette(2, 2).unwrap());
        let path = lat
            .manhattan_path(lat.canonical_site(p0).v, lat.canonical_site(p1).v, false)
            .unwrap();
        lat.ribbon_between(p0, &path, p1).unwrap()
    }

    #[test]
    fn open_ribbon_commutes_with_interior_terms() {
        let lat = lat33();
        let r = sample_ribbon(&lat);
        let psi = SparseState::<f64>::random(lat.clone(), 30, &mut ChaCha8Rng::seed_from_u64(8));
        for (h, g) in [(s3::T, s3::C), (s3::C, s3::E), (s3::CT, s3::C2T)] {
            let f = ribbon_op::<f64>(&lat, r.clone(), h, g).unwrap();
            for v in 0..lat.num_vertices() {
                if v == r.start.v || v == r.end.v {
                    continue;
                }
                for k in [s3::T, s3::C] {
                    let a = LinearOp::<f64>::Vertex { v, g: k };
                    let lhs = a.applied(&f.applied(&psi).unwrap()).unwrap();
                    let rhs = f.applied(&a.applied(&psi).unwrap()).unwrap();
                    assert!(diff_norm(&lhs, &rhs) < 1e-12, "vertex {v}");
                }
            }
            for p in 0..lat.num_plaquettes() {
                if p == r.start.p || p == r.end.p {
                    continue;
                }
                let b = crate::operators::plaquette_projector::<f64>(&lat, p);
                let lhs = b.applied(&f.applied(&psi).unwrap()).unwrap();
                let rhs = f.applied(&b.applied(&psi).unwrap()).unwrap();
                assert!(diff_norm(&lhs, &rhs) < 1e-12, "plaquette {p}");
            }
        }
    }

    #[test]
    fn traced_strings_create_their_label() {
        let lat = lat33();
        let r = sample_ribbon(&lat);
        let roots = BTreeSet::from([r.start.v, r.end.v]);
        let g = ground_state::<f64>(lat.clone(), Some(&roots)).unwrap();
        for label in ["B", "C", "D", "E", "F", "G", "H"] {
            let mut s = anyon_string::<f64>(&lat, r.clone(), label)
                .unwrap()
                .applied(&g)
                .unwrap();
            s.normalize().unwrap();
            for site in [r.start, r.end] {
                let p = particle_projector::<f64>(&lat, site, label, &BTreeSet::new()).unwrap();
                let prob = probability(&s, &p).unwrap();
                assert!((prob - 1.0).abs() < 1e-10, "{label} at {site:?}: {prob}");
            }
        }
    }

    #[test]
    fn closed_projectors_resolve_pair_charges() {
        let lat = Arc::new(LatticeSpec::open(7, 5).build().unwrap());
        let (p0, p1) = (lat.plaquette(1, 2).unwrap(), lat.plaquette(4, 2).unwrap());
        let path = lat
            .manhattan_path(lat.canonical_site(p0).v, lat.canonical_site(p1).v, false)
            .unwrap();
        let r = lat.ribbon_between(p0, &path, p1).unwrap();
        let roots = BTreeSet::from([r.start.v, r.end.v]);
        let vac = ground_state::<f64>(lat.clone(), Some(&roots)).unwrap();
        for label in ["B", "C", "D", "E", "F", "G", "H"] {
            let mut s = anyon_string::<f64>(&lat, r.clone(), label)
                .unwrap()
                .applied(&vac)
                .unwrap();
            s.normalize().unwrap();
            // Around the far end alone: the label itself.
            let end = region_projector::<f64>(&lat, Rect::new(4, 2, 5, 3), label).unwrap();
            assert!(
                (probability(&s, &end).unwrap() - 1.0).abs() < 1e-10,
                "{label} end"
            );
            let start = region_projector::<f64>(&lat, Rect::new(1, 2, 2, 3), label).unwrap();
            assert!(
                (probability(&s, &start).unwrap() - 1.0).abs() < 1e-10,
                "{label} start"
            );
            // Around both ends: the pair came from the vacuum.
            let both = region_projector::<f64>(&lat, Rect::new(1, 1, 5, 4), "A").unwrap();
            assert!(
                (probability(&s, &both).unwrap() - 1.0).abs() < 1e-10,
                "{label} pair"
            );
        }
    }

    #[test]
    fn closed_family_is_complete() {
        let lat = lat33();
        let psi = SparseState::<f64>::random(lat.clone(), 20, &mut ChaCha8Rng::seed_from_u64(12));
        let r = lat.closed_ribbon(Rect::new(1, 1, 2, 2)).unwrap();
        let mut sum = psi.zero_like();
        for label in crate::operators::S3_LABELS {
            let k = closed_projector::<f64>(&lat, r.clone(), label).unwrap();
            sum.add_scaled(Complex::new(1.0, 0.0), &k.applied(&psi).unwrap())
                .unwrap();
        }
        assert!(diff_norm(&sum, &psi) < 1e-12);
    }
}
