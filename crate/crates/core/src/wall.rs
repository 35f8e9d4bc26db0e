//! The gapped domain wall between the ℤ₂ and S₃ regions: wall stabilizers,
//! condensation probes, and moving a hole across the wall.
//!
//! Wall vertices carry the gauge group `K ⊂ ℤ₂ × S₃`; an element `(a, b)` acts
//! with `a` on ℤ₂-side edges and with `b` on S₃-side edges, and with the pair
//! on the wall edges themselves.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::Zero;
use rand::Rng;
use serde::Serialize;

use crate::error::{QdError, Result};
use crate::group::{ambient, s3, Element};
use crate::lattice::{EdgeId, Lattice, LatticeSpec, Rect, Region, VertexId, WallRep};
use crate::operators::{
    expectation, ground_state, measure, probability, project, syndrome_scan, vertex_charge,
    vertex_irrep_labels, vertex_projector, LinearOp, SiteReport,
};
use crate::protocols::{anyon_site, bloch, hole_z};
use crate::ribbon::{anyon_string, charge_string, closed_projector, flux_string, ribbon_op};
use crate::state::SparseState;
use crate::{Complex, Real, C64};

fn wall_check(lat: &Lattice, v: VertexId) -> Result<()> {
    if lat.vertex_region(v) != Region::Wall {
        return Err(QdError::Wall(format!("vertex {v} is not on the wall")));
    }
    Ok(())
}

/// The `(a, b)` pairs of the wall vertex term `(1/|K|) Σ A^a_{v_l} ⊗ A^b_{v_r}`.
pub fn wall_vertex_terms(lat: &Lattice, v: VertexId) -> Result<Vec<(Element, Element)>> {
    wall_check(lat, v)?;
    Ok(lat
        .gauge_group(v)
        .iter()
        .map(|&k| {
            (
                ambient::pair(ambient::z2_part(k), s3::E),
                ambient::s3_part(k),
            )
        })
        .collect())
}

/// Wall vertex projector `A^K_v`.
pub fn wall_vertex_projector<T: Real>(lat: &Lattice, v: VertexId) -> Result<LinearOp<T>> {
    wall_check(lat, v)?;
    Ok(vertex_projector(lat, v))
}

/// Projector `B^K` of a wall edge in the paired representation: keeps the
/// (qubit, six-level spin) pair only if it lies in `K`.
pub fn wall_plaquette_projector<T: Real>(lat: &Lattice, e: EdgeId) -> Result<LinearOp<T>> {
    let w = lat
        .wall
        .as_ref()
        .ok_or_else(|| QdError::Wall("lattice has no wall".into()))?;
    if w.rep != WallRep::Paired {
        return Err(QdError::Wall(
            "wall edge projectors need the paired representation".into(),
        ));
    }
    if lat.edge_region(e) != Region::Wall {
        return Err(QdError::Wall(format!(
            "edge {} is not a wall edge",
            lat.edge_name(e)
        )));
    }
    crate::operators::wall_edge_projector(lat, e)
}

/// Open hybrid patch used by the probes: ℤ₂ columns 0 and 1, the wall on
/// column 2, S₃ columns 3 to 6.
pub fn probe_lattice(subgroup: usize) -> Result<Arc<Lattice>> {
    Ok(Arc::new(
        LatticeSpec::open(6, 3).hybrid(2, subgroup).build()?,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CondensationReport {
    pub incident: String,
    pub from: Region,
    /// Label left behind in the source region.
    pub source: String,
    /// Label distribution at the far end, across the wall.
    pub emerged: Vec<(String, f64)>,
    /// Smallest probability of a trivial wall vertex charge.
    pub wall_clean: f64,
    /// Every site that is not in the vacuum.
    pub syndrome: Vec<SiteReport>,
}

/// Plants a pair straddling the wall: one end in the ℤ₂ region at vertex
/// (1,2), the other in the S₃ region at vertex (4,1). `incident` names the
/// particle on the side `from`; the string is the one whose end in that region
/// creates it.
pub fn condensation_experiment(
    subgroup: usize,
    incident: &str,
    from: Region,
) -> Result<CondensationReport> {
    let lat = probe_lattice(subgroup)?;
    let (za, sc) = (lat.vertex(1, 2), lat.vertex(4, 1));
    let path = lat.polyline(&[za, lat.vertex(1, 1), sc])?;
    let roots = BTreeSet::from([za, sc]);
    let mut s = ground_state::<f64>(lat.clone(), Some(&roots))?;
    let (charge, flux) = match (from, incident) {
        (Region::Z2, "1") | (Region::S3, "A") => (false, false),
        (Region::Z2, "e") | (Region::S3, "B") => (true, false),
        (Region::Z2, "m") | (Region::S3, "D") => (false, true),
        (Region::Z2, "eps") | (Region::S3, "E") => (true, true),
        _ => {
            return Err(QdError::LabelRegion {
                label: incident.into(),
                region: format!("{from} probe"),
            });
        }
    };
    let ribbon = lat.ribbon_between(anyon_site(&lat, za)?.p, &path, anyon_site(&lat, sc)?.p)?;
    if flux {
        flux_string::<f64>(&lat, ribbon, ambient::pair(1, s3::T))?.apply(&mut s)?;
    }
    if charge {
        charge_string::<f64>(&lat, &path)?.apply(&mut s)?;
    }
    s.normalize()?;
    let none = BTreeSet::new();
    let scan = syndrome_scan(&s, &none)?;
    let dist = |v: VertexId| -> Result<Vec<(String, f64)>> {
        let site = anyon_site(&lat, v)?;
        let fam = crate::operators::particle_family::<f64>(&lat, site, &none)?;
        let probs = crate::operators::family_probabilities(&s, &fam, 1e-6)?;
        Ok(probs.into_iter().filter(|(_, p)| *p > 1e-12).collect())
    };
    let (src, dst) = if from == Region::Z2 {
        (za, sc)
    } else {
        (sc, za)
    };
    let source = dist(src)?
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|x| x.0)
        .unwrap_or_default();
    let emerged = dist(dst)?;
    let mut wall_clean: f64 = 1.0;
    let col = lat.wall.as_ref().unwrap().column;
    for y in 0..=2 {
        let v = lat.vertex(col, y);
        wall_clean = wall_clean.min(probability(&s, &wall_vertex_projector(&lat, v)?)?);
    }
    Ok(CondensationReport {
        incident: incident.into(),
        from,
        source,
        emerged,
        wall_clean,
        syndrome: scan,
    })
}

/// Probes of the four ℤ₂ anyons and their S₃ partners, in both directions.
pub fn condensation_table(subgroup: usize) -> Result<Vec<CondensationReport>> {
    let mut out = Vec::new();
    for l in ["1", "e", "m", "eps"] {
        out.push(condensation_experiment(subgroup, l, Region::Z2)?);
    }
    for l in ["A", "B", "D", "E"] {
        out.push(condensation_experiment(subgroup, l, Region::S3)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockedReport {
    /// Largest probability, over every ribbon operator that reaches into the
    /// ℤ₂ region, of leaving the S₃ side in the vacuum.
    pub g_absorbed: f64,
    /// Same quantity for a `D` anyon in the same place, as a control.
    pub d_absorbed: f64,
    pub operators_tried: usize,
    /// Smallest probability of finding `G` inside the S₃ rectangle around the
    /// wall-adjacent anyon after random ℤ₂-side operations.
    pub enclosed_g: f64,
}

/// Shows that a `G` next to the wall cannot be pushed into the ℤ₂ region: no
/// ribbon operator `F^{h,g}` from its site to a ℤ₂ site leaves the S₃ side in
/// the vacuum. Since these operators span the ribbon algebra, neither does any
/// linear combination of them.
pub fn g_blocked<R: Rng>(subgroup: usize, samples: usize, rng: &mut R) -> Result<BlockedReport> {
    let lat = probe_lattice(subgroup)?;
    let (far, near, z2) = (lat.vertex(6, 2), lat.vertex(4, 2), lat.vertex(1, 2));
    let roots = BTreeSet::from([far, near, z2]);
    let pair_path = lat.polyline(&[near, far])?;
    let cross_path = lat.polyline(&[near, z2])?;
    let cross = lat.ribbon_between(
        anyon_site(&lat, near)?.p,
        &cross_path,
        anyon_site(&lat, z2)?.p,
    )?;

    // Vacuum on the S₃ side away from the far anyon: charge at the near
    // vertex and trivial flux on every S₃ plaquette but the far one.
    let far_p = anyon_site(&lat, far)?.p;
    let mut vac = vec![vertex_projector::<f64>(&lat, near)];
    for p in 0..lat.num_plaquettes() {
        if lat.plaquette_region(p) == Region::S3 && p != far_p {
            vac.push(LinearOp::FluxIn {
                p,
                set: Arc::new(vec![Element::IDENTITY]),
            });
        }
    }
    let vac = LinearOp::seq(vac);

    let absorbed = |label: &str| -> Result<(f64, usize)> {
        let mut s = ground_state::<f64>(lat.clone(), Some(&roots))?;
        let r = lat.ribbon_between(
            anyon_site(&lat, near)?.p,
            &pair_path,
            anyon_site(&lat, far)?.p,
        )?;
        if label == "D" {
            flux_string::<f64>(&lat, r, s3::T)?.apply(&mut s)?;
        } else {
            anyon_string::<f64>(&lat, r, label)?.apply(&mut s)?;
        }
        s.normalize()?;
        let mut best: f64 = 0.0;
        let mut tried = 0;
        for h in 0..12u8 {
            for g in 0..12u8 {
                let Ok(op) = ribbon_op::<f64>(&lat, cross.clone(), Element(h), Element(g)) else {
                    continue;
                };
                let moved = op.applied(&s)?;
                if moved.norm_sqr() < 1e-20 {
                    continue;
                }
                tried += 1;
                best = best.max(probability(&moved, &vac)?);
            }
        }
        Ok((best, tried))
    };
    let (g_absorbed, operators_tried) = absorbed("G")?;
    let (d_absorbed, _) = absorbed("D")?;

    let enclosed_g = {
        let mut s = ground_state::<f64>(lat.clone(), Some(&roots))?;
        let r = lat.ribbon_between(
            anyon_site(&lat, near)?.p,
            &pair_path,
            anyon_site(&lat, far)?.p,
        )?;
        anyon_string::<f64>(&lat, r, "G")?.apply(&mut s)?;
        s.normalize()?;
        let kg = closed_projector::<f64>(&lat, lat.closed_ribbon(Rect::new(3, 1, 4, 2))?, "G")?;
        let z2_edges: Vec<EdgeId> = (0..lat.num_edges())
            .filter(|&e| lat.edge_region(e) == Region::Z2)
            .collect();
        let mut worst: f64 = probability(&s, &kg)?;
        for _ in 0..samples {
            let mut t = s.clone();
            let e = z2_edges[rng.gen_range(0..z2_edges.len())];
            let op = if rng.gen_bool(0.5) {
                LinearOp::Left {
                    slot: e,
                    g: ambient::X,
                }
            } else {
                LinearOp::diagonal(e, |x| {
                    Complex::new(if ambient::z2_part(x) == 1 { -1.0 } else { 1.0 }, 0.0)
                })
            };
            // Only operators anchored at roots are admissible in the frame.
            let ends = [lat.edge(e).tail, lat.edge(e).head];
            t.add_roots(&ends)?;
            op.apply(&mut t)?;
            worst = worst.min(probability(&t, &kg)?);
        }
        worst
    };
    Ok(BlockedReport {
        g_absorbed,
        d_absorbed,
        operators_tried,
        enclosed_g,
    })
}

/// Vertices involved in moving a single-vertex hole across the wall.
#[derive(Debug, Clone)]
pub struct CrossingLayout {
    pub lattice: Arc<Lattice>,
    /// The hole that stays in the S₃ region.
    pub far: VertexId,
    /// S₃ vertex next to the wall.
    pub near: VertexId,
    pub wall: VertexId,
    /// ℤ₂ vertex next to the wall.
    pub z2: VertexId,
}

impl CrossingLayout {
    pub fn new(subgroup: usize) -> Result<Self> {
        let lat = Arc::new(LatticeSpec::open(5, 2).hybrid(2, subgroup).build()?);
        Ok(Self {
            far: lat.vertex(5, 1),
            near: lat.vertex(3, 1),
            wall: lat.vertex(2, 1),
            z2: lat.vertex(1, 1),
            lattice: lat,
        })
    }

    fn edge(&self, a: VertexId, b: VertexId) -> EdgeId {
        self.lattice
            .edge_at(a, self.lattice.direction_to(a, b).unwrap())
            .unwrap()
    }

    /// Logical `X`: sign string between the two holes, wherever the moving
    /// hole currently is.
    pub fn logical_x<T: Real>(&self, moving: VertexId) -> Result<LinearOp<T>> {
        let mut path = self.lattice.polyline(&[self.far, self.near])?;
        if moving == self.wall || moving == self.z2 {
            path.push(self.wall);
        }
        if moving == self.z2 {
            path.push(self.z2);
        }
        charge_string(&self.lattice, &path)
    }

    /// `a|A⟩ + b|B⟩` stored in the charges of holes `far` and `near`.
    pub fn s3_state<T: Real>(&self, a: Complex<T>, b: Complex<T>) -> Result<SparseState<T>> {
        self.state_at(self.near, a, b)
    }

    /// The same logical state with the moving hole at `at`.
    pub fn state_at<T: Real>(
        &self,
        at: VertexId,
        a: Complex<T>,
        b: Complex<T>,
    ) -> Result<SparseState<T>> {
        let roots = BTreeSet::from([self.far, at]);
        let zero = ground_state::<T>(self.lattice.clone(), Some(&roots))?;
        let one = self.logical_x::<T>(at)?.applied(&zero)?;
        let mut s = zero;
        s.scale(a);
        s.add_scaled(b, &one)?;
        s.normalize()?;
        Ok(s)
    }

    pub fn bloch(&self, state: &SparseState<f64>, at: VertexId) -> Result<[f64; 3]> {
        bloch(state, &self.logical_x(at)?, &hole_z(&self.lattice, at)?)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CrossingLog {
    /// `(step, outcome, probability)` for every measurement taken.
    pub outcomes: Vec<(String, String, f64)>,
    /// Contraction attempts that had to be undone.
    pub retries: usize,
}

fn freeze<T: Real>(
    state: &mut SparseState<T>,
    e: EdgeId,
    log: &mut CrossingLog,
    step: &str,
) -> Result<()> {
    // Measuring the edge and undoing the outcome with a gauge move at the new
    // hole vertex is the same as keeping the identity outcome.
    let p = project(
        state,
        &LinearOp::SlotIn {
            slot: e,
            set: Arc::new(vec![Element::IDENTITY]),
        },
    )?;
    log.outcomes
        .push((step.into(), "freeze".into(), p.to_f64().unwrap_or(f64::NAN)));
    Ok(())
}

/// Shrinks a hole by one vertex `v` joined to the rest of the hole by the
/// frozen edge `e`: measure the charge at `v`; a sign charge is pushed back
/// into the hole along `e`; any other outcome is undone by freezing `e` again
/// and the measurement is repeated.
fn contract<T: Real, R: Rng>(
    state: &mut SparseState<T>,
    v: VertexId,
    e: EdgeId,
    log: &mut CrossingLog,
    max_attempts: usize,
    rng: &mut R,
) -> Result<()> {
    let lat = state.lattice().clone();
    let labels = vertex_irrep_labels(&lat, v)?;
    let family: Vec<(String, LinearOp<T>)> = labels
        .iter()
        .enumerate()
        .map(|(k, l)| Ok((l.clone(), vertex_charge(&lat, v, k)?)))
        .collect::<Result<_>>()?;
    let step = format!("contract {v}");
    for _ in 0..max_attempts {
        let (label, p) = measure(state, &family, rng)?;
        log.outcomes
            .push((step.clone(), label.clone(), p.to_f64().unwrap_or(f64::NAN)));
        match label.as_str() {
            "A" => {}
            "B" => {
                let sign = LinearOp::diagonal(e, |x| {
                    Complex::new(T::c(crate::ribbon::charge_sign(x) as f64), T::zero())
                });
                sign.apply(state)?;
            }
            _ => {
                log.retries += 1;
                freeze(state, e, log, &step)?;
                continue;
            }
        }
        let kept = state.remove_roots(&[v])?;
        if (kept.to_f64().unwrap_or(0.0) - 1.0).abs() > 1e-9 {
            return Err(QdError::Protocol {
                stage: step,
                reason: format!("charge left behind: weight {kept}"),
            });
        }
        return Ok(());
    }
    Err(QdError::Protocol {
        stage: step,
        reason: format!("no trivial outcome in {max_attempts} attempts"),
    })
}

/// Moves the hole at `near` across the wall to `z2`.
pub fn cross_to_z2<T: Real, R: Rng>(
    layout: &CrossingLayout,
    state: &mut SparseState<T>,
    rng: &mut R,
) -> Result<CrossingLog> {
    let mut log = CrossingLog::default();
    let (u, vd, w) = (layout.near, layout.wall, layout.z2);
    let (e_s3, e_z2) = (layout.edge(u, vd), layout.edge(vd, w));
    state.add_roots(&[vd])?;
    freeze(state, e_s3, &mut log, "extend over wall")?;
    state.add_roots(&[w])?;
    freeze(state, e_z2, &mut log, "extend into Z2")?;
    contract(state, u, e_s3, &mut log, 64, rng)?;
    contract(state, vd, e_z2, &mut log, 64, rng)?;
    Ok(log)
}

/// The reverse sequence: the hole at `z2` returns to `near`.
pub fn cross_to_s3<T: Real, R: Rng>(
    layout: &CrossingLayout,
    state: &mut SparseState<T>,
    rng: &mut R,
) -> Result<CrossingLog> {
    let mut log = CrossingLog::default();
    let (u, vd, w) = (layout.near, layout.wall, layout.z2);
    let (e_s3, e_z2) = (layout.edge(u, vd), layout.edge(vd, w));
    state.add_roots(&[vd])?;
    freeze(state, e_z2, &mut log, "extend over wall")?;
    state.add_roots(&[u])?;
    freeze(state, e_s3, &mut log, "extend into S3")?;
    contract(state, w, e_z2, &mut log, 64, rng)?;
    contract(state, vd, e_s3, &mut log, 64, rng)?;
    Ok(log)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub input: String,
    pub before: [f64; 3],
    pub after: [f64; 3],
    pub returned: [f64; 3],
    /// Fidelity with the directly prepared ℤ₂ hole state.
    pub fidelity: f64,
    /// Fidelity of the round trip with the input.
    pub round_trip: f64,
    pub forward: CrossingLog,
    pub backward: CrossingLog,
}

/// Crosses `|A⟩`, `|B⟩` and their equal superposition to the ℤ₂ side and back.
pub fn crossing_suite<R: Rng>(subgroup: usize, rng: &mut R) -> Result<Vec<CrossingReport>> {
    let layout = CrossingLayout::new(subgroup)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let inputs = [
        ("A", C64::new(1.0, 0.0), C64::zero()),
        ("B", C64::zero(), C64::new(1.0, 0.0)),
        ("A+B", C64::new(h, 0.0), C64::new(h, 0.0)),
    ];
    let mut out = Vec::new();
    for (name, a, b) in inputs {
        let input = layout.s3_state(a, b)?;
        let before = layout.bloch(&input, layout.near)?;
        let mut s = input.clone();
        let forward = cross_to_z2(&layout, &mut s, rng)?;
        let after = layout.bloch(&s, layout.z2)?;
        let fidelity = s.fidelity(&layout.state_at(layout.z2, a, b)?)?;
        let backward = cross_to_s3(&layout, &mut s, rng)?;
        let returned = layout.bloch(&s, layout.near)?;
        let round_trip = s.fidelity(&input)?;
        out.push(CrossingReport {
            input: name.into(),
            before,
            after,
            returned,
            fidelity,
            round_trip,
            forward,
            backward,
        });
    }
    Ok(out)
}

/// With the hole spread over `near`, the wall vertex and `z2`, operators on one
/// side of the wall vertex see the same expectation for the `|A⟩` and `|B⟩`
/// inputs. Returns the largest difference found over the sampled family.
pub fn delocalization_gap(subgroup: usize) -> Result<f64> {
    let layout = CrossingLayout::new(subgroup)?;
    let lat = layout.lattice.clone();
    let straddle = |a: C64, b: C64| -> Result<SparseState<f64>> {
        let mut s = layout.s3_state(a, b)?;
        let mut log = CrossingLog::default();
        s.add_roots(&[layout.wall])?;
        freeze(&mut s, layout.edge(layout.near, layout.wall), &mut log, "")?;
        s.add_roots(&[layout.z2])?;
        freeze(&mut s, layout.edge(layout.wall, layout.z2), &mut log, "")?;
        Ok(s)
    };
    let sa = straddle(C64::new(1.0, 0.0), C64::zero())?;
    let sb = straddle(C64::zero(), C64::new(1.0, 0.0))?;
    let mut family: Vec<LinearOp<f64>> = Vec::new();
    for v in [layout.near, layout.z2] {
        for k in 0..vertex_irrep_labels(&lat, v)?.len() {
            family.push(vertex_charge(&lat, v, k)?);
        }
    }
    for e in 0..lat.num_edges() {
        let (t, h) = (lat.edge(e).tail, lat.edge(e).head);
        let one_side = ![t, h].contains(&layout.wall)
            && [t, h]
                .iter()
                .all(|&x| sa.is_root(x) || lat.vertex_region(x) != Region::Wall);
        if one_side && [t, h].iter().all(|&x| sa.is_root(x)) {
            family.push(LinearOp::diagonal(e, |x| {
                C64::new(crate::ribbon::charge_sign(x) as f64, 0.0)
            }));
        }
    }
    let mut gap: f64 = 0.0;
    for op in &family {
        let d = expectation(&sa, op)? - expectation(&sb, op)?;
        gap = gap.max(d.norm());
    }
    Ok(gap)
}

/// Ground state of the probe lattice for a given subgroup, with every vertex
/// term checked. Returns the smallest stabilizer expectation.
pub fn hybrid_ground_state_check(subgroup: usize) -> Result<f64> {
    let lat = Arc::new(LatticeSpec::open(3, 1).hybrid(1, subgroup).build()?);
    let s = ground_state::<f64>(lat.clone(), None)?;
    let mut worst: f64 = 1.0;
    for (_, op) in crate::operators::stabilizers::<f64>(&lat, &BTreeSet::new()) {
        worst = worst.min(expectation(&s, &op)?.re);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k9_vertex_term_pairs() {
        let lat = probe_lattice(9).unwrap();
        let v = lat.vertex(2, 1);
        let mut terms = wall_vertex_terms(&lat, v).unwrap();
        terms.sort();
        let x = ambient::X;
        let mut expect = vec![
            (Element::IDENTITY, s3::E),
            (Element::IDENTITY, s3::C),
            (Element::IDENTITY, s3::C2),
            (x, s3::T),
            (x, s3::CT),
            (x, s3::C2T),
        ];
        expect.sort();
        assert_eq!(terms, expect);
        assert!(wall_vertex_projector::<f64>(&lat, lat.vertex(3, 1)).is_err());
    }

    #[test]
    fn paired_wall_edge_projector_keeps_k() {
        let lat = LatticeSpec::open(2, 1)
            .hybrid(1, 9)
            .paired()
            .build()
            .unwrap();
        let e = lat.v_edge(1, 0).unwrap();
        let op = wall_plaquette_projector::<f64>(&lat, e).unwrap();
        let lat = Arc::new(lat);
        let keep = |g: Element| {
            let mut cfg = crate::state::Config::default();
            cfg.set(e, g);
            let s = SparseState::<f64>::basis(lat.clone(), cfg);
            op.applied(&s).unwrap().norm_sqr()
        };
        assert_eq!(keep(ambient::pair(1, s3::T)), 1.0);
        assert_eq!(keep(ambient::X), 0.0);
        let rank = (0..12u8).filter(|&g| keep(Element(g)) > 0.5).count();
        assert_eq!(rank, 6);
        let merged = probe_lattice(9).unwrap();
        assert!(wall_plaquette_projector::<f64>(&merged, merged.v_edge(2, 0).unwrap()).is_err());
    }

    #[test]
    fn hybrid_ground_states_exist() {
        for k in [3, 9, 10] {
            let w = hybrid_ground_state_check(k).unwrap();
            assert!(w > 1.0 - 1e-12, "K{k}: {w}");
        }
    }

    #[test]
    fn condensation_matches_expected_cells() {
        let expect = [
            ("1", "A"),
            ("e", "B"),
            ("m", "D"),
            ("eps", "E"),
            ("A", "1"),
            ("B", "e"),
            ("D", "m"),
            ("E", "eps"),
        ];
        for (r, (inc, out)) in condensation_table(9).unwrap().iter().zip(expect) {
            assert_eq!(r.incident, inc);
            let p = r
                .emerged
                .iter()
                .find(|(l, _)| l == out)
                .map_or(0.0, |x| x.1);
            assert!(p > 1.0 - 1e-9, "{inc}: {:?}", r.emerged);
            assert!(r.wall_clean > 1.0 - 1e-9, "{inc}: wall {}", r.wall_clean);
            assert!(r.emerged.iter().all(|(l, _)| l != "C"));
        }
    }

    #[test]
    fn g_cannot_enter_the_z2_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = g_blocked(9, 20, &mut rng).unwrap();
        println!("{r:?}");
        assert!(r.g_absorbed < 1e-12);
        assert!(r.d_absorbed > 0.1);
        assert!(r.enclosed_g > 1.0 - 1e-9);
    }

    #[test]
    fn hole_crosses_and_returns() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in crossing_suite(9, &mut rng).unwrap() {
            println!(
                "{} {:?} {:?} {:?} {} {}",
                r.input, r.before, r.after, r.returned, r.fidelity, r.round_trip
            );
            assert!(r.fidelity > 1.0 - 1e-9, "{r:?}");
            assert!(r.round_trip > 1.0 - 1e-9, "{r:?}");
        }
    }

    #[test]
    fn straddling_hole_hides_its_charge() {
        let gap = delocalization_gap(9).unwrap();
        assert!(gap < 1e-9, "{gap}");
    }
}
